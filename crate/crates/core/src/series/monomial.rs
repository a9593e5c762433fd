use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

/// Exponent vector of a monomial `z1^m1 ... zn^mn`.
///
/// Ordered graded-lexicographically: lower total degree first, then the
/// larger exponent of the earliest variable first (`z1^2 < z1*z2 < z2^2`).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct MonomialIndex {
    exponents: Box<[u32]>,
}

impl MonomialIndex {
    pub fn new(exponents: impl Into<Box<[u32]>>) -> Self {
        Self { exponents: exponents.into() }
    }

    pub fn zero(n: usize) -> Self {
        Self::new(vec![0; n])
    }

    /// The monomial `z_{var+1}` (variables are 0-based here).
    pub fn unit(n: usize, var: usize) -> Self {
        let mut e = vec![0; n];
        e[var] = 1;
        Self::new(e)
    }

    #[inline]
    pub fn exponents(&self) -> &[u32] {
        &self.exponents
    }

    #[inline]
    pub fn dimension(&self) -> usize {
        self.exponents.len()
    }

    #[inline]
    pub fn total_degree(&self) -> usize {
        self.exponents.iter().map(|&e| e as usize).sum()
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dimension(), other.dimension());
        Self::new(self.exponents.iter().zip(other.exponents.iter()).map(|(a, b)| a + b).collect::<Vec<_>>())
    }

    pub fn with_added(&self, var: usize, amount: u32) -> Self {
        let mut e = self.exponents.to_vec();
        e[var] += amount;
        Self::new(e)
    }

    /// `self - e_var`, or `None` when the exponent of `var` is zero.
    pub fn lowered(&self, var: usize) -> Option<Self> {
        if self.exponents[var] == 0 {
            return None;
        }
        let mut e = self.exponents.to_vec();
        e[var] -= 1;
        Some(Self::new(e))
    }

    /// Applies a permutation of variables: exponent of variable `i` moves to `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let mut e = vec![0; self.dimension()];
        for (i, &p) in perm.iter().enumerate() {
            e[p] = self.exponents[i];
        }
        Self::new(e)
    }
}

impl Ord for MonomialIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.total_degree().cmp(&other.total_degree()).then_with(|| other.exponents.cmp(&self.exponents))
    }
}

impl PartialOrd for MonomialIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for MonomialIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &self.exponents[..])
    }
}

/// Prints `z1^2*z3`, or `1` for the constant monomial.
impl fmt::Display for MonomialIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, &e) in self.exponents.iter().enumerate() {
            if e == 0 {
                continue;
            }
            if !first {
                write!(f, "*")?;
            }
            first = false;
            if e == 1 {
                write!(f, "z{}", i + 1)?;
            } else {
                write!(f, "z{}^{}", i + 1, e)?;
            }
        }
        if first {
            write!(f, "1")?;
        }
        Ok(())
    }
}

pub(crate) const NONE: u32 = u32::MAX;

/// Dense indexing of all monomials of `n` variables up to degree `cap`,
/// in graded-lex order, with precomputed product and shift tables.
pub(crate) struct Layout {
    pub n: usize,
    pub cap: usize,
    pub monomials: Vec<MonomialIndex>,
    pub degrees: Vec<u32>,
    index: HashMap<MonomialIndex, usize>,
    /// `degree_start[d]` is the position of the first monomial of degree `d`; length `cap + 2`.
    pub degree_start: Vec<usize>,
    prod_offset: Vec<usize>,
    prod_len: Vec<usize>,
    prod_target: Vec<u32>,
    /// `up[i * n + v]` = position of `m_i + e_v`, or `NONE` above the cap.
    pub up: Vec<u32>,
    /// `down[i * n + v]` = position of `m_i - e_v`, or `NONE`.
    pub down: Vec<u32>,
}

fn push_degree(n: usize, d: usize, prefix: &mut Vec<u32>, out: &mut Vec<MonomialIndex>) {
    if prefix.len() + 1 == n {
        prefix.push(d as u32);
        out.push(MonomialIndex::new(prefix.clone()));
        prefix.pop();
        return;
    }
    for e in (0..=d).rev() {
        prefix.push(e as u32);
        push_degree(n, d - e, prefix, out);
        prefix.pop();
    }
}

/// All monomials of exact degree `d` in `n` variables, largest first in lex order.
pub(crate) fn monomials_of_degree(n: usize, d: usize) -> Vec<MonomialIndex> {
    let mut out = Vec::new();
    if n == 0 {
        if d == 0 {
            out.push(MonomialIndex::new(Vec::new()));
        }
        return out;
    }
    push_degree(n, d, &mut Vec::with_capacity(n), &mut out);
    out
}

impl Layout {
    fn build(n: usize, cap: usize) -> Self {
        let mut monomials = Vec::new();
        let mut degree_start = Vec::with_capacity(cap + 2);
        for d in 0..=cap {
            degree_start.push(monomials.len());
            monomials.extend(monomials_of_degree(n, d));
        }
        degree_start.push(monomials.len());
        let degrees: Vec<u32> = monomials.iter().map(|m| m.total_degree() as u32).collect();
        let index: HashMap<MonomialIndex, usize> = monomials.iter().enumerate().map(|(i, m)| (m.clone(), i)).collect();

        let len = monomials.len();
        let mut prod_offset = Vec::with_capacity(len);
        let mut prod_len = Vec::with_capacity(len);
        let mut prod_target = Vec::new();
        for (i, m) in monomials.iter().enumerate() {
            let room = cap - degrees[i] as usize;
            let count = degree_start[room + 1];
            prod_offset.push(prod_target.len());
            prod_len.push(count);
            for other in &monomials[..count] {
                prod_target.push(index[&m.add(other)] as u32);
            }
        }

        let mut up = vec![NONE; len * n];
        let mut down = vec![NONE; len * n];
        for (i, m) in monomials.iter().enumerate() {
            for v in 0..n {
                if let Some(&k) = index.get(&m.with_added(v, 1)) {
                    up[i * n + v] = k as u32;
                }
                if let Some(low) = m.lowered(v) {
                    down[i * n + v] = index[&low] as u32;
                }
            }
        }
        Self { n, cap, monomials, degrees, index, degree_start, prod_offset, prod_len, prod_target, up, down }
    }

    /// Shared layout for `(n, cap)`; built once per process.
    pub fn get(n: usize, cap: usize) -> Arc<Layout> {
        static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<Layout>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
        guard.entry((n, cap)).or_insert_with(|| Arc::new(Layout::build(n, cap))).clone()
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    #[inline]
    pub fn position(&self, m: &MonomialIndex) -> Option<usize> {
        self.index.get(m).copied()
    }

    /// Product targets for left factor `i`: entry `j` is the position of `m_i + m_j`.
    #[inline]
    pub fn product_row(&self, i: usize) -> &[u32] {
        let off = self.prod_offset[i];
        &self.prod_target[off..off + self.prod_len[i]]
    }

    #[inline]
    pub fn degree_range(&self, d: usize) -> std::ops::Range<usize> {
        self.degree_start[d]..self.degree_start[d + 1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graded_lex_order_matches_layout() {
        let layout = Layout::get(3, 4);
        assert_eq!(layout.len(), 35);
        for w in layout.monomials.windows(2) {
            assert!(w[0] < w[1], "{:?} !< {:?}", w[0], w[1]);
        }
        assert_eq!(layout.monomials[1], MonomialIndex::unit(3, 0));
        assert_eq!(layout.monomials[4], MonomialIndex::new(vec![2, 0, 0]));
    }

    #[test]
    fn product_table_is_consistent() {
        let layout = Layout::get(2, 3);
        for i in 0..layout.len() {
            for (j, &k) in layout.product_row(i).iter().enumerate() {
                assert_eq!(layout.monomials[k as usize], layout.monomials[i].add(&layout.monomials[j]));
            }
        }
        // pairs with total degree <= D in n variables = monomials of 2n variables up to degree D
        let total: usize = (0..layout.len()).map(|i| layout.product_row(i).len()).sum();
        assert_eq!(total, 35);
    }

    #[test]
    fn display() {
        assert_eq!(MonomialIndex::new(vec![2, 0, 1]).to_string(), "z1^2*z3");
        assert_eq!(MonomialIndex::zero(2).to_string(), "1");
    }
}
