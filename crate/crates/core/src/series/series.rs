use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use super::germ::TruncatedMapGerm;
use super::monomial::{Layout, MonomialIndex, NONE};
use crate::error::{dims_mismatch, Error, Result};
use crate::scalar::{cone, creal, czero, is_zero, Real, C};

/// Complex power series in `n` variables, truncated at total degree `cap`.
///
/// Every operation is interpreted in the jet ring of order `cap`: terms
/// above the cap are discarded silently. After each operation, coefficients
/// below `1e-14` times the largest coefficient modulus are dropped.
#[derive(Clone)]
pub struct TruncatedSeries<T: Real> {
    pub(crate) layout: Arc<Layout>,
    pub(crate) coeffs: Vec<C<T>>,
}

impl<T: Real> PartialEq for TruncatedSeries<T> {
    fn eq(&self, other: &Self) -> bool {
        self.dimension() == other.dimension() && self.cap() == other.cap() && self.coeffs == other.coeffs
    }
}

impl<T: Real> fmt::Debug for TruncatedSeries<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TruncatedSeries(n={}, D={}: {})", self.dimension(), self.cap(), self)
    }
}

impl<T: Real> TruncatedSeries<T> {
    pub fn zero(n: usize, cap: usize) -> Self {
        let layout = Layout::get(n, cap);
        let coeffs = vec![czero(); layout.len()];
        Self { layout, coeffs }
    }

    pub(crate) fn zero_like(&self) -> Self {
        Self { layout: self.layout.clone(), coeffs: vec![czero(); self.coeffs.len()] }
    }

    pub fn constant(n: usize, cap: usize, c: C<T>) -> Self {
        let mut s = Self::zero(n, cap);
        s.coeffs[0] = c;
        s
    }

    pub fn one(n: usize, cap: usize) -> Self {
        Self::constant(n, cap, cone())
    }

    /// The coordinate function `z_{var+1}` (0-based `var`).
    pub fn variable(n: usize, cap: usize, var: usize) -> Self {
        assert!(var < n, "variable index out of range");
        let mut s = Self::zero(n, cap);
        if cap >= 1 {
            s.coeffs[1 + var] = cone();
        }
        s
    }

    /// `c * z^m`, or zero when `|m|` exceeds the cap.
    pub fn monomial(n: usize, cap: usize, m: &MonomialIndex, c: C<T>) -> Result<Self> {
        let mut s = Self::zero(n, cap);
        if m.dimension() != n {
            return Err(dims_mismatch(n, m.dimension()));
        }
        if let Some(p) = s.layout.position(m) {
            s.coeffs[p] = c;
        }
        Ok(s)
    }

    /// Builds a series from `(monomial, coefficient)` pairs; repeated
    /// monomials accumulate and terms above the cap are dropped.
    pub fn from_terms<I>(n: usize, cap: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (MonomialIndex, C<T>)>,
    {
        let mut s = Self::zero(n, cap);
        for (m, c) in terms {
            if m.dimension() != n {
                return Err(dims_mismatch(n, m.dimension()));
            }
            if let Some(p) = s.layout.position(&m) {
                s.coeffs[p] += c;
            }
        }
        Ok(s.cleaned())
    }

    #[inline]
    pub fn dimension(&self) -> usize {
        self.layout.n
    }

    #[inline]
    pub fn cap(&self) -> usize {
        self.layout.cap
    }

    pub fn coeff(&self, m: &MonomialIndex) -> C<T> {
        self.layout.position(m).map_or_else(czero, |p| self.coeffs[p])
    }

    pub fn set_coeff(&mut self, m: &MonomialIndex, c: C<T>) {
        if let Some(p) = self.layout.position(m) {
            self.coeffs[p] = c;
        }
    }

    pub fn constant_term(&self) -> C<T> {
        self.coeffs[0]
    }

    /// Nonzero terms in graded-lex order.
    pub fn terms(&self) -> impl Iterator<Item = (&MonomialIndex, C<T>)> + '_ {
        self.layout.monomials.iter().zip(self.coeffs.iter()).filter(|(_, c)| !is_zero(c)).map(|(m, c)| (m, *c))
    }

    pub fn nnz(&self) -> usize {
        self.coeffs.iter().filter(|c| !is_zero(c)).count()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(is_zero)
    }

    /// Degree of the lowest nonzero term.
    pub fn order(&self) -> Option<usize> {
        self.coeffs.iter().position(|c| !is_zero(c)).map(|p| self.layout.degrees[p] as usize)
    }

    /// Degree of the highest nonzero term.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.iter().rposition(|c| !is_zero(c)).map(|p| self.layout.degrees[p] as usize)
    }

    pub fn max_abs(&self) -> T {
        self.coeffs.iter().fold(T::zero(), |acc, c| acc.max(c.norm()))
    }

    /// Largest coefficient modulus among terms of degree `>= d`.
    pub fn max_abs_from_degree(&self, d: usize) -> T {
        if d > self.cap() {
            return T::zero();
        }
        self.coeffs[self.layout.degree_start[d]..].iter().fold(T::zero(), |acc, c| acc.max(c.norm()))
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.dimension() != other.dimension() || self.cap() != other.cap() {
            return Err(dims_mismatch(
                format!("n={}, D={}", self.dimension(), self.cap()),
                format!("n={}, D={}", other.dimension(), other.cap()),
            ));
        }
        Ok(())
    }

    /// Applies the spurious fill-in rule.
    pub(crate) fn cleaned(mut self) -> Self {
        self.clean();
        self
    }

    /// Drops coefficients below `1e-14` times the largest coefficient of the
    /// same degree. Comparing within a degree keeps low-order terms of
    /// series whose high-order coefficients are astronomically large.
    pub(crate) fn clean(&mut self) {
        let thr_scale = T::drop_threshold();
        for d in 0..=self.cap() {
            let range = self.layout.degree_range(d);
            let block = &mut self.coeffs[range];
            let max = block.iter().fold(T::zero(), |acc, c| acc.max(c.norm()));
            if max == T::zero() {
                continue;
            }
            let thr = max * thr_scale;
            for c in block.iter_mut() {
                if c.norm() < thr {
                    *c = czero();
                }
            }
        }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| *a + *b).collect();
        Ok(Self { layout: self.layout.clone(), coeffs }.cleaned())
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| *a - *b).collect();
        Ok(Self { layout: self.layout.clone(), coeffs }.cleaned())
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(self.mul_raw(other).cleaned())
    }

    /// Truncated product without the drop rule.
    pub(crate) fn mul_raw(&self, other: &Self) -> Self {
        let mut out = self.zero_like();
        self.mul_acc(other, cone(), &mut out.coeffs);
        out
    }

    /// `acc += scale * self * other`, truncated.
    pub(crate) fn mul_acc(&self, other: &Self, scale: C<T>, acc: &mut [C<T>]) {
        let layout = &self.layout;
        let b = &other.coeffs;
        let b_first = match b.iter().position(|c| !is_zero(c)) {
            Some(p) => p,
            None => return,
        };
        for (i, a) in self.coeffs.iter().enumerate() {
            if is_zero(a) {
                continue;
            }
            let row = layout.product_row(i);
            if b_first >= row.len() {
                // rows only shrink with increasing degree
                break;
            }
            let a = *a * scale;
            for (j, &k) in row.iter().enumerate().skip(b_first) {
                let bj = b[j];
                if !is_zero(&bj) {
                    acc[k as usize] += a * bj;
                }
            }
        }
    }

    pub fn scale(&self, c: C<T>) -> Self {
        Self { layout: self.layout.clone(), coeffs: self.coeffs.iter().map(|a| *a * c).collect() }.cleaned()
    }

    pub fn scale_real(&self, x: T) -> Self {
        self.scale(creal(x))
    }

    pub(crate) fn axpy(&mut self, c: C<T>, other: &Self) {
        debug_assert_eq!(self.coeffs.len(), other.coeffs.len());
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += c * *b;
        }
    }

    /// Multiplicative inverse; requires a nonzero constant term.
    pub fn reciprocal(&self) -> Result<Self> {
        let c0 = self.constant_term();
        if c0.norm() == T::zero() {
            return Err(Error::InvalidArgument("series without constant term has no reciprocal".into()));
        }
        // 1/(c0 (1 + u)) = c0^{-1} sum (-u)^k, u without constant term
        let inv0 = cone::<T>() / c0;
        let mut u = self.scale(inv0);
        u.coeffs[0] = czero();
        let neg_u = u.scale(-cone::<T>());
        let mut term = Self::one(self.dimension(), self.cap());
        let mut sum = term.clone();
        for _ in 0..self.cap() {
            term = term.mul_raw(&neg_u);
            if term.is_zero() {
                break;
            }
            sum.axpy(cone(), &term);
        }
        Ok(sum.scale(inv0))
    }

    pub fn powi(&self, k: u32) -> Self {
        let mut result = Self::one(self.dimension(), self.cap());
        let mut base = self.clone();
        let mut e = k;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul_raw(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul_raw(&base);
            }
        }
        result.cleaned()
    }

    /// Formal partial derivative with respect to `z_{var+1}` (0-based `var`).
    /// The result has meaningful terms up to degree `cap - 1`.
    pub fn differentiate(&self, var: usize) -> Self {
        assert!(var < self.dimension(), "variable index out of range");
        let n = self.dimension();
        let layout = &self.layout;
        let mut out = self.zero_like();
        for (i, c) in self.coeffs.iter().enumerate() {
            if is_zero(c) {
                continue;
            }
            let target = layout.down[i * n + var];
            if target == NONE {
                continue;
            }
            let e = layout.monomials[i].exponents()[var];
            out.coeffs[target as usize] = *c * creal(T::from_u32(e).unwrap());
        }
        out.cleaned()
    }

    /// Homogeneous component of degree `d`.
    pub fn graded_component(&self, d: usize) -> Self {
        let mut out = self.zero_like();
        if d <= self.cap() {
            let r = self.layout.degree_range(d);
            out.coeffs[r.clone()].copy_from_slice(&self.coeffs[r]);
        }
        out
    }

    /// Keeps only degrees `<= d` (same cap).
    pub fn truncated(&self, d: usize) -> Self {
        let mut out = self.clone();
        if d < self.cap() {
            let start = self.layout.degree_start[d + 1];
            out.coeffs[start..].iter_mut().for_each(|c| *c = czero());
        }
        out
    }

    /// Same series re-expressed with cap `cap` (truncating when lowering).
    pub fn with_cap(&self, cap: usize) -> Self {
        if cap == self.cap() {
            return self.clone();
        }
        let mut out = Self::zero(self.dimension(), cap);
        let keep = out.coeffs.len().min(self.coeffs.len());
        out.coeffs[..keep].copy_from_slice(&self.coeffs[..keep]);
        out
    }

    /// Multiplies by `z_{var+1}`, truncating.
    pub fn shift_up(&self, var: usize) -> Self {
        let n = self.dimension();
        let mut out = self.zero_like();
        for (i, c) in self.coeffs.iter().enumerate() {
            let t = self.layout.up[i * n + var];
            if t != NONE && !is_zero(c) {
                out.coeffs[t as usize] = *c;
            }
        }
        out
    }

    /// Evaluates the polynomial at a point.
    pub fn evaluate(&self, point: &[C<T>]) -> C<T> {
        assert_eq!(point.len(), self.dimension());
        self.terms().fold(czero(), |acc, (m, c)| {
            let v = m.exponents().iter().zip(point).fold(cone::<T>(), |p, (&e, z)| p * z.powu(e));
            acc + c * v
        })
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<T> {
        self.check_same(other)?;
        Ok(self.coeffs.iter().zip(&other.coeffs).fold(T::zero(), |acc, (a, b)| acc.max((*a - *b).norm())))
    }

    /// `f ∘ g`, truncated at the cap.
    pub fn compose(&self, g: &TruncatedMapGerm<T>) -> Result<Self> {
        if g.dimension() != self.dimension() || g.cap() != self.cap() {
            return Err(dims_mismatch(
                format!("n={}, D={}", self.dimension(), self.cap()),
                format!("germ n={}, D={}", g.dimension(), g.cap()),
            ));
        }
        Ok(compose_many(std::slice::from_ref(self), g.components()).pop().expect("one result"))
    }
}

/// Composes every series in `fs` with the substitution `z -> gs(z)`.
///
/// All `gs` must have zero constant term. Powers `gs^m` are built once,
/// one truncated product per monomial, walking the graded filtration.
pub(crate) fn compose_many<T: Real>(fs: &[TruncatedSeries<T>], gs: &[TruncatedSeries<T>]) -> Vec<TruncatedSeries<T>> {
    let Some(first) = gs.first() else {
        return fs.to_vec();
    };
    let layout = first.layout.clone();
    let n = layout.n;
    debug_assert_eq!(gs.len(), n);
    let max_deg = fs.iter().filter_map(TruncatedSeries::degree).max().unwrap_or(0);
    let ord = gs.iter().filter_map(TruncatedSeries::order).min().unwrap_or(usize::MAX);

    let mut results: Vec<TruncatedSeries<T>> = fs
        .iter()
        .map(|f| {
            let mut r = f.zero_like();
            r.coeffs[0] = f.coeffs[0];
            r
        })
        .collect();
    if max_deg == 0 || ord == usize::MAX {
        return results.into_iter().map(TruncatedSeries::cleaned).collect();
    }
    let top = layout.degree_start[max_deg + 1];
    let mut powers: Vec<Option<TruncatedSeries<T>>> = vec![None; top];
    for i in 1..top {
        let deg = layout.degrees[i] as usize;
        if deg.saturating_mul(ord) > layout.cap {
            break;
        }
        // lower along the last variable present
        let m = &layout.monomials[i];
        let var = (0..n).rev().find(|&v| m.exponents()[v] > 0).expect("non-constant monomial");
        let prev = layout.down[i * n + var] as usize;
        let p = if prev == 0 {
            gs[var].clone()
        } else {
            match &powers[prev] {
                Some(base) => base.mul_raw(&gs[var]),
                None => continue,
            }
        };
        let needed = fs.iter().any(|f| !is_zero(&f.coeffs[i]));
        let live = !p.is_zero();
        if needed && live {
            for (f, r) in fs.iter().zip(results.iter_mut()) {
                let c = f.coeffs[i];
                if !is_zero(&c) {
                    r.axpy(c, &p);
                }
            }
        }
        if live {
            powers[i] = Some(p);
        }
    }
    results.into_iter().map(TruncatedSeries::cleaned).collect()
}

impl<T: Real> Add for &TruncatedSeries<T> {
    type Output = TruncatedSeries<T>;
    fn add(self, rhs: Self) -> TruncatedSeries<T> {
        self.try_add(rhs).expect("series with matching dimension and cap")
    }
}

impl<T: Real> Sub for &TruncatedSeries<T> {
    type Output = TruncatedSeries<T>;
    fn sub(self, rhs: Self) -> TruncatedSeries<T> {
        self.try_sub(rhs).expect("series with matching dimension and cap")
    }
}

impl<T: Real> Mul for &TruncatedSeries<T> {
    type Output = TruncatedSeries<T>;
    fn mul(self, rhs: Self) -> TruncatedSeries<T> {
        self.try_mul(rhs).expect("series with matching dimension and cap")
    }
}

impl<T: Real> Neg for &TruncatedSeries<T> {
    type Output = TruncatedSeries<T>;
    fn neg(self) -> TruncatedSeries<T> {
        TruncatedSeries { layout: self.layout.clone(), coeffs: self.coeffs.iter().map(|c| -*c).collect() }
    }
}

pub(crate) fn format_coefficient<T: Real>(c: C<T>) -> String {
    if c.im == T::zero() {
        format!("{}", c.re)
    } else if c.re == T::zero() {
        format!("{}i", c.im)
    } else if c.im < T::zero() {
        format!("({}-{}i)", c.re, -c.im)
    } else {
        format!("({}+{}i)", c.re, c.im)
    }
}

/// Canonical form: graded-lex ordered terms joined by ` + `, complex
/// coefficients as `a`, `bi` or `(a+bi)`. Parsing the output reproduces
/// the series exactly.
impl<T: Real> fmt::Display for TruncatedSeries<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (m, c) in self.terms() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            if m.total_degree() == 0 {
                write!(f, "{}", format_coefficient(c))?;
            } else if c == cone() {
                write!(f, "{m}")?;
            } else {
                write!(f, "{}*{m}", format_coefficient(c))?;
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}
