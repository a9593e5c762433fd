use super::series::TruncatedSeries;
use crate::error::{dims_mismatch, Result};
use crate::scalar::{Real, C};

/// Tensor field of type `(p, q)` on `C^n` with truncated series entries.
///
/// Slots are stored contravariant first, then covariant; entry
/// `(i_1..i_p, j_1..j_q)` sits at the base-`n` number formed by those indices.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorSeries<T: Real> {
    p: usize,
    q: usize,
    n: usize,
    entries: Vec<TruncatedSeries<T>>,
}

impl<T: Real> TensorSeries<T> {
    pub fn zeros(p: usize, q: usize, n: usize, cap: usize) -> Self {
        Self { p, q, n, entries: vec![TruncatedSeries::zero(n, cap); n.pow((p + q) as u32)] }
    }

    pub fn from_entries(p: usize, q: usize, entries: Vec<TruncatedSeries<T>>) -> Result<Self> {
        let Some(first) = entries.first() else {
            return Err(dims_mismatch("at least one entry", 0));
        };
        let (n, cap) = (first.dimension(), first.cap());
        let expected = n.pow((p + q) as u32);
        if entries.len() != expected {
            return Err(dims_mismatch(expected, entries.len()));
        }
        if entries.iter().any(|e| e.dimension() != n || e.cap() != cap) {
            return Err(dims_mismatch(format!("entries with n={n}, D={cap}"), "mixed entries"));
        }
        Ok(Self { p, q, n, entries })
    }

    /// Contravariant rank.
    pub fn p(&self) -> usize {
        self.p
    }

    /// Covariant rank.
    pub fn q(&self) -> usize {
        self.q
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn cap(&self) -> usize {
        self.entries[0].cap()
    }

    pub fn entries(&self) -> &[TruncatedSeries<T>] {
        &self.entries
    }

    fn offset(&self, slots: &[usize]) -> usize {
        assert_eq!(slots.len(), self.p + self.q, "wrong number of tensor slots");
        slots.iter().fold(0, |acc, &s| {
            assert!(s < self.n, "slot index out of range");
            acc * self.n + s
        })
    }

    pub fn get(&self, slots: &[usize]) -> &TruncatedSeries<T> {
        &self.entries[self.offset(slots)]
    }

    pub fn set(&mut self, slots: &[usize], value: TruncatedSeries<T>) {
        let k = self.offset(slots);
        self.entries[k] = value;
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if (self.p, self.q, self.n) != (other.p, other.q, other.n) {
            return Err(dims_mismatch(
                format!("({}, {}) tensors on C^{}", self.p, self.q, self.n),
                format!("({}, {}) tensors on C^{}", other.p, other.q, other.n),
            ));
        }
        let entries = self.entries.iter().zip(&other.entries).map(|(a, b)| a.try_add(b)).collect::<Result<_>>()?;
        Ok(Self { entries, ..*self })
    }

    pub fn scale(&self, c: C<T>) -> Self {
        Self { entries: self.entries.iter().map(|e| e.scale(c)).collect(), ..*self }
    }

    pub fn max_abs(&self) -> T {
        self.entries.iter().fold(T::zero(), |acc, e| acc.max(e.max_abs()))
    }
}
