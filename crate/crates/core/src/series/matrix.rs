use super::germ::TruncatedMapGerm;
use super::series::{compose_many, TruncatedSeries};
use crate::error::{dims_mismatch, Error, Result};
use crate::linalg::Matrix;
use crate::scalar::{cone, czero, Real, C};

/// Matrix whose entries are truncated series sharing `n` and the cap.
#[derive(Clone, Debug, PartialEq)]
pub struct SeriesMatrix<T: Real> {
    rows: usize,
    cols: usize,
    entries: Vec<TruncatedSeries<T>>,
}

impl<T: Real> SeriesMatrix<T> {
    pub fn zeros(rows: usize, cols: usize, n: usize, cap: usize) -> Self {
        Self { rows, cols, entries: vec![TruncatedSeries::zero(n, cap); rows * cols] }
    }

    pub fn identity(r: usize, n: usize, cap: usize) -> Self {
        Self::constant(&Matrix::identity(r), n, cap)
    }

    pub fn constant(m: &Matrix<T>, n: usize, cap: usize) -> Self {
        let entries = (0..m.rows())
            .flat_map(|i| (0..m.cols()).map(move |j| (i, j)))
            .map(|(i, j)| TruncatedSeries::constant(n, cap, m[(i, j)]))
            .collect();
        Self { rows: m.rows(), cols: m.cols(), entries }
    }

    pub fn from_entries(rows: usize, cols: usize, entries: Vec<TruncatedSeries<T>>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(dims_mismatch(rows * cols, entries.len()));
        }
        if let Some(first) = entries.first() {
            let (n, cap) = (first.dimension(), first.cap());
            if entries.iter().any(|e| e.dimension() != n || e.cap() != cap) {
                return Err(dims_mismatch(format!("entries with n={n}, D={cap}"), "mixed entries"));
            }
        }
        Ok(Self { rows, cols, entries })
    }

    /// Jacobian matrix `J[i][j] = d g_i / d z_j` of a germ.
    pub fn jacobian(g: &TruncatedMapGerm<T>) -> Self {
        let n = g.dimension();
        let entries =
            (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| g.component(i).differentiate(j)).collect();
        Self { rows: n, cols: n, entries }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn dimension(&self) -> usize {
        self.entries[0].dimension()
    }

    pub fn cap(&self) -> usize {
        self.entries[0].cap()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> &TruncatedSeries<T> {
        &self.entries[i * self.cols + j]
    }

    #[inline]
    pub fn get_mut(&mut self, i: usize, j: usize) -> &mut TruncatedSeries<T> {
        &mut self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, s: TruncatedSeries<T>) {
        self.entries[i * self.cols + j] = s;
    }

    pub fn entries(&self) -> &[TruncatedSeries<T>] {
        &self.entries
    }

    /// Value at the origin.
    pub fn constant_part(&self) -> Matrix<T> {
        let mut m = Matrix::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m[(i, j)] = self.get(i, j).constant_term();
            }
        }
        m
    }

    pub fn map(&self, f: impl Fn(&TruncatedSeries<T>) -> TruncatedSeries<T>) -> Self {
        Self { rows: self.rows, cols: self.cols, entries: self.entries.iter().map(f).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().zip(&other.entries).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().zip(&other.entries).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn scale(&self, c: C<T>) -> Self {
        self.map(|s| s.scale(c))
    }

    /// Matrix product with truncated series arithmetic.
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "incompatible series matrix product");
        let mut out = Self::zeros(self.rows, other.cols, self.dimension(), self.cap());
        for i in 0..self.rows {
            for j in 0..other.cols {
                let acc = &mut out.entries[i * other.cols + j].coeffs;
                for k in 0..self.cols {
                    let a = self.get(i, k);
                    let b = other.get(k, j);
                    if a.is_zero() || b.is_zero() {
                        continue;
                    }
                    a.mul_acc(b, cone(), acc);
                }
            }
        }
        out.map(|s| s.clone().cleaned())
    }

    /// Left multiplication by a constant matrix.
    pub fn left_mul_constant(&self, m: &Matrix<T>) -> Self {
        assert_eq!(m.cols(), self.rows);
        let mut out = Self::zeros(m.rows(), self.cols, self.dimension(), self.cap());
        for i in 0..m.rows() {
            for k in 0..self.rows {
                let c = m[(i, k)];
                if c == czero() {
                    continue;
                }
                for j in 0..self.cols {
                    out.entries[i * self.cols + j].axpy(c, self.get(k, j));
                }
            }
        }
        out.map(|s| s.clone().cleaned())
    }

    /// Right multiplication by a constant matrix.
    pub fn right_mul_constant(&self, m: &Matrix<T>) -> Self {
        assert_eq!(self.cols, m.rows());
        let mut out = Self::zeros(self.rows, m.cols(), self.dimension(), self.cap());
        for i in 0..self.rows {
            for k in 0..self.cols {
                for j in 0..m.cols() {
                    let c = m[(k, j)];
                    if c != czero() {
                        out.entries[i * m.cols() + j].axpy(c, self.get(i, k));
                    }
                }
            }
        }
        out.map(|s| s.clone().cleaned())
    }

    /// Inverse in the jet ring; requires an invertible value at the origin.
    pub fn inverse(&self) -> Result<Self> {
        let c0 = self.constant_part();
        let c0_inv = c0.inverse().map_err(|_| Error::SingularCocycle)?;
        let det = c0.determinant()?;
        if det.norm() <= T::singular_threshold() {
            return Err(Error::SingularCocycle);
        }
        // M = C0 (I + N), N = C0^{-1} M - I without constant part
        let n_mat = self.left_mul_constant(&c0_inv).sub(&Self::identity(self.rows, self.dimension(), self.cap()));
        let neg_n = n_mat.scale(-cone::<T>());
        let mut term = Self::identity(self.rows, self.dimension(), self.cap());
        let mut sum = term.clone();
        for _ in 0..self.cap() {
            term = term.mul(&neg_n);
            if term.entries.iter().all(TruncatedSeries::is_zero) {
                break;
            }
            sum = sum.add(&term);
        }
        Ok(sum.right_mul_constant(&c0_inv))
    }

    /// Entrywise partial derivative.
    pub fn differentiate(&self, var: usize) -> Self {
        self.map(|s| s.differentiate(var))
    }

    /// Entrywise substitution `z -> g(z)`.
    pub fn compose(&self, g: &TruncatedMapGerm<T>) -> Self {
        Self { rows: self.rows, cols: self.cols, entries: compose_many(&self.entries, g.components()) }
    }

    pub fn max_abs(&self) -> T {
        self.entries.iter().fold(T::zero(), |acc, s| acc.max(s.max_abs()))
    }

    pub fn with_cap(&self, cap: usize) -> Self {
        self.map(|s| s.with_cap(cap))
    }

    pub fn truncated(&self, d: usize) -> Self {
        self.map(|s| s.truncated(d))
    }

    pub fn graded_component(&self, d: usize) -> Self {
        self.map(|s| s.graded_component(d))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::parse_series;

    #[test]
    fn inverse_round_trip() {
        let p = |s: &str| parse_series::<f64>(s, 2, 5).unwrap();
        let m = SeriesMatrix::from_entries(2, 2, vec![p("0.5 + z1"), p("2*z2"), p("z1*z2"), p("1/3 - z2^2")]).unwrap();
        let inv = m.inverse().unwrap();
        let prod = m.mul(&inv);
        let id = SeriesMatrix::identity(2, 2, 5);
        assert!(prod.sub(&id).max_abs() < 1e-13);
    }

    #[test]
    fn singular_constant_part() {
        let p = |s: &str| parse_series::<f64>(s, 2, 3).unwrap();
        let m = SeriesMatrix::from_entries(2, 2, vec![p("1"), p("1 + z1"), p("1"), p("1")]).unwrap();
        assert!(matches!(m.inverse(), Err(Error::SingularCocycle)));
    }
}
