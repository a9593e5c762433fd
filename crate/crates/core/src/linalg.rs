//! Small dense complex matrices: LU solves, Hessenberg reduction and the
//! shifted QR iteration producing a complex Schur form.

use std::fmt;
use std::ops::{Index, IndexMut};

use num_traits::Zero;

use crate::error::{dims_mismatch, Error, Result};
use crate::scalar::{cone, czero, Real, C};

/// Row-major dense matrix with complex entries.
#[derive(Clone, PartialEq)]
pub struct Matrix<T: Real> {
    rows: usize,
    cols: usize,
    data: Vec<C<T>>,
}

impl<T: Real> fmt::Debug for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for c in 0..self.cols {
                let z = self[(r, c)];
                write!(f, "{:>10.4e}{:+.4e}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl<T: Real> Index<(usize, usize)> for Matrix<T> {
    type Output = C<T>;
    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &C<T> {
        &self.data[r * self.cols + c]
    }
}

impl<T: Real> IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C<T> {
        &mut self.data[r * self.cols + c]
    }
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![czero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = cone();
        }
        m
    }

    pub fn from_diagonal(diag: &[C<T>]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, d) in diag.iter().enumerate() {
            m[(i, i)] = *d;
        }
        m
    }

    /// Builds a matrix from rows; all rows must have equal length.
    pub fn from_rows(rows: &[Vec<C<T>>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut m = Self::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != c {
                return Err(dims_mismatch(format!("{c} columns"), format!("{} in row {i}", row.len())));
            }
            for (j, z) in row.iter().enumerate() {
                m[(i, j)] = *z;
            }
        }
        Ok(m)
    }

    /// Convenience constructor from real entries.
    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let conv: Vec<Vec<C<T>>> =
            rows.iter().map(|r| r.iter().map(|&x| C::new(T::lit(x), T::zero())).collect()).collect();
        Self::from_rows(&conv).expect("rectangular input")
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn diagonal(&self) -> Vec<C<T>> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                m[(c, r)] = self[(r, c)].conj();
            }
        }
        m
    }

    pub fn transpose(&self) -> Self {
        let mut m = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                m[(c, r)] = self[(r, c)];
            }
        }
        m
    }

    pub fn scale(&self, s: C<T>) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| *z * s).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| *a - *b).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| *a + *b).collect(),
        }
    }

    /// Matrix product; panics on incompatible shapes.
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "incompatible matrix product");
        let mut m = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    m[(i, j)] += a * other[(k, j)];
                }
            }
        }
        m
    }

    pub fn mul_vec(&self, v: &[C<T>]) -> Vec<C<T>> {
        assert_eq!(self.cols, v.len());
        (0..self.rows).map(|i| (0..self.cols).fold(czero(), |acc, j| acc + self[(i, j)] * v[j])).collect()
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()).sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, z| acc.max(z.norm()))
    }

    /// Largest modulus strictly below the diagonal.
    pub fn max_below_diagonal(&self) -> T {
        let mut m = T::zero();
        for r in 0..self.rows {
            for c in 0..r.min(self.cols) {
                m = m.max(self[(r, c)].norm());
            }
        }
        m
    }

    /// Largest modulus off the diagonal.
    pub fn max_off_diagonal(&self) -> T {
        let mut m = T::zero();
        for r in 0..self.rows {
            for c in 0..self.cols {
                if r != c {
                    m = m.max(self[(r, c)].norm());
                }
            }
        }
        m
    }

    fn lu(&self) -> Result<Lu<T>> {
        if !self.is_square() {
            return Err(dims_mismatch("square matrix", format!("{}x{}", self.rows, self.cols)));
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = T::one();
        let mut singular = false;
        for k in 0..n {
            let (p, best) =
                (k..n).map(|r| (r, a[(r, k)].norm())).fold((k, -T::one()), |acc, x| if x.1 > acc.1 { x } else { acc });
            if best == T::zero() {
                singular = true;
                continue;
            }
            if p != k {
                for c in 0..n {
                    a.data.swap(k * n + c, p * n + c);
                }
                perm.swap(k, p);
                sign = -sign;
            }
            let pivot = a[(k, k)];
            for r in (k + 1)..n {
                let f = a[(r, k)] / pivot;
                a[(r, k)] = f;
                if f.is_zero() {
                    continue;
                }
                for c in (k + 1)..n {
                    let t = a[(k, c)];
                    a[(r, c)] -= f * t;
                }
            }
        }
        Ok(Lu { lu: a, perm, sign, singular })
    }

    pub fn determinant(&self) -> Result<C<T>> {
        let lu = self.lu()?;
        if lu.singular {
            return Ok(czero());
        }
        let mut d = C::new(lu.sign, T::zero());
        for i in 0..self.rows {
            d *= lu.lu[(i, i)];
        }
        Ok(d)
    }

    /// Solves `self * x = b`.
    pub fn solve(&self, b: &[C<T>]) -> Result<Vec<C<T>>> {
        let lu = self.lu()?;
        if lu.singular {
            return Err(Error::SingularLinearPart { determinant: 0.0 });
        }
        Ok(lu.solve(b))
    }

    pub fn inverse(&self) -> Result<Self> {
        let lu = self.lu()?;
        if lu.singular {
            return Err(Error::SingularLinearPart { determinant: 0.0 });
        }
        let n = self.rows;
        let mut inv = Self::zeros(n, n);
        let mut e = vec![czero(); n];
        for j in 0..n {
            e.iter_mut().for_each(|z| *z = czero());
            e[j] = cone();
            let x = lu.solve(&e);
            for i in 0..n {
                inv[(i, j)] = x[i];
            }
        }
        Ok(inv)
    }

    /// Zeroes every entry strictly below the diagonal.
    pub fn upper_triangle(&self) -> Self {
        let mut m = self.clone();
        for r in 0..self.rows {
            for c in 0..r.min(self.cols) {
                m[(r, c)] = czero();
            }
        }
        m
    }
}

struct Lu<T: Real> {
    lu: Matrix<T>,
    perm: Vec<usize>,
    sign: T,
    singular: bool,
}

impl<T: Real> Lu<T> {
    fn solve(&self, b: &[C<T>]) -> Vec<C<T>> {
        let n = self.lu.rows;
        let mut y: Vec<C<T>> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for k in 0..i {
                let t = self.lu[(i, k)] * y[k];
                y[i] -= t;
            }
        }
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                let t = self.lu[(i, k)] * y[k];
                y[i] -= t;
            }
            y[i] /= self.lu[(i, i)];
        }
        y
    }
}

/// Complex Schur decomposition `A = Q T Q*` with `Q` unitary and `T`
/// upper triangular.
#[derive(Clone, Debug)]
pub struct Schur<T: Real> {
    pub q: Matrix<T>,
    pub t: Matrix<T>,
    pub sweeps: usize,
}

/// Householder reduction to upper Hessenberg form, returning `(Q, H)` with
/// `A = Q H Q*`.
pub fn hessenberg<T: Real>(a: &Matrix<T>) -> (Matrix<T>, Matrix<T>) {
    let n = a.rows();
    let mut h = a.clone();
    let mut q = Matrix::identity(n);
    for k in 0..n.saturating_sub(2) {
        let tail_norm = ((k + 2)..n).fold(T::zero(), |acc, r| acc + h[(r, k)].norm_sqr()).sqrt();
        if tail_norm == T::zero() {
            continue;
        }
        let x0 = h[(k + 1, k)];
        let xnorm = (x0.norm_sqr() + tail_norm * tail_norm).sqrt();
        let phase = if x0.norm() == T::zero() { cone() } else { x0 / C::new(x0.norm(), T::zero()) };
        let alpha = -phase * C::new(xnorm, T::zero());
        let mut v: Vec<C<T>> = vec![czero(); n];
        v[k + 1] = x0 - alpha;
        for r in (k + 2)..n {
            v[r] = h[(r, k)];
        }
        let vnorm = v.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()).sqrt();
        if vnorm == T::zero() {
            continue;
        }
        for z in v.iter_mut() {
            *z /= C::new(vnorm, T::zero());
        }
        let two = C::new(T::lit(2.0), T::zero());
        // H <- (I - 2vv*) H
        for c in 0..n {
            let dot = ((k + 1)..n).fold(czero::<T>(), |acc, r| acc + v[r].conj() * h[(r, c)]);
            for r in (k + 1)..n {
                let t = two * v[r] * dot;
                h[(r, c)] -= t;
            }
        }
        // H <- H (I - 2vv*), Q <- Q (I - 2vv*)
        for m in [&mut h, &mut q] {
            for r in 0..n {
                let dot = ((k + 1)..n).fold(czero::<T>(), |acc, c| acc + m[(r, c)] * v[c]);
                for c in (k + 1)..n {
                    let t = two * dot * v[c].conj();
                    m[(r, c)] -= t;
                }
            }
        }
        for r in (k + 2)..n {
            h[(r, k)] = czero();
        }
    }
    (q, h)
}

/// Givens rotation `[c s; -s* c]` (c real) mapping `(a, b)` to `(r, 0)`.
fn givens<T: Real>(a: C<T>, b: C<T>) -> (T, C<T>) {
    let bn = b.norm();
    if bn == T::zero() {
        return (T::one(), czero());
    }
    let an = a.norm();
    if an == T::zero() {
        return (T::zero(), b.conj() / C::new(bn, T::zero()));
    }
    let r = an.hypot(bn);
    let c = an / r;
    let s = (a / C::new(an, T::zero())) * b.conj() / C::new(r, T::zero());
    (c, s)
}

fn wilkinson_shift<T: Real>(a: C<T>, b: C<T>, c: C<T>, d: C<T>) -> C<T> {
    let half = C::new(T::lit(0.5), T::zero());
    let m = (a - d) * half;
    let disc = (m * m + b * c).sqrt();
    let mid = (a + d) * half;
    let e1 = mid + disc;
    let e2 = mid - disc;
    if (e1 - d).norm() <= (e2 - d).norm() {
        e1
    } else {
        e2
    }
}

/// Complex Schur form by Hessenberg reduction followed by the shifted QR
/// iteration with Wilkinson shifts.
///
/// Fails with [`Error::NoConvergence`] after `100 n^2` QR sweeps.
pub fn schur<T: Real>(a: &Matrix<T>) -> Result<Schur<T>> {
    if !a.is_square() {
        return Err(dims_mismatch("square matrix", format!("{}x{}", a.rows(), a.cols())));
    }
    let n = a.rows();
    let (mut q, mut h) = hessenberg(a);
    let cap = 100 * n * n;
    let eps = T::epsilon();
    let norm = a.frobenius_norm().max(T::min_positive_value());
    let mut sweeps = 0usize;
    let mut since_deflation = 0usize;
    let mut hi = n.saturating_sub(1);
    while hi > 0 {
        let mut l = hi;
        while l > 0 {
            let sub = h[(l, l - 1)].norm();
            let mut scale = h[(l - 1, l - 1)].norm() + h[(l, l)].norm();
            if scale == T::zero() {
                scale = norm;
            }
            if sub <= eps * scale {
                h[(l, l - 1)] = czero();
                break;
            }
            l -= 1;
        }
        if l == hi {
            hi -= 1;
            since_deflation = 0;
            continue;
        }
        sweeps += 1;
        since_deflation += 1;
        if sweeps > cap {
            return Err(Error::NoConvergence { sweeps: cap });
        }
        let mu = if since_deflation % 11 == 10 {
            // exceptional shift to break cycles
            h[(hi, hi)] + C::new(h[(hi, hi - 1)].norm() * T::lit(0.75), h[(hi, hi - 1)].norm() * T::lit(0.5))
        } else {
            wilkinson_shift(h[(hi - 1, hi - 1)], h[(hi - 1, hi)], h[(hi, hi - 1)], h[(hi, hi)])
        };
        for k in l..=hi {
            h[(k, k)] -= mu;
        }
        let mut rots = Vec::with_capacity(hi - l);
        for k in l..hi {
            let (c, s) = givens(h[(k, k)], h[(k + 1, k)]);
            let cc = C::new(c, T::zero());
            for col in 0..n {
                let x = h[(k, col)];
                let y = h[(k + 1, col)];
                h[(k, col)] = cc * x + s * y;
                h[(k + 1, col)] = -s.conj() * x + cc * y;
            }
            rots.push((k, cc, s));
        }
        for &(k, cc, s) in &rots {
            for m in [&mut h, &mut q] {
                for row in 0..n {
                    let x = m[(row, k)];
                    let y = m[(row, k + 1)];
                    m[(row, k)] = x * cc + y * s.conj();
                    m[(row, k + 1)] = -x * s + y * cc;
                }
            }
        }
        for k in l..=hi {
            h[(k, k)] += mu;
        }
    }
    for r in 0..n {
        for c in 0..r {
            if r > c + 1 || h[(r, c)].norm() <= eps * norm {
                h[(r, c)] = czero();
            }
        }
    }
    Ok(Schur { q, t: h, sweeps })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C<f64> {
        C::new(re, im)
    }

    fn check_schur(a: &Matrix<f64>) {
        let s = schur(a).unwrap();
        let recon = s.q.mul(&s.t).mul(&s.q.adjoint());
        let scale = a.frobenius_norm().max(1.0);
        assert!(recon.sub(a).frobenius_norm() <= 1e-12 * scale, "{:?}", recon.sub(a));
        let qq = s.q.adjoint().mul(&s.q);
        assert!(qq.sub(&Matrix::identity(a.rows())).frobenius_norm() < 1e-12);
        assert_eq!(s.t.max_below_diagonal(), 0.0);
    }

    #[test]
    fn lu_inverse_and_determinant() {
        let a = Matrix::<f64>::from_rows(&[
            vec![c(2.0, 1.0), c(0.5, 0.0), c(0.0, -1.0)],
            vec![c(1.0, 0.0), c(3.0, 0.0), c(0.25, 0.5)],
            vec![c(0.0, 2.0), c(-1.0, 0.0), c(1.0, 1.0)],
        ])
        .unwrap();
        let inv = a.inverse().unwrap();
        assert!(a.mul(&inv).sub(&Matrix::identity(3)).max_abs() < 1e-14);
        // cofactor expansion
        let m = |r: usize, col: usize| a[(r, col)];
        let det = m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) - m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0))
            + m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
        assert!((a.determinant().unwrap() - det).norm() < 1e-13);
    }

    #[test]
    fn singular_solve_fails() {
        let a = Matrix::<f64>::from_real_rows(&[&[1.0, 2.0], &[2.0, 4.0]]);
        assert!(a.inverse().is_err());
        assert_eq!(a.determinant().unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn schur_of_diagonal_is_trivial() {
        let a = Matrix::<f64>::from_real_rows(&[&[0.5, 0.0], &[0.0, 1.0 / 3.0]]);
        let s = schur(&a).unwrap();
        assert_eq!(s.q, Matrix::identity(2));
        assert_eq!(s.t, a);
    }

    #[test]
    fn schur_reconstructs_general_matrices() {
        check_schur(&Matrix::from_real_rows(&[&[0.0, -1.0], &[1.0, 0.0]]));
        check_schur(&Matrix::from_real_rows(&[&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0], &[7.0, 8.0, 10.0]]));
        // defective Jordan block
        check_schur(&Matrix::from_real_rows(&[&[0.5, 1.0, 0.0], &[0.0, 0.5, 1.0], &[0.0, 0.0, 0.5]]));
        // permutation matrix: eigenvalues are cube roots of unity
        check_schur(&Matrix::from_real_rows(&[&[0.0, 0.0, 1.0], &[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]]));
        let mut big = Matrix::<f64>::zeros(12, 12);
        for r in 0..12 {
            for col in 0..12 {
                big[(r, col)] = c(((r * 7 + col * 3) % 11) as f64 - 5.0, ((r + 2 * col) % 5) as f64 - 2.0);
            }
        }
        check_schur(&big);
    }

    #[test]
    fn schur_in_single_precision() {
        let a = Matrix::<f32>::from_real_rows(&[&[0.5, 1.0], &[0.2, 0.25]]);
        let s = schur(&a).unwrap();
        let recon = s.q.mul(&s.t).mul(&s.q.adjoint());
        assert!(recon.sub(&a).max_abs() < 1e-5);
    }
}
