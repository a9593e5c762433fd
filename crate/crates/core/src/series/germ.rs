use std::fmt;

use super::monomial::MonomialIndex;
use super::series::{compose_many, TruncatedSeries};
use crate::error::{dims_mismatch, Error, Result};
use crate::linalg::Matrix;
use crate::scalar::{czero, Real, C};

/// Germ at the origin of a holomorphic map `C^n -> C^n`, truncated at
/// degree `cap`: zero constant term and invertible linear part.
#[derive(Clone, PartialEq)]
pub struct TruncatedMapGerm<T: Real> {
    components: Vec<TruncatedSeries<T>>,
    linear_part: Matrix<T>,
}

impl<T: Real> fmt::Debug for TruncatedMapGerm<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.components.iter().map(|c| c.to_string())).finish()
    }
}

/// Matrix of degree-one coefficients, `L[i][j] = d f_i / d z_j (0)`.
pub fn linear_part_of<T: Real>(components: &[TruncatedSeries<T>]) -> Matrix<T> {
    let n = components.len();
    let mut a = Matrix::zeros(n, n);
    for (i, f) in components.iter().enumerate() {
        if f.cap() == 0 {
            continue;
        }
        for j in 0..f.dimension().min(n) {
            a[(i, j)] = f.coeffs[1 + j];
        }
    }
    a
}

impl<T: Real> TruncatedMapGerm<T> {
    /// Validates and wraps `n` component series in `n` variables.
    pub fn new(components: Vec<TruncatedSeries<T>>) -> Result<Self> {
        let n = components.len();
        if n == 0 {
            return Err(Error::InvalidArgument("a germ needs at least one component".into()));
        }
        let cap = components[0].cap();
        for (i, f) in components.iter().enumerate() {
            if f.dimension() != n || f.cap() != cap {
                return Err(dims_mismatch(
                    format!("n={n}, D={cap}"),
                    format!("component {} with n={}, D={}", i + 1, f.dimension(), f.cap()),
                ));
            }
            if f.constant_term() != czero() {
                return Err(Error::NonGerm { component: i + 1 });
            }
        }
        let linear_part = linear_part_of(&components);
        let det = linear_part.determinant()?;
        if det.norm() <= T::singular_threshold() {
            return Err(Error::SingularLinearPart { determinant: det.norm().to_f64_lossy() });
        }
        Ok(Self { components, linear_part })
    }

    pub(crate) fn from_parts_unchecked(components: Vec<TruncatedSeries<T>>) -> Self {
        let linear_part = linear_part_of(&components);
        Self { components, linear_part }
    }

    pub fn identity(n: usize, cap: usize) -> Self {
        Self::from_parts_unchecked((0..n).map(|i| TruncatedSeries::variable(n, cap, i)).collect())
    }

    /// The linear map `z -> A z`.
    pub fn linear(a: &Matrix<T>, cap: usize) -> Result<Self> {
        Self::new(linear_components(a, cap))
    }

    #[inline]
    pub fn dimension(&self) -> usize {
        self.components.len()
    }

    #[inline]
    pub fn cap(&self) -> usize {
        self.components[0].cap()
    }

    pub fn components(&self) -> &[TruncatedSeries<T>] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &TruncatedSeries<T> {
        &self.components[i]
    }

    pub fn linear_part(&self) -> &Matrix<T> {
        &self.linear_part
    }

    /// Components with their linear terms removed.
    pub fn nonlinear_part(&self) -> Vec<TruncatedSeries<T>> {
        self.components
            .iter()
            .map(|f| {
                let mut g = f.clone();
                let end = (1 + f.dimension()).min(g.coeffs.len());
                for c in g.coeffs[..end].iter_mut() {
                    *c = czero();
                }
                g
            })
            .collect()
    }

    /// True when every term of degree >= 2 vanishes.
    pub fn is_linear(&self) -> bool {
        self.max_nonlinear_abs() == T::zero()
    }

    /// Largest coefficient modulus of degree >= 2.
    pub fn max_nonlinear_abs(&self) -> T {
        self.components.iter().fold(T::zero(), |acc, f| acc.max(f.max_abs_from_degree(2)))
    }

    pub fn max_abs(&self) -> T {
        self.components.iter().fold(T::zero(), |acc, f| acc.max(f.max_abs()))
    }

    /// Order of the nonlinear part (lowest degree >= 2 with a nonzero term).
    pub fn nonlinear_order(&self) -> Option<usize> {
        self.nonlinear_part().iter().filter_map(TruncatedSeries::order).min()
    }

    /// Largest coefficient difference against another germ.
    pub fn max_abs_diff(&self, other: &Self) -> Result<T> {
        if self.dimension() != other.dimension() {
            return Err(dims_mismatch(self.dimension(), other.dimension()));
        }
        self.components.iter().zip(&other.components).try_fold(T::zero(), |acc, (a, b)| Ok(acc.max(a.max_abs_diff(b)?)))
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &Self) -> Result<Self> {
        compose_germs(self, inner)
    }

    /// Evaluates all components at a point.
    pub fn evaluate(&self, point: &[C<T>]) -> Vec<C<T>> {
        self.components.iter().map(|f| f.evaluate(point)).collect()
    }

    /// Same germ with a different cap.
    pub fn with_cap(&self, cap: usize) -> Self {
        Self::from_parts_unchecked(self.components.iter().map(|f| f.with_cap(cap)).collect())
    }

    /// Monomials appearing in the components, as `(component, monomial)` pairs (0-based components).
    pub fn support(&self) -> Vec<(usize, MonomialIndex)> {
        self.components.iter().enumerate().flat_map(|(i, f)| f.terms().map(move |(m, _)| (i, m.clone()))).collect()
    }
}

pub(crate) fn linear_components<T: Real>(a: &Matrix<T>, cap: usize) -> Vec<TruncatedSeries<T>> {
    let n = a.rows();
    (0..n)
        .map(|i| {
            let mut f = TruncatedSeries::zero(n, cap);
            if cap >= 1 {
                for j in 0..n {
                    f.coeffs[1 + j] = a[(i, j)];
                }
            }
            f
        })
        .collect()
}

/// `g1 ∘ g2`, componentwise; the linear part is the product of linear parts.
pub fn compose_germs<T: Real>(g1: &TruncatedMapGerm<T>, g2: &TruncatedMapGerm<T>) -> Result<TruncatedMapGerm<T>> {
    if g1.dimension() != g2.dimension() || g1.cap() != g2.cap() {
        return Err(dims_mismatch(
            format!("n={}, D={}", g1.dimension(), g1.cap()),
            format!("n={}, D={}", g2.dimension(), g2.cap()),
        ));
    }
    Ok(TruncatedMapGerm::from_parts_unchecked(compose_many(&g1.components, &g2.components)))
}

/// Substitutes `z -> g(z)` in every series of `fs`.
pub fn compose_all<T: Real>(fs: &[TruncatedSeries<T>], g: &TruncatedMapGerm<T>) -> Result<Vec<TruncatedSeries<T>>> {
    for f in fs {
        if f.dimension() != g.dimension() || f.cap() != g.cap() {
            return Err(dims_mismatch(
                format!("n={}, D={}", g.dimension(), g.cap()),
                format!("n={}, D={}", f.dimension(), f.cap()),
            ));
        }
    }
    Ok(compose_many(fs, g.components()))
}

/// Compositional inverse up to the cap.
///
/// With `g = A z + N(z)`, iterates `h <- A^{-1} (z - N(h))`; each pass fixes
/// `ord(N) - 1` further degrees, so the loop count is known in advance.
pub fn invert_germ<T: Real>(g: &TruncatedMapGerm<T>) -> Result<TruncatedMapGerm<T>> {
    let n = g.dimension();
    let cap = g.cap();
    let a_inv = g.linear_part().inverse().map_err(|_| Error::SingularLinearPart {
        determinant: g.linear_part().determinant().map(|d| d.norm().to_f64_lossy()).unwrap_or(0.0),
    })?;
    let mut h = TruncatedMapGerm::from_parts_unchecked(linear_components(&a_inv, cap));
    let Some(order) = g.nonlinear_order() else {
        return Ok(h);
    };
    let nonlinear = g.nonlinear_part();
    let passes = (cap - 1).div_ceil(order - 1);
    let ident: Vec<TruncatedSeries<T>> = (0..n).map(|i| TruncatedSeries::variable(n, cap, i)).collect();
    for _ in 0..passes {
        let nh = compose_many(&nonlinear, h.components());
        let rhs: Vec<TruncatedSeries<T>> = ident.iter().zip(&nh).map(|(z, v)| z - v).collect();
        h = TruncatedMapGerm::from_parts_unchecked(apply_matrix(&a_inv, &rhs));
    }
    Ok(h)
}

/// `M · v` for a vector of series.
pub(crate) fn apply_matrix<T: Real>(m: &Matrix<T>, v: &[TruncatedSeries<T>]) -> Vec<TruncatedSeries<T>> {
    (0..m.rows())
        .map(|i| {
            let mut acc = v[0].zero_like();
            for (j, s) in v.iter().enumerate() {
                let c = m[(i, j)];
                if c != czero() {
                    acc.axpy(c, s);
                }
            }
            acc.cleaned()
        })
        .collect()
}
