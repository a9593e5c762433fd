use crate::error::{dims_mismatch, Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Real;
use crate::series::{compose_all, SeriesMatrix, TruncatedMapGerm, TruncatedSeries};

/// Trivial bundle of rank `r` over `C^n` with the action
/// `(z, ξ) ↦ (γ(z), φ(z) ξ)`.
#[derive(Clone, Debug)]
pub struct EquivariantBundle<T: Real> {
    cocycle: SeriesMatrix<T>,
    base: TruncatedMapGerm<T>,
}

impl<T: Real> EquivariantBundle<T> {
    pub fn new(cocycle: SeriesMatrix<T>, base: TruncatedMapGerm<T>) -> Result<Self> {
        if cocycle.rows() != cocycle.cols() || cocycle.rows() == 0 {
            return Err(dims_mismatch("square cocycle", format!("{}x{}", cocycle.rows(), cocycle.cols())));
        }
        if cocycle.dimension() != base.dimension() || cocycle.cap() != base.cap() {
            return Err(dims_mismatch(
                format!("cocycle over n={}, D={}", base.dimension(), base.cap()),
                format!("n={}, D={}", cocycle.dimension(), cocycle.cap()),
            ));
        }
        let det = cocycle.constant_part().determinant()?;
        if det.norm() <= T::singular_threshold() {
            return Err(Error::SingularCocycle);
        }
        Ok(Self { cocycle, base })
    }

    /// Tangent bundle: `φ` is the Jacobian matrix of `γ`.
    pub fn tangent(base: &TruncatedMapGerm<T>) -> Self {
        Self { cocycle: SeriesMatrix::jacobian(base), base: base.clone() }
    }

    /// Constant cocycle `φ ≡ M`.
    pub fn constant(fiber: &Matrix<T>, base: &TruncatedMapGerm<T>) -> Result<Self> {
        Self::new(SeriesMatrix::constant(fiber, base.dimension(), base.cap()), base.clone())
    }

    pub fn rank(&self) -> usize {
        self.cocycle.rows()
    }

    pub fn dimension(&self) -> usize {
        self.base.dimension()
    }

    pub fn cap(&self) -> usize {
        self.base.cap()
    }

    pub fn cocycle(&self) -> &SeriesMatrix<T> {
        &self.cocycle
    }

    pub fn base(&self) -> &TruncatedMapGerm<T> {
        &self.base
    }

    /// `φ(0)`, the action on the fiber over the origin.
    pub fn fiber_matrix(&self) -> Matrix<T> {
        self.cocycle.constant_part()
    }
}

/// Matrix-valued 1-form `θ = Σ_l θ_l dz_l`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConnectionForm<T: Real> {
    forms: Vec<SeriesMatrix<T>>,
}

impl<T: Real> ConnectionForm<T> {
    pub fn zero(n: usize, r: usize, cap: usize) -> Self {
        Self { forms: vec![SeriesMatrix::zeros(r, r, n, cap); n] }
    }

    /// `forms[l]` is the coefficient of `dz_{l+1}`.
    pub fn from_forms(forms: Vec<SeriesMatrix<T>>) -> Result<Self> {
        let Some(first) = forms.first() else {
            return Err(dims_mismatch("at least one form", 0));
        };
        let (r, n, cap) = (first.rows(), first.dimension(), first.cap());
        if n != forms.len() {
            return Err(dims_mismatch(format!("{n} forms"), forms.len()));
        }
        for f in &forms {
            if f.rows() != r || f.cols() != r || f.dimension() != n || f.cap() != cap {
                return Err(dims_mismatch(
                    format!("{r}x{r} over n={n}, D={cap}"),
                    format!("{}x{} over n={}, D={}", f.rows(), f.cols(), f.dimension(), f.cap()),
                ));
            }
        }
        Ok(Self { forms })
    }

    pub fn dimension(&self) -> usize {
        self.forms.len()
    }

    pub fn rank(&self) -> usize {
        self.forms[0].rows()
    }

    pub fn cap(&self) -> usize {
        self.forms[0].cap()
    }

    pub fn form(&self, l: usize) -> &SeriesMatrix<T> {
        &self.forms[l]
    }

    pub fn forms(&self) -> &[SeriesMatrix<T>] {
        &self.forms
    }

    pub fn max_abs(&self) -> T {
        self.forms.iter().fold(T::zero(), |acc, f| acc.max(f.max_abs()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.forms.iter().zip(&other.forms).fold(T::zero(), |acc, (a, b)| acc.max(a.sub(b).max_abs()))
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { forms: self.forms.iter().zip(&other.forms).map(|(a, b)| a.add(b)).collect() }
    }

    pub fn graded_component(&self, d: usize) -> Self {
        Self { forms: self.forms.iter().map(|f| f.graded_component(d)).collect() }
    }

    pub fn truncated(&self, d: usize) -> Self {
        Self { forms: self.forms.iter().map(|f| f.truncated(d)).collect() }
    }

    /// `out_j = left · (Σ_l θ_l(M w) M_{lj}) · right`: pullback by the linear
    /// map `M`, followed by a constant change of fiber frame.
    pub(crate) fn linear_transform(&self, m: &Matrix<T>, left: &Matrix<T>, right: &Matrix<T>) -> Self {
        let n = self.dimension();
        let r = self.rank();
        let cap = self.cap();
        let identity = Matrix::identity(n);
        let composed: Vec<SeriesMatrix<T>> = if *m == identity {
            self.forms.clone()
        } else {
            let g = TruncatedMapGerm::from_parts_unchecked(crate::series::linear_components(m, cap));
            let flat: Vec<TruncatedSeries<T>> = self.forms.iter().flat_map(|f| f.entries().to_vec()).collect();
            let out = compose_all(&flat, &g).expect("matching shapes");
            out.chunks(r * r).map(|c| SeriesMatrix::from_entries(r, r, c.to_vec()).expect("square block")).collect()
        };
        let mixed: Vec<SeriesMatrix<T>> = (0..n)
            .map(|j| {
                let mut acc = SeriesMatrix::zeros(r, r, n, cap);
                for (l, f) in composed.iter().enumerate() {
                    let c = m[(l, j)];
                    if c.norm() != T::zero() {
                        acc = acc.add(&f.scale(c));
                    }
                }
                acc
            })
            .collect();
        let fiber_identity = Matrix::identity(r);
        let forms = if *left == fiber_identity && *right == fiber_identity {
            mixed
        } else {
            mixed.iter().map(|f| f.left_mul_constant(left).right_mul_constant(right)).collect()
        };
        Self { forms }
    }
}

/// Precomputed pieces of the affine action `θ ↦ γ#θ`.
pub(crate) struct Gauge<T: Real> {
    phi: SeriesMatrix<T>,
    phi_inv: SeriesMatrix<T>,
    /// `jac[l][j] = ∂_j γ_l`.
    jac: SeriesMatrix<T>,
    base: TruncatedMapGerm<T>,
    /// `φ⁻¹ dφ`.
    pub inhomogeneous: ConnectionForm<T>,
}

impl<T: Real> Gauge<T> {
    pub fn new(e: &EquivariantBundle<T>) -> Result<Self> {
        let phi = e.cocycle().clone();
        let phi_inv = phi.inverse()?;
        let n = e.dimension();
        let inhomogeneous = ConnectionForm { forms: (0..n).map(|j| phi_inv.mul(&phi.differentiate(j))).collect() };
        Ok(Self { phi, phi_inv, jac: SeriesMatrix::jacobian(e.base()), base: e.base().clone(), inhomogeneous })
    }

    /// `φ⁻¹ (γ*θ) φ`, the linear part of the action.
    pub fn linear(&self, theta: &ConnectionForm<T>) -> ConnectionForm<T> {
        let n = theta.dimension();
        let r = theta.rank();
        let cap = theta.cap();
        let flat: Vec<TruncatedSeries<T>> = theta.forms.iter().flat_map(|f| f.entries().to_vec()).collect();
        let pulled = compose_all(&flat, &self.base).expect("matching shapes");
        let blocks: Vec<&[TruncatedSeries<T>]> = pulled.chunks(r * r).collect();
        let forms = (0..n)
            .map(|j| {
                let mut x: Vec<TruncatedSeries<T>> = vec![TruncatedSeries::zero(n, cap); r * r];
                for (l, block) in blocks.iter().enumerate() {
                    let factor = self.jac.get(l, j);
                    if factor.is_zero() {
                        continue;
                    }
                    for (xe, be) in x.iter_mut().zip(block.iter()) {
                        if !be.is_zero() {
                            *xe = &*xe + &(be * factor);
                        }
                    }
                }
                let x = SeriesMatrix::from_entries(r, r, x).expect("square block");
                self.phi_inv.mul(&x).mul(&self.phi)
            })
            .collect();
        ConnectionForm { forms }
    }

    pub fn apply(&self, theta: &ConnectionForm<T>) -> ConnectionForm<T> {
        self.inhomogeneous.add(&self.linear(theta))
    }
}

/// `γ#θ = φ⁻¹dφ + φ⁻¹(γ*θ)φ`, where `γ*` substitutes `z ← γ(z)` and
/// transforms the form leg by the Jacobian of `γ`.
pub fn gauge_pullback<T: Real>(theta: &ConnectionForm<T>, e: &EquivariantBundle<T>) -> Result<ConnectionForm<T>> {
    if theta.dimension() != e.dimension() || theta.rank() != e.rank() || theta.cap() != e.cap() {
        return Err(dims_mismatch(
            format!("rank {} over n={}, D={}", e.rank(), e.dimension(), e.cap()),
            format!("rank {} over n={}, D={}", theta.rank(), theta.dimension(), theta.cap()),
        ));
    }
    Ok(Gauge::new(e)?.apply(theta))
}
