//! Cohomology of Mall bundles on diagonal linear Hopf manifolds.
//!
//! For `γ = diag(α)` a section of a tensor bundle is an invariant tensor
//! field on `C^n`. A basis tensor `z^m e_I ⊗ dz_J`, twisted by `K^k` and by
//! the flat line bundle `L_λ`, is invariant iff
//!
//! ```text
//! α_J · (Πα)^k · α^m = α_I · λ
//! ```
//!
//! where `α_I` is the product over the contravariant slots and `α_J` over
//! the covariant ones. The test compares the two sides with an absolute
//! tolerance, and negative powers of `Πα` move to the right-hand side so
//! neither side is ever divided. `O_H` constants always count; for
//! `Ω¹ ⊗ End(TH)` the relation is literally a matrix resonance.

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::{cone, Real, C};
use crate::series::MonomialIndex;
use crate::spectral::{self, for_each_exponent, scan_matrix_resonances_for};

/// `TH^{⊗p} ⊗ (Ω¹)^{⊗q} ⊗ K^{k_can} ⊗ L_λ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TensorBundleSpec {
    pub p: usize,
    pub q: usize,
    pub k_can: i32,
    /// Character of the flat line bundle; `None` means `λ = 1`.
    pub line_character: Option<C<f64>>,
}

impl TensorBundleSpec {
    pub const fn tensor(p: usize, q: usize, k_can: i32) -> Self {
        Self { p, q, k_can, line_character: None }
    }

    pub const fn structure_sheaf() -> Self {
        Self::tensor(0, 0, 0)
    }

    pub const fn tangent() -> Self {
        Self::tensor(1, 0, 0)
    }

    pub const fn canonical() -> Self {
        Self::tensor(0, 0, 1)
    }

    /// `(Ω¹)^{⊗l}`.
    pub const fn forms(l: usize) -> Self {
        Self::tensor(0, l, 0)
    }

    /// `Ω¹ ⊗ End(TH) = TH ⊗ (Ω¹)^{⊗2}`.
    pub const fn forms_with_endomorphisms() -> Self {
        Self::tensor(1, 2, 0)
    }

    pub fn line(lambda: C<f64>) -> Self {
        Self { line_character: Some(lambda), ..Self::structure_sheaf() }
    }

    /// `B* ⊗ K`, the Serre dual twist.
    pub fn serre_dual(&self) -> Self {
        Self {
            p: self.q,
            q: self.p,
            k_can: 1 - self.k_can,
            line_character: self.line_character.map(|l| C::new(1.0, 0.0) / l),
        }
    }

    fn lambda(&self) -> C<f64> {
        self.line_character.unwrap_or(C::new(1.0, 0.0))
    }
}

/// An invariant section `z^m e_{contravariant} ⊗ dz_{covariant}` (0-based slots).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SectionWitness {
    pub contravariant: Vec<usize>,
    pub covariant: Vec<usize>,
    pub monomial: MonomialIndex,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CohomologyReport {
    pub n: usize,
    /// `h^0 .. h^n`.
    pub dims: Vec<usize>,
    /// Basis of `H^0` found by the enumeration.
    pub witnesses: Vec<SectionWitness>,
    pub tolerance: f64,
    /// `h^{n-1}` and `h^n` come from counting sections of `B* ⊗ K`
    /// (Serre duality plus `h^0 = h^1` for the dual bundle).
    pub top_degrees_from_serre_duality: bool,
}

/// Eigenvalues of a diagonal matrix, or `NotDiagonal`.
pub fn diagonal_eigenvalues<T: Real>(a: &Matrix<T>, tol: f64) -> Result<Vec<C<T>>> {
    let off = a.max_off_diagonal().to_f64_lossy();
    if off > tol {
        return Err(Error::NotDiagonal { off_diagonal: off });
    }
    Ok(a.diagonal())
}

fn require_contraction<T: Real>(alpha: &[C<T>]) -> Result<()> {
    if alpha.is_empty() {
        return Err(Error::InvalidArgument("no eigenvalues".into()));
    }
    spectral::require_contraction(&spectral::moduli(alpha))
}

/// Calls `visit(slots)` for every tuple in `[0, n)^len`, lexicographically.
fn for_each_slot_tuple(n: usize, len: usize, visit: &mut dyn FnMut(&[usize])) {
    let mut slots = vec![0usize; len];
    loop {
        visit(&slots);
        let mut i = len;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            slots[i] += 1;
            if slots[i] < n {
                break;
            }
            slots[i] = 0;
        }
    }
}

/// Dimension of the space of invariant sections, with a monomial basis.
///
/// For each basis tensor the exponents `m` are enumerated depth-first,
/// pruning once `|α_J (Πα)^k α^m|` drops below `|α_I λ| − tol`; beyond that
/// the modulus only decreases, so no further `m` can satisfy the relation.
pub fn invariant_section_dim<T: Real>(
    alpha: &[C<T>],
    spec: &TensorBundleSpec,
    tol: f64,
) -> Result<(usize, Vec<SectionWitness>)> {
    require_contraction(alpha)?;
    let lambda = spec.lambda();
    if lambda.norm() == 0.0 || !lambda.norm().is_finite() {
        return Err(Error::InvalidArgument(format!("line character must be nonzero and finite, got {lambda}")));
    }
    let n = alpha.len();
    let lambda_t = C::new(T::lit(lambda.re), T::lit(lambda.im));
    let total = alpha.iter().fold(cone::<T>(), |acc, a| acc * a);
    let k_left = total.powu(spec.k_can.max(0) as u32);
    let k_right = total.powu((-spec.k_can).max(0) as u32);
    let max = alpha.iter().fold(0.0f64, |m, a| m.max(a.norm().to_f64_lossy()));
    let mut witnesses = Vec::new();
    for_each_slot_tuple(n, spec.p, &mut |contra| {
        let right = contra.iter().fold(k_right * lambda_t, |acc, &i| acc * alpha[i]);
        let reach = right.norm().to_f64_lossy() - tol;
        for_each_slot_tuple(n, spec.q, &mut |cov| {
            let left = cov.iter().fold(k_left, |acc, &j| acc * alpha[j]);
            let lm = left.norm().to_f64_lossy();
            if reach <= 0.0 {
                // unreachable for valid input: every α and λ are nonzero
                return;
            }
            // |α^m| must stay >= reach / |left|
            let floor = reach / lm;
            if floor > 1.0 + 1e-12 {
                return;
            }
            let max_total = if floor >= 1.0 { 0 } else { (floor.ln() / max.ln()).floor().max(0.0) as usize + 1 };
            let floor_t = T::lit(floor * (1.0 - 1e-12));
            for_each_exponent(alpha, max_total, floor_t, &mut |m, am| {
                if (left * am - right).norm().to_f64_lossy() <= tol {
                    witnesses.push(SectionWitness {
                        contravariant: contra.to_vec(),
                        covariant: cov.to_vec(),
                        monomial: MonomialIndex::new(m.to_vec()),
                    });
                }
            });
        });
    });
    witnesses.sort();
    Ok((witnesses.len(), witnesses))
}

/// `h^0 = h^1 = #invariant sections`, `h^i = 0` for `1 < i < n − 1`, and
/// `h^{n−1} = h^n = #invariant sections of B* ⊗ K`.
pub fn mall_dims<T: Real>(alpha: &[C<T>], spec: &TensorBundleSpec, tol: f64) -> Result<CohomologyReport> {
    let n = alpha.len();
    require_contraction(alpha)?;
    if n < 3 {
        return Err(Error::DimensionTooSmall(n));
    }
    let (h0, witnesses) = invariant_section_dim(alpha, spec, tol)?;
    let (hn, _) = invariant_section_dim(alpha, &spec.serre_dual(), tol)?;
    let mut dims = vec![0; n + 1];
    dims[0] = h0;
    dims[1] = h0;
    dims[n - 1] = hn;
    dims[n] = hn;
    Ok(CohomologyReport { n, dims, witnesses, tolerance: tol, top_degrees_from_serre_duality: true })
}

/// Cohomology of the flat line bundle `L_λ`: sections are functions with
/// `f∘γ = λ f`, so `h^0 = #{m : |α^m − λ| <= tol}`.
pub fn line_bundle_cohomology<T: Real>(alpha: &[C<T>], lambda: C<f64>, tol: f64) -> Result<CohomologyReport> {
    mall_dims(alpha, &TensorBundleSpec::line(lambda), tol)
}

/// Whether "α is resonant" agrees with "`Ω¹ ⊗ End(TH)` has a nonzero
/// invariant section". Holds for every diagonal contraction.
pub fn resonance_cohomology_bridge<T: Real>(alpha: &[C<T>], tol: f64) -> Result<bool> {
    let resonant = !scan_matrix_resonances_for(alpha, tol)?.relations.is_empty();
    let (dim, _) = invariant_section_dim(alpha, &TensorBundleSpec::forms_with_endomorphisms(), tol)?;
    Ok(resonant == (dim > 0))
}
