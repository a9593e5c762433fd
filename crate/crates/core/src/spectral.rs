//! Eigenvalues of linear parts and multiplicative resonance relations.
//!
//! Relation indices refer to the eigenvalues in Schur (triangular) order,
//! which for a diagonal or upper-triangular linear part is coordinate order.

use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::{schur, Matrix};
use crate::scalar::{cone, Real, C};
use crate::series::MonomialIndex;

/// Default absolute tolerance for resonance tests.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Guard band below 1 for the contraction test.
pub const CONTRACTION_MARGIN: f64 = 1e-12;

/// Eigen-decomposition of a linear part `A`.
#[derive(Clone, Debug)]
pub struct SpectralData<T: Real> {
    /// Eigenvalues in decreasing modulus.
    pub eigenvalues: Vec<C<T>>,
    /// Unitary `Q` with `Q* A Q` upper triangular.
    pub schur_basis: Matrix<T>,
    /// The triangular factor `Q* A Q`.
    pub triangular: Matrix<T>,
    pub source: Matrix<T>,
    /// QR sweeps used.
    pub sweeps: usize,
}

impl<T: Real> SpectralData<T> {
    /// Eigenvalues in the order they appear on the diagonal of the triangular factor.
    pub fn schur_eigenvalues(&self) -> Vec<C<T>> {
        self.triangular.diagonal()
    }

    pub fn dimension(&self) -> usize {
        self.source.rows()
    }

    pub fn max_modulus(&self) -> T {
        self.eigenvalues.iter().fold(T::zero(), |acc, a| acc.max(a.norm()))
    }

    pub fn min_modulus(&self) -> T {
        self.eigenvalues.iter().fold(T::infinity(), |acc, a| acc.min(a.norm()))
    }

    /// `‖A Q − Q T‖_F`.
    pub fn residual(&self) -> T {
        self.source.mul(&self.schur_basis).sub(&self.schur_basis.mul(&self.triangular)).frobenius_norm()
    }
}

/// Schur decomposition of `a`; eigenvalues sorted by decreasing modulus.
pub fn eigen<T: Real>(a: &Matrix<T>) -> Result<SpectralData<T>> {
    let s = schur(a)?;
    let mut eigenvalues = s.t.diagonal();
    eigenvalues.sort_by(|x, y| y.norm().partial_cmp(&x.norm()).unwrap_or(std::cmp::Ordering::Equal));
    Ok(SpectralData { eigenvalues, schur_basis: s.q, triangular: s.t, source: a.clone(), sweeps: s.sweeps })
}

/// True iff every eigenvalue has modulus below `1 - 1e-12`.
pub fn assert_contraction<T: Real>(s: &SpectralData<T>) -> bool {
    s.max_modulus().to_f64_lossy() < 1.0 - CONTRACTION_MARGIN
}

pub(crate) fn require_contraction(alpha: &[f64]) -> Result<()> {
    let max = alpha.iter().fold(0.0f64, |m, a| m.max(a.abs()));
    let min = alpha.iter().fold(f64::INFINITY, |m, a| m.min(a.abs()));
    if max.is_nan() || max >= 1.0 - CONTRACTION_MARGIN || min.is_nan() || min <= 0.0 {
        return Err(Error::NotContraction { max_modulus: max });
    }
    Ok(())
}

pub(crate) fn moduli<T: Real>(alpha: &[C<T>]) -> Vec<f64> {
    alpha.iter().map(|a| a.norm().to_f64_lossy()).collect()
}

/// `ceil(log(min_modulus) / log(max |α|))`, the largest total degree at
/// which a product of eigenvalues can still reach `min_modulus`.
fn bound_for(max_alpha: f64, min_modulus: f64) -> usize {
    if min_modulus >= 1.0 {
        return 0;
    }
    let ratio = min_modulus.ln() / max_alpha.ln();
    (ratio - 1e-9).ceil().max(0.0) as usize
}

/// Degree bound for resonance searches.
///
/// Without weights this is the matrix bound from `min |α_i|`; with weights
/// (ratios `β_p / β_q`) the smallest ratio modulus below 1 is used.
pub fn resonance_bound<T: Real>(alpha: &[C<T>], weights: Option<&[C<T>]>) -> Result<usize> {
    let am = moduli(alpha);
    require_contraction(&am)?;
    let max = am.iter().cloned().fold(0.0, f64::max);
    let min_relevant = match weights {
        None => am.iter().cloned().fold(f64::INFINITY, f64::min),
        Some(w) => {
            let below: Vec<f64> = moduli(w).into_iter().filter(|&m| m < 1.0).collect();
            if below.is_empty() {
                return Ok(0);
            }
            below.into_iter().fold(f64::INFINITY, f64::min)
        }
    };
    Ok(bound_for(max, min_relevant))
}

/// Calls `visit(k, α^k)` for every exponent vector with `|k| <= max_total`
/// whose product modulus is at least `floor`, pruning subtrees below it.
pub(crate) fn for_each_exponent<T: Real>(
    alpha: &[C<T>],
    max_total: usize,
    floor: T,
    visit: &mut dyn FnMut(&[u32], C<T>),
) {
    fn rec<T: Real>(
        alpha: &[C<T>],
        var: usize,
        left: usize,
        floor: T,
        k: &mut Vec<u32>,
        prod: C<T>,
        visit: &mut dyn FnMut(&[u32], C<T>),
    ) {
        if var == alpha.len() {
            visit(k, prod);
            return;
        }
        let mut p = prod;
        for e in 0..=left {
            if p.norm() < floor {
                break;
            }
            k[var] = e as u32;
            rec(alpha, var + 1, left - e, floor, k, p, visit);
            p *= alpha[var];
        }
        k[var] = 0;
    }
    let mut k = vec![0; alpha.len()];
    rec(alpha, 0, max_total, floor, &mut k, cone(), visit);
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ResonanceKind {
    Matrix,
    Bundle,
}

/// Which eigenvalue(s) a relation constrains (0-based indices).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ResonanceTarget {
    /// `α_i = α^k`.
    Eigenvalue(usize),
    /// `β_p = β_q α^k`.
    Pair(usize, usize),
}

/// One multiplicative identity among eigenvalues.
#[derive(Clone, Debug, PartialEq)]
pub struct ResonanceRelation {
    pub kind: ResonanceKind,
    pub target: ResonanceTarget,
    pub exponents: MonomialIndex,
    /// `|target − predicted|`.
    pub residual: f64,
}

impl fmt::Display for ResonanceRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let k = self.exponents.exponents();
        let product = k
            .iter()
            .enumerate()
            .filter(|(_, &e)| e > 0)
            .map(|(j, &e)| if e == 1 { format!("a{}", j + 1) } else { format!("a{}^{}", j + 1, e) })
            .collect::<Vec<_>>()
            .join("*");
        match self.target {
            ResonanceTarget::Eigenvalue(i) => write!(f, "a{} = {}", i + 1, product),
            ResonanceTarget::Pair(p, q) => write!(f, "b{} = b{}*{}", p + 1, q + 1, product),
        }
    }
}

/// Result of a resonance search with its conditioning data.
#[derive(Clone, Debug)]
pub struct ResonanceScan {
    pub relations: Vec<ResonanceRelation>,
    /// Smallest `|target − predicted|` over the whole search box.
    pub small_divisor: f64,
    pub bound: usize,
    pub tolerance: f64,
}

/// Exhaustive search for `α_i = α^k`, `2 <= |k| <= bound`.
pub fn scan_matrix_resonances<T: Real>(s: &SpectralData<T>, tol: f64) -> Result<ResonanceScan> {
    scan_matrix_resonances_for(&s.schur_eigenvalues(), tol)
}

/// [`scan_matrix_resonances`] on an explicit eigenvalue list.
pub fn scan_matrix_resonances_for<T: Real>(alpha: &[C<T>], tol: f64) -> Result<ResonanceScan> {
    let bound = resonance_bound(alpha, None)?;
    let n = alpha.len();
    let am = moduli(alpha);
    let min = am.iter().cloned().fold(f64::INFINITY, f64::min);
    let floor = T::lit((min - tol).max(0.0) * (1.0 - 1e-12));
    let mut relations = Vec::new();
    let mut small = f64::INFINITY;
    // distinct targets: equal eigenvalues collapse onto the smallest index
    let targets: Vec<usize> =
        (0..n).filter(|&i| (0..i).all(|j| (alpha[j] - alpha[i]).norm().to_f64_lossy() > tol)).collect();
    for_each_exponent(alpha, bound, floor, &mut |k, prod| {
        let total: u32 = k.iter().sum();
        if total < 2 {
            return;
        }
        for &i in &targets {
            let r = (alpha[i] - prod).norm().to_f64_lossy();
            small = small.min(r);
            if r <= tol {
                relations.push(ResonanceRelation {
                    kind: ResonanceKind::Matrix,
                    target: ResonanceTarget::Eigenvalue(i),
                    exponents: MonomialIndex::new(k.to_vec()),
                    residual: r,
                });
            }
        }
    });
    if !small.is_finite() {
        // nothing reachable: every product falls below every eigenvalue
        let max = am.iter().cloned().fold(0.0, f64::max);
        small = min - max * max;
    }
    relations.sort_by_key(|a| relation_key(a));
    Ok(ResonanceScan { relations, small_divisor: small, bound, tolerance: tol })
}

fn relation_key(r: &ResonanceRelation) -> (usize, usize, MonomialIndex) {
    match r.target {
        ResonanceTarget::Eigenvalue(i) => (i, 0, r.exponents.clone()),
        ResonanceTarget::Pair(p, q) => (p, q, r.exponents.clone()),
    }
}

/// All matrix resonance relations; empty iff the linear part is non-resonant.
pub fn matrix_resonances<T: Real>(s: &SpectralData<T>, tol: f64) -> Result<Vec<ResonanceRelation>> {
    Ok(scan_matrix_resonances(s, tol)?.relations)
}

/// Equivariant action on the fiber over the origin.
#[derive(Clone, Debug)]
pub struct BundleAction<T: Real> {
    pub fiber_matrix: Matrix<T>,
    /// Eigenvalues in Schur order of `fiber_matrix`.
    pub eigenvalues: Vec<C<T>>,
}

impl<T: Real> BundleAction<T> {
    pub fn new(fiber_matrix: Matrix<T>) -> Result<Self> {
        let s = schur(&fiber_matrix)?;
        Ok(Self { eigenvalues: s.t.diagonal(), fiber_matrix })
    }

    /// Action with the given eigenvalues on a diagonal fiber matrix.
    pub fn diagonal(beta: &[C<T>]) -> Self {
        Self { fiber_matrix: Matrix::from_diagonal(beta), eigenvalues: beta.to_vec() }
    }

    /// The tangent action `β = α` of a germ's linear part.
    pub fn tangent(s: &SpectralData<T>) -> Self {
        Self { fiber_matrix: s.source.clone(), eigenvalues: s.schur_eigenvalues() }
    }
}

/// Exhaustive search for `β_p = β_q α^k`, `1 <= |k| <= bound`.
pub fn scan_bundle_resonances<T: Real>(s: &SpectralData<T>, b: &BundleAction<T>, tol: f64) -> Result<ResonanceScan> {
    scan_bundle_resonances_for(&s.schur_eigenvalues(), &b.eigenvalues, tol)
}

/// [`scan_bundle_resonances`] on explicit eigenvalue lists.
pub fn scan_bundle_resonances_for<T: Real>(alpha: &[C<T>], beta: &[C<T>], tol: f64) -> Result<ResonanceScan> {
    let m = beta.len();
    let mut ratios = Vec::with_capacity(m * m);
    for p in 0..m {
        for q in 0..m {
            ratios.push(beta[p] / beta[q]);
        }
    }
    let bound = resonance_bound(alpha, Some(&ratios))?;
    let distinct = |v: &[C<T>]| -> Vec<usize> {
        (0..v.len()).filter(|&i| (0..i).all(|j| (v[j] - v[i]).norm().to_f64_lossy() > tol)).collect()
    };
    let targets = distinct(beta);
    let mut relations = Vec::new();
    let mut small = f64::INFINITY;
    for &q in &targets {
        let bq = beta[q];
        let bq_abs = bq.norm().to_f64_lossy();
        let reach = targets.iter().map(|&p| beta[p].norm().to_f64_lossy()).fold(f64::INFINITY, f64::min);
        let floor = T::lit(((reach - tol) / bq_abs).max(0.0) * (1.0 - 1e-12));
        for_each_exponent(alpha, bound, floor, &mut |k, prod| {
            if k.iter().all(|&e| e == 0) {
                return;
            }
            let predicted = bq * prod;
            for &p in &targets {
                let r = (beta[p] - predicted).norm().to_f64_lossy();
                small = small.min(r);
                if r <= tol {
                    relations.push(ResonanceRelation {
                        kind: ResonanceKind::Bundle,
                        target: ResonanceTarget::Pair(p, q),
                        exponents: MonomialIndex::new(k.to_vec()),
                        residual: r,
                    });
                }
            }
        });
    }
    if !small.is_finite() {
        small = 1.0;
    }
    relations.sort_by_key(|a| relation_key(a));
    Ok(ResonanceScan { relations, small_divisor: small, bound, tolerance: tol })
}

/// All bundle resonance relations; empty iff the equivariant bundle is non-resonant.
pub fn bundle_resonances<T: Real>(
    s: &SpectralData<T>,
    b: &BundleAction<T>,
    tol: f64,
) -> Result<Vec<ResonanceRelation>> {
    Ok(scan_bundle_resonances(s, b, tol)?.relations)
}

/// Direction in which the graded operator on connection coefficients acts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WeightConvention {
    /// `β_v α_l α^m / β_u`: the action of `θ ↦ γ#θ` on the coefficient of
    /// `z^m dz_l` in the `(u, v)` entry (eigen-coordinates).
    Pushforward,
    /// The reciprocal weights, as seen by the inverse action.
    Pullback,
}

/// Weight of the `(u, v)` entry of the coefficient of `z^m dz_l`.
pub fn connection_weight<T: Real>(
    alpha: &[C<T>],
    beta: &[C<T>],
    u: usize,
    v: usize,
    l: usize,
    m: &[u32],
    convention: WeightConvention,
) -> C<T> {
    let mut w = beta[v] * alpha[l] / beta[u];
    for (a, &e) in alpha.iter().zip(m) {
        w *= a.powu(e);
    }
    match convention {
        WeightConvention::Pushforward => w,
        WeightConvention::Pullback => cone::<T>() / w,
    }
}
