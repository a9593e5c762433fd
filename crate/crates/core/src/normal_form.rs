//! Poincaré linearization and Poincaré–Dulac normal forms by graded solves
//! of the homological equation `A·h − h∘A = r`.
//!
//! Conjugation is always `U∘g∘U⁻¹`; with `U = Id + h` the degree-`d` part
//! of the conjugated germ is `r − (A·h − h∘A)`.

use crate::error::{dims_mismatch, Error, Result, Warning, ILL_CONDITIONED};
use crate::linalg::Matrix;
use crate::scalar::{cone, czero, is_zero, Real, C};
use crate::series::{
    apply_matrix, compose_all, compose_germs, invert_germ, linear_components, Layout, MonomialIndex, TruncatedMapGerm,
    TruncatedSeries,
};
use crate::spectral::{assert_contraction, eigen, scan_matrix_resonances, SpectralData};

/// Vector field whose components are homogeneous of one degree.
#[derive(Clone, Debug, PartialEq)]
pub struct HomogeneousVectorField<T: Real> {
    degree: usize,
    components: Vec<TruncatedSeries<T>>,
}

impl<T: Real> HomogeneousVectorField<T> {
    /// Fails unless every stored monomial has total degree `degree`.
    pub fn new(degree: usize, components: Vec<TruncatedSeries<T>>) -> Result<Self> {
        for (i, c) in components.iter().enumerate() {
            if c.dimension() != components.len() {
                return Err(dims_mismatch(components.len(), c.dimension()));
            }
            if c.terms().any(|(m, _)| m.total_degree() != degree) {
                return Err(Error::InvalidArgument(format!(
                    "component {} is not homogeneous of degree {degree}",
                    i + 1
                )));
            }
        }
        Ok(Self { degree, components })
    }

    /// Degree-`d` part of a germ's components.
    pub fn from_germ(g: &TruncatedMapGerm<T>, d: usize) -> Self {
        Self { degree: d, components: g.components().iter().map(|c| c.graded_component(d)).collect() }
    }

    pub fn zero(n: usize, cap: usize, degree: usize) -> Self {
        Self { degree, components: vec![TruncatedSeries::zero(n, cap); n] }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn components(&self) -> &[TruncatedSeries<T>] {
        &self.components
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(TruncatedSeries::is_zero)
    }

    pub fn max_abs(&self) -> T {
        self.components.iter().fold(T::zero(), |acc, c| acc.max(c.max_abs()))
    }
}

/// Output of one graded homological solve.
#[derive(Clone, Debug)]
pub struct HomologicalSolution<T: Real> {
    pub h: HomogeneousVectorField<T>,
    /// Singular directions `(component, monomial)`, 0-based components, in the
    /// Schur coordinates of `A` (coordinate directions when `A` is triangular).
    pub unsolved: Vec<(usize, MonomialIndex)>,
    /// Smallest divisor `|α_i − α^m|` over the solved directions.
    pub small_divisor: f64,
}

/// `L(h) = A·h − h∘A` on degree-`d` fields, in the Schur basis of `A`.
///
/// With `A = Q T Q*` and `h(z) = Q h̃(Q* z)`, the operator becomes
/// `T h̃ − h̃∘T`, triangular for the key (component, graded-lex position).
pub struct HomologicalOperator<T: Real> {
    q: Matrix<T>,
    q_adj: Matrix<T>,
    t: Matrix<T>,
    alpha: Vec<C<T>>,
    trivial_basis: bool,
    diagonal: bool,
    layout: std::sync::Arc<Layout>,
    /// `(T w)^m` for every monomial up to the cap; empty when `T` is diagonal.
    powers: Vec<TruncatedSeries<T>>,
}

/// `(M w)^m` for all monomials `m` up to `cap`, indexed by layout position.
pub(crate) fn linear_powers<T: Real>(m: &Matrix<T>, cap: usize) -> Vec<TruncatedSeries<T>> {
    let n = m.rows();
    let layout = Layout::get(n, cap);
    let lin = linear_components(m, cap);
    let mut out: Vec<TruncatedSeries<T>> = Vec::with_capacity(layout.len());
    out.push(TruncatedSeries::one(n, cap));
    for i in 1..layout.len() {
        let mono = &layout.monomials[i];
        let var = (0..n).rev().find(|&v| mono.exponents()[v] > 0).expect("non-constant monomial");
        let prev = layout.down[i * n + var] as usize;
        let p = &out[prev] * &lin[var];
        out.push(p);
    }
    out
}

impl<T: Real> HomologicalOperator<T> {
    pub fn new(s: &SpectralData<T>, cap: usize) -> Self {
        let n = s.dimension();
        let identity = Matrix::identity(n);
        let trivial_basis = s.schur_basis == identity;
        let diagonal = s.triangular.max_off_diagonal() == T::zero();
        let powers = if diagonal { Vec::new() } else { linear_powers(&s.triangular, cap) };
        Self {
            q: s.schur_basis.clone(),
            q_adj: s.schur_basis.adjoint(),
            t: s.triangular.clone(),
            alpha: s.schur_eigenvalues(),
            trivial_basis,
            diagonal,
            layout: Layout::get(n, cap),
            powers,
        }
    }

    /// `z ↦ outer · v(inner · z)`.
    fn change_basis(&self, v: &[TruncatedSeries<T>], outer: &Matrix<T>, inner: &Matrix<T>) -> Vec<TruncatedSeries<T>> {
        if self.trivial_basis {
            return v.to_vec();
        }
        let cap = self.layout.cap;
        let g = TruncatedMapGerm::from_parts_unchecked(linear_components(inner, cap));
        let composed = compose_all(v, &g).expect("matching shapes");
        apply_matrix(outer, &composed)
    }

    /// Solves `L(h) = r`; directions with `|α_i − α^m| <= tol` are left at zero and reported.
    pub fn solve(&self, r: &HomogeneousVectorField<T>, tol: f64) -> HomologicalSolution<T> {
        let n = self.alpha.len();
        let d = r.degree;
        let layout = &self.layout;
        let range = layout.degree_range(d);
        let count = range.len();
        // r̃(w) = Q* r(Q w)
        let rt = self.change_basis(&r.components, &self.q_adj, &self.q);
        let mut x: Vec<Vec<C<T>>> = vec![vec![czero(); count]; n];
        let mut unsolved = Vec::new();
        let mut small = f64::INFINITY;
        let mono_alpha: Vec<C<T>> = range
            .clone()
            .map(|p| {
                layout.monomials[p]
                    .exponents()
                    .iter()
                    .zip(&self.alpha)
                    .fold(cone::<T>(), |acc, (&e, a)| acc * a.powu(e))
            })
            .collect();
        for i in (0..n).rev() {
            let mut b: Vec<C<T>> = range.clone().map(|p| rt[i].coeffs[p]).collect();
            for j in (i + 1)..n {
                let tij = self.t[(i, j)];
                if is_zero(&tij) {
                    continue;
                }
                for (bp, xj) in b.iter_mut().zip(&x[j]) {
                    *bp -= tij * *xj;
                }
            }
            for p in 0..count {
                let diag = self.alpha[i] - mono_alpha[p];
                let dn = diag.norm().to_f64_lossy();
                let value = if dn <= tol {
                    unsolved.push((i, layout.monomials[range.start + p].clone()));
                    czero()
                } else {
                    small = small.min(dn);
                    b[p] / diag
                };
                x[i][p] = value;
                if !self.diagonal && !is_zero(&value) {
                    let pw = &self.powers[range.start + p];
                    for q in (p + 1)..count {
                        let c = pw.coeffs[range.start + q];
                        if !is_zero(&c) {
                            b[q] += c * value;
                        }
                    }
                }
            }
        }
        let cap = layout.cap;
        let ht: Vec<TruncatedSeries<T>> = x
            .iter()
            .map(|xi| {
                let mut s = TruncatedSeries::zero(n, cap);
                s.coeffs[range.clone()].copy_from_slice(xi);
                s.cleaned()
            })
            .collect();
        // h(z) = Q h̃(Q* z)
        let h = self.change_basis(&ht, &self.q, &self.q_adj);
        HomologicalSolution { h: HomogeneousVectorField { degree: d, components: h }, unsolved, small_divisor: small }
    }
}

/// One graded solve of `A·h − h∘A = r`; see [`HomologicalOperator`].
pub fn homological_solve<T: Real>(
    a: &Matrix<T>,
    r: &HomogeneousVectorField<T>,
    tol: f64,
) -> Result<HomologicalSolution<T>> {
    let n = a.rows();
    if r.components.len() != n {
        return Err(dims_mismatch(n, r.components.len()));
    }
    if r.degree < 2 {
        return Err(Error::InvalidArgument(format!("homological equation needs degree >= 2, got {}", r.degree)));
    }
    let cap = r.components[0].cap();
    if r.degree > cap {
        return Err(Error::InvalidArgument(format!("degree {} exceeds the cap {cap}", r.degree)));
    }
    let s = eigen(a)?;
    Ok(HomologicalOperator::new(&s, cap).solve(r, tol))
}

/// Result of a linearization or normal-form sweep.
#[derive(Clone, Debug)]
pub struct NormalFormReport<T: Real> {
    /// Coordinate change `U` (tangent to the identity for the classical sweep).
    pub change: TruncatedMapGerm<T>,
    /// `U∘g∘U⁻¹`.
    pub normalized: TruncatedMapGerm<T>,
    /// Retained nonlinear monomials `(component, m)`, 0-based components.
    pub kept_monomials: Vec<(usize, MonomialIndex)>,
    /// Largest coefficient of the part of `normalized` that should have vanished.
    pub max_residual: f64,
    /// Smallest divisor over solved monomials.
    pub small_divisor: f64,
    pub warnings: Vec<Warning>,
}

fn spectral_checked<T: Real>(g: &TruncatedMapGerm<T>) -> Result<SpectralData<T>> {
    let s = eigen(g.linear_part())?;
    if !assert_contraction(&s) {
        return Err(Error::NotContraction { max_modulus: s.max_modulus().to_f64_lossy() });
    }
    Ok(s)
}

/// `V∘g∘V⁻¹`.
pub fn conjugate<T: Real>(v: &TruncatedMapGerm<T>, g: &TruncatedMapGerm<T>) -> Result<TruncatedMapGerm<T>> {
    let v_inv = invert_germ(v)?;
    compose_germs(&compose_germs(v, g)?, &v_inv)
}

struct Sweep<T: Real> {
    change: TruncatedMapGerm<T>,
    current: TruncatedMapGerm<T>,
    small_divisor: f64,
    unsolved: Vec<(usize, MonomialIndex)>,
}

fn sweep<T: Real>(g: &TruncatedMapGerm<T>, s: &SpectralData<T>, tol: f64) -> Result<Sweep<T>> {
    let n = g.dimension();
    let cap = g.cap();
    let op = HomologicalOperator::new(s, cap);
    let mut change = TruncatedMapGerm::identity(n, cap);
    let mut current = g.clone();
    let mut small = f64::INFINITY;
    let mut unsolved = Vec::new();
    for d in 2..=cap {
        let r = HomogeneousVectorField::from_germ(&current, d);
        if r.is_zero() {
            continue;
        }
        let sol = op.solve(&r, tol);
        small = small.min(sol.small_divisor);
        unsolved.extend(sol.unsolved);
        if sol.h.is_zero() {
            continue;
        }
        let v_components: Vec<TruncatedSeries<T>> =
            sol.h.components.iter().enumerate().map(|(i, h)| &TruncatedSeries::variable(n, cap, i) + h).collect();
        let v = TruncatedMapGerm::from_parts_unchecked(v_components);
        current = conjugate(&v, &current)?;
        change = compose_germs(&v, &change)?;
    }
    Ok(Sweep { change, current, small_divisor: small, unsolved })
}

fn ill_conditioning(small_divisor: f64) -> Vec<Warning> {
    if small_divisor < ILL_CONDITIONED {
        vec![Warning::IllConditioned { small_divisor }]
    } else {
        Vec::new()
    }
}

/// Poincaré linearization of a non-resonant contraction.
///
/// Fails with [`Error::ResonantInput`] when the linear part is resonant at `tol`.
pub fn linearize<T: Real>(g: &TruncatedMapGerm<T>, tol: f64) -> Result<NormalFormReport<T>> {
    let s = spectral_checked(g)?;
    let scan = scan_matrix_resonances(&s, tol)?;
    if !scan.relations.is_empty() {
        return Err(Error::ResonantInput { relations: scan.relations });
    }
    let sw = sweep(g, &s, tol)?;
    let max_residual = sw.current.max_nonlinear_abs().to_f64_lossy();
    let small_divisor = sw.small_divisor.min(scan.small_divisor);
    Ok(NormalFormReport {
        normalized: TruncatedMapGerm::from_parts_unchecked(linear_components(g.linear_part(), g.cap())),
        change: sw.change,
        kept_monomials: Vec::new(),
        max_residual,
        small_divisor,
        warnings: ill_conditioning(small_divisor),
    })
}

/// Poincaré–Dulac normal form: eliminates every non-resonant monomial up to
/// the cap and keeps the resonant ones.
pub fn normal_form<T: Real>(g: &TruncatedMapGerm<T>, tol: f64) -> Result<NormalFormReport<T>> {
    let s = spectral_checked(g)?;
    let sw = sweep(g, &s, tol)?;
    let scale = g.max_abs().to_f64_lossy().max(1.0);
    let threshold = T::lit(tol * scale);
    // unsolved directions are in Schur coordinates; they name monomials only for a trivial basis
    let trivial_basis = s.schur_basis == Matrix::identity(g.dimension());
    let mut kept = Vec::new();
    let mut resonant_part = Vec::new();
    for (i, c) in sw.current.components().iter().enumerate() {
        let mut off = c.clone();
        for (m, v) in c.terms() {
            if m.total_degree() < 2 {
                off.set_coeff(m, czero());
                continue;
            }
            let in_kernel = !trivial_basis || sw.unsolved.iter().any(|(k, mm)| *k == i && mm == m);
            if v.norm() > threshold && in_kernel {
                kept.push((i, m.clone()));
                off.set_coeff(m, czero());
            }
        }
        resonant_part.push(off);
    }
    let max_residual = resonant_part.iter().fold(0.0f64, |acc, r| acc.max(r.max_abs().to_f64_lossy()));
    let small_divisor = sw.small_divisor;
    Ok(NormalFormReport {
        change: sw.change,
        normalized: sw.current,
        kept_monomials: kept,
        max_residual,
        small_divisor,
        warnings: ill_conditioning(small_divisor),
    })
}

/// Largest coefficient of `U∘g∘U⁻¹ − target` over all degrees up to the cap.
pub fn verify_conjugacy<T: Real>(
    u: &TruncatedMapGerm<T>,
    g: &TruncatedMapGerm<T>,
    target: &TruncatedMapGerm<T>,
) -> Result<f64> {
    if u.dimension() != g.dimension() || g.dimension() != target.dimension() {
        return Err(dims_mismatch(g.dimension(), format!("{} / {}", u.dimension(), target.dimension())));
    }
    if u.cap() != g.cap() || g.cap() != target.cap() {
        return Err(dims_mismatch(format!("D={}", g.cap()), format!("D={} / D={}", u.cap(), target.cap())));
    }
    let conj = conjugate(u, g)?;
    Ok(conj.max_abs_diff(target)?.to_f64_lossy())
}

/// The linear germ `z ↦ A z` at the cap of `g`.
pub fn linear_target<T: Real>(g: &TruncatedMapGerm<T>) -> TruncatedMapGerm<T> {
    TruncatedMapGerm::from_parts_unchecked(linear_components(g.linear_part(), g.cap()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::parse_germ;
    use crate::spectral::DEFAULT_TOL;

    fn germ(texts: &[&str], cap: usize) -> TruncatedMapGerm<f64> {
        parse_germ(texts, texts.len(), cap).unwrap()
    }

    fn field(texts: &[&str], d: usize, cap: usize) -> HomogeneousVectorField<f64> {
        let comps = texts.iter().map(|t| crate::series::parse_series(t, texts.len(), cap).unwrap()).collect();
        HomogeneousVectorField::new(d, comps).unwrap()
    }

    #[test]
    fn hand_solved_quadratic() {
        let a = Matrix::<f64>::from_real_rows(&[&[0.5, 0.0], &[0.0, 1.0 / 3.0]]);
        let sol = homological_solve(&a, &field(&["z2^2", "0"], 2, 3), DEFAULT_TOL).unwrap();
        let h0 = sol.h.components()[0].coeff(&MonomialIndex::new(vec![0, 2]));
        assert!((h0 - C::new(18.0 / 7.0, 0.0)).norm() < 1e-14);
        assert!(sol.h.components()[1].is_zero());
        // smallest over every solved degree-2 direction: |α_2 − α_1 α_2| ... |α_2 − α_1^2| = 1/12
        assert!((sol.small_divisor - 1.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn zero_rhs() {
        let a = Matrix::<f64>::from_real_rows(&[&[0.5, 0.0], &[0.0, 1.0 / 3.0]]);
        let sol = homological_solve(&a, &HomogeneousVectorField::zero(2, 3, 2), DEFAULT_TOL).unwrap();
        assert!(sol.h.is_zero());
    }

    #[test]
    fn resonant_direction_is_left_unsolved() {
        let a = Matrix::<f64>::from_real_rows(&[&[0.5, 0.0], &[0.0, 0.25]]);
        let sol = homological_solve(&a, &field(&["0", "z1^2"], 2, 3), DEFAULT_TOL).unwrap();
        assert!(sol.h.is_zero());
        assert!(sol.unsolved.contains(&(1, MonomialIndex::new(vec![2, 0]))));
    }

    #[test]
    fn triangular_operator_matches_definition() {
        let a = Matrix::<f64>::from_real_rows(&[&[0.5, 0.3, -0.2], &[0.1, 0.4, 0.25], &[0.0, -0.15, 0.3]]);
        let r = field(&["z1^2 - 2*z2*z3", "(0.5+1i)*z3^2 + z1*z2", "z1*z3 - z2^2"], 2, 3);
        let sol = homological_solve(&a, &r, DEFAULT_TOL).unwrap();
        let cap = 3;
        let ga = TruncatedMapGerm::from_parts_unchecked(linear_components(&a, cap));
        let ah = apply_matrix(&a, sol.h.components());
        let h_a = compose_all(sol.h.components(), &ga).unwrap();
        for i in 0..3 {
            let lhs = &ah[i] - &h_a[i];
            assert!(lhs.max_abs_diff(&r.components()[i]).unwrap() < 1e-12);
        }
    }

    #[test]
    fn shear_example_is_exact() {
        let g = germ(&["z1/2 + z2^2", "z2/3"], 4);
        let rep = linearize(&g, DEFAULT_TOL).unwrap();
        assert!(rep.change.max_abs_diff(&germ(&["z1 + 18/7*z2^2", "z2"], 4)).unwrap() < 1e-15);
        assert!(rep.normalized.is_linear());
        assert!(verify_conjugacy(&rep.change, &g, &linear_target(&g)).unwrap() <= 1e-12);
    }

    #[test]
    fn linear_germ_gives_identity() {
        let g = germ(&["z1/2 + z2/5", "z2/3"], 5);
        let rep = linearize(&g, DEFAULT_TOL).unwrap();
        assert_eq!(rep.change, TruncatedMapGerm::identity(2, 5));
    }

    #[test]
    fn resonant_input_is_refused() {
        let g = germ(&["z1/2", "z2/4 + z1^2"], 4);
        assert!(matches!(linearize(&g, DEFAULT_TOL), Err(Error::ResonantInput { .. })));
    }

    #[test]
    fn normal_form_keeps_resonant_monomial() {
        let g = germ(&["z1/2", "z2/4 + z1^2"], 4);
        let rep = normal_form(&g, DEFAULT_TOL).unwrap();
        assert_eq!(rep.normalized, g);
        assert_eq!(rep.kept_monomials, vec![(1, MonomialIndex::new(vec![2, 0]))]);

        let g3 = germ(&["z1/2", "z2/4 + z1^2 + z2^3"], 4);
        let rep3 = normal_form(&g3, DEFAULT_TOL).unwrap();
        assert!(rep3.normalized.max_abs_diff(&g).unwrap() < 1e-14);
        assert_eq!(rep3.kept_monomials, vec![(1, MonomialIndex::new(vec![2, 0]))]);
    }

    #[test]
    fn identity_conjugacy() {
        let g = germ(&["z1/2 + z2^2", "z2/3"], 4);
        assert_eq!(verify_conjugacy(&TruncatedMapGerm::identity(2, 4), &g, &g).unwrap(), 0.0);
    }
}
