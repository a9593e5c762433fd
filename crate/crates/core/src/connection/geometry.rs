use super::form::ConnectionForm;
use crate::error::{dims_mismatch, Error, Result};
use crate::scalar::{creal, Real};
use crate::series::{SeriesMatrix, TruncatedMapGerm, TruncatedSeries};

/// `F = dθ + θ∧θ`, stored for `l < m` as `F_{lm} = ∂_lθ_m − ∂_mθ_l + θ_lθ_m − θ_mθ_l`.
///
/// Degrees `>= D − 1` are discarded: they would involve the top degree of
/// `θ`, whose derivatives fall outside the truncation.
#[derive(Clone, Debug)]
pub struct CurvatureForm<T: Real> {
    n: usize,
    components: Vec<SeriesMatrix<T>>,
}

impl<T: Real> CurvatureForm<T> {
    fn slot(&self, l: usize, m: usize) -> usize {
        // row-major index into the strict upper triangle
        l * (2 * self.n - l - 1) / 2 + (m - l - 1)
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    /// `F_{lm}` for `l < m`.
    pub fn component(&self, l: usize, m: usize) -> &SeriesMatrix<T> {
        assert!(l < m && m < self.n, "curvature is stored for l < m");
        &self.components[self.slot(l, m)]
    }

    /// `F_{lm}` for any pair; antisymmetry is applied on the fly.
    pub fn get(&self, l: usize, m: usize) -> SeriesMatrix<T> {
        use std::cmp::Ordering::*;
        match l.cmp(&m) {
            Less => self.component(l, m).clone(),
            Greater => self.component(m, l).scale(-crate::scalar::cone::<T>()),
            Equal => {
                let f = self.components.first().map(|c| (c.rows(), c.dimension(), c.cap()));
                let (r, n, cap) = f.unwrap_or((1, self.n, 0));
                SeriesMatrix::zeros(r, r, n, cap)
            }
        }
    }

    pub fn max_abs(&self) -> T {
        self.components.iter().fold(T::zero(), |acc, c| acc.max(c.max_abs()))
    }
}

pub fn curvature<T: Real>(theta: &ConnectionForm<T>) -> CurvatureForm<T> {
    let n = theta.dimension();
    let cap = theta.cap();
    let mut components = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for l in 0..n {
        for m in (l + 1)..n {
            let (a, b) = (theta.form(l), theta.form(m));
            let f = b.differentiate(l).sub(&a.differentiate(m)).add(&a.mul(b)).sub(&b.mul(a));
            components.push(f.map(|s| drop_from(s, cap.saturating_sub(1))));
        }
    }
    CurvatureForm { n, components }
}

/// Zeroes degrees `>= d`.
fn drop_from<T: Real>(s: &TruncatedSeries<T>, d: usize) -> TruncatedSeries<T> {
    if d == 0 {
        TruncatedSeries::zero(s.dimension(), s.cap())
    } else {
        s.truncated(d - 1)
    }
}

/// `T^i_{lm} = (θ_l)_{im} − (θ_m)_{il}`, for a connection on the tangent bundle.
#[derive(Clone, Debug)]
pub struct TorsionTensor<T: Real> {
    n: usize,
    /// `entries[i][l][m]`.
    entries: Vec<TruncatedSeries<T>>,
}

impl<T: Real> TorsionTensor<T> {
    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, l: usize, m: usize) -> &TruncatedSeries<T> {
        &self.entries[(i * self.n + l) * self.n + m]
    }

    pub fn max_abs(&self) -> T {
        self.entries.iter().fold(T::zero(), |acc, s| acc.max(s.max_abs()))
    }
}

pub fn torsion<T: Real>(theta: &ConnectionForm<T>) -> Result<TorsionTensor<T>> {
    let n = theta.dimension();
    if theta.rank() != n {
        return Err(Error::RankMismatch { expected: n, found: theta.rank() });
    }
    let cap = theta.cap();
    let mut entries = vec![TruncatedSeries::zero(n, cap); n * n * n];
    for i in 0..n {
        for l in 0..n {
            for m in (l + 1)..n {
                let t = theta.form(l).get(i, m) - theta.form(m).get(i, l);
                let t = drop_from(&t, cap);
                entries[(i * n + m) * n + l] = -&t;
                entries[(i * n + l) * n + m] = t;
            }
        }
    }
    Ok(TorsionTensor { n, entries })
}

/// Parallel coframe of a flat connection on the tangent bundle.
///
/// Row `k` of the returned matrix `M` holds the coefficients of
/// `ω^(k) = Σ_j M_kj dz_j`; `M` solves `dM = M θ` with `M(0) = I`. Degrees
/// up to `D − 1` are computed. The solve is inconsistent exactly where the
/// curvature fails to vanish; the mismatch is reported as `NotFlat` once it
/// exceeds `tol · max(1, |θ|) · max(1, |M|)`.
pub fn parallel_coframe<T: Real>(theta: &ConnectionForm<T>, tol: f64) -> Result<SeriesMatrix<T>> {
    let n = theta.dimension();
    if theta.rank() != n {
        return Err(Error::RankMismatch { expected: n, found: theta.rank() });
    }
    let cap = theta.cap();
    let mut m = SeriesMatrix::identity(n, n, cap);
    let mut residual = 0.0f64;
    for d in 0..cap.saturating_sub(1) {
        // g_l = (M θ_l)^{[d]} prescribes ∂_l M^{[d+1]}
        let g: Vec<SeriesMatrix<T>> = (0..n).map(|l| m.mul(theta.form(l)).graded_component(d)).collect();
        let mut next = SeriesMatrix::zeros(n, n, n, cap);
        for (l, gl) in g.iter().enumerate() {
            next = next.add(&gl.map(|s| s.shift_up(l)));
        }
        let next = next.scale(creal(T::one() / T::from_usize(d + 1).unwrap()));
        for (l, gl) in g.iter().enumerate() {
            residual = residual.max(next.differentiate(l).sub(gl).max_abs().to_f64_lossy());
        }
        m = m.add(&next);
    }
    // the consistency defect is a difference of products of M and θ
    let scale = theta.max_abs().to_f64_lossy().max(1.0) * m.max_abs().to_f64_lossy().max(1.0);
    let tolerance = tol * scale;
    if residual > tolerance {
        return Err(Error::NotFlat { residual, tolerance });
    }
    Ok(m)
}

/// Integrates a closed coframe: `Z_k` with `∂_j Z_k = M_kj` and `Z(0) = 0`.
///
/// Each monomial `μ` of `Z_k` receives one estimate `M_kj[μ − e_j] / μ_j`
/// per variable it contains; the estimates are averaged and their largest
/// spread is the closedness residual, tested against `tol · max(1, |M|)`.
pub fn developing_coordinates<T: Real>(m: &SeriesMatrix<T>, tol: f64) -> Result<TruncatedMapGerm<T>> {
    let n = m.dimension();
    if m.rows() != n || m.cols() != n {
        return Err(dims_mismatch(format!("{n}x{n} coframe"), format!("{}x{}", m.rows(), m.cols())));
    }
    let cap = m.cap();
    let scale = m.max_abs().to_f64_lossy().max(1.0);
    let layout = m.get(0, 0).layout.clone();
    let mut residual = 0.0f64;
    let mut components = Vec::with_capacity(n);
    for k in 0..n {
        let mut z = TruncatedSeries::zero(n, cap);
        for p in layout.degree_start[1.min(cap + 1)]..layout.len() {
            let mu = &layout.monomials[p];
            let mut estimates = Vec::with_capacity(n);
            for j in 0..n {
                let e = mu.exponents()[j];
                if e == 0 {
                    continue;
                }
                let lower = mu.lowered(j).expect("exponent is positive");
                estimates.push(m.get(k, j).coeff(&lower) / creal(T::from_u32(e).unwrap()));
            }
            let count = T::from_usize(estimates.len()).unwrap();
            let mean = estimates.iter().fold(crate::scalar::czero::<T>(), |a, b| a + b) / creal(count);
            for e in &estimates {
                residual = residual.max((e - mean).norm().to_f64_lossy());
            }
            z.coeffs[p] = mean;
        }
        components.push(z.cleaned());
    }
    let tolerance = tol * scale;
    if residual > tolerance {
        return Err(Error::NotClosed { residual, tolerance });
    }
    TruncatedMapGerm::new(components)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::scalar::C;
    use crate::series::parse_series;

    fn constant_form(mats: &[Matrix<f64>], cap: usize) -> ConnectionForm<f64> {
        let n = mats.len();
        ConnectionForm::from_forms(mats.iter().map(|m| SeriesMatrix::constant(m, n, cap)).collect()).unwrap()
    }

    #[test]
    fn zero_connection_is_flat_and_torsion_free() {
        let theta = ConnectionForm::<f64>::zero(3, 3, 4);
        assert_eq!(curvature(&theta).max_abs(), 0.0);
        assert_eq!(torsion(&theta).unwrap().max_abs(), 0.0);
        let m = parallel_coframe(&theta, 1e-12).unwrap();
        assert_eq!(m, SeriesMatrix::identity(3, 3, 4));
        let z = developing_coordinates(&m, 1e-12).unwrap();
        assert_eq!(z, TruncatedMapGerm::identity(3, 4));
    }

    #[test]
    fn torsion_needs_square_rank() {
        let theta = ConnectionForm::<f64>::zero(2, 3, 3);
        assert!(matches!(torsion(&theta), Err(Error::RankMismatch { expected: 2, found: 3 })));
    }

    #[test]
    fn commuting_constant_form_is_flat() {
        // θ_1 = N, θ_2 = N² with N nilpotent: dθ = 0 and the matrices commute
        let nil = Matrix::<f64>::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        let theta = constant_form(&[nil.clone(), nil.mul(&nil)], 5);
        assert!(curvature(&theta).max_abs() < 1e-15);
        let m = parallel_coframe(&theta, 1e-12).unwrap();
        // M = exp(z1 N) = I + z1 N
        assert_eq!(m.get(0, 1).coeff(&crate::series::MonomialIndex::new(vec![1, 0])), C::new(1.0, 0.0));
        assert!(m.get(0, 1).max_abs_diff(&parse_series("z1", 2, 5).unwrap()).unwrap() < 1e-15);
    }

    #[test]
    fn non_commuting_constant_form_is_not_flat() {
        let a = Matrix::<f64>::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        let b = a.transpose();
        let theta = constant_form(&[a, b], 4);
        let f = curvature(&theta);
        // F_12 = [a, b] = diag(1, -1)
        assert!((f.component(0, 1).get(0, 0).constant_term().re - 1.0).abs() < 1e-15);
        assert!(f.get(1, 0).get(1, 1).constant_term().re - 1.0 < 1e-15);
        assert!(matches!(parallel_coframe(&theta, 1e-9), Err(Error::NotFlat { .. })));
    }

    #[test]
    fn exact_coframe_integrates() {
        // ω_1 = d(z1 + z2^2), ω_2 = dz2
        let p = |s: &str| parse_series::<f64>(s, 2, 4).unwrap();
        let m = SeriesMatrix::from_entries(2, 2, vec![p("1"), p("2*z2"), p("0"), p("1")]).unwrap();
        let z = developing_coordinates(&m, 1e-12).unwrap();
        assert!(z.component(0).max_abs_diff(&p("z1 + z2^2")).unwrap() < 1e-15);
        assert!(z.component(1).max_abs_diff(&p("z2")).unwrap() < 1e-15);
    }

    #[test]
    fn non_closed_coframe_is_rejected() {
        // z2 dz1 is not closed
        let p = |s: &str| parse_series::<f64>(s, 2, 3).unwrap();
        let m = SeriesMatrix::from_entries(2, 2, vec![p("1 + z2"), p("0"), p("0"), p("1")]).unwrap();
        assert!(matches!(developing_coordinates(&m, 1e-9), Err(Error::NotClosed { .. })));
    }
}
