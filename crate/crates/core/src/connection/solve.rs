use super::form::{ConnectionForm, EquivariantBundle, Gauge};
use crate::error::{Error, Result, Warning, ILL_CONDITIONED};
use crate::linalg::{schur, Matrix};
use crate::normal_form::linear_powers;
use crate::scalar::{cone, czero, is_zero, Real, C};
use crate::series::{Layout, SeriesMatrix, TruncatedSeries};
use crate::spectral::{assert_contraction, eigen};

/// Order in which the triangular graded systems are swept.
///
/// Both orderings solve the same equations; they differ in the unitary
/// frames used to triangularize the base and fiber actions, hence in the
/// order unknowns are eliminated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SolveOrdering {
    /// Schur frames of `A` and `φ(0)`.
    #[default]
    Primary,
    /// Schur frames of the transposes, with coordinates reversed.
    Reversed,
}

/// The equivariant connection together with its solve diagnostics.
#[derive(Clone, Debug)]
pub struct ConnectionSolution<T: Real> {
    pub connection: ConnectionForm<T>,
    /// `max |γ#θ − θ|` over all coefficients.
    pub fixed_point_residual: f64,
    /// Smallest `|1 − w|` over solved weights.
    pub small_divisor: f64,
    pub warnings: Vec<Warning>,
}

/// Unitary `Q` and upper triangular `T` with `M = Q T Q*`.
fn triangular_frame<T: Real>(m: &Matrix<T>, ordering: SolveOrdering) -> Result<(Matrix<T>, Matrix<T>)> {
    match ordering {
        SolveOrdering::Primary => {
            let s = schur(m)?;
            Ok((s.q, s.t))
        }
        SolveOrdering::Reversed => {
            // M^T = V T' V*  gives  M = conj(V) T'^T V^T; reversing coordinates
            // turns the lower triangular T'^T into an upper triangular factor
            let s = schur(&m.transpose())?;
            let n = m.rows();
            let mut q = Matrix::zeros(n, n);
            let mut t = Matrix::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    q[(i, j)] = s.q[(i, n - 1 - j)].conj();
                    t[(i, j)] = s.t[(n - 1 - j, n - 1 - i)];
                }
            }
            Ok((q, t))
        }
    }
}

/// Triangular data of one graded system.
struct Frame<T: Real> {
    q: Matrix<T>,
    q_adj: Matrix<T>,
    t: Matrix<T>,
    s: Matrix<T>,
    s_adj: Matrix<T>,
    b: Matrix<T>,
    b_inv: Matrix<T>,
    alpha: Vec<C<T>>,
    diagonal: bool,
    powers: Vec<TruncatedSeries<T>>,
    layout: std::sync::Arc<Layout>,
}

impl<T: Real> Frame<T> {
    fn new(a: &Matrix<T>, fiber: &Matrix<T>, cap: usize, ordering: SolveOrdering) -> Result<Self> {
        let (q, t) = triangular_frame(a, ordering)?;
        let (s, b) = triangular_frame(fiber, ordering)?;
        let diagonal = t.max_off_diagonal() == T::zero();
        let powers = if diagonal { Vec::new() } else { linear_powers(&t, cap) };
        Ok(Self {
            q_adj: q.adjoint(),
            s_adj: s.adjoint(),
            b_inv: b.inverse().map_err(|_| Error::SingularCocycle)?,
            alpha: t.diagonal(),
            layout: Layout::get(a.rows(), cap),
            q,
            t,
            s,
            b,
            diagonal,
            powers,
        })
    }

    /// `c̃_j(w) = Σ_l S* c_l(Q w) S Q_{lj}`.
    fn to_frame(&self, c: &ConnectionForm<T>) -> ConnectionForm<T> {
        c.linear_transform(&self.q, &self.s_adj, &self.s)
    }

    fn leave_frame(&self, c: &ConnectionForm<T>) -> ConnectionForm<T> {
        c.linear_transform(&self.q_adj, &self.s, &self.s_adj)
    }

    /// Coefficients of `y(T w)` for a homogeneous `y` given on one degree range.
    fn compose_t(&self, y: &[C<T>], start: usize, mono_alpha: &[C<T>]) -> Vec<C<T>> {
        if self.diagonal {
            return y.iter().zip(mono_alpha).map(|(a, b)| *a * *b).collect();
        }
        let mut out = vec![czero(); y.len()];
        for (p, yp) in y.iter().enumerate() {
            if is_zero(yp) {
                continue;
            }
            let pw = &self.powers[start + p].coeffs[start..start + y.len()];
            for (o, c) in out.iter_mut().zip(pw).skip(p) {
                *o += *yp * *c;
            }
        }
        out
    }
}

struct DegreeOutcome {
    small_divisor: f64,
    singular: usize,
}

/// Solves `(Id − P_d) x = c` on one degree in frame coordinates.
///
/// `P_d(x)_j = B⁻¹ (Σ_{l<=j} x_l(T w) T_{lj}) B`. The system is triangular
/// for fiber rows descending, fiber columns ascending, form index ascending
/// and graded-lex position ascending.
fn solve_degree<T: Real>(
    frame: &Frame<T>,
    c: &ConnectionForm<T>,
    d: usize,
    tol: f64,
    x_out: &mut ConnectionForm<T>,
) -> Result<DegreeOutcome> {
    let n = c.dimension();
    let r = c.rank();
    let layout = &frame.layout;
    let range = layout.degree_range(d);
    let start = range.start;
    let count = range.len();
    let mono_alpha: Vec<C<T>> = range
        .clone()
        .map(|p| {
            layout.monomials[p].exponents().iter().zip(&frame.alpha).fold(cone::<T>(), |acc, (&e, a)| acc * a.powu(e))
        })
        .collect();
    let slice = |s: &TruncatedSeries<T>| -> Vec<C<T>> { s.coeffs[range.clone()].to_vec() };
    let rhs_scale = c.max_abs().to_f64_lossy().max(1.0);
    let consistent = tol * rhs_scale;

    // y_rows[a][v][j]: (X(x_a) B)_v, form index j, for solved rows
    let mut y_rows: Vec<Option<Vec<Vec<Vec<C<T>>>>>> = vec![None; r];
    let mut solution: Vec<Vec<Vec<Vec<C<T>>>>> = vec![vec![vec![Vec::new(); n]; r]; r];
    let mut small = f64::INFINITY;
    let mut singular = 0usize;

    for u in (0..r).rev() {
        let binv_uu = frame.b_inv[(u, u)];
        // X(x_{u b}) for solved columns b of this row
        let mut x_row: Vec<Vec<Vec<C<T>>>> = Vec::with_capacity(r);
        for v in 0..r {
            let kappa = binv_uu * frame.b[(v, v)];
            let mut rhs: Vec<Vec<C<T>>> = (0..n).map(|j| slice(c.form(j).get(u, v))).collect();
            for (a, ya) in y_rows.iter().enumerate().skip(u + 1) {
                let coef = frame.b_inv[(u, a)];
                if is_zero(&coef) {
                    continue;
                }
                let ya = ya.as_ref().expect("rows below are solved first");
                for j in 0..n {
                    for (t, s) in rhs[j].iter_mut().zip(&ya[v][j]) {
                        *t += coef * *s;
                    }
                }
            }
            for (bcol, xb) in x_row.iter().enumerate() {
                let coef = binv_uu * frame.b[(bcol, v)];
                if is_zero(&coef) {
                    continue;
                }
                for j in 0..n {
                    for (t, s) in rhs[j].iter_mut().zip(&xb[j]) {
                        *t += coef * *s;
                    }
                }
            }
            // y = rhs + κ X(y), X(y)_j = Σ_{l<=j} T_{lj} y_l(T w)
            let mut y: Vec<Vec<C<T>>> = Vec::with_capacity(n);
            let mut y_t: Vec<Vec<C<T>>> = Vec::with_capacity(n);
            for j in 0..n {
                let mut bj = std::mem::take(&mut rhs[j]);
                for (l, ylt) in y_t.iter().enumerate() {
                    let coef = kappa * frame.t[(l, j)];
                    if is_zero(&coef) {
                        continue;
                    }
                    for (t, s) in bj.iter_mut().zip(ylt) {
                        *t += coef * *s;
                    }
                }
                let lead = kappa * frame.alpha[j];
                let mut yj = vec![czero(); count];
                for p in 0..count {
                    let w = lead * mono_alpha[p];
                    let diag = cone::<T>() - w;
                    let dn = diag.norm().to_f64_lossy();
                    let value = if dn <= tol {
                        let obstruction = bj[p].norm().to_f64_lossy();
                        if obstruction > consistent {
                            return Err(Error::ResonanceObstruction {
                                degree: d,
                                weight: (w.re.to_f64_lossy(), w.im.to_f64_lossy()),
                                obstruction,
                            });
                        }
                        singular += 1;
                        czero()
                    } else {
                        small = small.min(dn);
                        bj[p] / diag
                    };
                    yj[p] = value;
                    if !frame.diagonal && !is_zero(&value) {
                        let pw = &frame.powers[start + p].coeffs[start..start + count];
                        let scaled = lead * value;
                        for q in (p + 1)..count {
                            let cq = pw[q];
                            if !is_zero(&cq) {
                                bj[q] += scaled * cq;
                            }
                        }
                    }
                }
                y_t.push(frame.compose_t(&yj, start, &mono_alpha));
                y.push(yj);
            }
            let xy: Vec<Vec<C<T>>> = (0..n)
                .map(|j| {
                    let mut acc = vec![czero(); count];
                    for (l, ylt) in y_t.iter().enumerate().take(j + 1) {
                        let tlj = frame.t[(l, j)];
                        if is_zero(&tlj) {
                            continue;
                        }
                        for (t, s) in acc.iter_mut().zip(ylt) {
                            *t += tlj * *s;
                        }
                    }
                    acc
                })
                .collect();
            x_row.push(xy);
            solution[u][v] = y;
        }
        // (X(x_u) B)_v
        let yu: Vec<Vec<Vec<C<T>>>> = (0..r)
            .map(|v| {
                (0..n)
                    .map(|j| {
                        let mut acc = vec![czero(); count];
                        for (bcol, xb) in x_row.iter().enumerate().take(v + 1) {
                            let coef = frame.b[(bcol, v)];
                            if is_zero(&coef) {
                                continue;
                            }
                            for (t, s) in acc.iter_mut().zip(&xb[j]) {
                                *t += coef * *s;
                            }
                        }
                        acc
                    })
                    .collect()
            })
            .collect();
        y_rows[u] = Some(yu);
    }

    let cap = layout.cap;
    let forms: Vec<SeriesMatrix<T>> = (0..n)
        .map(|j| {
            let entries = (0..r)
                .flat_map(|u| (0..r).map(move |v| (u, v)))
                .map(|(u, v)| {
                    let mut s = TruncatedSeries::zero(n, cap);
                    s.coeffs[range.clone()].copy_from_slice(&solution[u][v][j]);
                    s
                })
                .collect();
            SeriesMatrix::from_entries(r, r, entries).expect("square block")
        })
        .collect();
    *x_out = ConnectionForm::from_forms(forms)?;
    Ok(DegreeOutcome { small_divisor: small, singular })
}

/// The unique `θ` with `γ#θ = θ` up to the cap, by graded solves.
pub fn solve_equivariant_connection<T: Real>(e: &EquivariantBundle<T>, tol: f64) -> Result<ConnectionForm<T>> {
    Ok(solve_equivariant_connection_with(e, tol, SolveOrdering::Primary)?.connection)
}

/// [`solve_equivariant_connection`] with an explicit elimination order and diagnostics.
///
/// Every degree `0..=D` is solved, so `θ` is an exact fixed point of the
/// truncated action; its degree-`D` part depends on data beyond the cap of
/// `φ` and carries no geometric meaning.
pub fn solve_equivariant_connection_with<T: Real>(
    e: &EquivariantBundle<T>,
    tol: f64,
    ordering: SolveOrdering,
) -> Result<ConnectionSolution<T>> {
    let a = e.base().linear_part();
    let s = eigen(a)?;
    if !assert_contraction(&s) {
        return Err(Error::NotContraction { max_modulus: s.max_modulus().to_f64_lossy() });
    }
    let n = e.dimension();
    let r = e.rank();
    let cap = e.cap();
    let gauge = Gauge::new(e)?;
    let frame = Frame::new(a, &e.fiber_matrix(), cap, ordering)?;
    let mut theta = ConnectionForm::zero(n, r, cap);
    let mut acc = gauge.inhomogeneous.clone();
    let mut small = f64::INFINITY;
    let mut warnings = Vec::new();
    for d in 0..=cap {
        let c = frame.to_frame(&acc.graded_component(d));
        let mut x = ConnectionForm::zero(n, r, cap);
        let outcome = solve_degree(&frame, &c, d, tol, &mut x)?;
        small = small.min(outcome.small_divisor);
        if outcome.singular > 0 {
            warnings.push(Warning::ResonantButSolvable { degree: d, directions: outcome.singular });
        }
        let piece = frame.leave_frame(&x);
        if d < cap {
            acc = acc.add(&gauge.linear(&piece));
        }
        theta = theta.add(&piece);
    }
    if small < ILL_CONDITIONED {
        warnings.push(Warning::IllConditioned { small_divisor: small });
    }
    let fixed_point_residual = gauge.apply(&theta).max_abs_diff(&theta).to_f64_lossy();
    Ok(ConnectionSolution { connection: theta, fixed_point_residual, small_divisor: small, warnings })
}
