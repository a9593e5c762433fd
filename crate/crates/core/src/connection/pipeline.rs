use super::form::{ConnectionForm, EquivariantBundle};
use super::geometry::{curvature, developing_coordinates, parallel_coframe, torsion};
use super::solve::{solve_equivariant_connection_with, SolveOrdering};
use crate::error::Result;
use crate::normal_form::{linear_target, verify_conjugacy, NormalFormReport};
use crate::scalar::Real;
use crate::series::TruncatedMapGerm;

/// Linearization obtained from the flat torsion-free equivariant connection
/// on the tangent bundle, with the residual of every stage.
#[derive(Clone, Debug)]
pub struct ConnectionReport<T: Real> {
    /// `change` is the developing map `Z`; `normalized` is the linear target.
    pub report: NormalFormReport<T>,
    pub connection: ConnectionForm<T>,
    pub fixed_point_residual: f64,
    pub curvature_residual: f64,
    pub torsion_residual: f64,
    /// Largest `|∂_j Z_k − M_kj|`, i.e. how far the coframe is from closed.
    pub closedness_residual: f64,
    pub conjugacy_residual: f64,
}

/// Tangent bundle → equivariant connection → parallel coframe → developing map.
///
/// Flatness and closedness are enforced with `tol` scaled by the sizes of
/// `θ` and the coframe; curvature and torsion are reported, not enforced.
pub fn linearize_via_connection<T: Real>(g: &TruncatedMapGerm<T>, tol: f64) -> Result<ConnectionReport<T>> {
    let bundle = EquivariantBundle::tangent(g);
    let solution = solve_equivariant_connection_with(&bundle, tol, SolveOrdering::Primary)?;
    let theta = solution.connection;
    let curvature_residual = curvature(&theta).max_abs().to_f64_lossy();
    let torsion_residual = torsion(&theta)?.max_abs().to_f64_lossy();
    let coframe = parallel_coframe(&theta, tol)?;
    // the coframe carries rounding of order |M|·|θ|, not just |M|
    let z = developing_coordinates(&coframe, tol * theta.max_abs().to_f64_lossy().max(1.0))?;
    let closedness_residual = (0..g.dimension())
        .flat_map(|k| (0..g.dimension()).map(move |j| (k, j)))
        .map(|(k, j)| {
            let dz = z.component(k).differentiate(j).truncated(g.cap().saturating_sub(1));
            dz.max_abs_diff(coframe.get(k, j)).map(|x| x.to_f64_lossy()).unwrap_or(f64::INFINITY)
        })
        .fold(0.0f64, f64::max);
    let target = linear_target(g);
    let conjugacy_residual = verify_conjugacy(&z, g, &target)?;
    let report = NormalFormReport {
        change: z,
        normalized: target,
        kept_monomials: Vec::new(),
        max_residual: conjugacy_residual,
        small_divisor: solution.small_divisor,
        warnings: solution.warnings,
    };
    Ok(ConnectionReport {
        report,
        connection: theta,
        fixed_point_residual: solution.fixed_point_residual,
        curvature_residual,
        torsion_residual,
        closedness_residual,
        conjugacy_residual,
    })
}
