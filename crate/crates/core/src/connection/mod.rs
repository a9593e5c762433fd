//! Equivariant connections on trivial bundles over `C^n` and the
//! linearization they induce: a flat torsion-free connection on the tangent
//! bundle has a parallel closed coframe, whose primitives linearize the germ.

mod form;
mod geometry;
mod pipeline;
mod solve;

pub use form::{gauge_pullback, ConnectionForm, EquivariantBundle};
pub use geometry::{curvature, developing_coordinates, parallel_coframe, torsion, CurvatureForm, TorsionTensor};
pub use pipeline::{linearize_via_connection, ConnectionReport};
pub use solve::{solve_equivariant_connection, solve_equivariant_connection_with, ConnectionSolution, SolveOrdering};

#[cfg(test)]
mod tests;
