//! Holomorphic contractions of `C^n` in truncated power series.
//!
//! The crate linearizes non-resonant contractions in two independent ways:
//! by the classical graded homological equation ([`normal_form`]) and by
//! the flat equivariant connection on the tangent bundle ([`connection`]).
//! [`cohomology`] counts invariant sections of tensor bundles on diagonal
//! linear Hopf manifolds.
//!
//! Everything is generic over the real scalar `T` (`f32` or `f64`) with
//! complex coefficients; the aliases below fix `T = f64`.

pub mod cohomology;
pub mod connection;
pub mod error;
pub mod linalg;
pub mod normal_form;
pub mod scalar;
pub mod series;
pub mod spectral;

pub use error::{Error, Result, Warning};
pub use scalar::{Real, C};

pub type Complex64 = C<f64>;
pub type Series = series::TruncatedSeries<f64>;
pub type Germ = series::TruncatedMapGerm<f64>;
pub type SeriesMatrix = series::SeriesMatrix<f64>;
pub type Matrix = linalg::Matrix<f64>;
pub type Connection = connection::ConnectionForm<f64>;
pub type Bundle = connection::EquivariantBundle<f64>;

pub type Series32 = series::TruncatedSeries<f32>;
pub type Germ32 = series::TruncatedMapGerm<f32>;
pub type Matrix32 = linalg::Matrix<f32>;
