//! Truncated multivariate power series over complex coefficients.

mod germ;
mod matrix;
mod monomial;
mod parse;
#[allow(clippy::module_inception)]
mod series;
mod tensor;

pub(crate) use germ::{apply_matrix, linear_components};
pub use germ::{compose_all, compose_germs, invert_germ, linear_part_of, TruncatedMapGerm};
pub use matrix::SeriesMatrix;
#[cfg(test)]
pub(crate) use monomial::monomials_of_degree;
pub(crate) use monomial::Layout;
pub use monomial::MonomialIndex;
pub use parse::{parse_germ, parse_series};
pub use series::TruncatedSeries;
pub use tensor::TensorSeries;
