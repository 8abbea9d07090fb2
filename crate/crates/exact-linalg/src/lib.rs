//! Exact linear algebra over the rationals, the Gaussian rationals and
//! prime fields `F_p` (`p < 2^31`).
//!
//! Everything is computed exactly: rationals use arbitrary-precision
//! arithmetic, prime-field elements are canonical residues.  Subspaces are
//! kept in reduced row echelon form so that structural equality coincides
//! with mathematical equality.

pub mod matrix;
pub mod scalar;
pub mod solve;
pub mod subspace;

pub use matrix::Matrix;
pub use scalar::{FieldSpec, Scalar, ScalarError};
pub use solve::{solve_linear, AffineSolutionSet};
pub use subspace::{image, kernel, preimage, LinalgError, Subspace};
