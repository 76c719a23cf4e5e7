//! Constraint analysis for circuit Lagrangians.
//!
//! Starting from a Lagrangian with quadratic velocity structure, Josephson
//! cosine potentials, and velocity-coordinate couplings, this crate extracts
//! the primary constraints from the singular kinetic matrix, closes the
//! constraint set under time persistence, classifies first- and second-class
//! constraints, builds Dirac brackets, fixes gauges, reduces to canonical
//! Darboux pairs, emits the quantum commutator table, and integrates the
//! reduced dynamics.
//!
//! All symbolic work is exact: coefficients live in an ordered exact field
//! (see [`scalar::Scalar`]), instantiated by default with arbitrary-precision
//! rationals. Floating point enters only in [`dynamics`].

pub mod dirac;
pub mod dynamics;
pub mod error;
pub mod expr;
pub mod legendre;
pub mod linalg;
pub mod parser;
pub mod quantize;
pub mod reduce;
pub mod report;
pub mod scalar;

pub use error::{Error, Result};

/// Default exact coefficient type.
pub type Rat = num_rational::BigRational;

/// Default float type for numerical integration.
pub type RealNum = f64;

/// Expression over the default scalar.
pub type Expr = expr::Expression<Rat>;

/// Affine form over the default scalar.
pub type Affine = expr::AffineForm<Rat>;

/// Exact matrix over the default scalar.
pub type RatMatrix = linalg::Matrix<Rat>;

/// Builds the default rational `n/d`.
pub fn rat(n: i64, d: i64) -> Rat {
    use scalar::Scalar as _;
    Rat::ratio(n, d)
}
