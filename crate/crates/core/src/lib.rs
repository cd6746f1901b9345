//! Metric Lie algebras: Ricci curvature, pre-Einstein derivations,
//! nilsolitons, Einstein extensions and torus orbit tests on brackets.
//!
//! Structure constants are generic over [`Scalar`]; exact validation runs on
//! [`ExactAlgebra`] and spectral work on [`RealAlgebra`].

extern crate openblas_src;

pub mod curvature;
pub mod derivations;
pub mod error;
pub mod extension;
pub mod gauss;
pub mod laws;
pub mod lie;
pub mod linalg;
pub mod lp;
pub mod models;
pub mod orbit;
pub mod scalar;
pub mod soliton;

pub use error::{Error, Result};
pub use lie::{BracketEntry, LieAlgebra, SolvableDecomposition};
pub use scalar::Scalar;

pub type Rational = num_rational::BigRational;
pub type ExactAlgebra = LieAlgebra<Rational>;
pub type RealAlgebra = LieAlgebra<f64>;
