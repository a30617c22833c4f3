//! Hoeffding decompositions, multiplicity projections, martingale difference
//! families, Hardy/BMO norms and decoupling functionals on finite product
//! probability spaces.

pub mod decoupling;
pub mod error;
pub mod harness;
pub mod hoeffding;
pub mod json;
pub mod martingale;
pub mod sample;
pub mod scalar;
pub mod space;
pub mod stats;
pub mod tensor;
pub mod torus;
pub mod walsh;

pub use error::{Error, Result};
pub use scalar::{Rational, Scalar, ScalarMode};
pub use space::{CoordSubset, FiniteFactor, ProductSpace};
pub use tensor::{CoordOp, Exponent, TensorFunction};
