//! Computational toolkit for planar self-affine sets: dyadic covering
//! numbers, affine iterated function systems, 2×2 matrix-semigroup
//! analysis, Assouad/box/projection/tube dimension estimators, the
//! Furstenberg pigeonhole descent and its tangent constructions, and a
//! benchmark harness for carpet-type families with closed-form dimensions.

pub mod dyadic;
pub mod error;
pub mod linalg;
pub mod ifs;
pub mod semigroup;
pub mod dimension;
pub mod tangent;
pub mod bench;

pub use error::{Error, Result};
