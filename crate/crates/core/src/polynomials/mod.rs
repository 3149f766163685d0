//! Polynomial spaces on triangles: orthonormal modal bases, affine reference
//! maps and quadrature.

mod basis;
mod quadrature;

pub use basis::{AffineMap, SimplexBasis, MAX_DEGREE};
pub use quadrature::{segment_rule, triangle_rule, QuadratureRule, MAX_ORDER};
