// SPDX-License-Identifier: Apache-2.0

//! Linear-algebra and convex-geometry primitives.

mod flat;
mod hull;
mod lowner;
mod point_set;

pub use flat::{
    affine_span, affine_span_of, best_fit_flat, flat_through_points, random_orthonormal, AffineFlat,
};
pub use hull::{caratheodory_reduce, hull_membership, ConvexCertificate};
pub(crate) use hull::caratheodory_rows;
pub(crate) use lowner::round_rows;
pub use lowner::{
    ellipsoid_axis_vertices, lowner_rounding, lowner_rounding_with, Ellipsoid, RoundingConfig,
};
pub use point_set::PointSet;

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
