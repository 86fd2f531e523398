// SPDX-License-Identifier: Apache-2.0

//! Coresets for integer (j,k)-projective clustering and M-estimator regression.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`]: point sets, affine flats, ellipsoidal rounding of convex
//!   hulls and Carathéodory support extraction.
//! * [`linf_coreset`]: L∞ coresets, built from the Löwner/Carathéodory
//!   construction for a single flat and by dyadic distance partitioning for
//!   `k >= 2` flats, plus a randomized query tester.
//! * [`sensitivity`]: peeling L∞ coresets into sensitivity scores and
//!   sampling a weighted L2 coreset.
//! * [`losses`]: the M-estimator family with its L∞ guarantee factors.
//! * [`solver`]: EM-style projective clustering and IRLS regression used to
//!   evaluate coresets downstream.
//! * [`bench`]: datasets and the coreset-vs-uniform experiment harness.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod error;
pub mod geometry;
pub mod linf_coreset;
pub mod losses;
mod par;
pub mod rng;
pub mod sensitivity;
pub mod solver;

pub use error::{Error, Result};
pub use geometry::{AffineFlat, ConvexCertificate, Ellipsoid, PointSet};
pub use linf_coreset::{JkConfig, LinfCoreset};
pub use losses::{LossKind, LossSpec};
pub use sensitivity::{SensitivityMap, WeightedCoreset};
