// SPDX-License-Identifier: Apache-2.0

//! L∞ coresets for (j,k)-projective clustering.
//!
//! The single-flat construction rounds the convex hull of the input (in its
//! intrinsic coordinates) by an approximate Löwner ellipsoid, takes the axis
//! vertices of the `1/j` dilation together with the center, and keeps a
//! Carathéodory support for each of them. Because the distance to any flat is
//! a norm of an affine map, its maximum over the hull is controlled by its
//! maximum over those supports.
//!
//! For `k >= 2` flats the input must lie on an integer grid; the set is
//! partitioned into dyadic distance bands around a growing sequence of
//! anchor points, and a `(j, k−1)` coreset is built per band
//! ([`coreset_jk`]).

mod partition;
mod recursive;
mod verify;

pub use partition::{band_count_bound, partition_level0, partition_levelt, LevelPartition};
pub use recursive::{coreset_jk, BaseCase, JkConfig};
pub use verify::{
    verify_cylinder_coverage, verify_linf_ratio, CoverageReport, RatioReport, VerifyConfig,
};

use crate::error::{Error, Result};
use crate::geometry::{
    affine_span_of, caratheodory_rows, ellipsoid_axis_vertices, flat_through_points, round_rows,
    PointSet,
};

/// Axis vertices are pulled in by this relative margin so that rounding
/// error in the ellipsoid never pushes them outside the hull.
const VERTEX_SLACK: f64 = 1e-6;

/// A subset of a point set, by index, with its proven max-distance factor.
#[derive(Debug, Clone, PartialEq)]
pub struct LinfCoreset {
    indices: Vec<usize>,
    j: usize,
    k: usize,
    guarantee_factor: f64,
    base_residual: f64,
}

impl LinfCoreset {
    pub(crate) fn from_parts(indices: Vec<usize>, j: usize, k: usize, guarantee_factor: f64) -> Self {
        Self {
            indices,
            j,
            k,
            guarantee_factor,
            base_residual: 0.0,
        }
    }

    /// Sorted, unique indices into the source set.
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn j(&self) -> usize {
        self.j
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Bound on `max_P dist^z / max_C dist^z` over all query flats. For
    /// `k >= 2` the construction only carries an unquantified constant and
    /// this is `f64::INFINITY`.
    pub fn guarantee_factor(&self) -> f64 {
        self.guarantee_factor
    }

    /// Largest distance from an input point to the flat it was projected on
    /// before construction; zero unless [`BaseCase::BestFitProjection`] was
    /// used on off-flat data.
    pub fn base_residual(&self) -> f64 {
        self.base_residual
    }
}

/// Parameters of the single-flat construction.
#[derive(Debug, Clone)]
pub struct HullConfig {
    /// Rounding factor for the vertex dilation; defaults to the intrinsic
    /// dimension of the hull.
    pub alpha: Option<f64>,
    pub rounding_tol: f64,
    pub max_iter: usize,
    /// Distance exponent used for the reported guarantee.
    pub z: f64,
}

impl Default for HullConfig {
    fn default() -> Self {
        Self {
            alpha: None,
            rounding_tol: 1e-7,
            max_iter: 100_000,
            z: 1.0,
        }
    }
}

/// `2^{z+1} j^{1.5 z}`.
pub fn single_flat_factor(j: usize, z: f64) -> f64 {
    2f64.powf(z + 1.0) * (j as f64).powf(1.5 * z)
}

/// Coreset of a point set lying on a `j`-flat.
///
/// At most `2(j+1)²` points; for every query flat and `z >= 1`,
/// `max_P dist^z <= 2^{z+1} j^{1.5z} · max_C dist^z`.
pub fn coreset_j1(points: &PointSet, j: usize, cfg: &HullConfig) -> Result<LinfCoreset> {
    let d = points.dim();
    if j == 0 || j >= d {
        return Err(Error::InvalidArgument(format!(
            "j = {j} must lie in [1, {}]",
            d.saturating_sub(1)
        )));
    }
    check_z(cfg.z)?;
    flat_through_points(points, j, None)?;
    let members: Vec<usize> = (0..points.len()).collect();
    let (indices, _) = hull_coreset(points, &members, cfg)?;
    Ok(LinfCoreset {
        indices,
        j,
        k: 1,
        guarantee_factor: single_flat_factor(j, cfg.z),
        base_residual: 0.0,
    })
}

pub(crate) fn check_z(z: f64) -> Result<()> {
    if z >= 1.0 && z.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("distance exponent z = {z} must be >= 1")))
    }
}

/// The Löwner/Carathéodory construction on `points[members]`, carried out in
/// the intrinsic coordinates of their affine hull. Returns the sorted
/// coreset indices and the hull dimension.
pub(crate) fn hull_coreset(
    points: &PointSet,
    members: &[usize],
    cfg: &HullConfig,
) -> Result<(Vec<usize>, usize)> {
    let first = *members
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty member set".into()))?;
    if members.len() == 1 {
        return Ok((vec![first], 0));
    }
    let span = affine_span_of(points, members);
    let m = span.dim();
    if m == 0 {
        return Ok((vec![first], 0));
    }
    let coords: Vec<Vec<f64>> = members.iter().map(|&i| span.coords(points.point(i))).collect();

    let mut picked: Vec<usize> = if m == 1 {
        // the rounding of a segment is the segment itself: both axis
        // vertices are the endpoints and they also carry the center
        let (mut lo, mut hi) = (0, 0);
        for (a, c) in coords.iter().enumerate() {
            if c[0] < coords[lo][0] {
                lo = a;
            }
            if c[0] > coords[hi][0] {
                hi = a;
            }
        }
        vec![lo, hi]
    } else {
        let rows: Vec<&[f64]> = coords.iter().map(Vec::as_slice).collect();
        let raw = round_rows(&rows, cfg.rounding_tol, cfg.max_iter)?;
        let alpha = cfg.alpha.unwrap_or(m as f64);
        if alpha < 1.0 {
            return Err(Error::InvalidArgument(format!("alpha {alpha} must be at least 1")));
        }
        let center = raw.ellipsoid.center().to_vec();
        let mut targets =
            ellipsoid_axis_vertices(&raw.ellipsoid, 1.0 / (alpha * (1.0 + VERTEX_SLACK)))?;
        targets.push(center.clone());
        let mut picked = Vec::with_capacity(targets.len() * (m + 1));
        for s in targets {
            picked.extend(support_for(&rows, &s, &center)?);
        }
        picked
    };
    let mut out: Vec<usize> = picked.drain(..).map(|a| members[a]).collect();
    out.sort_unstable();
    out.dedup();
    Ok((out, m))
}

/// Carathéodory support of `s`, pulling it toward `center` if numerical
/// error put it marginally outside the hull.
fn support_for(rows: &[&[f64]], s: &[f64], center: &[f64]) -> Result<Vec<usize>> {
    let mut target = s.to_vec();
    let mut last = None;
    for _ in 0..20 {
        match caratheodory_rows(rows, &target) {
            Ok((support, _)) => return Ok(support),
            Err(e @ Error::NotInHull { .. }) => {
                last = Some(e);
                for (t, c) in target.iter_mut().zip(center) {
                    *t = c + 0.99 * (*t - c);
                }
            }
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("at least one attempt"))
}
