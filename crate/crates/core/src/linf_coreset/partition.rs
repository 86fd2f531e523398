// SPDX-License-Identifier: Apache-2.0

use crate::error::{Error, Result};
use crate::geometry::{AffineFlat, PointSet};

/// Points on the anchor flat (or at the anchor point) go to cell 0 when
/// their distance is at most this.
pub const ON_FLAT_TOL: f64 = 1e-9;

/// Dyadic distance bands around an anchor flat.
///
/// `cells[0]` holds the points on the anchor. For `i >= 1`, `cells[i]` holds
/// the points whose distance lies in `[thresholds[i-1], thresholds[i])`.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelPartition {
    pub cells: Vec<Vec<usize>>,
    pub thresholds: Vec<f64>,
    pub anchor_flat: AffineFlat,
}

impl LevelPartition {
    /// The band `[lo, hi)` of cell `i >= 1`.
    pub fn band(&self, i: usize) -> Option<(f64, f64)> {
        if i == 0 || i >= self.thresholds.len() {
            return None;
        }
        Some((self.thresholds[i - 1], self.thresholds[i]))
    }
}

fn grid_delta(points: &PointSet) -> Result<u64> {
    points.grid_delta().ok_or(Error::GridRequired)
}

/// Bands of distance to the single point `v0`: `[1,2), [2,4), ...`.
pub fn partition_level0(points: &PointSet, members: &[usize], v0: &[f64]) -> Result<LevelPartition> {
    grid_delta(points)?;
    let anchor = AffineFlat::point(v0.to_vec());
    if v0.len() != points.dim() {
        return Err(Error::DimensionMismatch {
            expected: points.dim(),
            got: v0.len(),
        });
    }
    bands(points, members, anchor, 1.0)
}

/// Bands of distance to `anchor`, starting at `(d Δ)^{-c_exp j}`.
pub fn partition_levelt(
    points: &PointSet,
    members: &[usize],
    anchor: &AffineFlat,
    j: usize,
    c_exp: f64,
) -> Result<LevelPartition> {
    let delta = grid_delta(points)?;
    if anchor.ambient_dim() != points.dim() {
        return Err(Error::DimensionMismatch {
            expected: points.dim(),
            got: anchor.ambient_dim(),
        });
    }
    if !(c_exp > 0.0) {
        return Err(Error::InvalidArgument(format!("c_exp = {c_exp} must be positive")));
    }
    bands(points, members, anchor.clone(), band_floor(points.dim(), delta, j, c_exp))
}

/// Smallest nonzero distance the level-t bands can represent.
pub fn band_floor(d: usize, delta: u64, j: usize, c_exp: f64) -> f64 {
    ((d as f64) * (delta.max(1) as f64)).powf(-c_exp * j as f64)
}

/// Upper bound on the number of cells (including cell 0) produced by
/// [`partition_levelt`] for grid points in `[-Δ, Δ]^d`.
pub fn band_count_bound(d: usize, delta: u64, j: usize, c_exp: f64) -> usize {
    let top = 2.0 * delta as f64 * (d as f64).sqrt();
    (top / band_floor(d, delta, j, c_exp)).log2().ceil() as usize + 2
}

fn bands(points: &PointSet, members: &[usize], anchor: AffineFlat, floor: f64) -> Result<LevelPartition> {
    let mut cells: Vec<Vec<usize>> = vec![Vec::new()];
    for &i in members {
        let dist = anchor.dist_unchecked(points.point(i));
        if dist <= ON_FLAT_TOL {
            cells[0].push(i);
            continue;
        }
        if dist < floor {
            return Err(Error::LowerBoundViolation { distance: dist, floor });
        }
        // smallest band index with dist < floor·2^band; ties go up
        let mut band = 1usize;
        let mut hi = 2.0 * floor;
        while dist >= hi {
            hi *= 2.0;
            band += 1;
        }
        if cells.len() <= band {
            cells.resize(band + 1, Vec::new());
        }
        cells[band].push(i);
    }
    let mut thresholds = Vec::with_capacity(cells.len());
    let mut t = floor;
    for _ in 0..cells.len() {
        thresholds.push(t);
        t *= 2.0;
    }
    Ok(LevelPartition {
        cells,
        thresholds,
        anchor_flat: anchor,
    })
}
