// SPDX-License-Identifier: Apache-2.0

use crate::error::{Error, Result};
use crate::geometry::{affine_span, random_orthonormal, AffineFlat, PointSet};
use crate::{par, rng};
use rand::seq::index::sample;
use rand::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    /// Expansion factor allowed for the cylinder coverage check.
    pub xi: f64,
    pub num_queries: usize,
    pub rng_seed: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            xi: 32.0,
            num_queries: 1000,
            rng_seed: 0,
        }
    }
}

impl VerifyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.xi >= 1.0) {
            return Err(Error::InvalidArgument(format!("xi = {} must be >= 1", self.xi)));
        }
        if self.num_queries == 0 {
            return Err(Error::InvalidArgument("num_queries must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct RatioReport {
    /// `max_H (max_P dist^z) / (max_C dist^z)`; `0/0` counts as 1.
    pub max_ratio: f64,
    pub queries: usize,
    /// The query attaining `max_ratio`.
    pub worst: Option<AffineFlat>,
}

#[derive(Debug, Clone)]
pub struct CoverageReport {
    pub families: usize,
    /// Families whose `xi`-expansion missed some input point.
    pub violations: usize,
    /// Largest expansion any family needed to cover the input.
    pub worst_expansion: f64,
}

fn check_inputs(points: &PointSet, coreset: &[usize], j: usize) -> Result<()> {
    if let Some(&bad) = coreset.iter().find(|&&i| i >= points.len()) {
        return Err(Error::InvalidArgument(format!(
            "coreset index {bad} out of range for {} points",
            points.len()
        )));
    }
    if coreset.is_empty() {
        return Err(Error::InvalidArgument("empty coreset".into()));
    }
    if j >= points.dim() {
        return Err(Error::InvalidArgument(format!(
            "query dimension {j} must be below {}",
            points.dim()
        )));
    }
    Ok(())
}

fn zero_tol(points: &PointSet) -> f64 {
    1e-9 * (1.0 + points.max_abs())
}

/// Random `j`-flat through a uniform point of the bounding box.
fn random_flat(points: &PointSet, j: usize, rng: &mut rng::Rng) -> AffineFlat {
    let offset: Vec<f64> = points
        .bounding_box()
        .into_iter()
        .map(|(lo, hi)| if hi > lo { rng.random_range(lo..=hi) } else { lo })
        .collect();
    AffineFlat::new(random_orthonormal(points.dim(), j, rng), offset).expect("orthonormal frame")
}

/// `j`-flat through the given points, padded with random directions.
fn flat_through(points: &PointSet, through: &[usize], j: usize, rng: &mut rng::Rng) -> AffineFlat {
    let rows: Vec<&[f64]> = through.iter().map(|&i| points.point(i)).collect();
    let span = affine_span(&rows).expect("nonempty");
    let span = if span.dim() > j {
        // more points than the flat can hold exactly; keep the first j+1
        affine_span(&rows[..j + 1]).expect("nonempty")
    } else {
        span
    };
    span.extended_to(j, random_orthonormal(points.dim(), j, rng))
}

fn pick(pool: &[usize], count: usize, rng: &mut rng::Rng) -> Vec<usize> {
    let count = count.min(pool.len());
    sample(rng, pool.len(), count).into_iter().map(|a| pool[a]).collect()
}

fn max_dist(points: &PointSet, idx: impl Iterator<Item = usize>, h: &AffineFlat) -> f64 {
    idx.map(|i| h.dist_unchecked(points.point(i))).fold(0.0, f64::max)
}

/// Empirical L∞ ratio over random and adversarial query flats.
///
/// Queries cycle through three kinds: Haar-random flats through a point of
/// the bounding box, flats through points of `P∖C`, and flats through a
/// point of `C` plus further points of `P`.
pub fn verify_linf_ratio(
    points: &PointSet,
    coreset: &[usize],
    j: usize,
    z: f64,
    num_queries: usize,
    rng_seed: u64,
) -> Result<RatioReport> {
    check_inputs(points, coreset, j)?;
    let mut in_c = vec![false; points.len()];
    coreset.iter().for_each(|&i| in_c[i] = true);
    let outside: Vec<usize> = (0..points.len()).filter(|&i| !in_c[i]).collect();
    let all: Vec<usize> = (0..points.len()).collect();
    let tol = zero_tol(points);

    let results = par::map(num_queries, |q| {
        let mut rng = rng::seeded(rng_seed, &[0x51, q as u64]);
        let h = match q % 3 {
            1 if !outside.is_empty() => {
                let r = rng.random_range(1..=j + 1);
                let through = pick(&outside, r, &mut rng);
                flat_through(points, &through, j, &mut rng)
            }
            2 => {
                let mut through = pick(coreset, 1, &mut rng);
                let extra = rng.random_range(0..=j);
                through.extend(pick(&all, extra, &mut rng));
                flat_through(points, &through, j, &mut rng)
            }
            _ => random_flat(points, j, &mut rng),
        };
        let on_p = max_dist(points, 0..points.len(), &h);
        let on_c = max_dist(points, coreset.iter().copied(), &h);
        let ratio = if on_p <= tol {
            1.0
        } else if on_c <= tol {
            f64::INFINITY
        } else {
            (on_p / on_c).powf(z).max(1.0)
        };
        (ratio, h)
    });
    let mut best: Option<(f64, AffineFlat)> = None;
    for (ratio, h) in results {
        if best.as_ref().is_none_or(|(b, _)| ratio > *b) {
            best = Some((ratio, h));
        }
    }
    let (max_ratio, worst) = best.map_or((1.0, None), |(r, h)| (r, Some(h)));
    Ok(RatioReport {
        max_ratio,
        queries: num_queries,
        worst,
    })
}

/// Samples families of `k` `j`-flats, sets `r` to the smallest radius at
/// which their cylinders cover the coreset, and checks that radius `xi·r`
/// covers every input point.
pub fn verify_cylinder_coverage(
    points: &PointSet,
    coreset: &[usize],
    j: usize,
    k: usize,
    cfg: &VerifyConfig,
) -> Result<CoverageReport> {
    check_inputs(points, coreset, j)?;
    cfg.validate()?;
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let all: Vec<usize> = (0..points.len()).collect();
    let tol = zero_tol(points);

    let expansions = par::map(cfg.num_queries, |f| {
        let mut rng = rng::seeded(cfg.rng_seed, &[0xC7, f as u64]);
        let flats: Vec<AffineFlat> = (0..k)
            .map(|_| match rng.random_range(0..3) {
                0 => random_flat(points, j, &mut rng),
                1 => {
                    let through = pick(coreset, j + 1, &mut rng);
                    flat_through(points, &through, j, &mut rng)
                }
                _ => {
                    let through = pick(&all, j + 1, &mut rng);
                    flat_through(points, &through, j, &mut rng)
                }
            })
            .collect();
        let reach = |i: usize| {
            flats
                .iter()
                .map(|h| h.dist_unchecked(points.point(i)))
                .fold(f64::INFINITY, f64::min)
        };
        let r = coreset.iter().map(|&i| reach(i)).fold(0.0, f64::max);
        let needed = all.iter().map(|&i| reach(i)).fold(0.0, f64::max);
        if needed <= tol {
            (1.0, false)
        } else if r <= tol {
            (f64::INFINITY, true)
        } else {
            (needed / r, needed > cfg.xi * r + tol)
        }
    });
    Ok(CoverageReport {
        families: cfg.num_queries,
        violations: expansions.iter().filter(|e| e.1).count(),
        worst_expansion: expansions.iter().map(|e| e.0).fold(1.0, f64::max),
    })
}
