// SPDX-License-Identifier: Apache-2.0

//! Sensitivity sampling on top of L∞ coresets.
//!
//! Repeatedly extracting an L∞ coreset from the points not yet covered gives
//! peels `S_1, S_2, ...`; every point of `S_i` gets score `|S_i| / i`.
//! Sampling proportionally to those scores with inverse-probability weights
//! yields an unbiased weighted L2 coreset.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;

use crate::error::{Error, Result};
use crate::geometry::PointSet;
use crate::linf_coreset::{coreset_jk, JkConfig};
use crate::{par, rng};

/// Per-point sensitivity scores and the peel that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityMap {
    s: Vec<f64>,
    t: f64,
    peel_of: Vec<usize>,
    peel_sizes: Vec<usize>,
}

impl SensitivityMap {
    pub fn scores(&self) -> &[f64] {
        &self.s
    }

    /// `Σ s(p)`.
    pub fn total(&self) -> f64 {
        self.t
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    /// 1-based peel index of point `i`.
    pub fn peel_of(&self, i: usize) -> usize {
        self.peel_of[i]
    }

    pub fn peel_sizes(&self) -> &[usize] {
        &self.peel_sizes
    }
}

/// Peels L∞ coresets until every point has a score. `peel` receives the
/// remaining indices (sorted) and returns a nonempty subset of them.
pub fn assign_sensitivities_with<F>(n: usize, mut peel: F) -> Result<SensitivityMap>
where
    F: FnMut(&[usize]) -> Result<Vec<usize>>,
{
    let mut s = vec![0.0; n];
    let mut peel_of = vec![0; n];
    let mut peel_sizes = Vec::new();
    let mut alive = vec![true; n];
    let mut remaining: Vec<usize> = (0..n).collect();
    while !remaining.is_empty() {
        let round = peel_sizes.len() + 1;
        let mut taken = peel(&remaining)?;
        taken.sort_unstable();
        taken.dedup();
        if taken.is_empty() {
            return Err(Error::InvalidArgument("peel returned no points".into()));
        }
        for &i in &taken {
            if i >= n || !alive[i] {
                return Err(Error::InvalidArgument(format!(
                    "peel returned index {i} that is not among the remaining points"
                )));
            }
            alive[i] = false;
            s[i] = taken.len() as f64 / round as f64;
            peel_of[i] = round;
        }
        peel_sizes.push(taken.len());
        remaining.retain(|&i| alive[i]);
    }
    let t = s.iter().sum();
    Ok(SensitivityMap {
        s,
        t,
        peel_of,
        peel_sizes,
    })
}

/// Sensitivities from peeled `(j,k)` L∞ coresets.
pub fn assign_sensitivities(points: &PointSet, j: usize, k: usize, cfg: &JkConfig) -> Result<SensitivityMap> {
    if points.is_empty() {
        return Err(Error::InvalidArgument("no points".into()));
    }
    assign_sensitivities_with(points.len(), |remaining| {
        let sub = points.subset(remaining)?;
        let c = coreset_jk(&sub, j, k, cfg)?;
        Ok(c.indices().iter().map(|&a| remaining[a]).collect())
    })
}

/// A sample of indices (with repetition) and their weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedCoreset {
    indices: Vec<usize>,
    u: Vec<f64>,
    epsilon: Option<f64>,
    delta: Option<f64>,
}

impl WeightedCoreset {
    pub fn new(indices: Vec<usize>, u: Vec<f64>) -> Result<Self> {
        if indices.len() != u.len() {
            return Err(Error::DimensionMismatch {
                expected: indices.len(),
                got: u.len(),
            });
        }
        if let Some(w) = u.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidArgument(format!("weight {w} is not positive")));
        }
        Ok(Self {
            indices,
            u,
            epsilon: None,
            delta: None,
        })
    }

    /// Records the accuracy parameters the sample was drawn for.
    pub fn with_accuracy(mut self, epsilon: f64, delta: f64) -> Self {
        self.epsilon = Some(epsilon);
        self.delta = Some(delta);
        self
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn weights(&self) -> &[f64] {
        &self.u
    }

    pub fn epsilon(&self) -> Option<f64> {
        self.epsilon
    }

    pub fn delta(&self) -> Option<f64> {
        self.delta
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// `Σ u(p) f(p)` over the sample.
    pub fn weighted_sum<F: Fn(usize) -> f64>(&self, f: F) -> f64 {
        self.indices.iter().zip(&self.u).map(|(&i, w)| w * f(i)).sum()
    }

    /// Repeated indices collapsed into one entry carrying the summed weight.
    pub fn merged(&self) -> Self {
        let mut pairs: Vec<(usize, f64)> = self.indices.iter().copied().zip(self.u.iter().copied()).collect();
        pairs.sort_by_key(|p| p.0);
        let mut indices: Vec<usize> = Vec::with_capacity(pairs.len());
        let mut u: Vec<f64> = Vec::with_capacity(pairs.len());
        for (i, w) in pairs {
            if indices.last() == Some(&i) {
                *u.last_mut().expect("parallel vectors") += w;
            } else {
                indices.push(i);
                u.push(w);
            }
        }
        Self {
            indices,
            u,
            epsilon: self.epsilon,
            delta: self.delta,
        }
    }
}

/// How many points to draw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SampleSize {
    /// `⌈c · t/ε² · d·max(j,1)·k · ln(t/δ)⌉`.
    Formula { c_sample: f64 },
    Fixed(usize),
}

impl Default for SampleSize {
    fn default() -> Self {
        SampleSize::Formula { c_sample: 1.0 }
    }
}

/// The sample-size formula; errors unless it gives a positive finite count.
pub fn sample_size(t: f64, d: usize, j: usize, k: usize, epsilon: f64, delta: f64, c_sample: f64) -> Result<usize> {
    let m = c_sample * t / (epsilon * epsilon) * ((d * j.max(1) * k) as f64) * (t / delta).ln();
    if !(m.is_finite() && m > 0.0) {
        return Err(Error::Parameter(format!("sample size {m} is not a positive count")));
    }
    if m > usize::MAX as f64 / 2.0 {
        return Err(Error::Parameter(format!("sample size {m} is too large")));
    }
    Ok(m.ceil() as usize)
}

fn check_eps_delta(epsilon: f64, delta: f64) -> Result<()> {
    for (name, v) in [("epsilon", epsilon), ("delta", delta)] {
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::Parameter(format!("{name} = {v} must lie in (0, 1)")));
        }
    }
    Ok(())
}

const DRAW_CHUNK: usize = 4096;

/// Draws `m` indices i.i.d. with probability `s(p)/t`, each weighted
/// `t / (m s(p))`.
#[allow(clippy::too_many_arguments)]
pub fn sample_l2_coreset(
    smap: &SensitivityMap,
    d: usize,
    j: usize,
    k: usize,
    epsilon: f64,
    delta: f64,
    size: SampleSize,
    rng_seed: u64,
) -> Result<WeightedCoreset> {
    check_eps_delta(epsilon, delta)?;
    let m = match size {
        SampleSize::Formula { c_sample } => sample_size(smap.t, d, j, k, epsilon, delta, c_sample)?,
        SampleSize::Fixed(m) => m,
    };
    if m == 0 {
        return Err(Error::Parameter("sample size must be positive".into()));
    }
    let dist = WeightedIndex::new(&smap.s).map_err(|e| Error::Parameter(format!("bad scores: {e}")))?;
    let chunks = m.div_ceil(DRAW_CHUNK);
    let drawn = par::map(chunks, |c| {
        let mut rng = rng::seeded(rng_seed, &[0x5A, c as u64]);
        let len = DRAW_CHUNK.min(m - c * DRAW_CHUNK);
        (0..len).map(|_| dist.sample(&mut rng)).collect::<Vec<usize>>()
    });
    let indices: Vec<usize> = drawn.concat();
    let u = indices.iter().map(|&i| smap.t / (m as f64 * smap.s[i])).collect();
    Ok(WeightedCoreset::new(indices, u)?.with_accuracy(epsilon, delta))
}

/// Parameters for [`l2_coreset`].
#[derive(Debug, Clone, Default)]
pub struct L2Config {
    pub jk: JkConfig,
    pub size: SampleSize,
    pub rng_seed: u64,
}

/// Sensitivities followed by sampling.
pub fn l2_coreset(points: &PointSet, j: usize, k: usize, epsilon: f64, delta: f64, cfg: &L2Config) -> Result<WeightedCoreset> {
    check_eps_delta(epsilon, delta)?;
    let smap = assign_sensitivities(points, j, k, &cfg.jk)?;
    sample_l2_coreset(&smap, points.dim(), j, k, epsilon, delta, cfg.size, cfg.rng_seed)
}
