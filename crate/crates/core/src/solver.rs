// SPDX-License-Identifier: Apache-2.0

//! Downstream solvers used to score coresets: alternating (EM-style)
//! projective clustering and IRLS robust regression, both on weighted data.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::index::sample;
use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::{affine_span, random_orthonormal, AffineFlat, PointSet};
use crate::losses::{LossSpec, RegressionInstance};
use crate::{par, rng};

/// `k` flats of a common dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatSet {
    flats: Vec<AffineFlat>,
}

impl FlatSet {
    pub fn new(flats: Vec<AffineFlat>) -> Result<Self> {
        let first = flats
            .first()
            .ok_or_else(|| Error::InvalidArgument("a flat set needs at least one flat".into()))?;
        let (j, d) = (first.dim(), first.ambient_dim());
        if let Some(bad) = flats.iter().find(|f| f.dim() != j || f.ambient_dim() != d) {
            return Err(Error::InvalidArgument(format!(
                "mixed flats: {}-flat in R^{} next to {j}-flat in R^{d}",
                bad.dim(),
                bad.ambient_dim()
            )));
        }
        Ok(Self { flats })
    }

    pub fn flats(&self) -> &[AffineFlat] {
        &self.flats
    }

    pub fn k(&self) -> usize {
        self.flats.len()
    }

    pub fn j(&self) -> usize {
        self.flats[0].dim()
    }

    pub fn ambient_dim(&self) -> usize {
        self.flats[0].ambient_dim()
    }

    /// Distance to the nearest flat and its index; ties go to the lower index.
    pub fn nearest(&self, p: &[f64]) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for (i, f) in self.flats.iter().enumerate() {
            let dist = f.dist_unchecked(p);
            if dist < best.1 {
                best = (i, dist);
            }
        }
        best
    }
}

/// What is summed over distances (clustering) or residuals (regression).
#[derive(Debug, Clone)]
pub enum CostFn {
    /// `x^z`.
    Power(f64),
    Loss(LossSpec),
}

impl CostFn {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            CostFn::Power(z) => x.abs().powf(*z),
            CostFn::Loss(s) => s.eval(x),
        }
    }

    /// `g'(x)/x`, the IRLS weight, with `x` floored at `tol`.
    fn irls_weight(&self, x: f64, tol: f64) -> f64 {
        let a = x.abs().max(tol);
        let slope = match self {
            CostFn::Power(z) => z * a.powf(z - 1.0),
            CostFn::Loss(s) => s.derivative(a),
        };
        (slope / a).max(0.0)
    }

    fn is_squared(&self) -> bool {
        matches!(self, CostFn::Power(z) if *z == 2.0)
    }

    fn validate(&self) -> Result<()> {
        match self {
            CostFn::Power(z) if !(*z > 0.0 && z.is_finite()) => {
                Err(Error::InvalidArgument(format!("power z = {z} must be positive")))
            }
            _ => Ok(()),
        }
    }
}

/// How EM picks the `(j+1)`-point groups its flats start from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitStrategy {
    /// All `k(j+1)` points uniformly without replacement.
    Uniform,
    /// The first point of each later group is drawn with probability
    /// proportional to `w(p) g(dist(p, flats so far))`, the rest uniformly.
    #[default]
    Seeded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveConfig {
    pub restarts: usize,
    pub em_steps: usize,
    pub rng_seed: u64,
    pub inner_tol: f64,
    /// IRLS iterations for robust flat refits.
    pub irls_iters: usize,
    /// IRLS iterations for regression.
    pub max_iter: usize,
    pub init: InitStrategy,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            restarts: 10,
            em_steps: 6,
            rng_seed: 0,
            inner_tol: 1e-9,
            irls_iters: 20,
            max_iter: 100,
            init: InitStrategy::Seeded,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 || self.em_steps == 0 {
            return Err(Error::InvalidArgument("restarts and em_steps must be at least 1".into()));
        }
        if !(self.inner_tol > 0.0) {
            return Err(Error::InvalidArgument("inner_tol must be positive".into()));
        }
        Ok(())
    }
}

fn check_weights(n: usize, weights: Option<&[f64]>) -> Result<()> {
    if let Some(w) = weights {
        if w.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: w.len(),
            });
        }
        if let Some(bad) = w.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidArgument(format!("weight {bad} is not positive")));
        }
    }
    Ok(())
}

fn weight(weights: Option<&[f64]>, i: usize) -> f64 {
    weights.map_or(1.0, |w| w[i])
}

/// `Σ w(p) g(min_F dist(p, F))`.
pub fn clustering_cost(points: &PointSet, weights: Option<&[f64]>, flats: &FlatSet, cost: &CostFn) -> Result<f64> {
    if flats.ambient_dim() != points.dim() {
        return Err(Error::DimensionMismatch {
            expected: points.dim(),
            got: flats.ambient_dim(),
        });
    }
    check_weights(points.len(), weights)?;
    Ok((0..points.len())
        .map(|i| weight(weights, i) * cost.eval(flats.nearest(points.point(i)).1))
        .sum())
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlatFit {
    pub flat: AffineFlat,
    /// Fewer than `j+1` affinely independent weighted points; the flat is
    /// padded with arbitrary directions.
    pub degenerate: bool,
}

/// Weighted best-fit `j`-flat: exact for `x²`, IRLS otherwise.
pub fn fit_flat_weighted(
    points: &PointSet,
    weights: Option<&[f64]>,
    j: usize,
    cost: &CostFn,
    cfg: &SolveConfig,
) -> Result<FlatFit> {
    check_weights(points.len(), weights)?;
    cost.validate()?;
    if j >= points.dim() {
        return Err(Error::InvalidArgument(format!("j = {j} must be below {}", points.dim())));
    }
    let members: Vec<usize> = (0..points.len()).collect();
    let w: Vec<f64> = members.iter().map(|&i| weight(weights, i)).collect();
    fit_members(points, &members, &w, j, cost, cfg)
}

fn fit_members(
    points: &PointSet,
    members: &[usize],
    w: &[f64],
    j: usize,
    cost: &CostFn,
    cfg: &SolveConfig,
) -> Result<FlatFit> {
    if members.is_empty() {
        return Err(Error::Init { needed: 1, got: 0 });
    }
    let first = squared_fit(points, members, w, j);
    if cost.is_squared() {
        return Ok(first);
    }
    let member_cost = |f: &AffineFlat| -> f64 {
        members
            .iter()
            .zip(w)
            .map(|(&i, wi)| wi * cost.eval(f.dist_unchecked(points.point(i))))
            .sum()
    };
    let mut best_cost = member_cost(&first.flat);
    let mut best = first.clone();
    let mut current = first;
    for _ in 0..cfg.irls_iters {
        let omega: Vec<f64> = members
            .iter()
            .zip(w)
            .map(|(&i, wi)| wi * cost.irls_weight(current.flat.dist_unchecked(points.point(i)), cfg.inner_tol))
            .collect();
        if omega.iter().all(|&o| o <= 0.0) {
            break;
        }
        current = squared_fit(points, members, &omega, j);
        let c = member_cost(&current.flat);
        let improved = best_cost - c;
        if c < best_cost {
            best_cost = c;
            best = current.clone();
        }
        if improved.abs() <= cfg.inner_tol * (1.0 + best_cost) {
            break;
        }
    }
    Ok(best)
}

/// Weighted centroid plus top-`j` eigenvectors of the weighted scatter.
fn squared_fit(points: &PointSet, members: &[usize], w: &[f64], j: usize) -> FlatFit {
    let d = points.dim();
    let total: f64 = w.iter().sum();
    let mut centroid = vec![0.0; d];
    let mut live = 0usize;
    for (&i, &wi) in members.iter().zip(w) {
        if wi > 0.0 {
            live += 1;
        }
        for (c, p) in centroid.iter_mut().zip(points.point(i)) {
            *c += wi * p;
        }
    }
    if total > 0.0 {
        centroid.iter_mut().for_each(|c| *c /= total);
    } else {
        centroid.copy_from_slice(points.point(members[0]));
    }
    if j == 0 {
        return FlatFit {
            flat: AffineFlat::point(centroid),
            degenerate: live == 0,
        };
    }
    let mut scatter = DMatrix::<f64>::zeros(d, d);
    for (&i, &wi) in members.iter().zip(w) {
        if wi <= 0.0 {
            continue;
        }
        let r = DVector::from_iterator(d, points.point(i).iter().zip(&centroid).map(|(p, c)| p - c));
        scatter.ger(wi, &r, &r, 1.0);
    }
    let eig = SymmetricEigen::new(scatter);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let top = eig.eigenvalues[order[0]].abs().max(f64::MIN_POSITIVE);
    let rank = order.iter().filter(|&&a| eig.eigenvalues[a] > 1e-12 * top).count();
    let columns: Vec<Vec<f64>> = order[..j]
        .iter()
        .map(|&a| eig.eigenvectors.column(a).iter().copied().collect())
        .collect();
    // eigenvectors of a symmetric matrix are orthonormal up to rounding
    let flat = AffineFlat::new(columns, centroid.clone())
        .unwrap_or_else(|_| AffineFlat::point(centroid).extended_to(j, std::iter::empty()));
    FlatFit {
        flat,
        degenerate: rank < j && live <= j,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmResult {
    pub flats: FlatSet,
    pub cost: f64,
    /// Cost after initialization and after each step of the winning restart.
    pub history: Vec<f64>,
}

/// Alternating assignment/refit from random `(j+1)`-point initializations;
/// returns the best restart.
pub fn em_projective(
    points: &PointSet,
    weights: Option<&[f64]>,
    j: usize,
    k: usize,
    cost: &CostFn,
    cfg: &SolveConfig,
) -> Result<EmResult> {
    cfg.validate()?;
    cost.validate()?;
    check_weights(points.len(), weights)?;
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if j >= points.dim() {
        return Err(Error::InvalidArgument(format!("j = {j} must be below {}", points.dim())));
    }
    let needed = k * (j + 1);
    if points.len() < needed {
        return Err(Error::Init {
            needed,
            got: points.len(),
        });
    }
    let runs = par::map(cfg.restarts, |r| em_run(points, weights, j, k, cost, cfg, r as u64));
    let mut best: Option<EmResult> = None;
    for run in runs {
        let run = run?;
        if best.as_ref().is_none_or(|b| run.cost < b.cost) {
            best = Some(run);
        }
    }
    Ok(best.expect("restarts >= 1"))
}

fn em_run(
    points: &PointSet,
    weights: Option<&[f64]>,
    j: usize,
    k: usize,
    cost: &CostFn,
    cfg: &SolveConfig,
    restart: u64,
) -> Result<EmResult> {
    let mut rng = rng::seeded(cfg.rng_seed, &[0xE3, restart]);
    let through = |group: &[usize], rng: &mut rng::Rng| {
        let rows: Vec<&[f64]> = group.iter().map(|&i| points.point(i)).collect();
        let span = affine_span(&rows).expect("nonempty group");
        span.extended_to(j, random_orthonormal(points.dim(), j, rng))
    };
    let flats: Vec<AffineFlat> = match cfg.init {
        InitStrategy::Uniform => {
            let picks = sample(&mut rng, points.len(), k * (j + 1)).into_vec();
            picks.chunks(j + 1).map(|g| through(g, &mut rng)).collect()
        }
        InitStrategy::Seeded => {
            let first = sample(&mut rng, points.len(), j + 1).into_vec();
            let mut flats = vec![through(&first, &mut rng)];
            let mut reach: Vec<f64> = (0..points.len())
                .map(|i| flats[0].dist_unchecked(points.point(i)))
                .collect();
            while flats.len() < k {
                let mass: Vec<f64> = reach
                    .iter()
                    .enumerate()
                    .map(|(i, &r)| weight(weights, i) * cost.eval(r))
                    .collect();
                let lead = match WeightedIndex::new(&mass) {
                    Ok(dist) => dist.sample(&mut rng),
                    Err(_) => rng.random_range(0..points.len()),
                };
                let mut group = vec![lead];
                for i in sample(&mut rng, points.len(), (j + 1).min(points.len())) {
                    if group.len() > j {
                        break;
                    }
                    if i != lead {
                        group.push(i);
                    }
                }
                let f = through(&group, &mut rng);
                for (i, r) in reach.iter_mut().enumerate() {
                    *r = r.min(f.dist_unchecked(points.point(i)));
                }
                flats.push(f);
            }
            flats
        }
    };
    let mut flats = FlatSet::new(flats)?;
    let mut current = clustering_cost(points, weights, &flats, cost)?;
    let mut history = vec![current];
    let mut best = (flats.clone(), current);
    for _ in 0..cfg.em_steps {
        let mut groups: Vec<Vec<usize>> = vec![Vec::new(); k];
        for i in 0..points.len() {
            groups[flats.nearest(points.point(i)).0].push(i);
        }
        let mut next = flats.flats().to_vec();
        for (c, members) in groups.iter().enumerate() {
            if members.is_empty() {
                continue;
            }
            let w: Vec<f64> = members.iter().map(|&i| weight(weights, i)).collect();
            next[c] = fit_members(points, members, &w, j, cost, cfg)?.flat;
        }
        flats = FlatSet::new(next)?;
        current = clustering_cost(points, weights, &flats, cost)?;
        history.push(current);
        if current < best.1 {
            best = (flats.clone(), current);
        }
    }
    Ok(EmResult {
        flats: best.0,
        cost: best.1,
        history,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionFit {
    pub w: Vec<f64>,
    pub objective: f64,
    /// The normal equations were singular and `1e-8` ridge damping was added.
    pub ridge_used: bool,
}

/// `Σ weight(p) g(pᵀw − b(p))`.
pub fn regression_objective(inst: &RegressionInstance, weights: Option<&[f64]>, w: &[f64], cost: &CostFn) -> f64 {
    (0..inst.len())
        .map(|i| weight(weights, i) * cost.eval(inst.residual(i, w)))
        .sum()
}

/// Multi-start IRLS for `min_w Σ weight(p) g(pᵀw − b(p))`. Restart 0 starts
/// from weighted least squares, later restarts from exact fits through `d`
/// random rows.
pub fn robust_regression_solve(
    inst: &RegressionInstance,
    weights: Option<&[f64]>,
    cost: &CostFn,
    cfg: &SolveConfig,
) -> Result<RegressionFit> {
    cfg.validate()?;
    cost.validate()?;
    check_weights(inst.len(), weights)?;
    let (n, d) = (inst.len(), inst.dim());
    if n < d {
        return Err(Error::Init { needed: d, got: n });
    }
    let all: Vec<usize> = (0..n).collect();
    let unit: Vec<f64> = all.iter().map(|&i| weight(weights, i)).collect();
    let runs = par::map(cfg.restarts, |r| {
        let (start, mut ridge) = if r == 0 {
            weighted_ls(inst, &all, &unit)
        } else {
            let mut rng = rng::seeded(cfg.rng_seed, &[0x4E, r as u64]);
            let rows = sample(&mut rng, n, d).into_vec();
            let (w, ridge) = weighted_ls(inst, &rows, &vec![1.0; d]);
            // perturb a little so repeated subsets still explore
            let jitter = 1e-6 * (1.0 + w.iter().map(|v| v.abs()).fold(0.0, f64::max));
            (w.iter().map(|v| v + jitter * rng.random_range(-1.0..1.0)).collect(), ridge)
        };
        let mut w = start;
        let mut obj = regression_objective(inst, weights, &w, cost);
        let mut best = (w.clone(), obj);
        if !cost.is_squared() || r > 0 {
            for _ in 0..cfg.max_iter {
                let omega: Vec<f64> = all
                    .iter()
                    .map(|&i| unit[i] * cost.irls_weight(inst.residual(i, &w), cfg.inner_tol))
                    .collect();
                if omega.iter().all(|&o| o <= 0.0) {
                    break;
                }
                let (next, r2) = weighted_ls(inst, &all, &omega);
                ridge |= r2;
                w = next;
                let next_obj = regression_objective(inst, weights, &w, cost);
                let change = (obj - next_obj).abs();
                obj = next_obj;
                if obj < best.1 {
                    best = (w.clone(), obj);
                }
                if change <= cfg.inner_tol * (1.0 + obj) {
                    break;
                }
            }
        }
        RegressionFit {
            w: best.0,
            objective: best.1,
            ridge_used: ridge,
        }
    });
    let mut out = runs[0].clone();
    for run in runs.into_iter().skip(1) {
        if run.objective < out.objective {
            out = run;
        }
    }
    Ok(out)
}

/// Solves `(Xᵀ Ω X) w = Xᵀ Ω b` over `rows`; retries with ridge damping when
/// the system is singular.
fn weighted_ls(inst: &RegressionInstance, rows: &[usize], omega: &[f64]) -> (Vec<f64>, bool) {
    let d = inst.dim();
    let mut a = DMatrix::<f64>::zeros(d, d);
    let mut rhs = DVector::<f64>::zeros(d);
    for (&i, &o) in rows.iter().zip(omega) {
        let p = DVector::from_column_slice(inst.points().point(i));
        a.ger(o, &p, &p, 1.0);
        rhs.axpy(o * inst.labels()[i], &p, 1.0);
    }
    if let Some(ch) = a.clone().cholesky() {
        let w = ch.solve(&rhs);
        if w.iter().all(|v| v.is_finite()) {
            return (w.iter().copied().collect(), false);
        }
    }
    let scale = (0..d).map(|k| a[(k, k)]).fold(0.0, f64::max).max(1.0);
    for k in 0..d {
        a[(k, k)] += 1e-8 * scale;
    }
    let w = a
        .cholesky()
        .map(|ch| ch.solve(&rhs))
        .unwrap_or_else(|| DVector::zeros(d));
    (w.iter().copied().collect(), true)
}

/// Relative error of a solution against a reference optimum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApproxError {
    /// `cost/reference − 1`, or the raw cost when `absolute` is set.
    pub value: f64,
    /// The reference was zero, so `value` is an absolute cost.
    pub absolute: bool,
}

pub const ZERO_REFERENCE: f64 = 1e-12;

pub fn approximation_error(cost: f64, reference: f64) -> ApproxError {
    if reference.abs() <= ZERO_REFERENCE {
        ApproxError {
            value: cost,
            absolute: true,
        }
    } else {
        ApproxError {
            value: cost / reference - 1.0,
            absolute: false,
        }
    }
}
