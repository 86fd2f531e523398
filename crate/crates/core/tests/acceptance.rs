// SPDX-License-Identifier: Apache-2.0

//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits nonzero if any failed. Expected values come from oracles written
//! here, independent of the library code paths they check.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use projcore::bench::{
    run_experiment, synthetic_dataset, ExperimentSpec, Method, SyntheticConfig,
};
use projcore::geometry::{hull_membership, lowner_rounding};
use projcore::linf_coreset::{coreset_j1, coreset_jk, HullConfig};
use projcore::losses::{regression_linf_coreset, RegressionInstance};
use projcore::sensitivity::{assign_sensitivities, l2_coreset, sample_l2_coreset, sample_size, L2Config, SampleSize};
use projcore::solver::{em_projective, robust_regression_solve, CostFn, SolveConfig};
use projcore::{JkConfig, LossKind, LossSpec, PointSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

type Outcome = Result<String, String>;

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("single-flat coreset size and runtime", size_bound),
        ("single-flat distance ratio, z in {1, 2}", ratio_bound),
        ("(1,2) cylinder coverage at xi = 32", cylinder_coverage),
        ("regression loss factors and structural inequalities", regression_factors),
        ("sensitivity sampling unbiasedness", unbiasedness),
        ("sensitivity sampling concentration on the synthetic set", concentration),
        ("two-center experiment, coreset vs uniform", two_center_direction),
        ("seeded determinism of every command path", determinism),
        ("rounding ellipsoid sandwich at tol 1e-6", lowner_sandwich),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS [{}] {name} ({secs:.1}s): {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL [{}] {name} ({secs:.1}s): {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

// ---------------------------------------------------------------- oracles

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gauss(r: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| r.sample(StandardNormal)).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Adds `v` to an orthonormal list after Gram-Schmidt, if it is not (nearly)
/// dependent.
fn push_orthonormal(basis: &mut Vec<Vec<f64>>, v: &[f64]) -> bool {
    let mut w = v.to_vec();
    for _ in 0..2 {
        for b in basis.iter() {
            let c = dot(&w, b);
            w.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
        }
    }
    let n = norm(&w);
    if n <= 1e-9 * norm(v).max(1e-300) {
        return false;
    }
    basis.push(w.into_iter().map(|x| x / n).collect());
    true
}

/// Fills `basis` up to `j` columns with random directions in `R^d`.
fn complete(basis: &mut Vec<Vec<f64>>, j: usize, d: usize, r: &mut ChaCha8Rng) {
    while basis.len() < j {
        push_orthonormal(basis, &gauss(r, d));
    }
}

/// A `j`-flat given by an offset and an orthonormal basis.
struct Flat {
    offset: Vec<f64>,
    basis: Vec<Vec<f64>>,
}

impl Flat {
    fn dist(&self, p: &[f64]) -> f64 {
        let mut w = sub(p, &self.offset);
        for b in &self.basis {
            let c = dot(&w, b);
            w.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
        }
        norm(&w)
    }

    /// Flat of dimension `j` through the given points, padded with random
    /// directions.
    fn through(points: &[&[f64]], j: usize, r: &mut ChaCha8Rng) -> Flat {
        let d = points[0].len();
        let mut basis = Vec::new();
        for p in &points[1..] {
            if basis.len() == j {
                break;
            }
            push_orthonormal(&mut basis, &sub(p, points[0]));
        }
        complete(&mut basis, j, d, r);
        Flat {
            offset: points[0].to_vec(),
            basis,
        }
    }
}

fn rows(p: &PointSet) -> Vec<&[f64]> {
    p.iter().collect()
}

/// `(max_P dist / max_C dist)` with `0/0 = 1` and `x/0 = inf`.
fn linf_ratio(pmax: f64, cmax: f64, zero: f64) -> f64 {
    if cmax <= zero {
        if pmax <= zero {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        (pmax / cmax).max(1.0)
    }
}

/// Distance from `v` to the convex combination a membership certificate
/// claims, after checking the weights are a probability vector.
fn certificate_gap(q: &PointSet, v: &[f64]) -> Result<f64, String> {
    let cert = hull_membership(q, v).map_err(|e| e.to_string())?;
    let w = cert.weights();
    if w.iter().any(|&x| x < -1e-12) {
        return Err(format!("negative certificate weight {w:?}"));
    }
    let total: f64 = w.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(format!("certificate weights sum to {total}"));
    }
    let mut x = vec![0.0; v.len()];
    for (&i, &wi) in cert.support().iter().zip(w) {
        x.iter_mut().zip(q.point(i)).for_each(|(xa, pa)| *xa += wi * pa);
    }
    Ok(norm(&sub(&x, v)))
}

// ---------------------------------------------------- single-flat instances

struct Planted {
    points: PointSet,
    j: usize,
}

/// 200 point sets on random `j`-flats, `j` in {1, 2, 3}, `d <= 6`,
/// `n <= 500`, with a mix of box, Gaussian, clustered and skinny shapes.
fn planted_instances() -> Vec<Planted> {
    (0..200u64)
        .map(|i| {
            let mut r = rng(0xA11CE ^ i);
            let j = 1 + (i % 3) as usize;
            let d = r.random_range(j + 1..=6);
            let n = r.random_range(j + 2..=500);
            let mut basis = Vec::new();
            complete(&mut basis, j, d, &mut r);
            let offset: Vec<f64> = gauss(&mut r, d).iter().map(|x| x * 10.0).collect();
            let stretch: Vec<f64> = (0..j).map(|_| 10f64.powf(r.random_range(-1.0..2.0))).collect();
            let centers: Vec<Vec<f64>> = (0..4).map(|_| gauss(&mut r, j)).collect();
            let data: Vec<Vec<f64>> = (0..n)
                .map(|_| {
                    let coords: Vec<f64> = match i % 4 {
                        0 => (0..j).map(|_| r.random_range(-1.0..1.0)).collect(),
                        1 => gauss(&mut r, j),
                        2 => {
                            let c = &centers[r.random_range(0..4)];
                            c.iter().map(|x| x + 0.05 * r.sample::<f64, _>(StandardNormal)).collect()
                        }
                        _ => {
                            let mut g = gauss(&mut r, j);
                            g.iter_mut().skip(1).for_each(|x| *x *= 1e-3);
                            g
                        }
                    };
                    let mut p = offset.clone();
                    for (k, b) in basis.iter().enumerate() {
                        let c = coords[k] * stretch[k];
                        p.iter_mut().zip(b).for_each(|(x, y)| *x += c * y);
                    }
                    p
                })
                .collect();
            Planted {
                points: PointSet::from_rows(&data).unwrap(),
                j,
            }
        })
        .collect()
}

fn size_bound() -> Outcome {
    let mut worst_time = Duration::ZERO;
    let mut worst_fill = 0.0f64;
    for (i, inst) in planted_instances().iter().enumerate() {
        let started = Instant::now();
        let c = coreset_j1(&inst.points, inst.j, &HullConfig::default()).map_err(|e| format!("instance {i}: {e}"))?;
        let t = started.elapsed();
        worst_time = worst_time.max(t);
        let cap = 2 * (inst.j + 1) * (inst.j + 1);
        if c.len() > cap {
            return Err(format!("instance {i}: |C| = {} > {cap}", c.len()));
        }
        if t >= Duration::from_secs(1) {
            return Err(format!("instance {i}: took {t:.2?}"));
        }
        worst_fill = worst_fill.max(c.len() as f64 / cap as f64);
    }
    Ok(format!("200 instances, max |C|/2(j+1)^2 = {worst_fill:.2}, slowest {worst_time:.2?}"))
}

/// Queries: random flats, flats through points of `P∖C`, flats through a
/// coreset point plus other points, and flats sharing all but one direction
/// with the data flat.
fn query(q: usize, inst: &Planted, coreset: &[usize], outside: &[usize], r: &mut ChaCha8Rng) -> Flat {
    let (p, j) = (&inst.points, inst.j);
    let d = p.dim();
    let n = p.len();
    let pick = |pool: &[usize], r: &mut ChaCha8Rng| pool[r.random_range(0..pool.len())];
    match q % 4 {
        0 => {
            let bbox = p.bounding_box();
            let offset = bbox.iter().map(|&(lo, hi)| if hi > lo { r.random_range(lo..=hi) } else { lo }).collect();
            let mut basis = Vec::new();
            complete(&mut basis, j, d, r);
            Flat { offset, basis }
        }
        1 if !outside.is_empty() => {
            let pts: Vec<&[f64]> = (0..=j).map(|_| p.point(pick(outside, r))).collect();
            Flat::through(&pts, j, r)
        }
        2 => {
            let mut pts = vec![p.point(pick(coreset, r))];
            pts.extend((0..j).map(|_| p.point(r.random_range(0..n))));
            Flat::through(&pts, j, r)
        }
        _ => {
            let base = Flat::through(&(0..n).map(|i| p.point(i)).collect::<Vec<_>>(), j, r);
            let mut basis = Vec::new();
            for _ in 0..j - 1 {
                let g = gauss(r, j);
                let v: Vec<f64> = (0..d).map(|a| (0..j).map(|k| g[k] * base.basis[k][a]).sum()).collect();
                push_orthonormal(&mut basis, &v);
            }
            complete(&mut basis, j, d, r);
            let pool = if outside.is_empty() { coreset } else { outside };
            Flat {
                offset: p.point(pick(pool, r)).to_vec(),
                basis,
            }
        }
    }
}

fn ratio_bound() -> Outcome {
    let instances = planted_instances();
    let mut worst = [(0.0f64, 0usize); 2];
    let mut total_queries = 0;
    for (i, inst) in instances.iter().enumerate() {
        let c = coreset_j1(&inst.points, inst.j, &HullConfig::default()).map_err(|e| format!("instance {i}: {e}"))?;
        let mut in_c = vec![false; inst.points.len()];
        c.indices().iter().for_each(|&a| in_c[a] = true);
        let outside: Vec<usize> = (0..inst.points.len()).filter(|&a| !in_c[a]).collect();
        let zero = 1e-9 * (1.0 + inst.points.max_abs());
        let all = rows(&inst.points);
        let mut r = rng(0x5EED ^ i as u64);
        for q in 0..1000 {
            let h = query(q, inst, c.indices(), &outside, &mut r);
            let pmax = all.iter().map(|p| h.dist(p)).fold(0.0, f64::max);
            let cmax = c.indices().iter().map(|&a| h.dist(all[a])).fold(0.0, f64::max);
            let ratio = linf_ratio(pmax, cmax, zero);
            for (zi, z) in [1.0, 2.0].into_iter().enumerate() {
                let bound = 2f64.powf(z + 1.0) * (inst.j as f64).powf(1.5 * z);
                let rz = ratio.powf(z);
                if rz > bound {
                    return Err(format!("instance {i} (j={}) query {q}: ratio^{z} = {rz} > {bound}", inst.j));
                }
                if rz / bound > worst[zi].0 {
                    worst[zi] = (rz / bound, inst.j);
                }
            }
            total_queries += 1;
        }
    }
    Ok(format!(
        "{total_queries} queries, 0 violations; worst ratio/bound z=1: {:.3} (j={}), z=2: {:.3} (j={})",
        worst[0].0, worst[0].1, worst[1].0, worst[1].1
    ))
}

// ----------------------------------------------------------- (j,k) coverage

fn cylinder_coverage() -> Outcome {
    const XI: f64 = 32.0;
    let mut families = 0;
    let mut worst = 1.0f64;
    let mut sizes = Vec::new();
    for inst in 0..10u64 {
        let mut r = rng(0xC0FE ^ inst);
        let delta = r.random_range(4..=8u64);
        let n = r.random_range(40..=120);
        let data: Vec<[f64; 2]> = (0..n)
            .map(|_| [r.random_range(0..=delta) as f64, r.random_range(0..=delta) as f64])
            .collect();
        let p = PointSet::from_rows(&data).unwrap().with_grid(delta).unwrap();
        let c = coreset_jk(&p, 1, 2, &JkConfig::default()).map_err(|e| format!("instance {inst}: {e}"))?;
        sizes.push(c.len());
        let all = rows(&p);
        let zero = 1e-9 * (1.0 + p.max_abs());
        for f in 0..200 {
            let lines: Vec<Flat> = (0..2)
                .map(|_| match (f + r.random_range(0..3)) % 3 {
                    0 => {
                        let a = all[c.indices()[r.random_range(0..c.len())]];
                        let b = all[c.indices()[r.random_range(0..c.len())]];
                        Flat::through(&[a, b], 1, &mut r)
                    }
                    1 => Flat::through(&[all[c.indices()[r.random_range(0..c.len())]]], 1, &mut r),
                    _ => Flat::through(&[all[r.random_range(0..n)], all[r.random_range(0..n)]], 1, &mut r),
                })
                .collect();
            let near = |q: &[f64]| lines.iter().map(|l| l.dist(q)).fold(f64::INFINITY, f64::min);
            let radius = c.indices().iter().map(|&a| near(all[a])).fold(0.0, f64::max);
            for (a, q) in all.iter().enumerate() {
                let dq = near(q);
                let covered = if radius <= zero { dq <= zero } else { dq <= XI * radius * (1.0 + 1e-12) };
                if !covered {
                    return Err(format!(
                        "instance {inst} family {f}: point {a} at {dq} outside {XI} x {radius}"
                    ));
                }
                if radius > zero {
                    worst = worst.max(dq / radius);
                }
            }
            families += 1;
        }
    }
    Ok(format!(
        "{families} families on 10 grids, 0 violations, worst expansion needed {worst:.2}, |C| in {}..={}",
        sizes.iter().min().unwrap(),
        sizes.iter().max().unwrap()
    ))
}

// --------------------------------------------------------------- regression

/// Loss formulas at scale `l`, written out independently of the library.
fn oracle_loss(kind: LossKind, l: f64, x: f64) -> f64 {
    let x = x.abs();
    match kind {
        LossKind::Cauchy => l * l / 2.0 * (1.0 + (x / l).powi(2)).ln(),
        LossKind::Welsch => l * l / 2.0 * (1.0 - (-(x / l).powi(2)).exp()),
        LossKind::Huber if x <= l => x * x / 2.0,
        LossKind::Huber => l * x - l * l / 2.0,
        LossKind::GemanMcClure => x * x / (2.0 + 2.0 * x * x),
        LossKind::Tukey if x <= l => l * l / 6.0 * (1.0 - (1.0 - (x / l).powi(2)).powi(3)),
        LossKind::Tukey => l * l / 6.0,
        LossKind::L1L2 => 2.0 * ((1.0 + x * x / 2.0).sqrt() - 1.0),
        LossKind::Fair => l * x - l * l * (1.0 + x / l).ln(),
        LossKind::Concave => l * (1.0 + x / l).ln(),
        LossKind::PowerBounded => x,
    }
}

fn table_factor(kind: LossKind, d: usize) -> f64 {
    let e = (d + 1) as f64;
    match kind {
        LossKind::Huber => 16.0 * e.powi(3),
        LossKind::Concave => 4.0 * e.powf(1.5),
        LossKind::PowerBounded => 4.0 * e.powf(1.5),
        _ => 8.0 * e.powi(3),
    }
}

/// Solves `A w = b` for a `d x d` system, if nonsingular.
fn solve_square(rows: &[&[f64]], rhs: &[f64]) -> Option<Vec<f64>> {
    let d = rhs.len();
    let a = DMatrix::from_fn(d, d, |i, k| rows[i][k]);
    a.lu().solve(&DVector::from_column_slice(rhs)).map(|w| w.iter().copied().collect())
}

fn regression_instance(seed: u64) -> (RegressionInstance, usize) {
    let mut r = rng(seed);
    let d = r.random_range(1..=4);
    let n = r.random_range(100..=500);
    let w_true = gauss(&mut r, d);
    let spread = 10f64.powf(r.random_range(-1.0..1.5));
    let mut pts = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let p: Vec<f64> = gauss(&mut r, d).iter().map(|x| x * spread).collect();
        let noise: f64 = if r.random_bool(0.05) { 50.0 * r.sample::<f64, _>(StandardNormal) } else { 0.3 * r.sample::<f64, _>(StandardNormal) };
        labels.push(dot(&p, &w_true) + noise);
        pts.push(p);
    }
    (RegressionInstance::new(PointSet::from_rows(&pts).unwrap(), labels).unwrap(), d)
}

fn regression_factors() -> Outcome {
    let mut worst = Vec::new();
    for kind in LossKind::ALL {
        let spec = LossSpec::new(kind, 1.0).map_err(|e| e.to_string())?;
        let mut kind_worst = 0.0f64;
        for inst_id in 0..6u64 {
            let (inst, d) = regression_instance(0xBEE5 ^ (inst_id << 8) ^ kind as u64);
            let c = regression_linf_coreset(&inst, &spec, &HullConfig::default()).map_err(|e| e.to_string())?;
            let factor = table_factor(kind, d);
            if (c.guarantee_factor() - factor).abs() > 1e-9 * factor {
                return Err(format!("{}: reported factor {} != {factor}", kind.name(), c.guarantee_factor()));
            }
            let n = inst.len();
            let mut in_c = vec![false; n];
            c.indices().iter().for_each(|&a| in_c[a] = true);
            let outside: Vec<usize> = (0..n).filter(|&a| !in_c[a]).collect();
            let pts = rows(inst.points());
            let labels = inst.labels();
            let resid = |a: usize, w: &[f64]| dot(pts[a], w) - labels[a];
            let mut r = rng(0xF00D ^ (inst_id << 8) ^ kind as u64);
            for q in 0..1000 {
                let w: Vec<f64> = match q % 3 {
                    0 if q == 0 => vec![0.0; d],
                    1 if outside.len() >= d => {
                        let chosen: Vec<usize> = (0..d).map(|_| outside[r.random_range(0..outside.len())]).collect();
                        let rs: Vec<&[f64]> = chosen.iter().map(|&a| pts[a]).collect();
                        let rhs: Vec<f64> = chosen.iter().map(|&a| labels[a]).collect();
                        solve_square(&rs, &rhs).unwrap_or_else(|| gauss(&mut r, d))
                    }
                    _ => {
                        let s = 10f64.powf(r.random_range(-3.0..3.0));
                        gauss(&mut r, d).iter().map(|x| x * s).collect()
                    }
                };
                let pmax = (0..n).map(|a| oracle_loss(kind, 1.0, resid(a, &w))).fold(0.0, f64::max);
                let cmax = c.indices().iter().map(|&a| oracle_loss(kind, 1.0, resid(a, &w))).fold(0.0, f64::max);
                let ratio = linf_ratio(pmax, cmax, 1e-300);
                if ratio > factor {
                    return Err(format!("{} instance {inst_id} query {q}: ratio {ratio} > {factor}", kind.name()));
                }
                kind_worst = kind_worst.max(ratio / factor);
            }
        }
        worst.push(format!("{} {kind_worst:.1e}", kind.name()));
    }
    structural_inequalities()?;
    Ok(format!(
        "9 losses x 6 instances x 1000 queries within factor (worst ratio/factor: {}); 3 x 10^4 structural samples hold",
        worst.join(", ")
    ))
}

fn structural_inequalities() -> Result<(), String> {
    let mut r = rng(0x57);
    for s in 0..10_000 {
        let a = 10f64.powf(r.random_range(0.0..2.0));
        let x = 10f64.powf(r.random_range(-4.0..2.0)) * if r.random_bool(0.5) { 1.0 } else { -1.0 };
        let lhs = -(-(a * a * x * x)).exp_m1();
        let rhs = a * a * -(-(x * x)).exp_m1();
        if lhs > rhs * (1.0 + 1e-12) {
            return Err(format!("Welsch inequality fails at sample {s}: a={a}, x={x}"));
        }
    }
    // Concave transforms t -> Psi(sqrt t) of the bounded and log losses,
    // plus the default concave loss itself.
    let concave: Vec<(&str, Box<dyn Fn(f64) -> f64>)> = vec![
        ("concave", Box::new(|t| oracle_loss(LossKind::Concave, 1.0, t))),
        ("cauchy(sqrt)", Box::new(|t: f64| oracle_loss(LossKind::Cauchy, 1.0, t.sqrt()))),
        ("welsch(sqrt)", Box::new(|t: f64| oracle_loss(LossKind::Welsch, 1.0, t.sqrt()))),
        ("geman-mcclure(sqrt)", Box::new(|t: f64| oracle_loss(LossKind::GemanMcClure, 1.0, t.sqrt()))),
        ("l1-l2(sqrt)", Box::new(|t: f64| oracle_loss(LossKind::L1L2, 1.0, t.sqrt()))),
        ("tukey(sqrt)", Box::new(|t: f64| oracle_loss(LossKind::Tukey, 1.0, t.sqrt()))),
    ];
    for s in 0..10_000 {
        let (name, f) = &concave[s % concave.len()];
        let x = 10f64.powf(r.random_range(-3.0..2.0));
        let y = x * 10f64.powf(r.random_range(0.0..3.0));
        if f(x) / x < f(y) / y * (1.0 - 1e-12) {
            return Err(format!("concave slope fails for {name} at x={x}, y={y}"));
        }
    }
    for s in 0..10_000 {
        let z = r.random_range(0.1..4.0);
        let spec = if s % 2 == 0 {
            LossSpec::power(z)
        } else {
            LossSpec::power_bounded(move |t: f64| t.powf(z) / (1.0 + t.powf(z)), z)
        }
        .map_err(|e| e.to_string())?;
        let x = 10f64.powf(r.random_range(-3.0..3.0));
        let y = x * 10f64.powf(r.random_range(0.0..3.0));
        if spec.eval(y) / spec.eval(x) > (y / x).powf(z) * (1.0 + 1e-12) {
            return Err(format!("power bound fails at z={z}, x={x}, y={y}"));
        }
    }
    Ok(())
}

// ------------------------------------------------------ sensitivity sampling

fn unbiasedness() -> Outcome {
    let mut r = rng(0xB1A5);
    let data: Vec<[f64; 2]> = (0..200)
        .map(|_| [r.random_range(0..=50) as f64, r.random_range(0..=50) as f64])
        .collect();
    let p = PointSet::from_rows(&data).unwrap().with_grid(50).unwrap();
    let smap = assign_sensitivities(&p, 1, 1, &JkConfig::default()).map_err(|e| e.to_string())?;
    let queries: Vec<Flat> = (0..3)
        .map(|_| Flat::through(&[&[r.random_range(0.0..50.0), r.random_range(0.0..50.0)]], 1, &mut r))
        .collect();
    let costs: Vec<Vec<f64>> = queries
        .iter()
        .map(|h| data.iter().map(|q| h.dist(q).powi(2)).collect())
        .collect();
    let truth: Vec<f64> = costs.iter().map(|c| c.iter().sum()).collect();
    let draws = 10_000;
    let mut est = vec![0.0; queries.len()];
    for s in 0..draws {
        let c = sample_l2_coreset(&smap, 2, 1, 1, 0.5, 0.1, SampleSize::Fixed(20), s)
            .map_err(|e| e.to_string())?;
        for (qi, cost) in costs.iter().enumerate() {
            est[qi] += c.indices().iter().zip(c.weights()).map(|(&a, &u)| u * cost[a]).sum::<f64>() / draws as f64;
        }
    }
    let rel: Vec<f64> = est.iter().zip(&truth).map(|(e, t)| (e - t).abs() / t).collect();
    let worst = rel.iter().copied().fold(0.0, f64::max);
    if worst > 0.02 {
        return Err(format!("relative errors {rel:?} exceed 2%"));
    }
    Ok(format!("3 queries, 10^4 draws of m=20, worst relative error {:.2}%", 100.0 * worst))
}

fn concentration() -> Outcome {
    let p = synthetic_dataset(1, &SyntheticConfig::default()).map_err(|e| e.to_string())?;
    let smap = assign_sensitivities(&p, 0, 1, &JkConfig::default()).map_err(|e| e.to_string())?;
    let m = sample_size(smap.total(), 2, 0, 1, 0.5, 0.1, 1.0).map_err(|e| e.to_string())?;
    let c = sample_l2_coreset(&smap, 2, 0, 1, 0.5, 0.1, SampleSize::Formula { c_sample: 1.0 }, 7)
        .map_err(|e| e.to_string())?;
    if c.len() != m {
        return Err(format!("drew {} points, formula gives {m}", c.len()));
    }
    let bbox = p.bounding_box();
    let mut r = rng(0xC3);
    let all = rows(&p);
    let mut good = 0;
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let center: Vec<f64> = bbox.iter().map(|&(lo, hi)| r.random_range(lo..=hi)).collect();
        let d2 = |q: &[f64]| norm(&sub(q, &center)).powi(2);
        let full: f64 = all.iter().map(|q| d2(q)).sum();
        let approx: f64 = c.indices().iter().zip(c.weights()).map(|(&a, &u)| u * d2(all[a])).sum();
        let ratio = approx / full;
        worst = worst.max((ratio - 1.0).abs());
        if (0.5..=1.5).contains(&ratio) {
            good += 1;
        }
    }
    if good < 90 {
        return Err(format!("only {good}/100 queries within 1 +- 0.5 (t = {:.2}, m = {m})", smap.total()));
    }
    Ok(format!(
        "{good}/100 queries within 1 +- 0.5, worst |ratio - 1| = {worst:.3}, t = {:.2}, m = {m}",
        smap.total()
    ))
}

// -------------------------------------------------------------- experiments

fn two_center_spec(dir: &std::path::Path) -> ExperimentSpec {
    ExperimentSpec::from_toml_str(&format!(
        r#"
sample_sizes = [20]
trials = 22
methods = ["ours", "uniform"]
seed = 11
output = "{}"

[dataset]
kind = "two-center"
n = 1000
far = 1000

[problem]
kind = "projective"
j = 0
k = 2
"#,
        dir.join("two_center.csv").display()
    ))
    .unwrap()
}

fn two_center_direction() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let spec = two_center_spec(dir.path());
    let res = run_experiment(&spec).map_err(|e| e.to_string())?;
    if res.is_partial() {
        return Err(format!("failed cells: {:?}", res.failures));
    }
    let mean = |m: Method| res.rows.iter().find(|r| r.method == m.name()).map(|r| r.mean_error).unwrap();
    let (ours, uniform) = (mean(Method::Ours), mean(Method::Uniform));
    // The optimum is zero, so errors are absolute costs; the far point alone
    // costs far^2 when missed.
    let far2 = 1e6;
    if !(uniform >= 10.0 * ours && uniform > 0.0) {
        return Err(format!("uniform mean {uniform} is not 10x ours {ours}"));
    }
    if ours > 1e-6 * far2 {
        return Err(format!("coreset error {ours} is not near zero"));
    }
    Ok(format!("22 trials at m = 20: ours {ours:.3e}, uniform {uniform:.3e} (reference {:.1e})", res.reference_cost))
}

fn determinism() -> Outcome {
    fn fingerprint() -> Vec<u64> {
        let mut out = Vec::new();
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        let synth = synthetic_dataset(
            3,
            &SyntheticConfig {
                n_axis: 400,
                ..SyntheticConfig::default()
            },
        )
        .unwrap();
        out.extend(bits(synth.as_flat()));
        let grid: Vec<[f64; 2]> = (0..64).map(|i| [(i % 8) as f64, ((i * 5) % 8) as f64]).collect();
        let g = PointSet::from_rows(&grid).unwrap().with_grid(8).unwrap();
        out.extend(coreset_jk(&g, 1, 2, &JkConfig::default()).unwrap().indices().iter().map(|&i| i as u64));
        let cfg = L2Config {
            size: SampleSize::Fixed(50),
            rng_seed: 5,
            ..L2Config::default()
        };
        let l2 = l2_coreset(&g, 1, 1, 0.5, 0.1, &cfg).unwrap();
        out.extend(l2.indices().iter().map(|&i| i as u64));
        out.extend(bits(l2.weights()));
        let (inst, _) = regression_instance(9);
        let spec = LossSpec::new(LossKind::Huber, 1.0).unwrap();
        out.extend(regression_linf_coreset(&inst, &spec, &HullConfig::default()).unwrap().indices().iter().map(|&i| i as u64));
        let solve = SolveConfig {
            rng_seed: 8,
            ..SolveConfig::default()
        };
        let em = em_projective(&g, None, 1, 2, &CostFn::Power(2.0), &solve).unwrap();
        out.push(em.cost.to_bits());
        let fit = robust_regression_solve(&inst, None, &CostFn::Loss(spec), &solve).unwrap();
        out.extend(bits(&fit.w));
        let report = projcore::linf_coreset::verify_linf_ratio(&g, &[0, 7, 56, 63], 1, 1.0, 300, 4).unwrap();
        out.push(report.max_ratio.to_bits());
        let dir = tempfile::tempdir().unwrap();
        let mut spec = two_center_spec(dir.path());
        spec.trials = 3;
        for row in run_experiment(&spec).unwrap().rows {
            out.extend([row.sample_size as u64, row.trial_count as u64, row.mean_error.to_bits(), row.std_error.to_bits()]);
        }
        out
    }
    let (a, b) = (fingerprint(), fingerprint());
    if a != b {
        return Err("two runs with equal seeds differ".into());
    }
    Ok(format!(
        "synth, coreset (linf, l2), regression coreset, solve, verify and experiment paths agree bitwise ({} words); \
         the binary is checked by the cli tests",
        a.len()
    ))
}

// ------------------------------------------------------------------ rounding

fn lowner_sandwich() -> Outcome {
    const TOL: f64 = 1e-6;
    let mut worst_outer = 0.0f64;
    let mut worst_inner = 0.0f64;
    for s in 0..100u64 {
        let mut r = rng(0x10E ^ s);
        let d = r.random_range(1..=6);
        let n = r.random_range(d + 1..=d + 60);
        let pts: Vec<Vec<f64>> = (0..n)
            .map(|_| match s % 3 {
                0 => gauss(&mut r, d),
                1 => (0..d).map(|_| r.random_range(-1.0..1.0) * (1 + s % 5) as f64).collect(),
                _ => {
                    let g = gauss(&mut r, d);
                    let nn = norm(&g);
                    g.iter().map(|x| x / nn).collect()
                }
            })
            .collect();
        let q = PointSet::from_rows(&pts).unwrap();
        let e = lowner_rounding(&q, None, TOL).map_err(|e| format!("set {s} (d={d}, n={n}): {e}"))?;
        let g = e.form();
        let c = e.center();
        for p in &pts {
            let v = DVector::from_column_slice(&sub(p, c));
            let quad = (v.transpose() * g * &v)[(0, 0)];
            worst_outer = worst_outer.max(quad - 1.0);
            if quad > 1.0 + TOL {
                return Err(format!("set {s}: point outside E, (q-c)^T G (q-c) = {quad}"));
            }
        }
        let eig = SymmetricEigen::new(g.clone());
        let alpha = d as f64;
        for k in 0..d {
            let axis = eig.eigenvectors.column(k);
            let len = 1.0 / (alpha * eig.eigenvalues[k].sqrt());
            for sign in [-1.0, 1.0] {
                let v: Vec<f64> = (0..d).map(|a| c[a] + sign * len * axis[a]).collect();
                let gap = certificate_gap(&q, &v).map_err(|e| format!("set {s}, axis {k}: {e}"))? / len;
                worst_inner = worst_inner.max(gap);
                if gap > TOL {
                    return Err(format!("set {s}: axis vertex {k} of the 1/{d} dilation is {gap:e} outside conv(Q)"));
                }
            }
        }
    }
    Ok(format!(
        "100 sets, d <= 6: max outer excess {worst_outer:.1e}, max inner gap {worst_inner:.1e} (relative to axis length)"
    ))
}
