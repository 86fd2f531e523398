// SPDX-License-Identifier: Apache-2.0

use std::time::{Instant, SystemTime, UNIX_EPOCH};

use projcore::bench::{
    run_experiment, sidecar_path, synthetic_dataset, two_center_dataset, write_results, CoresetSpec, Dataset,
    ExperimentSpec, ProblemSpec, SyntheticConfig, Task,
};
use projcore::geometry::affine_span_of;
use projcore::linf_coreset::{
    coreset_jk, single_flat_factor, verify_cylinder_coverage, verify_linf_ratio, BaseCase, HullConfig, VerifyConfig,
};
use projcore::losses::{regression_linf_coreset, verify_regression_ratio, RegressionInstance};
use projcore::sensitivity::{l2_coreset, sample_l2_coreset, L2Config, SampleSize};
use projcore::solver::{clustering_cost, em_projective, regression_objective, robust_regression_solve, CostFn, SolveConfig};
use projcore::{rng, Error, JkConfig, LossSpec, WeightedCoreset};
use serde_json::json;

use crate::files::{load_input, read_coreset, write_coreset};
use crate::{
    CoresetArgs, ExperimentArgs, LossArgs, Mode, RegressionCoresetArgs, SampleArgs, SolveArgs, SynthArgs, SynthKind,
    VerifyArgs,
};

/// An error with the exit code it maps to.
pub struct Failure {
    pub error: Error,
    pub code: u8,
}

impl From<Error> for Failure {
    fn from(error: Error) -> Self {
        let code = match &error {
            Error::InvalidArgument(_) | Error::Parameter(_) | Error::Config { .. } => 2,
            Error::Io(_) | Error::Csv(_) | Error::Parse { .. } | Error::Column(_) | Error::DimensionMismatch { .. } => 3,
            _ => 4,
        };
        Self { error, code }
    }
}

type Outcome = std::result::Result<u8, Failure>;

fn arg_error(msg: impl Into<String>) -> Failure {
    Error::InvalidArgument(msg.into()).into()
}

/// The given seed, or a fresh one announced on standard error.
fn seed_or_fresh(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let nanos = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_nanos() as u64);
        let seed = rng::mix(nanos ^ u64::from(std::process::id()));
        eprintln!("seed: {seed}");
        seed
    })
}

fn loss_spec(args: &LossArgs) -> Result<Option<LossSpec>, Failure> {
    match &args.loss {
        Some(name) => Ok(Some(LossSpec::from_name(name, args.lambda, args.z.unwrap_or(1.0))?)),
        None => Ok(None),
    }
}

fn cost_fn(args: &LossArgs) -> Result<CostFn, Failure> {
    Ok(match loss_spec(args)? {
        Some(spec) => CostFn::Loss(spec),
        None => CostFn::Power(args.z.unwrap_or(2.0)),
    })
}

fn sample_size(args: &SampleArgs) -> SampleSize {
    match args.size {
        Some(m) => SampleSize::Fixed(m),
        None => SampleSize::Formula { c_sample: args.c_sample },
    }
}

fn finish_sample(c: WeightedCoreset, args: &SampleArgs) -> WeightedCoreset {
    if args.merge {
        c.merged()
    } else {
        c
    }
}

pub fn synth(a: &SynthArgs) -> Outcome {
    let points = match a.kind {
        SynthKind::Synthetic => {
            let mut cfg = SyntheticConfig {
                n_outliers: a.outliers,
                ..SyntheticConfig::default()
            };
            if let Some(n) = a.n {
                cfg.n_axis = n;
            }
            synthetic_dataset(seed_or_fresh(a.seed), &cfg)?
        }
        SynthKind::TwoCenter => two_center_dataset(a.n.unwrap_or(1000), a.dim, a.far)?,
    };
    let mut w = csv::Writer::from_path(&a.output).map_err(Error::from)?;
    let header: Vec<String> = (0..points.dim()).map(|c| format!("x{c}")).collect();
    w.write_record(&header).map_err(Error::from)?;
    for p in points.iter() {
        w.write_record(p.iter().map(|v| v.to_string())).map_err(Error::from)?;
    }
    w.flush().map_err(Error::from)?;
    println!("points {}", points.len());
    Ok(0)
}

pub fn coreset(a: &CoresetArgs) -> Outcome {
    let data = load_input(&a.input, None)?;
    let points = &data.points;
    let jk = JkConfig {
        hull: HullConfig {
            z: a.z,
            ..HullConfig::default()
        },
        c_exp: a.c_exp,
        node_budget: a.node_budget,
        base: if a.project {
            BaseCase::BestFitProjection
        } else {
            BaseCase::AffineHull
        },
    };
    let started = Instant::now();
    match a.sample.mode {
        Mode::Linf => {
            let c = coreset_jk(points, a.j, a.k, &jk)?;
            eprintln!("built in {:.3}s", started.elapsed().as_secs_f64());
            write_coreset(&a.output, c.indices(), &vec![1.0; c.len()])?;
            println!("size {}", c.len());
            println!("guarantee_factor {}", c.guarantee_factor());
            if c.base_residual() > 0.0 {
                println!("base_residual {}", c.base_residual());
            }
        }
        Mode::L2 => {
            let cfg = L2Config {
                jk,
                size: sample_size(&a.sample),
                rng_seed: seed_or_fresh(a.sample.seed),
            };
            let c = l2_coreset(points, a.j, a.k, a.sample.epsilon, a.sample.delta, &cfg)?;
            let c = finish_sample(c, &a.sample);
            eprintln!("built in {:.3}s", started.elapsed().as_secs_f64());
            write_coreset(&a.output, c.indices(), c.weights())?;
            println!("size {}", c.len());
        }
    }
    Ok(0)
}

pub fn regression_coreset(a: &RegressionCoresetArgs) -> Outcome {
    let name = a.loss.loss.clone().ok_or_else(|| arg_error("--loss is required"))?;
    let spec = LossSpec::from_name(&name, a.loss.lambda, a.loss.z.unwrap_or(1.0))?;
    let data = load_input(&a.input, Some(&a.label))?;
    let labels = data.labels.expect("label column requested");
    let started = Instant::now();
    match a.sample.mode {
        Mode::Linf => {
            let inst = RegressionInstance::new(data.points, labels)?;
            let c = regression_linf_coreset(&inst, &spec, &HullConfig::default())?;
            eprintln!("built in {:.3}s", started.elapsed().as_secs_f64());
            write_coreset(&a.output, c.indices(), &vec![1.0; c.len()])?;
            println!("size {}", c.len());
            println!("guarantee_factor {}", c.guarantee_factor());
        }
        Mode::L2 => {
            let d = data.points.dim();
            let problem = ProblemSpec::Regression {
                loss: name,
                lambda: Some(a.loss.lambda),
                z: a.loss.z,
            };
            let task = Task::new(&problem, Dataset::new(data.points, Some(labels)))?;
            let smap = task.sensitivities(&CoresetSpec::default())?;
            let seed = seed_or_fresh(a.sample.seed);
            let c = sample_l2_coreset(&smap, d, d, 1, a.sample.epsilon, a.sample.delta, sample_size(&a.sample), seed)?;
            let c = finish_sample(c, &a.sample);
            eprintln!("built in {:.3}s", started.elapsed().as_secs_f64());
            write_coreset(&a.output, c.indices(), c.weights())?;
            println!("size {}", c.len());
        }
    }
    Ok(0)
}

pub fn solve(a: &SolveArgs) -> Outcome {
    let data = load_input(&a.input, a.label.as_deref())?;
    let cost = cost_fn(&a.loss)?;
    let subset = a.coreset.as_ref().map(|p| read_coreset(p, data.points.len())).transpose()?;
    let cfg = SolveConfig {
        restarts: a.restarts,
        em_steps: a.em_steps,
        max_iter: a.max_iter,
        rng_seed: seed_or_fresh(a.seed),
        ..SolveConfig::default()
    };
    let started = Instant::now();
    let report = match data.labels {
        Some(labels) => {
            let inst = RegressionInstance::new(data.points, labels)?;
            let fit = match &subset {
                None => robust_regression_solve(&inst, None, &cost, &cfg)?,
                Some(c) => {
                    let sub = RegressionInstance::new(
                        inst.points().subset(c.indices())?,
                        c.indices().iter().map(|&i| inst.labels()[i]).collect(),
                    )?;
                    robust_regression_solve(&sub, Some(c.weights()), &cost, &cfg)?
                }
            };
            json!({
                "problem": "regression",
                "w": fit.w,
                "objective": fit.objective,
                "full_cost": regression_objective(&inst, None, &fit.w, &cost),
                "ridge_used": fit.ridge_used,
            })
        }
        None => {
            let fit = match &subset {
                None => em_projective(&data.points, None, a.j, a.k, &cost, &cfg)?,
                Some(c) => em_projective(&data.points.subset(c.indices())?, Some(c.weights()), a.j, a.k, &cost, &cfg)?,
            };
            let flats: Vec<_> = fit
                .flats
                .flats()
                .iter()
                .map(|f| json!({ "offset": f.offset(), "basis": f.basis_columns().collect::<Vec<_>>() }))
                .collect();
            json!({
                "problem": "projective",
                "j": a.j,
                "k": a.k,
                "flats": flats,
                "objective": fit.cost,
                "full_cost": clustering_cost(&data.points, None, &fit.flats, &cost)?,
            })
        }
    };
    eprintln!("solved in {:.3}s", started.elapsed().as_secs_f64());
    let text = serde_json::to_string_pretty(&report).expect("finite json") + "\n";
    match &a.output {
        Some(path) => std::fs::write(path, text).map_err(Error::from)?,
        None => print!("{text}"),
    }
    Ok(0)
}

const RATIO_SLACK: f64 = 1e-9;

pub fn verify(a: &VerifyArgs) -> Outcome {
    let data = load_input(&a.input, a.label.as_deref())?;
    let n = data.points.len();
    let coreset = read_coreset(&a.coreset, n)?;
    let mut indices = coreset.indices().to_vec();
    indices.sort_unstable();
    indices.dedup();
    let seed = seed_or_fresh(a.seed);

    if let Some(labels) = data.labels {
        let name = a.loss.as_deref().expect("clap requires --loss with --label");
        let spec = LossSpec::from_name(name, a.lambda, a.z)?;
        let inst = RegressionInstance::new(data.points, labels)?;
        let bound = a.bound.unwrap_or_else(|| spec.guarantee_factor(inst.dim()));
        let r = verify_regression_ratio(&inst, &indices, &spec, a.queries, seed)?;
        return Ok(report_ratio(r.max_ratio, bound, a.queries));
    }
    if a.k >= 2 {
        let cfg = VerifyConfig {
            xi: a.xi,
            num_queries: a.queries,
            rng_seed: seed,
        };
        let r = verify_cylinder_coverage(&data.points, &indices, a.j, a.k, &cfg)?;
        println!("families {}", r.families);
        println!("violations {}", r.violations);
        println!("worst_expansion {}", r.worst_expansion);
        println!("xi {}", a.xi);
        return Ok(if r.violations == 0 { 0 } else { 5 });
    }
    let all: Vec<usize> = (0..n).collect();
    let m = affine_span_of(&data.points, &all).dim();
    let bound = a.bound.unwrap_or_else(|| single_flat_factor(a.j.max(m), a.z));
    let r = verify_linf_ratio(&data.points, &indices, a.j, a.z, a.queries, seed)?;
    Ok(report_ratio(r.max_ratio, bound, r.queries))
}

fn report_ratio(max_ratio: f64, bound: f64, queries: usize) -> u8 {
    println!("queries {queries}");
    println!("max_ratio {max_ratio}");
    println!("bound {bound}");
    if max_ratio <= bound * (1.0 + RATIO_SLACK) {
        println!("ok");
        0
    } else {
        println!("violated");
        5
    }
}

pub fn experiment(a: &ExperimentArgs) -> Outcome {
    let spec = ExperimentSpec::load(&a.config)?;
    let started = Instant::now();
    let result = run_experiment(&spec)?;
    write_results(&spec, &result)?;
    eprintln!("finished in {:.2}s", started.elapsed().as_secs_f64());
    println!("rows {}", result.rows.len());
    println!("results {}", spec.output.display());
    println!("sidecar {}", sidecar_path(&spec).display());
    if result.is_partial() {
        for f in &result.failures {
            eprintln!("failed: {} m={} trial {}: {}", f.method, f.sample_size, f.trial, f.message);
        }
        println!("failed_cells {}", result.failures.len());
        return Ok(6);
    }
    Ok(0)
}
