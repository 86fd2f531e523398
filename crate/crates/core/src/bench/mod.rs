// SPDX-License-Identifier: Apache-2.0

//! Coreset-versus-uniform experiments.
//!
//! For every (method, sample size, trial) cell a compressed weighted set is
//! built, the solver runs on it, and the resulting solution is scored on the
//! full data against a reference optimum computed once with a larger
//! restart budget. Cells are independent and seeded from
//! `(seed, trial, size, method)`.

mod data;
mod spec;

pub use data::{
    dataset_hash, load_csv, synthetic_dataset, two_center_dataset, uniform_baseline, LoadedData,
    SyntheticConfig,
};
pub use spec::{
    BaseCaseName, CoresetSpec, DatasetSpec, ExperimentSpec, Method, ProblemSpec, SolverSpec,
};

use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::PointSet;
use crate::linf_coreset::HullConfig;
use crate::losses::{regression_linf_coreset, LossSpec, RegressionInstance};
use crate::sensitivity::{
    assign_sensitivities, assign_sensitivities_with, sample_l2_coreset, SampleSize, SensitivityMap,
    WeightedCoreset,
};
use crate::solver::{
    approximation_error, clustering_cost, em_projective, regression_objective, robust_regression_solve,
    CostFn, FlatSet, ZERO_REFERENCE,
};
use crate::{par, rng};

/// A loaded dataset with its content hash.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub points: PointSet,
    pub labels: Option<Vec<f64>>,
    pub hash: String,
}

impl Dataset {
    pub fn new(points: PointSet, labels: Option<Vec<f64>>) -> Self {
        let hash = dataset_hash(&points, labels.as_deref());
        Self { points, labels, hash }
    }

    pub fn load(spec: &DatasetSpec) -> Result<Self> {
        match spec {
            DatasetSpec::Synthetic {
                seed,
                params,
                regression: false,
            } => Ok(Self::new(synthetic_dataset(*seed, params)?, None)),
            DatasetSpec::Synthetic {
                seed,
                params,
                regression: true,
            } => {
                let p = synthetic_dataset(*seed, params)?;
                let features: Vec<[f64; 2]> = p.iter().map(|q| [q[0], 1.0]).collect();
                let labels = p.iter().map(|q| q[1]).collect();
                Ok(Self::new(PointSet::from_rows(&features)?, Some(labels)))
            }
            DatasetSpec::TwoCenter { n, d, far } => Ok(Self::new(two_center_dataset(*n, *d, *far)?, None)),
            DatasetSpec::Csv {
                path,
                features,
                label,
                grid,
            } => {
                let loaded = load_csv(path, features, label.as_deref())?;
                let points = match grid {
                    Some(g) => loaded.points.with_grid(*g)?,
                    None => loaded.points.infer_grid(),
                };
                Ok(Self::new(points, loaded.labels))
            }
        }
    }

    fn instance(&self) -> Result<RegressionInstance> {
        let labels = self
            .labels
            .clone()
            .ok_or_else(|| Error::InvalidArgument("regression needs a label column".into()))?;
        RegressionInstance::new(self.points.clone(), labels)
    }
}

/// A solution produced on a compressed set.
#[derive(Debug, Clone)]
pub enum Solution {
    Flats(FlatSet),
    Weights(Vec<f64>),
}

/// The optimization problem bound to a dataset.
#[derive(Debug, Clone)]
pub struct Task {
    problem: ProblemSpec,
    cost: CostFn,
    data: Dataset,
    instance: Option<RegressionInstance>,
}

impl Task {
    pub fn new(problem: &ProblemSpec, data: Dataset) -> Result<Self> {
        let cost = problem.cost()?;
        let instance = match problem {
            ProblemSpec::Regression { .. } => Some(data.instance()?),
            ProblemSpec::Projective { j, .. } => {
                if *j >= data.points.dim() {
                    return Err(spec::config_err("problem.j", format!("must be below the dimension {}", data.points.dim())));
                }
                None
            }
        };
        Ok(Self {
            problem: problem.clone(),
            cost,
            data,
            instance,
        })
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    /// Solve on `points[indices]` with `weights`, or on everything.
    pub fn solve(&self, subset: Option<&WeightedCoreset>, cfg: &crate::solver::SolveConfig) -> Result<Solution> {
        match (&self.problem, &self.instance) {
            (ProblemSpec::Projective { j, k, .. }, _) => {
                let fit = match subset {
                    None => em_projective(&self.data.points, None, *j, *k, &self.cost, cfg)?,
                    Some(c) => {
                        let pts = self.data.points.subset(c.indices())?;
                        em_projective(&pts, Some(c.weights()), *j, *k, &self.cost, cfg)?
                    }
                };
                Ok(Solution::Flats(fit.flats))
            }
            (ProblemSpec::Regression { .. }, Some(inst)) => {
                let fit = match subset {
                    None => robust_regression_solve(inst, None, &self.cost, cfg)?,
                    Some(c) => {
                        let sub = RegressionInstance::new(
                            inst.points().subset(c.indices())?,
                            c.indices().iter().map(|&i| inst.labels()[i]).collect(),
                        )?;
                        robust_regression_solve(&sub, Some(c.weights()), &self.cost, cfg)?
                    }
                };
                Ok(Solution::Weights(fit.w))
            }
            (ProblemSpec::Regression { .. }, None) => unreachable!("regression tasks carry an instance"),
        }
    }

    /// Cost of a solution on the full data.
    pub fn full_cost(&self, solution: &Solution) -> Result<f64> {
        match (solution, &self.instance) {
            (Solution::Flats(f), _) => clustering_cost(&self.data.points, None, f, &self.cost),
            (Solution::Weights(w), Some(inst)) => Ok(regression_objective(inst, None, w, &self.cost)),
            (Solution::Weights(_), None) => Err(Error::InvalidArgument("regression solution for a clustering task".into())),
        }
    }

    /// Sensitivities from peeled L∞ coresets of the task's kind.
    pub fn sensitivities(&self, coreset: &CoresetSpec) -> Result<SensitivityMap> {
        match (&self.problem, &self.instance) {
            (ProblemSpec::Projective { j, k, .. }, _) => {
                assign_sensitivities(&self.data.points, *j, *k, &coreset.jk_config())
            }
            (ProblemSpec::Regression { .. }, Some(inst)) => {
                let spec = match &self.cost {
                    CostFn::Loss(s) => s.clone(),
                    CostFn::Power(z) => LossSpec::power(*z)?,
                };
                assign_sensitivities_with(inst.len(), |remaining| {
                    let sub = RegressionInstance::new(
                        inst.points().subset(remaining)?,
                        remaining.iter().map(|&i| inst.labels()[i]).collect(),
                    )?;
                    let c = regression_linf_coreset(&sub, &spec, &HullConfig::default())?;
                    Ok(c.indices().iter().map(|&a| remaining[a]).collect())
                })
            }
            (ProblemSpec::Regression { .. }, None) => unreachable!("regression tasks carry an instance"),
        }
    }
}

/// One row of the frozen results table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub method: String,
    pub sample_size: usize,
    pub trial_count: usize,
    pub mean_error: f64,
    pub std_error: f64,
    pub mean_time_s: f64,
    pub std_time_s: f64,
}

/// The column order of the results CSV.
pub const RESULT_COLUMNS: [&str; 7] = [
    "method",
    "sample_size",
    "trial_count",
    "mean_error",
    "std_error",
    "mean_time_s",
    "std_time_s",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellFailure {
    pub method: String,
    pub sample_size: usize,
    pub trial: usize,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub rows: Vec<ResultRow>,
    pub failures: Vec<CellFailure>,
    pub reference_cost: f64,
    /// The reference cost was zero, so errors are absolute costs.
    pub error_absolute: bool,
    pub dataset_hash: String,
    pub n: usize,
    pub d: usize,
}

impl ExperimentResult {
    pub fn is_partial(&self) -> bool {
        !self.failures.is_empty()
    }
}

struct Cell {
    error: f64,
    time: f64,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Runs every cell of the experiment. Per-cell failures are collected in
/// the result; only dataset, reference or setup failures are returned as
/// errors.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    spec.validate()?;
    let task = Task::new(&spec.problem, Dataset::load(&spec.dataset)?)?;
    run_task(spec, &task)
}

/// [`run_experiment`] on an already loaded task.
pub fn run_task(spec: &ExperimentSpec, task: &Task) -> Result<ExperimentResult> {
    let points = &task.data.points;
    let (n, d) = (points.len(), points.dim());
    let started = Instant::now();
    let reference = task.solve(None, &spec.solver.solve_config(rng::derive(spec.seed, &[0xBEEF]), true))?;
    let reference_cost = task.full_cost(&reference)?;
    log::info!("reference cost {reference_cost} in {:.2?}", started.elapsed());

    let smap = if spec.methods.contains(&Method::Ours) {
        let started = Instant::now();
        let smap = task.sensitivities(&spec.coreset).map_err(|e| e.to_string());
        log::info!("sensitivities in {:.2?}", started.elapsed());
        Some(smap)
    } else {
        None
    };
    let (j, k) = spec.problem.jk(d);

    let cells: Vec<(usize, usize, usize)> = (0..spec.methods.len())
        .flat_map(|mi| {
            (0..spec.sample_sizes.len()).flat_map(move |si| (0..spec.trials).map(move |t| (mi, si, t)))
        })
        .collect();
    let outcomes = par::map(cells.len(), |c| {
        let (mi, si, trial) = cells[c];
        let (method, m) = (spec.methods[mi], spec.sample_sizes[si]);
        let seed = rng::derive(spec.seed, &[trial as u64, m as u64, mi as u64]);
        let start = Instant::now();
        let sample = match method {
            Method::Uniform => uniform_baseline(n, m, seed),
            Method::Ours => match smap.as_ref().expect("computed when ours is requested") {
                Ok(s) => sample_l2_coreset(s, d, j, k, spec.coreset.epsilon, spec.coreset.delta, SampleSize::Fixed(m), seed)
                    .map(|c| c.merged()),
                Err(msg) => Err(Error::InvalidArgument(format!("sensitivities failed: {msg}"))),
            },
        }?;
        let solution = task.solve(Some(&sample), &spec.solver.solve_config(seed, false))?;
        let time = start.elapsed().as_secs_f64().max(1e-9);
        let cost = task.full_cost(&solution)?;
        Ok::<Cell, Error>(Cell {
            error: approximation_error(cost, reference_cost).value,
            time,
        })
    });

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (mi, method) in spec.methods.iter().enumerate() {
        for (si, &m) in spec.sample_sizes.iter().enumerate() {
            let mut errors = Vec::new();
            let mut times = Vec::new();
            for trial in 0..spec.trials {
                let idx = (mi * spec.sample_sizes.len() + si) * spec.trials + trial;
                match &outcomes[idx] {
                    Ok(cell) => {
                        errors.push(cell.error);
                        times.push(cell.time);
                    }
                    Err(e) => failures.push(CellFailure {
                        method: method.name().to_owned(),
                        sample_size: m,
                        trial,
                        message: e.to_string(),
                    }),
                }
            }
            let (mean_error, std_error) = mean_std(&errors);
            let (mean_time_s, std_time_s) = mean_std(&times);
            rows.push(ResultRow {
                method: method.name().to_owned(),
                sample_size: m,
                trial_count: errors.len(),
                mean_error,
                std_error,
                mean_time_s,
                std_time_s,
            });
        }
    }
    Ok(ExperimentResult {
        rows,
        failures,
        reference_cost,
        error_absolute: reference_cost.abs() <= ZERO_REFERENCE,
        dataset_hash: task.data.hash.clone(),
        n,
        d,
    })
}

/// Path of the JSON sidecar next to the results CSV.
pub fn sidecar_path(spec: &ExperimentSpec) -> PathBuf {
    spec.output.with_extension("json")
}

/// Writes the results CSV and its JSON sidecar.
pub fn write_results(spec: &ExperimentSpec, result: &ExperimentResult) -> Result<()> {
    if let Some(dir) = spec.output.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let mut w = csv::Writer::from_path(&spec.output)?;
    for row in &result.rows {
        w.serialize(row)?;
    }
    w.flush()?;
    let sidecar = serde_json::json!({
        "config": spec,
        "dataset_hash": result.dataset_hash,
        "n": result.n,
        "d": result.d,
        "reference_cost": result.reference_cost,
        "error_absolute": result.error_absolute,
        "failures": result.failures,
        "columns": RESULT_COLUMNS,
    });
    let text = serde_json::to_string_pretty(&sidecar).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    fs::write(sidecar_path(spec), text + "\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal(dir: &std::path::Path) -> ExperimentSpec {
        ExperimentSpec::from_toml_str(&format!(
            r#"
sample_sizes = [20]
trials = 1
methods = ["uniform"]
output = "{}"

[dataset]
kind = "two-center"
n = 60
far = 50

[problem]
kind = "projective"
j = 0
k = 2
"#,
            dir.join("r.csv").display()
        ))
        .unwrap()
    }

    #[test]
    fn synthetic_regression_view() {
        let spec = DatasetSpec::Synthetic {
            seed: 2,
            params: SyntheticConfig {
                n_axis: 30,
                n_outliers: 3,
                ..SyntheticConfig::default()
            },
            regression: true,
        };
        let data = Dataset::load(&spec).unwrap();
        let labels = data.labels.unwrap();
        assert_eq!((data.points.len(), data.points.dim()), (33, 2));
        assert!(data.points.iter().all(|p| p[1] == 1.0));
        assert_eq!(labels.iter().filter(|&&y| y != 0.0).count(), 3);
    }

    #[test]
    fn minimal_run_writes_one_row() {
        let dir = tempfile::tempdir().unwrap();
        let spec = minimal(dir.path());
        let res = run_experiment(&spec).unwrap();
        assert_eq!(res.rows.len(), 1);
        assert!(res.rows[0].mean_time_s > 0.0);
        write_results(&spec, &res).unwrap();
        let text = std::fs::read_to_string(&spec.output).unwrap();
        assert_eq!(text.lines().next().unwrap(), RESULT_COLUMNS.join(","));
        assert_eq!(text.lines().count(), 2);
        assert!(sidecar_path(&spec).exists());
    }

    #[test]
    fn rerun_is_identical() {
        let dir = tempfile::tempdir().unwrap();
        let mut spec = minimal(dir.path());
        spec.methods = vec![Method::Ours, Method::Uniform];
        spec.trials = 3;
        let a = run_experiment(&spec).unwrap();
        let b = run_experiment(&spec).unwrap();
        let strip = |r: &ExperimentResult| -> Vec<(String, f64, f64)> {
            r.rows.iter().map(|x| (x.method.clone(), x.mean_error, x.std_error)).collect()
        };
        assert_eq!(strip(&a), strip(&b));
        assert_eq!(a.rows.len(), 2);
    }

    #[test]
    fn failures_are_per_cell() {
        let dir = tempfile::tempdir().unwrap();
        let mut spec = minimal(dir.path());
        spec.sample_sizes = vec![20, 1000];
        let res = run_experiment(&spec).unwrap();
        assert_eq!(res.rows.len(), 2);
        assert!(res.is_partial());
        assert_eq!(res.rows[1].trial_count, 0);
        assert_eq!(res.rows[0].trial_count, 1);
    }
}
