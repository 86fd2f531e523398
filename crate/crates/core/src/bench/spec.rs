// SPDX-License-Identifier: Apache-2.0

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linf_coreset::{BaseCase, JkConfig};
use crate::losses::LossSpec;
use crate::solver::{CostFn, SolveConfig};

use super::data::SyntheticConfig;

/// Declarative experiment description, read from TOML.
///
/// ```toml
/// sample_sizes = [100, 200, 300]
/// trials = 22
/// methods = ["ours", "uniform"]
/// seed = 7
/// output = "results/synthetic.csv"
///
/// [dataset]
/// kind = "synthetic"
/// seed = 1
///
/// [problem]
/// kind = "projective"
/// j = 0
/// k = 2
/// z = 2.0
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub dataset: DatasetSpec,
    pub problem: ProblemSpec,
    pub sample_sizes: Vec<usize>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default)]
    pub seed: u64,
    pub output: PathBuf,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub coreset: CoresetSpec,
}

fn default_trials() -> usize {
    22
}

fn default_methods() -> Vec<Method> {
    vec![Method::Ours, Method::Uniform]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Ours,
    Uniform,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Ours => "ours",
            Method::Uniform => "uniform",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DatasetSpec {
    Synthetic {
        #[serde(default)]
        seed: u64,
        #[serde(default)]
        params: SyntheticConfig,
        /// Regress `y` on `(x, 1)` instead of using the raw 2-D points.
        #[serde(default)]
        regression: bool,
    },
    TwoCenter {
        n: usize,
        #[serde(default = "default_two_center_d")]
        d: usize,
        far: u64,
    },
    Csv {
        /// Relative paths are resolved against the config file's directory.
        path: PathBuf,
        /// Empty selects every column except the label.
        #[serde(default)]
        features: Vec<String>,
        #[serde(default)]
        label: Option<String>,
        /// Declare the data an integer grid with this bound.
        #[serde(default)]
        grid: Option<u64>,
    },
}

fn default_two_center_d() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProblemSpec {
    /// `k` flats of dimension `j`; cost is `dist^z` unless `loss` is set.
    Projective {
        j: usize,
        k: usize,
        #[serde(default)]
        z: Option<f64>,
        #[serde(default)]
        loss: Option<String>,
        #[serde(default)]
        lambda: Option<f64>,
    },
    Regression {
        loss: String,
        #[serde(default)]
        lambda: Option<f64>,
        /// Exponent for `loss = "power"`.
        #[serde(default)]
        z: Option<f64>,
    },
}

impl ProblemSpec {
    pub fn cost(&self) -> Result<CostFn> {
        let loss = |name: &str, lambda: Option<f64>, z: Option<f64>| -> Result<CostFn> {
            LossSpec::from_name(name, lambda.unwrap_or(1.0), z.unwrap_or(1.0))
                .map(CostFn::Loss)
                .map_err(|e| config_err("problem.loss", e.to_string()))
        };
        match self {
            ProblemSpec::Projective { z, loss: None, .. } => Ok(CostFn::Power(z.unwrap_or(2.0))),
            ProblemSpec::Projective {
                loss: Some(name),
                lambda,
                z,
                ..
            } => loss(name, *lambda, *z),
            ProblemSpec::Regression { loss: name, lambda, z } => loss(name, *lambda, *z),
        }
    }

    /// Flat dimension and count used by the sensitivity formula.
    pub fn jk(&self, d: usize) -> (usize, usize) {
        match self {
            ProblemSpec::Projective { j, k, .. } => (*j, *k),
            ProblemSpec::Regression { .. } => (d, 1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSpec {
    pub restarts: usize,
    pub em_steps: usize,
    pub max_iter: usize,
    /// The reference optimum gets this many times more restarts.
    pub reference_factor: usize,
}

impl Default for SolverSpec {
    fn default() -> Self {
        Self {
            restarts: 10,
            em_steps: 6,
            max_iter: 100,
            reference_factor: 10,
        }
    }
}

impl SolverSpec {
    pub fn solve_config(&self, rng_seed: u64, reference: bool) -> SolveConfig {
        SolveConfig {
            restarts: if reference {
                self.restarts * self.reference_factor
            } else {
                self.restarts
            },
            em_steps: self.em_steps,
            max_iter: self.max_iter,
            rng_seed,
            ..SolveConfig::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaseCaseName {
    AffineHull,
    BestFitProjection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoresetSpec {
    /// Recorded with each sample; sample sizes come from `sample_sizes`.
    pub epsilon: f64,
    pub delta: f64,
    pub c_exp: f64,
    pub node_budget: usize,
    pub base_case: BaseCaseName,
}

impl Default for CoresetSpec {
    fn default() -> Self {
        let jk = JkConfig::default();
        Self {
            epsilon: 0.5,
            delta: 0.1,
            c_exp: jk.c_exp,
            node_budget: jk.node_budget,
            base_case: BaseCaseName::AffineHull,
        }
    }
}

impl CoresetSpec {
    pub fn jk_config(&self) -> JkConfig {
        JkConfig {
            c_exp: self.c_exp,
            node_budget: self.node_budget,
            base: match self.base_case {
                BaseCaseName::AffineHull => BaseCase::AffineHull,
                BaseCaseName::BestFitProjection => BaseCase::BestFitProjection,
            },
            ..JkConfig::default()
        }
    }
}

pub(crate) fn config_err(path: &str, message: impl Into<String>) -> Error {
    Error::Config {
        path: path.to_owned(),
        message: message.into(),
    }
}

/// Tagged enums buffer their fields, so a type error inside one only reports
/// the enum's own path. Finds the field by dropping one key at a time: only
/// dropping the culprit changes the error.
fn tagged_field_path<T: serde::de::DeserializeOwned>(text: &str, key: &str, message: &str) -> String {
    let Some(table) = text.parse::<toml::Table>().ok().and_then(|t| t.get(key)?.as_table().cloned()) else {
        return key.to_owned();
    };
    for field in table.keys().filter(|f| *f != "kind") {
        let mut reduced = table.clone();
        reduced.remove(field);
        match T::deserialize(toml::Value::Table(reduced)) {
            Err(e) if e.message() == message => {}
            _ => return format!("{key}.{field}"),
        }
    }
    key.to_owned()
}

impl ExperimentSpec {
    /// Parses and validates; errors name the offending field path.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let de = toml::de::Deserializer::parse(text).map_err(|e| config_err("", e.message().to_owned()))?;
        let spec: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let message = e.into_inner().message().to_owned();
            let path = match path.as_str() {
                "." => String::new(),
                "problem" => tagged_field_path::<ProblemSpec>(text, "problem", &message),
                "dataset" => tagged_field_path::<DatasetSpec>(text, "dataset", &message),
                _ => path,
            };
            config_err(&path, message)
        })?;
        spec.validate()?;
        Ok(spec)
    }

    /// Reads a config file; relative dataset and output paths are taken
    /// relative to the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut spec = Self::from_toml_str(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        if let DatasetSpec::Csv { path: p, .. } = &mut spec.dataset {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if spec.output.is_relative() {
            spec.output = base.join(&spec.output);
        }
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sample_sizes.is_empty() {
            return Err(config_err("sample_sizes", "at least one sample size is required"));
        }
        for (i, w) in self.sample_sizes.windows(2).enumerate() {
            if w[1] <= w[0] {
                return Err(config_err(&format!("sample_sizes[{}]", i + 1), "sizes must be strictly ascending"));
            }
        }
        if self.sample_sizes[0] == 0 {
            return Err(config_err("sample_sizes[0]", "sizes must be positive"));
        }
        if self.trials == 0 {
            return Err(config_err("trials", "must be at least 1"));
        }
        if self.methods.is_empty() {
            return Err(config_err("methods", "at least one method is required"));
        }
        for (i, m) in self.methods.iter().enumerate() {
            if self.methods[..i].contains(m) {
                return Err(config_err(&format!("methods[{i}]"), format!("duplicate method {}", m.name())));
            }
        }
        match &self.problem {
            ProblemSpec::Projective { k, z, loss, .. } => {
                if *k == 0 {
                    return Err(config_err("problem.k", "must be at least 1"));
                }
                if let Some(z) = z {
                    if !(*z > 0.0) {
                        return Err(config_err("problem.z", "must be positive"));
                    }
                    if loss.is_some() && loss.as_deref() != Some("power") {
                        return Err(config_err("problem.z", "only used with the power loss"));
                    }
                }
            }
            ProblemSpec::Regression { .. } => {}
        }
        self.problem.cost()?;
        let c = &self.coreset;
        if !(c.epsilon > 0.0 && c.epsilon < 1.0) {
            return Err(config_err("coreset.epsilon", "must lie in (0, 1)"));
        }
        if !(c.delta > 0.0 && c.delta < 1.0) {
            return Err(config_err("coreset.delta", "must lie in (0, 1)"));
        }
        if !(c.c_exp > 0.0) {
            return Err(config_err("coreset.c_exp", "must be positive"));
        }
        let s = &self.solver;
        if s.restarts == 0 || s.em_steps == 0 || s.max_iter == 0 || s.reference_factor == 0 {
            return Err(config_err("solver", "restarts, em_steps, max_iter and reference_factor must be positive"));
        }
        if let DatasetSpec::Synthetic { params, .. } = &self.dataset {
            params
                .validate()
                .map_err(|e| config_err("dataset.params", e.to_string()))?;
        }
        Ok(())
    }
}
