// SPDX-License-Identifier: Apache-2.0

use std::path::Path;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::PointSet;
use crate::rng;
use crate::sensitivity::WeightedCoreset;

/// Points on the x-axis plus a few far outliers above it. All coordinates
/// are integers, so the result carries a grid bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticConfig {
    #[serde(default = "SyntheticConfig::default_axis")]
    pub n_axis: usize,
    #[serde(default = "SyntheticConfig::default_outliers")]
    pub n_outliers: usize,
    /// Axis points have integer `x` in `[0, x_max]`.
    #[serde(default = "SyntheticConfig::default_x_max")]
    pub x_max: i64,
    /// Outliers have integer `y` in `[y_min, y_max]`.
    #[serde(default = "SyntheticConfig::default_y_min")]
    pub y_min: i64,
    #[serde(default = "SyntheticConfig::default_y_max")]
    pub y_max: i64,
}

impl SyntheticConfig {
    fn default_axis() -> usize {
        19_990
    }
    fn default_outliers() -> usize {
        10
    }
    fn default_x_max() -> i64 {
        1000
    }
    fn default_y_min() -> i64 {
        100
    }
    fn default_y_max() -> i64 {
        1000
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_axis + self.n_outliers == 0 {
            return Err(Error::InvalidArgument("synthetic dataset would be empty".into()));
        }
        if self.x_max < 0 || self.y_min <= 0 || self.y_max < self.y_min {
            return Err(Error::InvalidArgument(
                "synthetic ranges need 0 <= x_max and 0 < y_min <= y_max".into(),
            ));
        }
        Ok(())
    }
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            n_axis: Self::default_axis(),
            n_outliers: Self::default_outliers(),
            x_max: Self::default_x_max(),
            y_min: Self::default_y_min(),
            y_max: Self::default_y_max(),
        }
    }
}

pub fn synthetic_dataset(seed: u64, cfg: &SyntheticConfig) -> Result<PointSet> {
    cfg.validate()?;
    let mut rng = rng::seeded(seed, &[0xDA7A]);
    let mut rows = Vec::with_capacity(cfg.n_axis + cfg.n_outliers);
    for _ in 0..cfg.n_axis {
        rows.push([rng.random_range(0..=cfg.x_max) as f64, 0.0]);
    }
    for _ in 0..cfg.n_outliers {
        rows.push([
            rng.random_range(0..=cfg.x_max) as f64,
            rng.random_range(cfg.y_min..=cfg.y_max) as f64,
        ]);
    }
    PointSet::from_rows(&rows)?.with_grid(cfg.x_max.max(cfg.y_max) as u64)
}

/// `n − 1` points at the origin and one at `(far, 0, ..., 0)`.
pub fn two_center_dataset(n: usize, d: usize, far: u64) -> Result<PointSet> {
    if n < 2 || d == 0 || far == 0 {
        return Err(Error::InvalidArgument("two-center data needs n >= 2, d >= 1, far >= 1".into()));
    }
    let mut data = vec![0.0; n * d];
    data[(n - 1) * d] = far as f64;
    PointSet::from_flat(data, d)?.with_grid(far)
}

/// Columns read from a headered numeric CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedData {
    pub points: PointSet,
    pub labels: Option<Vec<f64>>,
    pub feature_names: Vec<String>,
}

/// Reads `features` (all columns except `label` when empty) and the optional
/// label column. Parse errors carry the 1-based line number of the file.
pub fn load_csv(path: &Path, features: &[String], label: Option<&str>) -> Result<LoadedData> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_path(path)?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    let find = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Column(name.to_owned()))
    };
    let label_col = label.map(find).transpose()?;
    let feature_cols: Vec<usize> = if features.is_empty() {
        (0..header.len()).filter(|&c| Some(c) != label_col).collect()
    } else {
        features.iter().map(|f| find(f)).collect::<Result<_>>()?
    };
    if feature_cols.is_empty() {
        return Err(Error::InvalidArgument("no feature columns selected".into()));
    }
    let mut data = Vec::new();
    let mut labels = label_col.map(|_| Vec::new());
    for (r, record) in reader.records().enumerate() {
        let record = record?;
        let line = r + 2;
        let cell = |c: usize| -> Result<f64> {
            let raw = record.get(c).unwrap_or("");
            match raw.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(Error::Parse {
                    row: line,
                    column: header[c].clone(),
                    message: format!("'{raw}' is not a finite number"),
                }),
            }
        };
        for &c in &feature_cols {
            data.push(cell(c)?);
        }
        if let (Some(c), Some(l)) = (label_col, labels.as_mut()) {
            l.push(cell(c)?);
        }
    }
    if data.is_empty() {
        return Err(Error::InvalidArgument(format!("{} has no data rows", path.display())));
    }
    Ok(LoadedData {
        points: PointSet::from_flat(data, feature_cols.len())?,
        labels,
        feature_names: feature_cols.iter().map(|&c| header[c].clone()).collect(),
    })
}

/// Hex SHA-256 of the coordinates (and labels) as little-endian `f64`.
pub fn dataset_hash(points: &PointSet, labels: Option<&[f64]>) -> String {
    let mut h = Sha256::new();
    h.update((points.dim() as u64).to_le_bytes());
    for v in points.as_flat() {
        h.update(v.to_le_bytes());
    }
    if let Some(l) = labels {
        h.update(b"labels");
        for v in l {
            h.update(v.to_le_bytes());
        }
    }
    hex::encode(h.finalize())
}

/// `m` distinct indices chosen uniformly, each weighted `n/m`.
pub fn uniform_baseline(n: usize, m: usize, rng_seed: u64) -> Result<WeightedCoreset> {
    if m == 0 || m > n {
        return Err(Error::Parameter(format!("uniform sample size {m} must lie in [1, {n}]")));
    }
    let mut rng = rng::seeded(rng_seed, &[0x0F]);
    let mut indices = sample(&mut rng, n, m).into_vec();
    indices.sort_unstable();
    WeightedCoreset::new(indices, vec![n as f64 / m as f64; m])
}
