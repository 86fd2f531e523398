// SPDX-License-Identifier: Apache-2.0

//! Reading inputs and writing coreset files.

use std::path::Path;

use projcore::bench::{load_csv, LoadedData};
use projcore::{Error, Result, WeightedCoreset};

use crate::InputArgs;

/// Loads the feature columns (and optional label) and attaches a grid bound.
pub fn load_input(args: &InputArgs, label: Option<&str>) -> Result<LoadedData> {
    let mut data = load_csv(&args.input, &args.features, label)?;
    data.points = match args.grid {
        Some(g) => data.points.with_grid(g)?,
        None => data.points.infer_grid(),
    };
    Ok(data)
}

#[derive(serde::Serialize, serde::Deserialize)]
struct Row {
    index: usize,
    weight: f64,
}

/// Writes `index,weight` rows.
pub fn write_coreset(path: &Path, indices: &[usize], weights: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for (&index, &weight) in indices.iter().zip(weights) {
        w.serialize(Row { index, weight })?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a coreset file and checks its indices against `n` points.
pub fn read_coreset(path: &Path, n: usize) -> Result<WeightedCoreset> {
    let mut reader = csv::Reader::from_path(path)?;
    let (mut indices, mut weights) = (Vec::new(), Vec::new());
    for (line, row) in reader.deserialize::<Row>().enumerate() {
        let row = row.map_err(|e| Error::Parse {
            row: line + 2,
            column: "index,weight".into(),
            message: e.to_string(),
        })?;
        if row.index >= n {
            return Err(Error::Parse {
                row: line + 2,
                column: "index".into(),
                message: format!("index {} out of range for {n} points", row.index),
            });
        }
        indices.push(row.index);
        weights.push(row.weight);
    }
    if indices.is_empty() {
        return Err(Error::Parse {
            row: 1,
            column: "index".into(),
            message: "coreset file has no rows".into(),
        });
    }
    WeightedCoreset::new(indices, weights).map_err(|e| Error::Parse {
        row: 1,
        column: "weight".into(),
        message: e.to_string(),
    })
}
