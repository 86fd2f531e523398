// SPDX-License-Identifier: Apache-2.0

//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Points cross the boundary as interleaved `[x0, y0, x1, y1, ...]` arrays
//! and errors as strings.

use projcore::geometry::lowner_rounding;
use projcore::linf_coreset::coreset_jk;
use projcore::sensitivity::{assign_sensitivities, sample_l2_coreset, SampleSize};
use projcore::{JkConfig, LossSpec, PointSet};
use wasm_bindgen::prelude::*;

fn points(xy: &[f64]) -> Result<PointSet, String> {
    if !xy.len().is_multiple_of(2) {
        return Err("coordinates must come in (x, y) pairs".into());
    }
    PointSet::from_flat(xy.to_vec(), 2).map_err(|e| e.to_string())
}

/// Indices of the L∞ coreset for one line in the plane, followed by the
/// rounding ellipsoid of the input as `[cx, cy, g11, g12, g22]`.
///
/// The returned array is `[count, i0, ..., i_{count-1}, cx, cy, g11, g12, g22]`.
/// Collinear input has no ellipse and ends after the indices.
#[wasm_bindgen]
pub fn hull_coreset(xy: &[f64]) -> Result<Vec<f64>, String> {
    let p = points(xy)?;
    let c = coreset_jk(&p, 1, 1, &JkConfig::default()).map_err(|e| e.to_string())?;
    let mut out = vec![c.len() as f64];
    out.extend(c.indices().iter().map(|&i| i as f64));
    if let Ok(e) = lowner_rounding(&p, None, 1e-7) {
        let g = e.form();
        out.extend_from_slice(e.center());
        out.extend([g[(0, 0)], g[(0, 1)], g[(1, 1)]]);
    }
    Ok(out)
}

/// Draws `m` points by sensitivity for `k` flats of dimension `j`.
///
/// Returns `[i0, w0, i1, w1, ...]` with repeated draws merged.
#[wasm_bindgen]
pub fn sensitivity_sample(xy: &[f64], j: usize, k: usize, m: usize, seed: u32) -> Result<Vec<f64>, String> {
    let p = points(xy)?.infer_grid();
    let smap = assign_sensitivities(&p, j, k, &JkConfig::default()).map_err(|e| e.to_string())?;
    let c = sample_l2_coreset(&smap, 2, j, k, 0.5, 0.1, SampleSize::Fixed(m), u64::from(seed))
        .map_err(|e| e.to_string())?
        .merged();
    Ok(c.indices()
        .iter()
        .zip(c.weights())
        .flat_map(|(&i, &w)| [i as f64, w])
        .collect())
}

/// Per-point sensitivity scores (same order as the input).
#[wasm_bindgen]
pub fn sensitivities(xy: &[f64], j: usize, k: usize) -> Result<Vec<f64>, String> {
    let p = points(xy)?.infer_grid();
    let smap = assign_sensitivities(&p, j, k, &JkConfig::default()).map_err(|e| e.to_string())?;
    Ok(smap.scores().to_vec())
}

/// `loss(x)` at `steps + 1` evenly spaced `x` in `[-x_max, x_max]`.
#[wasm_bindgen]
pub fn loss_curve(name: &str, lambda: f64, z: f64, x_max: f64, steps: usize) -> Result<Vec<f64>, String> {
    let spec = LossSpec::from_name(name, lambda, z).map_err(|e| e.to_string())?;
    if x_max.is_nan() || x_max <= 0.0 || steps == 0 {
        return Err("x_max and steps must be positive".into());
    }
    Ok((0..=steps)
        .map(|s| spec.eval(-x_max + 2.0 * x_max * s as f64 / steps as f64))
        .collect())
}

/// The multiplicative L∞ factor of a loss in dimension `d`.
#[wasm_bindgen]
pub fn loss_factor(name: &str, lambda: f64, z: f64, d: usize) -> Result<f64, String> {
    Ok(LossSpec::from_name(name, lambda, z).map_err(|e| e.to_string())?.guarantee_factor(d))
}
