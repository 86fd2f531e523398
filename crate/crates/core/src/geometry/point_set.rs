// SPDX-License-Identifier: Apache-2.0

use crate::error::{Error, Result};

/// `n` points in `d`-dimensional space, stored row-major.
///
/// When `grid_delta` is set every coordinate is an integer in `[-Δ, Δ]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    data: Vec<f64>,
    n: usize,
    dim: usize,
    grid_delta: Option<u64>,
}

impl PointSet {
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let first = rows
            .first()
            .ok_or_else(|| Error::InvalidArgument("point set must be nonempty".into()))?;
        let dim = first.as_ref().len();
        let mut data = Vec::with_capacity(rows.len() * dim);
        for row in rows {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::from_flat(data, dim)
    }

    pub fn from_flat(data: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be at least 1".into()));
        }
        if data.is_empty() || !data.len().is_multiple_of(dim) {
            return Err(Error::InvalidArgument(format!(
                "{} values do not form nonempty rows of width {dim}",
                data.len()
            )));
        }
        if let Some(v) = data.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite coordinate {v}")));
        }
        let n = data.len() / dim;
        Ok(Self {
            data,
            n,
            dim,
            grid_delta: None,
        })
    }

    /// Declare the set as integer-grid with aspect ratio `delta`.
    pub fn with_grid(mut self, delta: u64) -> Result<Self> {
        if delta == 0 {
            return Err(Error::InvalidArgument("grid delta must be positive".into()));
        }
        let bound = delta as f64;
        if let Some(v) = self
            .data
            .iter()
            .find(|v| v.fract() != 0.0 || v.abs() > bound)
        {
            return Err(Error::InvalidArgument(format!(
                "coordinate {v} is not an integer in [-{delta}, {delta}]"
            )));
        }
        self.grid_delta = Some(delta);
        Ok(self)
    }

    /// Mark the set as a grid when every coordinate is integral, using the
    /// smallest admissible Δ.
    pub fn infer_grid(self) -> Self {
        if self.data.iter().all(|v| v.fract() == 0.0) {
            let delta = self.max_abs().max(1.0) as u64;
            self.with_grid(delta).expect("integral coordinates")
        } else {
            self
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn grid_delta(&self) -> Option<u64> {
        self.grid_delta
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + Clone + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Copy of the selected rows. Grid status carries over.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let mut data = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            if i >= self.n {
                return Err(Error::InvalidArgument(format!(
                    "index {i} out of range for {} points",
                    self.n
                )));
            }
            data.extend_from_slice(self.point(i));
        }
        let mut out = Self::from_flat(data, self.dim)?;
        out.grid_delta = self.grid_delta;
        Ok(out)
    }

    /// Per-coordinate `(min, max)`.
    pub fn bounding_box(&self) -> Vec<(f64, f64)> {
        let mut bounds = vec![(f64::INFINITY, f64::NEG_INFINITY); self.dim];
        for p in self.iter() {
            for (b, &v) in bounds.iter_mut().zip(p) {
                b.0 = b.0.min(v);
                b.1 = b.1.max(v);
            }
        }
        bounds
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_validation() {
        let p = PointSet::from_rows(&[[1.0, -2.0], [3.0, 0.0]]).unwrap();
        assert!(p.clone().with_grid(2).is_err());
        let g = p.with_grid(3).unwrap();
        assert_eq!(g.grid_delta(), Some(3));
        let frac = PointSet::from_rows(&[[0.5]]).unwrap();
        assert!(frac.clone().with_grid(4).is_err());
        assert_eq!(frac.infer_grid().grid_delta(), None);
    }

    #[test]
    fn ragged_rows_rejected() {
        let rows: Vec<Vec<f64>> = vec![vec![1.0, 2.0], vec![1.0]];
        assert!(matches!(
            PointSet::from_rows(&rows),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
        let empty: Vec<Vec<f64>> = vec![];
        assert!(PointSet::from_rows(&empty).is_err());
    }

    #[test]
    fn subset_keeps_grid() {
        let p = PointSet::from_rows(&[[1.0], [2.0], [3.0]])
            .unwrap()
            .infer_grid();
        let s = p.subset(&[2, 0]).unwrap();
        assert_eq!(s.point(0), &[3.0]);
        assert_eq!(s.grid_delta(), Some(3));
        assert!(p.subset(&[3]).is_err());
    }
}
