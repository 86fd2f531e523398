// SPDX-License-Identifier: Apache-2.0

use nalgebra::DMatrix;

use super::{dot, norm, PointSet};
use crate::error::{Error, Result};

const ORTHONORMAL_TOL: f64 = 1e-10;

/// The affine subspace `H(X, v) = { X Xᵀ p + v }` with orthonormal basis
/// columns `X` (`d × j`) and offset `v`.
///
/// `j = 0` is a single point. `j = d` spans the whole space; it only arises
/// as the affine hull of full-rank data and is never a query flat.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineFlat {
    /// `j` columns of length `d`, concatenated.
    basis: Vec<f64>,
    offset: Vec<f64>,
    j: usize,
}

impl AffineFlat {
    pub fn new(columns: Vec<Vec<f64>>, offset: Vec<f64>) -> Result<Self> {
        let d = offset.len();
        if d == 0 {
            return Err(Error::InvalidArgument("flat offset must be nonempty".into()));
        }
        if columns.len() > d {
            return Err(Error::InvalidArgument(format!(
                "{} basis columns exceed ambient dimension {d}",
                columns.len()
            )));
        }
        for c in &columns {
            if c.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: c.len(),
                });
            }
        }
        for (a, ca) in columns.iter().enumerate() {
            for (b, cb) in columns.iter().enumerate().skip(a) {
                let want = if a == b { 1.0 } else { 0.0 };
                let got = dot(ca, cb);
                if (got - want).abs() > ORTHONORMAL_TOL {
                    return Err(Error::InvalidArgument(format!(
                        "basis is not orthonormal: <x{a}, x{b}> = {got}"
                    )));
                }
            }
        }
        let j = columns.len();
        Ok(Self {
            basis: columns.concat(),
            offset,
            j,
        })
    }

    /// A 0-flat.
    pub fn point(offset: Vec<f64>) -> Self {
        Self {
            basis: Vec::new(),
            offset,
            j: 0,
        }
    }

    /// Build from a `d × j` matrix whose columns are orthonormal.
    pub fn from_matrix(basis: &DMatrix<f64>, offset: &[f64]) -> Result<Self> {
        let columns = basis
            .column_iter()
            .map(|c| c.iter().copied().collect())
            .collect();
        Self::new(columns, offset.to_vec())
    }

    /// Skips the orthonormality check; callers guarantee it.
    pub(crate) fn from_parts(columns: Vec<Vec<f64>>, offset: Vec<f64>) -> Self {
        let j = columns.len();
        Self {
            basis: columns.concat(),
            offset,
            j,
        }
    }

    pub fn dim(&self) -> usize {
        self.j
    }

    pub fn ambient_dim(&self) -> usize {
        self.offset.len()
    }

    pub fn offset(&self) -> &[f64] {
        &self.offset
    }

    pub fn basis_column(&self, k: usize) -> &[f64] {
        let d = self.ambient_dim();
        &self.basis[k * d..(k + 1) * d]
    }

    pub fn basis_columns(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.basis.chunks_exact(self.ambient_dim().max(1)).take(self.j)
    }

    pub fn basis_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_column_slice(self.ambient_dim(), self.j, &self.basis)
    }

    /// Euclidean distance `‖(p−v) − X Xᵀ(p−v)‖`.
    pub fn dist(&self, p: &[f64]) -> Result<f64> {
        if p.len() != self.ambient_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.ambient_dim(),
                got: p.len(),
            });
        }
        Ok(self.dist_unchecked(p))
    }

    pub(crate) fn dist_unchecked(&self, p: &[f64]) -> f64 {
        let mut r: Vec<f64> = p.iter().zip(&self.offset).map(|(a, b)| a - b).collect();
        if self.j == 0 {
            return norm(&r);
        }
        let coeffs: Vec<f64> = self.basis_columns().map(|x| dot(x, &r)).collect();
        for (x, c) in self.basis_columns().zip(coeffs) {
            for (ri, xi) in r.iter_mut().zip(x) {
                *ri -= c * xi;
            }
        }
        norm(&r)
    }

    /// Intrinsic coordinates `Xᵀ(p − v)`.
    pub fn coords(&self, p: &[f64]) -> Vec<f64> {
        let r: Vec<f64> = p.iter().zip(&self.offset).map(|(a, b)| a - b).collect();
        self.basis_columns().map(|x| dot(x, &r)).collect()
    }

    /// Inverse of [`coords`](Self::coords) for points on the flat.
    pub fn embed(&self, coords: &[f64]) -> Vec<f64> {
        let mut out = self.offset.clone();
        for (x, &c) in self.basis_columns().zip(coords) {
            for (o, xi) in out.iter_mut().zip(x) {
                *o += c * xi;
            }
        }
        out
    }

    /// Orthogonal projection onto the flat.
    pub fn project(&self, p: &[f64]) -> Vec<f64> {
        self.embed(&self.coords(p))
    }

    /// Same affine set, padded with extra orthonormal directions up to
    /// dimension `j`. `directions` supplies candidates, tried in order; the
    /// standard basis is used after they run out.
    pub fn extended_to<I>(&self, j: usize, directions: I) -> Self
    where
        I: IntoIterator<Item = Vec<f64>>,
    {
        let d = self.ambient_dim();
        let mut columns: Vec<Vec<f64>> = self.basis_columns().map(<[f64]>::to_vec).collect();
        let standard = (0..d).map(|i| {
            let mut e = vec![0.0; d];
            e[i] = 1.0;
            e
        });
        for cand in directions.into_iter().chain(standard) {
            if columns.len() >= j.min(d) {
                break;
            }
            if let Some(v) = orthogonalize(&cand, &columns) {
                columns.push(v);
            }
        }
        Self::from_parts(columns, self.offset.clone())
    }
}

/// Gram-Schmidt `v` against orthonormal `columns` (two passes). `None` when
/// `v` is numerically inside their span.
pub(crate) fn orthogonalize(v: &[f64], columns: &[Vec<f64>]) -> Option<Vec<f64>> {
    let scale = norm(v);
    if scale == 0.0 {
        return None;
    }
    let mut w = v.to_vec();
    for _ in 0..2 {
        for c in columns {
            let proj = dot(c, &w);
            for (wi, ci) in w.iter_mut().zip(c) {
                *wi -= proj * ci;
            }
        }
    }
    let len = norm(&w);
    if len <= 1e-10 * scale {
        return None;
    }
    w.iter_mut().for_each(|x| *x /= len);
    Some(w)
}

struct CenteredSvd {
    centroid: Vec<f64>,
    singular: Vec<f64>,
    /// right singular vectors, by decreasing singular value
    directions: Vec<Vec<f64>>,
}

fn centered_svd<'a, I>(rows: I, d: usize) -> CenteredSvd
where
    I: Iterator<Item = &'a [f64]> + Clone,
{
    let n = rows.clone().count();
    let mut centroid = vec![0.0; d];
    for p in rows.clone() {
        for (c, v) in centroid.iter_mut().zip(p) {
            *c += v;
        }
    }
    centroid.iter_mut().for_each(|c| *c /= n as f64);
    let mut centered = DMatrix::zeros(n, d);
    for (i, p) in rows.enumerate() {
        for k in 0..d {
            centered[(i, k)] = p[k] - centroid[k];
        }
    }
    let svd = centered.svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let singular = order.iter().map(|&i| svd.singular_values[i]).collect();
    let directions = order
        .iter()
        .map(|&i| v_t.row(i).iter().copied().collect())
        .collect();
    CenteredSvd {
        centroid,
        singular,
        directions,
    }
}

/// Affine hull of the given rows. The dimension equals the numerical affine
/// rank; every input lies within `1e-10·max(1, max|coord|)` of the result.
pub fn affine_span<R: AsRef<[f64]>>(rows: &[R]) -> Result<AffineFlat> {
    let first = rows
        .first()
        .ok_or_else(|| Error::InvalidArgument("affine span of no points".into()))?
        .as_ref();
    let d = first.len();
    if let Some(bad) = rows.iter().find(|r| r.as_ref().len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: bad.as_ref().len(),
        });
    }
    Ok(span_from_rows(rows.iter().map(|r| r.as_ref()), d))
}

/// Affine hull of `points[members]`.
pub fn affine_span_of(points: &PointSet, members: &[usize]) -> AffineFlat {
    span_from_rows(members.iter().map(|&i| points.point(i)), points.dim())
}

/// Least-squares `j`-flat of `points[members]`: the centroid plus the top-`j`
/// principal directions, padded if the data has lower rank.
pub fn best_fit_flat(points: &PointSet, members: &[usize], j: usize) -> AffineFlat {
    let svd = centered_svd(members.iter().map(|&i| points.point(i)), points.dim());
    let columns = svd.directions[..j.min(svd.directions.len())].to_vec();
    AffineFlat::from_parts(columns, svd.centroid).extended_to(j, std::iter::empty())
}

fn span_from_rows<'a, I>(rows: I, d: usize) -> AffineFlat
where
    I: Iterator<Item = &'a [f64]> + Clone,
{
    let scale = rows
        .clone()
        .flat_map(|r| r.iter())
        .fold(1.0f64, |m, v| m.max(v.abs()));
    if rows.clone().nth(1).is_none() {
        let p = rows.clone().next().expect("nonempty");
        return AffineFlat::point(p.to_vec());
    }
    let svd = centered_svd(rows, d);
    let tol = 1e-10 * scale;
    // smallest rank whose discarded tail is within tolerance
    let mut tail = 0.0;
    let mut rank = svd.singular.len();
    for (i, s) in svd.singular.iter().enumerate().rev() {
        tail += s * s;
        if tail.sqrt() > tol {
            break;
        }
        rank = i;
    }
    AffineFlat::from_parts(svd.directions[..rank].to_vec(), svd.centroid)
}

/// The `j`-flat through the centroid spanned by the top-`j` principal
/// directions, provided every point is within `tol` of it. `tol` defaults to
/// `1e-8·max|coord|`.
pub fn flat_through_points(points: &PointSet, j: usize, tol: Option<f64>) -> Result<AffineFlat> {
    let d = points.dim();
    if j >= d {
        return Err(Error::InvalidArgument(format!(
            "flat dimension {j} must be below ambient dimension {d}"
        )));
    }
    let tol = tol.unwrap_or_else(|| 1e-8 * points.max_abs().max(f64::MIN_POSITIVE));
    let svd = centered_svd(points.iter(), d);
    let sigma_next = svd.singular.get(j).copied().unwrap_or(0.0);
    let columns = svd.directions[..j.min(svd.directions.len())].to_vec();
    let flat = AffineFlat::from_parts(columns, svd.centroid).extended_to(j, std::iter::empty());
    let worst = points
        .iter()
        .map(|p| flat.dist_unchecked(p))
        .fold(0.0, f64::max);
    if worst > tol {
        return Err(Error::FlatRank {
            j,
            sigma: sigma_next,
            tol,
        });
    }
    Ok(flat)
}

/// Haar-distributed `d × j` orthonormal frame from Gaussian QR.
pub fn random_orthonormal<R: rand::Rng + ?Sized>(d: usize, j: usize, rng: &mut R) -> Vec<Vec<f64>> {
    use rand_distr::StandardNormal;
    let g = DMatrix::<f64>::from_fn(d, j.max(1), |_, _| rng.sample(StandardNormal));
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    (0..j)
        .map(|k| {
            // sign fix makes the distribution exactly Haar
            let s = if r[(k, k)] < 0.0 { -1.0 } else { 1.0 };
            q.column(k).iter().map(|v| v * s).collect()
        })
        .collect()
}
