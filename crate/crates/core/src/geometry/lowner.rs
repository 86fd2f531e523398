// SPDX-License-Identifier: Apache-2.0

//! Approximate Löwner ellipsoids by Khachiyan's barycentric coordinate ascent
//! with Todd–Yildirim away steps, run on the lift `q ↦ (q, 1)`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::hull::caratheodory_rows;
use super::{affine_span, PointSet};
use crate::error::{Error, Result};

/// `E(G, c) = { x : (x − c)ᵀ G (x − c) <= 1 }`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ellipsoid {
    form: DMatrix<f64>,
    center: Vec<f64>,
}

impl Ellipsoid {
    pub fn new(form: DMatrix<f64>, center: Vec<f64>) -> Result<Self> {
        let d = center.len();
        if form.nrows() != d || form.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: form.nrows(),
            });
        }
        let scale = form.amax().max(1.0);
        if (&form - form.transpose()).amax() > 1e-10 * scale {
            return Err(Error::InvalidArgument("ellipsoid form is not symmetric".into()));
        }
        let eig = SymmetricEigen::new(form.clone());
        if eig.eigenvalues.iter().any(|&l| !(l > 0.0)) {
            return Err(Error::InvalidArgument(
                "ellipsoid form is not positive definite".into(),
            ));
        }
        Ok(Self { form, center })
    }

    pub fn form(&self) -> &DMatrix<f64> {
        &self.form
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// `(x − c)ᵀ G (x − c)`.
    pub fn quadratic(&self, x: &[f64]) -> f64 {
        let r = DVector::from_iterator(self.dim(), x.iter().zip(&self.center).map(|(a, b)| a - b));
        r.dot(&(&self.form * &r))
    }

    /// Proportional to the volume: `det(G)^{-1/2}`.
    pub fn volume_factor(&self) -> f64 {
        self.form.determinant().powf(-0.5)
    }
}

#[derive(Debug, Clone)]
pub struct RoundingConfig {
    /// Rounding factor; defaults to the dimension.
    pub alpha: Option<f64>,
    /// Relative slack for both the ascent stopping rule and the containment
    /// checks.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for RoundingConfig {
    fn default() -> Self {
        Self {
            alpha: None,
            tol: 1e-7,
            max_iter: 100_000,
        }
    }
}

/// Unverified rounding result.
#[derive(Debug, Clone)]
pub(crate) struct RawRounding {
    pub ellipsoid: Ellipsoid,
    /// Dimension times the final optimality gap factor.
    pub achieved: f64,
}

/// Axis extreme points `c ± scale·λᵢ^{-1/2}·uᵢ` of the dilation
/// `scale·(E − c) + c`, two per eigenpair.
pub fn ellipsoid_axis_vertices(e: &Ellipsoid, scale: f64) -> Result<Vec<Vec<f64>>> {
    if !(scale > 0.0) {
        return Err(Error::InvalidArgument(format!("scale {scale} must be positive")));
    }
    let eig = SymmetricEigen::new(e.form.clone());
    let mut out = Vec::with_capacity(2 * e.dim());
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        let u = eig.eigenvectors.column(k);
        let len = scale / lambda.sqrt();
        for sign in [1.0, -1.0] {
            out.push(
                e.center
                    .iter()
                    .zip(u.iter())
                    .map(|(c, ui)| c + sign * len * ui)
                    .collect(),
            );
        }
    }
    Ok(out)
}

/// An `alpha`-rounding of `conv(Q)`: every point of `Q` lies in the returned
/// ellipsoid and every axis vertex of its `1/(alpha·(1+tol))` dilation lies
/// in `conv(Q)` (checked by a feasibility solve).
pub fn lowner_rounding(q: &PointSet, alpha: Option<f64>, tol: f64) -> Result<Ellipsoid> {
    let cfg = RoundingConfig {
        alpha,
        tol,
        ..RoundingConfig::default()
    };
    lowner_rounding_with(q, &cfg)
}

pub fn lowner_rounding_with(q: &PointSet, cfg: &RoundingConfig) -> Result<Ellipsoid> {
    let rows: Vec<&[f64]> = q.iter().collect();
    let span = affine_span(&rows)?;
    if span.dim() < q.dim() {
        return Err(Error::Rank {
            rank: span.dim(),
            dim: q.dim(),
        });
    }
    let alpha = cfg.alpha.unwrap_or(q.dim() as f64);
    if alpha < 1.0 {
        return Err(Error::InvalidArgument(format!("alpha {alpha} must be at least 1")));
    }
    let raw = round_rows(&rows, cfg.tol * 0.1, cfg.max_iter)?;
    for v in ellipsoid_axis_vertices(&raw.ellipsoid, 1.0 / (alpha * (1.0 + cfg.tol)))? {
        if caratheodory_rows(&rows, &v).is_err() {
            return Err(Error::Convergence {
                iterations: cfg.max_iter,
                achieved: raw.achieved,
            });
        }
    }
    Ok(raw.ellipsoid)
}

/// Core routine on full-rank rows. The returned ellipsoid is scaled so the
/// farthest point lies exactly on its boundary.
pub(crate) fn round_rows(rows: &[&[f64]], tol: f64, max_iter: usize) -> Result<RawRounding> {
    let n = rows.len();
    let m = rows[0].len();
    let mut centroid = vec![0.0; m];
    for r in rows {
        for (c, v) in centroid.iter_mut().zip(*r) {
            *c += v / n as f64;
        }
    }
    let scale = rows
        .iter()
        .map(|r| {
            r.iter()
                .zip(&centroid)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .fold(0.0f64, f64::max);
    if scale == 0.0 {
        return Err(Error::Rank { rank: 0, dim: m });
    }
    // lifted, normalized points
    let dd = m + 1;
    let lifted: Vec<DVector<f64>> = rows
        .iter()
        .map(|r| {
            let mut v = DVector::from_element(dd, 1.0);
            for k in 0..m {
                v[k] = (r[k] - centroid[k]) / scale;
            }
            v
        })
        .collect();

    let (u, iterations, gap) = khachiyan(&lifted, tol, max_iter)?;
    let _ = iterations;

    let mut c = DVector::<f64>::zeros(m);
    for (ui, q) in u.iter().zip(&lifted) {
        if *ui > 0.0 {
            c += q.rows(0, m) * *ui;
        }
    }
    let mut cov = DMatrix::<f64>::zeros(m, m);
    for (ui, q) in u.iter().zip(&lifted) {
        if *ui > 0.0 {
            let r = q.rows(0, m) - &c;
            cov += &r * r.transpose() * *ui;
        }
    }
    let cov_inv = cov
        .clone()
        .cholesky()
        .map(|ch| ch.inverse())
        .ok_or(Error::Rank { rank: m - 1, dim: m })?;
    let g0 = cov_inv / m as f64;
    let gamma = lifted
        .iter()
        .map(|q| {
            let r = q.rows(0, m) - &c;
            r.dot(&(&g0 * &r))
        })
        .fold(0.0f64, f64::max);
    let mut g = g0 / (gamma * scale * scale);
    g = (&g + g.transpose()) * 0.5;
    let center: Vec<f64> = (0..m).map(|k| centroid[k] + scale * c[k]).collect();
    Ok(RawRounding {
        ellipsoid: Ellipsoid::new(g, center)?,
        achieved: m as f64 * (1.0 + gap),
    })
}

fn kappa(minv: &DMatrix<f64>, q: &DVector<f64>) -> f64 {
    q.dot(&(minv * q))
}

fn moment_inverse(lifted: &[DVector<f64>], u: &[f64]) -> Option<DMatrix<f64>> {
    let dd = lifted[0].len();
    let mut mm = DMatrix::<f64>::zeros(dd, dd);
    for (q, &w) in lifted.iter().zip(u) {
        if w > 0.0 {
            mm.ger(w, q, q, 1.0);
        }
    }
    mm.cholesky().map(|c| c.inverse())
}

/// Initial active set: coordinate extremes plus the points farthest from the
/// centroid, enough to make the lifted moment matrix nonsingular in
/// nondegenerate cases.
fn initial_active(lifted: &[DVector<f64>]) -> Vec<usize> {
    let n = lifted.len();
    let m = lifted[0].len() - 1;
    if n <= 200 {
        return (0..n).collect();
    }
    let mut set = Vec::new();
    for k in 0..m {
        let (mut lo, mut hi) = (0, 0);
        for i in 0..n {
            if lifted[i][k] < lifted[lo][k] {
                lo = i;
            }
            if lifted[i][k] > lifted[hi][k] {
                hi = i;
            }
        }
        set.push(lo);
        set.push(hi);
    }
    let mut by_norm: Vec<usize> = (0..n).collect();
    by_norm.sort_by(|&a, &b| {
        lifted[b].rows(0, m).norm_squared().total_cmp(&lifted[a].rows(0, m).norm_squared())
    });
    set.extend(by_norm.into_iter().take(4 * (m + 1)));
    set.sort_unstable();
    set.dedup();
    set
}

/// Weights `u` on all points with `max κ <= (m+1)(1+tol)` and
/// `min_{u>0} κ >= (m+1)(1−tol)`. Returns `(u, iterations, gap)`.
fn khachiyan(lifted: &[DVector<f64>], tol: f64, max_iter: usize) -> Result<(Vec<f64>, usize, f64)> {
    let n = lifted.len();
    let dd = lifted[0].len();
    let dim = dd as f64;
    let m = dd - 1;

    let mut active = initial_active(lifted);
    let mut in_active = vec![false; n];
    for &i in &active {
        in_active[i] = true;
    }
    let mut u = vec![0.0; n];
    for &i in &active {
        u[i] = 1.0 / active.len() as f64;
    }
    let mut minv = match moment_inverse(lifted, &u) {
        Some(mi) => mi,
        None => {
            active = (0..n).collect();
            in_active.iter_mut().for_each(|x| *x = true);
            u.iter_mut().for_each(|x| *x = 1.0 / n as f64);
            moment_inverse(lifted, &u).ok_or(Error::Rank { rank: m - 1, dim: m })?
        }
    };

    let mut iterations = 0usize;
    let mut gap;
    loop {
        // ascent on the active set
        let mut kap: Vec<f64> = active.iter().map(|&i| kappa(&minv, &lifted[i])).collect();
        loop {
            let (mut ip, mut kp) = (0usize, f64::NEG_INFINITY);
            let (mut im, mut km) = (usize::MAX, f64::INFINITY);
            for (a, &i) in active.iter().enumerate() {
                if kap[a] > kp {
                    kp = kap[a];
                    ip = a;
                }
                if u[i] > 0.0 && kap[a] < km {
                    km = kap[a];
                    im = a;
                }
            }
            let eps_plus = kp / dim - 1.0;
            let eps_minus = 1.0 - km / dim;
            gap = eps_plus.max(eps_minus).max(0.0);
            if eps_plus <= tol && eps_minus <= tol {
                break;
            }
            if iterations >= max_iter {
                return Err(Error::Convergence {
                    iterations,
                    achieved: m as f64 * (1.0 + gap),
                });
            }
            iterations += 1;
            if eps_plus > eps_minus {
                let i = active[ip];
                let tau = (kp - dim) / (dim * (kp - 1.0));
                for &a in &active {
                    u[a] *= 1.0 - tau;
                }
                u[i] += tau;
                let mq = &minv * &lifted[i];
                let denom = (1.0 - tau) + tau * kp;
                minv = (&minv - &mq * mq.transpose() * (tau / denom)) / (1.0 - tau);
            } else {
                let i = active[im];
                let ui = u[i];
                let full = (dim - km) / (dim * (km - 1.0));
                let cap = ui / (1.0 - ui);
                let beta = if km > 1.0 { full.min(cap) } else { cap };
                for &a in &active {
                    u[a] *= 1.0 + beta;
                }
                u[i] -= beta;
                if beta >= cap * (1.0 - 1e-12) {
                    u[i] = 0.0;
                }
                let mq = &minv * &lifted[i];
                let denom = (1.0 + beta) - beta * km;
                if denom <= 1e-12 {
                    minv = moment_inverse(lifted, &u)
                        .ok_or(Error::Rank { rank: m - 1, dim: m })?;
                } else {
                    minv = (&minv + &mq * mq.transpose() * (beta / denom)) / (1.0 + beta);
                }
            }
            if iterations.is_multiple_of(256) {
                if let Some(mi) = moment_inverse(lifted, &u) {
                    minv = mi;
                }
            }
            kap = active.iter().map(|&i| kappa(&minv, &lifted[i])).collect();
        }

        // price the inactive points
        if active.len() == n {
            break;
        }
        let mut violators: Vec<(usize, f64)> = (0..n)
            .filter(|&i| !in_active[i])
            .map(|i| (i, kappa(&minv, &lifted[i])))
            .filter(|&(_, k)| k > dim * (1.0 + tol))
            .collect();
        if violators.is_empty() {
            break;
        }
        violators.sort_by(|a, b| b.1.total_cmp(&a.1));
        for &(i, _) in violators.iter().take(8 * dd) {
            in_active[i] = true;
            active.push(i);
        }
    }
    Ok((u, iterations, gap))
}
