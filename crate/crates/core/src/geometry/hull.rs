// SPDX-License-Identifier: Apache-2.0

//! Convex-hull membership by a phase-one simplex and Carathéodory support
//! reduction.

use nalgebra::DMatrix;

use super::PointSet;
use crate::error::{Error, Result};

const FEAS_TOL: f64 = 1e-9;

/// A convex combination `Σ wᵢ qᵢ` over indices into a point set.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexCertificate {
    support: Vec<usize>,
    weights: Vec<f64>,
}

impl ConvexCertificate {
    pub fn new(support: Vec<usize>, weights: Vec<f64>) -> Result<Self> {
        if support.is_empty() || support.len() != weights.len() {
            return Err(Error::InvalidArgument(
                "certificate needs one weight per support index".into(),
            ));
        }
        if let Some(w) = weights.iter().find(|w| !(**w >= 0.0)) {
            return Err(Error::InvalidArgument(format!("negative weight {w}")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > FEAS_TOL {
            return Err(Error::InvalidArgument(format!(
                "weights sum to {total}, expected 1"
            )));
        }
        Ok(Self { support, weights })
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `Σ wᵢ qᵢ`.
    pub fn combination(&self, points: &PointSet) -> Vec<f64> {
        combine(
            &self.support.iter().map(|&i| points.point(i)).collect::<Vec<_>>(),
            &self.weights,
        )
    }
}

fn combine(rows: &[&[f64]], weights: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; rows.first().map_or(0, |r| r.len())];
    for (r, w) in rows.iter().zip(weights) {
        for (o, v) in out.iter_mut().zip(*r) {
            *o += w * v;
        }
    }
    out
}

/// Find a certificate for `s ∈ conv(Q)` with at most `dim + 1` points.
pub fn hull_membership(q: &PointSet, s: &[f64]) -> Result<ConvexCertificate> {
    if s.len() != q.dim() {
        return Err(Error::DimensionMismatch {
            expected: q.dim(),
            got: s.len(),
        });
    }
    let rows: Vec<&[f64]> = q.iter().collect();
    let (support, weights) = simplex_membership(&rows, s)?;
    ConvexCertificate::new(support, weights)
}

/// Reduce a certificate of `s ∈ conv(Q)` to at most `affdim(Q) + 1` points.
///
/// Without `cert_in`, an initial certificate is found by a feasibility solve.
pub fn caratheodory_reduce(
    q: &PointSet,
    s: &[f64],
    cert_in: Option<&ConvexCertificate>,
) -> Result<ConvexCertificate> {
    if s.len() != q.dim() {
        return Err(Error::DimensionMismatch {
            expected: q.dim(),
            got: s.len(),
        });
    }
    let rows: Vec<&[f64]> = q.iter().collect();
    let (support, weights) = match cert_in {
        Some(c) => {
            if let Some(&bad) = c.support.iter().find(|&&i| i >= q.len()) {
                return Err(Error::InvalidArgument(format!(
                    "certificate index {bad} out of range"
                )));
            }
            (c.support.clone(), c.weights.clone())
        }
        None => simplex_membership(&rows, s)?,
    };
    let (support, weights) = reduce_support(&rows, s, support, weights);
    ConvexCertificate::new(support, weights)
}

/// Membership plus reduction over borrowed rows; used by the coreset builders.
pub(crate) fn caratheodory_rows(rows: &[&[f64]], s: &[f64]) -> Result<(Vec<usize>, Vec<f64>)> {
    let (support, weights) = simplex_membership(rows, s)?;
    Ok(reduce_support(rows, s, support, weights))
}

/// Phase-one simplex on `Σλᵢ(qᵢ − s) = 0, Σλᵢ = 1, λ ≥ 0`. Returns the
/// basic feasible solution, whose support has at most `dim + 1` points.
fn simplex_membership(rows: &[&[f64]], s: &[f64]) -> Result<(Vec<usize>, Vec<f64>)> {
    let n = rows.len();
    let m = s.len();
    if n == 0 {
        return Err(Error::InvalidArgument("empty point set".into()));
    }
    let scale = rows
        .iter()
        .flat_map(|r| r.iter().zip(s).map(|(a, b)| (a - b).abs()))
        .fold(0.0f64, f64::max);
    if scale == 0.0 {
        return Ok((vec![0], vec![1.0]));
    }

    // tableau: m+1 constraint rows, columns = n structural + (m+1) artificial + rhs
    let nrows = m + 1;
    let ncols = n + nrows + 1;
    let rhs = ncols - 1;
    let mut t = vec![0.0; (nrows + 1) * ncols];
    let at = |r: usize, c: usize| r * ncols + c;
    for (i, row) in rows.iter().enumerate() {
        for k in 0..m {
            t[at(k, i)] = (row[k] - s[k]) / scale;
        }
        t[at(m, i)] = 1.0;
    }
    for r in 0..nrows {
        t[at(r, n + r)] = 1.0;
    }
    t[at(m, rhs)] = 1.0;
    // objective row: reduced costs for min Σ artificials
    let obj = nrows;
    for c in 0..ncols {
        if (n..n + nrows).contains(&c) {
            continue;
        }
        t[at(obj, c)] = -(0..nrows).map(|r| t[at(r, c)]).sum::<f64>();
    }
    let mut basis: Vec<usize> = (n..n + nrows).collect();

    let eps = 1e-12;
    let max_iter = 50 * (n + nrows) + 1000;
    let mut degenerate_run = 0usize;
    for _ in 0..max_iter {
        let bland = degenerate_run > 50;
        let entering = if bland {
            (0..n + nrows).find(|&c| t[at(obj, c)] < -eps)
        } else {
            (0..n + nrows)
                .filter(|&c| t[at(obj, c)] < -eps)
                .min_by(|&a, &b| t[at(obj, a)].total_cmp(&t[at(obj, b)]))
        };
        let Some(e) = entering else { break };
        let mut leave: Option<(usize, f64)> = None;
        for r in 0..nrows {
            let a = t[at(r, e)];
            if a > eps {
                let ratio = t[at(r, rhs)] / a;
                let better = match leave {
                    None => true,
                    Some((lr, lratio)) => {
                        ratio < lratio - 1e-15 || (ratio <= lratio + 1e-15 && basis[r] < basis[lr])
                    }
                };
                if better {
                    leave = Some((r, ratio));
                }
            }
        }
        // phase-one objective is bounded below by zero
        let Some((pr, ratio)) = leave else { break };
        degenerate_run = if ratio <= 1e-15 { degenerate_run + 1 } else { 0 };
        let piv = t[at(pr, e)];
        for c in 0..ncols {
            t[at(pr, c)] /= piv;
        }
        for r in 0..=nrows {
            if r == pr {
                continue;
            }
            let f = t[at(r, e)];
            if f != 0.0 {
                for c in 0..ncols {
                    t[at(r, c)] -= f * t[at(pr, c)];
                }
            }
        }
        basis[pr] = e;
    }

    let infeasibility = -t[at(obj, rhs)];
    if infeasibility > FEAS_TOL {
        // duals y_r = 1 - reduced cost of artificial r
        let y: Vec<f64> = (0..nrows).map(|r| 1.0 - t[at(obj, n + r)]).collect();
        let normal: Vec<f64> = y[..m].iter().map(|v| v / scale).collect();
        let offset = y[m] - normal.iter().zip(s).map(|(a, b)| a * b).sum::<f64>();
        return Err(Error::NotInHull {
            gap: infeasibility,
            normal,
            offset,
        });
    }

    let mut support = Vec::new();
    let mut weights = Vec::new();
    for (r, &b) in basis.iter().enumerate() {
        let v = t[at(r, rhs)];
        if b < n && v > 1e-15 {
            support.push(b);
            weights.push(v);
        }
    }
    if support.is_empty() {
        return Err(Error::NotInHull {
            gap: infeasibility,
            normal: vec![0.0; m],
            offset: 0.0,
        });
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    Ok(polish(rows, s, support, weights))
}

/// Drop points from the support along null directions of the affine system
/// until the remaining points are affinely independent.
fn reduce_support(
    rows: &[&[f64]],
    s: &[f64],
    mut support: Vec<usize>,
    mut weights: Vec<f64>,
) -> (Vec<usize>, Vec<f64>) {
    let m = s.len();
    // merge duplicate indices
    let mut merged: Vec<(usize, f64)> = Vec::with_capacity(support.len());
    for (i, w) in support.drain(..).zip(weights.drain(..)) {
        match merged.iter_mut().find(|(j, _)| *j == i) {
            Some(e) => e.1 += w,
            None if w > 0.0 => merged.push((i, w)),
            None => {}
        }
    }
    let (mut support, mut weights): (Vec<usize>, Vec<f64>) = merged.into_iter().unzip();

    loop {
        if support.len() <= 1 {
            break;
        }
        let ncols = support.len().min(m + 2);
        let nrows = (m + 1).max(ncols);
        let scale = support[..ncols]
            .iter()
            .flat_map(|&i| rows[i].iter())
            .fold(1.0f64, |a, v| a.max(v.abs()));
        let mut a = DMatrix::<f64>::zeros(nrows, ncols);
        for (c, &i) in support[..ncols].iter().enumerate() {
            for k in 0..m {
                a[(k, c)] = rows[i][k] / scale;
            }
            a[(m, c)] = 1.0;
        }
        let svd = a.svd(false, true);
        let v_t = svd.v_t.expect("requested right singular vectors");
        let (kmin, smin) = svd
            .singular_values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(k, s)| (k, *s))
            .expect("nonempty");
        let smax = svd.singular_values.max();
        if smin > 1e-10 * smax {
            // the first m+2 columns are always dependent, so this only
            // happens once the whole support is independent
            break;
        }
        let mut mu: Vec<f64> = v_t.row(kmin).iter().copied().collect();
        if !mu.iter().any(|&x| x > 1e-14) {
            mu.iter_mut().for_each(|x| *x = -*x);
        }
        let (drop, alpha) = mu
            .iter()
            .enumerate()
            .filter(|(_, &x)| x > 1e-14)
            .map(|(c, &x)| (c, weights[c] / x))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("a positive null coefficient exists");
        for c in 0..ncols {
            weights[c] -= alpha * mu[c];
        }
        weights[drop] = 0.0;
        let mut c = 0;
        while c < support.len() {
            if weights[c] <= 1e-15 {
                support.swap_remove(c);
                weights.swap_remove(c);
            } else {
                c += 1;
            }
        }
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
    }
    polish(rows, s, support, weights)
}

/// Least-squares refinement of the weights on a fixed support; kept only if
/// it stays nonnegative and improves the reconstruction.
fn polish(rows: &[&[f64]], s: &[f64], support: Vec<usize>, weights: Vec<f64>) -> (Vec<usize>, Vec<f64>) {
    let m = s.len();
    let k = support.len();
    let residual = |w: &[f64]| -> f64 {
        let sel: Vec<&[f64]> = support.iter().map(|&i| rows[i]).collect();
        let c = combine(&sel, w);
        let mut r2: f64 = c.iter().zip(s).map(|(a, b)| (a - b).powi(2)).sum();
        r2 += (w.iter().sum::<f64>() - 1.0).powi(2);
        r2.sqrt()
    };
    let mut a = DMatrix::<f64>::zeros(m + 1, k);
    let mut b = nalgebra::DVector::<f64>::zeros(m + 1);
    for (c, &i) in support.iter().enumerate() {
        for r in 0..m {
            a[(r, c)] = rows[i][r];
        }
        a[(m, c)] = 1.0;
    }
    b.rows_mut(0, m).copy_from_slice(s);
    b[m] = 1.0;
    let Ok(sol) = a.svd(true, true).solve(&b, 1e-13) else {
        return (support, weights);
    };
    if sol.iter().any(|&w| w < -1e-12) {
        return (support, weights);
    }
    let refined: Vec<f64> = sol.iter().map(|w| w.max(0.0)).collect();
    if residual(&refined) < residual(&weights) {
        (support, refined)
    } else {
        (support, weights)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn recon_error(q: &PointSet, cert: &ConvexCertificate, s: &[f64]) -> f64 {
        cert.combination(q)
            .iter()
            .zip(s)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    #[test]
    fn member_point_gives_singleton() {
        let q = PointSet::from_rows(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        let c = caratheodory_reduce(&q, &[1.0, 0.0], None).unwrap();
        assert_eq!(c.support(), &[1]);
        assert!((c.weights()[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn midpoint_of_segment() {
        let q = PointSet::from_rows(&[[0.0], [1.0]]).unwrap();
        let c = caratheodory_reduce(&q, &[0.5], None).unwrap();
        let mut pairs: Vec<(usize, f64)> = c.support().iter().copied().zip(c.weights().iter().copied()).collect();
        pairs.sort_by_key(|p| p.0);
        assert_eq!(pairs.len(), 2);
        assert!((pairs[0].1 - 0.5).abs() < 1e-12 && (pairs[1].1 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn random_combination_is_reduced() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let rows: Vec<Vec<f64>> = (0..20)
                .map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect();
            let q = PointSet::from_rows(&rows).unwrap();
            let mut lam: Vec<f64> = (0..20).map(|_| rng.random::<f64>()).collect();
            let tot: f64 = lam.iter().sum();
            lam.iter_mut().for_each(|l| *l /= tot);
            let gen = ConvexCertificate::new((0..20).collect(), lam).unwrap();
            let s = gen.combination(&q);
            // from the supplied dense certificate
            let c = caratheodory_reduce(&q, &s, Some(&gen)).unwrap();
            assert!(c.support().len() <= 4);
            assert!(recon_error(&q, &c, &s) <= 1e-8);
            // from scratch
            let c = caratheodory_reduce(&q, &s, None).unwrap();
            assert!(c.support().len() <= 4);
            assert!(recon_error(&q, &c, &s) <= 1e-8);
        }
    }

    #[test]
    fn lower_dimensional_hull_uses_affine_dimension() {
        // points on a line inside R^3
        let rows: Vec<[f64; 3]> = (0..6).map(|i| [i as f64, 2.0 * i as f64, -(i as f64)]).collect();
        let q = PointSet::from_rows(&rows).unwrap();
        let gen = ConvexCertificate::new(vec![0, 2, 3, 5], vec![0.25; 4]).unwrap();
        let s = gen.combination(&q);
        let c = caratheodory_reduce(&q, &s, Some(&gen)).unwrap();
        assert!(c.support().len() <= 2);
        assert!(recon_error(&q, &c, &s) <= 1e-8);
    }

    #[test]
    fn outside_point_has_separating_witness() {
        let q = PointSet::from_rows(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        let s = [1.0, 1.0];
        match hull_membership(&q, &s) {
            Err(Error::NotInHull { normal, offset, gap }) => {
                assert!(gap > 0.0);
                for p in q.iter() {
                    let v: f64 = normal.iter().zip(p).map(|(a, b)| a * b).sum::<f64>() + offset;
                    assert!(v <= 1e-9);
                }
                let v: f64 = normal.iter().zip(&s).map(|(a, b)| a * b).sum::<f64>() + offset;
                assert!(v > 0.0);
            }
            other => panic!("expected NotInHull, got {other:?}"),
        }
    }

    #[test]
    fn certificate_validation() {
        assert!(ConvexCertificate::new(vec![0, 1], vec![0.5, 0.6]).is_err());
        assert!(ConvexCertificate::new(vec![0, 1], vec![1.5, -0.5]).is_err());
        assert!(ConvexCertificate::new(vec![0], vec![1.0]).is_ok());
    }
}
