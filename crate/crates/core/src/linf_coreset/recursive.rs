// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeSet, HashMap};
use std::rc::Rc;

use super::partition::{partition_level0, partition_levelt, LevelPartition};
use super::{check_z, hull_coreset, single_flat_factor, HullConfig, LinfCoreset};
use crate::error::{Error, Result};
use crate::geometry::{affine_span, best_fit_flat, PointSet};

/// How a single-flat coreset is built for data that does not lie on a
/// `j`-flat.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BaseCase {
    /// Run the hull construction on the affine hull of the data at its own
    /// dimension `m`. Exact; the factor becomes `2^{z+1} max(j,m)^{1.5z}`.
    #[default]
    AffineHull,
    /// Project onto the least-squares `j`-flat first. Heuristic; the largest
    /// projection distance is reported as `base_residual`.
    BestFitProjection,
}

#[derive(Debug, Clone)]
pub struct JkConfig {
    pub hull: HullConfig,
    /// Exponent in the band floor `(dΔ)^{-c_exp·j}`.
    pub c_exp: f64,
    /// Cap on recursion nodes (coreset calls plus partitions).
    pub node_budget: usize,
    pub base: BaseCase,
}

impl Default for JkConfig {
    fn default() -> Self {
        Self {
            hull: HullConfig::default(),
            c_exp: 2.0,
            node_budget: 2_000_000,
            base: BaseCase::AffineHull,
        }
    }
}

/// L∞ coreset for `k` flats of dimension `j`.
///
/// `j = 0` asks for point centers. `k = 1` works on arbitrary input. For `k >= 2` the points must carry an
/// integer grid bound (see [`PointSet::with_grid`]); every anchor choice is
/// enumerated, and exceeding `node_budget` fails with [`Error::Budget`].
pub fn coreset_jk(points: &PointSet, j: usize, k: usize, cfg: &JkConfig) -> Result<LinfCoreset> {
    let d = points.dim();
    if j >= d {
        return Err(Error::InvalidArgument(format!(
            "j = {j} must lie in [0, {}]",
            d.saturating_sub(1)
        )));
    }
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    check_z(cfg.hull.z)?;
    if k >= 2 && points.grid_delta().is_none() {
        return Err(Error::GridRequired);
    }
    let mut b = Builder {
        points,
        j,
        cfg,
        memo: HashMap::new(),
        nodes: 0,
        residual: 0.0,
        base_dim: 0,
    };
    let members: Vec<usize> = (0..points.len()).collect();
    let indices = b.build(k, &members)?.as_ref().clone();
    let guarantee_factor = if k == 1 {
        single_flat_factor(j.max(b.base_dim).max(1), cfg.hull.z)
    } else {
        f64::INFINITY
    };
    Ok(LinfCoreset {
        indices,
        j,
        k,
        guarantee_factor,
        base_residual: b.residual,
    })
}

struct Builder<'a> {
    points: &'a PointSet,
    j: usize,
    cfg: &'a JkConfig,
    memo: HashMap<(usize, Vec<usize>), Rc<Vec<usize>>>,
    nodes: usize,
    residual: f64,
    base_dim: usize,
}

impl Builder<'_> {
    fn tick(&mut self) -> Result<()> {
        self.nodes += 1;
        if self.nodes > self.cfg.node_budget {
            return Err(Error::Budget {
                cap: self.cfg.node_budget,
            });
        }
        Ok(())
    }

    /// `members` must be sorted.
    fn build(&mut self, k: usize, members: &[usize]) -> Result<Rc<Vec<usize>>> {
        let key = (k, members.to_vec());
        if let Some(hit) = self.memo.get(&key) {
            return Ok(Rc::clone(hit));
        }
        self.tick()?;
        let out = if k == 1 {
            self.base(members)?
        } else if members.len() <= k * (self.j + 1) {
            members.to_vec()
        } else {
            let prev = self.build(k - 1, members)?;
            let mut acc: BTreeSet<usize> = prev.iter().copied().collect();
            for &v0 in prev.iter() {
                let part = partition_level0(self.points, members, self.points.point(v0))?;
                self.tick()?;
                self.descend(k, 0, vec![v0], &part, &mut acc)?;
            }
            acc.into_iter().collect()
        };
        let out = Rc::new(out);
        self.memo.insert(key, Rc::clone(&out));
        Ok(out)
    }

    fn descend(
        &mut self,
        k: usize,
        t: usize,
        anchors: Vec<usize>,
        part: &LevelPartition,
        acc: &mut BTreeSet<usize>,
    ) -> Result<()> {
        let mut subs = Vec::with_capacity(part.cells.len());
        for (i, cell) in part.cells.iter().enumerate() {
            // at level 0 the cell around v0 is v0 itself (and duplicates)
            if cell.is_empty() || (i == 0 && t == 0) {
                subs.push(Rc::new(Vec::new()));
                continue;
            }
            let sub = self.build(k - 1, cell)?;
            acc.extend(sub.iter().copied());
            subs.push(sub);
        }
        if t == self.j {
            return Ok(());
        }
        let mut prefix: Vec<usize> = part.cells[0].clone();
        for i in 1..part.cells.len() {
            if part.cells[i].is_empty() {
                continue;
            }
            prefix.extend_from_slice(&part.cells[i]);
            prefix.sort_unstable();
            for &v in subs[i].iter() {
                let mut next = anchors.clone();
                next.push(v);
                let rows: Vec<&[f64]> = next.iter().map(|&a| self.points.point(a)).collect();
                let flat = affine_span(&rows)?;
                let sub_part =
                    partition_levelt(self.points, &prefix, &flat, self.j, self.cfg.c_exp)?;
                self.tick()?;
                self.descend(k, t + 1, next, &sub_part, acc)?;
            }
        }
        Ok(())
    }

    fn base(&mut self, members: &[usize]) -> Result<Vec<usize>> {
        match self.cfg.base {
            BaseCase::AffineHull => {
                let (idx, m) = hull_coreset(self.points, members, &self.cfg.hull)?;
                self.base_dim = self.base_dim.max(m);
                Ok(idx)
            }
            BaseCase::BestFitProjection => {
                let flat = best_fit_flat(self.points, members, self.j);
                let mut worst = 0.0f64;
                let rows: Vec<Vec<f64>> = members
                    .iter()
                    .map(|&i| {
                        let p = self.points.point(i);
                        worst = worst.max(flat.dist_unchecked(p));
                        flat.project(p)
                    })
                    .collect();
                self.residual = self.residual.max(worst);
                let projected = PointSet::from_rows(&rows)?;
                let local: Vec<usize> = (0..members.len()).collect();
                let (idx, _) = hull_coreset(&projected, &local, &self.cfg.hull)?;
                let mut out: Vec<usize> = idx.into_iter().map(|a| members[a]).collect();
                out.sort_unstable();
                Ok(out)
            }
        }
    }
}
