// SPDX-License-Identifier: Apache-2.0

//! Robust regression losses and their L∞ coresets.
//!
//! A regression instance `(P, b)` is lifted to `P' = {p∘b(p)}` in `d+1`
//! dimensions. Since `|p'ᵀ(w∘(−1))| = |pᵀw − b(p)|`, an L∞ coreset for the
//! hull of `P'` bounds every residual, and each loss below turns that into a
//! bound on `max Ψ(residual)`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::geometry::PointSet;
use crate::linf_coreset::{hull_coreset, HullConfig, LinfCoreset};
use crate::{par, rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LossKind {
    Cauchy,
    Welsch,
    Huber,
    GemanMcClure,
    Tukey,
    L1L2,
    Fair,
    /// Non-decreasing concave with `Ψ(0) = 0`.
    Concave,
    /// `Ψ(y)/Ψ(x) <= (y/x)^z` for `0 < x <= y`.
    PowerBounded,
}

impl LossKind {
    pub const ALL: [LossKind; 9] = [
        LossKind::Cauchy,
        LossKind::Welsch,
        LossKind::Huber,
        LossKind::GemanMcClure,
        LossKind::Tukey,
        LossKind::L1L2,
        LossKind::Fair,
        LossKind::Concave,
        LossKind::PowerBounded,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LossKind::Cauchy => "cauchy",
            LossKind::Welsch => "welsch",
            LossKind::Huber => "huber",
            LossKind::GemanMcClure => "geman-mcclure",
            LossKind::Tukey => "tukey",
            LossKind::L1L2 => "l1-l2",
            LossKind::Fair => "fair",
            LossKind::Concave => "concave",
            LossKind::PowerBounded => "power",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == name)
            .ok_or_else(|| {
                let known: Vec<&str> = Self::ALL.iter().map(|k| k.name()).collect();
                Error::InvalidArgument(format!("unknown loss '{name}' (expected one of {})", known.join(", ")))
            })
    }
}

type UserFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A loss with its parameters. Built-in kinds are constructed with
/// [`LossSpec::new`]; user functions go through [`LossSpec::concave`] or
/// [`LossSpec::power_bounded`], which validate the required shape.
#[derive(Clone)]
pub struct LossSpec {
    kind: LossKind,
    lambda: f64,
    z: f64,
    user: Option<UserFn>,
}

impl fmt::Debug for LossSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LossSpec")
            .field("kind", &self.kind)
            .field("lambda", &self.lambda)
            .field("z", &self.z)
            .field("user", &self.user.is_some())
            .finish()
    }
}

impl LossSpec {
    /// Built-in loss with scale `lambda`. `Concave` defaults to
    /// `λ ln(1 + |x|/λ)` and `PowerBounded` to `|x|^1`.
    pub fn new(kind: LossKind, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!("lambda = {lambda} must be positive")));
        }
        Ok(Self {
            kind,
            lambda,
            z: 1.0,
            user: None,
        })
    }

    /// `|x|^z`.
    pub fn power(z: f64) -> Result<Self> {
        if !(z > 0.0 && z.is_finite()) {
            return Err(Error::InvalidArgument(format!("z = {z} must be positive")));
        }
        Ok(Self {
            kind: LossKind::PowerBounded,
            lambda: 1.0,
            z,
            user: None,
        })
    }

    /// Parse a loss name with its parameters; `z` is only read by `power`.
    pub fn from_name(name: &str, lambda: f64, z: f64) -> Result<Self> {
        match LossKind::from_name(name)? {
            LossKind::PowerBounded => Self::power(z),
            kind => Self::new(kind, lambda),
        }
    }

    /// A user concave loss. Rejected unless it vanishes at 0, is
    /// non-decreasing, midpoint concave and satisfies `f(bx) <= b f(x)` on
    /// the default grid.
    pub fn concave<F>(f: F) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let f: UserFn = Arc::new(f);
        register_checks(&f, 1.0)?;
        let grid = LogGrid::default();
        let xs = grid.xs();
        for w in xs.windows(3) {
            let (a, b, c) = (f(w[0]), f(w[1]), f(w[2]));
            // chord below the curve at the middle node
            let chord = a + (c - a) * (w[1] - w[0]) / (w[2] - w[0]);
            if b < chord - 1e-9 * chord.abs().max(1e-300) {
                return Err(Error::InvalidArgument(format!("loss is not concave near x = {}", w[1])));
            }
        }
        Ok(Self {
            kind: LossKind::Concave,
            lambda: 1.0,
            z: 1.0,
            user: Some(f),
        })
    }

    /// A user loss with `Ψ(y)/Ψ(x) <= (y/x)^z`, checked on the default grid.
    pub fn power_bounded<F>(f: F, z: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(z > 0.0 && z.is_finite()) {
            return Err(Error::InvalidArgument(format!("z = {z} must be positive")));
        }
        let f: UserFn = Arc::new(f);
        register_checks(&f, z)?;
        Ok(Self {
            kind: LossKind::PowerBounded,
            lambda: 1.0,
            z,
            user: Some(f),
        })
    }

    pub fn kind(&self) -> LossKind {
        self.kind
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    /// `Ψ(|x|)`.
    pub fn eval(&self, x: f64) -> f64 {
        let x = x.abs();
        let l = self.lambda;
        if let Some(f) = &self.user {
            return f(x);
        }
        match self.kind {
            LossKind::Cauchy => 0.5 * l * l * (x / l).powi(2).ln_1p(),
            LossKind::Welsch => -0.5 * l * l * (-(x / l).powi(2)).exp_m1(),
            LossKind::Huber => {
                if x <= l {
                    0.5 * x * x
                } else {
                    l * x - 0.5 * l * l
                }
            }
            LossKind::GemanMcClure => x * x / (2.0 + 2.0 * x * x),
            LossKind::Tukey => {
                if x <= l {
                    let r = 1.0 - (x / l).powi(2);
                    l * l / 6.0 * (1.0 - r * r * r)
                } else {
                    l * l / 6.0
                }
            }
            LossKind::L1L2 => 2.0 * ((1.0 + 0.5 * x * x).sqrt() - 1.0),
            LossKind::Fair => l * x - l * l * (x / l).ln_1p(),
            LossKind::Concave => l * (x / l).ln_1p(),
            LossKind::PowerBounded => x.powf(self.z),
        }
    }

    /// `dΨ/dx` at signed `x`. User functions use central differences.
    pub fn derivative(&self, x: f64) -> f64 {
        let (s, a) = (x.signum(), x.abs());
        let l = self.lambda;
        if self.user.is_some() {
            let h = 1e-6 * a.max(1.0);
            let lo = (a - h).max(0.0);
            return s * (self.eval(a + h) - self.eval(lo)) / (a + h - lo);
        }
        s * match self.kind {
            LossKind::Cauchy => a / (1.0 + (a / l).powi(2)),
            LossKind::Welsch => a * (-(a / l).powi(2)).exp(),
            LossKind::Huber => a.min(l),
            LossKind::GemanMcClure => a / (1.0 + a * a).powi(2),
            LossKind::Tukey => {
                if a <= l {
                    a * (1.0 - (a / l).powi(2)).powi(2)
                } else {
                    0.0
                }
            }
            LossKind::L1L2 => a / (1.0 + 0.5 * a * a).sqrt(),
            LossKind::Fair => l * a / (l + a),
            LossKind::Concave => l / (l + a),
            LossKind::PowerBounded => {
                if a == 0.0 {
                    if self.z < 1.0 {
                        f64::INFINITY
                    } else if self.z == 1.0 {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    self.z * a.powf(self.z - 1.0)
                }
            }
        }
    }

    /// Bound on `max_P Ψ(residual) / max_C Ψ(residual)` for an L∞ coreset of
    /// the lifted points, in feature dimension `d`.
    pub fn guarantee_factor(&self, d: usize) -> f64 {
        let e = (d + 1) as f64;
        match self.kind {
            LossKind::Huber => 16.0 * e.powi(3),
            LossKind::Concave => 4.0 * e.powf(1.5),
            LossKind::PowerBounded => 4f64.powf(self.z) * e.powf(1.5 * self.z),
            _ => 8.0 * e.powi(3),
        }
    }

    /// Distance exponent of the underlying coreset bound for this kind.
    pub fn distance_z(&self) -> f64 {
        match self.kind {
            LossKind::Concave | LossKind::PowerBounded => 1.0,
            _ => 2.0,
        }
    }
}

/// Logarithmic `(b, x)` grid for shape checks.
#[derive(Debug, Clone, PartialEq)]
pub struct LogGrid {
    pub b_max: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub steps: usize,
}

impl Default for LogGrid {
    fn default() -> Self {
        Self {
            b_max: 1e3,
            x_min: 1e-3,
            x_max: 1e3,
            steps: 61,
        }
    }
}

impl LogGrid {
    fn geom(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
        let steps = steps.max(2);
        let (a, b) = (lo.ln(), hi.ln());
        (0..steps)
            .map(|i| (a + (b - a) * i as f64 / (steps - 1) as f64).exp())
            .collect()
    }

    pub fn xs(&self) -> Vec<f64> {
        Self::geom(self.x_min, self.x_max, self.steps)
    }

    pub fn bs(&self) -> Vec<f64> {
        Self::geom(1.0, self.b_max, self.steps)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LipschitzCheck {
    pub holds: bool,
    /// `(b, x)` maximizing `f(bx) / (b^ρ f(x))`.
    pub worst: (f64, f64),
    /// That maximum ratio; at most 1 when the property holds.
    pub worst_ratio: f64,
}

/// Checks `f(bx) <= b^ρ f(x)` on the grid.
pub fn check_loglog_lipschitz(spec: &LossSpec, rho: f64, grid: &LogGrid) -> LipschitzCheck {
    loglog(&|x| spec.eval(x), rho, grid)
}

fn loglog(f: &dyn Fn(f64) -> f64, rho: f64, grid: &LogGrid) -> LipschitzCheck {
    let mut worst = (1.0, grid.x_min);
    let mut worst_ratio = f64::NEG_INFINITY;
    for &b in &grid.bs() {
        for &x in &grid.xs() {
            let lhs = f(b * x);
            let rhs = b.powf(rho) * f(x);
            let ratio = if rhs > 0.0 {
                lhs / rhs
            } else if lhs > 0.0 {
                f64::INFINITY
            } else {
                1.0
            };
            if ratio > worst_ratio {
                worst_ratio = ratio;
                worst = (b, x);
            }
        }
    }
    LipschitzCheck {
        holds: worst_ratio <= 1.0 + 1e-9,
        worst,
        worst_ratio,
    }
}

fn register_checks(f: &UserFn, rho: f64) -> Result<()> {
    let at0 = f(0.0);
    if at0.abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!("loss must vanish at 0, got {at0}")));
    }
    let grid = LogGrid::default();
    let mut prev = at0;
    for x in grid.xs() {
        let v = f(x);
        if !v.is_finite() || v < prev - 1e-12 * prev.abs() {
            return Err(Error::InvalidArgument(format!("loss is not non-decreasing at x = {x}")));
        }
        prev = v;
    }
    let check = loglog(f.as_ref(), rho, &grid);
    if !check.holds {
        let (b, x) = check.worst;
        return Err(Error::InvalidArgument(format!(
            "f(bx) <= b^{rho} f(x) fails at b = {b}, x = {x} (ratio {})",
            check.worst_ratio
        )));
    }
    Ok(())
}

/// Features with one real label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionInstance {
    points: PointSet,
    labels: Vec<f64>,
}

impl RegressionInstance {
    pub fn new(points: PointSet, labels: Vec<f64>) -> Result<Self> {
        if labels.len() != points.len() {
            return Err(Error::DimensionMismatch {
                expected: points.len(),
                got: labels.len(),
            });
        }
        if labels.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidArgument("labels must be finite".into()));
        }
        Ok(Self { points, labels })
    }

    pub fn points(&self) -> &PointSet {
        &self.points
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.dim()
    }

    /// `pᵢᵀw − bᵢ`.
    pub fn residual(&self, i: usize, w: &[f64]) -> f64 {
        self.points.point(i).iter().zip(w).map(|(p, w)| p * w).sum::<f64>() - self.labels[i]
    }
}

/// Rows `pᵢ∘bᵢ`.
pub fn regression_lift(inst: &RegressionInstance) -> PointSet {
    let d = inst.dim();
    let mut data = Vec::with_capacity(inst.len() * (d + 1));
    for (i, b) in inst.labels.iter().enumerate() {
        data.extend_from_slice(inst.points.point(i));
        data.push(*b);
    }
    PointSet::from_flat(data, d + 1).expect("finite lifted rows")
}

/// L∞ coreset of the lifted instance; the guarantee is the loss factor.
pub fn regression_linf_coreset(inst: &RegressionInstance, spec: &LossSpec, cfg: &HullConfig) -> Result<LinfCoreset> {
    if inst.is_empty() {
        return Err(Error::InvalidArgument("empty regression instance".into()));
    }
    let d = inst.dim();
    let lifted = regression_lift(inst);
    let members: Vec<usize> = (0..inst.len()).collect();
    let indices = if inst.len() <= 2 * (d + 2) * (d + 2) {
        members
    } else {
        hull_coreset(&lifted, &members, cfg)?.0
    };
    Ok(LinfCoreset::from_parts(indices, d, 1, spec.guarantee_factor(d)))
}

/// Outcome of a randomized sweep over regression parameters `w`.
#[derive(Debug, Clone)]
pub struct RegressionRatio {
    pub max_ratio: f64,
    pub worst_w: Vec<f64>,
}

/// Empirical `max_w max_P Ψ / max_C Ψ` over `num_queries` parameters: `w = 0`,
/// Gaussian directions at log-uniform scales, and exact fits through `d`
/// points outside the coreset.
pub fn verify_regression_ratio(
    inst: &RegressionInstance,
    coreset: &[usize],
    spec: &LossSpec,
    num_queries: usize,
    rng_seed: u64,
) -> Result<RegressionRatio> {
    if coreset.is_empty() || coreset.iter().any(|&i| i >= inst.len()) {
        return Err(Error::InvalidArgument("coreset indices out of range".into()));
    }
    let d = inst.dim();
    let mut in_c = vec![false; inst.len()];
    coreset.iter().for_each(|&i| in_c[i] = true);
    let outside: Vec<usize> = (0..inst.len()).filter(|&i| !in_c[i]).collect();
    let scale = regression_lift(inst).max_abs().max(1.0);

    let results = par::map(num_queries, |q| {
        let mut rng = rng::seeded(rng_seed, &[0x7E, q as u64]);
        let w: Vec<f64> = if q == 0 {
            vec![0.0; d]
        } else if q % 2 == 0 && outside.len() >= d {
            let pick = rand::seq::index::sample(&mut rng, outside.len(), d);
            let rows: Vec<usize> = pick.into_iter().map(|a| outside[a]).collect();
            let a = DMatrix::from_fn(d, d, |r, c| inst.points.point(rows[r])[c]);
            let b = DVector::from_fn(d, |r, _| inst.labels[rows[r]]);
            match a.lu().solve(&b) {
                Some(w) if w.iter().all(|v| v.is_finite()) => w.iter().copied().collect(),
                _ => gaussian_w(d, &mut rng),
            }
        } else {
            gaussian_w(d, &mut rng)
        };
        let norm = 1.0 + w.iter().map(|v| v * v).sum::<f64>().sqrt();
        let tol = 1e-9 * scale * norm;
        let worst = |it: &mut dyn Iterator<Item = usize>| it.map(|i| inst.residual(i, &w).abs()).fold(0.0, f64::max);
        let rp = worst(&mut (0..inst.len()));
        let rc = worst(&mut coreset.iter().copied());
        let ratio = if rp <= tol {
            1.0
        } else if rc <= tol {
            f64::INFINITY
        } else {
            let (fp, fc) = (spec.eval(rp), spec.eval(rc));
            if fc > 0.0 {
                (fp / fc).max(1.0)
            } else {
                f64::INFINITY
            }
        };
        (ratio, w)
    });
    let mut out = RegressionRatio {
        max_ratio: 1.0,
        worst_w: vec![0.0; d],
    };
    for (r, w) in results {
        if r > out.max_ratio {
            out = RegressionRatio { max_ratio: r, worst_w: w };
        }
    }
    Ok(out)
}

fn gaussian_w(d: usize, rng: &mut rng::Rng) -> Vec<f64> {
    let s = 10f64.powf(rng.random_range(-3.0..3.0));
    (0..d).map(|_| s * rng.sample::<f64, _>(StandardNormal)).collect()
}
