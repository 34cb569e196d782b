//! Latent geometry: the metric space shared by individuals and items,
//! the target, and the convex-combination process that moves individuals
//! towards it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Euclidean,
    Poincare,
}

/// Geometry descriptor. For the Poincaré disk `q` is always 2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSpace {
    pub kind: MetricKind,
    pub q: usize,
    /// Disk radius; ignored for Euclidean space.
    #[serde(default = "default_rho")]
    pub rho: f64,
}

fn default_rho() -> f64 {
    1.0
}

impl MetricSpace {
    pub fn euclidean(q: usize) -> Self {
        Self {
            kind: MetricKind::Euclidean,
            q,
            rho: 1.0,
        }
    }

    pub fn poincare(rho: f64) -> Self {
        Self {
            kind: MetricKind::Poincare,
            q: 2,
            rho,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.q == 0 {
            return Err(Error::Config("latent dimension must be at least 1".into()));
        }
        if self.kind == MetricKind::Poincare {
            if self.q != 2 {
                return Err(Error::Config(format!(
                    "the Poincaré disk is two-dimensional, got q = {}",
                    self.q
                )));
            }
            if !(self.rho > 0.0 && self.rho.is_finite()) {
                return Err(Error::Config(format!("disk radius must be positive, got {}", self.rho)));
            }
        }
        Ok(())
    }

    pub fn is_euclidean(&self) -> bool {
        self.kind == MetricKind::Euclidean
    }

    /// Whether `x` lies in the space (strictly inside the disk for Poincaré).
    pub fn admissible(&self, x: &[f64]) -> bool {
        if x.len() != self.q || !x.iter().all(|v| v.is_finite()) {
            return false;
        }
        match self.kind {
            MetricKind::Euclidean => true,
            MetricKind::Poincare => sq_norm(x) < self.rho * self.rho,
        }
    }

    /// Distance between two admissible points.
    pub fn distance(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        if x.len() != self.q || y.len() != self.q {
            return Err(Error::Dimension(format!(
                "points of length {} and {} in a {}-dimensional space",
                x.len(),
                y.len(),
                self.q
            )));
        }
        match self.kind {
            MetricKind::Euclidean => Ok(euclidean_distance(x, y)),
            MetricKind::Poincare => {
                let r2 = self.rho * self.rho;
                let nx = sq_norm(x);
                let ny = sq_norm(y);
                if nx >= r2 || ny >= r2 {
                    return Err(Error::Domain(format!(
                        "point outside the disk of radius {}",
                        self.rho
                    )));
                }
                Ok(poincare_distance_unchecked(x, y, r2, nx, ny))
            }
        }
    }

    /// Distance without admissibility checks; used in the sampler's inner
    /// loops where every stored point is admissible by construction.
    #[inline]
    pub fn dist(&self, x: &[f64], y: &[f64]) -> f64 {
        match self.kind {
            MetricKind::Euclidean => euclidean_distance(x, y),
            MetricKind::Poincare => {
                let r2 = self.rho * self.rho;
                poincare_distance_unchecked(x, y, r2, sq_norm(x), sq_norm(y))
            }
        }
    }
}

#[inline]
pub(crate) fn sq_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// Euclidean norm with scaled accumulation (no overflow or underflow for
/// extreme coordinates).
#[inline]
pub fn norm2(x: &[f64]) -> f64 {
    let mut scale = 0.0f64;
    let mut ssq = 1.0f64;
    for &v in x {
        if v != 0.0 {
            let a = v.abs();
            if scale < a {
                ssq = 1.0 + ssq * (scale / a) * (scale / a);
                scale = a;
            } else {
                ssq += (a / scale) * (a / scale);
            }
        }
    }
    scale * ssq.sqrt()
}

#[inline]
fn euclidean_distance(x: &[f64], y: &[f64]) -> f64 {
    match x.len() {
        1 => (x[0] - y[0]).abs(),
        2 => (x[0] - y[0]).hypot(x[1] - y[1]),
        _ => {
            let mut buf = [0.0f64; 8];
            if x.len() <= buf.len() {
                for k in 0..x.len() {
                    buf[k] = x[k] - y[k];
                }
                norm2(&buf[..x.len()])
            } else {
                let diff: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
                norm2(&diff)
            }
        }
    }
}

#[inline]
fn poincare_distance_unchecked(x: &[f64], y: &[f64], r2: f64, nx: f64, ny: f64) -> f64 {
    let diff2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    let arg = 2.0 * r2 * diff2 / ((r2 - nx) * (r2 - ny));
    // arcosh(1 + u) = log1p(u + sqrt(u (u + 2))), accurate for small u
    (arg + (arg * (arg + 2.0)).sqrt()).ln_1p()
}

/// Centroid of the item positions, stored row-major with `q` coordinates each.
pub fn target(items: &[f64], q: usize) -> Vec<f64> {
    let p = items.len() / q;
    let mut t = vec![0.0; q];
    for b in items.chunks_exact(q) {
        for (tk, bk) in t.iter_mut().zip(b) {
            *tk += bk;
        }
    }
    t.iter_mut().for_each(|v| *v /= p as f64);
    t
}

/// One step of the process: `(1 - lambda) * prev + lambda * target`.
#[inline]
pub fn step_towards(prev: &[f64], target: &[f64], lambda: f64, out: &mut [f64]) {
    for k in 0..prev.len() {
        out[k] = (1.0 - lambda) * prev[k] + lambda * target[k];
    }
}

/// Positions at times `1..=T` given the initial position and the rates for
/// times `2..=T`. Returned row-major, `q` coordinates per time point.
pub fn propagate_positions(a1: &[f64], lambdas: &[f64], target: &[f64]) -> Result<Vec<f64>> {
    if a1.len() != target.len() {
        return Err(Error::Dimension("initial position and target differ in length".into()));
    }
    if let Some(bad) = lambdas.iter().find(|l| !(0.0..=1.0).contains(*l)) {
        return Err(Error::Domain(format!("rate {bad} outside [0, 1]")));
    }
    let q = a1.len();
    let mut out = vec![0.0; q * (lambdas.len() + 1)];
    out[..q].copy_from_slice(a1);
    for (t, &lam) in lambdas.iter().enumerate() {
        let (done, rest) = out.split_at_mut(q * (t + 1));
        step_towards(&done[q * t..], target, lam, &mut rest[..q]);
    }
    Ok(out)
}

/// Rate of progress recovered from consecutive distances to the target.
pub fn rate_from_distances(d_prev: f64, d_curr: f64) -> Result<f64> {
    const TOL: f64 = 1e-12;
    if d_prev.is_nan() || d_curr.is_nan() || d_curr < 0.0 {
        return Err(Error::Domain(format!("invalid distances ({d_prev}, {d_curr})")));
    }
    if d_prev <= 0.0 {
        return Err(Error::UndefinedRate);
    }
    if d_curr > d_prev * (1.0 + TOL) {
        return Err(Error::Domain(format!(
            "distance increased from {d_prev} to {d_curr}; regress is not modeled"
        )));
    }
    Ok((1.0 - d_curr / d_prev).clamp(0.0, 1.0))
}
