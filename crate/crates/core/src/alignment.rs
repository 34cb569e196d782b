//! Identifiability handling: the scale constraint on item positions and
//! Procrustes matching of latent configurations.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::{LatentState, ModelParams};
use crate::space::{sq_norm, MetricSpace};

/// Rescales item and individual positions so that the root mean squared
/// norm of the item positions is one, compensating in `gamma` so that every
/// linear predictor is unchanged. Returns the factor `c` that was divided
/// out. A no-op (returning 1) on the Poincaré disk, whose radius fixes the
/// scale.
pub fn enforce_scale(state: &mut LatentState, params: &mut ModelParams, space: &MetricSpace) -> Result<f64> {
    if !space.is_euclidean() {
        return Ok(1.0);
    }
    let c = item_scale(state);
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::Degenerate(format!("item positions have scale {c}")));
    }
    if c == 1.0 {
        return Ok(c);
    }
    let inv = 1.0 / c;
    state.b.iter_mut().for_each(|v| *v *= inv);
    state.a1.iter_mut().for_each(|v| *v *= inv);
    params.gamma *= c;
    Ok(c)
}

/// `sqrt((1/p) * sum_j ||b_j||^2)`.
pub fn item_scale(state: &LatentState) -> f64 {
    let ss: f64 = state.b.chunks_exact(state.q).map(sq_norm).sum();
    (ss / state.p as f64).sqrt()
}

/// Labeled points sharing one dimension, row-major coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    pub labels: Vec<String>,
    pub dim: usize,
    pub coords: Vec<f64>,
}

impl Configuration {
    pub fn new(labels: Vec<String>, dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 || coords.len() != labels.len() * dim {
            return Err(Error::Dimension(format!(
                "{} labels with {} coordinates in dimension {dim}",
                labels.len(),
                coords.len()
            )));
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = labels.iter().find(|l| !seen.insert(l.as_str())) {
            return Err(Error::Data(format!("duplicate label {dup}")));
        }
        Ok(Self { labels, dim, coords })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn point(&self, k: usize) -> &[f64] {
        &self.coords[k * self.dim..(k + 1) * self.dim]
    }

    /// Sum of squared distances between matching points.
    pub fn residual(&self, other: &Configuration) -> f64 {
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }
}

/// Which rigid motions an alignment may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AlignOptions {
    pub translate: bool,
    pub allow_reflection: bool,
}

impl AlignOptions {
    pub fn for_space(space: &MetricSpace) -> Self {
        Self {
            translate: space.is_euclidean(),
            allow_reflection: true,
        }
    }
}

impl Default for AlignOptions {
    fn default() -> Self {
        Self {
            translate: true,
            allow_reflection: true,
        }
    }
}

/// Orthogonal map plus shift: `x -> (x - from) * rotation + to`.
#[derive(Debug, Clone, PartialEq)]
pub struct RigidMotion {
    pub rotation: DMatrix<f64>,
    pub from: Vec<f64>,
    pub to: Vec<f64>,
}

impl RigidMotion {
    pub fn apply(&self, coords: &[f64]) -> Vec<f64> {
        let q = self.from.len();
        let mut out = vec![0.0; coords.len()];
        for (x, y) in coords.chunks_exact(q).zip(out.chunks_exact_mut(q)) {
            for c in 0..q {
                let mut acc = self.to[c];
                for k in 0..q {
                    acc += (x[k] - self.from[k]) * self.rotation[(k, c)];
                }
                y[c] = acc;
            }
        }
        out
    }
}

fn centroid(coords: &[f64], q: usize) -> Vec<f64> {
    crate::space::target(coords, q)
}

/// Least-squares rigid motion taking `sample` onto `reference`.
pub fn procrustes_fit(sample: &[f64], reference: &[f64], q: usize, opts: AlignOptions) -> Result<RigidMotion> {
    if sample.len() != reference.len() || q == 0 || sample.len() % q != 0 {
        return Err(Error::Dimension(format!(
            "cannot align {} coordinates to {} in dimension {q}",
            sample.len(),
            reference.len()
        )));
    }
    let m = sample.len() / q;
    let (from, to) = if opts.translate {
        (centroid(sample, q), centroid(reference, q))
    } else {
        (vec![0.0; q], vec![0.0; q])
    };
    let x = DMatrix::from_fn(m, q, |r, c| sample[r * q + c] - from[c]);
    let y = DMatrix::from_fn(m, q, |r, c| reference[r * q + c] - to[c]);
    let h = x.transpose() * y;
    let svd = h.svd(true, true);
    let mut u = svd.u.expect("left singular vectors");
    let v_t = svd.v_t.expect("right singular vectors");
    let mut rotation = &u * &v_t;
    if !opts.allow_reflection && rotation.determinant() < 0.0 {
        // flip the axis of the smallest singular value
        let (k, _) = svd
            .singular_values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty spectrum");
        for r in 0..q {
            u[(r, k)] = -u[(r, k)];
        }
        rotation = &u * &v_t;
    }
    Ok(RigidMotion { rotation, from, to })
}

/// Applies the best rigid motion (rotation, optional reflection and
/// translation; no scaling) of `sample` onto `reference`.
pub fn procrustes_align(sample: &Configuration, reference: &Configuration, opts: AlignOptions) -> Result<Configuration> {
    if sample.dim != reference.dim || sample.len() != reference.len() {
        return Err(Error::Dimension(format!(
            "sample has {} points in dimension {}, reference {} in dimension {}",
            sample.len(),
            sample.dim,
            reference.len(),
            reference.dim
        )));
    }
    if sample.labels != reference.labels {
        return Err(Error::Data("sample and reference labels differ".into()));
    }
    let motion = procrustes_fit(&sample.coords, &reference.coords, sample.dim, opts)?;
    Ok(Configuration {
        labels: sample.labels.clone(),
        dim: sample.dim,
        coords: motion.apply(&sample.coords),
    })
}
