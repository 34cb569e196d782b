#![allow(dead_code)]

use latent_progress::mcmc::draws;
use latent_progress::model::{logistic, DistanceTable, LatentState, ModelParams};
use latent_progress::MetricSpace;
use nalgebra::DMatrix;
use rand::Rng;

pub fn random_point<R: Rng>(space: &MetricSpace, rng: &mut R) -> Vec<f64> {
    if space.is_euclidean() {
        (0..space.q).map(|_| draws::normal(0.0, 1.0, rng)).collect()
    } else {
        let r = 0.95 * space.rho * rng.random::<f64>().sqrt();
        let a = 2.0 * std::f64::consts::PI * rng.random::<f64>();
        vec![r * a.cos(), r * a.sin()]
    }
}

/// Random parameters and latent state, rates strictly inside (0, 1).
pub fn random_model<R: Rng>(
    n: usize,
    p: usize,
    times: usize,
    space: &MetricSpace,
    rng: &mut R,
) -> (ModelParams, LatentState) {
    let w = times - 1;
    let params = ModelParams {
        alpha: (0..n).map(|_| draws::normal(0.0, 1.0, rng)).collect(),
        beta: (0..p).map(|_| draws::normal(0.0, 1.0, rng)).collect(),
        gamma: rng.random_range(0.1..3.0),
        sigma_alpha2: rng.random_range(0.2..3.0),
    };
    let state = LatentState {
        n,
        p,
        q: space.q,
        times,
        a1: (0..n).flat_map(|_| random_point(space, rng)).collect(),
        b: (0..p).flat_map(|_| random_point(space, rng)).collect(),
        lambda: (0..n * w).map(|_| rng.random_range(0.01..0.99)).collect(),
        r: (0..n * w).map(|_| rng.random_bool(0.5) as u8).collect(),
        pi: (0..n * w).map(|_| rng.random_range(0.05..0.95)).collect(),
    };
    (params, state)
}

/// Every linear predictor in storage order.
pub fn all_eta(params: &ModelParams, state: &LatentState, space: &MetricSpace) -> Vec<f64> {
    let d = DistanceTable::new(state, space);
    let mut out = Vec::with_capacity(state.n * state.p * state.times);
    for i in 0..state.n {
        for t in 0..state.times {
            for j in 0..state.p {
                out.push(params.alpha[i] + params.beta[j] - params.gamma * d.get(i, j, t));
            }
        }
    }
    out
}

pub fn all_prob(params: &ModelParams, state: &LatentState, space: &MetricSpace) -> Vec<f64> {
    all_eta(params, state, space).into_iter().map(logistic).collect()
}

/// Haar-ish random orthogonal matrix (may include a reflection).
pub fn random_orthogonal<R: Rng>(q: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::from_fn(q, q, |_, _| draws::normal(0.0, 1.0, rng));
    g.qr().q()
}

/// Applies `x -> x * m + shift` to every `q`-row of `coords`.
pub fn transform(coords: &mut [f64], m: &DMatrix<f64>, shift: &[f64]) {
    let q = shift.len();
    for x in coords.chunks_exact_mut(q) {
        let old = x.to_vec();
        for c in 0..q {
            x[c] = shift[c] + (0..q).map(|k| old[k] * m[(k, c)]).sum::<f64>();
        }
    }
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
