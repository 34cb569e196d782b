//! Parameters, latent state and the deterministic model math: linear
//! predictor, log-likelihood and log prior.

use serde::{Deserialize, Serialize};

use crate::data::ResponseTensor;
use crate::error::{Error, Result};
use crate::space::{self, MetricKind, MetricSpace};

/// Weights of the data model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub gamma: f64,
    pub sigma_alpha2: f64,
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= 0.0) {
            return Err(Error::Domain(format!("gamma must be non-negative, got {}", self.gamma)));
        }
        if !(self.sigma_alpha2 > 0.0) {
            return Err(Error::Domain(format!("sigma_alpha2 must be positive, got {}", self.sigma_alpha2)));
        }
        Ok(())
    }
}

/// Prior hyperparameters. Defaults are the values used throughout the
/// simulations and applications.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparams {
    pub sigma_beta: f64,
    pub sigma_gamma: f64,
    pub sigma_a: f64,
    pub sigma_b: f64,
    pub a_sigma_alpha: f64,
    pub b_sigma_alpha: f64,
    /// Negligible-progress ("spike") component of the prior on logit(lambda).
    pub mu0: f64,
    pub sigma0: f64,
    /// Non-negligible-progress ("slab") component.
    pub mu1: f64,
    pub sigma1: f64,
    pub a_pi: f64,
    pub b_pi: f64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            sigma_beta: 5.0,
            sigma_gamma: 2.0,
            sigma_a: 1.0,
            sigma_b: 1.0,
            a_sigma_alpha: 1.0,
            b_sigma_alpha: 1.0,
            mu0: -2.0,
            sigma0: 1.0,
            mu1: 0.0,
            sigma1: 2.0,
            a_pi: 1.0,
            b_pi: 1.0,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("sigma_beta", self.sigma_beta),
            ("sigma_gamma", self.sigma_gamma),
            ("sigma_a", self.sigma_a),
            ("sigma_b", self.sigma_b),
            ("a_sigma_alpha", self.a_sigma_alpha),
            ("b_sigma_alpha", self.b_sigma_alpha),
            ("sigma0", self.sigma0),
            ("sigma1", self.sigma1),
            ("a_pi", self.a_pi),
            ("b_pi", self.b_pi),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !self.mu0.is_finite() || !self.mu1.is_finite() {
            return Err(Error::Config("mixture means must be finite".into()));
        }
        Ok(())
    }

    /// (mean, sd) of the mixture component selected by `r`.
    #[inline]
    pub fn component(&self, r: u8) -> (f64, f64) {
        if r == 1 {
            (self.mu1, self.sigma1)
        } else {
            (self.mu0, self.sigma0)
        }
    }
}

/// Latent positions and progress variables.
///
/// Positions after the first time point are not stored: they are always
/// derived from `a1`, `lambda` and the target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentState {
    pub n: usize,
    pub p: usize,
    pub q: usize,
    pub times: usize,
    /// Initial positions, `n x q` row-major.
    pub a1: Vec<f64>,
    /// Item positions, `p x q` row-major.
    pub b: Vec<f64>,
    /// Rates for times `2..=T`, `n x (T-1)`.
    pub lambda: Vec<f64>,
    /// Mixture indicators, 1 = non-negligible progress.
    pub r: Vec<u8>,
    pub pi: Vec<f64>,
}

impl LatentState {
    #[inline]
    pub fn a1_of(&self, i: usize) -> &[f64] {
        &self.a1[i * self.q..(i + 1) * self.q]
    }

    #[inline]
    pub fn b_of(&self, j: usize) -> &[f64] {
        &self.b[j * self.q..(j + 1) * self.q]
    }

    /// Rates of individual `i` for times `2..=T`.
    #[inline]
    pub fn lambdas_of(&self, i: usize) -> &[f64] {
        let w = self.times - 1;
        &self.lambda[i * w..(i + 1) * w]
    }

    /// Index into `lambda`/`r`/`pi` for individual `i` at zero-based time `t >= 1`.
    #[inline]
    pub fn rate_index(&self, i: usize, t: usize) -> usize {
        i * (self.times - 1) + (t - 1)
    }

    pub fn target(&self) -> Vec<f64> {
        space::target(&self.b, self.q)
    }

    /// Positions of `i` at all times, `T x q` row-major.
    pub fn positions_of(&self, i: usize, target: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.times * self.q];
        fill_positions(self.a1_of(i), self.lambdas_of(i), target, &mut out);
        out
    }

    /// Positions of every individual, `n x T x q`.
    pub fn all_positions(&self) -> Vec<f64> {
        let t = self.target();
        let mut out = vec![0.0; self.n * self.times * self.q];
        for (i, chunk) in out.chunks_exact_mut(self.times * self.q).enumerate() {
            fill_positions(self.a1_of(i), self.lambdas_of(i), &t, chunk);
        }
        out
    }

    pub fn validate(&self, space: &MetricSpace) -> Result<()> {
        let w = self.times.saturating_sub(1);
        if self.q != space.q
            || self.a1.len() != self.n * self.q
            || self.b.len() != self.p * self.q
            || self.lambda.len() != self.n * w
            || self.r.len() != self.n * w
            || self.pi.len() != self.n * w
        {
            return Err(Error::Dimension("latent state arrays do not match its dimensions".into()));
        }
        let bad_point = self
            .a1
            .chunks_exact(self.q)
            .chain(self.b.chunks_exact(self.q))
            .any(|x| !space.admissible(x));
        if bad_point {
            return Err(Error::Domain("latent position outside the metric space".into()));
        }
        if self.lambda.iter().any(|l| !(0.0..=1.0).contains(l)) {
            return Err(Error::Domain("rate outside [0, 1]".into()));
        }
        Ok(())
    }
}

/// Writes positions at times `1..=T` into `out` (`T x q`).
#[inline]
pub fn fill_positions(a1: &[f64], lambdas: &[f64], target: &[f64], out: &mut [f64]) {
    let q = a1.len();
    out[..q].copy_from_slice(a1);
    for (t, &lam) in lambdas.iter().enumerate() {
        let (done, rest) = out.split_at_mut(q * (t + 1));
        space::step_towards(&done[q * t..], target, lam, &mut rest[..q]);
    }
}

#[inline]
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[inline]
pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// `log(1 + exp(x))` without overflow.
#[inline]
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Bernoulli log-mass of `y` under logit `eta`.
#[inline]
pub fn bernoulli_logit_lpmf(y: u8, eta: f64) -> f64 {
    y as f64 * eta - softplus(eta)
}

/// Distance entering the predictor of cell `(i, j, t)`: to item `j` at the
/// first time point, to the target afterwards. `t` is zero-based.
pub fn cell_distance(
    i: usize,
    j: usize,
    t: usize,
    state: &LatentState,
    target: &[f64],
    space: &MetricSpace,
) -> f64 {
    if t == 0 {
        space.dist(state.a1_of(i), state.b_of(j))
    } else {
        let pos = state.positions_of(i, target);
        space.dist(&pos[t * state.q..(t + 1) * state.q], target)
    }
}

/// Linear predictor of cell `(i, j, t)` (zero-based indices). The mean
/// response is `logistic` of the returned value.
pub fn linear_predictor(
    i: usize,
    j: usize,
    t: usize,
    params: &ModelParams,
    state: &LatentState,
    space: &MetricSpace,
) -> Result<f64> {
    if i >= state.n || j >= state.p || t >= state.times {
        return Err(Error::Dimension(format!("cell ({i}, {j}, {t}) out of bounds")));
    }
    let d = cell_distance(i, j, t, state, &state.target(), space);
    Ok(params.alpha[i] + params.beta[j] - params.gamma * d)
}

/// Cached distances for one latent state: `t1[i * p + j]` is the distance
/// of individual `i` to item `j` at time 1 and `to_target[i * T + t]` the
/// distance to the target at time `t` (entry `t = 0` unused).
#[derive(Debug, Clone)]
pub struct DistanceTable {
    pub t1: Vec<f64>,
    pub to_target: Vec<f64>,
    p: usize,
    times: usize,
}

impl DistanceTable {
    pub fn new(state: &LatentState, space: &MetricSpace) -> Self {
        let target = state.target();
        let mut t1 = vec![0.0; state.n * state.p];
        let mut to_target = vec![0.0; state.n * state.times];
        let mut pos = vec![0.0; state.times * state.q];
        for i in 0..state.n {
            let a = state.a1_of(i);
            for j in 0..state.p {
                t1[i * state.p + j] = space.dist(a, state.b_of(j));
            }
            fill_positions(a, state.lambdas_of(i), &target, &mut pos);
            for t in 1..state.times {
                to_target[i * state.times + t] =
                    space.dist(&pos[t * state.q..(t + 1) * state.q], &target);
            }
        }
        Self {
            t1,
            to_target,
            p: state.p,
            times: state.times,
        }
    }

    /// Recomputes every distance of individual `i`.
    pub fn refresh_individual(&mut self, i: usize, state: &LatentState, target: &[f64], space: &MetricSpace, scratch: &mut [f64]) {
        let a = state.a1_of(i);
        for j in 0..self.p {
            self.t1[i * self.p + j] = space.dist(a, state.b_of(j));
        }
        self.refresh_path(i, state, target, space, scratch);
    }

    /// Recomputes the distances to the target of individual `i` (`t >= 2`).
    pub fn refresh_path(&mut self, i: usize, state: &LatentState, target: &[f64], space: &MetricSpace, scratch: &mut [f64]) {
        let q = state.q;
        fill_positions(state.a1_of(i), state.lambdas_of(i), target, scratch);
        for t in 1..self.times {
            self.to_target[i * self.times + t] = space.dist(&scratch[t * q..(t + 1) * q], target);
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, t: usize) -> f64 {
        if t == 0 {
            self.t1[i * self.p + j]
        } else {
            self.to_target[i * self.times + t]
        }
    }
}

/// Sum of Bernoulli log-masses over the observed cells.
pub fn log_likelihood(
    data: &ResponseTensor,
    params: &ModelParams,
    state: &LatentState,
    space: &MetricSpace,
) -> f64 {
    let dist = DistanceTable::new(state, space);
    data.observed_cells()
        .map(|(i, j, t)| {
            let eta = params.alpha[i] + params.beta[j] - params.gamma * dist.get(i, j, t);
            bernoulli_logit_lpmf(data.value(i, j, t), eta)
        })
        .sum()
}

/// Per-observed-cell log-likelihood, in storage order.
pub fn pointwise_log_likelihood(
    data: &ResponseTensor,
    params: &ModelParams,
    state: &LatentState,
    space: &MetricSpace,
) -> Vec<f64> {
    let dist = DistanceTable::new(state, space);
    data.observed_cells()
        .map(|(i, j, t)| {
            let eta = params.alpha[i] + params.beta[j] - params.gamma * dist.get(i, j, t);
            bernoulli_logit_lpmf(data.value(i, j, t), eta)
        })
        .collect()
}

const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[inline]
pub fn normal_lpdf(x: f64, mu: f64, sd: f64) -> f64 {
    let z = (x - mu) / sd;
    -0.5 * (LN_2PI + z * z) - sd.ln()
}

/// Log prior density of a position under `H` (individuals) or `G` (items).
pub fn position_log_prior(x: &[f64], sd: f64, space: &MetricSpace) -> f64 {
    match space.kind {
        MetricKind::Euclidean => x.iter().map(|&v| normal_lpdf(v, 0.0, sd)).sum(),
        MetricKind::Poincare => {
            if space.admissible(x) {
                -(std::f64::consts::PI * space.rho * space.rho).ln()
            } else {
                f64::NEG_INFINITY
            }
        }
    }
}

/// Joint log prior. The prior on each rate is a density in logit
/// coordinates conditional on its mixture indicator.
pub fn log_prior(params: &ModelParams, state: &LatentState, hyper: &Hyperparams, space: &MetricSpace) -> f64 {
    use statrs::function::gamma::ln_gamma;
    let sa = params.sigma_alpha2.sqrt();
    let mut lp: f64 = params.alpha.iter().map(|&a| normal_lpdf(a, 0.0, sa)).sum();
    lp += params.beta.iter().map(|&b| normal_lpdf(b, 0.0, hyper.sigma_beta)).sum::<f64>();
    // inverse gamma
    let (a, b) = (hyper.a_sigma_alpha, hyper.b_sigma_alpha);
    lp += a * b.ln() - ln_gamma(a) - (a + 1.0) * params.sigma_alpha2.ln() - b / params.sigma_alpha2;
    // half-normal
    lp += std::f64::consts::LN_2 + normal_lpdf(params.gamma, 0.0, hyper.sigma_gamma);
    lp += state
        .a1
        .chunks_exact(state.q)
        .map(|x| position_log_prior(x, hyper.sigma_a, space))
        .sum::<f64>();
    lp += state
        .b
        .chunks_exact(state.q)
        .map(|x| position_log_prior(x, hyper.sigma_b, space))
        .sum::<f64>();
    let ln_beta_pi = ln_gamma(hyper.a_pi) + ln_gamma(hyper.b_pi) - ln_gamma(hyper.a_pi + hyper.b_pi);
    for k in 0..state.lambda.len() {
        let (mu, sd) = hyper.component(state.r[k]);
        lp += normal_lpdf(logit(state.lambda[k]), mu, sd);
        let pi = state.pi[k];
        lp += if state.r[k] == 1 { pi.ln() } else { (1.0 - pi).ln() };
        lp += (hyper.a_pi - 1.0) * pi.ln() + (hyper.b_pi - 1.0) * (1.0 - pi).ln() - ln_beta_pi;
    }
    lp
}

pub fn log_posterior(
    data: &ResponseTensor,
    params: &ModelParams,
    state: &LatentState,
    hyper: &Hyperparams,
    space: &MetricSpace,
) -> f64 {
    log_likelihood(data, params, state, space) + log_prior(params, state, hyper, space)
}
