//! Metropolis-within-Gibbs sampler for the latent process model.
//!
//! One sweep cycles through the blocks in a fixed order:
//!
//! 1. Pólya-Gamma auxiliaries `omega` for every observed cell
//! 2. item weights `beta`, individual weights `alpha`, `sigma_alpha^2`
//!    and the distance weight `gamma` (conjugate, given `omega`)
//! 3. random-walk Metropolis on logit rates, initial positions and item
//!    positions, scored with the exact Bernoulli likelihood
//! 4. mixture indicators and mixing proportions
//! 5. the scale constraint on the item positions
//!
//! Positions after the first time point are never stored; distances to the
//! target are cached in a [`DistanceTable`] and refreshed after each
//! accepted move that touches them.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{ChainConfig, ScaleConstraint, TARGET_ACCEPTANCE};
use super::draws;
use super::samples::{Draw, PosteriorSamples};
use crate::alignment::enforce_scale;
use crate::data::ResponseTensor;
use crate::error::{Error, Result};
use crate::model::{
    self, bernoulli_logit_lpmf, fill_positions, logistic, logit, normal_lpdf, position_log_prior, DistanceTable,
    LatentState, ModelParams,
};
use crate::par::{self, Execution};
use crate::pg::sample_pg1;
use crate::space::MetricKind;

const ADAPT_BATCH: usize = 50;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockCount {
    pub accepted: u64,
    pub proposed: u64,
}

impl BlockCount {
    fn record(&mut self, accepted: bool) {
        self.proposed += 1;
        self.accepted += accepted as u64;
    }

    pub fn rate(&self) -> Option<f64> {
        (self.proposed > 0).then(|| self.accepted as f64 / self.proposed as f64)
    }
}

/// Acceptance counters of the three Metropolis blocks.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AcceptanceCounts {
    pub lambda: BlockCount,
    pub a1: BlockCount,
    pub b: BlockCount,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProposalScales {
    pub a: f64,
    pub b: f64,
    pub lambda: f64,
}

/// State of one Markov chain over a fixed data set.
pub struct Sampler<'d> {
    data: &'d ResponseTensor,
    cfg: ChainConfig,
    state: LatentState,
    params: ModelParams,
    omega: Vec<f64>,
    dist: DistanceTable,
    target: Vec<f64>,
    rng: ChaCha8Rng,
    scales: ProposalScales,
    counts: AcceptanceCounts,
    batch: AcceptanceCounts,
    sweeps: usize,
    scratch: Vec<f64>,
    scratch_d: Vec<f64>,
}

/// Default starting values: zero weights, small random positions, equal
/// mixture odds.
pub fn initial_values<R: Rng + ?Sized>(
    data: &ResponseTensor,
    cfg: &ChainConfig,
    rng: &mut R,
) -> (ModelParams, LatentState) {
    let (n, p, times, q) = (data.n(), data.p(), data.times(), cfg.space.q);
    let w = times - 1;
    let init = &cfg.init;
    let point = |rng: &mut R| -> Vec<f64> {
        match cfg.space.kind {
            MetricKind::Euclidean => (0..q).map(|_| draws::normal(0.0, init.position_sd, rng)).collect(),
            MetricKind::Poincare => {
                let radius = init.disk_margin * cfg.space.rho * rng.random::<f64>().sqrt();
                let angle = 2.0 * std::f64::consts::PI * rng.random::<f64>();
                vec![radius * angle.cos(), radius * angle.sin()]
            }
        }
    };
    let a1: Vec<f64> = (0..n).flat_map(|_| point(rng)).collect();
    let b: Vec<f64> = (0..p).flat_map(|_| point(rng)).collect();
    let r: Vec<u8> = (0..n * w).map(|_| rng.random_bool(0.5) as u8).collect();
    let params = ModelParams {
        alpha: vec![0.0; n],
        beta: vec![0.0; p],
        gamma: cfg.fixed_gamma.unwrap_or(init.gamma),
        sigma_alpha2: init.sigma_alpha2,
    };
    let state = LatentState {
        n,
        p,
        q,
        times,
        a1,
        b,
        lambda: vec![init.lambda; n * w],
        r,
        pi: vec![0.5; n * w],
    };
    (params, state)
}

impl<'d> Sampler<'d> {
    /// Starts a chain from the default initial values drawn with the chain seed.
    pub fn new(data: &'d ResponseTensor, cfg: ChainConfig) -> Result<Self> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let (params, state) = initial_values(data, &cfg, &mut rng);
        Self::build(data, cfg, params, state, rng)
    }

    /// Starts a chain from explicit values.
    pub fn with_state(
        data: &'d ResponseTensor,
        cfg: ChainConfig,
        params: ModelParams,
        state: LatentState,
    ) -> Result<Self> {
        cfg.validate()?;
        let rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        Self::build(data, cfg, params, state, rng)
    }

    fn build(
        data: &'d ResponseTensor,
        cfg: ChainConfig,
        mut params: ModelParams,
        state: LatentState,
        rng: ChaCha8Rng,
    ) -> Result<Self> {
        if state.n != data.n() || state.p != data.p() || state.times != data.times() {
            return Err(Error::Dimension("latent state does not match the data".into()));
        }
        state.validate(&cfg.space)?;
        if params.alpha.len() != data.n() || params.beta.len() != data.p() {
            return Err(Error::Dimension("parameters do not match the data".into()));
        }
        if let Some(g) = cfg.fixed_gamma {
            params.gamma = g;
        }
        params.validate()?;
        let dist = DistanceTable::new(&state, &cfg.space);
        let target = state.target();
        let scales = ProposalScales {
            a: cfg.proposal_sd_a,
            b: cfg.proposal_sd_b,
            lambda: cfg.proposal_sd_lambda,
        };
        let len = data.n() * data.p() * data.times();
        let scratch = vec![0.0; data.times() * cfg.space.q];
        Ok(Self {
            data,
            state,
            params,
            omega: vec![0.0; len],
            dist,
            target,
            rng,
            scales,
            counts: AcceptanceCounts::default(),
            batch: AcceptanceCounts::default(),
            sweeps: 0,
            scratch,
            scratch_d: Vec::new(),
            cfg,
        })
    }

    pub fn state(&self) -> &LatentState {
        &self.state
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn config(&self) -> &ChainConfig {
        &self.cfg
    }

    pub fn config_mut(&mut self) -> &mut ChainConfig {
        &mut self.cfg
    }

    /// Current Pólya-Gamma field, one entry per cell in storage order
    /// (zero for unobserved cells).
    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn acceptance(&self) -> AcceptanceCounts {
        self.counts
    }

    pub fn proposal_scales(&self) -> ProposalScales {
        self.scales
    }

    pub fn distances(&self) -> &DistanceTable {
        &self.dist
    }

    pub fn rng_mut(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    /// Replaces the latent state, e.g. to probe a block in isolation.
    pub fn set_state(&mut self, state: LatentState) -> Result<()> {
        state.validate(&self.cfg.space)?;
        self.state = state;
        self.refresh_all();
        Ok(())
    }

    pub fn set_params(&mut self, params: ModelParams) -> Result<()> {
        params.validate()?;
        self.params = params;
        Ok(())
    }

    pub fn set_omega(&mut self, omega: Vec<f64>) -> Result<()> {
        if omega.len() != self.omega.len() {
            return Err(Error::Dimension("omega field has the wrong length".into()));
        }
        self.omega = omega;
        Ok(())
    }

    fn refresh_all(&mut self) {
        self.target = self.state.target();
        self.dist = DistanceTable::new(&self.state, &self.cfg.space);
    }

    #[inline]
    fn eta(&self, i: usize, j: usize, d: f64) -> f64 {
        self.params.alpha[i] + self.params.beta[j] - self.params.gamma * d
    }

    /// Log-likelihood of the observed cells of individual `i` at time `t`
    /// (`t >= 1`), all sharing the distance `d` to the target.
    #[inline]
    fn block_ll(&self, i: usize, t: usize, d: f64) -> f64 {
        let range = self.data.block(i, t);
        let mask = &self.data.mask()[range.clone()];
        let y = &self.data.values()[range];
        let base = self.params.alpha[i] - self.params.gamma * d;
        let mut ll = 0.0;
        for j in 0..self.data.p() {
            if mask[j] {
                ll += bernoulli_logit_lpmf(y[j], base + self.params.beta[j]);
            }
        }
        ll
    }

    #[inline]
    fn cell_ll(&self, i: usize, j: usize, t: usize, d: f64) -> f64 {
        bernoulli_logit_lpmf(self.data.value(i, j, t), self.eta(i, j, d))
    }

    /// Draws `omega ~ PG(1, eta)` for every observed cell.
    ///
    /// Each individual uses its own random stream derived from one draw of
    /// the chain generator, so the result does not depend on whether the
    /// individuals are processed in order or in parallel.
    pub fn update_omega(&mut self) -> Result<()> {
        let key = self.rng.next_u64();
        let (p, times) = (self.data.p(), self.data.times());
        let this = &*self;
        let rows: Vec<Result<Vec<f64>>> = par::map_indexed(this.cfg.execution, this.data.n(), |i| {
            let mut rng = ChaCha8Rng::seed_from_u64(key);
            rng.set_stream(i as u64);
            let mut out = vec![0.0; p * times];
            for t in 0..times {
                for j in 0..p {
                    if this.data.is_observed(i, j, t) {
                        let eta = this.eta(i, j, this.dist.get(i, j, t));
                        out[t * p + j] = sample_pg1(eta, &mut rng)?.omega();
                    }
                }
            }
            Ok(out)
        });
        for (i, row) in rows.into_iter().enumerate() {
            let row = row?;
            self.omega[i * p * times..(i + 1) * p * times].copy_from_slice(&row);
        }
        Ok(())
    }

    /// Conjugate draw of `beta_j` given `omega`.
    pub fn update_beta(&mut self, j: usize) {
        let h = self.cfg.hyper;
        let (mut sw, mut sk, mut swa, mut swd) = (0.0, 0.0, 0.0, 0.0);
        for i in 0..self.data.n() {
            for t in 0..self.data.times() {
                let c = self.data.index(i, j, t);
                if self.data.mask()[c] {
                    let w = self.omega[c];
                    sw += w;
                    sk += self.data.values()[c] as f64 - 0.5;
                    swa += w * self.params.alpha[i];
                    swd += w * self.dist.get(i, j, t);
                }
            }
        }
        let prec = 1.0 / (h.sigma_beta * h.sigma_beta) + sw;
        let mean = (sk - swa + self.params.gamma * swd) / prec;
        self.params.beta[j] = draws::normal(mean, prec.recip().sqrt(), &mut self.rng);
    }

    /// Conjugate draw of `alpha_i` given `omega` and `sigma_alpha^2`.
    pub fn update_alpha(&mut self, i: usize) {
        let (mut sw, mut sk, mut swb, mut swd) = (0.0, 0.0, 0.0, 0.0);
        for t in 0..self.data.times() {
            for j in 0..self.data.p() {
                let c = self.data.index(i, j, t);
                if self.data.mask()[c] {
                    let w = self.omega[c];
                    sw += w;
                    sk += self.data.values()[c] as f64 - 0.5;
                    swb += w * self.params.beta[j];
                    swd += w * self.dist.get(i, j, t);
                }
            }
        }
        let prec = 1.0 / self.params.sigma_alpha2 + sw;
        let mean = (sk - swb + self.params.gamma * swd) / prec;
        self.params.alpha[i] = draws::normal(mean, prec.recip().sqrt(), &mut self.rng);
    }

    pub fn update_sigma_alpha2(&mut self) {
        let h = self.cfg.hyper;
        let ss: f64 = self.params.alpha.iter().map(|a| a * a).sum();
        let shape = h.a_sigma_alpha + 0.5 * self.data.n() as f64;
        let scale = h.b_sigma_alpha + 0.5 * ss;
        self.params.sigma_alpha2 = draws::inverse_gamma(shape, scale, &mut self.rng);
    }

    /// Draw of `gamma` from its normal full conditional truncated to
    /// `[0, inf)`. Skipped when gamma is pinned.
    pub fn update_gamma(&mut self) {
        if let Some(g) = self.cfg.fixed_gamma {
            self.params.gamma = g;
            return;
        }
        let h = self.cfg.hyper;
        let (mut swdd, mut num) = (0.0, 0.0);
        for (i, j, t) in self.data.observed_cells() {
            let c = self.data.index(i, j, t);
            let w = self.omega[c];
            let d = self.dist.get(i, j, t);
            let k = self.data.values()[c] as f64 - 0.5;
            swdd += w * d * d;
            num += w * d * (self.params.alpha[i] + self.params.beta[j]) - k * d;
        }
        let prec = 1.0 / (h.sigma_gamma * h.sigma_gamma) + swdd;
        assert!(prec > 0.0, "gamma full conditional has non-positive precision");
        self.params.gamma = draws::truncated_normal_nonneg(num / prec, prec.recip().sqrt(), &mut self.rng);
    }

    /// Random-walk Metropolis step on `logit(lambda_{i,t})`, `t >= 1`
    /// zero-based. Returns whether the proposal was accepted.
    pub fn update_lambda_mh(&mut self, i: usize, t: usize) -> bool {
        let step = draws::normal(0.0, self.scales.lambda, &mut self.rng);
        self.lambda_move(i, t, step)
    }

    /// Metropolis step for `lambda_{i,t}` with a given logit increment.
    pub fn lambda_move(&mut self, i: usize, t: usize, step: f64) -> bool {
        let times = self.data.times();
        let q = self.state.q;
        let k = self.state.rate_index(i, t);
        let current = self.state.lambda[k];
        let x = logit(current);
        let x_new = x + step;
        let proposed = logistic(x_new);
        let (mu, sd) = self.cfg.hyper.component(self.state.r[k]);
        let mut log_ratio = normal_lpdf(logit(proposed), mu, sd) - normal_lpdf(x, mu, sd);

        if log_ratio > f64::NEG_INFINITY {
            self.state.lambda[k] = proposed;
            let mut pos = std::mem::take(&mut self.scratch);
            fill_positions(self.state.a1_of(i), self.state.lambdas_of(i), &self.target, &mut pos);
            self.state.lambda[k] = current;
            let mut new_d = std::mem::take(&mut self.scratch_d);
            new_d.clear();
            new_d.resize(times, 0.0);
            for s in t..times {
                new_d[s] = self.cfg.space.dist(&pos[s * q..(s + 1) * q], &self.target);
                log_ratio += self.block_ll(i, s, new_d[s]) - self.block_ll(i, s, self.dist.to_target[i * times + s]);
            }
            let accept = accept(log_ratio, &mut self.rng);
            if accept {
                self.state.lambda[k] = proposed;
                self.dist.to_target[i * times + t..(i + 1) * times].copy_from_slice(&new_d[t..]);
            }
            self.scratch = pos;
            self.scratch_d = new_d;
            self.counts.lambda.record(accept);
            self.batch.lambda.record(accept);
            accept
        } else {
            // keep the uniform stream aligned with the finite-ratio branch
            let _ = self.rng.random::<f64>();
            self.counts.lambda.record(false);
            self.batch.lambda.record(false);
            false
        }
    }

    /// Random-walk Metropolis step on the initial position of `i`.
    pub fn update_a1_mh(&mut self, i: usize) -> bool {
        let q = self.state.q;
        let sd = self.scales.a;
        let step: Vec<f64> = (0..q).map(|_| draws::normal(0.0, sd, &mut self.rng)).collect();
        self.a1_move(i, &step)
    }

    /// Metropolis step for `a_{i,1}` with a given increment.
    pub fn a1_move(&mut self, i: usize, step: &[f64]) -> bool {
        let (p, times, q) = (self.data.p(), self.data.times(), self.state.q);
        let space = self.cfg.space;
        let current: Vec<f64> = self.state.a1_of(i).to_vec();
        let proposed: Vec<f64> = current.iter().zip(step).map(|(a, s)| a + s).collect();
        let u: f64 = self.rng.random();
        if !space.admissible(&proposed) {
            self.counts.a1.record(false);
            self.batch.a1.record(false);
            return false;
        }
        let sa = self.cfg.hyper.sigma_a;
        let mut log_ratio = position_log_prior(&proposed, sa, &space) - position_log_prior(&current, sa, &space);
        let mut new_t1 = vec![0.0; p];
        for j in 0..p {
            new_t1[j] = space.dist(&proposed, self.state.b_of(j));
            if self.data.is_observed(i, j, 0) {
                log_ratio += self.cell_ll(i, j, 0, new_t1[j]) - self.cell_ll(i, j, 0, self.dist.t1[i * p + j]);
            }
        }
        let mut pos = std::mem::take(&mut self.scratch);
        fill_positions(&proposed, self.state.lambdas_of(i), &self.target, &mut pos);
        let mut new_d = vec![0.0; times];
        for s in 1..times {
            new_d[s] = space.dist(&pos[s * q..(s + 1) * q], &self.target);
            log_ratio += self.block_ll(i, s, new_d[s]) - self.block_ll(i, s, self.dist.to_target[i * times + s]);
        }
        self.scratch = pos;
        let accepted = u.ln() < log_ratio;
        if accepted {
            self.state.a1[i * q..(i + 1) * q].copy_from_slice(&proposed);
            self.dist.t1[i * p..(i + 1) * p].copy_from_slice(&new_t1);
            self.dist.to_target[i * times + 1..(i + 1) * times].copy_from_slice(&new_d[1..]);
        }
        self.counts.a1.record(accepted);
        self.batch.a1.record(accepted);
        accepted
    }

    /// Random-walk Metropolis step on item position `b_j`. Moving one item
    /// moves the target, so every later-time cell is rescored.
    pub fn update_b_mh(&mut self, j: usize) -> bool {
        let q = self.state.q;
        let sd = self.scales.b;
        let step: Vec<f64> = (0..q).map(|_| draws::normal(0.0, sd, &mut self.rng)).collect();
        self.b_move(j, &step)
    }

    /// Metropolis step for `b_j` with a given increment.
    pub fn b_move(&mut self, j: usize, step: &[f64]) -> bool {
        let (n, p, times, q) = (self.data.n(), self.data.p(), self.data.times(), self.state.q);
        let space = self.cfg.space;
        let current: Vec<f64> = self.state.b_of(j).to_vec();
        let proposed: Vec<f64> = current.iter().zip(step).map(|(a, s)| a + s).collect();
        let u: f64 = self.rng.random();
        if !space.admissible(&proposed) {
            self.counts.b.record(false);
            self.batch.b.record(false);
            return false;
        }
        let new_target: Vec<f64> = self
            .target
            .iter()
            .zip(step)
            .map(|(t, s)| t + s / p as f64)
            .collect();
        let sb = self.cfg.hyper.sigma_b;
        let mut log_ratio = position_log_prior(&proposed, sb, &space) - position_log_prior(&current, sb, &space);
        let mut new_col = vec![0.0; n];
        let mut new_to_target = vec![0.0; n * times];
        let mut pos = std::mem::take(&mut self.scratch);
        for i in 0..n {
            new_col[i] = space.dist(self.state.a1_of(i), &proposed);
            if self.data.is_observed(i, j, 0) {
                log_ratio += self.cell_ll(i, j, 0, new_col[i]) - self.cell_ll(i, j, 0, self.dist.t1[i * p + j]);
            }
            if times > 1 {
                fill_positions(self.state.a1_of(i), self.state.lambdas_of(i), &new_target, &mut pos);
                for s in 1..times {
                    let d = space.dist(&pos[s * q..(s + 1) * q], &new_target);
                    new_to_target[i * times + s] = d;
                    log_ratio += self.block_ll(i, s, d) - self.block_ll(i, s, self.dist.to_target[i * times + s]);
                }
            }
        }
        self.scratch = pos;
        let accepted = u.ln() < log_ratio;
        if accepted {
            self.state.b[j * q..(j + 1) * q].copy_from_slice(&proposed);
            self.target = new_target;
            for i in 0..n {
                self.dist.t1[i * p + j] = new_col[i];
            }
            self.dist.to_target = new_to_target;
        }
        self.counts.b.record(accepted);
        self.batch.b.record(accepted);
        accepted
    }

    /// Probability that `r_{i,t} = 1` given the current rate and proportion.
    pub fn prob_slab(&self, i: usize, t: usize) -> f64 {
        let k = self.state.rate_index(i, t);
        slab_probability(logit(self.state.lambda[k]), self.state.pi[k], &self.cfg.hyper)
    }

    /// Gibbs draw of the mixture indicator, then of the mixing proportion.
    pub fn update_pi_and_r(&mut self, i: usize, t: usize) {
        let h = self.cfg.hyper;
        let k = self.state.rate_index(i, t);
        let prob = self.prob_slab(i, t);
        let r = self.rng.random_bool(prob) as u8;
        self.state.r[k] = r;
        self.state.pi[k] = draws::beta(h.a_pi + r as f64, h.b_pi + 1.0 - r as f64, &mut self.rng);
    }

    /// One full cycle over all blocks.
    pub fn sweep(&mut self) -> Result<()> {
        let blocks = self.cfg.blocks;
        let (n, p, times) = (self.data.n(), self.data.p(), self.data.times());
        if blocks.omega {
            self.update_omega()?;
        }
        if blocks.beta {
            (0..p).for_each(|j| self.update_beta(j));
            self.check_finite("beta", self.params.beta.iter().all(|v| v.is_finite()))?;
        }
        if blocks.alpha {
            (0..n).for_each(|i| self.update_alpha(i));
            self.check_finite("alpha", self.params.alpha.iter().all(|v| v.is_finite()))?;
        }
        if blocks.sigma_alpha2 {
            self.update_sigma_alpha2();
            let s = self.params.sigma_alpha2;
            self.check_finite("sigma_alpha2", s.is_finite() && s > 0.0)?;
        }
        if blocks.gamma {
            self.update_gamma();
            self.check_finite("gamma", self.params.gamma.is_finite())?;
        }
        if blocks.lambda {
            for i in 0..n {
                for t in 1..times {
                    self.update_lambda_mh(i, t);
                }
            }
        }
        if blocks.a1 {
            (0..n).for_each(|i| {
                self.update_a1_mh(i);
            });
        }
        if blocks.b {
            (0..p).for_each(|j| {
                self.update_b_mh(j);
            });
        }
        if blocks.mixture {
            for i in 0..n {
                for t in 1..times {
                    self.update_pi_and_r(i, t);
                }
            }
        }
        if self.cfg.scale_constraint == ScaleConstraint::EverySweep && self.cfg.space.is_euclidean() && blocks.b {
            enforce_scale(&mut self.state, &mut self.params, &self.cfg.space)?;
            self.refresh_all();
        }
        self.sweeps += 1;
        Ok(())
    }

    fn check_finite(&self, block: &'static str, ok: bool) -> Result<()> {
        if ok {
            Ok(())
        } else {
            Err(Error::NonFinite {
                block,
                iteration: self.sweeps,
            })
        }
    }

    /// Robbins-Monro update of the proposal scales from the acceptance
    /// rates of the last batch.
    fn adapt(&mut self) {
        let k = (self.sweeps / ADAPT_BATCH) as f64;
        let gain = (1.0 / k.sqrt()).min(0.5);
        let tune = |sd: &mut f64, c: &BlockCount| {
            if let Some(rate) = c.rate() {
                *sd *= (gain * (rate - TARGET_ACCEPTANCE)).exp();
            }
        };
        tune(&mut self.scales.lambda, &self.batch.lambda);
        tune(&mut self.scales.a, &self.batch.a1);
        tune(&mut self.scales.b, &self.batch.b);
        self.batch = AcceptanceCounts::default();
    }

    /// Current values packaged as a retained draw.
    pub fn snapshot(&self) -> Result<(Draw, Vec<f64>)> {
        let (mut params, mut state) = (self.params.clone(), self.state.clone());
        if self.cfg.scale_constraint == ScaleConstraint::Reporting {
            enforce_scale(&mut state, &mut params, &self.cfg.space)?;
        }
        let loglik = model::pointwise_log_likelihood(self.data, &params, &state, &self.cfg.space);
        if let Some(k) = loglik.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!("non-finite log-likelihood at observed cell {k}")));
        }
        let log_posterior = loglik.iter().sum::<f64>() + model::log_prior(&params, &state, &self.cfg.hyper, &self.cfg.space);
        Ok((
            Draw {
                iteration: self.sweeps,
                params,
                state,
                log_posterior,
            },
            loglik,
        ))
    }

    /// Runs the configured number of sweeps and collects retained draws.
    pub fn run(mut self) -> Result<PosteriorSamples> {
        let cfg = self.cfg.clone();
        let mut samples = PosteriorSamples::new(cfg.clone(), self.data.n(), self.data.p(), self.data.times());
        for it in 1..=cfg.iterations {
            self.sweep()?;
            if it <= cfg.burnin {
                if cfg.adapt && it % ADAPT_BATCH == 0 {
                    self.adapt();
                }
                continue;
            }
            if (it - cfg.burnin) % cfg.thin == 0 {
                let (draw, ll) = self.snapshot()?;
                samples.push(draw, ll);
            }
        }
        samples.acceptance = self.counts;
        samples.proposal_scales = self.scales;
        Ok(samples)
    }
}

/// `P(r = 1 | logit(lambda) = x, pi)` under the two-component mixture.
pub fn slab_probability(x: f64, pi: f64, h: &crate::model::Hyperparams) -> f64 {
    let l0 = normal_lpdf(x, h.mu0, h.sigma0);
    let l1 = normal_lpdf(x, h.mu1, h.sigma1);
    logistic(pi.ln() - (1.0 - pi).ln() + l1 - l0)
}

#[inline]
fn accept<R: Rng + ?Sized>(log_ratio: f64, rng: &mut R) -> bool {
    let u: f64 = rng.random();
    u.ln() < log_ratio
}

/// Runs one chain.
pub fn run_chain(data: &ResponseTensor, cfg: &ChainConfig) -> Result<PosteriorSamples> {
    Sampler::new(data, cfg.clone())?.run()
}

/// splitmix64 mixing of a base seed with a task index.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent chains over the same data, seeded from `cfg.seed`.
pub fn run_chains(data: &ResponseTensor, cfg: &ChainConfig, n_chains: usize, exec: Execution) -> Result<Vec<PosteriorSamples>> {
    par::map_indexed(exec, n_chains, |k| {
        let mut c = cfg.clone();
        c.seed = derive_seed(cfg.seed, k as u64);
        run_chain(data, &c)
    })
    .into_iter()
    .collect()
}
