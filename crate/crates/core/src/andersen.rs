//! Andersen's longitudinal Rasch model, `logit P(Y = 1) = alpha_{i,t} + beta_j`,
//! fitted with the same Pólya-Gamma Gibbs updates as the latent process
//! model (with the distance term removed), and its reading as a rate of
//! progress.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::ResponseTensor;
use crate::error::{Error, Result};
use crate::mcmc::draws;
use crate::model::{bernoulli_logit_lpmf, Hyperparams};
use crate::par::{self, Execution};
use crate::pg::sample_pg1;

/// `alpha[i * T + t]` is the ability of individual `i` at time `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AndersenParams {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub sigma_alpha2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AndersenConfig {
    pub iterations: usize,
    pub burnin: usize,
    pub thin: usize,
    pub seed: u64,
    pub hyper: Hyperparams,
    pub init_sigma_alpha2: f64,
    #[serde(default)]
    pub execution: Execution,
}

impl Default for AndersenConfig {
    fn default() -> Self {
        Self {
            iterations: 5_000,
            burnin: 2_000,
            thin: 1,
            seed: 1,
            hyper: Hyperparams::default(),
            init_sigma_alpha2: 1.0,
            execution: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AndersenSamples {
    pub n: usize,
    pub p: usize,
    pub times: usize,
    pub draws: Vec<AndersenParams>,
    /// Per-draw log-likelihood of every observed cell in storage order.
    pub loglik: Vec<Vec<f64>>,
}

impl AndersenSamples {
    pub fn alpha_chain(&self, i: usize, t: usize) -> Vec<f64> {
        self.draws.iter().map(|d| d.alpha[i * self.times + t]).collect()
    }
}

/// Gibbs sampler for Andersen's model. Requires no more than the data
/// shape; an all-unobserved tensor samples the prior.
pub fn fit_andersen(data: &ResponseTensor, cfg: &AndersenConfig) -> Result<AndersenSamples> {
    if cfg.burnin >= cfg.iterations || cfg.thin == 0 {
        return Err(Error::Config("need burnin < iterations and thin >= 1".into()));
    }
    if !(cfg.init_sigma_alpha2 > 0.0) {
        return Err(Error::Config("initial ability variance must be positive".into()));
    }
    cfg.hyper.validate()?;
    let (n, p, times) = (data.n(), data.p(), data.times());
    let h = cfg.hyper;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut par = AndersenParams {
        alpha: vec![0.0; n * times],
        beta: vec![0.0; p],
        sigma_alpha2: cfg.init_sigma_alpha2,
    };
    let mut omega = vec![0.0; n * times * p];
    let mut out = AndersenSamples {
        n,
        p,
        times,
        draws: Vec::new(),
        loglik: Vec::new(),
    };
    let kappa = |c: usize| f64::from(data.values()[c]) - 0.5;

    for it in 1..=cfg.iterations {
        let key = rng.next_u64();
        let current = &par;
        let rows: Vec<Result<Vec<f64>>> = par::map_indexed(cfg.execution, n, |i| {
            let mut local = ChaCha8Rng::seed_from_u64(key);
            local.set_stream(i as u64);
            let mut row = vec![0.0; times * p];
            for t in 0..times {
                for j in 0..p {
                    if data.is_observed(i, j, t) {
                        let eta = current.alpha[i * times + t] + current.beta[j];
                        row[t * p + j] = sample_pg1(eta, &mut local)?.omega();
                    }
                }
            }
            Ok(row)
        });
        for (i, row) in rows.into_iter().enumerate() {
            omega[i * times * p..(i + 1) * times * p].copy_from_slice(&row?);
        }

        for j in 0..p {
            let (mut sw, mut sk, mut swa) = (0.0, 0.0, 0.0);
            for i in 0..n {
                for t in 0..times {
                    let c = data.index(i, j, t);
                    if data.mask()[c] {
                        sw += omega[c];
                        sk += kappa(c);
                        swa += omega[c] * par.alpha[i * times + t];
                    }
                }
            }
            let prec = 1.0 / (h.sigma_beta * h.sigma_beta) + sw;
            par.beta[j] = draws::normal((sk - swa) / prec, prec.recip().sqrt(), &mut rng);
        }
        for i in 0..n {
            for t in 0..times {
                let (mut sw, mut sk, mut swb) = (0.0, 0.0, 0.0);
                for j in 0..p {
                    let c = data.index(i, j, t);
                    if data.mask()[c] {
                        sw += omega[c];
                        sk += kappa(c);
                        swb += omega[c] * par.beta[j];
                    }
                }
                let prec = 1.0 / par.sigma_alpha2 + sw;
                par.alpha[i * times + t] = draws::normal((sk - swb) / prec, prec.recip().sqrt(), &mut rng);
            }
        }
        let ss: f64 = par.alpha.iter().map(|a| a * a).sum();
        par.sigma_alpha2 = draws::inverse_gamma(
            h.a_sigma_alpha + 0.5 * (n * times) as f64,
            h.b_sigma_alpha + 0.5 * ss,
            &mut rng,
        );
        if par.alpha.iter().chain(&par.beta).any(|v| !v.is_finite()) || !par.sigma_alpha2.is_finite() {
            return Err(Error::NonFinite {
                block: "andersen",
                iteration: it,
            });
        }

        if it > cfg.burnin && (it - cfg.burnin) % cfg.thin == 0 {
            let ll = data
                .observed_cells()
                .map(|(i, j, t)| bernoulli_logit_lpmf(data.value(i, j, t), par.alpha[i * times + t] + par.beta[j]))
                .collect();
            out.draws.push(par.clone());
            out.loglik.push(ll);
        }
    }
    Ok(out)
}

/// Progress implied by two abilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum AndersenProgress {
    /// `1 - alpha2 / alpha1` with `alpha1 < 0` and `alpha1 <= alpha2 <= 0`.
    InRegime(f64),
    /// The abilities do not map onto a rate in [0, 1]; carries `alpha2 / alpha1`.
    OutOfRegime(f64),
    /// `alpha1 = 0`.
    Undefined,
}

pub fn andersen_progress(alpha1: f64, alpha2: f64) -> AndersenProgress {
    if alpha1 == 0.0 {
        return AndersenProgress::Undefined;
    }
    let ratio = alpha2 / alpha1;
    if alpha1 < 0.0 && alpha1 <= alpha2 && alpha2 <= 0.0 {
        AndersenProgress::InRegime(1.0 - ratio)
    } else {
        AndersenProgress::OutOfRegime(ratio)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn progress_identities() {
        assert_eq!(andersen_progress(-2.0, -1.0), AndersenProgress::InRegime(0.5));
        assert_eq!(andersen_progress(-2.0, -2.0), AndersenProgress::InRegime(0.0));
        assert_eq!(andersen_progress(0.0, 1.0), AndersenProgress::Undefined);
        assert_eq!(andersen_progress(-2.0, 0.0), AndersenProgress::InRegime(1.0));
        assert_eq!(andersen_progress(-1.0, 1.0), AndersenProgress::OutOfRegime(-1.0));
        assert_eq!(andersen_progress(2.0, 1.0), AndersenProgress::OutOfRegime(0.5));
    }

    #[test]
    fn progress_is_scale_free() {
        for c in [0.1, 3.0, 17.0] {
            assert_eq!(andersen_progress(-2.0 * c, -0.5 * c), AndersenProgress::InRegime(0.75));
        }
    }

    #[test]
    fn seeded_runs_repeat() {
        let data = ResponseTensor::from_fn(6, 4, 2, |i, j, t| ((i + j + t) % 2) as u8).unwrap();
        let cfg = AndersenConfig {
            iterations: 60,
            burnin: 10,
            ..AndersenConfig::default()
        };
        let a = fit_andersen(&data, &cfg).unwrap();
        let b = fit_andersen(&data, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.draws.len(), 50);
    }
}
