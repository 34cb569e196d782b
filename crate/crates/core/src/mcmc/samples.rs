use serde::{Deserialize, Serialize};

use super::config::ChainConfig;
use super::sampler::{AcceptanceCounts, ProposalScales};
use crate::model::{logit, LatentState, ModelParams};
use crate::space::MetricSpace;

/// One retained iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Draw {
    pub iteration: usize,
    pub params: ModelParams,
    pub state: LatentState,
    pub log_posterior: f64,
}

/// Thinned output of one chain.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSamples {
    pub config: ChainConfig,
    pub n: usize,
    pub p: usize,
    pub times: usize,
    pub draws: Vec<Draw>,
    /// One row per draw, one entry per observed cell in storage order.
    pub loglik: Vec<Vec<f64>>,
    pub acceptance: AcceptanceCounts,
    pub proposal_scales: ProposalScales,
}

impl PosteriorSamples {
    pub fn new(config: ChainConfig, n: usize, p: usize, times: usize) -> Self {
        let proposal_scales = ProposalScales {
            a: config.proposal_sd_a,
            b: config.proposal_sd_b,
            lambda: config.proposal_sd_lambda,
        };
        Self {
            config,
            n,
            p,
            times,
            draws: Vec::new(),
            loglik: Vec::new(),
            acceptance: AcceptanceCounts::default(),
            proposal_scales,
        }
    }

    pub fn push(&mut self, draw: Draw, loglik: Vec<f64>) {
        self.draws.push(draw);
        self.loglik.push(loglik);
    }

    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn space(&self) -> MetricSpace {
        self.config.space
    }

    pub fn seed(&self) -> u64 {
        self.config.seed
    }

    /// Retained values of `lambda_{i,t}` (`t >= 1`, zero-based).
    pub fn lambda_chain(&self, i: usize, t: usize) -> Vec<f64> {
        self.draws
            .iter()
            .map(|d| d.state.lambda[d.state.rate_index(i, t)])
            .collect()
    }

    pub fn r_chain(&self, i: usize, t: usize) -> Vec<u8> {
        self.draws.iter().map(|d| d.state.r[d.state.rate_index(i, t)]).collect()
    }

    pub fn gamma_chain(&self) -> Vec<f64> {
        self.draws.iter().map(|d| d.params.gamma).collect()
    }

    /// Index of the draw with the highest log posterior density.
    pub fn map_index(&self) -> Option<usize> {
        self.draws
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.log_posterior.total_cmp(&b.1.log_posterior))
            .map(|(k, _)| k)
    }

    /// Vector monitored for convergence: alpha, beta, gamma, sigma_alpha^2
    /// and logit rates. Positions are left out since they are identified
    /// only up to rigid motions.
    pub fn monitored(&self, k: usize) -> Vec<f64> {
        let d = &self.draws[k];
        let mut v = Vec::with_capacity(self.n + self.p + 2 + d.state.lambda.len());
        v.extend_from_slice(&d.params.alpha);
        v.extend_from_slice(&d.params.beta);
        v.push(d.params.gamma);
        v.push(d.params.sigma_alpha2);
        v.extend(d.state.lambda.iter().map(|&l| logit(l)));
        v
    }

    /// Concatenates the draws of several chains fitted to the same data.
    /// Acceptance counters are summed; the configuration is the first chain's.
    pub fn pooled(chains: &[PosteriorSamples]) -> Option<PosteriorSamples> {
        let first = chains.first()?;
        if chains
            .iter()
            .any(|c| (c.n, c.p, c.times, c.space()) != (first.n, first.p, first.times, first.space()))
        {
            return None;
        }
        let mut out = PosteriorSamples::new(first.config.clone(), first.n, first.p, first.times);
        out.proposal_scales = first.proposal_scales;
        for c in chains {
            out.draws.extend(c.draws.iter().cloned());
            out.loglik.extend(c.loglik.iter().cloned());
            for (acc, add) in [
                (&mut out.acceptance.lambda, c.acceptance.lambda),
                (&mut out.acceptance.a1, c.acceptance.a1),
                (&mut out.acceptance.b, c.acceptance.b),
            ] {
                acc.accepted += add.accepted;
                acc.proposed += add.proposed;
            }
        }
        Some(out)
    }

    /// All monitored vectors, `draws x d`.
    pub fn monitored_matrix(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|k| self.monitored(k)).collect()
    }
}
