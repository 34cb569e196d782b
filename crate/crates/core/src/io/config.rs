//! Flat key-value run configuration (TOML).
//!
//! ```toml
//! model = "latent-process"
//! metric = "euclidean"
//! dim = 2
//! iterations = 6500
//! burnin = 5000
//! chains = 2
//! seed = 7
//! input = "responses.csv"
//! out = "fit"
//! ```
//!
//! Unset chain settings fall back to the per-dimension simulation defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mcmc::{ChainConfig, ScaleConstraint};
use crate::model::Hyperparams;
use crate::par::Execution;
use crate::space::{MetricKind, MetricSpace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    #[default]
    LatentProcess,
    Andersen,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelKind,
    pub metric: MetricKind,
    pub dim: usize,
    pub radius: f64,
    pub chains: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub burnin: Option<usize>,
    pub thin: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub proposal_sd_a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub proposal_sd_b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub proposal_sd_lambda: Option<f64>,
    pub adapt: bool,
    pub scale_constraint: ScaleConstraint,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixed_gamma: Option<f64>,
    pub execution: Execution,
    /// Posterior probability above which an individual counts as progressing.
    pub threshold: f64,
    pub sigma_beta: f64,
    pub sigma_gamma: f64,
    pub sigma_a: f64,
    pub sigma_b: f64,
    pub a_sigma_alpha: f64,
    pub b_sigma_alpha: f64,
    pub mu0: f64,
    pub sigma0: f64,
    pub mu1: f64,
    pub sigma1: f64,
    pub a_pi: f64,
    pub b_pi: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let h = Hyperparams::default();
        Self {
            model: ModelKind::default(),
            metric: MetricKind::Euclidean,
            dim: 2,
            radius: 1.0,
            chains: 2,
            seed: 1,
            iterations: None,
            burnin: None,
            thin: 1,
            proposal_sd_a: None,
            proposal_sd_b: None,
            proposal_sd_lambda: None,
            adapt: false,
            scale_constraint: ScaleConstraint::default(),
            fixed_gamma: None,
            execution: Execution::default(),
            threshold: 0.5,
            sigma_beta: h.sigma_beta,
            sigma_gamma: h.sigma_gamma,
            sigma_a: h.sigma_a,
            sigma_b: h.sigma_b,
            a_sigma_alpha: h.a_sigma_alpha,
            b_sigma_alpha: h.b_sigma_alpha,
            mu0: h.mu0,
            sigma0: h.sigma0,
            mu1: h.mu1,
            sigma1: h.sigma1,
            a_pi: h.a_pi,
            b_pi: h.b_pi,
            input: None,
            out: None,
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn hyper(&self) -> Hyperparams {
        Hyperparams {
            sigma_beta: self.sigma_beta,
            sigma_gamma: self.sigma_gamma,
            sigma_a: self.sigma_a,
            sigma_b: self.sigma_b,
            a_sigma_alpha: self.a_sigma_alpha,
            b_sigma_alpha: self.b_sigma_alpha,
            mu0: self.mu0,
            sigma0: self.sigma0,
            mu1: self.mu1,
            sigma1: self.sigma1,
            a_pi: self.a_pi,
            b_pi: self.b_pi,
        }
    }

    pub fn space(&self) -> MetricSpace {
        match self.metric {
            MetricKind::Euclidean => MetricSpace::euclidean(self.dim),
            MetricKind::Poincare => MetricSpace {
                kind: MetricKind::Poincare,
                q: self.dim,
                rho: self.radius,
            },
        }
    }

    pub fn chain_config(&self) -> Result<ChainConfig> {
        let base = ChainConfig::simulation_defaults(self.dim.max(1));
        let cfg = ChainConfig {
            iterations: self.iterations.unwrap_or(base.iterations),
            burnin: self.burnin.unwrap_or(base.burnin),
            thin: self.thin,
            seed: self.seed,
            proposal_sd_a: self.proposal_sd_a.unwrap_or(base.proposal_sd_a),
            proposal_sd_b: self.proposal_sd_b.unwrap_or(base.proposal_sd_b),
            proposal_sd_lambda: self.proposal_sd_lambda.unwrap_or(base.proposal_sd_lambda),
            adapt: self.adapt,
            hyper: self.hyper(),
            space: self.space(),
            scale_constraint: self.scale_constraint,
            fixed_gamma: self.fixed_gamma,
            execution: self.execution,
            ..base
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.chains == 0 {
            return Err(Error::Config("chains must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::Config(format!("threshold {} outside [0, 1]", self.threshold)));
        }
        if let Some(p) = &self.input {
            if !p.exists() {
                return Err(Error::Config(format!("input {} does not exist", p.display())));
            }
        }
        self.chain_config().map(|_| ())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_dimension() {
        let c = RunConfig::from_toml_str("dim = 3\niterations = 100\nburnin = 50\n").unwrap();
        let cc = c.chain_config().unwrap();
        assert_eq!(cc.proposal_sd_a, 1.0);
        assert_eq!((cc.iterations, cc.burnin), (100, 50));
        assert_eq!(cc.space, MetricSpace::euclidean(3));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_toml_str("dims = 3\n").is_err());
    }

    #[test]
    fn echo_round_trips() {
        let mut c = RunConfig::default();
        c.metric = MetricKind::Poincare;
        c.radius = 2.5;
        c.fixed_gamma = Some(0.0);
        c.seed = u64::MAX / 3;
        let back = RunConfig::from_toml_str(&c.to_toml_string().unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn disk_needs_two_dims() {
        let c = RunConfig::from_toml_str("metric = \"poincare\"\ndim = 3\n").unwrap();
        assert!(c.validate().is_err());
    }
}
