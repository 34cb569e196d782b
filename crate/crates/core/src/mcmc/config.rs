use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Hyperparams;
use crate::par::Execution;
use crate::space::MetricSpace;

/// When the scale constraint on item positions is imposed.
///
/// `Reporting` samples the unconstrained model and rescales each retained
/// draw, which is exact for the model whose constrained parameters are the
/// image of the priors under the rescaling. `EverySweep` projects the chain
/// state after each sweep; the projection is not a Markov kernel that
/// preserves the posterior and inflates `gamma` in calibration runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScaleConstraint {
    /// Rescale the chain state at the end of every sweep.
    EverySweep,
    /// Leave the chain unconstrained and rescale retained samples only.
    #[default]
    Reporting,
    /// Never rescale.
    Off,
}

/// Starting values for a chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InitConfig {
    pub gamma: f64,
    pub sigma_alpha2: f64,
    pub lambda: f64,
    /// Standard deviation of the Gaussian around the origin used for
    /// initial Euclidean positions.
    pub position_sd: f64,
    /// Initial disk positions are uniform within this fraction of the radius.
    pub disk_margin: f64,
}

impl Default for InitConfig {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            sigma_alpha2: 1.0,
            lambda: 0.1,
            position_sd: 0.1,
            disk_margin: 0.9,
        }
    }
}

/// Switches for the individual sweep blocks; everything is on by default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Blocks {
    pub omega: bool,
    pub beta: bool,
    pub alpha: bool,
    pub sigma_alpha2: bool,
    pub gamma: bool,
    pub lambda: bool,
    pub a1: bool,
    pub b: bool,
    pub mixture: bool,
}

impl Default for Blocks {
    fn default() -> Self {
        Self {
            omega: true,
            beta: true,
            alpha: true,
            sigma_alpha2: true,
            gamma: true,
            lambda: true,
            a1: true,
            b: true,
            mixture: true,
        }
    }
}

impl Blocks {
    pub fn none() -> Self {
        Self {
            omega: false,
            beta: false,
            alpha: false,
            sigma_alpha2: false,
            gamma: false,
            lambda: false,
            a1: false,
            b: false,
            mixture: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub iterations: usize,
    pub burnin: usize,
    pub thin: usize,
    pub seed: u64,
    pub proposal_sd_a: f64,
    pub proposal_sd_b: f64,
    /// Random-walk scale on logit(lambda).
    pub proposal_sd_lambda: f64,
    /// Robbins-Monro tuning of the proposal scales during burn-in.
    pub adapt: bool,
    pub hyper: Hyperparams,
    pub space: MetricSpace,
    #[serde(default)]
    pub scale_constraint: ScaleConstraint,
    /// Pin gamma to a value instead of sampling it.
    #[serde(default)]
    pub fixed_gamma: Option<f64>,
    #[serde(default)]
    pub init: InitConfig,
    #[serde(default)]
    pub blocks: Blocks,
    /// How Pólya-Gamma draws within a sweep are executed.
    #[serde(default)]
    pub execution: Execution,
}

/// Target acceptance rate of the adaptive proposals.
pub const TARGET_ACCEPTANCE: f64 = 0.35;

impl ChainConfig {
    /// Chain lengths and proposal scales used for the latent dimension `q`
    /// in the n = 300 simulation study.
    pub fn simulation_defaults(q: usize) -> Self {
        let (iters, burn, sd_a, sd_b) = match q {
            1 => (45_000, 30_000, 1.7, 0.6),
            2 => (65_000, 50_000, 1.4, 0.8),
            3 => (85_000, 70_000, 1.0, 0.6),
            _ => (85_000, 70_000, 0.9, 0.3),
        };
        Self {
            iterations: iters,
            burnin: burn,
            thin: 1,
            seed: 1,
            proposal_sd_a: sd_a,
            proposal_sd_b: sd_b,
            proposal_sd_lambda: 5.0,
            adapt: false,
            hyper: Hyperparams::default(),
            space: MetricSpace::euclidean(q),
            scale_constraint: ScaleConstraint::default(),
            fixed_gamma: None,
            init: InitConfig::default(),
            blocks: Blocks::default(),
            execution: Execution::default(),
        }
    }

    /// Proposal scales for the n = 600 simulation study.
    pub fn large_simulation_defaults(q: usize) -> Self {
        let (sd_a, sd_b) = match q {
            1 => (1.8, 0.1),
            2 => (1.4, 0.3),
            3 => (0.8, 0.15),
            _ => (0.7, 0.08),
        };
        Self {
            proposal_sd_a: sd_a,
            proposal_sd_b: sd_b,
            ..Self::simulation_defaults(q)
        }
    }

    /// Divides iterations and burn-in by `factor`.
    pub fn shortened(mut self, factor: usize) -> Self {
        let f = factor.max(1);
        self.iterations /= f;
        self.burnin /= f;
        self
    }

    pub fn retained(&self) -> usize {
        (self.iterations - self.burnin) / self.thin
    }

    pub fn validate(&self) -> Result<()> {
        if self.burnin >= self.iterations {
            return Err(Error::Config(format!(
                "burn-in ({}) must be smaller than iterations ({})",
                self.burnin, self.iterations
            )));
        }
        if self.thin == 0 {
            return Err(Error::Config("thin must be at least 1".into()));
        }
        for (name, v) in [
            ("proposal_sd_a", self.proposal_sd_a),
            ("proposal_sd_b", self.proposal_sd_b),
            ("proposal_sd_lambda", self.proposal_sd_lambda),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if let Some(g) = self.fixed_gamma {
            if !(g >= 0.0 && g.is_finite()) {
                return Err(Error::Config(format!("fixed gamma must be non-negative, got {g}")));
            }
        }
        if !(0.0 < self.init.lambda && self.init.lambda < 1.0) {
            return Err(Error::Config("initial rate must lie in (0, 1)".into()));
        }
        self.hyper.validate()?;
        self.space.validate()
    }
}
