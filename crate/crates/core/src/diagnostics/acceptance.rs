use serde::{Deserialize, Serialize};

use crate::mcmc::{BlockCount, PosteriorSamples};

/// Acceptance rates this far outside the `(0.3, 0.4)` band are flagged.
const BAND: (f64, f64) = (0.3, 0.4);
const SLACK: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockRate {
    pub accepted: u64,
    pub proposed: u64,
    /// `None` when the block made no proposals.
    pub rate: Option<f64>,
    pub flagged: bool,
}

impl From<BlockCount> for BlockRate {
    fn from(c: BlockCount) -> Self {
        let rate = c.rate();
        let flagged = rate.is_some_and(|r| r < BAND.0 - SLACK || r > BAND.1 + SLACK);
        Self {
            accepted: c.accepted,
            proposed: c.proposed,
            rate,
            flagged,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceReport {
    pub lambda: BlockRate,
    pub a1: BlockRate,
    pub b: BlockRate,
}

pub fn acceptance_report(samples: &PosteriorSamples) -> AcceptanceReport {
    let c = samples.acceptance;
    AcceptanceReport {
        lambda: c.lambda.into(),
        a1: c.a1.into(),
        b: c.b.into(),
    }
}
