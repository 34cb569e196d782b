//! Stable multivariate potential scale reduction factor with replicated
//! batch means, and the cutoff implied by a target effective sample size.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsrfResult {
    pub psrf: f64,
    pub cutoff: f64,
    pub n_params: usize,
    pub n_chains: usize,
    pub samples_per_chain: usize,
    pub batch_size: usize,
}

impl PsrfResult {
    pub fn converged(&self) -> bool {
        self.psrf <= self.cutoff
    }
}

/// Minimum multivariate effective sample size for `d` parameters at
/// confidence `1 - alpha` and relative precision `eps`.
pub fn min_ess(d: usize, alpha: f64, eps: f64) -> f64 {
    let p = d as f64;
    let log_const = (2.0 / p) * std::f64::consts::LN_2 + std::f64::consts::PI.ln()
        - (2.0 / p) * (p.ln() + ln_gamma(p / 2.0));
    let chi2 = ChiSquared::new(p).expect("positive degrees of freedom").inverse_cdf(1.0 - alpha);
    log_const.exp() * chi2 / (eps * eps)
}

/// PSRF cutoff `sqrt(1 + chains / minESS)` with `alpha = eps = 0.05`.
pub fn psrf_cutoff(d: usize, chains: usize) -> f64 {
    (1.0 + chains as f64 / min_ess(d, 0.05, 0.05)).sqrt()
}

/// `chains[k][s]` is the `d`-vector of chain `k` at draw `s`.
pub fn psrf_multivariate(chains: &[Vec<Vec<f64>>]) -> Result<PsrfResult> {
    let m = chains.len();
    if m < 2 {
        return Err(Error::InsufficientSamples(format!("need at least 2 chains, got {m}")));
    }
    let n = chains[0].len();
    if chains.iter().any(|c| c.len() != n) {
        return Err(Error::Dimension("chains differ in length".into()));
    }
    let b = (n as f64).sqrt().floor() as usize;
    if b == 0 || n < 2 * b {
        return Err(Error::InsufficientSamples(format!("{n} draws per chain is too few for batch means")));
    }
    let a = n / b;
    let d = chains[0].first().map_or(0, |v| v.len());
    if d == 0 || chains.iter().flatten().any(|v| v.len() != d) {
        return Err(Error::Dimension("draws differ in dimension".into()));
    }
    if m * (n - 1) < d || a * m <= d {
        return Err(Error::InsufficientSamples(format!(
            "{m} chains of {n} draws cannot estimate a {d}-dimensional covariance"
        )));
    }

    let chain_means: Vec<DVector<f64>> = chains
        .iter()
        .map(|c| {
            let mut mu = DVector::zeros(d);
            for v in c {
                mu += DVector::from_column_slice(v);
            }
            mu / n as f64
        })
        .collect();
    let grand = chain_means.iter().fold(DVector::zeros(d), |acc, x| acc + x) / m as f64;

    // pooled within-chain covariance
    let mut s = DMatrix::zeros(d, d);
    for (c, mu) in chains.iter().zip(&chain_means) {
        for v in c {
            let x = DVector::from_column_slice(v) - mu;
            s.ger(1.0, &x, &x, 1.0);
        }
    }
    s /= (m * (n - 1)) as f64;

    // replicated batch means around the grand mean
    let mut t = DMatrix::zeros(d, d);
    for c in chains {
        for k in 0..a {
            let mut bm = DVector::zeros(d);
            for v in &c[k * b..(k + 1) * b] {
                bm += DVector::from_column_slice(v);
            }
            let x = bm / b as f64 - &grand;
            t.ger(1.0, &x, &x, 1.0);
        }
    }
    t *= b as f64 / (a * m - 1) as f64;

    let log_det = |mat: DMatrix<f64>, what: &str| -> Result<f64> {
        let chol = mat
            .cholesky()
            .ok_or_else(|| Error::Degenerate(format!("{what} covariance is not positive definite")))?;
        Ok(2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>())
    };
    let ld_s = log_det(s, "within-chain")?;
    let ld_t = log_det(t, "batch-means")?;
    let ratio = ((ld_t - ld_s) / d as f64).exp();
    let nf = n as f64;
    let psrf = ((nf - 1.0) / nf + ratio / nf).sqrt();
    if !psrf.is_finite() {
        return Err(Error::Degenerate("PSRF is not finite".into()));
    }
    Ok(PsrfResult {
        psrf,
        cutoff: psrf_cutoff(d, m),
        n_params: d,
        n_chains: m,
        samples_per_chain: n,
        batch_size: b,
    })
}
