use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Watanabe-Akaike information criterion on the deviance scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaicResult {
    pub lppd: f64,
    pub elpd_waic: f64,
    pub p_waic: f64,
    pub waic: f64,
}

/// Per-observation `(lppd_n, p_waic_n)` contributions.
pub fn waic_pointwise(loglik: &[Vec<f64>]) -> Result<Vec<(f64, f64)>> {
    let s = loglik.len();
    if s < 2 {
        return Err(Error::InsufficientSamples(format!("WAIC needs at least 2 draws, got {s}")));
    }
    let n_obs = loglik[0].len();
    if loglik.iter().any(|row| row.len() != n_obs) {
        return Err(Error::Dimension("log-likelihood rows differ in length".into()));
    }
    if loglik.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Domain("non-finite log-likelihood entry".into()));
    }
    let ln_s = (s as f64).ln();
    Ok((0..n_obs)
        .map(|c| {
            let max = loglik.iter().map(|r| r[c]).fold(f64::NEG_INFINITY, f64::max);
            let sum_exp: f64 = loglik.iter().map(|r| (r[c] - max).exp()).sum();
            let lppd = max + sum_exp.ln() - ln_s;
            let mean = loglik.iter().map(|r| r[c]).sum::<f64>() / s as f64;
            let var = loglik.iter().map(|r| (r[c] - mean) * (r[c] - mean)).sum::<f64>() / (s as f64 - 1.0);
            (lppd, var)
        })
        .collect())
}

/// WAIC from an `S x N` matrix of per-draw, per-observation log-likelihoods.
pub fn waic(loglik: &[Vec<f64>]) -> Result<WaicResult> {
    let (lppd, p_waic) = waic_pointwise(loglik)?
        .into_iter()
        .fold((0.0, 0.0), |(a, b), (l, v)| (a + l, b + v));
    let elpd_waic = lppd - p_waic;
    Ok(WaicResult {
        lppd,
        elpd_waic,
        p_waic,
        waic: -2.0 * elpd_waic,
    })
}
