use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::ResponseTensor;
use crate::error::{Error, Result};
use crate::mcmc::PosteriorSamples;
use crate::model::{logistic, DistanceTable};
use crate::par::{self, Execution};
use crate::stats::{quantile_sorted, sorted};

/// Observed proportion of positive responses and its predictive interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PpcRow {
    pub individual: usize,
    pub time: usize,
    pub observed: f64,
    pub lo: f64,
    pub mid: f64,
    pub hi: f64,
}

impl PpcRow {
    pub fn covers(&self) -> bool {
        self.lo <= self.observed && self.observed <= self.hi
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PpcResult {
    /// One row per `(i, t)` with at least one observed cell.
    pub rows: Vec<PpcRow>,
    /// `draws[k][r]` is the simulated proportion for `rows[r]` in draw `k`.
    pub draws: Vec<Vec<f64>>,
}

impl PpcResult {
    pub fn coverage(&self) -> f64 {
        if self.rows.is_empty() {
            return f64::NAN;
        }
        self.rows.iter().filter(|r| r.covers()).count() as f64 / self.rows.len() as f64
    }
}

/// Simulates replicated responses on every observed cell from `n_draws`
/// retained samples (cycled when `n_draws` exceeds the retained count).
pub fn posterior_predictive<R: Rng + ?Sized>(
    data: &ResponseTensor,
    samples: &PosteriorSamples,
    n_draws: usize,
    rng: &mut R,
) -> Result<PpcResult> {
    posterior_predictive_with(data, samples, n_draws, rng, Execution::default())
}

pub fn posterior_predictive_with<R: Rng + ?Sized>(
    data: &ResponseTensor,
    samples: &PosteriorSamples,
    n_draws: usize,
    rng: &mut R,
    exec: Execution,
) -> Result<PpcResult> {
    if samples.is_empty() {
        return Err(Error::InsufficientSamples("no retained draws".into()));
    }
    if (samples.n, samples.p, samples.times) != (data.n(), data.p(), data.times()) {
        return Err(Error::Dimension("samples and data disagree in shape".into()));
    }
    let (n, p, times) = (data.n(), data.p(), data.times());
    let cells: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..times).map(move |t| (i, t)))
        .filter(|&(i, t)| data.proportion(i, t).is_some())
        .collect();
    let space = samples.space();
    let key: u64 = rng.random();

    let draws: Vec<Vec<f64>> = par::map_indexed(exec, n_draws, |k| {
        let draw = &samples.draws[k % samples.len()];
        let dist = DistanceTable::new(&draw.state, &space);
        let mut local = ChaCha8Rng::seed_from_u64(key);
        local.set_stream(k as u64);
        cells
            .iter()
            .map(|&(i, t)| {
                let (mut hits, mut total) = (0u32, 0u32);
                for j in 0..p {
                    if !data.is_observed(i, j, t) {
                        continue;
                    }
                    let eta = draw.params.alpha[i] + draw.params.beta[j] - draw.params.gamma * dist.get(i, j, t);
                    let u: f64 = local.random();
                    hits += u32::from(u < logistic(eta));
                    total += 1;
                }
                f64::from(hits) / f64::from(total)
            })
            .collect()
    });

    let rows = cells
        .iter()
        .enumerate()
        .map(|(r, &(i, t))| {
            let col = sorted(&draws.iter().map(|d| d[r]).collect::<Vec<_>>());
            PpcRow {
                individual: i,
                time: t + 1,
                observed: data.proportion(i, t).unwrap_or(f64::NAN),
                lo: quantile_sorted(&col, 0.025),
                mid: quantile_sorted(&col, 0.5),
                hi: quantile_sorted(&col, 0.975),
            }
        })
        .collect();
    Ok(PpcResult { rows, draws })
}
