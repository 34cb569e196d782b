//! Misspecified group scenarios and replication studies over the latent
//! dimension.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::ResponseTensor;
use crate::diagnostics::waic;
use crate::error::{Error, Result};
use crate::mcmc::{derive_seed, run_chain, ChainConfig};
use crate::par::{self, Execution};
use crate::model::{logistic, DistanceTable, LatentState, ModelParams};
use crate::progress::{classify_progress, summarize_progress, GroupCount};
use crate::space::MetricSpace;
use crate::stats::{mean, quantiles};

/// Two time points of independent Bernoulli responses whose success
/// probability depends only on the time and, at time 2, on the group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupScenario {
    pub group_sizes: Vec<usize>,
    pub p: usize,
    pub t1_prob: f64,
    pub t2_probs: Vec<f64>,
    pub seed: u64,
}

impl GroupScenario {
    /// 3 x 100 individuals, 10 items, .2 at time 1 and .25/.5/.75 at time 2.
    pub fn n300(seed: u64) -> Self {
        Self {
            group_sizes: vec![100; 3],
            p: 10,
            t1_prob: 0.2,
            t2_probs: vec![0.25, 0.5, 0.75],
            seed,
        }
    }

    /// 4 x 150 individuals, 10 items, .2 at time 1 and .3/.5/.7/.9 at time 2.
    pub fn n600(seed: u64) -> Self {
        Self {
            group_sizes: vec![150; 4],
            p: 10,
            t1_prob: 0.2,
            t2_probs: vec![0.3, 0.5, 0.7, 0.9],
            seed,
        }
    }

    pub fn n(&self) -> usize {
        self.group_sizes.iter().sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.group_sizes.is_empty() || self.group_sizes.contains(&0) {
            return Err(Error::Config("group sizes must be positive".into()));
        }
        if self.group_sizes.len() != self.t2_probs.len() {
            return Err(Error::Config("one time-2 probability per group is required".into()));
        }
        if self.p == 0 {
            return Err(Error::Config("at least one item is required".into()));
        }
        let in_unit = |v: f64| v > 0.0 && v < 1.0;
        if !in_unit(self.t1_prob) || !self.t2_probs.iter().all(|&v| in_unit(v)) {
            return Err(Error::Config("probabilities must lie in (0, 1)".into()));
        }
        Ok(())
    }

    /// Group label of every individual, in order.
    pub fn labels(&self) -> Vec<usize> {
        self.group_sizes
            .iter()
            .enumerate()
            .flat_map(|(g, &k)| std::iter::repeat_n(g, k))
            .collect()
    }
}

pub fn generate_group_scenario(sc: &GroupScenario) -> Result<(ResponseTensor, Vec<usize>)> {
    sc.validate()?;
    let labels = sc.labels();
    let mut rng = ChaCha8Rng::seed_from_u64(sc.seed);
    let probs: Vec<[f64; 2]> = labels.iter().map(|&g| [sc.t1_prob, sc.t2_probs[g]]).collect();
    let data = ResponseTensor::from_fn(sc.n(), sc.p, 2, |i, _j, t| u8::from(rng.random::<f64>() < probs[i][t]))?;
    Ok((data, labels))
}

/// Fully observed responses drawn from the latent process model itself.
pub fn simulate_responses<R: Rng + ?Sized>(
    params: &ModelParams,
    state: &LatentState,
    space: &MetricSpace,
    rng: &mut R,
) -> Result<ResponseTensor> {
    params.validate()?;
    state.validate(space)?;
    let dist = DistanceTable::new(state, space);
    ResponseTensor::from_fn(state.n, state.p, state.times, |i, j, t| {
        let eta = params.alpha[i] + params.beta[j] - params.gamma * dist.get(i, j, t);
        u8::from(rng.random::<f64>() < logistic(eta))
    })
}

/// Outcome of fitting one latent dimension to one replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    pub replicate: usize,
    pub q: usize,
    pub waic: Option<f64>,
    /// Mean over each group of the posterior-median rates.
    pub group_mean_median_lambda: Vec<f64>,
    pub negligible: Vec<GroupCount>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionSummary {
    pub q: usize,
    pub waic_q10: Option<f64>,
    pub waic_median: Option<f64>,
    pub waic_q90: Option<f64>,
    /// Share of successful replicates in which this q has the smallest WAIC.
    pub minimizer_frequency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub scenario: GroupScenario,
    pub n_reps: usize,
    pub threshold: f64,
    pub dimensions: Vec<DimensionSummary>,
    pub fits: Vec<FitRecord>,
    /// Replicates with at least one failed fit.
    pub failed_replicates: Vec<usize>,
}

impl StudyReport {
    pub fn fit(&self, replicate: usize, q: usize) -> Option<&FitRecord> {
        self.fits.iter().find(|f| f.replicate == replicate && f.q == q)
    }

    /// Dimension with the smallest WAIC in each successful replicate.
    pub fn minimizers(&self) -> Vec<(usize, usize)> {
        (0..self.n_reps)
            .filter(|r| !self.failed_replicates.contains(r))
            .filter_map(|r| {
                self.fits
                    .iter()
                    .filter(|f| f.replicate == r)
                    .filter_map(|f| f.waic.map(|w| (f.q, w)))
                    .min_by(|a, b| a.1.total_cmp(&b.1))
                    .map(|(q, _)| (r, q))
            })
            .collect()
    }
}

/// Seed of the data set of replicate `rep`.
pub fn replicate_seed(study_seed: u64, rep: usize) -> u64 {
    derive_seed(study_seed, rep as u64)
}

fn fit_one(
    data: &ResponseTensor,
    labels: &[usize],
    n_groups: usize,
    cfg: &ChainConfig,
    threshold: f64,
) -> Result<(f64, Vec<f64>, Vec<GroupCount>)> {
    let samples = run_chain(data, cfg)?;
    let w = waic(&samples.loglik)?.waic;
    let summaries = summarize_progress(&samples)?;
    let mut by_group = vec![Vec::new(); n_groups];
    for s in summaries.iter().filter(|s| s.time == 2) {
        by_group[labels[s.individual]].push(s.median);
    }
    let means = by_group.iter().map(|v| mean(v)).collect();
    let class = classify_progress(
        &summaries.iter().copied().filter(|s| s.time == 2).collect::<Vec<_>>(),
        threshold,
        Some(labels),
    )?;
    Ok((w, means, class.groups))
}

/// Fits every `q` in `q_list` to `n_reps` generated data sets.
///
/// `cfg_for_q` supplies the chain configuration per dimension; its seed is
/// replaced by one derived from the replicate and dimension so that every
/// task is reproducible regardless of scheduling.
pub fn run_replications(
    sc: &GroupScenario,
    q_list: &[usize],
    cfg_for_q: impl Fn(usize) -> ChainConfig + Sync + Send,
    n_reps: usize,
    threshold: f64,
    exec: Execution,
) -> Result<StudyReport> {
    sc.validate()?;
    if q_list.is_empty() || n_reps == 0 {
        return Err(Error::Config("need at least one dimension and one replicate".into()));
    }
    let n_groups = sc.group_sizes.len();
    let tasks: Vec<(usize, usize)> = (0..n_reps).flat_map(|r| q_list.iter().map(move |&q| (r, q))).collect();
    let fits: Vec<FitRecord> = par::map_indexed(exec, tasks.len(), |k| {
        let (rep, q) = tasks[k];
        let data_seed = replicate_seed(sc.seed, rep);
        let outcome = generate_group_scenario(&GroupScenario {
            seed: data_seed,
            ..sc.clone()
        })
        .and_then(|(data, labels)| {
            let mut cfg = cfg_for_q(q);
            cfg.seed = derive_seed(data_seed, q as u64);
            // the study is already parallel across tasks
            cfg.execution = Execution::Sequential;
            fit_one(&data, &labels, n_groups, &cfg, threshold)
        });
        match outcome {
            Ok((w, means, counts)) => FitRecord {
                replicate: rep,
                q,
                waic: Some(w),
                group_mean_median_lambda: means,
                negligible: counts,
                error: None,
            },
            Err(e) => FitRecord {
                replicate: rep,
                q,
                waic: None,
                group_mean_median_lambda: Vec::new(),
                negligible: Vec::new(),
                error: Some(e.to_string()),
            },
        }
    });

    let mut failed_replicates: Vec<usize> = fits.iter().filter(|f| f.waic.is_none()).map(|f| f.replicate).collect();
    failed_replicates.dedup();
    let mut report = StudyReport {
        scenario: sc.clone(),
        n_reps,
        threshold,
        dimensions: Vec::new(),
        fits,
        failed_replicates,
    };
    let minimizers = report.minimizers();
    let successful = minimizers.len();
    report.dimensions = q_list
        .iter()
        .map(|&q| {
            let w: Vec<f64> = report.fits.iter().filter(|f| f.q == q).filter_map(|f| f.waic).collect();
            let qs = if w.is_empty() { vec![None; 3] } else { quantiles(&w, &[0.1, 0.5, 0.9]).into_iter().map(Some).collect() };
            let wins = minimizers.iter().filter(|m| m.1 == q).count();
            DimensionSummary {
                q,
                waic_q10: qs[0],
                waic_median: qs[1],
                waic_q90: qs[2],
                minimizer_frequency: if successful == 0 { 0.0 } else { wins as f64 / successful as f64 },
            }
        })
        .collect();
    Ok(report)
}
