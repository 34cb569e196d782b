//! Rate-of-progress summaries, progress classification, kernel density
//! tables for the rates and aligned interaction maps.
//!
//! Time indices passed to these functions are zero-based (`t >= 1`, the
//! first time point has no rate); exported rows carry one-based times.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::alignment::{procrustes_fit, AlignOptions};
use crate::error::{Error, Result};
use crate::mcmc::PosteriorSamples;
use crate::model::LatentState;
use crate::space::MetricSpace;
use crate::stats::{mean, quantile_sorted, sorted};

/// Posterior summary of one rate of progress.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProgressSummary {
    pub individual: usize,
    pub time: usize,
    pub q10: f64,
    pub median: f64,
    pub q90: f64,
    pub q025: f64,
    pub q975: f64,
    /// Posterior probability of non-negligible progress.
    pub prob_progress: f64,
}

fn check_rate_index(samples: &PosteriorSamples, i: usize, t: usize) -> Result<()> {
    if samples.is_empty() {
        return Err(Error::InsufficientSamples("no retained draws".into()));
    }
    if i >= samples.n || t == 0 || t >= samples.times {
        return Err(Error::Dimension(format!("no rate for individual {i} at time index {t}")));
    }
    Ok(())
}

pub fn lambda_summary(samples: &PosteriorSamples, i: usize, t: usize) -> Result<ProgressSummary> {
    check_rate_index(samples, i, t)?;
    let chain = sorted(&samples.lambda_chain(i, t));
    let r = samples.r_chain(i, t);
    let ones = r.iter().filter(|&&v| v == 1).count();
    Ok(ProgressSummary {
        individual: i,
        time: t + 1,
        q10: quantile_sorted(&chain, 0.10),
        median: quantile_sorted(&chain, 0.5),
        q90: quantile_sorted(&chain, 0.90),
        q025: quantile_sorted(&chain, 0.025),
        q975: quantile_sorted(&chain, 0.975),
        prob_progress: ones as f64 / r.len() as f64,
    })
}

/// Summaries for every individual and every time after the first.
pub fn summarize_progress(samples: &PosteriorSamples) -> Result<Vec<ProgressSummary>> {
    let mut out = Vec::with_capacity(samples.n * samples.times.saturating_sub(1));
    for i in 0..samples.n {
        for t in 1..samples.times {
            out.push(lambda_summary(samples, i, t)?);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupCount {
    pub group: usize,
    pub progress: usize,
    pub negligible: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub threshold: f64,
    /// Parallel to the input summaries.
    pub progress: Vec<bool>,
    pub groups: Vec<GroupCount>,
}

/// A summary counts as progress when `prob_progress >= threshold`.
/// `groups[i]` labels individual `i`; without labels everyone is group 0.
pub fn classify_progress(
    summaries: &[ProgressSummary],
    threshold: f64,
    groups: Option<&[usize]>,
) -> Result<Classification> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::Config(format!("threshold {threshold} outside [0, 1]")));
    }
    let label = |i: usize| -> Result<usize> {
        match groups {
            None => Ok(0),
            Some(g) => g
                .get(i)
                .copied()
                .ok_or_else(|| Error::Dimension(format!("no group label for individual {i}"))),
        }
    };
    let progress: Vec<bool> = summaries.iter().map(|s| s.prob_progress >= threshold).collect();
    let mut counts: Vec<GroupCount> = Vec::new();
    for (s, &flag) in summaries.iter().zip(&progress) {
        let g = label(s.individual)?;
        let entry = match counts.iter_mut().find(|c| c.group == g) {
            Some(c) => c,
            None => {
                counts.push(GroupCount { group: g, progress: 0, negligible: 0 });
                counts.last_mut().expect("just pushed")
            }
        };
        if flag {
            entry.progress += 1;
        } else {
            entry.negligible += 1;
        }
    }
    counts.sort_by_key(|c| c.group);
    Ok(Classification {
        threshold,
        progress,
        groups: counts,
    })
}

pub const DENSITY_GRID: usize = 512;
const MIN_BANDWIDTH: f64 = 0.005;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityCurve {
    pub individual: usize,
    pub time: usize,
    pub bandwidth: f64,
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
}

/// Trapezoid-rule integral of `y` on an evenly spaced grid with step `h`.
pub fn trapezoid(y: &[f64], h: f64) -> f64 {
    if y.len() < 2 {
        return 0.0;
    }
    h * (y.iter().sum::<f64>() - 0.5 * (y[0] + y[y.len() - 1]))
}

/// Silverman's rule of thumb, floored so point masses stay resolvable.
pub fn silverman_bandwidth(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let s = sorted(x);
    let sd = if x.len() > 1 { crate::stats::variance(x).sqrt() } else { 0.0 };
    let iqr = (quantile_sorted(&s, 0.75) - quantile_sorted(&s, 0.25)) / 1.34;
    let spread = if iqr > 0.0 { sd.min(iqr) } else { sd };
    (0.9 * spread * n.powf(-0.2)).max(MIN_BANDWIDTH)
}

/// Gaussian kernel density of `x` on [0, 1], renormalized to unit mass.
pub fn kde_unit_interval(x: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
    let h = silverman_bandwidth(x);
    let step = 1.0 / (DENSITY_GRID - 1) as f64;
    let grid: Vec<f64> = (0..DENSITY_GRID).map(|k| k as f64 * step).collect();
    let norm = 1.0 / (x.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt());
    let mut density: Vec<f64> = grid
        .iter()
        .map(|&g| {
            norm * x
                .iter()
                .map(|&v| {
                    let z = (g - v) / h;
                    (-0.5 * z * z).exp()
                })
                .sum::<f64>()
        })
        .collect();
    let mass = trapezoid(&density, step);
    if mass > 0.0 {
        density.iter_mut().for_each(|d| *d /= mass);
    }
    (h, grid, density)
}

/// Density tables for the requested `(individual, time index)` pairs.
pub fn lambda_density_export(samples: &PosteriorSamples, ids: &[(usize, usize)]) -> Result<Vec<DensityCurve>> {
    ids.iter()
        .map(|&(i, t)| {
            check_rate_index(samples, i, t)?;
            let (bandwidth, grid, density) = kde_unit_interval(&samples.lambda_chain(i, t));
            Ok(DensityCurve {
                individual: i,
                time: t + 1,
                bandwidth,
                grid,
                density,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntityKind {
    Individual,
    Item,
    Target,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapRow {
    pub kind: EntityKind,
    /// Individual or item index; 0 for the target.
    pub id: usize,
    /// One-based time for individuals, `None` otherwise.
    pub time: Option<usize>,
    pub coords: Vec<f64>,
}

/// Which draw serves as the alignment reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MapReference {
    /// The retained draw with the highest log posterior.
    #[default]
    MaxPosterior,
    Draw(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct InteractionMap {
    pub q: usize,
    pub rows: Vec<MapRow>,
}

/// Every entity of one draw stacked as `[a_{i,t} (i-major), b_j, target]`.
fn stacked_points(state: &LatentState) -> Vec<f64> {
    let mut pts = state.all_positions();
    pts.extend_from_slice(&state.b);
    pts.extend(state.target());
    pts
}

/// Puts a configuration into a frame that does not depend on any rigid
/// motion applied to it: centred on the target (Euclidean) and rotated
/// onto its principal axes, each oriented by the sign of its third moment.
fn canonical_frame(points: &[f64], q: usize, space: &MetricSpace) -> Vec<f64> {
    let m = points.len() / q;
    let center = if space.is_euclidean() {
        points[(m - 1) * q..].to_vec()
    } else {
        vec![0.0; q]
    };
    let x = DMatrix::from_fn(m, q, |r, c| points[r * q + c] - center[c]);
    let eig = (x.transpose() * &x).symmetric_eigen();
    let mut order: Vec<usize> = (0..q).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut v = DMatrix::from_fn(q, q, |r, c| eig.eigenvectors[(r, order[c])]);
    let y = &x * &v;
    for c in 0..q {
        let skew: f64 = y.column(c).iter().map(|u| u * u * u).sum();
        let sign = if skew.abs() > 1e-12 {
            skew.signum()
        } else {
            y.column(c).iter().copied().find(|u| u.abs() > 1e-12).map_or(1.0, f64::signum)
        };
        if sign < 0.0 {
            v.column_mut(c).neg_mut();
        }
    }
    let y = x * v;
    (0..m).flat_map(|r| (0..q).map(move |c| (r, c))).map(|(r, c)| y[(r, c)]).collect()
}

/// Coordinate-wise posterior medians of the Procrustes-aligned positions of
/// every individual at every time, every item and the target.
pub fn export_interaction_map(samples: &PosteriorSamples, reference: MapReference) -> Result<InteractionMap> {
    if samples.is_empty() {
        return Err(Error::InsufficientSamples("no retained draws".into()));
    }
    let space = samples.space();
    let q = space.q;
    if q > 3 {
        return Err(Error::Unsupported(format!("interaction maps need q <= 3, got {q}")));
    }
    let ref_index = match reference {
        MapReference::MaxPosterior => samples
            .draws
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.log_posterior.total_cmp(&b.1.log_posterior))
            .map(|(k, _)| k)
            .expect("non-empty"),
        MapReference::Draw(k) if k < samples.len() => k,
        MapReference::Draw(k) => {
            return Err(Error::Dimension(format!("reference draw {k} of {}", samples.len())));
        }
    };
    let reference = canonical_frame(&stacked_points(&samples.draws[ref_index].state), q, &space);
    let opts = AlignOptions::for_space(&space);
    let aligned: Vec<Vec<f64>> = samples
        .draws
        .iter()
        .map(|d| {
            let pts = stacked_points(&d.state);
            Ok(procrustes_fit(&pts, &reference, q, opts)?.apply(&pts))
        })
        .collect::<Result<_>>()?;

    let (n, p, times) = (samples.n, samples.p, samples.times);
    let median_of = |k: usize| -> Vec<f64> {
        (0..q)
            .map(|c| {
                let col = sorted(&aligned.iter().map(|a| a[k * q + c]).collect::<Vec<_>>());
                quantile_sorted(&col, 0.5)
            })
            .collect()
    };
    let mut rows = Vec::with_capacity(n * times + p + 1);
    for i in 0..n {
        for t in 0..times {
            rows.push(MapRow {
                kind: EntityKind::Individual,
                id: i,
                time: Some(t + 1),
                coords: median_of(i * times + t),
            });
        }
    }
    for j in 0..p {
        rows.push(MapRow {
            kind: EntityKind::Item,
            id: j,
            time: None,
            coords: median_of(n * times + j),
        });
    }
    rows.push(MapRow {
        kind: EntityKind::Target,
        id: 0,
        time: None,
        coords: median_of(n * times + p),
    });
    Ok(InteractionMap { q, rows })
}

/// Posterior mean of the progress indicator; identical to
/// `lambda_summary(..).prob_progress`.
pub fn prob_progress(samples: &PosteriorSamples, i: usize, t: usize) -> Result<f64> {
    check_rate_index(samples, i, t)?;
    Ok(mean(&samples.r_chain(i, t).iter().map(|&v| f64::from(v)).collect::<Vec<_>>()))
}
