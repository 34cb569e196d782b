//! Gibbs blocks against full conditionals evaluated on a brute-force grid.

mod common;

use latent_progress::mcmc::{ChainConfig, Sampler};
use latent_progress::stats::{mean, variance};
use latent_progress::{MetricSpace, ResponseTensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DRAWS: usize = 20_000;

/// Mean and variance of the density `exp(logf)` on `[lo, hi]`.
fn grid_moments(lo: f64, hi: f64, logf: impl Fn(f64) -> f64) -> (f64, f64) {
    let m = 200_001;
    let h = (hi - lo) / (m - 1) as f64;
    let xs: Vec<f64> = (0..m).map(|k| lo + k as f64 * h).collect();
    let lf: Vec<f64> = xs.iter().map(|&x| logf(x)).collect();
    let top = lf.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = lf.iter().map(|v| (v - top).exp()).collect();
    let z: f64 = w.iter().sum();
    let mu = xs.iter().zip(&w).map(|(x, w)| x * w).sum::<f64>() / z;
    let var = xs.iter().zip(&w).map(|(x, w)| (x - mu).powi(2) * w).sum::<f64>() / z;
    (mu, var)
}

fn assert_moments(draws: &[f64], (mu, var): (f64, f64), what: &str) {
    let m = mean(draws);
    let v = variance(draws);
    let se = (var / draws.len() as f64).sqrt();
    assert!((m - mu).abs() < 4.5 * se, "{what}: mean {m} vs grid {mu} (se {se})");
    assert!((v / var - 1.0).abs() < 0.06, "{what}: variance {v} vs grid {var}");
}

struct Fixture {
    data: ResponseTensor,
    cfg: ChainConfig,
    omega: Vec<f64>,
}

fn fixture(seed: u64) -> (Fixture, latent_progress::ModelParams, latent_progress::LatentState) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n, p, times) = (6, 5, 3);
    let space = MetricSpace::euclidean(2);
    let (params, state) = common::random_model(n, p, times, &space, &mut rng);
    let data = ResponseTensor::from_fn(n, p, times, |_, _, _| u8::from(rng.random_bool(0.5))).unwrap();
    let omega = (0..n * p * times).map(|_| rng.random_range(0.05..0.6)).collect();
    let mut cfg = ChainConfig::simulation_defaults(2);
    cfg.seed = seed;
    (Fixture { data, cfg, omega }, params, state)
}

fn sampler<'d>(
    f: &'d Fixture,
    params: &latent_progress::ModelParams,
    state: &latent_progress::LatentState,
) -> Sampler<'d> {
    let mut s = Sampler::with_state(&f.data, f.cfg.clone(), params.clone(), state.clone()).unwrap();
    s.set_omega(f.omega.clone()).unwrap();
    s
}

/// Augmented log-likelihood of the cells selected by `keep` with `eta`
/// built from the supplied parameters.
fn augmented(
    f: &Fixture,
    d: &latent_progress::model::DistanceTable,
    alpha: &dyn Fn(usize) -> f64,
    beta: &dyn Fn(usize) -> f64,
    gamma: f64,
    keep: &dyn Fn(usize, usize) -> bool,
) -> f64 {
    let mut s = 0.0;
    for (i, j, t) in f.data.observed_cells() {
        if !keep(i, j) {
            continue;
        }
        let c = f.data.index(i, j, t);
        let eta = alpha(i) + beta(j) - gamma * d.get(i, j, t);
        let k = f.data.value(i, j, t) as f64 - 0.5;
        s += k * eta - 0.5 * f.omega[c] * eta * eta;
    }
    s
}

#[test]
fn beta_block_matches_grid() {
    let (f, params, state) = fixture(11);
    let j = 2;
    let mut s = sampler(&f, &params, &state);
    let d = s.distances().clone();
    let sb = f.cfg.hyper.sigma_beta;
    let oracle = grid_moments(-15.0, 15.0, |x| {
        -0.5 * x * x / (sb * sb)
            + augmented(&f, &d, &|i| params.alpha[i], &|_| x, params.gamma, &|_, jj| jj == j)
    });
    let draws: Vec<f64> = (0..DRAWS)
        .map(|_| {
            s.update_beta(j);
            s.params().beta[j]
        })
        .collect();
    assert_moments(&draws, oracle, "beta");
}

#[test]
fn alpha_block_matches_grid() {
    let (f, params, state) = fixture(12);
    let i = 4;
    let mut s = sampler(&f, &params, &state);
    let d = s.distances().clone();
    let s2 = params.sigma_alpha2;
    let oracle = grid_moments(-15.0, 15.0, |x| {
        -0.5 * x * x / s2 + augmented(&f, &d, &|_| x, &|j| params.beta[j], params.gamma, &|ii, _| ii == i)
    });
    let draws: Vec<f64> = (0..DRAWS)
        .map(|_| {
            s.update_alpha(i);
            s.params().alpha[i]
        })
        .collect();
    assert_moments(&draws, oracle, "alpha");
}

#[test]
fn gamma_block_matches_truncated_grid() {
    let (f, params, state) = fixture(13);
    let mut s = sampler(&f, &params, &state);
    let d = s.distances().clone();
    let sg = f.cfg.hyper.sigma_gamma;
    let oracle = grid_moments(0.0, 12.0, |x| {
        -0.5 * x * x / (sg * sg)
            + augmented(&f, &d, &|i| params.alpha[i], &|j| params.beta[j], x, &|_, _| true)
    });
    let draws: Vec<f64> = (0..DRAWS)
        .map(|_| {
            s.update_gamma();
            s.params().gamma
        })
        .collect();
    assert!(draws.iter().all(|&g| g >= 0.0));
    assert_moments(&draws, oracle, "gamma");
}

#[test]
fn gamma_block_with_strong_negative_pull_stays_nonnegative() {
    // every response is 1, which pushes gamma towards negative values
    let (mut f, params, state) = fixture(14);
    f.data = ResponseTensor::from_fn(6, 5, 3, |_, _, _| 1).unwrap();
    let mut s = sampler(&f, &params, &state);
    let d = s.distances().clone();
    let sg = f.cfg.hyper.sigma_gamma;
    let oracle = grid_moments(0.0, 6.0, |x| {
        -0.5 * x * x / (sg * sg)
            + augmented(&f, &d, &|i| params.alpha[i], &|j| params.beta[j], x, &|_, _| true)
    });
    let draws: Vec<f64> = (0..DRAWS)
        .map(|_| {
            s.update_gamma();
            s.params().gamma
        })
        .collect();
    assert!(draws.iter().all(|&g| g >= 0.0));
    assert_moments(&draws, oracle, "gamma (truncated)");
}

#[test]
fn sigma_alpha2_block_matches_grid() {
    let (f, params, state) = fixture(15);
    let mut s = sampler(&f, &params, &state);
    let h = f.cfg.hyper;
    let n = params.alpha.len() as f64;
    let ss: f64 = params.alpha.iter().map(|a| a * a).sum();
    let oracle = grid_moments(1e-4, 200.0, |v| {
        -(h.a_sigma_alpha + 1.0) * v.ln() - h.b_sigma_alpha / v - 0.5 * n * v.ln() - 0.5 * ss / v
    });
    let draws: Vec<f64> = (0..DRAWS)
        .map(|_| {
            s.update_sigma_alpha2();
            s.params().sigma_alpha2
        })
        .collect();
    assert_moments(&draws, oracle, "sigma_alpha2");
}

#[test]
fn fixed_gamma_is_never_moved() {
    let (mut f, params, state) = fixture(16);
    f.cfg.fixed_gamma = Some(0.0);
    let mut s = sampler(&f, &params, &state);
    for _ in 0..50 {
        s.sweep().unwrap();
        assert_eq!(s.params().gamma, 0.0);
    }
}
