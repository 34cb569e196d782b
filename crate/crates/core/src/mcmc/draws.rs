//! Univariate draws used by the Gibbs blocks.

use rand::Rng;
use rand_distr::{Beta, Distribution, Exp1, Gamma, StandardNormal};

/// `N(mean, sd^2)` truncated to `[0, inf)`, sampled exactly (Robert, 1995).
pub fn truncated_normal_nonneg<R: Rng + ?Sized>(mean: f64, sd: f64, rng: &mut R) -> f64 {
    debug_assert!(sd > 0.0);
    // standardized lower bound
    let a = -mean / sd;
    let z = if a <= 0.0 {
        loop {
            let z: f64 = StandardNormal.sample(rng);
            if z >= a {
                break z;
            }
        }
    } else {
        let rate = 0.5 * (a + (a * a + 4.0).sqrt());
        loop {
            let e: f64 = Exp1.sample(rng);
            let z = a + e / rate;
            let u: f64 = rng.random();
            if u <= (-0.5 * (z - rate) * (z - rate)).exp() {
                break z;
            }
        }
    };
    (mean + sd * z).max(0.0)
}

pub fn normal<R: Rng + ?Sized>(mean: f64, sd: f64, rng: &mut R) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    mean + sd * z
}

/// Inverse-Gamma with shape `a` and scale (rate of the reciprocal) `b`.
pub fn inverse_gamma<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> f64 {
    let g = Gamma::new(a, 1.0 / b).expect("positive inverse-gamma parameters");
    1.0 / g.sample(rng)
}

pub fn beta<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> f64 {
    Beta::new(a, b).expect("positive beta parameters").sample(rng)
}
