//! Exact sampling from the Pólya-Gamma distribution PG(1, c).
//!
//! Uses the alternating-series accept/reject construction of Devroye as
//! adapted by Polson, Scott and Windle: propose from a mixture of a
//! truncated exponential and a truncated inverse Gaussian, then decide
//! acceptance by bracketing the Jacobi density with partial sums.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::error::{Error, Result};
use crate::stats::normal_cdf;

/// Switch point between the two series representations.
const TRUNC: f64 = 0.64;
/// Proposal cap per draw.
pub const MAX_PROPOSALS: usize = 10_000;

/// Auxiliary variable of the logistic augmentation; always positive.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct PgDraw(f64);

impl PgDraw {
    pub fn omega(self) -> f64 {
        self.0
    }
}

/// Draws `omega ~ PG(1, c)`.
pub fn sample_pg1<R: Rng + ?Sized>(c: f64, rng: &mut R) -> Result<PgDraw> {
    if !c.is_finite() {
        return Err(Error::Domain(format!("PG tilt must be finite, got {c}")));
    }
    let z = 0.5 * c.abs();
    let k = PI * PI / 8.0 + 0.5 * z * z;
    let p_exp = mass_truncated_exponential(z, k);
    for _ in 0..MAX_PROPOSALS {
        let x = if rng.random::<f64>() < p_exp {
            let e: f64 = Exp1.sample(rng);
            TRUNC + e / k
        } else {
            truncated_inverse_gaussian(z, rng)
        };
        let mut s = series_coef(0, x);
        let y = rng.random::<f64>() * s;
        let mut n = 0usize;
        loop {
            n += 1;
            if n % 2 == 1 {
                s -= series_coef(n, x);
                if y <= s {
                    return Ok(PgDraw(0.25 * x));
                }
            } else {
                s += series_coef(n, x);
                if y > s {
                    break;
                }
            }
        }
    }
    Err(Error::PgOverflow(MAX_PROPOSALS))
}

/// Mean of PG(1, c): `tanh(c/2) / (2c)`, equal to 1/4 at `c = 0`.
pub fn pg1_mean(c: f64) -> f64 {
    let c = c.abs();
    if c < 1e-6 {
        0.25 - c * c / 48.0
    } else {
        (0.5 * c).tanh() / (2.0 * c)
    }
}

/// Variance of PG(1, c): `(sinh c - c) / (4 c^3 cosh^2(c/2))`.
pub fn pg1_variance(c: f64) -> f64 {
    let c = c.abs();
    if c < 1e-3 {
        // Taylor expansion around zero
        1.0 / 24.0 - c * c / 120.0
    } else {
        let h = 0.5 * c;
        let sech2 = 1.0 / (h.cosh() * h.cosh());
        (2.0 * h.tanh() - c * sech2) / (4.0 * c * c * c)
    }
}

/// Probability of proposing from the exponential piece.
fn mass_truncated_exponential(z: f64, k: f64) -> f64 {
    let t = TRUNC;
    let b = (t * z - 1.0) / t.sqrt();
    let a = -(t * z + 1.0) / t.sqrt();
    let x0 = k.ln() + k * t;
    let xb = x0 - z + normal_cdf(b).ln();
    let xa = x0 + z + normal_cdf(a).ln();
    let q_over_p = 4.0 / PI * (xb.exp() + xa.exp());
    1.0 / (1.0 + q_over_p)
}

/// Inverse Gaussian with mean `1/z`, shape 1, truncated to `(0, TRUNC)`.
fn truncated_inverse_gaussian<R: Rng + ?Sized>(z: f64, rng: &mut R) -> f64 {
    let t = TRUNC;
    if z < 1.0 / t {
        // mean beyond the truncation point: sample from the z = 0 limit
        // (a truncated Lévy law) and thin by the tilt
        loop {
            let mut e1: f64 = Exp1.sample(rng);
            let mut e2: f64 = Exp1.sample(rng);
            while e1 * e1 > 2.0 * e2 / t {
                e1 = Exp1.sample(rng);
                e2 = Exp1.sample(rng);
            }
            let x = t / ((1.0 + e1 * t) * (1.0 + e1 * t));
            let alpha = (-0.5 * z * z * x).exp();
            if rng.random::<f64>() <= alpha {
                return x;
            }
        }
    } else {
        let mu = 1.0 / z;
        loop {
            let n: f64 = StandardNormal.sample(rng);
            let y = n * n;
            let mu_y = mu * y;
            let mut x = mu + 0.5 * mu * mu_y - 0.5 * mu * (4.0 * mu_y + mu_y * mu_y).sqrt();
            if rng.random::<f64>() > mu / (mu + x) {
                x = mu * mu / x;
            }
            if x < t {
                return x;
            }
        }
    }
}

/// n-th term of the piecewise alternating series for the Jacobi density.
#[inline]
fn series_coef(n: usize, x: f64) -> f64 {
    let h = n as f64 + 0.5;
    let k = h * PI;
    if x > TRUNC {
        k * (-0.5 * k * k * x).exp()
    } else if x > 0.0 {
        (-1.5 * ((0.5 * PI).ln() + x.ln()) + k.ln() - 2.0 * h * h / x).exp()
    } else {
        0.0
    }
}
