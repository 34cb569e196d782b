//! Binary response panels.

use crate::error::{Error, Result};

/// Responses `Y[i, j, t]` of `n` individuals to `p` items at `T` time
/// points, with a mask marking which cells were observed.
///
/// Cells are stored individual-major, then time, then item, so the `p`
/// responses of one individual at one time are contiguous. This is also
/// the order in which observed cells appear in log-likelihood rows.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseTensor {
    n: usize,
    p: usize,
    t: usize,
    values: Vec<u8>,
    observed: Vec<bool>,
}

impl ResponseTensor {
    /// Builds a tensor from values and mask in storage order. Checks shape
    /// and that observed values are binary; coverage is checked separately
    /// by [`ResponseTensor::validate_coverage`].
    pub fn new(n: usize, p: usize, t: usize, values: Vec<u8>, observed: Vec<bool>) -> Result<Self> {
        if n == 0 || p == 0 || t == 0 {
            return Err(Error::Data(format!("empty dimensions ({n}, {p}, {t})")));
        }
        let len = n * p * t;
        if values.len() != len || observed.len() != len {
            return Err(Error::Data(format!(
                "expected {len} cells, got {} values and {} mask entries",
                values.len(),
                observed.len()
            )));
        }
        if let Some(k) = (0..len).find(|&k| observed[k] && values[k] > 1) {
            return Err(Error::Data(format!("non-binary response {} at cell {k}", values[k])));
        }
        Ok(Self {
            n,
            p,
            t,
            values,
            observed,
        })
    }

    /// Fully observed tensor from a closure `f(i, j, t) -> 0/1` (zero-based).
    pub fn from_fn(n: usize, p: usize, t: usize, mut f: impl FnMut(usize, usize, usize) -> u8) -> Result<Self> {
        let mut values = vec![0; n * p * t];
        for i in 0..n {
            for s in 0..t {
                for j in 0..p {
                    values[(i * t + s) * p + j] = f(i, j, s);
                }
            }
        }
        Self::new(n, p, t, values, vec![true; n * p * t])
    }

    /// Tensor with every cell unobserved.
    pub fn unobserved(n: usize, p: usize, t: usize) -> Result<Self> {
        Self::new(n, p, t, vec![0; n * p * t], vec![false; n * p * t])
    }

    /// Requires at least two time points and one observed response per
    /// individual per time point.
    pub fn validate_coverage(&self) -> Result<()> {
        if self.t < 2 {
            return Err(Error::Data(format!("need at least 2 time points, got {}", self.t)));
        }
        for i in 0..self.n {
            for s in 0..self.t {
                if !self.observed[self.block(i, s)].iter().any(|&o| o) {
                    return Err(Error::Data(format!(
                        "individual {} has no observed response at time {}",
                        i + 1,
                        s + 1
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn times(&self) -> usize {
        self.t
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, t: usize) -> usize {
        (i * self.t + t) * self.p + j
    }

    /// Storage range of individual `i` at time `t`.
    #[inline]
    pub fn block(&self, i: usize, t: usize) -> std::ops::Range<usize> {
        let s = (i * self.t + t) * self.p;
        s..s + self.p
    }

    #[inline]
    pub fn value(&self, i: usize, j: usize, t: usize) -> u8 {
        self.values[self.index(i, j, t)]
    }

    #[inline]
    pub fn is_observed(&self, i: usize, j: usize, t: usize) -> bool {
        self.observed[self.index(i, j, t)]
    }

    pub fn values(&self) -> &[u8] {
        &self.values
    }

    pub fn mask(&self) -> &[bool] {
        &self.observed
    }

    pub fn n_observed(&self) -> usize {
        self.observed.iter().filter(|&&o| o).count()
    }

    /// Observed cells as `(i, j, t)` in storage order.
    pub fn observed_cells(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        (0..self.n).flat_map(move |i| {
            (0..self.t).flat_map(move |s| {
                (0..self.p).filter_map(move |j| self.is_observed(i, j, s).then_some((i, j, s)))
            })
        })
    }

    /// Proportion of positive responses among observed cells of `i` at `t`.
    pub fn proportion(&self, i: usize, t: usize) -> Option<f64> {
        let r = self.block(i, t);
        let (mut k, mut m) = (0usize, 0usize);
        for c in r {
            if self.observed[c] {
                m += 1;
                k += self.values[c] as usize;
            }
        }
        (m > 0).then(|| k as f64 / m as f64)
    }
}
