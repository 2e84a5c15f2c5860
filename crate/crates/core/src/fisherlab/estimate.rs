use std::f64::consts::PI;

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{FisherError, Result};
use crate::rng;

/// Samples per independently seeded chunk. Fixed so the estimate does not
/// depend on the thread count.
const CHUNK: usize = 1 << 16;

/// A Monte Carlo Fisher-information estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FisherEstimate {
    pub value: f64,
    pub stderr: f64,
    pub samples: usize,
    pub fd_step: f64,
}

impl FisherEstimate {
    pub fn rel_stderr(&self) -> f64 {
        if self.value > 0.0 {
            self.stderr / self.value
        } else {
            f64::INFINITY
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    pub samples: usize,
    /// Finite-difference step; `None` selects [`default_fd_step`].
    pub fd_step: Option<f64>,
    pub seed: u64,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            samples: 1_000_000,
            fd_step: None,
            seed: 0,
        }
    }
}

/// `1e-4 * max(1, |theta|)`.
pub fn default_fd_step(theta: f64) -> f64 {
    1e-4 * theta.abs().max(1.0)
}

pub fn normal_log_density(x: f64, mean: f64, var: f64) -> f64 {
    -0.5 * (2.0 * PI * var).ln() - (x - mean).powi(2) / (2.0 * var)
}

/// Welford accumulator; chunks are merged in index order.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        let delta = x - self.mean;
        self.mean += delta / self.n;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(self, other: Moments) -> Moments {
        if self.n == 0.0 {
            return other;
        }
        if other.n == 0.0 {
            return self;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        Moments {
            n,
            mean: self.mean + delta * other.n / n,
            m2: self.m2 + other.m2 + delta * delta * self.n * other.n / n,
        }
    }
}

/// Estimate `E[(d/dtheta log p_theta(X))^2]` at `theta` from `samples`
/// draws of `sampler(theta, rng)`, differentiating `logdens(theta, x)` by
/// central differences.
pub fn mc_fisher<S, L>(sampler: S, logdens: L, theta: f64, cfg: &McConfig) -> Result<FisherEstimate>
where
    S: Fn(f64, &mut ChaCha8Rng) -> f64 + Sync,
    L: Fn(f64, f64) -> f64 + Sync,
{
    if cfg.samples == 0 {
        return Err(FisherError::InvalidSettings("samples must be at least 1".into()));
    }
    let h = cfg.fd_step.unwrap_or_else(|| default_fd_step(theta));
    if !(h > 0.0 && h.is_finite()) {
        return Err(FisherError::InvalidSettings(format!("finite-difference step must be positive, got {h}")));
    }
    let chunks = cfg.samples.div_ceil(CHUNK);
    let partial: Vec<Result<Moments>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = rng::stream(cfg.seed, "mc-fisher", &[c as u64]);
            let len = CHUNK.min(cfg.samples - c * CHUNK);
            let mut acc = Moments::default();
            for _ in 0..len {
                let x = sampler(theta, &mut rng);
                let (up, down) = (logdens(theta + h, x), logdens(theta - h, x));
                if !(up.is_finite() && down.is_finite()) {
                    return Err(FisherError::NonFiniteLogDensity { sample: x, theta });
                }
                let score = (up - down) / (2.0 * h);
                acc.push(score * score);
            }
            Ok(acc)
        })
        .collect();
    let mut total = Moments::default();
    for p in partial {
        total = total.merge(p?);
    }
    let var = if total.n > 1.0 { total.m2 / (total.n - 1.0) } else { 0.0 };
    Ok(FisherEstimate {
        value: total.mean,
        stderr: (var / total.n).sqrt(),
        samples: cfg.samples,
        fd_step: h,
    })
}
