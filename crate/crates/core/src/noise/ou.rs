use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dynamics::{TimeGrid, TimeSeries};
use crate::error::{Error, Result};

/// Ornstein–Uhlenbeck process dB = −(B − μ)/t_c dt + σ√(2/t_c) dW, whose
/// stationary law is N(μ, σ²) with autocorrelation e^{−Δ/t_c}.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OUParams {
    pub mu: f64,
    pub sigma: f64,
    pub t_c: f64,
}

impl OUParams {
    pub fn new(mu: f64, sigma: f64, t_c: f64) -> Result<Self> {
        let ou = Self { mu, sigma, t_c };
        ou.validate()?;
        Ok(ou)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma >= 0.0) || !(self.t_c > 0.0) || !self.mu.is_finite() {
            return Err(Error::Config(format!(
                "OU parameters need sigma >= 0 and t_c > 0, got sigma = {}, t_c = {}",
                self.sigma, self.t_c
            )));
        }
        Ok(())
    }

    /// Samples the process at increasing `times` using the exact Gaussian
    /// transition, starting from the stationary distribution.
    pub fn sample_at<R: Rng + ?Sized>(&self, times: &[f64], rng: &mut R) -> Vec<f64> {
        let mut out = Vec::with_capacity(times.len());
        if times.is_empty() {
            return out;
        }
        let xi: f64 = rng.sample(StandardNormal);
        let mut b = self.mu + self.sigma * xi;
        out.push(b);
        for w in times.windows(2) {
            let decay = (-(w[1] - w[0]) / self.t_c).exp();
            let spread = self.sigma * (1.0 - decay * decay).max(0.0).sqrt();
            let xi: f64 = rng.sample(StandardNormal);
            b = self.mu + (b - self.mu) * decay + spread * xi;
            out.push(b);
        }
        out
    }
}

/// One OU path on the integrator substep grid of `grid`.
pub fn ou_path(ou: &OUParams, grid: &TimeGrid, seed: u64) -> Result<TimeSeries> {
    ou.validate()?;
    grid.validate()?;
    if grid.h > ou.t_c / 10.0 {
        return Err(Error::Config(format!("OU step {} exceeds t_c/10 = {}", grid.h, ou.t_c / 10.0)));
    }
    let times = grid.substep_times();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = ou.sample_at(&times, &mut rng);
    let mut series = TimeSeries::new("ou", times, values)?;
    series.seed = Some(seed);
    Ok(series)
}
