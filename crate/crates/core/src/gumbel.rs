//! Two-parameter Gumbel (extreme value type I) distribution.
//!
//! CDF: `G(z) = exp(-exp(-(z - mu)/sigma))` with location `mu` and scale
//! `sigma`, both in discharge units.

use crate::math::FloatExt;
use crate::rng::Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GumbelError {
    #[error("scale must be finite and > 0, got {0}")]
    InvalidScale(f64),
    #[error("location must be finite, got {0}")]
    InvalidLocation(f64),
    #[error("probability must lie strictly in (0,1), got {0}")]
    ProbabilityOutOfRange(f64),
}

/// Validated location/scale pair; `sigma > 0` is enforced at construction so
/// the density and quantile functions never have to re-check it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GumbelParams {
    mu: f64,
    sigma: f64,
}

impl GumbelParams {
    pub fn new(mu: f64, sigma: f64) -> Result<Self, GumbelError> {
        if !mu.is_finite() {
            return Err(GumbelError::InvalidLocation(mu));
        }
        if !sigma.is_finite() || sigma <= 0.0 {
            return Err(GumbelError::InvalidScale(sigma));
        }
        Ok(Self { mu, sigma })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Cumulative distribution function.
    pub fn cdf(&self, z: f64) -> f64 {
        let u = (z - self.mu) / self.sigma;
        (-(-u).exp()).exp()
    }

    /// Log-density: `-ln(sigma) - u - exp(-u)` with `u = (z - mu)/sigma`.
    pub fn logpdf(&self, z: f64) -> f64 {
        let u = (z - self.mu) / self.sigma;
        -self.sigma.ln() - u - (-u).exp()
    }

    /// Quantile function; inverse of [`cdf`](Self::cdf) on (0, 1).
    pub fn quantile(&self, prob: f64) -> Result<f64, GumbelError> {
        if !(prob > 0.0 && prob < 1.0) {
            return Err(GumbelError::ProbabilityOutOfRange(prob));
        }
        Ok(self.mu - self.sigma * (-prob.ln()).ln())
    }

    /// Random draw by inverse-CDF transform.
    pub fn sample(&self, rng: &mut Rng) -> f64 {
        let u = rng.uniform();
        self.mu - self.sigma * (-u.ln()).ln()
    }

    /// Method-of-moments estimate; used to initialize samplers.
    ///
    /// `sigma_hat = s * sqrt(6)/pi`, `mu_hat = mean - gamma * sigma_hat`.
    pub fn method_of_moments(values: &[f64]) -> Result<Self, GumbelError> {
        const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|&v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let sigma = (var.sqrt() * (6.0_f64).sqrt() / crate::math::PI).max(1e-8 * mean.abs() + 1e-8);
        Self::new(mean - EULER_GAMMA * sigma, sigma)
    }
}
