//! Priors on the slope (elasticity) parameter.
//!
//! Literature-derived priors are normal distributions truncated at zero so
//! the sign of the driver effect is constrained: precipitation and land-use
//! slopes keep the lower tail truncated (effect must not be negative),
//! reservoir slopes the upper tail (reservoirs may only attenuate floods).
//! The truncation correction uses the analytically computed retained normal
//! mass, so densities are exact.

use crate::math::{normal_log_cdf, normal_logpdf, normal_quantile, FloatExt};
use crate::rng::Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PriorError {
    #[error("prior standard deviation must be finite and > 0, got {0}")]
    InvalidSd(f64),
    #[error("prior mean must be finite, got {0}")]
    InvalidMean(f64),
}

/// Which tail of the normal is cut off at zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Truncation {
    /// Density is zero for `b < 0`.
    LowerAtZero,
    /// Density is zero for `b > 0`.
    UpperAtZero,
    /// Plain (untruncated) normal.
    None,
}

/// Prior on a slope parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SlopePrior {
    /// Improper uniform over the whole real line (log-density 0 everywhere).
    /// Posteriors fitted under this prior are flagged as improper-prior runs
    /// for diagnostics.
    Flat,
    TruncatedNormal {
        mean: f64,
        sd: f64,
        truncation: Truncation,
    },
}

impl SlopePrior {
    pub fn truncated_normal(mean: f64, sd: f64, truncation: Truncation) -> Result<Self, PriorError> {
        if !mean.is_finite() {
            return Err(PriorError::InvalidMean(mean));
        }
        if !sd.is_finite() || sd <= 0.0 {
            return Err(PriorError::InvalidSd(sd));
        }
        Ok(SlopePrior::TruncatedNormal {
            mean,
            sd,
            truncation,
        })
    }

    /// Support interval as `(lo, hi)`; infinite endpoints where unbounded.
    pub fn support(&self) -> (f64, f64) {
        match self {
            SlopePrior::Flat => (f64::NEG_INFINITY, f64::INFINITY),
            SlopePrior::TruncatedNormal { truncation, .. } => match truncation {
                Truncation::LowerAtZero => (0.0, f64::INFINITY),
                Truncation::UpperAtZero => (f64::NEG_INFINITY, 0.0),
                Truncation::None => (f64::NEG_INFINITY, f64::INFINITY),
            },
        }
    }

    pub fn contains(&self, b: f64) -> bool {
        let (lo, hi) = self.support();
        b >= lo && b <= hi
    }

    pub fn is_proper(&self) -> bool {
        !matches!(self, SlopePrior::Flat)
    }

    /// Log-density at `b`; `-inf` outside the support. The flat prior is the
    /// constant 0 (improper).
    pub fn log_density(&self, b: f64) -> f64 {
        if !self.contains(b) {
            return f64::NEG_INFINITY;
        }
        match *self {
            SlopePrior::Flat => 0.0,
            SlopePrior::TruncatedNormal { mean, sd, truncation } => {
                let z = (b - mean) / sd;
                normal_logpdf(z) - sd.ln() - ln_retained_mass(mean, sd, truncation)
            }
        }
    }

    /// d/db of the log-density, for interior points.
    pub fn grad_log_density(&self, b: f64) -> f64 {
        match *self {
            SlopePrior::Flat => 0.0,
            SlopePrior::TruncatedNormal { mean, sd, .. } => -(b - mean) / (sd * sd),
        }
    }

    /// A draw used to initialize sampler chains: the prior itself for proper
    /// priors (inverse-CDF through the truncation), standard normal when flat.
    pub fn initial_draw(&self, rng: &mut Rng) -> f64 {
        match *self {
            SlopePrior::Flat => rng.normal(),
            SlopePrior::TruncatedNormal { mean, sd, truncation } => {
                let u = rng.uniform();
                let p = match truncation {
                    Truncation::None => u,
                    Truncation::LowerAtZero => {
                        let p_lo = crate::math::normal_cdf((0.0 - mean) / sd);
                        (p_lo + u * (1.0 - p_lo)).min(1.0 - 1e-16)
                    }
                    Truncation::UpperAtZero => {
                        let p_hi = crate::math::normal_cdf((0.0 - mean) / sd);
                        (u * p_hi).max(1e-16)
                    }
                };
                mean + sd * normal_quantile(p)
            }
        }
    }
}

fn ln_retained_mass(mean: f64, sd: f64, truncation: Truncation) -> f64 {
    match truncation {
        Truncation::None => 0.0,
        // P(b >= 0) = Phi(mean/sd)
        Truncation::LowerAtZero => normal_log_cdf(mean / sd),
        // P(b <= 0) = Phi(-mean/sd)
        Truncation::UpperAtZero => normal_log_cdf(-mean / sd),
    }
}
