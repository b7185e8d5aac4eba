//! Log-posterior assembly for the time-invariant and driver-informed models.
//!
//! A [`FitProblem`] binds an annual-maximum series to an optional covariate
//! through one of the link forms and carries the priors. The parameter vector
//! is `(a, b, log_sigma)` (`b` absent for the time-invariant model) with
//! flat improper priors on `a` and `log_sigma` by default. Proper normal
//! priors on either can be imposed, which the desk-scale quadrature
//! validation of the sampler uses.

use crate::covariates::CovariateSeries;
use crate::link::LinkForm;
use crate::math::FloatExt;
use crate::prior::SlopePrior;
use crate::series::AnnualMaxSeries;
use alloc::vec::Vec;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum FitError {
    #[error("covariate years ({cov_start}..={cov_end}) do not align with observation years ({obs_start}..={obs_end})")]
    MisalignedCovariate {
        obs_start: i32,
        obs_end: i32,
        cov_start: i32,
        cov_end: i32,
    },
    #[error("link form {0:?} requires a covariate series")]
    MissingCovariate(LinkForm),
    #[error("time-invariant model must not bind a covariate")]
    UnexpectedCovariate,
    #[error("log-log link requires strictly positive covariate values, got {value} in year {year}")]
    NonPositiveCovariate { year: i32, value: f64 },
    #[error("improper priors need at least 3 observations to yield a proper posterior, got {0}")]
    TooFewForImproperPrior(usize),
    #[error("gradient undefined at the prior support boundary (b = {0})")]
    GradientAtBoundary(f64),
    #[error("parameter vector shape does not match the model (slope expected: {expected})")]
    ThetaShape { expected: bool },
}

/// Prior on a scalar nuisance parameter (`a` or `log_sigma`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScalarPrior {
    /// Improper uniform; log-density 0.
    Flat,
    Normal { mean: f64, sd: f64 },
}

impl ScalarPrior {
    pub fn log_density(&self, x: f64) -> f64 {
        match *self {
            ScalarPrior::Flat => 0.0,
            ScalarPrior::Normal { mean, sd } => {
                let z = (x - mean) / sd;
                crate::math::normal_logpdf(z) - sd.ln()
            }
        }
    }

    pub fn grad_log_density(&self, x: f64) -> f64 {
        match *self {
            ScalarPrior::Flat => 0.0,
            ScalarPrior::Normal { mean, sd } => -(x - mean) / (sd * sd),
        }
    }

    pub fn is_proper(&self) -> bool {
        matches!(self, ScalarPrior::Normal { .. })
    }
}

/// Model parameters: `a` is the intercept on the log-location scale (equal to
/// `ln mu_0` for the time-invariant model), `b` the slope where the model has
/// one, `log_sigma` the log of the Gumbel scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamVector {
    pub a: f64,
    pub b: Option<f64>,
    pub log_sigma: f64,
}

impl ParamVector {
    pub fn is_finite(&self) -> bool {
        self.a.is_finite()
            && self.log_sigma.is_finite()
            && self.b.map(f64::is_finite).unwrap_or(true)
    }

    pub fn sigma(&self) -> f64 {
        self.log_sigma.exp()
    }
}

/// An observation series bound to a model form, ready for posterior
/// evaluation.
#[derive(Debug, Clone)]
pub struct FitProblem {
    obs: Vec<f64>,
    /// Covariate on the linear-predictor scale (`ln x` or `x`); `None` for
    /// the time-invariant model.
    predictor: Option<Vec<f64>>,
    link: LinkForm,
    slope_prior: SlopePrior,
    intercept_prior: ScalarPrior,
    log_scale_prior: ScalarPrior,
    start_year: i32,
}

impl FitProblem {
    /// Bind observations to a link form and slope prior, with flat improper
    /// priors on `a` and `log_sigma`. The covariate must cover exactly the
    /// observation years, one value per year. Improper-prior problems require
    /// at least 3 observations.
    pub fn new(
        obs: &AnnualMaxSeries,
        covariate: Option<&CovariateSeries>,
        link: LinkForm,
        slope_prior: SlopePrior,
    ) -> Result<Self, FitError> {
        Self::with_priors(
            obs,
            covariate,
            link,
            slope_prior,
            ScalarPrior::Flat,
            ScalarPrior::Flat,
        )
    }

    /// Full constructor with explicit priors on the intercept and log-scale.
    pub fn with_priors(
        obs: &AnnualMaxSeries,
        covariate: Option<&CovariateSeries>,
        link: LinkForm,
        slope_prior: SlopePrior,
        intercept_prior: ScalarPrior,
        log_scale_prior: ScalarPrior,
    ) -> Result<Self, FitError> {
        let predictor = match (link.uses_covariate(), covariate) {
            (false, None) => None,
            (false, Some(_)) => return Err(FitError::UnexpectedCovariate),
            (true, None) => return Err(FitError::MissingCovariate(link)),
            (true, Some(cov)) => {
                if cov.start_year() != obs.start_year() || cov.len() != obs.len() {
                    return Err(FitError::MisalignedCovariate {
                        obs_start: obs.start_year(),
                        obs_end: obs.end_year(),
                        cov_start: cov.start_year(),
                        cov_end: cov.end_year(),
                    });
                }
                let mut pred = Vec::with_capacity(cov.len());
                for (year, &x) in cov.years().zip(cov.values()) {
                    match link.transform(x) {
                        Ok(c) => pred.push(c),
                        Err(_) => {
                            return Err(FitError::NonPositiveCovariate { year, value: x })
                        }
                    }
                }
                Some(pred)
            }
        };
        let problem = Self {
            obs: obs.values().to_vec(),
            predictor,
            link,
            slope_prior,
            intercept_prior,
            log_scale_prior,
            start_year: obs.start_year(),
        };
        problem.check_min_obs()?;
        Ok(problem)
    }

    fn check_min_obs(&self) -> Result<(), FitError> {
        if self.has_improper_prior() && self.obs.len() < 3 {
            return Err(FitError::TooFewForImproperPrior(self.obs.len()));
        }
        Ok(())
    }

    /// True when any active prior is improper; such posteriors are flagged
    /// through [`crate::sampler::PosteriorDraws::improper_prior`].
    pub fn has_improper_prior(&self) -> bool {
        !self.intercept_prior.is_proper()
            || !self.log_scale_prior.is_proper()
            || (self.has_slope() && !self.slope_prior.is_proper())
    }

    pub fn has_slope(&self) -> bool {
        self.link.uses_covariate()
    }

    pub fn n_obs(&self) -> usize {
        self.obs.len()
    }

    pub fn observations(&self) -> &[f64] {
        &self.obs
    }

    pub fn link(&self) -> LinkForm {
        self.link
    }

    pub fn slope_prior(&self) -> &SlopePrior {
        &self.slope_prior
    }

    pub fn start_year(&self) -> i32 {
        self.start_year
    }

    /// Covariate values on the linear-predictor scale.
    pub fn predictor(&self) -> Option<&[f64]> {
        self.predictor.as_deref()
    }

    fn check_theta(&self, theta: &ParamVector) -> Result<(), FitError> {
        if theta.b.is_some() != self.has_slope() {
            return Err(FitError::ThetaShape {
                expected: self.has_slope(),
            });
        }
        Ok(())
    }

    /// Per-observation Gumbel log-likelihood at `theta`.
    pub fn pointwise_loglik(&self, theta: &ParamVector) -> Result<Vec<f64>, FitError> {
        self.check_theta(theta)?;
        let sigma = theta.log_sigma.exp();
        let ln_sigma = theta.log_sigma;
        let b = theta.b.unwrap_or(0.0);
        let mut out = Vec::with_capacity(self.obs.len());
        for (i, &z) in self.obs.iter().enumerate() {
            let eta = match &self.predictor {
                Some(pred) => theta.a + b * pred[i],
                None => theta.a,
            };
            let mu = eta.exp();
            let u = (z - mu) / sigma;
            out.push(-ln_sigma - u - (-u).exp());
        }
        Ok(out)
    }

    /// Unnormalized log-posterior: Gumbel log-likelihood plus the slope prior
    /// and any scalar priors. `-inf` outside the slope prior's support.
    pub fn log_posterior(&self, theta: &ParamVector) -> Result<f64, FitError> {
        self.check_theta(theta)?;
        if !theta.is_finite() {
            return Ok(f64::NEG_INFINITY);
        }
        let mut lp = self.intercept_prior.log_density(theta.a)
            + self.log_scale_prior.log_density(theta.log_sigma);
        if let Some(b) = theta.b {
            let prior = self.slope_prior.log_density(b);
            if prior == f64::NEG_INFINITY {
                return Ok(f64::NEG_INFINITY);
            }
            lp += prior;
        }
        let sigma = theta.log_sigma.exp();
        if sigma == 0.0 || !sigma.is_finite() {
            return Ok(f64::NEG_INFINITY);
        }
        let b = theta.b.unwrap_or(0.0);
        for (i, &z) in self.obs.iter().enumerate() {
            let eta = match &self.predictor {
                Some(pred) => theta.a + b * pred[i],
                None => theta.a,
            };
            let mu = eta.exp();
            let u = (z - mu) / sigma;
            lp += -theta.log_sigma - u - (-u).exp();
        }
        if lp.is_nan() {
            return Ok(f64::NEG_INFINITY);
        }
        Ok(lp)
    }

    /// Analytic gradient of the log-posterior with respect to
    /// `(a, b, log_sigma)`. `theta` must lie strictly inside the prior
    /// support; on or outside the boundary the gradient is refused.
    pub fn grad_log_posterior(&self, theta: &ParamVector) -> Result<ParamVector, FitError> {
        self.check_theta(theta)?;
        if let Some(b) = theta.b {
            let (lo, hi) = self.slope_prior.support();
            if b <= lo || b >= hi {
                return Err(FitError::GradientAtBoundary(b));
            }
        }
        let sigma = theta.log_sigma.exp();
        let b = theta.b.unwrap_or(0.0);
        let mut g_a = self.intercept_prior.grad_log_density(theta.a);
        let mut g_b = theta.b.map(|b| self.slope_prior.grad_log_density(b));
        let mut g_s = self.log_scale_prior.grad_log_density(theta.log_sigma);
        for (i, &z) in self.obs.iter().enumerate() {
            let c = self.predictor.as_ref().map(|p| p[i]).unwrap_or(0.0);
            let mu = (theta.a + b * c).exp();
            let u = (z - mu) / sigma;
            // d(loglik)/d(mu) = (1 - exp(-u)) / sigma; d(mu)/d(a) = mu.
            let dmu = (1.0 - (-u).exp()) / sigma;
            g_a += dmu * mu;
            if let Some(gb) = g_b.as_mut() {
                *gb += dmu * mu * c;
            }
            // d(loglik)/d(log_sigma) = u * (1 - exp(-u)) - 1.
            g_s += u * (1.0 - (-u).exp()) - 1.0;
        }
        Ok(ParamVector {
            a: g_a,
            b: g_b,
            log_sigma: g_s,
        })
    }
}
