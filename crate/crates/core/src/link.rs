//! Covariate links for the Gumbel location parameter.
//!
//! Three forms: a constant location, `log(mu) = a + b*log(x)` and
//! `log(mu) = a + b*x`. Under the log-log form the slope is the elasticity of
//! the location to the covariate, `(x/mu) * dmu/dx = b`; under the log-linear
//! form it is the relative change per unit covariate, `(1/mu) * dmu/dx = b`.

use crate::math::FloatExt;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LinkError {
    #[error("log-log link requires a strictly positive covariate, got {0}")]
    NonPositiveCovariate(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LinkForm {
    /// `mu = exp(a)`, no covariate.
    TimeInvariant,
    /// `log(mu) = a + b*log(x)`; used with precipitation covariates.
    LogLog,
    /// `log(mu) = a + b*x`; used with the land-use and reservoir indices.
    LogLinear,
}

impl LinkForm {
    /// Transform a covariate value to the linear-predictor scale: `log(x)`
    /// for the log-log link, `x` for log-linear, 0 when time-invariant.
    pub fn transform(&self, x: f64) -> Result<f64, LinkError> {
        match self {
            LinkForm::TimeInvariant => Ok(0.0),
            LinkForm::LogLog => {
                if x > 0.0 {
                    Ok(x.ln())
                } else {
                    Err(LinkError::NonPositiveCovariate(x))
                }
            }
            LinkForm::LogLinear => Ok(x),
        }
    }

    pub fn uses_covariate(&self) -> bool {
        !matches!(self, LinkForm::TimeInvariant)
    }
}

/// A link form with its regression parameters. `b` is ignored by the
/// time-invariant form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkModel {
    pub form: LinkForm,
    pub a: f64,
    pub b: f64,
}

impl LinkModel {
    pub fn new(form: LinkForm, a: f64, b: f64) -> Self {
        Self { form, a, b }
    }

    /// Location parameter at covariate value `x`; always strictly positive.
    pub fn mu(&self, x: f64) -> Result<f64, LinkError> {
        let c = self.form.transform(x)?;
        match self.form {
            LinkForm::TimeInvariant => Ok(self.a.exp()),
            _ => Ok((self.a + self.b * c).exp()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loglog_identity() {
        let m = LinkModel::new(LinkForm::LogLog, 0.0, 1.0);
        assert!((m.mu(42.0).unwrap() - 42.0).abs() < 1e-12);
    }

    #[test]
    fn loglinear_zero_slope_collapses() {
        let m = LinkModel::new(LinkForm::LogLinear, 1.3, 0.0);
        for &x in &[-5.0, 0.0, 7.7] {
            assert!((m.mu(x).unwrap() - 1.3_f64.exp()).abs() < 1e-12);
        }
    }

    #[test]
    fn loglog_reference_value() {
        // a = ln 2, b = 0.61, x = 100 -> 2 * 100^0.61
        let m = LinkModel::new(LinkForm::LogLog, 2.0_f64.ln(), 0.61);
        let expect = 2.0 * 100.0_f64.powf(0.61);
        assert!((m.mu(100.0).unwrap() - expect).abs() < 1e-9);
        assert!((expect - 33.19173788).abs() < 1e-6);
    }

    #[test]
    fn loglog_rejects_nonpositive() {
        let m = LinkModel::new(LinkForm::LogLog, 0.0, 1.0);
        assert_eq!(m.mu(0.0), Err(LinkError::NonPositiveCovariate(0.0)));
        assert!(m.mu(-3.0).is_err());
    }

    #[test]
    fn time_invariant_ignores_covariate() {
        let m = LinkModel::new(LinkForm::TimeInvariant, 2.0, 123.0);
        assert!((m.mu(0.5).unwrap() - 2.0_f64.exp()).abs() < 1e-12);
    }

    #[test]
    fn mu_always_positive() {
        for &(form, a, b, x) in &[
            (LinkForm::LogLog, -20.0, -3.0, 0.01),
            (LinkForm::LogLinear, -20.0, -3.0, 5.0),
            (LinkForm::TimeInvariant, -20.0, 0.0, 0.0),
        ] {
            let m = LinkModel::new(form, a, b);
            assert!(m.mu(x).unwrap() > 0.0);
        }
    }

    #[test]
    fn elasticity_identities_match_finite_differences() {
        // log-log: (x/mu) dmu/dx = b; log-linear: (1/mu) dmu/dx = b.
        let cases = [
            (LinkForm::LogLog, 1.2, 0.61, 180.0),
            (LinkForm::LogLog, -0.4, -0.3, 3.5),
            (LinkForm::LogLinear, 0.7, 0.13, 0.4),
            (LinkForm::LogLinear, 2.0, -0.30, 0.05),
        ];
        for &(form, a, b, x) in &cases {
            let m = LinkModel::new(form, a, b);
            let h = 1e-6 * x.abs().max(1e-3);
            let d = (m.mu(x + h).unwrap() - m.mu(x - h).unwrap()) / (2.0 * h);
            let mu = m.mu(x).unwrap();
            let measured = match form {
                LinkForm::LogLog => x / mu * d,
                LinkForm::LogLinear => d / mu,
                LinkForm::TimeInvariant => unreachable!(),
            };
            assert!(
                (measured - b).abs() < 1e-5 * (1.0 + b.abs()),
                "{form:?}: measured {measured}, b {b}"
            );
        }
    }
}
