//! WAIC model comparison.
//!
//! `WAIC = -2 * (lppd - p_waic)` where `lppd` is the log pointwise predictive
//! density, `sum_i ln( mean_s exp(l_is) )` over draws `s`, and `p_waic` is the
//! variance-form complexity penalty `sum_i var_s(l_is)`. Lower is better. The
//! pointwise standard error is reported but plays no part in the selection
//! rule.

use crate::math::{log_sum_exp, FloatExt};
use crate::posterior::FitProblem;
use crate::sampler::PosteriorDraws;
use alloc::vec::Vec;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum WaicError {
    #[error("WAIC needs at least 2 posterior draws, got {0}")]
    TooFewDraws(usize),
    #[error("WAIC needs at least one observation")]
    NoObservations,
    #[error("pointwise log-likelihood for observation {obs} is NaN")]
    NonFiniteLogLik { obs: usize },
    #[error("model/draw mismatch: {0}")]
    Problem(#[from] crate::posterior::FitError),
}

/// Per-observation contributions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointwiseWaic {
    pub lppd: f64,
    pub p_waic: f64,
}

impl PointwiseWaic {
    pub fn elpd(&self) -> f64 {
        self.lppd - self.p_waic
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaicReport {
    pub lppd: f64,
    pub p_waic: f64,
    pub waic: f64,
    /// Standard error of WAIC from the pointwise terms.
    pub se: f64,
    pub pointwise: Vec<PointwiseWaic>,
}

/// WAIC from an explicit pointwise log-likelihood matrix, one row per
/// observation, one column per draw.
pub fn waic_from_loglik(loglik: &[Vec<f64>]) -> Result<WaicReport, WaicError> {
    if loglik.is_empty() {
        return Err(WaicError::NoObservations);
    }
    let n_draws = loglik[0].len();
    if n_draws < 2 {
        return Err(WaicError::TooFewDraws(n_draws));
    }
    let mut pointwise = Vec::with_capacity(loglik.len());
    for (obs, row) in loglik.iter().enumerate() {
        debug_assert_eq!(row.len(), n_draws);
        if row.iter().any(|v| v.is_nan()) {
            return Err(WaicError::NonFiniteLogLik { obs });
        }
        let lppd_i = log_sum_exp(row) - (n_draws as f64).ln();
        let p_i = crate::stats::sample_var(row);
        pointwise.push(PointwiseWaic {
            lppd: lppd_i,
            p_waic: p_i,
        });
    }
    let lppd: f64 = pointwise.iter().map(|p| p.lppd).sum();
    let p_waic: f64 = pointwise.iter().map(|p| p.p_waic).sum();
    let waic = -2.0 * (lppd - p_waic);
    let per_obs: Vec<f64> = pointwise.iter().map(|p| -2.0 * p.elpd()).collect();
    let se = if per_obs.len() > 1 {
        (per_obs.len() as f64 * crate::stats::sample_var(&per_obs)).sqrt()
    } else {
        0.0
    };
    Ok(WaicReport {
        lppd,
        p_waic,
        waic,
        se,
        pointwise,
    })
}

/// WAIC of a fitted problem, pooling draws across chains.
pub fn waic(draws: &PosteriorDraws, prob: &FitProblem) -> Result<WaicReport, WaicError> {
    let n_draws = draws.total_draws();
    if n_draws < 2 {
        return Err(WaicError::TooFewDraws(n_draws));
    }
    if prob.n_obs() == 0 {
        return Err(WaicError::NoObservations);
    }
    let mut loglik: Vec<Vec<f64>> = (0..prob.n_obs())
        .map(|_| Vec::with_capacity(n_draws))
        .collect();
    for theta in draws.iter_all() {
        let pw = prob.pointwise_loglik(theta)?;
        for (i, l) in pw.into_iter().enumerate() {
            loglik[i].push(l);
        }
    }
    waic_from_loglik(&loglik)
}

/// Convenience for tests: WAIC identity check.
pub fn waic_identity_holds(report: &WaicReport, tol: f64) -> bool {
    (report.waic - (-2.0 * (report.lppd - report.p_waic))).abs() <= tol
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use crate::posterior::ParamVector;

    fn theta(a: f64, log_sigma: f64) -> ParamVector {
        ParamVector {
            a,
            b: None,
            log_sigma,
        }
    }

    #[test]
    fn degenerate_posterior_has_zero_penalty() {
        // All draws identical: p_waic = 0 and waic = -2 * sum(l_i).
        let row_a = vec![-1.3; 5];
        let row_b = vec![-0.7; 5];
        let report = waic_from_loglik(&[row_a, row_b]).unwrap();
        assert!(report.p_waic.abs() < 1e-15);
        assert!((report.waic - (-2.0 * (-1.3 + -0.7))).abs() < 1e-12);
    }

    #[test]
    fn hand_set_matrix_matches_direct_arithmetic() {
        // 2 observations x 3 draws.
        let l1 = vec![-1.0, -1.5, -0.8];
        let l2 = vec![-2.0, -2.2, -1.7];
        let report = waic_from_loglik(&[l1.clone(), l2.clone()]).unwrap();

        let direct = |row: &[f64]| -> (f64, f64) {
            let m = (row.iter().map(|&v| v.exp()).sum::<f64>() / 3.0).ln();
            let mean = row.iter().sum::<f64>() / 3.0;
            let var = row.iter().map(|&v| (v - mean) * (v - mean)).sum::<f64>() / 2.0;
            (m, var)
        };
        let (lppd1, p1) = direct(&l1);
        let (lppd2, p2) = direct(&l2);
        assert!((report.lppd - (lppd1 + lppd2)).abs() < 1e-12);
        assert!((report.p_waic - (p1 + p2)).abs() < 1e-12);
        assert!((report.waic - (-2.0 * (lppd1 + lppd2 - p1 - p2))).abs() < 1e-12);
        assert!(waic_identity_holds(&report, 1e-14));
    }

    #[test]
    fn duplicated_observations_double_everything() {
        let l1 = vec![-1.0, -1.5, -0.8];
        let l2 = vec![-2.0, -2.2, -1.7];
        let single = waic_from_loglik(&[l1.clone(), l2.clone()]).unwrap();
        let doubled =
            waic_from_loglik(&[l1.clone(), l2.clone(), l1, l2]).unwrap();
        assert!((doubled.lppd - 2.0 * single.lppd).abs() < 1e-12);
        assert!((doubled.p_waic - 2.0 * single.p_waic).abs() < 1e-12);
    }

    #[test]
    fn draw_and_observation_permutation_invariance() {
        let l1 = vec![-1.0, -1.5, -0.8, -1.1];
        let l2 = vec![-2.0, -2.2, -1.7, -2.4];
        let base = waic_from_loglik(&[l1.clone(), l2.clone()]).unwrap();
        // Permute draws (columns) the same way in every row.
        let perm = [2usize, 0, 3, 1];
        let p1: Vec<f64> = perm.iter().map(|&i| l1[i]).collect();
        let p2: Vec<f64> = perm.iter().map(|&i| l2[i]).collect();
        let permuted = waic_from_loglik(&[p1, p2]).unwrap();
        assert!((base.waic - permuted.waic).abs() < 1e-12);
        // Permute observations (rows).
        let swapped = waic_from_loglik(&[l2, l1]).unwrap();
        assert!((base.waic - swapped.waic).abs() < 1e-12);
    }

    #[test]
    fn constant_shift_moves_lppd_only() {
        let l1 = vec![-1.0, -1.5, -0.8];
        let l2 = vec![-2.0, -2.2, -1.7];
        let base = waic_from_loglik(&[l1.clone(), l2.clone()]).unwrap();
        let c = 0.37;
        let s1: Vec<f64> = l1.iter().map(|v| v + c).collect();
        let s2: Vec<f64> = l2.iter().map(|v| v + c).collect();
        let shifted = waic_from_loglik(&[s1, s2]).unwrap();
        assert!((shifted.lppd - (base.lppd + 2.0 * c)).abs() < 1e-12);
        assert!((shifted.p_waic - base.p_waic).abs() < 1e-12);
    }

    #[test]
    fn errors_on_bad_input() {
        assert_eq!(
            waic_from_loglik(&[]).unwrap_err(),
            WaicError::NoObservations
        );
        assert_eq!(
            waic_from_loglik(&[vec![-1.0]]).unwrap_err(),
            WaicError::TooFewDraws(1)
        );
        assert!(matches!(
            waic_from_loglik(&[vec![-1.0, f64::NAN]]).unwrap_err(),
            WaicError::NonFiniteLogLik { obs: 0 }
        ));
    }

    #[test]
    fn waic_from_draws_matches_manual_matrix() {
        use crate::link::LinkForm;
        use crate::prior::SlopePrior;
        use crate::sampler::ChainStats;
        use crate::series::AnnualMaxSeries;

        let series = AnnualMaxSeries::new(1961, vec![50.0, 64.0, 47.0]).unwrap();
        let prob =
            FitProblem::new(&series, None, LinkForm::TimeInvariant, SlopePrior::Flat).unwrap();
        let thetas = vec![theta(4.0, 2.3), theta(3.9, 2.5), theta(4.1, 2.4)];
        let draws = PosteriorDraws::from_raw_parts(
            vec![thetas.clone()],
            vec![ChainStats {
                accept_rate: 1.0,
                divergences: 0,
                step_size: 0.1,
            }],
            0,
            true,
            false,
        );
        let report = waic(&draws, &prob).unwrap();

        let mut matrix = vec![Vec::new(); 3];
        for t in &thetas {
            let pw = prob.pointwise_loglik(t).unwrap();
            for (i, l) in pw.into_iter().enumerate() {
                matrix[i].push(l);
            }
        }
        let manual = waic_from_loglik(&matrix).unwrap();
        assert!((report.waic - manual.waic).abs() < 1e-12);
    }
}
