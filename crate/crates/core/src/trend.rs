//! Classical change statistics reported alongside the attribution: OLS trend
//! of the log flood peaks, the Mann-Kendall test, and circular seasonality
//! statistics of flood dates.

use crate::calendar::days_in_year;
use crate::math::{normal_quantile, student_t_quantile, FloatExt, PI};
use crate::series::AnnualMaxSeries;
use alloc::vec::Vec;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TrendError {
    #[error("trend regression needs at least {min} observations from {start_year}, got {got}")]
    TooFewObservations {
        min: usize,
        got: usize,
        start_year: i32,
    },
    #[error("Mann-Kendall needs at least 8 observations, got {0}")]
    TooFewForMk(usize),
    #[error("significance level must be in (0,1), got {0}")]
    BadAlpha(f64),
    #[error("seasonality needs at least one flood date")]
    NoDates,
    #[error("day of year {day} is invalid for year {year}")]
    BadDayOfYear { year: i32, day: u32 },
}

/// OLS trend of `ln(discharge)` on calendar year, reported in percent per
/// year with its 95% confidence interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrendResult {
    pub slope_pct_per_year: f64,
    pub ci95: (f64, f64),
    pub start_year: i32,
    pub n: usize,
}

/// Fit the log-linear trend from `start_year` on (the common starting year
/// across sites; series entries before it are ignored).
pub fn ols_log_trend(s: &AnnualMaxSeries, start_year: i32) -> Result<TrendResult, TrendError> {
    const MIN_OBS: usize = 10;
    let window = s.window(start_year, i32::MAX);
    let w = match window {
        Some(w) if w.len() >= MIN_OBS => w,
        other => {
            return Err(TrendError::TooFewObservations {
                min: MIN_OBS,
                got: other.map(|w| w.len()).unwrap_or(0),
                start_year,
            })
        }
    };
    let n = w.len();
    let xs: Vec<f64> = w.years().map(|y| y as f64).collect();
    let ys: Vec<f64> = w.values().iter().map(|&v| v.ln()).collect();
    let x_mean = crate::stats::mean(&xs);
    let y_mean = crate::stats::mean(&ys);
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for i in 0..n {
        let dx = xs[i] - x_mean;
        sxx += dx * dx;
        sxy += dx * (ys[i] - y_mean);
    }
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    let mut rss = 0.0;
    for i in 0..n {
        let r = ys[i] - intercept - slope * xs[i];
        rss += r * r;
    }
    let se = (rss / (n - 2) as f64 / sxx).sqrt();
    let t = student_t_quantile(0.975, (n - 2) as f64);
    Ok(TrendResult {
        slope_pct_per_year: 100.0 * slope,
        ci95: (100.0 * (slope - t * se), 100.0 * (slope + t * se)),
        start_year: w.start_year(),
        n,
    })
}

/// Mann-Kendall test result. `significant` is the two-sided test at `alpha`;
/// `significant_upward` additionally requires a positive S.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MkResult {
    pub s_statistic: i64,
    pub variance: f64,
    pub z: f64,
    pub significant: bool,
    pub significant_upward: bool,
    /// All values tied: the variance is zero and the test is reported as not
    /// significant rather than producing NaN.
    pub all_tied: bool,
}

/// Rank-based Mann-Kendall trend test with the tie-corrected variance and
/// continuity correction.
pub fn mann_kendall(s: &AnnualMaxSeries, alpha: f64) -> Result<MkResult, TrendError> {
    let values = s.values();
    let n = values.len();
    if n < 8 {
        return Err(TrendError::TooFewForMk(n));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(TrendError::BadAlpha(alpha));
    }
    let mut s_stat: i64 = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            let d = values[j] - values[i];
            s_stat += if d > 0.0 {
                1
            } else if d < 0.0 {
                -1
            } else {
                0
            };
        }
    }
    // Tie groups from the sorted values.
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let nf = n as f64;
    let mut tie_term = 0.0;
    let mut i = 0usize;
    while i < n {
        let mut j = i + 1;
        while j < n && sorted[j] == sorted[i] {
            j += 1;
        }
        let t = (j - i) as f64;
        if t > 1.0 {
            tie_term += t * (t - 1.0) * (2.0 * t + 5.0);
        }
        i = j;
    }
    let variance = (nf * (nf - 1.0) * (2.0 * nf + 5.0) - tie_term) / 18.0;
    if variance <= 0.0 {
        return Ok(MkResult {
            s_statistic: s_stat,
            variance: 0.0,
            z: 0.0,
            significant: false,
            significant_upward: false,
            all_tied: true,
        });
    }
    let z = if s_stat > 0 {
        (s_stat as f64 - 1.0) / variance.sqrt()
    } else if s_stat < 0 {
        (s_stat as f64 + 1.0) / variance.sqrt()
    } else {
        0.0
    };
    let crit = normal_quantile(1.0 - alpha / 2.0);
    let significant = z.abs() > crit;
    Ok(MkResult {
        s_statistic: s_stat,
        variance,
        z,
        significant,
        significant_upward: significant && z > 0.0,
        all_tied: false,
    })
}

/// A flood occurrence, for the seasonality statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FloodDate {
    pub year: i32,
    /// 1-based day of year.
    pub day_of_year: u32,
}

/// Circular seasonality: mean date of occurrence and the concentration `R`
/// (1 when all floods share a date, 0 when spread evenly over the year).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeasonalityResult {
    /// Mean day of year in (0, year-length], using the mean year length of
    /// the input events.
    pub mean_day: f64,
    pub concentration_r: f64,
}

/// Dates map to angles `theta = 2*pi*day / (length of that event's year)`;
/// the mean direction and resultant length are computed on the unit circle.
pub fn seasonality(dates: &[FloodDate]) -> Result<SeasonalityResult, TrendError> {
    if dates.is_empty() {
        return Err(TrendError::NoDates);
    }
    let mut sum_cos = 0.0;
    let mut sum_sin = 0.0;
    let mut sum_len = 0.0;
    for d in dates {
        let len = days_in_year(d.year) as f64;
        if d.day_of_year == 0 || d.day_of_year as f64 > len {
            return Err(TrendError::BadDayOfYear {
                year: d.year,
                day: d.day_of_year,
            });
        }
        let theta = 2.0 * PI * d.day_of_year as f64 / len;
        sum_cos += theta.cos();
        sum_sin += theta.sin();
        sum_len += len;
    }
    let n = dates.len() as f64;
    let mc = sum_cos / n;
    let ms = sum_sin / n;
    let r = (mc * mc + ms * ms).sqrt().min(1.0);
    let mut angle = ms.atan2(mc);
    if angle <= 0.0 {
        angle += 2.0 * PI;
    }
    let mean_year_len = sum_len / n;
    Ok(SeasonalityResult {
        mean_day: angle / (2.0 * PI) * mean_year_len,
        concentration_r: r,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn am(start: i32, values: Vec<f64>) -> AnnualMaxSeries {
        AnnualMaxSeries::new(start, values).unwrap()
    }

    #[test]
    fn exact_exponential_growth_gives_one_percent() {
        let values: Vec<f64> = (0..40)
            .map(|i| 120.0 * (0.01 * i as f64).exp())
            .collect();
        let t = ols_log_trend(&am(1961, values), 1961).unwrap();
        assert!((t.slope_pct_per_year - 1.0).abs() < 1e-9);
        assert!((t.ci95.1 - t.ci95.0).abs() < 1e-6);
    }

    #[test]
    fn constant_series_has_zero_slope() {
        let t = ols_log_trend(&am(1961, vec![55.5; 30]), 1961).unwrap();
        assert!(t.slope_pct_per_year.abs() < 1e-9);
    }

    #[test]
    fn noisy_series_matches_normal_equations_oracle() {
        let mut rng = crate::rng::Rng::new(314);
        let n = 50usize;
        let values: Vec<f64> = (0..n)
            .map(|i| (4.0 + 0.012 * i as f64 + 0.2 * rng.normal()).exp())
            .collect();
        let series = am(1961, values.clone());
        let t = ols_log_trend(&series, 1961).unwrap();

        // Oracle: plain normal equations on (year, ln value).
        let xs: Vec<f64> = (0..n).map(|i| (1961 + i as i32) as f64).collect();
        let ys: Vec<f64> = values.iter().map(|v| v.ln()).collect();
        let sx: f64 = xs.iter().sum();
        let sy: f64 = ys.iter().sum();
        let sxx: f64 = xs.iter().map(|x| x * x).sum();
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
        let nf = n as f64;
        let slope = (nf * sxy - sx * sy) / (nf * sxx - sx * sx);
        let intercept = (sy - slope * sx) / nf;
        let rss: f64 = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| {
                let r = y - intercept - slope * x;
                r * r
            })
            .sum();
        let se = (rss / (nf - 2.0) / (sxx - sx * sx / nf)).sqrt();
        let tq = crate::math::student_t_quantile(0.975, nf - 2.0);
        assert!((t.slope_pct_per_year - 100.0 * slope).abs() < 1e-9);
        assert!((t.ci95.0 - 100.0 * (slope - tq * se)).abs() < 1e-8);
        assert!((t.ci95.1 - 100.0 * (slope + tq * se)).abs() < 1e-8);
    }

    #[test]
    fn start_year_restriction_applies() {
        let values: Vec<f64> = (0..60).map(|i| 100.0 + i as f64).collect();
        let series = am(1941, values);
        let t = ols_log_trend(&series, 1961).unwrap();
        assert_eq!(t.start_year, 1961);
        assert_eq!(t.n, 40);
        // Too few observations after the cut.
        let short = am(1941, (0..25).map(|i| 100.0 + i as f64).collect());
        assert!(matches!(
            ols_log_trend(&short, 1961).unwrap_err(),
            TrendError::TooFewObservations { got: 5, .. }
        ));
    }

    #[test]
    fn scaling_discharges_leaves_trend_unchanged() {
        let mut rng = crate::rng::Rng::new(5);
        let values: Vec<f64> = (0..30)
            .map(|i| (3.0 + 0.01 * i as f64 + 0.1 * rng.normal()).exp())
            .collect();
        let t1 = ols_log_trend(&am(1961, values.clone()), 1961).unwrap();
        let scaled: Vec<f64> = values.iter().map(|v| v * 7.3).collect();
        let t2 = ols_log_trend(&am(1961, scaled), 1961).unwrap();
        assert!((t1.slope_pct_per_year - t2.slope_pct_per_year).abs() < 1e-9);
        assert!((t1.ci95.0 - t2.ci95.0).abs() < 1e-8);
    }

    #[test]
    fn strictly_increasing_reference_case() {
        // n = 10: S = 45, Var = 125, Z = 44/sqrt(125) ~ 3.9355.
        let values: Vec<f64> = (1..=10).map(|i| i as f64).collect();
        let mk = mann_kendall(&am(1961, values), 0.05).unwrap();
        assert_eq!(mk.s_statistic, 45);
        assert!((mk.variance - 125.0).abs() < 1e-12);
        assert!((mk.z - 44.0 / 125.0_f64.sqrt()).abs() < 1e-12);
        assert!((mk.z - 3.9355).abs() < 1e-3);
        assert!(mk.significant && mk.significant_upward);
    }

    #[test]
    fn strictly_decreasing_is_not_upward() {
        let values: Vec<f64> = (1..=10).rev().map(|i| i as f64).collect();
        let mk = mann_kendall(&am(1961, values), 0.05).unwrap();
        assert_eq!(mk.s_statistic, -45);
        assert!(mk.significant);
        assert!(!mk.significant_upward);
    }

    #[test]
    fn constant_series_not_significant() {
        let mk = mann_kendall(&am(1961, vec![3.0; 12]), 0.05).unwrap();
        assert_eq!(mk.s_statistic, 0);
        assert!(mk.all_tied);
        assert!(!mk.significant);
        assert_eq!(mk.variance, 0.0);
    }

    #[test]
    fn monotone_transform_leaves_s_unchanged() {
        let mut rng = crate::rng::Rng::new(17);
        let values: Vec<f64> = (0..25).map(|_| 1.0 + rng.uniform() * 50.0).collect();
        let mk1 = mann_kendall(&am(1961, values.clone()), 0.05).unwrap();
        // Strictly monotone transforms preserve every pairwise sign.
        let cubed: Vec<f64> = values.iter().map(|&v| v * v * v).collect();
        let logs: Vec<f64> = values.iter().map(|&v| v.ln() + 10.0).collect();
        assert_eq!(
            mann_kendall(&am(1961, cubed), 0.05).unwrap().s_statistic,
            mk1.s_statistic
        );
        assert_eq!(
            mann_kendall(&am(1961, logs), 0.05).unwrap().s_statistic,
            mk1.s_statistic
        );
    }

    #[test]
    fn tie_correction_reduces_variance() {
        let tied = vec![1.0, 2.0, 2.0, 2.0, 3.0, 4.0, 5.0, 5.0, 6.0, 7.0];
        let mk = mann_kendall(&am(1961, tied), 0.05).unwrap();
        // n = 10 untied variance is 125; three 2s and two 5s subtract
        // (3*2*11 + 2*1*9)/18 = 84/18.
        assert!((mk.variance - (125.0 - 84.0 / 18.0)).abs() < 1e-12);
    }

    #[test]
    fn all_floods_same_day() {
        let dates: Vec<FloodDate> = (0..10)
            .map(|i| FloodDate {
                year: 1961 + i,
                day_of_year: 180,
            })
            .collect();
        // Mix of leap and common years moves angles slightly; use common
        // years only for the exact case.
        let common: Vec<FloodDate> = dates
            .iter()
            .filter(|d| !crate::calendar::is_leap_year(d.year))
            .copied()
            .collect();
        let s = seasonality(&common).unwrap();
        assert!((s.concentration_r - 1.0).abs() < 1e-12);
        assert!((s.mean_day - 180.0).abs() < 1e-9);
    }

    #[test]
    fn antipodal_dates_cancel() {
        // Days 1 and 183.5 would be exactly opposite in a 365-day year; use
        // 1 and 183 which nearly cancel.
        let dates = [
            FloodDate {
                year: 1961,
                day_of_year: 1,
            },
            FloodDate {
                year: 1961,
                day_of_year: 183,
            },
        ];
        let s = seasonality(&dates).unwrap();
        assert!(s.concentration_r < 0.01, "R = {}", s.concentration_r);
    }

    #[test]
    fn four_dates_match_vector_sum_oracle() {
        let days = [30u32, 60, 90, 120];
        let dates: Vec<FloodDate> = days
            .iter()
            .map(|&d| FloodDate {
                year: 1961,
                day_of_year: d,
            })
            .collect();
        let s = seasonality(&dates).unwrap();
        let thetas: Vec<f64> = days
            .iter()
            .map(|&d| 2.0 * PI * d as f64 / 365.0)
            .collect();
        let mc = thetas.iter().map(|t| t.cos()).sum::<f64>() / 4.0;
        let ms = thetas.iter().map(|t| t.sin()).sum::<f64>() / 4.0;
        let r = (mc * mc + ms * ms).sqrt();
        let day = ms.atan2(mc) / (2.0 * PI) * 365.0;
        assert!((s.concentration_r - r).abs() < 1e-12);
        assert!((s.mean_day - day).abs() < 1e-9);
    }

    #[test]
    fn rotation_property() {
        // Same-length years: rotating all dates by a constant shifts the mean
        // date by that constant (mod year) and leaves R unchanged.
        let days = [40u32, 55, 70, 100, 130];
        let base: Vec<FloodDate> = days
            .iter()
            .map(|&d| FloodDate {
                year: 1961,
                day_of_year: d,
            })
            .collect();
        let shifted: Vec<FloodDate> = days
            .iter()
            .map(|&d| FloodDate {
                year: 1961,
                day_of_year: d + 60,
            })
            .collect();
        let s1 = seasonality(&base).unwrap();
        let s2 = seasonality(&shifted).unwrap();
        assert!((s1.concentration_r - s2.concentration_r).abs() < 1e-12);
        assert!((s2.mean_day - s1.mean_day - 60.0).abs() < 1e-9);
    }

    #[test]
    fn invalid_inputs() {
        assert_eq!(seasonality(&[]).unwrap_err(), TrendError::NoDates);
        let bad = [FloodDate {
            year: 1961,
            day_of_year: 366,
        }];
        assert!(matches!(
            seasonality(&bad).unwrap_err(),
            TrendError::BadDayOfYear { .. }
        ));
        // 366 is fine in a leap year.
        let ok = [FloodDate {
            year: 1964,
            day_of_year: 366,
        }];
        assert!(seasonality(&ok).is_ok());
    }
}
