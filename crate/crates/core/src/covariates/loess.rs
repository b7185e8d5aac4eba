//! Degree-0 LOESS: a tricube-weighted moving average that preserves series
//! length.
//!
//! The fit at each point is a weighted mean of the `span` nearest points by
//! index (asymmetric near the edges, preferring the lower index on distance
//! ties). Weights are tricube, `w(u) = (1 - |u|^3)^3`, with `u` the index
//! distance divided by `h = (largest distance in the window) * (1 + 1e-9)`;
//! the slight inflation keeps the farthest window member at a small positive
//! weight so all `span` points contribute.

use super::{CovariateError, CovariateSeries};
use alloc::vec::Vec;

const H_INFLATION: f64 = 1.0 + 1e-9;

/// Smooth a yearly series with a `span`-point degree-0 LOESS.
///
/// The output covers exactly the same years as the input.
pub fn loess_smooth(s: &CovariateSeries, span: usize) -> Result<CovariateSeries, CovariateError> {
    let smoothed = loess_values(s.values(), span)?;
    CovariateSeries::new(s.kind, s.start_year(), smoothed)
}

/// The smoother on a bare slice; exposed for callers that need the linear
/// operator itself (e.g. smoothing basis vectors to recover the weights).
pub fn loess_values(values: &[f64], span: usize) -> Result<Vec<f64>, CovariateError> {
    if span < 2 {
        return Err(CovariateError::SpanTooSmall(span));
    }
    let n = values.len();
    if n < span {
        return Err(CovariateError::SeriesShorterThanSpan { len: n, span });
    }
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let (lo, hi) = window_bounds(i, n, span);
        let h = (i - lo).max(hi - i) as f64 * H_INFLATION;
        let mut wsum = 0.0;
        let mut vsum = 0.0;
        for (j, &v) in values.iter().enumerate().take(hi + 1).skip(lo) {
            let u = (j as f64 - i as f64).abs() / h;
            let w = tricube(u);
            wsum += w;
            vsum += w * v;
        }
        out.push(vsum / wsum);
    }
    Ok(out)
}

/// Indices `[lo, hi]` of the `span` nearest points to `i`, preferring the
/// lower index when left and right candidates are equidistant.
fn window_bounds(i: usize, n: usize, span: usize) -> (usize, usize) {
    let mut lo = i;
    let mut hi = i;
    while hi - lo + 1 < span {
        let can_left = lo > 0;
        let can_right = hi < n - 1;
        let left_dist = if can_left { i - (lo - 1) } else { usize::MAX };
        let right_dist = if can_right { (hi + 1) - i } else { usize::MAX };
        if left_dist <= right_dist {
            lo -= 1;
        } else {
            hi += 1;
        }
    }
    (lo, hi)
}

#[inline]
fn tricube(u: f64) -> f64 {
    if u >= 1.0 {
        0.0
    } else {
        let t = 1.0 - u * u * u;
        t * t * t
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use crate::covariates::CovariateKind;

    fn series(values: Vec<f64>) -> CovariateSeries {
        CovariateSeries::new(CovariateKind::MaxP1, 1961, values).unwrap()
    }

    /// Independent oracle: enumerate the window and weights from scratch.
    fn oracle(values: &[f64], span: usize) -> Vec<f64> {
        let n = values.len();
        let mut out = vec![0.0; n];
        for i in 0..n {
            // Collect (distance, index) of all points, sort by distance then
            // index, take the first `span`.
            let mut order: Vec<(usize, usize)> = (0..n)
                .map(|j| ((j as i64 - i as i64).unsigned_abs() as usize, j))
                .collect();
            order.sort();
            let window: Vec<usize> = order[..span].iter().map(|&(_, j)| j).collect();
            let h = window
                .iter()
                .map(|&j| (j as i64 - i as i64).unsigned_abs() as usize)
                .max()
                .unwrap() as f64
                * (1.0 + 1e-9);
            let mut ws = 0.0;
            let mut vs = 0.0;
            for &j in &window {
                let u = ((j as i64 - i as i64).unsigned_abs() as f64) / h;
                let t = 1.0 - u * u * u;
                let w = t * t * t;
                ws += w;
                vs += w * values[j];
            }
            out[i] = vs / ws;
        }
        out
    }

    #[test]
    fn constant_series_is_fixed_point() {
        let s = series(vec![3.5; 15]);
        let sm = loess_smooth(&s, 10).unwrap();
        for &v in sm.values() {
            assert!((v - 3.5).abs() < 1e-12);
        }
        assert_eq!(sm.len(), 15);
        assert_eq!(sm.start_year(), 1961);
    }

    #[test]
    fn linear_series_interior_symmetric_window() {
        // Odd span -> symmetric interior windows -> linear data unchanged.
        let vals: Vec<f64> = (0..21).map(|i| 2.0 + 0.5 * i as f64).collect();
        let s = series(vals.clone());
        let sm = loess_smooth(&s, 9).unwrap();
        for i in 4..17 {
            assert!(
                (sm.values()[i] - vals[i]).abs() < 1e-12,
                "i={i}: {} vs {}",
                sm.values()[i],
                vals[i]
            );
        }
    }

    #[test]
    fn ramp_with_step_matches_enumeration_oracle() {
        let mut vals: Vec<f64> = (0..20).map(|i| 1.0 + 0.3 * i as f64).collect();
        for v in vals.iter_mut().skip(12) {
            *v += 4.0;
        }
        let got = loess_values(&vals, 10).unwrap();
        let want = oracle(&vals, 10);
        for i in 0..20 {
            assert!(
                (got[i] - want[i]).abs() < 1e-12,
                "i={i}: {} vs {}",
                got[i],
                want[i]
            );
        }
    }

    #[test]
    fn output_bounded_by_input_range() {
        let mut rng = crate::rng::Rng::new(3);
        let vals: Vec<f64> = (0..40).map(|_| rng.uniform() * 100.0).collect();
        let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let sm = loess_values(&vals, 10).unwrap();
        for &v in &sm {
            assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
        }
    }

    #[test]
    fn length_preserved_and_short_series_rejected() {
        let s = series(vec![1.0; 10]);
        assert_eq!(loess_smooth(&s, 10).unwrap().len(), 10);
        let short = series(vec![1.0; 9]);
        assert_eq!(
            loess_smooth(&short, 10).unwrap_err(),
            CovariateError::SeriesShorterThanSpan { len: 9, span: 10 }
        );
        assert!(loess_smooth(&s, 1).is_err());
    }

    #[test]
    fn positive_inputs_stay_positive() {
        let mut rng = crate::rng::Rng::new(11);
        let vals: Vec<f64> = (0..30).map(|_| 0.01 + rng.uniform() * 50.0).collect();
        for v in loess_values(&vals, 10).unwrap() {
            assert!(v > 0.0);
        }
    }
}
