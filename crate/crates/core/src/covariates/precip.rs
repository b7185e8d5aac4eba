//! Catchment-averaged daily precipitation and its annual aggregates.

use super::{CovariateError, CovariateKind, CovariateSeries};
use crate::calendar::days_in_year;
use alloc::vec::Vec;

/// Gap-free daily precipitation totals covering whole calendar years,
/// starting January 1 of `start_year`. Gaps must be caught at ingestion;
/// this type only checks year coverage and non-negativity.
#[derive(Debug, Clone, PartialEq)]
pub struct DailySeries {
    start_year: i32,
    values: Vec<f64>,
    /// (year, offset of Jan 1 in `values`) for each covered year.
    year_offsets: Vec<(i32, usize)>,
}

impl DailySeries {
    pub fn new(start_year: i32, values: Vec<f64>) -> Result<Self, CovariateError> {
        if values.is_empty() {
            return Err(CovariateError::PartialYears);
        }
        for (index, &value) in values.iter().enumerate() {
            if !value.is_finite() || value < 0.0 {
                return Err(CovariateError::NegativePrecip { index, value });
            }
        }
        let mut year_offsets = Vec::new();
        let mut offset = 0usize;
        let mut year = start_year;
        while offset < values.len() {
            year_offsets.push((year, offset));
            offset += days_in_year(year) as usize;
            year += 1;
        }
        if offset != values.len() {
            return Err(CovariateError::PartialYears);
        }
        Ok(Self {
            start_year,
            values,
            year_offsets,
        })
    }

    pub fn start_year(&self) -> i32 {
        self.start_year
    }

    pub fn n_years(&self) -> usize {
        self.year_offsets.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn year_slice(&self, idx: usize) -> &[f64] {
        let (year, offset) = self.year_offsets[idx];
        &self.values[offset..offset + days_in_year(year) as usize]
    }
}

/// Per-year maximum of the sliding `duration`-day window sum. Windows do not
/// cross calendar-year boundaries; `duration = 1` is the annual daily maximum.
pub fn annual_max_precip(d: &DailySeries, duration: u32) -> Result<CovariateSeries, CovariateError> {
    if duration == 0 || duration > 365 {
        return Err(CovariateError::InvalidDuration(duration));
    }
    // Only the 1/7/30-day windows have a covariate label.
    let kind = match duration {
        1 => CovariateKind::MaxP1,
        7 => CovariateKind::MaxP7,
        30 => CovariateKind::MaxP30,
        _ => return Err(CovariateError::InvalidDuration(duration)),
    };
    let w = duration as usize;
    let mut out = Vec::with_capacity(d.n_years());
    for y in 0..d.n_years() {
        let days = d.year_slice(y);
        let mut sum: f64 = days[..w].iter().sum();
        let mut best = sum;
        for i in w..days.len() {
            sum += days[i] - days[i - w];
            if sum > best {
                best = sum;
            }
        }
        out.push(best);
    }
    CovariateSeries::new(kind, d.start_year(), out)
}

/// Per-year sum of the daily values (leap days included).
pub fn annual_total_precip(d: &DailySeries) -> Result<CovariateSeries, CovariateError> {
    let mut out = Vec::with_capacity(d.n_years());
    for y in 0..d.n_years() {
        out.push(d.year_slice(y).iter().sum());
    }
    CovariateSeries::new(CovariateKind::AnnualTotalP, d.start_year(), out)
}
