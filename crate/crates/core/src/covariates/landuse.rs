//! Land-use intensity index.
//!
//! `LI = sum_i (A_c,i / A_T) * (Y_i / Y_ref)` over the crop cells of a
//! catchment, where `Y_i(year)` extrapolates the cell's yield linearly from
//! its base-year value. Crop-area shares are held constant in time, so all
//! change in LI comes from the yield trends.

use super::{CovariateError, CovariateKind, CovariateSeries};
use alloc::vec::Vec;

/// One grid cell's cropland area and maize-yield trend line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CropCell {
    /// Cropland area in the cell, km^2.
    pub crop_area_km2: f64,
    /// Yield in the base year, t/ha.
    pub yield_base: f64,
    /// Linear yield trend, t/ha per year.
    pub yield_trend: f64,
}

impl CropCell {
    fn validate(&self) -> Result<(), CovariateError> {
        if !self.crop_area_km2.is_finite() || self.crop_area_km2 < 0.0 {
            return Err(CovariateError::InvalidCropCell {
                field: "crop_area_km2",
                value: self.crop_area_km2,
            });
        }
        if !self.yield_base.is_finite() || self.yield_base < 0.0 {
            return Err(CovariateError::InvalidCropCell {
                field: "yield_base",
                value: self.yield_base,
            });
        }
        if !self.yield_trend.is_finite() {
            return Err(CovariateError::InvalidCropCell {
                field: "yield_trend",
                value: self.yield_trend,
            });
        }
        Ok(())
    }

    /// Yield extrapolated to `year`, clamped at zero. Returns the clamp flag
    /// so series builders can report it.
    fn yield_at(&self, year: i32, base_year: i32) -> (f64, bool) {
        let y = self.yield_base + self.yield_trend * (year - base_year) as f64;
        if y < 0.0 {
            (0.0, true)
        } else {
            (y, false)
        }
    }
}

/// The index for a single year.
pub fn land_use_intensity(
    cells: &[CropCell],
    total_area_km2: f64,
    y_ref: f64,
    year: i32,
    base_year: i32,
) -> Result<f64, CovariateError> {
    if !total_area_km2.is_finite() || total_area_km2 <= 0.0 {
        return Err(CovariateError::InvalidCatchmentArea(total_area_km2));
    }
    if !y_ref.is_finite() || y_ref <= 0.0 {
        return Err(CovariateError::InvalidReferenceYield(y_ref));
    }
    let mut li = 0.0;
    for cell in cells {
        cell.validate()?;
        let (y, _) = cell.yield_at(year, base_year);
        li += cell.crop_area_km2 / total_area_km2 * (y / y_ref);
    }
    Ok(li)
}

/// The index for a run of years. The second return value counts (cell, year)
/// combinations where a negative extrapolated yield was clamped to zero, for
/// the caller to log.
pub fn land_use_series(
    cells: &[CropCell],
    total_area_km2: f64,
    y_ref: f64,
    start_year: i32,
    n_years: usize,
    base_year: i32,
) -> Result<(CovariateSeries, usize), CovariateError> {
    if !total_area_km2.is_finite() || total_area_km2 <= 0.0 {
        return Err(CovariateError::InvalidCatchmentArea(total_area_km2));
    }
    if !y_ref.is_finite() || y_ref <= 0.0 {
        return Err(CovariateError::InvalidReferenceYield(y_ref));
    }
    for cell in cells {
        cell.validate()?;
    }
    let mut clamped = 0usize;
    let mut values = Vec::with_capacity(n_years);
    for i in 0..n_years {
        let year = start_year + i as i32;
        let mut li = 0.0;
        for cell in cells {
            let (y, was_clamped) = cell.yield_at(year, base_year);
            if was_clamped {
                clamped += 1;
            }
            li += cell.crop_area_km2 / total_area_km2 * (y / y_ref);
        }
        values.push(li);
    }
    let series = CovariateSeries::new(CovariateKind::LandUseIntensity, start_year, values)?;
    Ok((series, clamped))
}
