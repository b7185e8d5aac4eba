//! Construction of the year-indexed driver covariates.
//!
//! Three drivers feed the attribution models: decadally smoothed
//! precipitation (annual totals and 1/7/30-day annual maxima), a land-use
//! intensity index built from crop areas and yield trends, and a reservoir
//! index built from upstream dam records. All builders are deterministic pure
//! functions of their inputs.

mod landuse;
mod loess;
mod precip;
mod reservoir;

pub use landuse::{land_use_intensity, land_use_series, CropCell};
pub use loess::{loess_smooth, loess_values};
pub use precip::{annual_max_precip, annual_total_precip, DailySeries};
pub use reservoir::{reservoir_index, reservoir_series, ReservoirRecord};

use alloc::vec::Vec;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CovariateError {
    #[error("daily series must start on January 1 and cover whole calendar years")]
    PartialYears,
    #[error("daily precipitation must be finite and >= 0, got {value} at day index {index}")]
    NegativePrecip { index: usize, value: f64 },
    #[error("window duration {0} is invalid for a within-year scan")]
    InvalidDuration(u32),
    #[error("series of length {len} is shorter than the smoothing span {span}")]
    SeriesShorterThanSpan { len: usize, span: usize },
    #[error("smoothing span {0} must be at least 2")]
    SpanTooSmall(usize),
    #[error("catchment area must be > 0, got {0}")]
    InvalidCatchmentArea(f64),
    #[error("reference yield must be > 0, got {0}")]
    InvalidReferenceYield(f64),
    #[error("crop cell has invalid field {field}: {value}")]
    InvalidCropCell { field: &'static str, value: f64 },
    #[error("mean annual flow volume must be > 0, got {0}")]
    InvalidFlowVolume(f64),
    #[error("reservoir record has invalid field {field}: {value}")]
    InvalidReservoir { field: &'static str, value: f64 },
    #[error(
        "reservoir drainage area {drainage} km^2 exceeds the catchment area {catchment} km^2"
    )]
    ReservoirLargerThanCatchment { drainage: f64, catchment: f64 },
    #[error("covariate series must not be empty")]
    Empty,
}

/// Which driver quantity a covariate series carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CovariateKind {
    AnnualTotalP,
    MaxP30,
    MaxP7,
    MaxP1,
    LandUseIntensity,
    ReservoirIndex,
}

impl CovariateKind {
    /// Window length in days for the precipitation kinds.
    pub fn precip_duration(&self) -> Option<u32> {
        match self {
            CovariateKind::MaxP1 => Some(1),
            CovariateKind::MaxP7 => Some(7),
            CovariateKind::MaxP30 => Some(30),
            _ => None,
        }
    }

    pub fn is_precipitation(&self) -> bool {
        matches!(
            self,
            CovariateKind::AnnualTotalP
                | CovariateKind::MaxP30
                | CovariateKind::MaxP7
                | CovariateKind::MaxP1
        )
    }

    pub fn name(&self) -> &'static str {
        match self {
            CovariateKind::AnnualTotalP => "annual_total_p",
            CovariateKind::MaxP30 => "max_p30",
            CovariateKind::MaxP7 => "max_p7",
            CovariateKind::MaxP1 => "max_p1",
            CovariateKind::LandUseIntensity => "land_use_intensity",
            CovariateKind::ReservoirIndex => "reservoir_index",
        }
    }
}

/// A year-indexed covariate over a gap-free run of years.
#[derive(Debug, Clone, PartialEq)]
pub struct CovariateSeries {
    pub kind: CovariateKind,
    start_year: i32,
    values: Vec<f64>,
}

impl CovariateSeries {
    pub fn new(kind: CovariateKind, start_year: i32, values: Vec<f64>) -> Result<Self, CovariateError> {
        if values.is_empty() {
            return Err(CovariateError::Empty);
        }
        Ok(Self {
            kind,
            start_year,
            values,
        })
    }

    pub fn start_year(&self) -> i32 {
        self.start_year
    }

    pub fn end_year(&self) -> i32 {
        self.start_year + self.values.len() as i32 - 1
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn years(&self) -> impl Iterator<Item = i32> + '_ {
        (0..self.values.len() as i32).map(move |i| self.start_year + i)
    }

    pub fn value_for(&self, year: i32) -> Option<f64> {
        if year < self.start_year || year > self.end_year() {
            None
        } else {
            Some(self.values[(year - self.start_year) as usize])
        }
    }

    /// Restrict to years in `[from, to]`; `None` when the overlap is empty.
    pub fn window(&self, from: i32, to: i32) -> Option<Self> {
        let lo = from.max(self.start_year);
        let hi = to.min(self.end_year());
        if lo > hi {
            return None;
        }
        let a = (lo - self.start_year) as usize;
        let b = (hi - self.start_year) as usize;
        Some(Self {
            kind: self.kind,
            start_year: lo,
            values: self.values[a..=b].to_vec(),
        })
    }
}
