//! Run configuration.
//!
//! Human-editable TOML with nested tables; unknown keys are rejected. Every
//! field has a default, so an empty config file (or none at all) runs the
//! standard analysis: all six covariates, informative priors, 4 chains of
//! 10000 draws, WAIC threshold 2, start year 1961.

use crate::error::PipelineError;
use floodattr_core::covariates::CovariateKind;
use floodattr_core::prior::{SlopePrior, Truncation};
use floodattr_core::sampler::SamplerConfig;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorMode {
    /// Literature-derived truncated-normal priors on the slope.
    Informative,
    /// Improper uniform slope priors.
    Flat,
}

/// Covariate selector as spelled in config files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovariateName {
    AnnualTotalP,
    MaxP30,
    MaxP7,
    MaxP1,
    LandUseIntensity,
    ReservoirIndex,
}

impl CovariateName {
    pub fn to_kind(self) -> CovariateKind {
        match self {
            CovariateName::AnnualTotalP => CovariateKind::AnnualTotalP,
            CovariateName::MaxP30 => CovariateKind::MaxP30,
            CovariateName::MaxP7 => CovariateKind::MaxP7,
            CovariateName::MaxP1 => CovariateKind::MaxP1,
            CovariateName::LandUseIntensity => CovariateKind::LandUseIntensity,
            CovariateName::ReservoirIndex => CovariateKind::ReservoirIndex,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorMoments {
    pub mean: f64,
    pub sd: f64,
}

/// Prior table for the slope parameters; defaults are the literature values
/// (0.61/0.06 for annual precipitation, 0.61/0.18 for extreme precipitation,
/// 0.13/0.13 for land use, -0.30/0.18 for reservoirs).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PriorTable {
    pub atmospheric_annual: PriorMoments,
    pub atmospheric_extreme: PriorMoments,
    pub catchment: PriorMoments,
    pub river_system: PriorMoments,
}

impl Default for PriorTable {
    fn default() -> Self {
        Self {
            atmospheric_annual: PriorMoments {
                mean: 0.61,
                sd: 0.06,
            },
            atmospheric_extreme: PriorMoments {
                mean: 0.61,
                sd: 0.18,
            },
            catchment: PriorMoments {
                mean: 0.13,
                sd: 0.13,
            },
            river_system: PriorMoments {
                mean: -0.30,
                sd: 0.18,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplerSettings {
    pub chains: usize,
    pub iterations: usize,
    pub warmup: usize,
    pub leapfrog_steps: usize,
    pub target_accept: f64,
    pub init_step_size: f64,
    pub step_size_min: f64,
    pub step_size_max: f64,
}

impl Default for SamplerSettings {
    fn default() -> Self {
        let d = SamplerConfig::default();
        Self {
            chains: d.chains,
            iterations: d.iterations,
            warmup: d.warmup,
            leapfrog_steps: d.leapfrog_steps,
            target_accept: d.target_accept,
            init_step_size: d.init_step_size,
            step_size_min: d.step_size_min,
            step_size_max: d.step_size_max,
        }
    }
}

impl SamplerSettings {
    pub fn to_config(&self, seed: u64) -> SamplerConfig {
        SamplerConfig {
            chains: self.chains,
            iterations: self.iterations,
            warmup: self.warmup,
            seed,
            leapfrog_steps: self.leapfrog_steps,
            target_accept: self.target_accept,
            init_step_size: self.init_step_size,
            step_size_min: self.step_size_min,
            step_size_max: self.step_size_max,
            max_init_retries: 100,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub prior_mode: PriorMode,
    /// A driver-informed model must beat the time-invariant WAIC by more
    /// than this to be selected.
    pub waic_threshold: f64,
    /// Common starting year for trends and fits.
    pub start_year: i32,
    /// Minimum annual-maximum record length a site must have.
    pub min_record_years: usize,
    /// Reference maize yield, t/ha.
    pub y_ref_t_ha: f64,
    /// Year the cell yields are anchored to.
    pub yield_base_year: i32,
    /// LOESS span in points for the decadal precipitation smoothing.
    pub loess_span: usize,
    /// Covariates to evaluate.
    pub covariates: Vec<CovariateName>,
    /// Which precipitation covariate represents the atmospheric driver in
    /// the attribution comparison.
    pub attribution_precip: CovariateName,
    /// Worker threads for per-site parallelism; 0 = all available.
    pub threads: usize,
    pub priors: PriorTable,
    pub sampler: SamplerSettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            prior_mode: PriorMode::Informative,
            waic_threshold: 2.0,
            start_year: 1961,
            min_record_years: 40,
            y_ref_t_ha: 8.72,
            yield_base_year: 2000,
            loess_span: 10,
            covariates: vec![
                CovariateName::AnnualTotalP,
                CovariateName::MaxP30,
                CovariateName::MaxP7,
                CovariateName::MaxP1,
                CovariateName::LandUseIntensity,
                CovariateName::ReservoirIndex,
            ],
            attribution_precip: CovariateName::MaxP1,
            threads: 0,
            priors: PriorTable::default(),
            sampler: SamplerSettings::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
        let cfg: RunConfig = toml::from_str(&text)
            .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.covariates.is_empty() {
            return Err(PipelineError::Config(
                "covariates must list at least one kind".into(),
            ));
        }
        if self.waic_threshold < 0.0 || !self.waic_threshold.is_finite() {
            return Err(PipelineError::Config(format!(
                "waic_threshold must be finite and >= 0, got {}",
                self.waic_threshold
            )));
        }
        if self.y_ref_t_ha <= 0.0 {
            return Err(PipelineError::Config(format!(
                "y_ref_t_ha must be > 0, got {}",
                self.y_ref_t_ha
            )));
        }
        if self.loess_span < 2 {
            return Err(PipelineError::Config(format!(
                "loess_span must be >= 2, got {}",
                self.loess_span
            )));
        }
        Ok(())
    }

    /// The slope prior a covariate uses under this config.
    pub fn slope_prior_for(&self, kind: CovariateKind) -> SlopePrior {
        if self.prior_mode == PriorMode::Flat {
            return SlopePrior::Flat;
        }
        let (moments, truncation) = match kind {
            CovariateKind::AnnualTotalP => (self.priors.atmospheric_annual, Truncation::LowerAtZero),
            CovariateKind::MaxP30 | CovariateKind::MaxP7 | CovariateKind::MaxP1 => {
                (self.priors.atmospheric_extreme, Truncation::LowerAtZero)
            }
            CovariateKind::LandUseIntensity => (self.priors.catchment, Truncation::LowerAtZero),
            CovariateKind::ReservoirIndex => (self.priors.river_system, Truncation::UpperAtZero),
        };
        SlopePrior::truncated_normal(moments.mean, moments.sd, truncation)
            .expect("prior table moments validated at load")
    }
}
