//! Seeded synthetic sites for validation.
//!
//! Annual maxima are drawn from the Gumbel model with the location linked to
//! a synthetic covariate. For precipitation covariates the raw annual
//! extremes follow the requested shape, daily precipitation is laid down as
//! one storm block per year whose window sum equals those extremes, and the
//! model covariate is their LOESS-smoothed series, so a pipeline run on the
//! emitted files rebuilds exactly the covariate the discharges were generated
//! from.

use crate::config::CovariateName;
use crate::error::PipelineError;
use crate::ingest::SiteRecord;
use floodattr_core::calendar::days_in_year;
use floodattr_core::covariates::{loess_values, CropCell, DailySeries, ReservoirRecord};

use floodattr_core::gumbel::GumbelParams;
use floodattr_core::rng::Rng;
use floodattr_core::series::AnnualMaxSeries;
use floodattr_core::trend::FloodDate;
use std::path::Path;

/// Which model generates the discharges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrueModel {
    /// Time-invariant Gumbel.
    G0,
    /// Log-log link on a precipitation covariate.
    Ga { b: f64 },
    /// Log-linear link on the land-use intensity index.
    Gc { b: f64 },
    /// Log-linear link on the reservoir index.
    Gr { b: f64 },
}

/// Shape of the smoothed covariate over the record.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovariateShape {
    /// Sigmoid transition centred mid-record.
    Logistic,
    /// Straight ramp; tolerates much larger amplitudes when inverting the
    /// smoother.
    Linear,
}

#[derive(Debug, Clone)]
pub struct SynthSpec {
    pub n_sites: usize,
    pub n_years: usize,
    pub start_year: i32,
    pub true_model: TrueModel,
    /// Precipitation kind the generator targets (the storm-block layout).
    pub covariate: CovariateName,
    /// Smoothed covariate range: rises from `lo` to `lo * (1 + amplitude)`.
    pub precip_lo_mm: f64,
    pub amplitude: f64,
    pub shape: CovariateShape,
    /// Gumbel scale as a fraction of the mid-record location.
    pub sigma_ratio: f64,
    /// Location at the covariate midpoint, m^3/s.
    pub mu_mid: f64,
    /// Land-use intensity range over the record (Gc sites).
    pub li_range: (f64, f64),
    /// Reservoir-index step height (Gr sites; one dam mid-record).
    pub ri_step: f64,
    pub loess_span: usize,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            n_sites: 1,
            n_years: 60,
            start_year: 1961,
            true_model: TrueModel::G0,
            covariate: CovariateName::MaxP1,
            precip_lo_mm: 30.0,
            amplitude: 0.5,
            shape: CovariateShape::Logistic,
            sigma_ratio: 0.2,
            mu_mid: 60.0,
            li_range: (0.05, 0.25),
            ri_step: 0.15,
            loess_span: 10,
            seed: 0,
        }
    }
}

/// Smooth logistic rise from `lo` to `hi` over `n` points.
fn logistic_rise(n: usize, lo: f64, hi: f64) -> Vec<f64> {
    let mid = (n as f64 - 1.0) / 2.0;
    let width = n as f64 / 8.0;
    (0..n)
        .map(|i| {
            let t = (i as f64 - mid) / width;
            lo + (hi - lo) / (1.0 + (-t).exp())
        })
        .collect()
}

fn affine(n: usize, lo: f64, hi: f64) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n as f64 - 1.0))
        .collect()
}

/// Generate the synthetic sites described by `spec`. Deterministic: a fixed
/// spec yields bit-identical records.
pub fn generate_sites(spec: &SynthSpec) -> Result<Vec<SiteRecord>, PipelineError> {
    if spec.n_years < spec.loess_span.max(10) {
        return Err(PipelineError::Synth(format!(
            "n_years = {} is too short (need at least {})",
            spec.n_years,
            spec.loess_span.max(10)
        )));
    }
    let storm_days = match spec.covariate {
        CovariateName::MaxP1 => 1usize,
        CovariateName::MaxP7 => 7,
        CovariateName::MaxP30 => 30,
        CovariateName::AnnualTotalP => 0, // spread over the whole year
        other => {
            return Err(PipelineError::Synth(format!(
                "covariate {other:?} is not a precipitation kind"
            )))
        }
    };

    let mut sites = Vec::with_capacity(spec.n_sites);
    for site_idx in 0..spec.n_sites {
        let mut rng = Rng::stream(spec.seed, site_idx as u64);
        let site_id = format!("syn{:02}", site_idx + 1);
        let area_km2 = 120.0 + 35.0 * site_idx as f64;
        let elevation_m = 380.0 + 15.0 * site_idx as f64;
        let flow_volume = 250.0 + 40.0 * site_idx as f64;
        let n = spec.n_years;

        // Raw annual precipitation extremes follow the requested shape; the
        // model covariate is their smoothed series.
        if spec.precip_lo_mm.is_nan() || spec.precip_lo_mm <= 0.0 || spec.amplitude <= -1.0 {
            return Err(PipelineError::Synth(
                "infeasible covariate shape: negative precipitation required".into(),
            ));
        }
        let precip_hi = spec.precip_lo_mm * (1.0 + spec.amplitude);
        let raw = match spec.shape {
            CovariateShape::Logistic => logistic_rise(n, spec.precip_lo_mm, precip_hi),
            CovariateShape::Linear => affine(n, spec.precip_lo_mm, precip_hi),
        };
        let smoothed_precip = loess_values(&raw, spec.loess_span)
            .map_err(|e| PipelineError::Synth(format!("smoothing: {e}")))?;

        // Daily precipitation: one storm block per year.
        let mut daily = Vec::new();
        for (i, &r) in raw.iter().enumerate() {
            let year = spec.start_year + i as i32;
            let len = days_in_year(year) as usize;
            let mut days = vec![0.0f64; len];
            if storm_days == 0 {
                let per_day = r / len as f64;
                for d in days.iter_mut() {
                    *d = per_day;
                }
            } else {
                let latest = len - storm_days;
                let start = 120 + rng.below((latest - 120) as u64) as usize;
                let per_day = r / storm_days as f64;
                for d in days.iter_mut().skip(start).take(storm_days) {
                    *d = per_day;
                }
            }
            daily.extend(days);
        }
        let daily = DailySeries::new(spec.start_year, daily)
            .map_err(|e| PipelineError::Synth(format!("daily series: {e}")))?;

        // Land-use cells (Gc sites get the configured LI ramp, others none).
        let (crop_cells, li_series) = match spec.true_model {
            TrueModel::Gc { .. } => {
                let (li0, li1) = spec.li_range;
                let share = 0.4;
                let y_ref = 8.72;
                // LI(y) = share * Y(y) / y_ref with Y affine in the year.
                let li = affine(n, li0, li1);
                let base_idx = (2000 - spec.start_year) as f64;
                let slope = (li1 - li0) / (n as f64 - 1.0);
                let li_at_base = li0 + slope * base_idx;
                let yield_base = li_at_base * y_ref / share;
                let yield_trend = slope * y_ref / share;
                let end_year = spec.start_year + n as i32 - 1;
                let y_at = |year: i32| yield_base + yield_trend * (year - 2000) as f64;
                if yield_base < 0.0 || y_at(spec.start_year) < 0.0 || y_at(end_year) < 0.0 {
                    return Err(PipelineError::Synth(
                        "infeasible land-use range: negative yield inside the record".into(),
                    ));
                }
                let cells = vec![CropCell {
                    crop_area_km2: share * area_km2,
                    yield_base,
                    yield_trend,
                }];
                (cells, li)
            }
            _ => (Vec::new(), vec![0.0; n]),
        };

        // Reservoir (Gr sites get one dam mid-record).
        let (reservoirs, ri_series) = match spec.true_model {
            TrueModel::Gr { .. } => {
                let built = spec.start_year + n as i32 / 2;
                let drainage = 0.45 * area_km2;
                let capacity = spec.ri_step * flow_volume / 0.45;
                let dams = vec![ReservoirRecord {
                    year_built: built,
                    capacity_1e6m3: capacity,
                    drainage_area_km2: drainage,
                }];
                let ri: Vec<f64> = (0..n)
                    .map(|i| {
                        if spec.start_year + i as i32 >= built {
                            spec.ri_step
                        } else {
                            0.0
                        }
                    })
                    .collect();
                (dams, ri)
            }
            _ => (Vec::new(), vec![0.0; n]),
        };

        // Location series from the true model.
        let (b, predictor): (f64, Vec<f64>) = match spec.true_model {
            TrueModel::G0 => (0.0, vec![0.0; n]),
            TrueModel::Ga { b } => (b, smoothed_precip.iter().map(|&x| x.ln()).collect()),
            TrueModel::Gc { b } => (b, li_series.clone()),
            TrueModel::Gr { b } => (b, ri_series.clone()),
        };
        let pred_mid = floodattr_core::stats::mean(&predictor);
        let a = spec.mu_mid.ln() - b * pred_mid;
        let sigma = spec.sigma_ratio * spec.mu_mid;

        let mut am_values = Vec::with_capacity(n);
        for c in &predictor {
            let mu = (a + b * c).exp();
            let params = GumbelParams::new(mu, sigma)
                .map_err(|e| PipelineError::Synth(format!("gumbel params: {e}")))?;
            let mut z = params.sample(&mut rng);
            // Gumbel support is the whole line; discharges must be positive.
            let mut guard = 0;
            while z <= 0.0 && guard < 1000 {
                z = params.sample(&mut rng);
                guard += 1;
            }
            if z <= 0.0 {
                return Err(PipelineError::Synth(
                    "could not draw a positive discharge; sigma_ratio too large".into(),
                ));
            }
            am_values.push(z);
        }
        let am = AnnualMaxSeries::new(spec.start_year, am_values)
            .map_err(|e| PipelineError::Synth(format!("annual maxima: {e}")))?;

        let flood_dates: Vec<FloodDate> = (0..n)
            .map(|i| FloodDate {
                year: spec.start_year + i as i32,
                day_of_year: 140 + rng.below(90) as u32,
            })
            .collect();

        sites.push(SiteRecord {
            site_id,
            area_km2,
            elevation_m,
            mean_annual_flow_volume_1e6m3: flow_volume,
            am,
            daily_precip: Some(daily),
            crop_cells,
            reservoirs,
            flood_dates,
        });
    }
    Ok(sites)
}

/// Write sites as a data directory in the ingestion format.
pub fn write_data_dir(sites: &[SiteRecord], dir: &Path) -> Result<(), PipelineError> {
    std::fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
    let write = |name: &str, content: String| -> Result<(), PipelineError> {
        let path = dir.join(name);
        std::fs::write(&path, content).map_err(|e| PipelineError::io(&path, e))
    };

    let mut sites_csv = String::from("site_id,area_km2,elevation_m,mean_annual_flow_volume_1e6m3\n");
    let mut am_csv = String::from("site_id,year,discharge_m3s\n");
    let mut precip_csv = String::from("site_id,date,precip_mm\n");
    let mut crops_csv =
        String::from("site_id,cell_id,crop_area_km2,yield2000_t_ha,yield_trend_t_ha_yr\n");
    let mut res_csv = String::from("site_id,year_built,capacity_1e6m3,drainage_area_km2\n");
    let mut dates_csv = String::from("site_id,year,day_of_year\n");

    for site in sites {
        sites_csv.push_str(&format!(
            "{},{},{},{}\n",
            site.site_id, site.area_km2, site.elevation_m, site.mean_annual_flow_volume_1e6m3
        ));
        for (year, &q) in site.am.years().zip(site.am.values()) {
            am_csv.push_str(&format!("{},{},{}\n", site.site_id, year, q));
        }
        if let Some(daily) = &site.daily_precip {
            let mut idx = 0usize;
            let mut year = daily.start_year();
            let values = daily.values();
            while idx < values.len() {
                let len = days_in_year(year);
                for day in 1..=len {
                    let (m, d) = month_day(year, day);
                    precip_csv.push_str(&format!(
                        "{},{year}-{m:02}-{d:02},{}\n",
                        site.site_id,
                        values[idx]
                    ));
                    idx += 1;
                }
                year += 1;
            }
        }
        for (i, cell) in site.crop_cells.iter().enumerate() {
            crops_csv.push_str(&format!(
                "{},{},{},{},{}\n",
                site.site_id,
                i + 1,
                cell.crop_area_km2,
                cell.yield_base,
                cell.yield_trend
            ));
        }
        for dam in &site.reservoirs {
            res_csv.push_str(&format!(
                "{},{},{},{}\n",
                site.site_id, dam.year_built, dam.capacity_1e6m3, dam.drainage_area_km2
            ));
        }
        for d in &site.flood_dates {
            dates_csv.push_str(&format!("{},{},{}\n", site.site_id, d.year, d.day_of_year));
        }
    }

    write(crate::ingest::SITES_FILE, sites_csv)?;
    write(crate::ingest::AM_FILE, am_csv)?;
    write(crate::ingest::PRECIP_FILE, precip_csv)?;
    write(crate::ingest::CROPS_FILE, crops_csv)?;
    write(crate::ingest::RESERVOIRS_FILE, res_csv)?;
    write(crate::ingest::FLOOD_DATES_FILE, dates_csv)?;
    Ok(())
}

fn month_day(year: i32, day_of_year: u32) -> (u32, u32) {
    let mut remaining = day_of_year;
    for month in 1..=12 {
        let dim = floodattr_core::calendar::days_in_month(year, month);
        if remaining <= dim {
            return (month, remaining);
        }
        remaining -= dim;
    }
    (12, 31)
}
