//! Per-site orchestration: covariates, fits, WAIC, attribution, trend
//! statistics.
//!
//! One fit window per site is used for every model so that WAIC values are
//! comparable: the annual-maximum years from the configured start year that
//! are covered by every requested covariate. Precipitation series are
//! smoothed over their full record before the window is cut, so edge effects
//! do not depend on the window.
//!
//! Sites are independent; a work pool may process them concurrently. Every
//! sampler seed is derived from (master seed, site id, model), so results are
//! identical whatever the thread count or completion order. The time-invariant
//! model's seed does not involve the prior mode, keeping its fit (and WAIC)
//! bit-identical between flat and informative runs.

use crate::config::{PriorMode, RunConfig};
use crate::ingest::SiteRecord;
use floodattr_core::attribution::{attribute, Driver, Selection};
use floodattr_core::covariates::{
    annual_max_precip, annual_total_precip, land_use_series, loess_smooth, reservoir_series,
    CovariateKind, CovariateSeries,
};
use floodattr_core::diagnostics::diagnose;
use floodattr_core::link::LinkForm;
use floodattr_core::posterior::FitProblem;
use floodattr_core::prior::SlopePrior;
use floodattr_core::sampler::sample;
use floodattr_core::stats;
use floodattr_core::trend::{mann_kendall, ols_log_trend, seasonality};
use floodattr_core::waic::waic;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

/// Minimum aligned observations a fit window must have.
const MIN_FIT_YEARS: usize = 10;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParamSummary {
    pub mean: f64,
    pub sd: f64,
    pub q025: f64,
    pub q50: f64,
    pub q975: f64,
}

impl From<stats::Summary> for ParamSummary {
    fn from(s: stats::Summary) -> Self {
        Self {
            mean: s.mean,
            sd: s.sd,
            q025: s.q025,
            q50: s.q50,
            q975: s.q975,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DensityGrid {
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelResult {
    /// Stable tag: `g0`, `ga_annual_total_p`, `ga_max_p30`, `ga_max_p7`,
    /// `ga_max_p1`, `gc_land_use_intensity`, `gr_reservoir_index`.
    pub model: String,
    pub driver: Option<String>,
    pub covariate: Option<String>,
    pub waic: f64,
    pub lppd: f64,
    pub p_waic: f64,
    pub waic_se: f64,
    pub converged: bool,
    pub improper_prior: bool,
    pub max_rhat: Option<f64>,
    pub min_ess: Option<f64>,
    pub divergences: usize,
    pub accept_rate: f64,
    pub params: BTreeMap<String, ParamSummary>,
    /// Posterior density of the slope on a fixed grid (driver models only).
    pub b_density: Option<DensityGrid>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CandidateEntry {
    pub model: String,
    pub driver: String,
    pub waic: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AttributionSummary {
    pub selected: String,
    /// WAIC improvement of the best candidate over the time-invariant model.
    pub margin: f64,
    pub threshold: f64,
    pub candidates: Vec<CandidateEntry>,
    /// Models left out of the comparison for failed convergence.
    pub excluded: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrendSummary {
    pub slope_pct_per_year: f64,
    pub ci95_lo: f64,
    pub ci95_hi: f64,
    pub start_year: i32,
    pub n: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MkSummary {
    pub s_statistic: i64,
    pub z: f64,
    pub significant: bool,
    pub significant_upward: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeasonalitySummary {
    pub mean_day: f64,
    pub concentration_r: f64,
    pub n_dates: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SiteResult {
    pub site_id: String,
    pub area_km2: f64,
    pub elevation_m: f64,
    pub fit_start_year: i32,
    pub fit_end_year: i32,
    pub n_years_fit: usize,
    pub prior_mode: String,
    pub models: Vec<ModelResult>,
    pub attribution: AttributionSummary,
    pub trend: TrendSummary,
    pub mann_kendall: MkSummary,
    pub seasonality: Option<SeasonalitySummary>,
    pub warnings: Vec<String>,
}

/// A site the pipeline could not process; always reported, never dropped.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SiteFailure {
    pub site_id: String,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub results: Vec<SiteResult>,
    pub failures: Vec<SiteFailure>,
}

/// FNV-1a, for stable site-id hashing in seed derivation.
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn model_seed(master: u64, site_id: &str, model_index: u64) -> u64 {
    let mut sm = floodattr_core::rng::SplitMix64::new(master ^ fnv1a(site_id.as_bytes()));
    let base = sm.next_u64();
    base ^ model_index.wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

struct Candidate {
    tag: String,
    kind: CovariateKind,
    driver: Driver,
    link: LinkForm,
    series: CovariateSeries,
    seed_index: u64,
}

fn covariate_meta(kind: CovariateKind) -> (&'static str, Driver, LinkForm, u64) {
    match kind {
        CovariateKind::AnnualTotalP => ("ga_annual_total_p", Driver::Atmospheric, LinkForm::LogLog, 1),
        CovariateKind::MaxP30 => ("ga_max_p30", Driver::Atmospheric, LinkForm::LogLog, 2),
        CovariateKind::MaxP7 => ("ga_max_p7", Driver::Atmospheric, LinkForm::LogLog, 3),
        CovariateKind::MaxP1 => ("ga_max_p1", Driver::Atmospheric, LinkForm::LogLog, 4),
        CovariateKind::LandUseIntensity => {
            ("gc_land_use_intensity", Driver::Catchment, LinkForm::LogLinear, 5)
        }
        CovariateKind::ReservoirIndex => {
            ("gr_reservoir_index", Driver::RiverSystem, LinkForm::LogLinear, 6)
        }
    }
}

/// Build one covariate series for a site over `[start_year, end_year]`.
/// Precipitation kinds are smoothed over the full daily record first.
fn build_covariate(
    site: &SiteRecord,
    cfg: &RunConfig,
    kind: CovariateKind,
    start_year: i32,
    end_year: i32,
    warnings: &mut Vec<String>,
) -> Result<Option<CovariateSeries>, String> {
    if kind.is_precipitation() {
        let daily = match &site.daily_precip {
            Some(d) => d,
            None => return Ok(None),
        };
        let raw = match kind.precip_duration() {
            Some(d) => annual_max_precip(daily, d),
            None => annual_total_precip(daily),
        }
        .map_err(|e| format!("{}: {e}", kind.name()))?;
        let smoothed = loess_smooth(&raw, cfg.loess_span)
            .map_err(|e| format!("{} smoothing: {e}", kind.name()))?;
        Ok(smoothed.window(start_year, end_year))
    } else if kind == CovariateKind::LandUseIntensity {
        let n = (end_year - start_year + 1) as usize;
        let (series, clamped) = land_use_series(
            &site.crop_cells,
            site.area_km2,
            cfg.y_ref_t_ha,
            start_year,
            n,
            cfg.yield_base_year,
        )
        .map_err(|e| format!("land_use_intensity: {e}"))?;
        if clamped > 0 {
            warnings.push(format!(
                "land_use_intensity: {clamped} extrapolated yields clamped at zero"
            ));
        }
        Ok(Some(series))
    } else {
        let n = (end_year - start_year + 1) as usize;
        let series = reservoir_series(
            &site.reservoirs,
            start_year,
            n,
            site.area_km2,
            site.mean_annual_flow_volume_1e6m3,
        )
        .map_err(|e| format!("reservoir_index: {e}"))?;
        Ok(Some(series))
    }
}

/// Run the whole analysis for one site.
pub fn run_site(site: &SiteRecord, cfg: &RunConfig) -> Result<SiteResult, SiteFailure> {
    let fail = |reason: String| SiteFailure {
        site_id: site.site_id.clone(),
        reason,
    };
    let mut warnings = Vec::new();

    // The common fit window: AM years from start_year, clipped to the daily
    // precipitation coverage when precipitation covariates are requested.
    let mut fit_start = site.am.start_year().max(cfg.start_year);
    let mut fit_end = site.am.end_year();
    let wants_precip = cfg
        .covariates
        .iter()
        .any(|c| c.to_kind().is_precipitation());
    if wants_precip {
        if let Some(daily) = &site.daily_precip {
            let p_start = daily.start_year();
            let p_end = daily.start_year() + daily.n_years() as i32 - 1;
            fit_start = fit_start.max(p_start);
            fit_end = fit_end.min(p_end);
        }
    }
    if site.am.start_year() < fit_start || site.am.end_year() > fit_end {
        warnings.push(format!(
            "annual maxima outside {fit_start}..={fit_end} dropped from fits (covariate coverage)"
        ));
    }
    let am_fit = site
        .am
        .window(fit_start, fit_end)
        .ok_or_else(|| fail("no annual maxima within the covariate-covered window".into()))?;
    if am_fit.len() < MIN_FIT_YEARS {
        return Err(fail(format!(
            "only {} aligned observations in {}..={}, need at least {MIN_FIT_YEARS}",
            am_fit.len(),
            fit_start,
            fit_end
        )));
    }

    // Candidate covariates.
    let mut candidates: Vec<Candidate> = Vec::new();
    for name in &cfg.covariates {
        let kind = name.to_kind();
        let (tag, driver, link, seed_index) = covariate_meta(kind);
        match build_covariate(site, cfg, kind, fit_start, fit_end, &mut warnings)
            .map_err(&fail)?
        {
            Some(series) if series.start_year() <= fit_start && series.end_year() >= fit_end => {
                let series = series
                    .window(fit_start, fit_end)
                    .expect("window verified nonempty");
                candidates.push(Candidate {
                    tag: tag.to_string(),
                    kind,
                    driver,
                    link,
                    series,
                    seed_index,
                });
            }
            Some(_) => {
                warnings.push(format!("{}: does not cover the fit window, skipped", kind.name()));
            }
            None => {
                warnings.push(format!(
                    "{}: no daily precipitation for this site, skipped",
                    kind.name()
                ));
            }
        }
    }

    // Time-invariant fit. Its seed ignores the prior mode so flat and
    // informative runs share the identical G0 fit.
    let g0_problem = FitProblem::new(&am_fit, None, LinkForm::TimeInvariant, SlopePrior::Flat)
        .map_err(|e| fail(format!("g0: {e}")))?;
    let g0_cfg = cfg
        .sampler
        .to_config(model_seed(cfg.seed, &site.site_id, 0));
    let g0_draws = sample(&g0_problem, &g0_cfg).map_err(|e| fail(format!("g0: {e}")))?;
    let g0_diag = diagnose(&g0_draws).map_err(|e| fail(format!("g0: {e}")))?;
    let g0_waic = waic(&g0_draws, &g0_problem).map_err(|e| fail(format!("g0: {e}")))?;

    let mut models = Vec::new();
    models.push(summarize_model(
        "g0".to_string(),
        None,
        None,
        &g0_draws,
        &g0_diag,
        &g0_waic,
    ));

    // Driver-informed fits.
    let mut waic_by_tag: BTreeMap<String, (Driver, f64, bool)> = BTreeMap::new();
    for cand in &candidates {
        let prior = cfg.slope_prior_for(cand.kind);
        let problem = FitProblem::new(&am_fit, Some(&cand.series), cand.link, prior)
            .map_err(|e| fail(format!("{}: {e}", cand.tag)))?;
        let s_cfg = cfg
            .sampler
            .to_config(model_seed(cfg.seed, &site.site_id, cand.seed_index));
        let (result, converged_waic) = match sample(&problem, &s_cfg) {
            Ok(draws) => {
                let diag = diagnose(&draws).map_err(|e| fail(format!("{}: {e}", cand.tag)))?;
                let report = waic(&draws, &problem).map_err(|e| fail(format!("{}: {e}", cand.tag)))?;
                let m = summarize_model(
                    cand.tag.clone(),
                    Some(cand.driver),
                    Some(cand.kind),
                    &draws,
                    &diag,
                    &report,
                );
                let cw = (cand.driver, report.waic, m.converged);
                (m, cw)
            }
            Err(e) => {
                warnings.push(format!("{}: sampler failed: {e}", cand.tag));
                let m = ModelResult {
                    model: cand.tag.clone(),
                    driver: Some(cand.driver.name().to_string()),
                    covariate: Some(cand.kind.name().to_string()),
                    waic: f64::NAN,
                    lppd: f64::NAN,
                    p_waic: f64::NAN,
                    waic_se: f64::NAN,
                    converged: false,
                    improper_prior: cfg.prior_mode == PriorMode::Flat,
                    max_rhat: None,
                    min_ess: None,
                    divergences: 0,
                    accept_rate: 0.0,
                    params: BTreeMap::new(),
                    b_density: None,
                };
                (m, (cand.driver, f64::NAN, false))
            }
        };
        waic_by_tag.insert(cand.tag.clone(), converged_waic);
        models.push(result);
    }

    // Attribution: one candidate per driver; the atmospheric slot is the
    // configured precipitation time scale. Non-converged fits are excluded.
    let attribution_precip_tag = covariate_meta(cfg.attribution_precip.to_kind()).0;
    let mut table: Vec<(Driver, f64)> = Vec::new();
    let mut entries: Vec<CandidateEntry> = Vec::new();
    let mut excluded: Vec<String> = Vec::new();
    for (tag, &(driver, w, converged)) in &waic_by_tag {
        let in_comparison = match driver {
            Driver::Atmospheric => tag == attribution_precip_tag,
            _ => true,
        };
        if !in_comparison {
            continue;
        }
        if converged {
            table.push((driver, w));
            entries.push(CandidateEntry {
                model: tag.clone(),
                driver: driver.name().to_string(),
                waic: w,
            });
        } else {
            excluded.push(tag.clone());
        }
    }
    table.sort_by_key(|&(d, _)| d);
    entries.sort_by(|a, b| a.driver.cmp(&b.driver));

    let attribution = if table.is_empty() {
        warnings.push("no converged driver-informed candidate; time-invariant by default".into());
        AttributionSummary {
            selected: Selection::TimeInvariant.name().to_string(),
            margin: 0.0,
            threshold: cfg.waic_threshold,
            candidates: entries,
            excluded,
        }
    } else {
        let decision = attribute(g0_waic.waic, &table, cfg.waic_threshold)
            .map_err(|e| fail(format!("attribution: {e}")))?;
        AttributionSummary {
            selected: decision.selected.name().to_string(),
            margin: decision.margin,
            threshold: decision.threshold,
            candidates: entries,
            excluded,
        }
    };

    // Trend statistics on the AM record from the common start year.
    let trend = ols_log_trend(&site.am, cfg.start_year)
        .map_err(|e| fail(format!("trend: {e}")))?;
    let trend_window = site
        .am
        .window(cfg.start_year, i32::MAX)
        .expect("trend succeeded, window nonempty");
    let mk = mann_kendall(&trend_window, 0.05).map_err(|e| fail(format!("mann-kendall: {e}")))?;

    let season_dates: Vec<_> = site
        .flood_dates
        .iter()
        .filter(|d| d.year >= cfg.start_year)
        .copied()
        .collect();
    let seasonality_summary = if season_dates.is_empty() {
        None
    } else {
        let s = seasonality(&season_dates).map_err(|e| fail(format!("seasonality: {e}")))?;
        Some(SeasonalitySummary {
            mean_day: s.mean_day,
            concentration_r: s.concentration_r,
            n_dates: season_dates.len(),
        })
    };

    Ok(SiteResult {
        site_id: site.site_id.clone(),
        area_km2: site.area_km2,
        elevation_m: site.elevation_m,
        fit_start_year: fit_start,
        fit_end_year: fit_end,
        n_years_fit: am_fit.len(),
        prior_mode: match cfg.prior_mode {
            PriorMode::Informative => "informative".to_string(),
            PriorMode::Flat => "flat".to_string(),
        },
        models,
        attribution,
        trend: TrendSummary {
            slope_pct_per_year: trend.slope_pct_per_year,
            ci95_lo: trend.ci95.0,
            ci95_hi: trend.ci95.1,
            start_year: trend.start_year,
            n: trend.n,
        },
        mann_kendall: MkSummary {
            s_statistic: mk.s_statistic,
            z: mk.z,
            significant: mk.significant,
            significant_upward: mk.significant_upward,
        },
        seasonality: seasonality_summary,
        warnings,
    })
}

fn summarize_model(
    tag: String,
    driver: Option<Driver>,
    kind: Option<CovariateKind>,
    draws: &floodattr_core::sampler::PosteriorDraws,
    diag: &floodattr_core::diagnostics::Diagnostics,
    report: &floodattr_core::waic::WaicReport,
) -> ModelResult {
    let mut params = BTreeMap::new();
    params.insert(
        "a".to_string(),
        ParamSummary::from(stats::summarize(&draws.pooled(|t| t.a))),
    );
    params.insert(
        "sigma".to_string(),
        ParamSummary::from(stats::summarize(&draws.pooled(|t| t.sigma()))),
    );
    let b_density = if draws.has_slope() {
        let bs = draws.pooled(|t| t.b.unwrap());
        params.insert(
            "b".to_string(),
            ParamSummary::from(stats::summarize(&bs)),
        );
        let (grid, density) = stats::kde_grid(&bs, 101);
        Some(DensityGrid { grid, density })
    } else {
        None
    };
    let accept_rate = draws.stats.iter().map(|s| s.accept_rate).sum::<f64>()
        / draws.stats.len() as f64;
    ModelResult {
        model: tag,
        driver: driver.map(|d| d.name().to_string()),
        covariate: kind.map(|k| k.name().to_string()),
        waic: report.waic,
        lppd: report.lppd,
        p_waic: report.p_waic,
        waic_se: report.se,
        converged: diag.pass,
        improper_prior: draws.improper_prior,
        max_rhat: diag.max_rhat(),
        min_ess: diag.min_ess(),
        divergences: diag.divergences,
        accept_rate,
        params,
        b_density,
    }
}

/// Process all sites with a simple index-claiming work pool. Results come
/// back in input (site-id) order whatever the scheduling.
pub fn run_all(sites: &[SiteRecord], cfg: &RunConfig, threads: usize) -> RunOutput {
    let threads = if threads == 0 {
        std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1)
    } else {
        threads
    }
    .min(sites.len().max(1));

    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<Result<SiteResult, SiteFailure>>>> =
        sites.iter().map(|_| Mutex::new(None)).collect();

    std::thread::scope(|scope| {
        for _ in 0..threads {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= sites.len() {
                    break;
                }
                let outcome = run_site(&sites[i], cfg);
                *slots[i].lock().expect("no poisoned locks") = Some(outcome);
            });
        }
    });

    let mut results = Vec::new();
    let mut failures = Vec::new();
    for slot in slots {
        match slot.into_inner().expect("no poisoned locks").expect("all slots filled") {
            Ok(r) => results.push(r),
            Err(f) => failures.push(f),
        }
    }
    RunOutput { results, failures }
}
