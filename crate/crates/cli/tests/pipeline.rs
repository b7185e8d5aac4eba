//! Integration tests for ingestion validation and the per-site runner.

use floodattr_cli::config::{CovariateName, PriorMode, RunConfig};
use floodattr_cli::ingest::ingest;
use floodattr_cli::runner::{run_all, run_site};
use floodattr_cli::synth::{generate_sites, write_data_dir, SynthSpec, TrueModel};
use std::path::PathBuf;

struct TempDir(PathBuf);

impl TempDir {
    fn new(tag: &str) -> Self {
        let dir = std::env::temp_dir().join(format!(
            "floodattr-test-{tag}-{}",
            std::process::id()
        ));
        let _ = std::fs::remove_dir_all(&dir);
        std::fs::create_dir_all(&dir).unwrap();
        TempDir(dir)
    }

    fn path(&self) -> &PathBuf {
        &self.0
    }
}

impl Drop for TempDir {
    fn drop(&mut self) {
        let _ = std::fs::remove_dir_all(&self.0);
    }
}

fn quick_config() -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.sampler.chains = 2;
    cfg.sampler.iterations = 800;
    cfg.sampler.warmup = 300;
    cfg.min_record_years = 40;
    cfg
}

fn write_valid_fixture(dir: &PathBuf) {
    let spec = SynthSpec {
        n_sites: 2,
        n_years: 45,
        seed: 5,
        true_model: TrueModel::Ga { b: 0.61 },
        ..SynthSpec::default()
    };
    let sites = generate_sites(&spec).unwrap();
    write_data_dir(&sites, dir).unwrap();
}

#[test]
fn well_formed_fixture_ingests_two_sites() {
    let dir = TempDir::new("ok");
    write_valid_fixture(dir.path());
    let sites = ingest(dir.path(), &quick_config()).unwrap();
    assert_eq!(sites.len(), 2);
    assert_eq!(sites[0].site_id, "syn01");
    assert!(sites[0].daily_precip.is_some());
}

#[test]
fn duplicated_year_is_named_in_the_error() {
    let dir = TempDir::new("dup-year");
    write_valid_fixture(dir.path());
    let am_path = dir.path().join("am_series.csv");
    let mut text = std::fs::read_to_string(&am_path).unwrap();
    text.push_str("syn01,1975,99.0\n");
    std::fs::write(&am_path, text).unwrap();
    let err = ingest(dir.path(), &quick_config()).unwrap_err().to_string();
    assert!(err.contains("am_series.csv"), "{err}");
    assert!(err.contains("1975"), "{err}");
    assert!(err.contains("duplicate"), "{err}");
}

#[test]
fn missing_precipitation_day_is_named() {
    let dir = TempDir::new("gap-day");
    write_valid_fixture(dir.path());
    let path = dir.path().join("daily_precip.csv");
    let text = std::fs::read_to_string(&path).unwrap();
    // Drop the line for 1970-03-05 of syn01.
    let filtered: Vec<&str> = text
        .lines()
        .filter(|l| !l.starts_with("syn01,1970-03-05,"))
        .collect();
    std::fs::write(&path, filtered.join("\n") + "\n").unwrap();
    let err = ingest(dir.path(), &quick_config()).unwrap_err().to_string();
    assert!(err.contains("daily_precip.csv"), "{err}");
    assert!(err.contains("1970-03-05"), "{err}");
}

#[test]
fn nonpositive_discharge_rejected() {
    let dir = TempDir::new("bad-q");
    write_valid_fixture(dir.path());
    let am_path = dir.path().join("am_series.csv");
    let text = std::fs::read_to_string(&am_path)
        .unwrap()
        .replace("syn02,1980,", "syn02,1980,-1.0 #")
        .lines()
        .map(|l| {
            if l.starts_with("syn02,1980,") {
                "syn02,1980,0".to_string()
            } else {
                l.to_string()
            }
        })
        .collect::<Vec<_>>()
        .join("\n");
    std::fs::write(&am_path, text + "\n").unwrap();
    let err = ingest(dir.path(), &quick_config()).unwrap_err().to_string();
    assert!(err.contains("discharge"), "{err}");
}

#[test]
fn year_gap_is_rejected() {
    let dir = TempDir::new("gap-year");
    write_valid_fixture(dir.path());
    let am_path = dir.path().join("am_series.csv");
    let text = std::fs::read_to_string(&am_path).unwrap();
    let filtered: Vec<&str> = text
        .lines()
        .filter(|l| !l.starts_with("syn01,1990,"))
        .collect();
    std::fs::write(&am_path, filtered.join("\n") + "\n").unwrap();
    let err = ingest(dir.path(), &quick_config()).unwrap_err().to_string();
    assert!(err.contains("gap"), "{err}");
    assert!(err.contains("1990") || err.contains("1989"), "{err}");
}

#[test]
fn record_shorter_than_minimum_rejected() {
    let dir = TempDir::new("short");
    let spec = SynthSpec {
        n_sites: 1,
        n_years: 30,
        seed: 5,
        ..SynthSpec::default()
    };
    let sites = generate_sites(&spec).unwrap();
    write_data_dir(&sites, dir.path()).unwrap();
    let err = ingest(dir.path(), &quick_config()).unwrap_err().to_string();
    assert!(err.contains("minimum record length"), "{err}");

    // A permissive config accepts the same directory.
    let mut cfg = quick_config();
    cfg.min_record_years = 20;
    assert!(ingest(dir.path(), &cfg).is_ok());
}

#[test]
fn g0_waic_identical_across_prior_modes() {
    let spec = SynthSpec {
        n_sites: 1,
        n_years: 50,
        seed: 33,
        true_model: TrueModel::Ga { b: 0.61 },
        ..SynthSpec::default()
    };
    let sites = generate_sites(&spec).unwrap();
    let mut informative = quick_config();
    informative.covariates = vec![CovariateName::MaxP1];
    let mut flat = informative.clone();
    flat.prior_mode = PriorMode::Flat;

    let r1 = run_site(&sites[0], &informative).unwrap();
    let r2 = run_site(&sites[0], &flat).unwrap();
    let g0 = |r: &floodattr_cli::runner::SiteResult| {
        r.models.iter().find(|m| m.model == "g0").unwrap().waic
    };
    assert_eq!(g0(&r1).to_bits(), g0(&r2).to_bits());
}

#[test]
fn no_site_silently_dropped() {
    // One healthy site and one whose covariate coverage is too short to fit:
    // results + failures must account for every ingested site.
    let spec = SynthSpec {
        n_sites: 2,
        n_years: 45,
        seed: 9,
        ..SynthSpec::default()
    };
    let mut sites = generate_sites(&spec).unwrap();
    // Truncate the second site's precipitation to 5 years.
    let daily = sites[1].daily_precip.take().unwrap();
    let five_years: Vec<f64> = daily
        .values()
        .iter()
        .copied()
        .take((0..5).map(|i| floodattr_core::calendar::days_in_year(1961 + i) as usize).sum())
        .collect();
    sites[1].daily_precip =
        Some(floodattr_core::covariates::DailySeries::new(1961, five_years).unwrap());

    let mut cfg = quick_config();
    cfg.covariates = vec![CovariateName::MaxP1];
    let out = run_all(&sites, &cfg, 2);
    assert_eq!(out.results.len() + out.failures.len(), 2);
    assert_eq!(out.results.len(), 1);
    assert_eq!(out.failures[0].site_id, "syn02");
    assert!(out.failures[0].reason.contains("aligned observations"));
}

#[test]
fn results_independent_of_site_processing_order() {
    let spec = SynthSpec {
        n_sites: 3,
        n_years: 45,
        seed: 14,
        true_model: TrueModel::Ga { b: 0.61 },
        ..SynthSpec::default()
    };
    let sites = generate_sites(&spec).unwrap();
    let mut cfg = quick_config();
    cfg.covariates = vec![CovariateName::MaxP1];

    let forward = run_all(&sites, &cfg, 1);
    let mut reversed_sites = sites.clone();
    reversed_sites.reverse();
    let reversed = run_all(&reversed_sites, &cfg, 3);

    let mut r1: Vec<_> = forward.results.iter().map(|r| (r.site_id.clone(), r.attribution.selected.clone(), r.models[0].waic)).collect();
    let mut r2: Vec<_> = reversed.results.iter().map(|r| (r.site_id.clone(), r.attribution.selected.clone(), r.models[0].waic)).collect();
    r1.sort_by(|a, b| a.0.cmp(&b.0));
    r2.sort_by(|a, b| a.0.cmp(&b.0));
    assert_eq!(r1.len(), r2.len());
    for (a, b) in r1.iter().zip(&r2) {
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
        assert_eq!(a.2.to_bits(), b.2.to_bits());
    }
}

#[test]
fn complexity_penalty_controls_flat_prior_overfitting() {
    // Data simulated from the time-invariant model, fitted with a flat slope
    // prior: the driver-informed candidate's WAIC must stay above the
    // time-invariant WAIC minus the threshold in at least 90% of seeds.
    let spec = SynthSpec {
        n_sites: 20,
        n_years: 60,
        seed: 90_000,
        true_model: TrueModel::G0,
        ..SynthSpec::default()
    };
    let sites = generate_sites(&spec).unwrap();
    let mut cfg = quick_config();
    cfg.covariates = vec![CovariateName::MaxP1];
    cfg.prior_mode = PriorMode::Flat;
    let out = run_all(&sites, &cfg, 2);
    assert!(out.failures.is_empty(), "{:?}", out.failures);
    let held = out
        .results
        .iter()
        .filter(|r| r.attribution.selected == "time_invariant")
        .count();
    assert!(held >= 18, "time-invariant held in only {held}/20 flat-prior fits");
}

#[test]
fn reservoir_free_site_reports_ri_like_g0() {
    // With no reservoirs the RI covariate is identically zero; under the
    // informative prior it converges and its WAIC sits near the
    // time-invariant model's.
    let spec = SynthSpec {
        n_sites: 1,
        n_years: 50,
        seed: 77,
        true_model: TrueModel::G0,
        ..SynthSpec::default()
    };
    let sites = generate_sites(&spec).unwrap();
    let mut cfg = quick_config();
    cfg.covariates = vec![CovariateName::ReservoirIndex];
    let r = run_site(&sites[0], &cfg).unwrap();
    let g0 = r.models.iter().find(|m| m.model == "g0").unwrap();
    let gr = r
        .models
        .iter()
        .find(|m| m.model == "gr_reservoir_index")
        .unwrap();
    assert!(gr.converged);
    assert!(
        (gr.waic - g0.waic).abs() < 2.0,
        "gr {} vs g0 {}",
        gr.waic,
        g0.waic
    );
    assert_eq!(r.attribution.selected, "time_invariant");
}

#[test]
fn requested_precipitation_without_data_file_is_an_error() {
    let dir = TempDir::new("no-precip");
    write_valid_fixture(dir.path());
    std::fs::remove_file(dir.path().join("daily_precip.csv")).unwrap();

    // Default config requests precipitation covariates.
    let err = ingest(dir.path(), &quick_config()).unwrap_err().to_string();
    assert!(err.contains("daily_precip.csv"), "{err}");

    // Without precipitation covariates the directory is fine.
    let mut cfg = quick_config();
    cfg.covariates = vec![CovariateName::LandUseIntensity, CovariateName::ReservoirIndex];
    assert!(ingest(dir.path(), &cfg).is_ok());
}
