//! Machine-readable outputs.
//!
//! `run` (and `report`, from stored results) writes:
//!
//! - `site_results.jsonl`: one JSON record per site after a schema header
//!   line; the full per-model WAIC table, posterior summaries, attribution,
//!   trend/MK/seasonality and warnings
//! - `failures.tsv`: hard-failed sites with reasons (never silently dropped)
//! - `occurrence.tsv`: attribution x trend-significance contingency counts
//! - `trend_vs_area.tsv`: per-site trend with confidence bounds, catchment
//!   area and selection, for the trend-vs-area plot
//! - `posterior_b.tsv`: long-format slope posterior density grids
//! - `seasonality.tsv`: per-site mean flood date and concentration, polar
//!   plot ready
//!
//! Output rows are sorted by site id; every float is written through the
//! shortest-roundtrip formatter, so identical runs give byte-identical files.

use crate::error::PipelineError;
use crate::runner::{SiteFailure, SiteResult};
use std::fmt::Write as _;
use std::path::Path;

pub const RESULTS_FILE: &str = "site_results.jsonl";
pub const FAILURES_FILE: &str = "failures.tsv";
pub const OCCURRENCE_FILE: &str = "occurrence.tsv";
pub const TREND_FILE: &str = "trend_vs_area.tsv";
pub const POSTERIOR_B_FILE: &str = "posterior_b.tsv";
pub const SEASONALITY_FILE: &str = "seasonality.tsv";

const RESULTS_SCHEMA: &str =
    "{\"schema\":\"floodattr.site_result\",\"version\":1}";

/// Write the full report set to `out_dir`.
pub fn write_reports(
    results: &[SiteResult],
    failures: &[SiteFailure],
    out_dir: &Path,
) -> Result<(), PipelineError> {
    if results.is_empty() {
        return Err(PipelineError::Report(
            "refusing to write a report for an empty result set".into(),
        ));
    }
    std::fs::create_dir_all(out_dir).map_err(|e| PipelineError::io(out_dir, e))?;

    let mut sorted: Vec<&SiteResult> = results.iter().collect();
    sorted.sort_by(|a, b| a.site_id.cmp(&b.site_id));
    let mut sorted_failures: Vec<&SiteFailure> = failures.iter().collect();
    sorted_failures.sort_by(|a, b| a.site_id.cmp(&b.site_id));

    let write = |name: &str, content: String| -> Result<(), PipelineError> {
        let path = out_dir.join(name);
        std::fs::write(&path, content).map_err(|e| PipelineError::io(&path, e))
    };

    // Per-site records.
    let mut jsonl = String::new();
    jsonl.push_str(RESULTS_SCHEMA);
    jsonl.push('\n');
    for site in &sorted {
        let line = serde_json::to_string(site)
            .map_err(|e| PipelineError::Report(format!("serialize {}: {e}", site.site_id)))?;
        jsonl.push_str(&line);
        jsonl.push('\n');
    }
    write(RESULTS_FILE, jsonl)?;

    // Hard failures.
    let mut fail_tsv = String::from("#floodattr.failures v1\nsite_id\treason\n");
    for f in &sorted_failures {
        writeln!(fail_tsv, "{}\t{}", f.site_id, f.reason).expect("string write");
    }
    write(FAILURES_FILE, fail_tsv)?;

    write(OCCURRENCE_FILE, occurrence_table(&sorted))?;

    // Trend vs catchment area.
    let mut trend = String::from(
        "#floodattr.trend_vs_area v1\nsite_id\tarea_km2\tslope_pct_per_year\tci95_lo\tci95_hi\tmk_significant_upward\tselected\n",
    );
    for site in &sorted {
        writeln!(
            trend,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            site.site_id,
            site.area_km2,
            site.trend.slope_pct_per_year,
            site.trend.ci95_lo,
            site.trend.ci95_hi,
            site.mann_kendall.significant_upward,
            site.attribution.selected
        )
        .expect("string write");
    }
    write(TREND_FILE, trend)?;

    // Slope posterior density grids.
    let mut dens = String::from("#floodattr.posterior_b v1\nsite_id\tmodel\tb\tdensity\n");
    for site in &sorted {
        for model in &site.models {
            if let Some(grid) = &model.b_density {
                for (b, d) in grid.grid.iter().zip(&grid.density) {
                    writeln!(dens, "{}\t{}\t{}\t{}", site.site_id, model.model, b, d)
                        .expect("string write");
                }
            }
        }
    }
    write(POSTERIOR_B_FILE, dens)?;

    // Seasonality polar coordinates.
    let mut season = String::from(
        "#floodattr.seasonality v1\nsite_id\tmean_day\tconcentration_r\tarea_km2\tselected\tmk_significant_upward\n",
    );
    for site in &sorted {
        if let Some(s) = &site.seasonality {
            writeln!(
                season,
                "{}\t{}\t{}\t{}\t{}\t{}",
                site.site_id,
                s.mean_day,
                s.concentration_r,
                site.area_km2,
                site.attribution.selected,
                site.mann_kendall.significant_upward
            )
            .expect("string write");
        }
    }
    write(SEASONALITY_FILE, season)?;

    Ok(())
}

/// Attribution × Mann-Kendall significance contingency counts.
fn occurrence_table(sorted: &[&SiteResult]) -> String {
    let selections = ["time_invariant", "atmospheric", "catchment", "river_system"];
    let mut counts = [[0usize; 2]; 4];
    for site in sorted {
        let row = selections
            .iter()
            .position(|&s| s == site.attribution.selected)
            .unwrap_or(0);
        let col = if site.mann_kendall.significant_upward {
            0
        } else {
            1
        };
        counts[row][col] += 1;
    }
    let mut out = String::from(
        "#floodattr.occurrence v1\nselection\tsignificant_upward\tnot_significant\ttotal\n",
    );
    for (i, name) in selections.iter().enumerate() {
        writeln!(
            out,
            "{name}\t{}\t{}\t{}",
            counts[i][0],
            counts[i][1],
            counts[i][0] + counts[i][1]
        )
        .expect("string write");
    }
    out
}

/// Read a `site_results.jsonl` back for the `report` subcommand.
pub fn read_results(path: &Path) -> Result<Vec<SiteResult>, PipelineError> {
    let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
    let mut lines = text.lines();
    match lines.next() {
        Some(header) if header == RESULTS_SCHEMA => {}
        Some(other) => {
            return Err(PipelineError::Report(format!(
                "unexpected schema header: {other}"
            )))
        }
        None => return Err(PipelineError::Report("empty results file".into())),
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let site: SiteResult = serde_json::from_str(line).map_err(|e| {
            PipelineError::Report(format!("{}:{}: {e}", path.display(), i + 2))
        })?;
        out.push(site);
    }
    if out.is_empty() {
        return Err(PipelineError::Report("results file has no records".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runner::{AttributionSummary, MkSummary, TrendSummary};

    fn minimal_site(id: &str, selected: &str, upward: bool) -> SiteResult {
        SiteResult {
            site_id: id.to_string(),
            area_km2: 100.0,
            elevation_m: 400.0,
            fit_start_year: 1961,
            fit_end_year: 2010,
            n_years_fit: 50,
            prior_mode: "informative".to_string(),
            models: Vec::new(),
            attribution: AttributionSummary {
                selected: selected.to_string(),
                margin: 0.0,
                threshold: 2.0,
                candidates: Vec::new(),
                excluded: Vec::new(),
            },
            trend: TrendSummary {
                slope_pct_per_year: 0.5,
                ci95_lo: 0.1,
                ci95_hi: 0.9,
                start_year: 1961,
                n: 50,
            },
            mann_kendall: MkSummary {
                s_statistic: 100,
                z: 2.5,
                significant: upward,
                significant_upward: upward,
            },
            seasonality: None,
            warnings: Vec::new(),
        }
    }

    #[test]
    fn occurrence_increments_exactly_the_observed_cells() {
        let a = minimal_site("s1", "atmospheric", true);
        let b = minimal_site("s2", "time_invariant", false);
        let table = occurrence_table(&[&a, &b]);
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines[2], "time_invariant\t0\t1\t1");
        assert_eq!(lines[3], "atmospheric\t1\t0\t1");
        assert_eq!(lines[4], "catchment\t0\t0\t0");
        assert_eq!(lines[5], "river_system\t0\t0\t0");
    }

    #[test]
    fn empty_result_set_is_refused() {
        let dir = std::env::temp_dir().join(format!("floodattr-report-{}", std::process::id()));
        let err = write_reports(&[], &[], &dir).unwrap_err();
        assert!(err.to_string().contains("empty result set"));
    }
}
