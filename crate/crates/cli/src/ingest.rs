//! Data directory ingestion with hard validation.
//!
//! All inputs are comma-separated UTF-8 text with a header row:
//!
//! - `sites.csv`: site_id, area_km2, elevation_m, mean_annual_flow_volume_1e6m3
//! - `am_series.csv`: site_id, year, discharge_m3s
//! - `daily_precip.csv`: site_id, date (ISO-8601), precip_mm (optional file)
//! - `crop_cells.csv`: site_id, cell_id, crop_area_km2, yield2000_t_ha,
//!   yield_trend_t_ha_yr (optional)
//! - `reservoirs.csv`: site_id, year_built, capacity_1e6m3, drainage_area_km2
//!   (optional)
//! - `flood_dates.csv`: site_id, year, day_of_year (optional)
//!
//! Gaps, duplicate years, nonpositive discharges, missing days and malformed
//! fields are hard errors naming the file, line and rule.

use crate::config::RunConfig;
use crate::error::PipelineError;
use floodattr_core::calendar::{day_of_year, days_in_year};
use floodattr_core::covariates::{CropCell, DailySeries, ReservoirRecord};
use floodattr_core::series::AnnualMaxSeries;
use floodattr_core::trend::FloodDate;
use std::collections::BTreeMap;
use std::path::Path;

pub const SITES_FILE: &str = "sites.csv";
pub const AM_FILE: &str = "am_series.csv";
pub const PRECIP_FILE: &str = "daily_precip.csv";
pub const CROPS_FILE: &str = "crop_cells.csv";
pub const RESERVOIRS_FILE: &str = "reservoirs.csv";
pub const FLOOD_DATES_FILE: &str = "flood_dates.csv";

/// Everything known about one gauge after validation.
#[derive(Debug, Clone)]
pub struct SiteRecord {
    pub site_id: String,
    pub area_km2: f64,
    pub elevation_m: f64,
    pub mean_annual_flow_volume_1e6m3: f64,
    pub am: AnnualMaxSeries,
    pub daily_precip: Option<DailySeries>,
    pub crop_cells: Vec<CropCell>,
    pub reservoirs: Vec<ReservoirRecord>,
    pub flood_dates: Vec<FloodDate>,
}

struct Row {
    line: usize,
    fields: Vec<String>,
}

fn read_table(
    dir: &Path,
    name: &str,
    header: &[&str],
    required: bool,
) -> Result<Option<Vec<Row>>, PipelineError> {
    let path = dir.join(name);
    if !path.exists() {
        if required {
            return Err(PipelineError::MissingFile(path));
        }
        return Ok(None);
    }
    let text = std::fs::read_to_string(&path).map_err(|e| PipelineError::io(&path, e))?;
    let mut rows = Vec::new();
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, first)) => {
            let got: Vec<&str> = first.split(',').map(str::trim).collect();
            if got != header {
                return Err(PipelineError::invalid(
                    name,
                    1,
                    format!("header must be \"{}\", got \"{first}\"", header.join(",")),
                ));
            }
        }
        None => {
            return Err(PipelineError::invalid(name, 1, "file is empty"));
        }
    }
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<String> = line.split(',').map(|f| f.trim().to_string()).collect();
        if fields.len() != header.len() {
            return Err(PipelineError::invalid(
                name,
                idx + 1,
                format!("expected {} fields, got {}", header.len(), fields.len()),
            ));
        }
        rows.push(Row {
            line: idx + 1,
            fields,
        });
    }
    Ok(Some(rows))
}

fn parse_f64(file: &str, line: usize, field: &str, value: &str) -> Result<f64, PipelineError> {
    value.parse::<f64>().map_err(|_| {
        PipelineError::invalid(file, line, format!("{field} must be a number, got \"{value}\""))
    })
}

fn parse_i64(file: &str, line: usize, field: &str, value: &str) -> Result<i64, PipelineError> {
    value.parse::<i64>().map_err(|_| {
        PipelineError::invalid(file, line, format!("{field} must be an integer, got \"{value}\""))
    })
}

fn parse_date(file: &str, line: usize, value: &str) -> Result<(i32, u32, u32), PipelineError> {
    let bad = || {
        PipelineError::invalid(
            file,
            line,
            format!("date must be ISO-8601 YYYY-MM-DD, got \"{value}\""),
        )
    };
    let parts: Vec<&str> = value.split('-').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let year: i32 = parts[0].parse().map_err(|_| bad())?;
    let month: u32 = parts[1].parse().map_err(|_| bad())?;
    let day: u32 = parts[2].parse().map_err(|_| bad())?;
    if day_of_year(year, month, day).is_none() {
        return Err(PipelineError::invalid(
            file,
            line,
            format!("\"{value}\" is not a valid calendar date"),
        ));
    }
    Ok((year, month, day))
}

/// Read and validate a data directory into per-site records, sorted by
/// site id.
pub fn ingest(dir: &Path, cfg: &RunConfig) -> Result<Vec<SiteRecord>, PipelineError> {
    let sites_rows = read_table(
        dir,
        SITES_FILE,
        &[
            "site_id",
            "area_km2",
            "elevation_m",
            "mean_annual_flow_volume_1e6m3",
        ],
        true,
    )?
    .expect("required");

    struct Meta {
        line: usize,
        area: f64,
        elevation: f64,
        flow_volume: f64,
    }
    let mut metas: BTreeMap<String, Meta> = BTreeMap::new();
    for row in &sites_rows {
        let id = row.fields[0].clone();
        if id.is_empty() {
            return Err(PipelineError::invalid(
                SITES_FILE,
                row.line,
                "site_id must not be empty",
            ));
        }
        if metas.contains_key(&id) {
            return Err(PipelineError::invalid(
                SITES_FILE,
                row.line,
                format!("duplicate site_id \"{id}\""),
            ));
        }
        let area = parse_f64(SITES_FILE, row.line, "area_km2", &row.fields[1])?;
        let elevation = parse_f64(SITES_FILE, row.line, "elevation_m", &row.fields[2])?;
        let flow_volume = parse_f64(
            SITES_FILE,
            row.line,
            "mean_annual_flow_volume_1e6m3",
            &row.fields[3],
        )?;
        if area <= 0.0 {
            return Err(PipelineError::invalid(
                SITES_FILE,
                row.line,
                format!("area_km2 must be > 0, got {area}"),
            ));
        }
        if flow_volume <= 0.0 {
            return Err(PipelineError::invalid(
                SITES_FILE,
                row.line,
                format!("mean_annual_flow_volume_1e6m3 must be > 0, got {flow_volume}"),
            ));
        }
        metas.insert(
            id,
            Meta {
                line: row.line,
                area,
                elevation,
                flow_volume,
            },
        );
    }

    // Annual maxima: per site, years must be unique, contiguous, discharges
    // positive.
    let am_rows = read_table(dir, AM_FILE, &["site_id", "year", "discharge_m3s"], true)?
        .expect("required");
    let mut am_by_site: BTreeMap<String, BTreeMap<i32, (usize, f64)>> = BTreeMap::new();
    for row in &am_rows {
        let id = row.fields[0].clone();
        if !metas.contains_key(&id) {
            return Err(PipelineError::invalid(
                AM_FILE,
                row.line,
                format!("site_id \"{id}\" not present in {SITES_FILE}"),
            ));
        }
        let year = parse_i64(AM_FILE, row.line, "year", &row.fields[1])? as i32;
        let q = parse_f64(AM_FILE, row.line, "discharge_m3s", &row.fields[2])?;
        if !q.is_finite() || q <= 0.0 {
            return Err(PipelineError::invalid(
                AM_FILE,
                row.line,
                format!("discharge_m3s must be finite and > 0, got {q}"),
            ));
        }
        let site_map = am_by_site.entry(id.clone()).or_default();
        if site_map.insert(year, (row.line, q)).is_some() {
            return Err(PipelineError::invalid(
                AM_FILE,
                row.line,
                format!("duplicate year {year} for site \"{id}\""),
            ));
        }
    }

    let mut am_series: BTreeMap<String, AnnualMaxSeries> = BTreeMap::new();
    for (id, years) in &am_by_site {
        let mut prev: Option<i32> = None;
        for (&year, &(line, _)) in years {
            if let Some(p) = prev {
                if year != p + 1 {
                    return Err(PipelineError::invalid(
                        AM_FILE,
                        line,
                        format!("site \"{id}\" has a gap between years {p} and {year}"),
                    ));
                }
            }
            prev = Some(year);
        }
        let start = *years.keys().next().expect("nonempty");
        let values: Vec<f64> = years.values().map(|&(_, q)| q).collect();
        if values.len() < cfg.min_record_years {
            return Err(PipelineError::invalid(
                AM_FILE,
                years.values().next().expect("nonempty").0,
                format!(
                    "site \"{id}\" has {} annual maxima, below the minimum record length {}",
                    values.len(),
                    cfg.min_record_years
                ),
            ));
        }
        let series = AnnualMaxSeries::new(start, values)
            .map_err(|e| PipelineError::invalid(AM_FILE, 0, e.to_string()))?;
        am_series.insert(id.clone(), series);
    }
    for id in metas.keys() {
        if !am_series.contains_key(id) {
            return Err(PipelineError::invalid(
                SITES_FILE,
                metas[id].line,
                format!("site \"{id}\" has no annual maximum series in {AM_FILE}"),
            ));
        }
    }

    // Daily precipitation: contiguous days, whole calendar years. The file
    // is required whenever the config asks for a precipitation covariate.
    let precip_required = cfg
        .covariates
        .iter()
        .any(|c| c.to_kind().is_precipitation());
    let mut precip_by_site: BTreeMap<String, DailySeries> = BTreeMap::new();
    if let Some(rows) = read_table(
        dir,
        PRECIP_FILE,
        &["site_id", "date", "precip_mm"],
        precip_required,
    )? {
        struct Acc {
            start: (i32, u32, u32),
            prev: (i32, u32, u32),
            prev_line: usize,
            values: Vec<f64>,
        }
        let mut acc: BTreeMap<String, Acc> = BTreeMap::new();
        for row in &rows {
            let id = row.fields[0].clone();
            if !metas.contains_key(&id) {
                return Err(PipelineError::invalid(
                    PRECIP_FILE,
                    row.line,
                    format!("site_id \"{id}\" not present in {SITES_FILE}"),
                ));
            }
            let date = parse_date(PRECIP_FILE, row.line, &row.fields[1])?;
            let mm = parse_f64(PRECIP_FILE, row.line, "precip_mm", &row.fields[2])?;
            if !mm.is_finite() || mm < 0.0 {
                return Err(PipelineError::invalid(
                    PRECIP_FILE,
                    row.line,
                    format!("precip_mm must be finite and >= 0, got {mm}"),
                ));
            }
            match acc.get_mut(&id) {
                None => {
                    if (date.1, date.2) != (1, 1) {
                        return Err(PipelineError::invalid(
                            PRECIP_FILE,
                            row.line,
                            format!(
                                "site \"{id}\" precipitation must start on January 1, got {}-{:02}-{:02}",
                                date.0, date.1, date.2
                            ),
                        ));
                    }
                    acc.insert(
                        id,
                        Acc {
                            start: date,
                            prev: date,
                            prev_line: row.line,
                            values: vec![mm],
                        },
                    );
                }
                Some(a) => {
                    let expected = next_day(a.prev);
                    if date != expected {
                        return Err(PipelineError::invalid(
                            PRECIP_FILE,
                            row.line,
                            format!(
                                "site \"{id}\" is missing day {}-{:02}-{:02}",
                                expected.0, expected.1, expected.2
                            ),
                        ));
                    }
                    a.prev = date;
                    a.prev_line = row.line;
                    a.values.push(mm);
                }
            }
        }
        for (id, a) in acc {
            if (a.prev.1, a.prev.2) != (12, 31) {
                return Err(PipelineError::invalid(
                    PRECIP_FILE,
                    a.prev_line,
                    format!(
                        "site \"{id}\" precipitation must end on December 31, last day is {}-{:02}-{:02}",
                        a.prev.0, a.prev.1, a.prev.2
                    ),
                ));
            }
            let series = DailySeries::new(a.start.0, a.values)
                .map_err(|e| PipelineError::invalid(PRECIP_FILE, a.prev_line, e.to_string()))?;
            precip_by_site.insert(id, series);
        }
    }

    // Crop cells.
    let mut crops_by_site: BTreeMap<String, Vec<CropCell>> = BTreeMap::new();
    if let Some(rows) = read_table(
        dir,
        CROPS_FILE,
        &[
            "site_id",
            "cell_id",
            "crop_area_km2",
            "yield2000_t_ha",
            "yield_trend_t_ha_yr",
        ],
        false,
    )? {
        for row in &rows {
            let id = row.fields[0].clone();
            if !metas.contains_key(&id) {
                return Err(PipelineError::invalid(
                    CROPS_FILE,
                    row.line,
                    format!("site_id \"{id}\" not present in {SITES_FILE}"),
                ));
            }
            let area = parse_f64(CROPS_FILE, row.line, "crop_area_km2", &row.fields[2])?;
            let y2000 = parse_f64(CROPS_FILE, row.line, "yield2000_t_ha", &row.fields[3])?;
            let trend = parse_f64(CROPS_FILE, row.line, "yield_trend_t_ha_yr", &row.fields[4])?;
            if area < 0.0 || y2000 < 0.0 {
                return Err(PipelineError::invalid(
                    CROPS_FILE,
                    row.line,
                    "crop_area_km2 and yield2000_t_ha must be >= 0",
                ));
            }
            crops_by_site.entry(id).or_default().push(CropCell {
                crop_area_km2: area,
                yield_base: y2000,
                yield_trend: trend,
            });
        }
    }

    // Reservoirs.
    let mut reservoirs_by_site: BTreeMap<String, Vec<ReservoirRecord>> = BTreeMap::new();
    if let Some(rows) = read_table(
        dir,
        RESERVOIRS_FILE,
        &["site_id", "year_built", "capacity_1e6m3", "drainage_area_km2"],
        false,
    )? {
        for row in &rows {
            let id = row.fields[0].clone();
            let meta = metas.get(&id).ok_or_else(|| {
                PipelineError::invalid(
                    RESERVOIRS_FILE,
                    row.line,
                    format!("site_id \"{id}\" not present in {SITES_FILE}"),
                )
            })?;
            let year = parse_i64(RESERVOIRS_FILE, row.line, "year_built", &row.fields[1])? as i32;
            let capacity = parse_f64(RESERVOIRS_FILE, row.line, "capacity_1e6m3", &row.fields[2])?;
            let drainage =
                parse_f64(RESERVOIRS_FILE, row.line, "drainage_area_km2", &row.fields[3])?;
            if capacity <= 0.0 || drainage <= 0.0 {
                return Err(PipelineError::invalid(
                    RESERVOIRS_FILE,
                    row.line,
                    "capacity_1e6m3 and drainage_area_km2 must be > 0",
                ));
            }
            if drainage > meta.area {
                return Err(PipelineError::invalid(
                    RESERVOIRS_FILE,
                    row.line,
                    format!(
                        "reservoir drainage area {drainage} km^2 exceeds catchment area {} km^2 of site \"{id}\"",
                        meta.area
                    ),
                ));
            }
            reservoirs_by_site.entry(id).or_default().push(ReservoirRecord {
                year_built: year,
                capacity_1e6m3: capacity,
                drainage_area_km2: drainage,
            });
        }
    }

    // Flood dates.
    let mut dates_by_site: BTreeMap<String, Vec<FloodDate>> = BTreeMap::new();
    if let Some(rows) = read_table(dir, FLOOD_DATES_FILE, &["site_id", "year", "day_of_year"], false)? {
        for row in &rows {
            let id = row.fields[0].clone();
            if !metas.contains_key(&id) {
                return Err(PipelineError::invalid(
                    FLOOD_DATES_FILE,
                    row.line,
                    format!("site_id \"{id}\" not present in {SITES_FILE}"),
                ));
            }
            let year = parse_i64(FLOOD_DATES_FILE, row.line, "year", &row.fields[1])? as i32;
            let day = parse_i64(FLOOD_DATES_FILE, row.line, "day_of_year", &row.fields[2])?;
            if day < 1 || day > days_in_year(year) as i64 {
                return Err(PipelineError::invalid(
                    FLOOD_DATES_FILE,
                    row.line,
                    format!("day_of_year {day} is out of range for year {year}"),
                ));
            }
            dates_by_site.entry(id).or_default().push(FloodDate {
                year,
                day_of_year: day as u32,
            });
        }
    }

    let mut records = Vec::with_capacity(metas.len());
    for (id, meta) in metas {
        records.push(SiteRecord {
            am: am_series.remove(&id).expect("validated above"),
            daily_precip: precip_by_site.remove(&id),
            crop_cells: crops_by_site.remove(&id).unwrap_or_default(),
            reservoirs: reservoirs_by_site.remove(&id).unwrap_or_default(),
            flood_dates: dates_by_site.remove(&id).unwrap_or_default(),
            site_id: id,
            area_km2: meta.area,
            elevation_m: meta.elevation,
            mean_annual_flow_volume_1e6m3: meta.flow_volume,
        });
    }
    Ok(records)
}

fn next_day(d: (i32, u32, u32)) -> (i32, u32, u32) {
    let (y, m, day) = d;
    if day < floodattr_core::calendar::days_in_month(y, m) {
        (y, m, day + 1)
    } else if m < 12 {
        (y, m + 1, 1)
    } else {
        (y + 1, 1, 1)
    }
}
