use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use floodattr_cli::config::{CovariateName, PriorMode, RunConfig};
use floodattr_cli::synth::{generate_sites, write_data_dir, SynthSpec, TrueModel};
use floodattr_cli::{ingest, report, runner};
use std::path::PathBuf;

/// Attribution of decadal flood-peak changes to atmospheric, catchment and
/// river-system drivers.
#[derive(Parser)]
#[command(name = "floodattr", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Run configuration (TOML); defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the prior mode (informative|flat).
    #[arg(long)]
    prior_mode: Option<String>,
}

impl ConfigArgs {
    fn load(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(mode) = &self.prior_mode {
            cfg.prior_mode = match mode.as_str() {
                "informative" => PriorMode::Informative,
                "flat" => PriorMode::Flat,
                other => bail!("unknown prior mode \"{other}\" (informative|flat)"),
            };
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Validate a data directory and print a summary.
    IngestCheck {
        #[arg(long)]
        data_dir: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Run the full attribution analysis and write reports.
    Run {
        #[arg(long)]
        data_dir: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Worker threads (0 = all available).
        #[arg(long)]
        threads: Option<usize>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Generate seeded synthetic sites in the ingestion format.
    Synth {
        #[arg(long)]
        out_dir: PathBuf,
        /// Number of sites.
        #[arg(long, default_value_t = 5)]
        sites: usize,
        /// Record length in years.
        #[arg(long, default_value_t = 60)]
        years: usize,
        /// First record year.
        #[arg(long, default_value_t = 1961)]
        start_year: i32,
        /// Generating model: g0|ga|gc|gr.
        #[arg(long, default_value = "g0")]
        true_model: String,
        /// Slope of the generating model (ignored for g0).
        #[arg(long, default_value_t = 0.61)]
        slope: f64,
        /// Precipitation kind for the storm layout.
        #[arg(long, default_value = "max_p1")]
        covariate: String,
        /// Relative rise of the smoothed covariate over the record.
        #[arg(long, default_value_t = 0.5)]
        amplitude: f64,
        /// Gumbel scale as a fraction of the mid-record location.
        #[arg(long, default_value_t = 0.2)]
        sigma_ratio: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Rebuild the aggregate/plot files from stored site results.
    Report {
        /// A site_results.jsonl produced by `run`.
        #[arg(long)]
        results: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

fn parse_covariate(name: &str) -> Result<CovariateName> {
    Ok(match name {
        "annual_total_p" => CovariateName::AnnualTotalP,
        "max_p30" => CovariateName::MaxP30,
        "max_p7" => CovariateName::MaxP7,
        "max_p1" => CovariateName::MaxP1,
        other => bail!("unknown precipitation covariate \"{other}\""),
    })
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::IngestCheck { data_dir, config } => {
            let cfg = config.load()?;
            let sites = ingest(&data_dir, &cfg)
                .with_context(|| format!("validating {}", data_dir.display()))?;
            println!("ok: {} sites", sites.len());
            for site in &sites {
                println!(
                    "  {} area={} km^2 am={}..={} ({} years) precip={} crops={} reservoirs={} dates={}",
                    site.site_id,
                    site.area_km2,
                    site.am.start_year(),
                    site.am.end_year(),
                    site.am.len(),
                    site.daily_precip
                        .as_ref()
                        .map(|d| format!("{} years", d.n_years()))
                        .unwrap_or_else(|| "none".into()),
                    site.crop_cells.len(),
                    site.reservoirs.len(),
                    site.flood_dates.len(),
                )
            }
        }
        Command::Run {
            data_dir,
            out_dir,
            threads,
            config,
        } => {
            let mut cfg = config.load()?;
            if let Some(t) = threads {
                cfg.threads = t;
            }
            let sites = ingest(&data_dir, &cfg)
                .with_context(|| format!("validating {}", data_dir.display()))?;
            let output = runner::run_all(&sites, &cfg, cfg.threads);
            eprintln!(
                "processed {} sites: {} ok, {} failed",
                sites.len(),
                output.results.len(),
                output.failures.len()
            );
            for f in &output.failures {
                eprintln!("  failed {}: {}", f.site_id, f.reason);
            }
            report::write_reports(&output.results, &output.failures, &out_dir)?;
            println!("reports written to {}", out_dir.display());
        }
        Command::Synth {
            out_dir,
            sites,
            years,
            start_year,
            true_model,
            slope,
            covariate,
            amplitude,
            sigma_ratio,
            seed,
        } => {
            let model = match true_model.as_str() {
                "g0" => TrueModel::G0,
                "ga" => TrueModel::Ga { b: slope },
                "gc" => TrueModel::Gc { b: slope },
                "gr" => TrueModel::Gr { b: slope },
                other => bail!("unknown true model \"{other}\" (g0|ga|gc|gr)"),
            };
            let spec = SynthSpec {
                n_sites: sites,
                n_years: years,
                start_year,
                true_model: model,
                covariate: parse_covariate(&covariate)?,
                amplitude,
                sigma_ratio,
                seed,
                ..SynthSpec::default()
            };
            let generated = generate_sites(&spec)?;
            write_data_dir(&generated, &out_dir)?;
            println!(
                "wrote {} synthetic sites ({} years each) to {}",
                generated.len(),
                years,
                out_dir.display()
            );
        }
        Command::Report { results, out_dir } => {
            let site_results = report::read_results(&results)?;
            report::write_reports(&site_results, &[], &out_dir)?;
            println!("reports written to {}", out_dir.display());
        }
    }
    Ok(())
}
