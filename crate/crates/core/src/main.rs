use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nfdlab::pipeline::{self, OutputDir};
use nfdlab::synthlab::{demo_study, write_study, SynthScenario};
use nfdlab::{Error, Result, StudyConfig};
use serde::Deserialize;

#[derive(Parser)]
#[command(name = "nfdlab", version, about = "Network fundamental diagrams from loop-detector data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct StudyArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides resampling.seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    occupancy_percent: bool,
    /// Restrict to a zone; repeatable.
    #[arg(long = "zone")]
    zones: Vec<String>,
    #[arg(long)]
    states_dump: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Parse measurements and report coverage.
    Ingest(StudyArgs),
    /// Match detectors to ways and zones.
    Match(StudyArgs),
    /// Derive the effective vehicle length s.
    Calibrate(StudyArgs),
    /// Envelopes and metrics per zone and period.
    Estimate(StudyArgs),
    /// Compare metrics written by a previous estimate.
    Compare(StudyArgs),
    /// Generate a synthetic study.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// TOML file with one [[periods]] table per synthetic period.
        #[arg(long)]
        scenario: Option<PathBuf>,
    },
    /// Full pipeline with report and manifest.
    Run(StudyArgs),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SynthFile {
    periods: Vec<SynthScenario>,
}

fn load(args: &StudyArgs) -> Result<StudyConfig> {
    let mut cfg = StudyConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.resampling.seed = seed;
    }
    if let Some(out) = &args.out {
        let cwd = std::env::current_dir().map_err(|e| Error::io(".", e))?;
        cfg.output_dir = cwd.join(out);
    }
    cfg.occupancy_percent |= args.occupancy_percent;
    cfg.states_dump |= args.states_dump;
    if !args.zones.is_empty() {
        cfg.zone_filter = args.zones.clone();
    }
    Ok(cfg)
}

fn report(out: &OutputDir) {
    for f in out.written() {
        println!("{}", out.root().join(f).display());
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest(a) => report(&pipeline::run_ingest(&load(&a)?)?),
        Command::Match(a) => report(&pipeline::run_match(&load(&a)?)?),
        Command::Calibrate(a) => {
            let (out, c) = pipeline::run_calibrate(&load(&a)?)?;
            report(&out);
            println!("s = {} km", c.s_km);
        }
        Command::Estimate(a) => report(&pipeline::run_estimate(&load(&a)?)?.0),
        Command::Compare(a) => report(&pipeline::run_compare(&load(&a)?)?.0),
        Command::Run(a) => {
            let (out, result) = pipeline::run_pipeline(&load(&a)?)?;
            print!("{}", pipeline::render_summary(&result.report));
            log::info!("{} files written to {}", out.written().count(), out.root().display());
        }
        Command::Synth { out, seed, scenario } => {
            let scenarios = match scenario {
                Some(path) => {
                    let text = std::fs::read_to_string(&path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
                    toml::from_str::<SynthFile>(&text)
                        .map_err(|e| Error::Config(format!("{}: {}", path.display(), e.message())))?
                        .periods
                }
                None => demo_study(seed),
            };
            write_study(&scenarios, &out, seed)?;
            println!("{}", out.join("study.toml").display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("NFDLAB_LOG", "warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 1 })
        }
    }
}
