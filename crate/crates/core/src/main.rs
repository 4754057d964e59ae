//! Command-line entry point: run named experiments, certify the spectrum,
//! fit stored series, and verify manifests.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use nsac_lab::cli::{
    key_documentation, read_series_csv, run_catalog, run_experiment, verify_manifest,
    ExperimentConfig, RunManifest,
};
use nsac_lab::decay::{fit_rate, FitMode};
use nsac_lab::error::Error;

#[derive(Parser)]
#[command(
    name = "nsac-lab",
    version,
    about = "Numerical laboratory for the 1-D compressible Navier-Stokes/Allen-Cahn system",
    after_help = config_help()
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

fn config_help() -> String {
    format!("Configuration keys (file, NSAC_LAB_* environment, or --set):\n{}", key_documentation())
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Flat key=value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override a configuration key (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker budget for experiment batches.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Seed of the counter-based noise generator.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a nonlinear simulation experiment
    /// (nsac-decay, parabolic-decay, energy-lyapunov).
    Simulate {
        /// Experiment name.
        name: Option<String>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run the exact linear-evolution experiment (linear-decay).
    Linear {
        name: Option<String>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run spectral certification (spectrum-certify, green-diff).
    Spectrum {
        name: Option<String>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run full-vs-parabolic comparison (difference-decay, lp-decay).
    Compare {
        name: Option<String>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Fit a stored series file and print the report.
    Fit {
        /// Path to a series CSV emitted by an experiment.
        series: PathBuf,
        /// Fit model: algebraic | exponential.
        #[arg(long, default_value = "algebraic")]
        mode: String,
        /// Fit window as "t0,t1".
        #[arg(long)]
        window: String,
    },
    /// Run the full experiment catalog and report pass/fail per experiment.
    Verify {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Recompute the checksums listed in a run manifest.
    VerifyManifest {
        manifest: PathBuf,
    },
}

fn parse_overrides(common: &CommonArgs) -> Result<Vec<(String, String)>, Error> {
    let mut overrides = Vec::new();
    for item in &common.set {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| Error::Usage(format!("--set expects KEY=VALUE, got '{item}'")))?;
        overrides.push((k.trim().to_string(), v.trim().to_string()));
    }
    if let Some(out) = &common.out {
        overrides.push(("out_dir".into(), out.display().to_string()));
    }
    if let Some(workers) = common.workers {
        overrides.push(("workers".into(), workers.to_string()));
    }
    if let Some(seed) = common.seed {
        overrides.push(("seed".into(), seed.to_string()));
    }
    Ok(overrides)
}

fn family_config(
    common: &CommonArgs,
    name: Option<&str>,
    family: &[&str],
) -> Result<ExperimentConfig, Error> {
    let chosen = name.unwrap_or(family[0]);
    if !family.contains(&chosen) {
        return Err(Error::Usage(format!(
            "experiment '{chosen}' does not belong here; choose one of: {}",
            family.join(", ")
        )));
    }
    let mut overrides = vec![("experiment".to_string(), chosen.to_string())];
    overrides.extend(parse_overrides(common)?);
    ExperimentConfig::load(common.config.as_deref(), &overrides)
}

fn print_manifest_summary(m: &RunManifest) {
    println!(
        "experiment {} -> {}  ({} reports, {} checks, {} files)",
        m.experiment,
        if m.passed { "PASS" } else { "FAIL" },
        m.reports.len(),
        m.checks.len(),
        m.files.len()
    );
    for r in &m.reports {
        println!(
            "  {} {} l={} fitted {:+.4} (target {:+.4}, stderr {:.1e}) -> {}",
            r.channel,
            r.norm,
            r.derivative_order,
            r.fitted,
            r.target,
            r.stderr,
            if r.pass { "pass" } else { "FAIL" }
        );
    }
    for c in &m.checks {
        println!(
            "  check {}: measured {:.3e} {} {:.3e} -> {}",
            c.name,
            c.measured,
            c.cmp,
            c.threshold,
            if c.passed { "pass" } else { "FAIL" }
        );
    }
    if let Some(f) = &m.failure {
        println!("  aborted: {f}");
    }
}

fn run_family(common: &CommonArgs, name: Option<&str>, family: &[&str]) -> Result<bool, Error> {
    let cfg = family_config(common, name, family)?;
    let manifest = run_experiment(&cfg)?;
    print_manifest_summary(&manifest);
    Ok(manifest.passed)
}

fn dispatch(cli: Cli) -> Result<bool, Error> {
    match cli.command {
        Command::Simulate { name, common } => run_family(
            &common,
            name.as_deref(),
            &["nsac-decay", "parabolic-decay", "energy-lyapunov"],
        ),
        Command::Linear { name, common } => {
            run_family(&common, name.as_deref(), &["linear-decay"])
        }
        Command::Spectrum { name, common } => {
            run_family(&common, name.as_deref(), &["spectrum-certify", "green-diff"])
        }
        Command::Compare { name, common } => {
            run_family(&common, name.as_deref(), &["difference-decay", "lp-decay"])
        }
        Command::Fit { series, mode, window } => {
            let mode = match mode.as_str() {
                "algebraic" => FitMode::Algebraic,
                "exponential" => FitMode::Exponential,
                other => {
                    return Err(Error::Usage(format!(
                        "mode must be 'algebraic' or 'exponential', got '{other}'"
                    )))
                }
            };
            let (t0, t1) = window
                .split_once(',')
                .and_then(|(a, b)| Some((a.trim().parse().ok()?, b.trim().parse().ok()?)))
                .ok_or_else(|| Error::Usage(format!("--window expects 't0,t1', got '{window}'")))?;
            let s = read_series_csv(&series)?;
            let fit = fit_rate(&s, mode, (t0, t1))?;
            println!("{}", serde_json::to_string_pretty(&fit)?);
            Ok(true)
        }
        Command::Verify { common } => {
            let mut overrides = vec![("experiment".to_string(), "nsac-decay".to_string())];
            overrides.extend(parse_overrides(&common)?);
            let cfg = ExperimentConfig::load(common.config.as_deref(), &overrides)?;
            let out_root = common
                .out
                .clone()
                .unwrap_or_else(|| PathBuf::from(cfg.get("out_dir")));
            let results = run_catalog(&cfg, &out_root, cfg.workers()?)?;
            let mut all = true;
            for (name, manifest) in &results {
                println!("{:<18} {}", name, if manifest.passed { "PASS" } else { "FAIL" });
                all &= manifest.passed;
            }
            Ok(all)
        }
        Command::VerifyManifest { manifest } => {
            verify_manifest(&manifest)?;
            println!("manifest ok: {}", manifest.display());
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e @ Error::Usage(_)) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
