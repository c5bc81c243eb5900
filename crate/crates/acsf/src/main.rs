use std::path::PathBuf;
use std::process::ExitCode;

use acsf::checks;
use acsf::config::ExperimentConfig;
use acsf::core::harness::{Suite, PRESET_NAMES};
use acsf::report::{self, CheckRow, ExperimentReport};
use anyhow::{anyhow, bail};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "acsf",
    version,
    about = "Anisotropic and Riemannian curve shortening flow experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convergence suite against an exact solution.
    Converge {
        #[arg(long)]
        suite: String,
        #[arg(long, value_delimiter = ',', default_value = "32,64,128,256")]
        levels: Vec<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// A named preset or a JSON experiment.
    Run {
        #[arg(long, conflicts_with = "config", required_unless_present = "config")]
        preset: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Frank diagram and Wulff shape of the model in a JSON experiment.
    Wulff {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 720)]
        samples: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Runs the invariant suites.
    Check,
    /// Lists the presets.
    Presets,
}

fn print_checks(rows: &[CheckRow]) {
    for c in rows {
        println!(
            "{} {}: {:.3e} (threshold {:.3e})",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.threshold
        );
    }
}

fn summarize(report: &ExperimentReport) -> bool {
    for l in &report.errors {
        println!(
            "J={:<5} L2 {:.4e} {:>6}  H1 {:.4e} {:>6}",
            l.nodes,
            l.l2,
            l.eoc_l2.map_or(String::new(), |e| format!("{e:.2}")),
            l.h1,
            l.eoc_h1.map_or(String::new(), |e| format!("{e:.2}")),
        );
    }
    println!("status: {}, {:.1} s", report.status, report.wall_clock_s);
    print_checks(&report.checks);
    report.passed()
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::Converge { suite, levels, out } => {
            let suite = Suite::parse(&suite).ok_or_else(|| anyhow!("unknown suite `{suite}`"))?;
            Ok(summarize(&report::run_convergence(suite, &levels, &out)?))
        }
        Command::Run { preset, config, out } => {
            let cfg = match (preset, config) {
                (Some(p), _) => ExperimentConfig::for_preset(&p),
                (None, Some(path)) => ExperimentConfig::load(&path)?,
                (None, None) => bail!("give --preset or --config"),
            };
            Ok(summarize(&report::run_experiment(&cfg, &out)?))
        }
        Command::Wulff { model, samples, out } => {
            let cfg = ExperimentConfig::load(&model)?;
            let m = match (&cfg.model, &cfg.preset) {
                (Some(m), _) => m.build()?,
                (None, Some(_)) => cfg.resolve()?.config.model,
                (None, None) => bail!("{} has no `model`", model.display()),
            };
            Ok(summarize(&report::run_wulff(&m, samples, &out)?))
        }
        Command::Check => {
            let rows = checks::all_checks();
            print_checks(&rows);
            Ok(rows.iter().all(|c| c.passed))
        }
        Command::Presets => {
            for p in PRESET_NAMES {
                println!("{p}");
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
