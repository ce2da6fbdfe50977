//! Command-line front end: run scenarios from config files, reproduce the
//! bundled figures, sweep detector time resolutions and run the invariant
//! suite.
//!
//! Exit codes: 0 on success, 1 on physics-consistency or I/O failures,
//! 2 on configuration errors.

// Same rationale as in the library: `!(d > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use firstclick::config::{parse_config, OutputOptions, RunConfig};
use firstclick::error::{Error, Result};
use firstclick::output::{emit_csv, emit_svg};
use firstclick::scenario::{builtin_scenario, run_scenario_with, ScenarioReport};
use firstclick::toa::PropagationConfig;

#[derive(Parser)]
#[command(
    name = "firstclick",
    version,
    about = "Arrival-time distributions of 1-D wave packets, with and without \
             detection back-action",
    long_about = "Computes time-of-arrival distributions of free 1-D Gaussian wave packets \
                  at a detector region, either memoryless (no back-action) or conditioned \
                  on no earlier click, with projective measurements at the detector's time \
                  resolution. All quantities are in natural units (hbar = m = 1). Outputs \
                  are deterministic CSV curves, an SVG overlay and a machine-readable \
                  summary."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Figure {
    Fig1,
    Fig2,
    Fig3,
}

impl Figure {
    fn name(self) -> &'static str {
        match self {
            Figure::Fig1 => "fig1",
            Figure::Fig2 => "fig2",
            Figure::Fig3 => "fig3",
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario described by a config file
    Run {
        /// Path to the scenario config
        config: PathBuf,
        /// Output directory (overrides the config's out_dir)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reproduce a bundled demonstration scenario
    Repro {
        /// Which scenario to reproduce
        #[arg(value_enum)]
        figure: Figure,
        /// Output directory (default: out/<figure>)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// First-click resolution sweep: rerun a config's first-click engine
    /// over an explicit list of detector time resolutions
    Sweep {
        /// Path to the scenario config
        config: PathBuf,
        /// Comma-separated resolutions in t0, e.g. --dt 0.01,0.142857,1
        #[arg(long, value_delimiter = ',', required = true)]
        dt: Vec<f64>,
        /// Output directory (overrides the config's out_dir)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the built-in physics invariant suite and print one line per check
    Check,
}

fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read config '{}': {e}", path.display())))?;
    parse_config(&text)
}

fn emit(
    report: &ScenarioReport,
    output: &OutputOptions,
    out_override: Option<PathBuf>,
) -> Result<()> {
    let dir = out_override
        .or_else(|| output.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(&report.scenario.name));
    if output.csv {
        for path in emit_csv(report, &dir)? {
            println!("wrote {}", path.display());
        }
    }
    if output.svg {
        let path = dir.join("figure.svg");
        emit_svg(report, &path)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn execute(report_config: RunConfig, out: Option<PathBuf>) -> Result<()> {
    let propagation =
        PropagationConfig { pad_points: None, record_snapshots: report_config.output.snapshots };
    let report = run_scenario_with(&report_config.scenario, &propagation)?;
    for curve in &report.curves {
        if let Some(fc) = &curve.first_click {
            println!(
                "{}: total click probability {:.6}, survival {:.6}, conservation residual {:.3e}",
                curve.label,
                fc.weights.iter().sum::<f64>(),
                fc.survival_probability,
                fc.conservation_residual,
            );
        }
    }
    emit(&report, &report_config.output, out)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, out } => execute(load_config(&config)?, out),
        Command::Repro { figure, out } => {
            let scenario = builtin_scenario(figure.name())?;
            let out = out.unwrap_or_else(|| PathBuf::from("out").join(figure.name()));
            execute(RunConfig { scenario, output: OutputOptions::default() }, Some(out))
        }
        Command::Sweep { config, dt, out } => {
            let mut config = load_config(&config)?;
            for &d in &dt {
                if !(d > 0.0) {
                    return Err(Error::Config(format!(
                        "sweep resolutions must be positive, got {d}"
                    )));
                }
            }
            config.scenario.delta_ts = dt;
            config.scenario.engines.retain(|e| *e == firstclick::EngineKind::FirstClick);
            if config.scenario.engines.is_empty() {
                config.scenario.engines.push(firstclick::EngineKind::FirstClick);
            }
            config.scenario.name = format!("{}_sweep", config.scenario.name);
            execute(config, out)
        }
        Command::Check => {
            let outcomes = firstclick::check::run_all();
            let mut failed = 0;
            for o in &outcomes {
                let tag = if o.passed { "PASS" } else { "FAIL" };
                println!("{tag}  {}: {}", o.name, o.detail);
                if !o.passed {
                    failed += 1;
                }
            }
            if failed == 0 {
                println!("{} checks passed", outcomes.len());
                Ok(())
            } else {
                Err(Error::ChecksFailed(failed))
            }
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
