use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use wavetank::scenario::{self, Mode, Scenario};

/// Scenario-driven wave-packet laboratory.
///
/// Exit codes: 0 on success, 2 for config/usage errors, 3 for numerical
/// failures while running.
#[derive(Parser)]
#[command(name = "wavetank", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario (bundled name or config file path) and write its
    /// artifact files.
    Run {
        /// Bundled scenario name (see `list-scenarios`) or path to a config.
        config: String,
        /// Directory to write outputs under (default: the scenario's
        /// output_dir key, or ./wavetank-out).
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Override the scenario's mode (analytic | numeric | full-pipeline).
        #[arg(long)]
        mode: Option<String>,
        /// Suppress progress output.
        #[arg(long)]
        quiet: bool,
    },
    /// Run a scenario through all three modes and report their deviations.
    Compare {
        config: String,
        #[arg(long)]
        output_dir: Option<PathBuf>,
        #[arg(long)]
        quiet: bool,
    },
    /// List the bundled scenarios.
    ListScenarios,
    /// Parse and validate a config without running it.
    Validate { config: String },
}

fn parse_mode(token: &str) -> Result<Mode, wavetank::Error> {
    match token {
        "analytic" => Ok(Mode::Analytic),
        "numeric" => Ok(Mode::Numeric),
        "full-pipeline" => Ok(Mode::FullPipeline),
        other => Err(wavetank::Error::Config {
            line: 0,
            message: format!("--mode must be analytic, numeric, or full-pipeline, got {other:?}"),
        }),
    }
}

fn load(config: &str, mode: Option<&str>, output_dir: Option<PathBuf>) -> Result<Scenario, wavetank::Error> {
    let mut scenario = Scenario::load(config)?;
    if let Some(m) = mode {
        scenario.mode = parse_mode(m)?;
    }
    if let Some(dir) = output_dir {
        scenario.output_dir = Some(dir);
    }
    Ok(scenario)
}

fn run(cli: Cli) -> Result<(), wavetank::Error> {
    match cli.command {
        Command::Run { config, output_dir, mode, quiet } => {
            let scenario = load(&config, mode.as_deref(), output_dir)?;
            let out_root = scenario
                .output_dir
                .clone()
                .unwrap_or_else(|| PathBuf::from("wavetank-out"));
            for w in scenario.warnings() {
                eprintln!("warning: {w}");
            }
            let outcome = scenario::run_scenario(&scenario, &out_root)?;
            if !quiet {
                println!(
                    "scenario {} ({} mode): {} case(s), {} file(s) under {}",
                    scenario.name,
                    scenario.mode.label(),
                    outcome.run.cases.len(),
                    outcome.files.len(),
                    outcome.output_dir.display()
                );
                for case in &outcome.run.cases {
                    for branch in &case.branches {
                        if let Some(fit) = &branch.fit {
                            println!(
                                "  omega = {:+.2} rad/s, F = {:>7.2}: c_g = {:.4} m/s, F_recovered = {:.3}",
                                case.omega_detuning, branch.force, fit.c_g_recovered, fit.f_recovered
                            );
                        }
                    }
                    if let Some(curve) = &case.phase_curve {
                        println!(
                            "  omega = {:+.2} rad/s: phase difference vs model, max deviation {:.3e} rad",
                            case.omega_detuning, curve.max_deviation
                        );
                    }
                }
            }
            Ok(())
        }
        Command::Compare { config, output_dir, quiet } => {
            let scenario = load(&config, None, output_dir)?;
            let report = scenario::compare_modes(&scenario)?;
            let out_root = scenario
                .output_dir
                .clone()
                .unwrap_or_else(|| PathBuf::from("wavetank-out"));
            std::fs::create_dir_all(&out_root)?;
            let path = out_root.join(format!("compare_{}.csv", scenario.name));
            std::fs::write(&path, report.to_csv())?;
            if !quiet {
                print!("{}", report.summary_text());
                println!("rows written to {}", path.display());
            }
            Ok(())
        }
        Command::ListScenarios => {
            for (name, text) in scenario::bundled_scenarios() {
                let description = text
                    .lines()
                    .find(|l| l.trim_start().starts_with('#'))
                    .map(|l| l.trim_start_matches(['#', ' ']).trim())
                    .unwrap_or("");
                println!("{name:8} {description}");
            }
            Ok(())
        }
        Command::Validate { config } => {
            let scenario = Scenario::load(&config)?;
            for w in scenario.warnings() {
                eprintln!("warning: {w}");
            }
            println!(
                "ok: scenario {} with {} detuning(s), {} gauge(s), mode {}",
                scenario.name,
                scenario.detunings.len(),
                scenario.gauge_positions.len(),
                scenario.mode.label()
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_usage() {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}
