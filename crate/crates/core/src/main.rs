use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use esbandit::harness::output::{fmt_g10, write_outputs};
use esbandit::harness::runner::evaluate_bounds;
use esbandit::harness::svg::render_svg;
use esbandit::harness::verify::verify;
use esbandit::harness::{run_experiment, AgentKind, ExperimentConfig, HarnessError};

/// Linear-Gaussian bandit simulator and bound verifier.
#[derive(Parser)]
#[command(name = "esbandit", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write the regret trace CSV and bound-report JSON.
    Run {
        /// Config file (flat key=value or JSON).
        #[arg(long)]
        config: PathBuf,
    },
    /// Sweep ensemble sizes and write one mismatch CSV per ensemble size.
    Mismatch {
        #[arg(long)]
        config: PathBuf,
    },
    /// Evaluate the bound constants for a config's instance and write JSON.
    Bounds {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run Monte Carlo verification suites.
    Verify {
        /// Suite name, or "all".
        #[arg(long, default_value = "all")]
        suite: String,
    },
    /// Render selected CSV columns as an SVG line chart.
    Plot {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated column names.
        #[arg(long, value_delimiter = ',')]
        columns: Vec<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                HarnessError::Config(_) | HarnessError::UnknownSuite(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn dispatch(command: Command) -> Result<ExitCode, HarnessError> {
    match command {
        Command::Run { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let result = run_experiment(&cfg)?;
            let dir = cfg.output_dir();
            let csv = cfg.csv_path.clone().map(PathBuf::from).unwrap_or_else(|| dir.join("run.csv"));
            let json = cfg.json_path.clone().map(PathBuf::from).unwrap_or_else(|| dir.join("run.json"));
            write_outputs(&result, &cfg, &csv, &json)?;
            let final_regret = result.trace.mean_cum.last().copied().unwrap_or(0.0);
            println!(
                "wrote {} and {} (final mean cumulative regret {} +/- {})",
                csv.display(),
                json.display(),
                fmt_g10(final_regret),
                fmt_g10(result.trace.se_cum.last().copied().unwrap_or(0.0)),
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Mismatch { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let dir = cfg.output_dir();
            for &m in &cfg.m_values {
                let sweep = ExperimentConfig {
                    agent: AgentKind::Es,
                    ensemble_size: m,
                    mismatch_every: cfg.mismatch_every.max(1),
                    ..cfg.clone()
                };
                sweep.validate()?;
                let result = run_experiment(&sweep)?;
                let csv = dir.join(format!("mismatch_m{m}.csv"));
                let json = dir.join(format!("mismatch_m{m}.json"));
                write_outputs(&result, &sweep, &csv, &json)?;
                println!("wrote {} and {}", csv.display(), json.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Bounds { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let instance = cfg.build_instance()?;
            let report = evaluate_bounds(&cfg, &instance)?;
            let dir = cfg.output_dir();
            let json = cfg.json_path.clone().map(PathBuf::from).unwrap_or_else(|| dir.join("bounds.json"));
            if let Some(parent) = json.parent() {
                if !parent.as_os_str().is_empty() {
                    std::fs::create_dir_all(parent)?;
                }
            }
            let mut text = serde_json::to_string_pretty(&report)?;
            text.push('\n');
            std::fs::write(&json, text)?;
            println!("iota = {}", fmt_g10(report.iota));
            println!("kappa = {}", fmt_g10(report.kappa));
            println!("eta_hat = {} (se {})", fmt_g10(report.eta_hat), fmt_g10(report.eta_se));
            println!(
                "entropy_opt_hat = {} (se {})",
                fmt_g10(report.entropy_opt_hat),
                fmt_g10(report.entropy_se)
            );
            println!("theorem1_value = {}", fmt_g10(report.theorem1_value));
            println!("wrote {}", json.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { suite } => {
            let reports = verify(&suite)?;
            let mut all_pass = true;
            for report in &reports {
                for check in &report.checks {
                    println!(
                        "{} {}/{}: measured {} vs bound {}",
                        if check.pass { "PASS" } else { "FAIL" },
                        report.suite,
                        check.name,
                        fmt_g10(check.measured),
                        fmt_g10(check.bound),
                    );
                }
                all_pass &= report.pass;
            }
            Ok(if all_pass { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Plot { csv, out, columns } => {
            if columns.is_empty() {
                return Err(HarnessError::Config("--columns must name at least one column".into()));
            }
            render_svg(&csv, &out, &columns)?;
            println!("wrote {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}
