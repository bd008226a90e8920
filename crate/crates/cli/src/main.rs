use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use trihybrid_cli::refcmd;
use trihybrid_cli::runner::run_scenario_file;
use trihybrid_cli::scenario::Scenario;

#[derive(Parser)]
#[command(name = "trihybrid", version, about = "Tri-hybrid MIMO experiment runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a scenario: sweeps, realizations, CSV results, JSON summary.
    Run {
        scenario: PathBuf,
        /// Output directory for results, summaries, and field maps.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Override the scenario's root seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads for sweep points and realizations.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Check a scenario file without running it.
    Validate { scenario: PathBuf },
    /// Compute a REF comparison table from a metrics file.
    Ref {
        metrics: PathBuf,
        /// Write to this file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            scenario,
            out_dir,
            seed,
            jobs,
        } => match run_scenario_file(&scenario, &out_dir, seed, jobs) {
            Ok(out) => {
                println!("results: {}", out.results_path.display());
                println!("summary: {}", out.summary_path.display());
                for a in &out.artifacts {
                    println!("artifact: {}", a.display());
                }
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e:#}");
                ExitCode::from(1)
            }
        },
        Command::Validate { scenario } => match Scenario::load(&scenario) {
            Err(e) => {
                eprintln!("parse error: {e}");
                ExitCode::from(2)
            }
            Ok(s) => {
                let diags = s.validate();
                if diags.is_empty() {
                    println!("ok: scenario '{}' is valid", s.id);
                    ExitCode::SUCCESS
                } else {
                    for d in &diags {
                        eprintln!("invalid: {d}");
                    }
                    ExitCode::from(2)
                }
            }
        },
        Command::Ref {
            metrics,
            out,
            format,
        } => {
            let report = match refcmd::report_from_file(&metrics) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("error: {e:#}");
                    return ExitCode::from(1);
                }
            };
            let rendered = match format {
                Format::Csv => {
                    let mut buf = Vec::new();
                    if let Err(e) = report.write_csv(&mut buf) {
                        eprintln!("error: {e}");
                        return ExitCode::from(1);
                    }
                    String::from_utf8(buf).expect("csv is utf-8")
                }
                Format::Json => match refcmd::report_to_json(&report) {
                    Ok(j) => j + "\n",
                    Err(e) => {
                        eprintln!("error: {e}");
                        return ExitCode::from(1);
                    }
                },
            };
            match out {
                Some(path) => {
                    if let Err(e) = std::fs::write(&path, rendered) {
                        eprintln!("error: cannot write {}: {e}", path.display());
                        return ExitCode::from(1);
                    }
                    println!("wrote {}", path.display());
                }
                None => print!("{rendered}"),
            }
            ExitCode::SUCCESS
        }
    }
}
