use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mixhom::report::summary;
use mixhom::{emit_report, run_experiment, run_suite, ExperimentConfig, Formats, HarnessError, Suite, EXPERIMENTS, OUTPUT_ROOT_ENV};

#[derive(Parser)]
#[command(name = "mixhom", version, about = "Run mixed-homogeneity harmonic analysis experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its report.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Skip SVG plots.
        #[arg(long)]
        no_svg: bool,
    },
    /// Run a suite file and check its assertions.
    Suite {
        #[arg(long)]
        file: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long)]
        no_svg: bool,
    },
    /// List the experiment names.
    ListExperiments,
    /// Check a config without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn fail(e: HarnessError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn suite_root(file: &Path) -> PathBuf {
    let stem = file.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "suite".into());
    match std::env::var_os(OUTPUT_ROOT_ENV) {
        Some(root) => PathBuf::from(root).join(stem),
        None => Path::new("mixhom-out").join(stem),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::ListExperiments => {
            for e in EXPERIMENTS {
                println!("{e}");
            }
            ExitCode::SUCCESS
        }
        Command::Validate { config } => match ExperimentConfig::from_path(&config).and_then(|c| c.validate().map(|_| c)) {
            Ok(c) => {
                println!("ok: {} (config hash {})", c.experiment, c.hash());
                ExitCode::SUCCESS
            }
            Err(e) => fail(e),
        },
        Command::Run { config, no_svg } => {
            let cfg = match ExperimentConfig::from_path(&config).and_then(|c| c.validate().map(|_| c)) {
                Ok(c) => c,
                Err(e) => return fail(e),
            };
            let dir = cfg.output_dir();
            match run_experiment(&cfg).and_then(|rep| emit_report(&rep, &dir, Formats { svg: cfg.svg && !no_svg }).map(|_| rep)) {
                Ok(rep) => {
                    print!("{}", summary(&rep));
                    println!("report written to {}", dir.display());
                    ExitCode::SUCCESS
                }
                Err(e) => fail(e),
            }
        }
        Command::Suite { file, jobs, no_svg } => {
            let suite = match Suite::from_path(&file) {
                Ok(s) => s,
                Err(e) => return fail(e),
            };
            let root = suite_root(&file);
            let outcome = match run_suite(&suite, jobs, &root, Formats { svg: !no_svg }) {
                Ok(o) => o,
                Err(e) => return fail(e),
            };
            for r in &outcome.runs {
                let status = if r.passed() { "PASS" } else { "FAIL" };
                println!("{status} run {:02} {}", r.index, r.experiment);
                if let Some(e) = &r.error {
                    println!("    error: {e}");
                }
                for c in &r.checks {
                    println!("    {} {}", if c.passed { "ok  " } else { "FAIL" }, c.describe());
                }
            }
            println!("{} runs, reports under {}", outcome.runs.len(), root.display());
            if outcome.passed() {
                ExitCode::SUCCESS
            } else {
                for f in outcome.failures() {
                    eprintln!("failed: {f}");
                }
                ExitCode::from(1)
            }
        }
    }
}
