use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use expbench::commands::{
    cmd_report, cmd_run, cmd_score, cmd_validate, render_score, to_json, RunOptions,
};
use expbench::config::{parse_weights, HarnessConfig, Mode};
use expbench::extractor::RunStatus;
use expbench::leaderboard::{render_csv, render_table};
use expbench::{write, HarnessError};

#[derive(Parser)]
#[command(
    name = "expbench",
    version,
    about = "Validate, score and benchmark experiment extractions"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check a document; prints one line per issue. Exit 0 iff no errors.
    Validate {
        file: PathBuf,
        #[arg(long, default_value = "experiment")]
        mode: Mode,
    },
    /// Score an extracted document against a target.
    Score {
        #[arg(long)]
        extracted: PathBuf,
        #[arg(long)]
        target: PathBuf,
        #[arg(long, default_value = "experiment")]
        mode: Mode,
        /// Category weights: measurements,process,materials,configurations.
        #[arg(long)]
        weights: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Write the structured report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an extractor command over a directory of papers and score the results.
    Run {
        #[arg(long)]
        papers: PathBuf,
        #[arg(long)]
        targets: PathBuf,
        /// Shell command; receives one JSON request line per attempt on stdin.
        #[arg(long)]
        extractor: String,
        #[arg(long, default_value = "experiment")]
        mode: Mode,
        #[arg(long)]
        max_attempts: Option<usize>,
        #[arg(long, default_value = "runs")]
        out: PathBuf,
        #[arg(long, default_value = "default")]
        method: String,
        /// Run directory name; defaults to the first unused `run-N`.
        #[arg(long)]
        run_label: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Build a leaderboard from a run directory.
    Report {
        dir: PathBuf,
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Structured leaderboard; defaults to <dir>/leaderboard.json.
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

fn load_config(path: Option<&PathBuf>) -> Result<HarnessConfig, HarnessError> {
    path.map_or_else(|| Ok(HarnessConfig::default()), |p| HarnessConfig::load(p))
}

fn run(cli: Cli) -> Result<ExitCode, HarnessError> {
    match cli.command {
        Cmd::Validate { file, mode } => {
            let v = cmd_validate(&file, mode)?;
            print!("{}", v.rendered());
            Ok(if v.ok() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Cmd::Score {
            extracted,
            target,
            mode,
            weights,
            config,
            out,
        } => {
            let mut cfg = load_config(config.as_ref())?;
            if let Some(w) = weights {
                cfg.scoring.weights = parse_weights(&w)?;
            }
            let s = cmd_score(&extracted, &target, mode, &cfg.scoring)?;
            print!("{}", render_score(&s));
            if let Some(out) = out {
                write(&out, &to_json(&s))?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Run {
            papers,
            targets,
            extractor,
            mode,
            max_attempts,
            out,
            method,
            run_label,
            config,
        } => {
            let mut cfg = load_config(config.as_ref())?;
            if let Some(n) = max_attempts {
                cfg.max_attempts = n;
            }
            cfg.check()?;
            let opts = RunOptions {
                papers,
                targets,
                extractor,
                mode,
                max_attempts: cfg.max_attempts,
                out,
                method,
                run_label,
                workers: cfg.worker_count()?,
                scoring: cfg.scoring,
            };
            let outcome = cmd_run(&opts)?;
            for (record, score) in &outcome.results {
                let status = match record.status {
                    RunStatus::Valid => "valid",
                    RunStatus::AttemptsExhausted => "attempts exhausted",
                    RunStatus::Crashed => "crashed",
                };
                println!(
                    "{}  attempts {}  {status}  F1 {:.4}",
                    record.paper_id, record.attempts, score.f1
                );
            }
            println!("wrote {}", outcome.dir.display());
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Report { dir, csv, json } => {
            let board = cmd_report(&dir)?;
            print!("{}", render_table(&board));
            write(
                &json.unwrap_or_else(|| dir.join("leaderboard.json")),
                &to_json(&board),
            )?;
            if let Some(csv) = csv {
                write(&csv, &render_csv(&board))?;
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if let HarnessError::TargetInvalid { issues, .. } = &e {
                eprint!("{}", expbench_core::validation::render_feedback(issues));
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
