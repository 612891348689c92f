use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use shufflelab::shuffling::{SchemeKind, Shuffler};
use shufflelab_harness::config::OutputFormat;
use shufflelab_harness::emit::render;
use shufflelab_harness::experiment::write_trace;
use shufflelab_harness::{run_experiment, run_theory_checks, ExperimentConfig, HarnessError, Suite};

#[derive(Parser)]
#[command(name = "shufflelab", version, about = "Without-replacement SGD ordering experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment grid and print or write the summary table.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        format: Option<OutputFormat>,
        /// Also write every trial record as JSON lines next to the output.
        #[arg(long)]
        trace: bool,
        #[arg(long)]
        workers: Option<usize>,
        /// Override a config key, e.g. `--set epochs=10`. Repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Run the numerical theory checks.
    Check {
        #[arg(long, default_value = "all")]
        suite: Suite,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Print the orderings a scheme produces, one epoch per line.
    Permute {
        #[arg(long)]
        scheme: SchemeKind,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        epochs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Comma-separated per-epoch losses fed to feedback-driven schemes.
        #[arg(long, value_delimiter = ',')]
        losses: Vec<f64>,
    },
}

fn run(cli: Cli) -> Result<ExitCode, HarnessError> {
    match cli.command {
        Command::Run {
            config,
            out,
            format,
            trace,
            workers,
            mut overrides,
        } => {
            if let Some(w) = workers {
                overrides.push(format!("workers={w}"));
            }
            let cfg = ExperimentConfig::from_file(&config, &overrides)?;
            let format = format.unwrap_or(cfg.format);
            let out = out.or_else(|| cfg.out.clone());
            let result = run_experiment(&cfg)?;
            let body = render(&result.rows, format)?;
            match &out {
                Some(path) => std::fs::write(path, body).map_err(|e| HarnessError::io(path, e))?,
                None => print!("{body}"),
            }
            if trace {
                let path = match &out {
                    Some(p) => p.with_extension("trace.jsonl"),
                    None => PathBuf::from("trace.jsonl"),
                };
                write_trace(&result.trials, &path)?;
                eprintln!("wrote {} trial records to {}", result.trials.len(), path.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Check { suite, json } => {
            let report = run_theory_checks(suite);
            if json {
                let s = serde_json::to_string_pretty(&report).map_err(|e| HarnessError::Serialize(e.to_string()))?;
                println!("{s}");
            } else {
                for r in &report {
                    println!("{r}");
                }
            }
            Ok(if report.iter().all(|r| r.passed) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(3)
            })
        }
        Command::Permute {
            scheme,
            n,
            epochs,
            seed,
            losses,
        } => {
            if scheme.needs_feedback() && losses.len() < epochs {
                return Err(HarnessError::config(format!(
                    "scheme {scheme} needs --losses with at least {epochs} values"
                )));
            }
            let mut shuffler = Shuffler::new(scheme, seed)?;
            for e in 0..epochs {
                let pi = shuffler.next_permutation(n, losses.get(e).copied())?;
                match shuffler.apr_step() {
                    Some(step) => println!("{pi}\t# {:?} {:?}", step.regime, step.transform),
                    None => println!("{pi}"),
                }
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
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
