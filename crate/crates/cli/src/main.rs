use circlesum_cli::{run, RunRequest};
use clap::Parser;
use std::path::PathBuf;
use std::process::ExitCode;

/// Run one circlesum experiment.
#[derive(Parser, Debug)]
#[command(name = "circlesum", version)]
struct Cli {
    /// eval-sum, scan-alpha, count-variety, estimate-g, compute-b1,
    /// thresholds, verify-dichotomy, singular-integral or
    /// partial-summation-check
    command: String,
    /// Experiment config (TOML)
    #[arg(long)]
    config: PathBuf,
    /// Worker threads; overrides CIRCLESUM_WORKERS and the config
    #[arg(long)]
    workers: Option<usize>,
    /// Output prefix for <prefix>.csv and <prefix>.json
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let workers = match (cli.workers, std::env::var("CIRCLESUM_WORKERS")) {
        (Some(w), _) => Some(w),
        (None, Ok(v)) => match v.trim().parse::<usize>() {
            Ok(w) => Some(w),
            Err(_) => {
                eprintln!("error: CIRCLESUM_WORKERS must be a positive integer, got `{v}`");
                return ExitCode::from(1);
            }
        },
        (None, Err(_)) => None,
    };
    let req = RunRequest { command: Some(&cli.command), config_path: &cli.config, workers, out: cli.out.as_deref() };
    match run(&req) {
        Ok(out) => {
            for w in &out.manifest.warnings {
                eprintln!("warning: {w}");
            }
            println!("{}", out.csv_path.display());
            println!("{}", out.json_path.display());
            ExitCode::from(out.exit_code() as u8)
        }
        Err(f) => {
            eprintln!("error: {}: {f}", cli.config.display());
            ExitCode::from(f.exit_code() as u8)
        }
    }
}
