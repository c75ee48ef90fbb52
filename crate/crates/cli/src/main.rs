use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use parabifurc::config::ExperimentConfig;
use parabifurc::{run_with_files, Command, RunError};
use parabifurc_core::Precision;

/// Runs one experiment described by a TOML config and writes its reports.
#[derive(Parser, Debug)]
#[command(name = "parabifurc", version)]
struct Args {
    /// compose | check | rate | counterexample | identities | planar
    command: Command,
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// std | ext; overrides the config.
    #[arg(long)]
    precision: Option<Precision>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
}

fn load(args: &Args) -> Result<ExperimentConfig, RunError> {
    let text = std::fs::read_to_string(&args.config)?;
    let mut config = ExperimentConfig::from_toml(&text).map_err(|e| RunError::Parse(e.to_string()))?;
    if config.command != args.command {
        return Err(RunError::Invalid(vec![parabifurc::Violation::new(
            "command",
            format!("config is for {}, not {}", config.command, args.command),
        )]));
    }
    if let Some(out) = &args.out {
        config.output.dir = out.clone();
    }
    if let Some(p) = args.precision {
        config.precision = p;
    }
    if let Some(s) = args.seed {
        config.seed = Some(s);
    }
    Ok(config)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let result = load(&args).and_then(|config| {
        let (outcome, violation) = run_with_files(&config)?;
        outcome.write_to(&config.output.dir)?;
        println!("{}", outcome.summary);
        match violation {
            Some(v) => Err(RunError::Contract(v)),
            None => Ok(()),
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
