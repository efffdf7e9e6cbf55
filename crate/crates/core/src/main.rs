use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use sgfluid::cli::{default_out_dir, exit_code, parse_config_in, run, Subcommand};
use sgfluid::Error;

#[derive(Parser)]
#[command(version, about = "Optimal control of steady 2D second-grade fluids")]
struct Args {
    /// One of solve-state, linearize, adjoint, optimize, optimize-regularized,
    /// continuation, verify, constants.
    subcommand: Subcommand,
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let code = match execute(&args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    };
    ExitCode::from(code as u8)
}

fn execute(args: &Args) -> Result<i32, Error> {
    let text = std::fs::read_to_string(&args.config).map_err(|e| Error::Io {
        path: args.config.clone(),
        source: e,
    })?;
    let base = args.config.parent().unwrap_or(std::path::Path::new("."));
    let mut cfg = parse_config_in(&text, base)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let out = args
        .out
        .clone()
        .or_else(|| cfg.out.as_ref().map(|o| base.join(o)))
        .unwrap_or_else(|| default_out_dir(&cfg, args.subcommand));
    let outcome = run(&cfg, args.subcommand, &out)?;
    print!("{}", outcome.summary);
    println!("output={}", outcome.dir.display());
    Ok(outcome.status.exit_code())
}
