use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use hwlab_cli::{execute, CliError, ExperimentConfig, Kind};

#[derive(Parser, Debug)]
#[command(name = "hwlab", version, about = "Numerical laboratory for the cubic Schrödinger half-wave equation")]
struct Args {
    /// simulate, ladder, exponents, illposed, randstats or norms
    kind: Kind,
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; defaults to the machine parallelism.
    #[arg(long)]
    threads: Option<usize>,
}

fn run(args: Args) -> Result<(), CliError> {
    if let Some(n) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Invalid(format!("thread pool: {e}")))?;
    }
    let mut cfg = ExperimentConfig::load(&args.config)?;
    cfg.kind = args.kind;
    if let Some(seed) = args.seed {
        cfg = cfg.with_seed(seed);
    }
    if let Some(out) = args.out {
        cfg.out_dir = out;
    }
    let out = execute(&cfg)?;
    for (name, _) in &out.files {
        println!("{}", cfg.out_dir.join(name).display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hwlab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
