use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use diamean::experiment::run_config_file;
use diamean::verdict::Outcome;
use diamean::Error;

/// Mean-diameter estimators and regularity tests driven by a TOML config.
#[derive(Parser, Debug)]
#[command(name = "diamean", version)]
struct Args {
    /// Experiment config file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the config's `out`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    threads: Option<usize>,
    /// Sampling seed; overrides the config's `seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// List written files.
    #[arg(long)]
    verbose: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    if let Some(n) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("cannot start {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    match run_config_file(&args.config, args.out.as_deref(), args.seed) {
        Ok(report) => {
            print!("{}", report.summary);
            println!("{}: {}", report.command.as_str(), report.outcome);
            if args.verbose {
                for f in &report.files {
                    println!("wrote {}", f.display());
                }
            }
            match report.outcome {
                Outcome::Fails => ExitCode::from(1),
                _ => ExitCode::SUCCESS,
            }
        }
        Err(Error::Config(msg)) => {
            eprintln!("{}: {msg}", args.config.display());
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
