use std::path::PathBuf;
use std::process::ExitCode;

use cavitrap::cli::{run, CliError, RunOptions, Task};
use clap::Parser;

/// Planar ion crystals in a hybrid DC and optical-cavity trap.
#[derive(Parser, Debug)]
#[command(name = "cavitrap", version)]
struct Args {
    #[arg(value_enum)]
    task: Task,
    /// JSON experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Overrides the config's output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn fail(e: CliError) -> ExitCode {
    eprintln!("{}", e.to_json());
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => {
            e.exit()
        }
        Err(e) => return fail(CliError::Parse(e.to_string())),
    };
    if let Some(t) = args.threads {
        if t == 0 {
            return fail(CliError::Validation("--threads must be at least 1".into()));
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            return fail(CliError::Compute(format!("thread pool: {e}")));
        }
    }
    let opts = RunOptions { seed: args.seed, out: args.out };
    match run(args.task, &args.config, &opts) {
        Ok(m) => {
            for w in &m.warnings {
                log::warn!("{w}");
            }
            println!("{}", serde_json::to_string(&m).expect("manifest serializes"));
            ExitCode::SUCCESS
        }
        Err(e) => fail(e),
    }
}
