use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use proxsample_cli::commands::{report_error, EXIT_OK, EXIT_VERIFY_FAILED};
use proxsample_cli::{cmd_bench, cmd_minimize, cmd_sample, cmd_verify, CliError, RunConfig, VerifyOptions};

#[derive(Parser)]
#[command(name = "proxsample", version, about = "Proximal sampler for log-concave targets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration file.
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Overrides `[run] seed`.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, value_name = "DIR", default_value = ".")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Run the chain and write samples plus a run summary.
    Sample(Common),
    /// Run the diagnostic suites; exits 1 if any fails.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Shift the lower envelope up by 2 delta (negative control).
        #[arg(long)]
        corrupt_envelope: bool,
    },
    /// Minimize g = f + (mu/2)|x - x0|^2 with certified proximal steps.
    Minimize {
        #[command(flatten)]
        common: Common,
        /// Write one line per bundle iteration to trace.tsv.
        #[arg(long)]
        trace: bool,
    },
    /// Sweep the eta/delta grid and tabulate trials and bundle iterations.
    Bench(Common),
}

fn load(common: &Common) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.run.seed = seed;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Sample(c) => {
            let out = cmd_sample(&load(&c)?, &c.out)?;
            if let Some(p) = out.samples_path {
                println!("{}", p.display());
            }
            println!("{}", out.summary_path.display());
        }
        Command::Verify { common, corrupt_envelope } => {
            let out = cmd_verify(&load(&common)?, &common.out, VerifyOptions { corrupt_envelope })?;
            println!("{}", out.report_path.display());
            if !out.pass {
                eprintln!("verification failed; see {}", out.report_path.display());
                return Ok(EXIT_VERIFY_FAILED);
            }
        }
        Command::Minimize { common, trace } => {
            println!("{}", cmd_minimize(&load(&common)?, &common.out, trace)?.display());
        }
        Command::Bench(c) => {
            println!("{}", cmd_bench(&load(&c)?, &c.out)?.display());
        }
    }
    Ok(EXIT_OK)
}

fn main() -> ExitCode {
    let code = match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            report_error(&e);
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
