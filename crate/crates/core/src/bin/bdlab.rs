use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use bdlab::runner::{run_config_file, validate_config_file, RunOptions};
use bdlab::Error;

/// Exit code for a config or parameter error.
const EXIT_CONFIG: u8 = 2;
/// Exit code when a certificate's hypotheses hold but its conclusion fails.
const EXIT_VIOLATED: u8 = 3;

#[derive(Parser)]
#[command(
    name = "bdlab",
    version,
    about = "Spatial birth-death experiments on the torus"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config.
    Run {
        config: PathBuf,
        /// Output directory; overrides the config's `output_dir`.
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Root prepended to relative output directories.
        #[arg(long, env = "BDLAB_OUTPUT_ROOT")]
        output_root: Option<PathBuf>,
        #[arg(long)]
        seed_override: Option<u64>,
        /// Worker threads for ensemble and sweep parallelism.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Parse and validate a config without running it.
    Validate { config: PathBuf },
}

fn exit_for(e: &Error) -> ExitCode {
    match e {
        Error::Config { .. }
        | Error::InvalidParameter { .. }
        | Error::InvalidKernel(_)
        | Error::InvalidDomain(_) => ExitCode::from(EXIT_CONFIG),
        Error::CertificateViolated(_) => ExitCode::from(EXIT_VIOLATED),
        _ => ExitCode::FAILURE,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Validate { config } => match validate_config_file(&config) {
            Ok(cfg) => {
                println!("{}: ok ({})", config.display(), cfg.kind.name());
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                exit_for(&e)
            }
        },
        Command::Run {
            config,
            output_dir,
            output_root,
            seed_override,
            threads,
        } => {
            let opts = RunOptions {
                output_dir,
                output_root,
                seed_override,
                threads,
            };
            match run_config_file(&config, &opts) {
                Ok(report) => {
                    println!(
                        "{}",
                        serde_json::to_string_pretty(&report.summary).unwrap_or_default()
                    );
                    if report.violated {
                        eprintln!(
                            "error: a certificate was violated; see {}",
                            report.output_dir.join("certificates.json").display()
                        );
                        ExitCode::from(EXIT_VIOLATED)
                    } else {
                        ExitCode::SUCCESS
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    exit_for(&e)
                }
            }
        }
    }
}
