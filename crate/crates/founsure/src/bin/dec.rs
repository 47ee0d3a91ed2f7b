use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use founsure::cli::{cmd_dec, run_to_exit, DecOptions};
use founsure::metadata::DEFAULT_CODING_DIR;

/// Decode a file from its coding directory.
#[derive(Parser)]
#[command(name = "founsureDec", disable_version_flag = true)]
struct Args {
    /// File name to decode (as passed to the encoder).
    #[arg(short = 'f')]
    file: String,

    /// Worker threads (defaults to the logical CPU count).
    #[arg(short = 'm')]
    workers: Option<usize>,

    /// Coding directory.
    #[arg(short = 'C', default_value = DEFAULT_CODING_DIR)]
    coding_dir: PathBuf,

    /// Print decode statistics.
    #[arg(short = 'v')]
    verbose: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let code = run_to_exit(cmd_dec(&DecOptions {
        file: args.file,
        workers: args.workers,
        coding_dir: args.coding_dir,
        verbose: args.verbose,
    }));
    ExitCode::from(code as u8)
}
