use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use founsure::cli::{cmd_enc, run_to_exit, EncOptions, DEFAULT_PRECODE_RATE};
use founsure::metadata::DEFAULT_CODING_DIR;
use founsure::rngdist::DEFAULT_SEED;

/// Encode a file into striped coding chunks across failure domains.
#[derive(Parser)]
#[command(name = "founsureEnc", disable_version_flag = true)]
struct Args {
    /// Input file to encode.
    #[arg(short = 'f')]
    file: PathBuf,

    /// Total number of data chunks per stripe (user + precode parities).
    #[arg(short = 'k', default_value_t = 500)]
    k: u64,

    /// Number of coding chunks per stripe (rounded up so -s divides it).
    #[arg(short = 'n', default_value_t = 1000)]
    n: u64,

    /// Bytes per chunk.
    #[arg(short = 't', default_value_t = 512)]
    t: u64,

    /// Degree distribution: FiniteDist or RSD.
    #[arg(short = 'd', default_value = "FiniteDist")]
    dist: String,

    /// Precode: ArrayLDPC or None.
    #[arg(short = 'p', default_value = "ArrayLDPC")]
    precode: String,

    /// Number of failure domains (output files).
    #[arg(short = 's', default_value_t = 10)]
    disks: u64,

    /// Worker threads (defaults to the number of failure domains).
    #[arg(short = 'm')]
    workers: Option<usize>,

    /// Precode rate: the user data fraction of k.
    #[arg(short = 'r', default_value_t = DEFAULT_PRECODE_RATE)]
    rate: f64,

    /// Seed for all pseudo-random structure.
    #[arg(long = "seed", default_value_t = DEFAULT_SEED)]
    seed: u64,

    /// Coding directory.
    #[arg(short = 'C', default_value = DEFAULT_CODING_DIR)]
    coding_dir: PathBuf,

    /// Print the chosen parameters.
    #[arg(short = 'v')]
    verbose: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let code = run_to_exit(cmd_enc(&EncOptions {
        file: args.file,
        k: args.k,
        n: args.n,
        t: args.t,
        dist: args.dist,
        precode: args.precode,
        disks: args.disks,
        workers: args.workers,
        rate: args.rate,
        seed: args.seed,
        coding_dir: args.coding_dir,
        verbose: args.verbose,
    }));
    ExitCode::from(code as u8)
}
