//! Implementations behind the five command-line tools.
//!
//! Each `cmd_*` function does the work of one tool and returns its exit
//! code; the binaries are thin argument parsers around them. Exit codes:
//! 0 success, 1 recoverable operation failure, 2 usage/parameter error,
//! 3 I/O error.

use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use crate::codec::{decode_file, encode_file};
use crate::error::{Error, Result};
use crate::graph::normalize_n;
use crate::metadata::read_metadata;
use crate::params::{CodeParams, PrecodeKind};
use crate::precode::{adjust_parameters, Thresholds};
use crate::reliability::{simdisk, DEFAULT_FAILING_CAP};
use crate::repair::execute_repair;
use crate::rngdist::{DistKind, RandomStream};

/// Default precode rate when the caller picks only `k`: the requested user
/// symbol count is `floor(k * rate)`.
pub const DEFAULT_PRECODE_RATE: f64 = 0.5;

fn workers_or(requested: Option<usize>, default: usize) -> usize {
    requested.unwrap_or(default).max(1)
}

fn available_cpus() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

#[derive(Debug, Clone)]
pub struct EncOptions {
    pub file: PathBuf,
    pub k: u64,
    pub n: u64,
    pub t: u64,
    pub dist: String,
    pub precode: String,
    pub disks: u64,
    pub workers: Option<usize>,
    pub rate: f64,
    pub seed: u64,
    pub coding_dir: PathBuf,
    pub verbose: bool,
}

/// Encode a file into a coding directory plus metadata.
pub fn cmd_enc(opts: &EncOptions) -> Result<i32> {
    let dist: DistKind = opts.dist.parse()?;
    let precode: PrecodeKind = opts.precode.parse()?;
    let filesize = fs::metadata(&opts.file)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", opts.file.display()))))?
        .len();
    if filesize == 0 {
        return Err(Error::Parameter(format!("{} is empty", opts.file.display())));
    }
    if opts.k == 0 {
        return Err(Error::Parameter("k must be positive".into()));
    }

    let (b, k, stripes, redundant_zeros) = match precode {
        PrecodeKind::ArrayLdpc => {
            let requested_b = ((opts.k as f64 * opts.rate).floor() as u64).max(1);
            let thresholds = Thresholds::for_symbol_size(opts.t);
            let mut stream = RandomStream::new(opts.seed);
            let adj =
                adjust_parameters(opts.rate, filesize, requested_b, opts.t, &thresholds, &mut stream)?;
            (adj.b, adj.k, adj.stripes, adj.redundant_zeros)
        }
        PrecodeKind::None => {
            let b = opts.k;
            let stripes = filesize / (opts.t * b) + 1;
            (b, b, stripes, b * opts.t * stripes - filesize)
        }
    };
    let n = normalize_n(opts.n, opts.disks)?;

    let params = CodeParams {
        b,
        k,
        n,
        t: opts.t,
        s: opts.disks,
        seed: opts.seed,
        dist,
        precode,
        stripes,
        redundant_zeros,
    };
    let inst = params.instance()?;
    let workers = workers_or(opts.workers, opts.disks as usize);

    let started = Instant::now();
    let meta = encode_file(&opts.file, &opts.coding_dir, &params, &inst, workers)?;
    let elapsed = started.elapsed();

    if opts.verbose {
        println!("encoded {} ({} bytes)", meta.filename, meta.filesize);
        println!(
            "  b = {b}, k = {k}, n = {n}, t = {}, s = {}, seed = {}",
            params.t, params.s, params.seed
        );
        println!(
            "  dist = {}, precode = {}, stripes = {stripes}, redundant_zeros = {redundant_zeros}",
            params.dist, params.precode
        );
        let mb = (params.n * params.t * stripes) as f64 / 1e6;
        println!(
            "  wrote {:.1} MB across {} disk files in {:.3} s ({:.0} MB/s) with {workers} worker(s)",
            mb,
            params.s,
            elapsed.as_secs_f64(),
            mb / elapsed.as_secs_f64().max(1e-9)
        );
    }
    Ok(0)
}

#[derive(Debug, Clone)]
pub struct DecOptions {
    pub file: String,
    pub workers: Option<usize>,
    pub coding_dir: PathBuf,
    pub verbose: bool,
}

/// Decode a file from its coding directory.
pub fn cmd_dec(opts: &DecOptions) -> Result<i32> {
    let workers = workers_or(opts.workers, available_cpus());
    let started = Instant::now();
    let outcome = decode_file(&opts.file, &opts.coding_dir, workers)?;
    let elapsed = started.elapsed();
    if opts.verbose {
        let meta = read_metadata(&opts.coding_dir, &opts.file)?;
        let mb = meta.filesize as f64 / 1e6;
        println!(
            "decoded {} stripes ({} disk(s) missing: {:?}) in {:.3} s ({:.0} MB/s) with {workers} worker(s)",
            outcome.stripes,
            outcome.missing_disks.len(),
            outcome.missing_disks,
            elapsed.as_secs_f64(),
            mb / elapsed.as_secs_f64().max(1e-9)
        );
    }
    println!("wrote {}", outcome.output.display());
    Ok(0)
}

#[derive(Debug, Clone)]
pub struct RepOptions {
    pub file: String,
    pub workers: Option<usize>,
    pub coding_dir: PathBuf,
    pub verbose: bool,
}

/// Repair missing or invalid disk files.
pub fn cmd_rep(opts: &RepOptions) -> Result<i32> {
    let started = Instant::now();
    let report = execute_repair(&opts.file, &opts.coding_dir)?;
    let elapsed = started.elapsed();
    let written_mb = report.bytes_written as f64 / 1e6;
    println!(
        "repair mode: {}; restored {} bytes, read {} bytes, {:.3} s ({:.0} MB/s)",
        report.mode,
        report.bytes_written,
        report.bytes_read,
        elapsed.as_secs_f64(),
        written_mb / elapsed.as_secs_f64().max(1e-9)
    );
    if opts.verbose {
        for (chunk, provenance) in &report.per_chunk {
            println!("  chunk {chunk}: {provenance:?}");
        }
    }
    Ok(0)
}

#[derive(Debug, Clone)]
pub struct GenChecksOptions {
    pub file: String,
    pub modify_metadata: bool,
    pub extend_disks: i64,
    pub coding_dir: PathBuf,
    pub verbose: bool,
}

/// Generate or refresh the check data (and apply code updates with `-e`).
pub fn cmd_genchecks(opts: &GenChecksOptions) -> Result<i32> {
    let outcome = crate::checks::gen_checks(
        &opts.file,
        &opts.coding_dir,
        opts.modify_metadata,
        opts.extend_disks,
    )?;
    if let Some((n, s)) = outcome.extended_to {
        println!("code updated: n = {n}, s = {s}");
    }
    println!(
        "wrote {} group(s) as {} integers{}",
        outcome.sets.len(),
        outcome.checkdata_ints,
        if outcome.cga_converged { "" } else { " (generation did not converge)" }
    );
    if opts.verbose {
        let derived = outcome.sets.len() - outcome.cga_set_count;
        println!("  {} from the sweep, {derived} derived", outcome.cga_set_count);
    }
    Ok(0)
}

#[derive(Debug, Clone)]
pub struct SimDiskOptions {
    /// Read parameters from this file's metadata...
    pub file: Option<String>,
    /// ...or synthesize them from raw parameters.
    pub k: u64,
    pub n: u64,
    pub t: u64,
    pub disks: u64,
    pub dist: String,
    pub precode: String,
    pub rate: f64,
    pub seed: u64,
    /// Synthetic file size for raw-parameter mode.
    pub assumed_filesize: u64,
    pub max_failures: u64,
    pub workers: Option<usize>,
    pub coding_dir: PathBuf,
    pub verbose: bool,
}

/// Exhaustively certify failure tolerance up to `-x` simultaneous failures.
/// Exit code 0 only when every combination at the requested level decodes,
/// so the tool doubles as a CI gate.
pub fn cmd_simdisk(opts: &SimDiskOptions) -> Result<i32> {
    let (params, report_path) = match &opts.file {
        Some(file) => {
            let meta = read_metadata(&opts.coding_dir, file)?;
            let stem = crate::metadata::stem_and_ext(file).0;
            (meta.params, opts.coding_dir.join(format!("{stem}_simdisk.report")))
        }
        None => {
            let dist: DistKind = opts.dist.parse()?;
            let precode: PrecodeKind = opts.precode.parse()?;
            let (b, k, stripes, redundant_zeros) = match precode {
                PrecodeKind::ArrayLdpc => {
                    let requested_b = ((opts.k as f64 * opts.rate).floor() as u64).max(1);
                    let thresholds = Thresholds::for_symbol_size(opts.t);
                    let mut stream = RandomStream::new(opts.seed);
                    let adj = adjust_parameters(
                        opts.rate,
                        opts.assumed_filesize,
                        requested_b,
                        opts.t,
                        &thresholds,
                        &mut stream,
                    )?;
                    (adj.b, adj.k, adj.stripes, adj.redundant_zeros)
                }
                PrecodeKind::None => {
                    let stripes = opts.assumed_filesize / (opts.t * opts.k) + 1;
                    (opts.k, opts.k, stripes, opts.k * opts.t * stripes - opts.assumed_filesize)
                }
            };
            let params = CodeParams {
                b,
                k,
                n: normalize_n(opts.n, opts.disks)?,
                t: opts.t,
                s: opts.disks,
                seed: opts.seed,
                dist,
                precode,
                stripes,
                redundant_zeros,
            };
            (params, PathBuf::from("simdisk.report"))
        }
    };
    if opts.max_failures > params.s {
        return Err(Error::Parameter(format!(
            "-x {} exceeds the {} failure domains",
            opts.max_failures, params.s
        )));
    }

    let inst = params.instance()?;
    let workers = workers_or(opts.workers, available_cpus());
    let mut lines = Vec::new();
    let mut final_fraction = 1.0f64;
    for f in 0..=opts.max_failures {
        let report = simdisk(&inst, &params, f, workers, DEFAULT_FAILING_CAP)?;
        println!(
            "f = {}: {} / {} combinations decodable (fraction {:.6})",
            report.f, report.decodable, report.total_combinations, report.fraction
        );
        if opts.verbose && !report.failing_patterns.is_empty() {
            println!("  failing (capped): {:?}", report.failing_patterns);
        }
        lines.push(report.report_line());
        final_fraction = report.fraction;
    }
    fs::write(&report_path, lines.join("\n") + "\n")?;
    println!("wrote {}", report_path.display());
    Ok(if final_fraction == 1.0 { 0 } else { 1 })
}

/// Shared by the binaries: run a command and turn its outcome into a process
/// exit code, printing errors to stderr.
pub fn run_to_exit(result: Result<i32>) -> i32 {
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
