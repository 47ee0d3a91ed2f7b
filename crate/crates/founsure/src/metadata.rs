//! The metadata file: the single source of truth for operating on a coding
//! directory after the original file is gone.
//!
//! Plain text, one `key: value` line per field in a fixed order. Lines
//! starting with `#` carry warnings from earlier runs and are ignored by the
//! parser (but collected). All fields are required; `checkdata_ints` stays 0
//! until check generation updates it.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::params::{CodeParams, PrecodeKind};
use crate::rngdist::DistKind;

/// Width of the zero-padded disk index in output file names
/// (`testfile_disk0007.txt`).
pub const DISK_INDEX_WIDTH: usize = 4;

/// Default coding directory name.
pub const DEFAULT_CODING_DIR: &str = "Coding";

#[derive(Debug, Clone, PartialEq)]
pub struct Metadata {
    /// Original input file name (base name, with extension).
    pub filename: String,
    /// Original file size in bytes.
    pub filesize: u64,
    pub params: CodeParams,
    /// Number of 32-bit integers in the check data file; 0 when no check
    /// data has been generated.
    pub checkdata_ints: u64,
    /// Warnings recorded by earlier runs (written as `#` comment lines).
    pub warnings: Vec<String>,
}

/// Splits a file name into `(stem, extension)`.
pub fn stem_and_ext(file_name: &str) -> (String, Option<String>) {
    match file_name.rsplit_once('.') {
        Some((stem, ext)) if !stem.is_empty() => (stem.to_string(), Some(ext.to_string())),
        _ => (file_name.to_string(), None),
    }
}

fn with_ext(base: String, ext: &Option<String>) -> String {
    match ext {
        Some(e) => format!("{base}.{e}"),
        None => base,
    }
}

/// `<stem>_disk{index}.<ext>` with the index zero-padded to
/// [`DISK_INDEX_WIDTH`] digits.
pub fn disk_file_name(file_name: &str, disk: u32) -> String {
    let (stem, ext) = stem_and_ext(file_name);
    let width = DISK_INDEX_WIDTH;
    with_ext(format!("{stem}_disk{disk:0width$}"), &ext)
}

/// `<stem>_meta.txt`
pub fn meta_file_name(file_name: &str) -> String {
    let (stem, _) = stem_and_ext(file_name);
    format!("{stem}_meta.txt")
}

/// `<stem>_check.data`
pub fn check_file_name(file_name: &str) -> String {
    let (stem, _) = stem_and_ext(file_name);
    format!("{stem}_check.data")
}

/// `<stem>_decoded.<ext>`
pub fn decoded_file_name(file_name: &str) -> String {
    let (stem, ext) = stem_and_ext(file_name);
    with_ext(format!("{stem}_decoded"), &ext)
}

impl Metadata {
    pub fn validate(&self) -> Result<()> {
        if self.filename.is_empty() {
            return Err(Error::Metadata("empty filename".into()));
        }
        self.params.validate().map_err(|e| Error::Metadata(e.to_string()))?;
        let p = &self.params;
        let expected_stripes = self.filesize / (p.b * p.t) + 1;
        if p.stripes != expected_stripes {
            return Err(Error::Metadata(format!(
                "stripes = {} inconsistent with filesize {} (expected {})",
                p.stripes, self.filesize, expected_stripes
            )));
        }
        let expected_zeros = p.b * p.t * p.stripes - self.filesize;
        if p.redundant_zeros != expected_zeros {
            return Err(Error::Metadata(format!(
                "redundant_zeros = {} inconsistent with filesize (expected {expected_zeros})",
                p.redundant_zeros
            )));
        }
        Ok(())
    }

    fn render(&self) -> String {
        let p = &self.params;
        let mut out = String::new();
        for w in &self.warnings {
            out.push_str(&format!("# warning: {w}\n"));
        }
        out.push_str(&format!("filename: {}\n", self.filename));
        out.push_str(&format!("filesize: {}\n", self.filesize));
        out.push_str(&format!("b: {}\n", p.b));
        out.push_str(&format!("k: {}\n", p.k));
        out.push_str(&format!("n: {}\n", p.n));
        out.push_str(&format!("t: {}\n", p.t));
        out.push_str(&format!("s: {}\n", p.s));
        out.push_str(&format!("seed: {}\n", p.seed));
        out.push_str(&format!("dist: {}\n", p.dist));
        out.push_str(&format!("precode: {}\n", p.precode));
        out.push_str(&format!("stripes: {}\n", p.stripes));
        out.push_str(&format!("redundant_zeros: {}\n", p.redundant_zeros));
        out.push_str(&format!("checkdata_ints: {}\n", self.checkdata_ints));
        out
    }
}

/// Writes `<stem>_meta.txt` into the coding directory.
pub fn write_metadata(meta: &Metadata, coding_dir: &Path) -> Result<PathBuf> {
    meta.validate()?;
    let path = coding_dir.join(meta_file_name(&meta.filename));
    fs::write(&path, meta.render())?;
    Ok(path)
}

/// Reads and validates the metadata for `file_name` from the coding
/// directory.
pub fn read_metadata(coding_dir: &Path, file_name: &str) -> Result<Metadata> {
    let path = coding_dir.join(meta_file_name(file_name));
    let text = fs::read_to_string(&path).map_err(|e| {
        Error::Metadata(format!("cannot read {}: {e}", path.display()))
    })?;
    parse_metadata(&text)
}

fn parse_metadata(text: &str) -> Result<Metadata> {
    let mut warnings = Vec::new();
    let mut fields: Vec<(String, String)> = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(w) = line.strip_prefix('#') {
            let w = w.trim();
            warnings.push(w.strip_prefix("warning:").map(str::trim).unwrap_or(w).to_string());
            continue;
        }
        let (key, value) = line
            .split_once(':')
            .ok_or_else(|| Error::Metadata(format!("malformed line '{line}'")))?;
        fields.push((key.trim().to_string(), value.trim().to_string()));
    }

    let lookup = |key: &str| -> Result<String> {
        fields
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.clone())
            .ok_or_else(|| Error::Metadata(format!("missing required key '{key}'")))
    };
    let number = |key: &str| -> Result<u64> {
        lookup(key)?
            .parse::<u64>()
            .map_err(|e| Error::Metadata(format!("bad value for '{key}': {e}")))
    };

    let meta = Metadata {
        filename: lookup("filename")?,
        filesize: number("filesize")?,
        params: CodeParams {
            b: number("b")?,
            k: number("k")?,
            n: number("n")?,
            t: number("t")?,
            s: number("s")?,
            seed: number("seed")?,
            dist: lookup("dist")?.parse::<DistKind>().map_err(|e| Error::Metadata(e.to_string()))?,
            precode: lookup("precode")?
                .parse::<PrecodeKind>()
                .map_err(|e| Error::Metadata(e.to_string()))?,
            stripes: number("stripes")?,
            redundant_zeros: number("redundant_zeros")?,
        },
        checkdata_ints: number("checkdata_ints")?,
        warnings,
    };
    meta.validate()?;
    Ok(meta)
}
