//! Whole-file pipelines: striping a file into coding chunks across disk
//! files, and assembling/decoding stripes back into the original bytes.

use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::graph::{erasure_set, ErasureSet};
use crate::metadata::{disk_file_name, read_metadata, decoded_file_name, write_metadata, Metadata};
use crate::params::{CodeInstance, CodeParams};
use crate::precode::apply_precode;

use super::bp::{bp_decode_stripe, can_decode_users, dpg, replay_decode_stripe};
use super::stripe::fill_coding_region;

/// Encodes `input` into `s` disk files under `coding_dir` and writes the
/// metadata file. The input is split into `stripes` partitions of `b*t`
/// bytes (the last one zero-padded); every stripe is encoded independently
/// and each disk file receives its `n/s` coding chunks in order.
///
/// Fails fast if the seeded graph cannot decode with zero erasures: the seed
/// is user-visible state recorded in metadata, so it is surfaced rather than
/// silently replaced.
pub fn encode_file(
    input: &Path,
    coding_dir: &Path,
    params: &CodeParams,
    inst: &CodeInstance,
    workers: usize,
) -> Result<Metadata> {
    params.validate()?;
    let filesize = fs::metadata(input)?.len();
    if filesize == 0 {
        return Err(Error::Parameter(format!("{} is empty", input.display())));
    }
    let expected = params.b * params.t * params.stripes;
    if expected != filesize + params.redundant_zeros {
        return Err(Error::Parameter(format!(
            "stripe layout ({expected} bytes) does not cover the file plus padding"
        )));
    }
    if !can_decode_users(&inst.matrix, &inst.check1, &ErasureSet::empty(), params.b) {
        return Err(Error::DecodeFailure(format!(
            "graph from seed {} cannot decode even with zero erasures; re-run with another seed",
            params.seed
        )));
    }

    let file_name = input
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| Error::Parameter(format!("unusable input name {}", input.display())))?
        .to_string();

    fs::create_dir_all(coding_dir)?;
    let mut disk_files: Vec<File> = (0..params.s as u32)
        .map(|i| File::create(coding_dir.join(disk_file_name(&file_name, i))))
        .collect::<std::io::Result<_>>()?;

    let t = params.t as usize;
    let stripe_bytes = (params.b * params.t) as usize;
    let disk_bytes = (params.chunks_per_disk() * params.t) as usize;
    let mut reader = File::open(input)?;
    let mut payload = vec![0u8; stripe_bytes];
    let mut buf = super::stripe::StripeBuffer::new(params.k, params.n, params.t);

    for _ in 0..params.stripes {
        payload.fill(0);
        let mut filled = 0usize;
        while filled < stripe_bytes {
            let got = reader.read(&mut payload[filled..])?;
            if got == 0 {
                break;
            }
            filled += got;
        }

        buf.data_mut()[..stripe_bytes].copy_from_slice(&payload);
        let parities = apply_precode(&payload, &inst.check1, t)?;
        buf.data_mut()[stripe_bytes..].copy_from_slice(&parities);
        let (data, coding) = buf.regions_mut();
        fill_coding_region(data, coding, &inst.matrix, t, workers.max(1));

        for (disk, file) in disk_files.iter_mut().enumerate() {
            file.write_all(&buf.coding()[disk * disk_bytes..(disk + 1) * disk_bytes])?;
        }
    }
    for f in &mut disk_files {
        f.flush()?;
    }

    let meta = Metadata {
        filename: file_name,
        filesize,
        params: params.clone(),
        checkdata_ints: 0,
        warnings: Vec::new(),
    };
    write_metadata(&meta, coding_dir)?;
    Ok(meta)
}

/// What `decode_file` found and produced.
#[derive(Debug, Clone)]
pub struct DecodeOutcome {
    pub output: PathBuf,
    pub missing_disks: Vec<u32>,
    pub stripes: u64,
}

/// Disks whose files are absent or have the wrong length are treated as
/// fully erased.
pub fn detect_missing_disks(meta: &Metadata, coding_dir: &Path) -> Vec<u32> {
    let expected = meta.params.disk_file_size();
    (0..meta.params.s as u32)
        .filter(|&i| {
            let path = coding_dir.join(disk_file_name(&meta.filename, i));
            !matches!(fs::metadata(&path), Ok(m) if m.len() == expected)
        })
        .collect()
}

/// Reads one stripe's worth of chunks from every healthy disk file.
pub(crate) struct StripeReader {
    files: Vec<Option<File>>,
    chunk_ids: Vec<u32>,
    disk_bytes: usize,
}

impl StripeReader {
    pub(crate) fn open(
        meta: &Metadata,
        coding_dir: &Path,
        missing: &[u32],
    ) -> Result<Self> {
        let mut files = Vec::with_capacity(meta.params.s as usize);
        let mut chunk_ids = Vec::new();
        let cpd = meta.params.chunks_per_disk();
        for disk in 0..meta.params.s as u32 {
            if missing.contains(&disk) {
                files.push(None);
            } else {
                let path = coding_dir.join(disk_file_name(&meta.filename, disk));
                files.push(Some(File::open(path)?));
                chunk_ids.extend((disk as u64 * cpd..(disk as u64 + 1) * cpd).map(|id| id as u32));
            }
        }
        Ok(StripeReader {
            files,
            chunk_ids,
            disk_bytes: (cpd * meta.params.t) as usize,
        })
    }

    /// Surviving chunk ids, ascending.
    pub(crate) fn chunk_ids(&self) -> &[u32] {
        &self.chunk_ids
    }

    /// Loads stripe `index`; returns the concatenated surviving chunks in
    /// the same order as [`chunk_ids`](Self::chunk_ids).
    pub(crate) fn read_stripe(&mut self, index: u64) -> Result<Vec<u8>> {
        let mut out = Vec::with_capacity(self.chunk_ids.len() * self.disk_bytes);
        for file in self.files.iter_mut().flatten() {
            let offset = index * self.disk_bytes as u64;
            file.seek(SeekFrom::Start(offset))?;
            let start = out.len();
            out.resize(start + self.disk_bytes, 0);
            file.read_exact(&mut out[start..])?;
        }
        Ok(out)
    }
}

/// Decodes the file named in the metadata from whatever disk files survive,
/// writing `<stem>_decoded.<ext>` into the coding directory.
///
/// With more than one worker, a decoding path is generated once (the erasure
/// pattern is shared by every stripe) and replayed per stripe by a worker
/// pool; otherwise each stripe runs the sequential peeling decoder.
pub fn decode_file(file_name: &str, coding_dir: &Path, workers: usize) -> Result<DecodeOutcome> {
    let meta = read_metadata(coding_dir, file_name)?;
    let params = &meta.params;
    let inst = params.instance()?;
    let missing = detect_missing_disks(&meta, coding_dir);
    let erasures = erasure_set(&missing, params.n, params.s)?;
    let t = params.t as usize;

    let mut reader = StripeReader::open(&meta, coding_dir, &missing)?;
    let path = if workers > 1 {
        let (path, unresolved) = dpg(&inst.matrix, &erasures, params.n as usize);
        let mut mask = vec![false; params.k as usize];
        for f in 0..params.k as u32 {
            mask[f as usize] = !unresolved.contains(&f);
        }
        crate::precode::precode_bp_mask(&mut mask, &inst.check1);
        if !mask.iter().take(params.b as usize).all(|&m| m) {
            return Err(Error::DecodeFailure(format!(
                "stripe 0: {} of {} user symbols unrecoverable with disks {missing:?} missing",
                mask.iter().take(params.b as usize).filter(|&&m| !m).count(),
                params.b
            )));
        }
        Some(path)
    } else {
        None
    };

    let out_path = coding_dir.join(decoded_file_name(&meta.filename));
    let mut out = File::create(&out_path)?;
    let user_bytes = (params.b * params.t) as u64;

    for stripe in 0..params.stripes {
        let raw = reader.read_stripe(stripe)?;
        let survivors: Vec<(u32, &[u8])> = reader
            .chunk_ids()
            .iter()
            .enumerate()
            .map(|(pos, &id)| (id, &raw[pos * t..(pos + 1) * t]))
            .collect();

        let (data, unresolved) = match &path {
            Some(p) => replay_decode_stripe(p, &survivors, &inst.matrix, &inst.check1, t, workers)?,
            None => bp_decode_stripe(
                &survivors,
                &inst.matrix,
                &erasures,
                &inst.check1,
                params.n as usize,
                t,
            )?,
        };
        let failed_users: BTreeSet<u32> =
            unresolved.into_iter().filter(|&f| (f as u64) < params.b).collect();
        if !failed_users.is_empty() {
            return Err(Error::DecodeFailure(format!(
                "stripe {stripe}: {} of {} user symbols unrecoverable with disks {missing:?} missing",
                failed_users.len(),
                params.b
            )));
        }

        // The last stripe carries the zero padding; cut it at the file end.
        let produced_so_far = stripe * user_bytes;
        let remaining = meta.filesize - produced_so_far.min(meta.filesize);
        let take = user_bytes.min(remaining) as usize;
        out.write_all(&data[..take])?;
    }
    out.flush()?;
    Ok(DecodeOutcome { output: out_path, missing_disks: missing, stripes: params.stripes })
}
