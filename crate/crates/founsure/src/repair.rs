//! Chunk repair and code updates.
//!
//! Fast repair peels the stored local recovery groups: unknowns are the
//! erased chunks plus all data symbols (the code is non-systematic, so data
//! never sits on disk), and any group with a single unknown resolves it.
//! The plan is computed once on indices, then executed per stripe, reading
//! only the chunks the steps actually touch. When no usable check data
//! exists or the plan stalls, conventional repair decodes the whole file per
//! stripe and re-encodes the lost columns. Code updates grow (or shrink) the
//! code by whole disks without rewriting a single existing chunk byte.

use std::collections::{BTreeSet, HashMap};
use std::fs::{self, File, OpenOptions};
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::Path;

use crate::checks::{parse_checkdata, CheckSet};
use crate::codec::bp_decode_stripe;
use crate::error::{Error, Result};
use crate::graph::{erasure_set, ErasureSet};
use crate::metadata::{check_file_name, disk_file_name, write_metadata, Metadata};
use crate::precode::apply_precode;

/// A symbol touched by the repair plan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SymbolId {
    Data(u32),
    Coding(u32),
}

/// One resolution: `resolved` becomes computable from the other members of
/// `via` (all survivors or earlier-resolved symbols).
#[derive(Debug, Clone)]
pub struct RepairStep {
    pub resolved: SymbolId,
    pub via: CheckSet,
    /// Coding chunks whose values this step consumes.
    pub reads: Vec<u32>,
}

#[derive(Debug, Clone)]
pub struct RepairPlan {
    pub targets: ErasureSet,
    pub steps: Vec<RepairStep>,
    /// True when the peel stalled before resolving every target; callers
    /// fall back to conventional repair.
    pub fallback: bool,
}

/// How a restored chunk was produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Provenance {
    /// Resolved by the recovery group at this position of the ordered list.
    FastCheck { set_index: usize },
    /// Re-encoded from the decoded data region.
    Reencode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RepairMode {
    Fast,
    Conventional,
}

impl std::fmt::Display for RepairMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RepairMode::Fast => write!(f, "fast"),
            RepairMode::Conventional => write!(f, "conventional"),
        }
    }
}

/// Bandwidth accounting and provenance for one repair run. A surviving chunk
/// is counted once per stripe it is read in, even when several steps use it.
#[derive(Debug, Clone)]
pub struct RepairReport {
    pub mode: RepairMode,
    pub bytes_read: u64,
    pub bytes_written: u64,
    pub per_chunk: Vec<(u32, Provenance)>,
}

/// Plans a fast repair by peeling the ordered recovery groups.
///
/// `sets` must already be in scan order (smallest cardinality first when
/// ordering is enabled). Unknowns start as `targets` plus every data symbol;
/// the scan loops over the groups resolving single-unknown sets until all
/// targets are resolved or a pass makes no progress.
pub fn plan_fast_repair(
    targets: &ErasureSet,
    sets: &[CheckSet],
    survivors: &BTreeSet<u32>,
    k: u64,
) -> RepairPlan {
    let mut data_known = vec![false; k as usize];
    let mut coding_resolved: BTreeSet<u32> = BTreeSet::new();
    let mut steps = Vec::new();
    let mut targets_left: BTreeSet<u32> = targets.iter().collect();

    let coding_known = |id: u32, resolved: &BTreeSet<u32>| -> bool {
        survivors.contains(&id) || resolved.contains(&id)
    };

    'outer: while !targets_left.is_empty() {
        let mut progress = false;
        for (set_index, set) in sets.iter().enumerate() {
            let mut unknown: Option<SymbolId> = None;
            let mut unknown_count = 0usize;
            if let Some(d) = set.data_index() {
                if !data_known[d as usize] {
                    unknown = Some(SymbolId::Data(d));
                    unknown_count += 1;
                }
            }
            for &c in set.members() {
                if !coding_known(c, &coding_resolved) {
                    unknown = Some(SymbolId::Coding(c));
                    unknown_count += 1;
                    if unknown_count > 1 {
                        break;
                    }
                }
            }
            if unknown_count != 1 {
                continue;
            }
            let resolved = unknown.unwrap();
            let reads: Vec<u32> = set
                .members()
                .iter()
                .copied()
                .filter(|&c| SymbolId::Coding(c) != resolved)
                .collect();
            match resolved {
                SymbolId::Data(d) => data_known[d as usize] = true,
                SymbolId::Coding(c) => {
                    coding_resolved.insert(c);
                    targets_left.remove(&c);
                }
            }
            steps.push(RepairStep { resolved, via: sets[set_index].clone(), reads });
            progress = true;
            if targets_left.is_empty() {
                break 'outer;
            }
        }
        if !progress {
            break;
        }
    }

    RepairPlan { targets: targets.clone(), steps, fallback: !targets_left.is_empty() }
}

/// Distinct surviving chunks a plan reads per stripe.
pub fn plan_read_set(plan: &RepairPlan, survivors: &BTreeSet<u32>) -> BTreeSet<u32> {
    let mut reads = BTreeSet::new();
    for step in &plan.steps {
        for &c in &step.reads {
            if survivors.contains(&c) {
                reads.insert(c);
            }
        }
    }
    reads
}

struct ChunkIo {
    files: Vec<Option<File>>,
    chunk_bytes: u64,
    chunks_per_disk: u64,
}

impl ChunkIo {
    fn open(meta: &Metadata, coding_dir: &Path, missing: &[u32], writable: bool) -> Result<Self> {
        let p = &meta.params;
        let mut files = Vec::with_capacity(p.s as usize);
        for disk in 0..p.s as u32 {
            let path = coding_dir.join(disk_file_name(&meta.filename, disk));
            let file = if missing.contains(&disk) {
                if writable {
                    let f = OpenOptions::new()
                        .create(true)
                        .write(true)
                        .read(true)
                        .truncate(true)
                        .open(&path)?;
                    f.set_len(p.disk_file_size())?;
                    Some(f)
                } else {
                    None
                }
            } else {
                Some(OpenOptions::new().read(true).write(writable).open(&path)?)
            };
            files.push(file);
        }
        Ok(ChunkIo { files, chunk_bytes: p.t, chunks_per_disk: p.chunks_per_disk() })
    }

    fn seek_to(&mut self, chunk: u32, stripe: u64) -> Result<&mut File> {
        let disk = chunk as u64 / self.chunks_per_disk;
        let offset_in_disk = chunk as u64 % self.chunks_per_disk;
        let pos = (stripe * self.chunks_per_disk + offset_in_disk) * self.chunk_bytes;
        let file = self.files[disk as usize]
            .as_mut()
            .ok_or_else(|| Error::Internal(format!("chunk {chunk} lives on an unopened disk")))?;
        file.seek(SeekFrom::Start(pos))?;
        Ok(file)
    }

    fn read_chunk(&mut self, chunk: u32, stripe: u64) -> Result<Vec<u8>> {
        let bytes = self.chunk_bytes as usize;
        let file = self.seek_to(chunk, stripe)?;
        let mut buf = vec![0u8; bytes];
        file.read_exact(&mut buf)?;
        Ok(buf)
    }

    fn write_chunk(&mut self, chunk: u32, stripe: u64, data: &[u8]) -> Result<()> {
        let file = self.seek_to(chunk, stripe)?;
        file.write_all(data)?;
        Ok(())
    }
}

/// Executes a fast-repair plan across every stripe, restoring target chunks
/// into their disk files (files for fully missing disks are created).
fn execute_fast(
    meta: &Metadata,
    coding_dir: &Path,
    missing: &[u32],
    plan: &RepairPlan,
) -> Result<RepairReport> {
    let p = &meta.params;
    let t = p.t as usize;
    let mut io = ChunkIo::open(meta, coding_dir, missing, true)?;
    let mut bytes_read = 0u64;
    let mut bytes_written = 0u64;

    for stripe in 0..p.stripes {
        let mut values: HashMap<SymbolId, Vec<u8>> = HashMap::new();
        for step in &plan.steps {
            let mut acc = vec![0u8; t];
            if let CheckSet::Check2 { data_index, .. } = &step.via {
                if step.resolved != SymbolId::Data(*data_index) {
                    let d = values
                        .get(&SymbolId::Data(*data_index))
                        .ok_or_else(|| Error::Internal("plan uses unresolved data symbol".into()))?;
                    for (a, v) in acc.iter_mut().zip(d) {
                        *a ^= v;
                    }
                }
            }
            for &c in &step.reads {
                let id = SymbolId::Coding(c);
                if !values.contains_key(&id) {
                    let block = io.read_chunk(c, stripe)?;
                    bytes_read += block.len() as u64;
                    values.insert(id, block);
                }
                let block = &values[&id];
                for (a, v) in acc.iter_mut().zip(block) {
                    *a ^= v;
                }
            }
            if let SymbolId::Coding(c) = step.resolved {
                if plan.targets.contains(c) {
                    io.write_chunk(c, stripe, &acc)?;
                    bytes_written += acc.len() as u64;
                }
            }
            values.insert(step.resolved, acc);
        }
    }

    let per_chunk = plan
        .steps
        .iter()
        .enumerate()
        .filter_map(|(i, step)| match step.resolved {
            SymbolId::Coding(c) if plan.targets.contains(c) => {
                Some((c, Provenance::FastCheck { set_index: i }))
            }
            _ => None,
        })
        .collect();

    Ok(RepairReport { mode: RepairMode::Fast, bytes_read, bytes_written, per_chunk })
}

/// Conventional repair: decode every stripe from all survivors, rebuild the
/// full data region (user symbols plus recomputed precode parities), then
/// re-encode exactly the target columns. Restored chunks are byte-identical
/// to the encoder's originals.
pub fn conventional_repair(
    meta: &Metadata,
    coding_dir: &Path,
    missing: &[u32],
) -> Result<RepairReport> {
    let p = &meta.params;
    let t = p.t as usize;
    let inst = p.instance()?;
    let erasures = erasure_set(missing, p.n, p.s)?;
    let targets: Vec<u32> = erasures.iter().collect();
    if targets.is_empty() {
        return Ok(RepairReport {
            mode: RepairMode::Conventional,
            bytes_read: 0,
            bytes_written: 0,
            per_chunk: Vec::new(),
        });
    }
    let surviving: Vec<u32> =
        (0..p.n as u32).filter(|&id| !erasures.contains(id)).collect();

    let mut io = ChunkIo::open(meta, coding_dir, missing, true)?;
    let mut bytes_read = 0u64;
    let mut bytes_written = 0u64;

    for stripe in 0..p.stripes {
        let mut blocks: Vec<Vec<u8>> = Vec::with_capacity(surviving.len());
        for &id in &surviving {
            let block = io.read_chunk(id, stripe)?;
            bytes_read += block.len() as u64;
            blocks.push(block);
        }
        let survivors: Vec<(u32, &[u8])> = surviving
            .iter()
            .copied()
            .zip(blocks.iter().map(|b| b.as_slice()))
            .collect();
        let (mut data, unresolved) =
            bp_decode_stripe(&survivors, &inst.matrix, &erasures, &inst.check1, p.n as usize, t)?;
        if unresolved.iter().any(|&f| (f as u64) < p.b) {
            return Err(Error::RepairFailure(format!(
                "conventional repair cannot decode stripe {stripe} with disks {missing:?} missing"
            )));
        }
        // Parities may be left unresolved by the peel; recompute them from
        // the user region so re-encoded chunks match the originals exactly.
        let parities = apply_precode(&data[..(p.b as usize) * t], &inst.check1, t)?;
        data[(p.b as usize) * t..].copy_from_slice(&parities);

        for &target in &targets {
            let mut chunk = vec![0u8; t];
            for &d in inst.matrix.column(target) {
                for (c, v) in chunk.iter_mut().zip(&data[d as usize * t..(d as usize + 1) * t]) {
                    *c ^= v;
                }
            }
            io.write_chunk(target, stripe, &chunk)?;
            bytes_written += chunk.len() as u64;
        }
    }

    let per_chunk = targets.iter().map(|&c| (c, Provenance::Reencode)).collect();
    Ok(RepairReport {
        mode: RepairMode::Conventional,
        bytes_read,
        bytes_written,
        per_chunk,
    })
}

/// Repairs whatever is missing or invalid in the coding directory.
///
/// Disk files that are absent or wrongly sized count as fully erased. When a
/// parsable check data file is present, a fast plan is attempted first;
/// otherwise, or when the plan stalls, conventional repair runs.
pub fn execute_repair(file_name: &str, coding_dir: &Path) -> Result<RepairReport> {
    let meta = crate::metadata::read_metadata(coding_dir, file_name)?;
    let p = &meta.params;
    let missing = crate::codec::detect_missing_disks(&meta, coding_dir);
    if missing.is_empty() {
        return Ok(RepairReport {
            mode: RepairMode::Fast,
            bytes_read: 0,
            bytes_written: 0,
            per_chunk: Vec::new(),
        });
    }
    let targets = erasure_set(&missing, p.n, p.s)?;
    let survivors: BTreeSet<u32> =
        (0..p.n as u32).filter(|&id| !targets.contains(id)).collect();

    let check_path = coding_dir.join(check_file_name(&meta.filename));
    if check_path.exists() {
        match fs::read(&check_path)
            .map_err(Error::from)
            .and_then(|bytes| parse_checkdata(&bytes, p.k, p.n))
        {
            Ok(sets) => {
                let plan = plan_fast_repair(&targets, &sets, &survivors, p.k);
                if !plan.fallback {
                    return execute_fast(&meta, coding_dir, &missing, &plan);
                }
                eprintln!(
                    "fast repair stalled with {} step(s) planned; falling back to conventional repair",
                    plan.steps.len()
                );
            }
            Err(e) => {
                eprintln!("ignoring unusable check data ({e}); using conventional repair");
            }
        }
    }
    conventional_repair(&meta, coding_dir, &missing)
}

/// Applies a code update: `extend_disks > 0` adds that many failure domains
/// (each worth `n/s` new coding symbols, drawn from seeds `seed + s ...`),
/// `extend_disks < 0` shrinks the code on paper. Existing chunks and files
/// are never modified; a follow-up repair materializes new disks, and
/// shrinking leaves surplus files for the operator to delete.
pub fn update_code(meta: &mut Metadata, extend_disks: i64, coding_dir: &Path) -> Result<()> {
    let p = &meta.params;
    if extend_disks <= -(p.s as i64) {
        return Err(Error::Parameter(format!(
            "cannot remove {} of {} disks",
            -extend_disks, p.s
        )));
    }
    if extend_disks == 0 {
        write_metadata(meta, coding_dir)?;
        return Ok(());
    }
    let cpd = p.chunks_per_disk();
    let new_s = (p.s as i64 + extend_disks) as u64;
    let new_n = new_s * cpd;
    meta.params.s = new_s;
    meta.params.n = new_n;
    write_metadata(meta, coding_dir)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_targets_make_an_empty_plan() {
        let survivors: BTreeSet<u32> = (0..10).collect();
        let plan = plan_fast_repair(&ErasureSet::empty(), &[], &survivors, 5);
        assert!(plan.steps.is_empty());
        assert!(!plan.fallback);
        assert!(plan_read_set(&plan, &survivors).is_empty());
    }

    #[test]
    fn single_unknown_in_one_group() {
        // Chunk 2 lost; {0, 1, 2} XOR to zero, so one step reads two chunks.
        let targets = ErasureSet::from_ids([2]);
        let survivors: BTreeSet<u32> = vec![0, 1, 3, 4].into_iter().collect();
        let sets = vec![CheckSet::Check3 { members: vec![0, 1, 2] }];
        let plan = plan_fast_repair(&targets, &sets, &survivors, 4);
        assert!(!plan.fallback);
        assert_eq!(plan.steps.len(), 1);
        assert_eq!(plan.steps[0].resolved, SymbolId::Coding(2));
        assert_eq!(plan.steps[0].reads, vec![0, 1]);
        assert_eq!(plan_read_set(&plan, &survivors).len(), 2);
    }

    #[test]
    fn check2_resolves_in_both_directions() {
        // D0 = C1 ^ C2 first resolves D0, then a second group with the data
        // symbol known resolves the lost chunk C5 = D0 ^ C3.
        let targets = ErasureSet::from_ids([5]);
        let survivors: BTreeSet<u32> = vec![1, 2, 3].into_iter().collect();
        let sets = vec![
            CheckSet::Check2 { data_index: 0, members: vec![1, 2] },
            CheckSet::Check2 { data_index: 0, members: vec![3, 5] },
        ];
        let plan = plan_fast_repair(&targets, &sets, &survivors, 1);
        assert!(!plan.fallback);
        assert_eq!(plan.steps.len(), 2);
        assert_eq!(plan.steps[0].resolved, SymbolId::Data(0));
        assert_eq!(plan.steps[1].resolved, SymbolId::Coding(5));
    }

    #[test]
    fn stalled_plan_reports_fallback() {
        let targets = ErasureSet::from_ids([7]);
        let survivors: BTreeSet<u32> = vec![0, 1].into_iter().collect();
        let sets = vec![CheckSet::Check3 { members: vec![5, 6, 7] }]; // 5, 6 also gone
        let plan = plan_fast_repair(&targets, &sets, &survivors, 1);
        assert!(plan.fallback);
    }
}
