//! Generator-matrix construction and chunk/erasure bookkeeping.
//!
//! The outer code is a sparse binary `k x n` generator matrix `B`; column `j`
//! lists the data symbols XORed into coding symbol `j`. Columns for disk `i`
//! (coding symbols `i*(n/s) .. (i+1)*(n/s)`) are drawn from a stream seeded
//! with `seed + i`, so a single disk's columns can be regenerated in
//! isolation during repair. One matrix serves every stripe of a file.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::rngdist::{sample_degree, sample_neighbors, DegreeDistribution, RandomStream};

/// Sparse generator matrix of the outer LDGM code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratorMatrix {
    k: u64,
    n: u64,
    s: u64,
    columns: Vec<Vec<u32>>,
    per_disk_seed: Vec<u64>,
}

impl GeneratorMatrix {
    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn s(&self) -> u64 {
        self.s
    }

    pub fn chunks_per_disk(&self) -> u64 {
        self.n / self.s
    }

    /// Sorted data-symbol neighbors of coding symbol `j`.
    pub fn column(&self, j: u32) -> &[u32] {
        &self.columns[j as usize]
    }

    pub fn columns(&self) -> &[Vec<u32>] {
        &self.columns
    }

    pub fn degree(&self, j: u32) -> usize {
        self.columns[j as usize].len()
    }

    pub fn per_disk_seed(&self) -> &[u64] {
        &self.per_disk_seed
    }

    /// Disk holding coding symbol `id`.
    pub fn disk_of_chunk(&self, id: u32) -> u32 {
        (id as u64 / self.chunks_per_disk()) as u32
    }

    /// Position of coding symbol `id` within its disk file.
    pub fn offset_of_chunk(&self, id: u32) -> u64 {
        id as u64 % self.chunks_per_disk()
    }

    /// Coding-symbol ids stored on disk `i`.
    pub fn chunk_range_of_disk(&self, i: u32) -> std::ops::Range<u32> {
        let cpd = self.chunks_per_disk();
        (i as u64 * cpd) as u32..((i as u64 + 1) * cpd) as u32
    }
}

/// The set of erased coding-symbol ids.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ErasureSet {
    chunk_ids: BTreeSet<u32>,
}

impl ErasureSet {
    pub fn empty() -> Self {
        ErasureSet::default()
    }

    pub fn from_ids(ids: impl IntoIterator<Item = u32>) -> Self {
        ErasureSet { chunk_ids: ids.into_iter().collect() }
    }

    pub fn contains(&self, id: u32) -> bool {
        self.chunk_ids.contains(&id)
    }

    pub fn len(&self) -> usize {
        self.chunk_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chunk_ids.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.chunk_ids.iter().copied()
    }
}

/// Smallest `n >= n_requested` with `s | n`.
pub fn normalize_n(n_requested: u64, s: u64) -> Result<u64> {
    if s == 0 {
        return Err(Error::Parameter("s must be at least 1".into()));
    }
    if n_requested < s {
        return Err(Error::Parameter(format!("n = {n_requested} must be at least s = {s}")));
    }
    Ok(n_requested.div_ceil(s) * s)
}

/// Columns for one disk: `count` coding symbols drawn in order from a stream
/// seeded with `seed` (degree draw first, then the neighbor draws).
pub fn build_disk_columns(seed: u64, k: u64, count: u64, dist: &DegreeDistribution) -> Vec<Vec<u32>> {
    let mut stream = RandomStream::new(seed);
    let mut columns = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let degree = sample_degree(dist, &mut stream);
        let neighbors = sample_neighbors(&mut stream, degree, k)
            .expect("distribution degrees are capped at k");
        columns.push(neighbors);
    }
    columns
}

/// Builds the full generator matrix: disk `i` contributes `n/s` columns from
/// seed `seed + i`.
pub fn build_generator(
    k: u64,
    n: u64,
    s: u64,
    seed: u64,
    dist: &DegreeDistribution,
) -> Result<GeneratorMatrix> {
    if s == 0 || n == 0 || k == 0 {
        return Err(Error::Parameter("k, n and s must be positive".into()));
    }
    if n % s != 0 {
        return Err(Error::Parameter(format!("s = {s} must divide n = {n}")));
    }
    if dist.max_degree() as u64 > k {
        return Err(Error::Parameter("distribution degrees exceed k".into()));
    }
    let cpd = n / s;
    let mut columns = Vec::with_capacity(n as usize);
    let mut per_disk_seed = Vec::with_capacity(s as usize);
    for i in 0..s {
        let disk_seed = seed + i;
        per_disk_seed.push(disk_seed);
        columns.extend(build_disk_columns(disk_seed, k, cpd, dist));
    }
    Ok(GeneratorMatrix { k, n, s, columns, per_disk_seed })
}

/// Coding-symbol ids lost when the given disks fail.
pub fn erasure_set(failed_disks: &[u32], n: u64, s: u64) -> Result<ErasureSet> {
    let cpd = n / s;
    let mut ids = BTreeSet::new();
    for &disk in failed_disks {
        if disk as u64 >= s {
            return Err(Error::Parameter(format!("disk index {disk} out of range (s = {s})")));
        }
        for id in disk as u64 * cpd..(disk as u64 + 1) * cpd {
            ids.insert(id as u32);
        }
    }
    Ok(ErasureSet { chunk_ids: ids })
}
