//! Local recovery groups and the check data file.
//!
//! The check generation algorithm sparsifies the generator matrix by column
//! XORs while tracking which original columns were combined. On a full-rank
//! matrix it converges to `k` weight-1 columns and `n - k` zero columns: a
//! weight-1 column at row `d` yields a data/coding group (`D_d` equals the
//! XOR of the combined coding symbols), a zero column yields a coding-only
//! group (the combined coding symbols XOR to zero). Two derivation methods
//! mine additional coding-only groups from degree-1 coding nodes and from
//! the precode parity groups. Everything is serialized to
//! `<stem>_check.data` as a flat little-endian i32 array.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::GeneratorMatrix;
use crate::metadata::{check_file_name, read_metadata, write_metadata};
use crate::precode::Check1Sets;

/// One local recovery group.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum CheckSet {
    /// `D_{data_index} = XOR of the coding members.`
    Check2 { data_index: u32, members: Vec<u32> },
    /// `XOR of the coding members = 0.`
    Check3 { members: Vec<u32> },
}

impl CheckSet {
    pub fn members(&self) -> &[u32] {
        match self {
            CheckSet::Check2 { members, .. } => members,
            CheckSet::Check3 { members } => members,
        }
    }

    pub fn cardinality(&self) -> usize {
        self.members().len()
    }

    pub fn data_index(&self) -> Option<u32> {
        match self {
            CheckSet::Check2 { data_index, .. } => Some(*data_index),
            CheckSet::Check3 { .. } => None,
        }
    }
}

/// Symmetric difference of two sorted index sets.
pub fn set_xor(a: &[u32], b: &[u32]) -> Vec<u32> {
    debug_assert!(a.windows(2).all(|w| w[0] < w[1]));
    debug_assert!(b.windows(2).all(|w| w[0] < w[1]));
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// Fixed-width bit columns used inside the check generation sweep.
struct BitColumns {
    words: usize,
    data: Vec<u64>,
}

impl BitColumns {
    fn new(bits: usize, cols: usize) -> Self {
        let words = bits.div_ceil(64).max(1);
        BitColumns { words, data: vec![0u64; words * cols] }
    }

    fn set(&mut self, col: usize, bit: usize) {
        self.data[col * self.words + bit / 64] |= 1u64 << (bit % 64);
    }

    fn col(&self, col: usize) -> &[u64] {
        &self.data[col * self.words..(col + 1) * self.words]
    }

    fn weight(&self, col: usize) -> u32 {
        self.col(col).iter().map(|w| w.count_ones()).sum()
    }

    fn xor_weight(&self, a: usize, b: usize) -> u32 {
        self.col(a)
            .iter()
            .zip(self.col(b))
            .map(|(x, y)| (x ^ y).count_ones())
            .sum()
    }

    fn xor_into(&mut self, dst: usize, src: usize) {
        let (d, s) = if dst < src {
            let (lo, hi) = self.data.split_at_mut(src * self.words);
            (&mut lo[dst * self.words..(dst + 1) * self.words], &hi[..self.words])
        } else {
            let (lo, hi) = self.data.split_at_mut(dst * self.words);
            (&mut hi[..self.words], &lo[src * self.words..(src + 1) * self.words])
        };
        for (x, y) in d.iter_mut().zip(s) {
            *x ^= y;
        }
    }

    fn indices(&self, col: usize) -> Vec<u32> {
        let mut out = Vec::new();
        for (w, &word) in self.col(col).iter().enumerate() {
            let mut word = word;
            while word != 0 {
                let bit = word.trailing_zeros();
                out.push((w as u32) * 64 + bit);
                word &= word - 1;
            }
        }
        out
    }
}

/// Result of the check generation sweep.
#[derive(Debug, Clone)]
pub struct CgaOutcome {
    /// Reduced generator columns as sorted row-index sets.
    pub reduced: Vec<Vec<u32>>,
    /// For each column, the sorted set of original columns combined into it.
    pub combinations: Vec<Vec<u32>>,
    /// True when exactly `n - k` columns are zero and `k` have weight one.
    pub converged: bool,
}

/// Sparsifies the generator matrix by repeated column XORs.
///
/// Sweeps the literal `(j, i)` double loop: when `2*w(col_j) > w(col_i)` and
/// `w(col_j ^ col_i) < w(col_j)`, column `i` is folded into column `j` and
/// the combination matrix tracks the fold. Stops when `n - k` zero columns
/// exist or a full sweep makes no progress.
pub fn cga(matrix: &GeneratorMatrix) -> CgaOutcome {
    cga_inner(matrix.k() as usize, matrix.n() as usize, matrix, None)
}

/// Test hook: `observe(j, outcome)` runs after every committed fold so
/// bookkeeping invariants can be audited step by step.
pub(crate) fn cga_with_observer(
    matrix: &GeneratorMatrix,
    observe: impl FnMut(usize, &CgaOutcome),
) -> CgaOutcome {
    let k = matrix.k() as usize;
    let n = matrix.n() as usize;
    cga_inner(k, n, matrix, Some(Box::new(observe)))
}

type Observer<'a> = Box<dyn FnMut(usize, &CgaOutcome) + 'a>;

fn cga_inner(k: usize, n: usize, matrix: &GeneratorMatrix, mut observe: Option<Observer>) -> CgaOutcome {
    let mut cols = BitColumns::new(k, n);
    for (j, col) in matrix.columns().iter().enumerate() {
        for &d in col {
            cols.set(j, d as usize);
        }
    }
    let mut combos = BitColumns::new(n, n);
    for j in 0..n {
        combos.set(j, j);
    }
    let mut weights: Vec<u32> = (0..n).map(|j| cols.weight(j)).collect();
    let mut zero_cols = weights.iter().filter(|&&w| w == 0).count();

    let target = n.saturating_sub(k);
    while zero_cols < target {
        let mut progress = false;
        for j in 0..n {
            for i in 0..n {
                if j == i || weights[j] == 0 || weights[i] == 0 {
                    continue;
                }
                if 2 * weights[j] > weights[i] {
                    let xw = cols.xor_weight(j, i);
                    if xw < weights[j] {
                        cols.xor_into(j, i);
                        combos.xor_into(j, i);
                        weights[j] = xw;
                        if xw == 0 {
                            zero_cols += 1;
                        }
                        progress = true;
                        if let Some(obs) = observe.as_mut() {
                            let snapshot = snapshot(&cols, &combos, &weights, n, target);
                            obs(j, &snapshot);
                        }
                    }
                }
            }
        }
        if !progress {
            break;
        }
    }

    snapshot(&cols, &combos, &weights, n, target)
}

fn snapshot(
    cols: &BitColumns,
    combos: &BitColumns,
    weights: &[u32],
    n: usize,
    target: usize,
) -> CgaOutcome {
    let reduced: Vec<Vec<u32>> = (0..n).map(|j| cols.indices(j)).collect();
    let combinations: Vec<Vec<u32>> = (0..n).map(|j| combos.indices(j)).collect();
    let zero = weights.iter().filter(|&&w| w == 0).count();
    let ones = weights.iter().filter(|&&w| w == 1).count();
    CgaOutcome {
        reduced,
        combinations,
        converged: zero == target && ones == n - target,
    }
}

/// Reads the recovery groups out of a (possibly partial) sweep result:
/// weight-1 columns become data/coding groups, zero columns become
/// coding-only groups; anything heavier is skipped.
pub fn extract_check_sets(outcome: &CgaOutcome) -> Vec<CheckSet> {
    let mut sets = Vec::new();
    for (col, combo) in outcome.reduced.iter().zip(&outcome.combinations) {
        match col.len() {
            1 => sets.push(CheckSet::Check2 { data_index: col[0], members: combo.clone() }),
            0 => {
                debug_assert!(combo.len() >= 2, "zero column from an empty combination");
                if combo.len() >= 2 {
                    sets.push(CheckSet::Check3 { members: combo.clone() });
                }
            }
            _ => {}
        }
    }
    sets
}

fn check2_lookup(sets: &[CheckSet]) -> HashMap<u32, &[u32]> {
    let mut map = HashMap::new();
    for set in sets {
        if let CheckSet::Check2 { data_index, members } = set {
            map.entry(*data_index).or_insert(members.as_slice());
        }
    }
    map
}

/// Derives coding-only groups from degree-1 coding nodes: such a node
/// carries its data neighbor verbatim, so substituting it into the
/// neighbor's data/coding group leaves a pure coding relation.
pub fn derive_checks_degree_one(matrix: &GeneratorMatrix, sets: &[CheckSet]) -> Vec<CheckSet> {
    let by_data = check2_lookup(sets);
    let mut existing: HashSet<Vec<u32>> = sets
        .iter()
        .filter_map(|s| match s {
            CheckSet::Check3 { members } => Some(members.clone()),
            _ => None,
        })
        .collect();
    let mut derived = Vec::new();
    for j in 0..matrix.n() as u32 {
        let col = matrix.column(j);
        if col.len() != 1 {
            continue;
        }
        if let Some(members) = by_data.get(&col[0]) {
            let substituted = set_xor(members, &[j]);
            if substituted.len() >= 2 && existing.insert(substituted.clone()) {
                derived.push(CheckSet::Check3 { members: substituted });
            }
        }
    }
    derived
}

/// Derives coding-only groups through the precode: a parity group XORs to
/// zero over data symbols, so the symmetric difference of its members'
/// data/coding groups XORs to zero over coding symbols. Groups whose members
/// lack a data/coding set (unconverged sweep) are skipped.
pub fn derive_checks_via_precode(
    check1: &Check1Sets,
    sets: &[CheckSet],
) -> Vec<CheckSet> {
    let by_data = check2_lookup(sets);
    let mut existing: HashSet<Vec<u32>> = sets
        .iter()
        .filter_map(|s| match s {
            CheckSet::Check3 { members } => Some(members.clone()),
            _ => None,
        })
        .collect();
    let mut derived = Vec::new();
    for group in check1.groups() {
        let mut acc: Option<Vec<u32>> = Some(Vec::new());
        for &d in group {
            match by_data.get(&d) {
                Some(members) => {
                    acc = acc.map(|cur| set_xor(&cur, members));
                }
                None => {
                    acc = None;
                    break;
                }
            }
        }
        if let Some(members) = acc {
            if members.len() >= 2 && existing.insert(members.clone()) {
                derived.push(CheckSet::Check3 { members });
            }
        }
    }
    derived
}

/// Ordering switches for the serialized group list.
#[derive(Debug, Clone, Copy)]
pub struct CheckOrdering {
    pub order_check2: bool,
    pub order_check3: bool,
}

impl Default for CheckOrdering {
    fn default() -> Self {
        CheckOrdering { order_check2: true, order_check3: true }
    }
}

/// Sorts the groups smallest-cardinality-first. With both switches on the
/// whole list is sorted; with one switch on, only that kind is reordered
/// (within the positions it already occupies).
pub fn order_check_sets(sets: &mut [CheckSet], ordering: CheckOrdering) {
    if ordering.order_check2 && ordering.order_check3 {
        sets.sort_by_key(|s| s.cardinality());
        return;
    }
    for want_check2 in [true, false] {
        let enabled = if want_check2 { ordering.order_check2 } else { ordering.order_check3 };
        if !enabled {
            continue;
        }
        let positions: Vec<usize> = sets
            .iter()
            .enumerate()
            .filter(|(_, s)| matches!(s, CheckSet::Check2 { .. }) == want_check2)
            .map(|(i, _)| i)
            .collect();
        let mut picked: Vec<CheckSet> = positions.iter().map(|&i| sets[i].clone()).collect();
        picked.sort_by_key(|s| s.cardinality());
        for (pos, set) in positions.into_iter().zip(picked) {
            sets[pos] = set;
        }
    }
}

/// The serialized integer image of a group list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckDataImage {
    pub ints: Vec<i32>,
}

impl CheckDataImage {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.ints.len() * 4);
        for &v in &self.ints {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }
}

/// Serializes groups in the given order. Records follow the grammar
/// `{1, data_index, degree, members...}` for data/coding groups and
/// `{0, degree, members...}` for coding-only groups.
pub fn serialize_checkdata(sets: &[CheckSet]) -> CheckDataImage {
    let mut ints = Vec::new();
    for set in sets {
        match set {
            CheckSet::Check2 { data_index, members } => {
                ints.push(1);
                ints.push(*data_index as i32);
                ints.push(members.len() as i32);
                ints.extend(members.iter().map(|&m| m as i32));
            }
            CheckSet::Check3 { members } => {
                ints.push(0);
                ints.push(members.len() as i32);
                ints.extend(members.iter().map(|&m| m as i32));
            }
        }
    }
    CheckDataImage { ints }
}

/// Parses a check data image, validating the record grammar and index
/// ranges (`data_index < k`, coding members `< n`). Errors name the byte
/// offset of the offending integer.
pub fn parse_checkdata(bytes: &[u8], k: u64, n: u64) -> Result<Vec<CheckSet>> {
    if bytes.len() % 4 != 0 {
        return Err(Error::CheckDataFormat {
            offset: bytes.len() / 4 * 4,
            reason: "length is not a multiple of 4".into(),
        });
    }
    let ints: Vec<i32> = bytes
        .chunks_exact(4)
        .map(|c| i32::from_le_bytes(c.try_into().unwrap()))
        .collect();

    let mut sets = Vec::new();
    let mut pos = 0usize;
    let at = |pos: usize| pos * 4;
    while pos < ints.len() {
        let flag = ints[pos];
        let take = |pos: usize, what: &str| -> Result<i32> {
            ints.get(pos).copied().ok_or_else(|| Error::CheckDataFormat {
                offset: at(pos),
                reason: format!("truncated record: missing {what}"),
            })
        };
        match flag {
            1 => {
                let data_index = take(pos + 1, "data index")?;
                if data_index < 0 || data_index as u64 >= k {
                    return Err(Error::CheckDataFormat {
                        offset: at(pos + 1),
                        reason: format!("data index {data_index} out of range (k = {k})"),
                    });
                }
                let degree = take(pos + 2, "degree")?;
                if degree < 1 {
                    return Err(Error::CheckDataFormat {
                        offset: at(pos + 2),
                        reason: format!("bad degree {degree}"),
                    });
                }
                let mut members = Vec::with_capacity(degree as usize);
                for m in 0..degree as usize {
                    let idx = take(pos + 3 + m, "coding member")?;
                    if idx < 0 || idx as u64 >= n {
                        return Err(Error::CheckDataFormat {
                            offset: at(pos + 3 + m),
                            reason: format!("coding index {idx} out of range (n = {n})"),
                        });
                    }
                    members.push(idx as u32);
                }
                sets.push(CheckSet::Check2 { data_index: data_index as u32, members });
                pos += 3 + degree as usize;
            }
            0 => {
                let degree = take(pos + 1, "degree")?;
                if degree < 2 {
                    return Err(Error::CheckDataFormat {
                        offset: at(pos + 1),
                        reason: format!("bad degree {degree} for a coding-only group"),
                    });
                }
                let mut members = Vec::with_capacity(degree as usize);
                for m in 0..degree as usize {
                    let idx = take(pos + 2 + m, "coding member")?;
                    if idx < 0 || idx as u64 >= n {
                        return Err(Error::CheckDataFormat {
                            offset: at(pos + 2 + m),
                            reason: format!("coding index {idx} out of range (n = {n})"),
                        });
                    }
                    members.push(idx as u32);
                }
                sets.push(CheckSet::Check3 { members });
                pos += 2 + degree as usize;
            }
            other => {
                return Err(Error::CheckDataFormat {
                    offset: at(pos),
                    reason: format!("flag must be 0 or 1, found {other}"),
                });
            }
        }
    }
    Ok(sets)
}

/// Upper bound on the serialized integer count for `n` groups: the member
/// total plus `k + 2n` record overhead. Equality holds exactly when the
/// sweep converged and only its `n` groups are serialized.
pub fn checkdata_int_budget(member_total: usize, k: u64, n: u64) -> u64 {
    member_total as u64 + k + 2 * n
}

/// What check generation produced.
#[derive(Debug, Clone)]
pub struct GenChecksOutcome {
    /// Every serialized group, in file order.
    pub sets: Vec<CheckSet>,
    /// Groups that came straight out of the sweep (before derivation).
    pub cga_set_count: usize,
    pub cga_converged: bool,
    /// Integers written to the check data file.
    pub checkdata_ints: u64,
    /// Updated n/s after an extension, if one was requested.
    pub extended_to: Option<(u64, u64)>,
}

/// Generates (or regenerates) `<stem>_check.data` for an encoded file.
///
/// Runs the sweep over the generator matrix, extracts groups, augments them
/// with both derivation methods, orders smallest-first and serializes. With
/// `modify_metadata`, the integer count is recorded in the metadata file.
/// A nonzero `extend_disks` first applies the code update (growing or
/// shrinking `n` and `s`) so the regenerated checks describe the new code.
pub fn gen_checks(
    file_name: &str,
    coding_dir: &Path,
    modify_metadata: bool,
    extend_disks: i64,
) -> Result<GenChecksOutcome> {
    let mut meta = read_metadata(coding_dir, file_name)?;
    let mut extended_to = None;
    if extend_disks != 0 {
        crate::repair::update_code(&mut meta, extend_disks, coding_dir)?;
        extended_to = Some((meta.params.n, meta.params.s));
    }
    let inst = meta.params.instance()?;

    let outcome = cga(&inst.matrix);
    let mut sets = extract_check_sets(&outcome);
    let cga_set_count = sets.len();
    if !outcome.converged {
        let warning = format!(
            "check generation did not converge ({} of {} groups extracted); fast repair may degrade",
            cga_set_count,
            meta.params.n
        );
        eprintln!("warning: {warning}");
        if !meta.warnings.contains(&warning) {
            meta.warnings.push(warning);
        }
    }
    let mut derived = derive_checks_degree_one(&inst.matrix, &sets);
    sets.append(&mut derived);
    let mut derived2 = derive_checks_via_precode(&inst.check1, &sets);
    sets.append(&mut derived2);
    order_check_sets(&mut sets, CheckOrdering::default());

    let image = serialize_checkdata(&sets);
    fs::write(coding_dir.join(check_file_name(file_name)), image.to_bytes())?;

    let checkdata_ints = image.ints.len() as u64;
    if modify_metadata {
        meta.checkdata_ints = checkdata_ints;
    }
    if modify_metadata || !meta.warnings.is_empty() || extended_to.is_some() {
        write_metadata(&meta, coding_dir)?;
    }

    Ok(GenChecksOutcome {
        sets,
        cga_set_count,
        cga_converged: outcome.converged,
        checkdata_ints,
        extended_to,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_generator;
    use crate::rngdist::{make_distribution, DistKind};

    fn finite_matrix(k: u64, n: u64, s: u64, seed: u64) -> GeneratorMatrix {
        let dist = make_distribution(DistKind::FiniteDist, k, 0.0, 0.5).unwrap();
        build_generator(k, n, s, seed, &dist).unwrap()
    }

    #[test]
    fn set_xor_worked_example() {
        // D0 = C0^C1^C2, D1 = C1^C12^C17^C20^C99, D2 = C0^C21^C99 combine to
        // the coding-only relation {C2, C12, C17, C20, C21}.
        let d0 = vec![0, 1, 2];
        let d1 = vec![1, 12, 17, 20, 99];
        let d2 = vec![0, 21, 99];
        let combined = set_xor(&set_xor(&d0, &d1), &d2);
        assert_eq!(combined, vec![2, 12, 17, 20, 21]);
        assert!(set_xor(&d1, &d1).is_empty());
        assert_eq!(set_xor(&d2, &[]), d2);
    }

    #[test]
    fn cga_identity_is_fixed_point() {
        let matrix = finite_matrix(1, 4, 2, 5); // every column {0}, weight 1
        let outcome = cga(&matrix);
        // k = 1, n = 4: converged when 3 columns are zero and one has weight 1.
        assert!(outcome.converged);
        let zeros = outcome.reduced.iter().filter(|c| c.is_empty()).count();
        assert_eq!(zeros, 3);
    }

    #[test]
    fn cga_bookkeeping_invariant() {
        let matrix = finite_matrix(12, 24, 2, 99);
        let originals: Vec<Vec<u32>> = matrix.columns().to_vec();
        let mut audits = 0usize;
        cga_with_observer(&matrix, |j, snap| {
            // Column j must equal the XOR of the original columns its
            // combination set claims.
            let mut acc: Vec<u32> = Vec::new();
            for &src in &snap.combinations[j] {
                acc = set_xor(&acc, &originals[src as usize]);
            }
            assert_eq!(acc, snap.reduced[j], "bookkeeping broke at column {j}");
            audits += 1;
        });
        assert!(audits > 0, "no folds happened");
    }

    #[test]
    fn extract_identity_sets() {
        let matrix = finite_matrix(1, 4, 2, 5);
        let outcome = cga(&matrix);
        let sets = extract_check_sets(&outcome);
        let check2 = sets.iter().filter(|s| matches!(s, CheckSet::Check2 { .. })).count();
        let check3 = sets.iter().filter(|s| matches!(s, CheckSet::Check3 { .. })).count();
        assert_eq!(check2, 1);
        assert_eq!(check3, 3);
    }

    #[test]
    fn serialize_worked_example() {
        let sets = vec![
            CheckSet::Check3 { members: vec![13, 56, 17, 66] },
            CheckSet::Check2 { data_index: 19, members: vec![11, 13] },
            CheckSet::Check3 { members: vec![39, 88] },
        ];
        let image = serialize_checkdata(&sets);
        assert_eq!(image.ints, vec![0, 4, 13, 56, 17, 66, 1, 19, 2, 11, 13, 0, 2, 39, 88]);
        let parsed = parse_checkdata(&image.to_bytes(), 100, 100).unwrap();
        assert_eq!(parsed, sets);
    }

    #[test]
    fn serialize_empty() {
        assert!(serialize_checkdata(&[]).ints.is_empty());
        assert!(parse_checkdata(&[], 10, 10).unwrap().is_empty());
    }

    #[test]
    fn parse_minimal_record() {
        let image = CheckDataImage { ints: vec![1, 5, 1, 9] };
        let parsed = parse_checkdata(&image.to_bytes(), 10, 10).unwrap();
        assert_eq!(parsed, vec![CheckSet::Check2 { data_index: 5, members: vec![9] }]);
    }

    #[test]
    fn parse_rejects_bad_flag_truncation_and_range() {
        let bad_flag = CheckDataImage { ints: vec![2, 1, 1] }.to_bytes();
        match parse_checkdata(&bad_flag, 10, 10) {
            Err(Error::CheckDataFormat { offset, .. }) => assert_eq!(offset, 0),
            other => panic!("expected format error, got {other:?}"),
        }
        let truncated = CheckDataImage { ints: vec![0, 3, 1] }.to_bytes();
        assert!(parse_checkdata(&truncated, 10, 10).is_err());
        let out_of_range = CheckDataImage { ints: vec![0, 2, 1, 42] }.to_bytes();
        assert!(parse_checkdata(&out_of_range, 10, 10).is_err());
        assert!(parse_checkdata(&[0u8, 0, 0], 10, 10).is_err());
    }

    #[test]
    fn ordering_smallest_first() {
        let mut sets = vec![
            CheckSet::Check3 { members: vec![1, 2, 3, 4] },
            CheckSet::Check2 { data_index: 0, members: vec![5] },
            CheckSet::Check3 { members: vec![6, 7] },
        ];
        order_check_sets(&mut sets, CheckOrdering::default());
        let sizes: Vec<usize> = sets.iter().map(|s| s.cardinality()).collect();
        assert_eq!(sizes, vec![1, 2, 4]);
    }

    #[test]
    fn derive_degree_one_substitution() {
        // Column j = {d} with Check2(d) = {a, b} yields Check3 {j, a, b};
        // a member equal to j cancels instead.
        let sets = vec![CheckSet::Check2 { data_index: 0, members: vec![2, 5] }];
        let matrix = finite_matrix(1, 4, 2, 5); // k = 1: all columns are {0}
        let derived = derive_checks_degree_one(&matrix, &sets);
        // j = 0, 1, 3 grow the set; j = 2 cancels down to {5} and is dropped.
        assert_eq!(derived.len(), 3);
        assert!(derived.contains(&CheckSet::Check3 { members: vec![0, 2, 5] }));
        assert!(derived.contains(&CheckSet::Check3 { members: vec![1, 2, 5] }));
        assert!(derived.contains(&CheckSet::Check3 { members: vec![2, 3, 5] }));
    }

    #[test]
    fn derive_degree_one_empty_without_unit_columns() {
        let matrix = finite_matrix(40, 80, 4, 8);
        if matrix.columns().iter().all(|c| c.len() > 1) {
            let sets = vec![CheckSet::Check2 { data_index: 0, members: vec![1, 2] }];
            assert!(derive_checks_degree_one(&matrix, &sets).is_empty());
        }
    }

    #[test]
    fn derive_via_precode_worked_example() {
        // One parity group (D0, D1, D2) with the published data/coding
        // relations combines into {C2, C12, C17, C20, C21}.
        let check1 = crate::precode::Check1Sets::from_groups(0, 3, vec![vec![0, 1, 2]]);
        let sets = vec![
            CheckSet::Check2 { data_index: 0, members: vec![0, 1, 2] },
            CheckSet::Check2 { data_index: 1, members: vec![1, 12, 17, 20, 99] },
            CheckSet::Check2 { data_index: 2, members: vec![0, 21, 99] },
        ];
        let derived = derive_checks_via_precode(&check1, &sets);
        assert_eq!(derived, vec![CheckSet::Check3 { members: vec![2, 12, 17, 20, 21] }]);

        // Two identical Check2 sets in a two-member group cancel to nothing.
        let twins = crate::precode::Check1Sets::from_groups(0, 2, vec![vec![0, 1]]);
        let twin_sets = vec![
            CheckSet::Check2 { data_index: 0, members: vec![3, 4] },
            CheckSet::Check2 { data_index: 1, members: vec![3, 4] },
        ];
        assert!(derive_checks_via_precode(&twins, &twin_sets).is_empty());

        // A group whose member lacks a Check2 set is skipped.
        let partial = vec![CheckSet::Check2 { data_index: 0, members: vec![3, 4] }];
        assert!(derive_checks_via_precode(&twins, &partial).is_empty());
    }
}
