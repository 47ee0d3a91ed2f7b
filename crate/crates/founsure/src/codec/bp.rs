//! Peeling decode over the survival matrix, and decoding-path generation.
//!
//! The content decoder repeatedly finds surviving coding symbols with exactly
//! one undecoded neighbor, resolves that neighbor, and folds the result into
//! every other equation it appears in. If data symbols remain, a second pass
//! peels the precode parity groups. Decoding-path generation performs the
//! same peel on indices only, but delays newly decoded symbols to the next
//! iteration and picks, for every source symbol, the single lowest-degree
//! coding symbol that decodes it; the recorded path drives multi-worker
//! decoding with disjoint writes.

use std::collections::BTreeSet;
use std::thread;

use crate::error::{Error, Result};
use crate::graph::{ErasureSet, GeneratorMatrix};
use crate::precode::{precode_bp, precode_bp_mask, Check1Sets};

use super::stripe::WorkQueue;

/// Reverse adjacency: for each data symbol, the positions (into the surviving
/// column list) of the equations that reference it.
fn build_rows(matrix: &GeneratorMatrix, surviving: &[u32]) -> Vec<Vec<u32>> {
    let mut rows = vec![Vec::new(); matrix.k() as usize];
    for (pos, &id) in surviving.iter().enumerate() {
        for &d in matrix.column(id) {
            rows[d as usize].push(pos as u32);
        }
    }
    rows
}

fn surviving_ids(matrix: &GeneratorMatrix, erasures: &ErasureSet) -> Vec<u32> {
    (0..matrix.n() as u32).filter(|&id| !erasures.contains(id)).collect()
}

/// Decodes one stripe from its surviving coding symbols.
///
/// `survivors` holds `(coding id, t bytes)` pairs sorted by id and must cover
/// exactly the complement of `erasures`. Returns the `k*t`-byte data region
/// and the set of data symbols left unresolved after both the graph pass and
/// the precode pass. An incomplete result is not an error here; callers
/// decide what unresolved user symbols mean.
pub fn bp_decode_stripe(
    survivors: &[(u32, &[u8])],
    matrix: &GeneratorMatrix,
    erasures: &ErasureSet,
    check1: &Check1Sets,
    maxit: usize,
    t: usize,
) -> Result<(Vec<u8>, BTreeSet<u32>)> {
    let k = matrix.k() as usize;
    if survivors.len() + erasures.len() != matrix.n() as usize {
        return Err(Error::Parameter(
            "survivors must cover exactly the non-erased coding symbols".into(),
        ));
    }
    debug_assert!(survivors.windows(2).all(|w| w[0].0 < w[1].0));
    debug_assert!(survivors.iter().all(|&(id, _)| !erasures.contains(id)));

    let ids: Vec<u32> = survivors.iter().map(|&(id, _)| id).collect();
    let rows = build_rows(matrix, &ids);

    let m = survivors.len();
    let mut values = vec![0u8; m * t];
    for (pos, &(_, block)) in survivors.iter().enumerate() {
        if block.len() != t {
            return Err(Error::Parameter(format!(
                "survivor chunk has {} bytes, expected {t}",
                block.len()
            )));
        }
        values[pos * t..(pos + 1) * t].copy_from_slice(block);
    }
    let mut counts: Vec<u32> = ids.iter().map(|&id| matrix.degree(id) as u32).collect();
    let mut alive = vec![true; m];

    let mut data = vec![0u8; k * t];
    let mut resolved = vec![false; k];
    let mut remaining = k;

    let mut sweeps = 0usize;
    while remaining > 0 && sweeps < maxit {
        let mut progress = false;
        for pos in 0..m {
            if !alive[pos] || counts[pos] != 1 {
                continue;
            }
            let col = matrix.column(ids[pos]);
            let f = match col.iter().find(|&&d| !resolved[d as usize]) {
                Some(&f) => f as usize,
                None => {
                    alive[pos] = false;
                    continue;
                }
            };
            data[f * t..(f + 1) * t].copy_from_slice(&values[pos * t..(pos + 1) * t]);
            resolved[f] = true;
            remaining -= 1;
            alive[pos] = false;
            for &other in &rows[f] {
                let other = other as usize;
                if other != pos && alive[other] {
                    counts[other] -= 1;
                    for (v, d) in values[other * t..(other + 1) * t]
                        .iter_mut()
                        .zip(&data[f * t..(f + 1) * t])
                    {
                        *v ^= d;
                    }
                }
            }
            progress = true;
        }
        sweeps += 1;
        if !progress {
            break;
        }
    }

    if remaining > 0 {
        precode_bp(&mut resolved, &mut data, check1, t);
    }
    let unresolved: BTreeSet<u32> =
        (0..k as u32).filter(|&f| !resolved[f as usize]).collect();
    Ok((data, unresolved))
}

/// Structure-only peel: returns the mask of data symbols decodable from the
/// surviving coding symbols, before any precode pass.
pub fn peel_mask(matrix: &GeneratorMatrix, erasures: &ErasureSet) -> Vec<bool> {
    let k = matrix.k() as usize;
    let ids = surviving_ids(matrix, erasures);
    let rows = build_rows(matrix, &ids);
    let mut counts: Vec<u32> = ids.iter().map(|&id| matrix.degree(id) as u32).collect();
    let mut alive = vec![true; ids.len()];
    let mut resolved = vec![false; k];
    let mut remaining = k;

    // Frontier peel; the final mask is order-independent.
    let mut ripple: Vec<usize> =
        (0..ids.len()).filter(|&pos| counts[pos] == 1).collect();
    while let Some(pos) = ripple.pop() {
        if !alive[pos] {
            continue;
        }
        alive[pos] = false;
        let col = matrix.column(ids[pos]);
        let f = match col.iter().find(|&&d| !resolved[d as usize]) {
            Some(&f) => f as usize,
            None => continue,
        };
        resolved[f] = true;
        remaining -= 1;
        for &other in &rows[f] {
            let other = other as usize;
            if other != pos && alive[other] {
                counts[other] -= 1;
                if counts[other] == 1 {
                    ripple.push(other);
                }
            }
        }
        if remaining == 0 {
            break;
        }
    }
    resolved
}

/// Whether all `b` user symbols are recoverable from the given erasure
/// pattern, using the graph pass followed by the precode pass.
pub fn can_decode_users(
    matrix: &GeneratorMatrix,
    check1: &Check1Sets,
    erasures: &ErasureSet,
    b: u64,
) -> bool {
    let mut mask = peel_mask(matrix, erasures);
    if mask.iter().take(b as usize).all(|&r| r) {
        return true;
    }
    precode_bp_mask(&mut mask, check1);
    mask.iter().take(b as usize).all(|&r| r)
}

/// A decoding schedule: ordered `(source, coding)` pairs grouped into
/// iterations, where every pair in iteration `i` depends only on sources
/// decoded strictly before `i`.
#[derive(Debug, Clone, Default)]
pub struct DecodingPath {
    /// `(data symbol, coding symbol)` pairs in decode order; no data symbol
    /// appears twice.
    pub pairs: Vec<(u32, u32)>,
    /// End offsets into `pairs`, one per iteration.
    pub rounds: Vec<usize>,
    /// The ripple of each iteration: every coding symbol that reached
    /// residual degree one, including the candidates that were not selected.
    pub ripples: Vec<Vec<u32>>,
}

impl DecodingPath {
    pub fn iterations(&self) -> usize {
        self.rounds.len()
    }

    /// Pairs selected in iteration `i`.
    pub fn round_pairs(&self, i: usize) -> &[(u32, u32)] {
        let start = if i == 0 { 0 } else { self.rounds[i - 1] };
        &self.pairs[start..self.rounds[i]]
    }
}

/// Generates a decoding path for the given erasure pattern.
///
/// Per iteration: collect every surviving coding symbol whose residual degree
/// is one (the ripple), then for each still-unresolved data symbol pick the
/// candidate with the minimum original degree (ties broken by lowest coding
/// id). Symbols decoded in an iteration only take effect in the next one.
pub fn dpg(
    matrix: &GeneratorMatrix,
    erasures: &ErasureSet,
    maxit: usize,
) -> (DecodingPath, BTreeSet<u32>) {
    let k = matrix.k() as usize;
    let ids = surviving_ids(matrix, erasures);
    let rows = build_rows(matrix, &ids);
    let mut counts: Vec<u32> = ids.iter().map(|&id| matrix.degree(id) as u32).collect();
    let mut alive = vec![true; ids.len()];
    let mut resolved = vec![false; k];
    let mut remaining = k;

    let mut path = DecodingPath::default();
    let mut iteration = 0usize;
    while remaining > 0 && iteration < maxit {
        let ripple: Vec<usize> = (0..ids.len())
            .filter(|&pos| alive[pos] && counts[pos] == 1)
            .collect();
        if ripple.is_empty() {
            break;
        }
        path.ripples.push(ripple.iter().map(|&pos| ids[pos]).collect());

        // source symbol -> best (original degree, coding id, position)
        let mut best: Vec<Option<(usize, u32, usize)>> = vec![None; k];
        for &pos in &ripple {
            let id = ids[pos];
            let f = match matrix.column(id).iter().find(|&&d| !resolved[d as usize]) {
                Some(&f) => f as usize,
                None => continue,
            };
            let degree = matrix.degree(id);
            let candidate = (degree, id, pos);
            match &best[f] {
                Some(cur) if (cur.0, cur.1) <= (candidate.0, candidate.1) => {}
                _ => best[f] = Some(candidate),
            }
        }

        let mut decoded_this_round: Vec<(usize, usize)> = Vec::new();
        for (f, slot) in best.iter().enumerate() {
            if let Some(&(_, id, pos)) = slot.as_ref() {
                path.pairs.push((f as u32, id));
                decoded_this_round.push((f, pos));
            }
        }
        path.rounds.push(path.pairs.len());

        // Apply the round's decodes after selection, so intra-iteration
        // dependencies never form.
        for &(f, _) in &decoded_this_round {
            resolved[f] = true;
            remaining -= 1;
            for &other in &rows[f] {
                let other = other as usize;
                if alive[other] {
                    counts[other] -= 1;
                    if counts[other] == 0 {
                        alive[other] = false;
                    }
                }
            }
        }
        iteration += 1;
    }

    let unresolved: BTreeSet<u32> =
        (0..k as u32).filter(|&f| !resolved[f as usize]).collect();
    (path, unresolved)
}

/// Decodes one stripe by replaying a decoding path.
///
/// Within an iteration every pair reads only symbols decoded in earlier
/// iterations, so pairs are distributed over `workers` threads with dynamic
/// assignment; writes are disjoint by construction and the output is
/// byte-identical to the sequential decoder.
pub fn replay_decode_stripe(
    path: &DecodingPath,
    survivors: &[(u32, &[u8])],
    matrix: &GeneratorMatrix,
    check1: &Check1Sets,
    t: usize,
    workers: usize,
) -> Result<(Vec<u8>, BTreeSet<u32>)> {
    let k = matrix.k() as usize;
    let n = matrix.n() as usize;
    let mut chunk_of: Vec<Option<&[u8]>> = vec![None; n];
    for &(id, block) in survivors {
        if block.len() != t {
            return Err(Error::Parameter(format!(
                "survivor chunk has {} bytes, expected {t}",
                block.len()
            )));
        }
        chunk_of[id as usize] = Some(block);
    }

    let mut data = vec![0u8; k * t];
    let mut resolved = vec![false; k];

    let decode_pair = |f: u32, g: u32, data: &[u8]| -> Result<Vec<u8>> {
        let mut block = chunk_of[g as usize]
            .ok_or_else(|| Error::Internal(format!("path references erased chunk {g}")))?
            .to_vec();
        for &d in matrix.column(g) {
            if d != f {
                debug_assert!(resolved[d as usize], "path uses undecoded symbol {d}");
                for (v, s) in block.iter_mut().zip(&data[d as usize * t..(d as usize + 1) * t]) {
                    *v ^= s;
                }
            }
        }
        Ok(block)
    };

    for i in 0..path.iterations() {
        let pairs = path.round_pairs(i);
        let results: Vec<(u32, Vec<u8>)> = if workers <= 1 || pairs.len() < 2 {
            let mut out = Vec::with_capacity(pairs.len());
            for &(f, g) in pairs {
                out.push((f, decode_pair(f, g, &data)?));
            }
            out
        } else {
            let queue = WorkQueue::new(pairs.len());
            let data_ref = &data;
            let decode_ref = &decode_pair;
            let worker_count = workers.min(pairs.len());
            let mut collected: Vec<Vec<(u32, Result<Vec<u8>>)>> = Vec::new();
            thread::scope(|scope| {
                let mut handles = Vec::with_capacity(worker_count);
                for _ in 0..worker_count {
                    let queue = &queue;
                    handles.push(scope.spawn(move || {
                        let mut local = Vec::new();
                        while let Some(idx) = queue.grab() {
                            let (f, g) = pairs[idx];
                            local.push((f, decode_ref(f, g, data_ref)));
                        }
                        local
                    }));
                }
                for h in handles {
                    collected.push(h.join().expect("decode worker panicked"));
                }
            });
            let mut out = Vec::with_capacity(pairs.len());
            for (f, r) in collected.into_iter().flatten() {
                out.push((f, r?));
            }
            out
        };
        for (f, block) in results {
            let f = f as usize;
            data[f * t..(f + 1) * t].copy_from_slice(&block);
            resolved[f] = true;
        }
    }

    if resolved.iter().any(|&r| !r) {
        precode_bp(&mut resolved, &mut data, check1, t);
    }
    let unresolved: BTreeSet<u32> =
        (0..k as u32).filter(|&f| !resolved[f as usize]).collect();
    Ok((data, unresolved))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_generator, erasure_set};
    use crate::precode::build_check1;
    use crate::rngdist::{make_distribution, DistKind, RandomStream};

    #[test]
    fn roundtrip_no_erasures() {
        let k = 30u64;
        let n = 60u64;
        let dist = make_distribution(DistKind::FiniteDist, k, 0.0, 0.5).unwrap();
        let matrix = build_generator(k, n, 6, 424_242, &dist).unwrap();
        let check1 = build_check1(25, k).unwrap();
        let t = 16usize;
        let mut stream = RandomStream::new(50);
        let payload: Vec<u8> = (0..25 * t).map(|_| stream.next_value() as u8).collect();
        let buf = super::super::encode_stripe(&payload, &matrix, &check1, t as u64).unwrap();

        let survivors: Vec<(u32, &[u8])> =
            (0..n as u32).map(|j| (j, buf.coding_symbol(j))).collect();
        let erasures = ErasureSet::empty();
        let (data, unresolved) =
            bp_decode_stripe(&survivors, &matrix, &erasures, &check1, n as usize, t).unwrap();
        assert!(
            unresolved.iter().all(|&f| f >= 25),
            "user symbols must resolve: {unresolved:?}"
        );
        assert_eq!(&data[..25 * t], payload.as_slice());
    }

    #[test]
    fn all_coding_erased_decodes_nothing() {
        let k = 10u64;
        let dist = make_distribution(DistKind::FiniteDist, k, 0.0, 0.5).unwrap();
        let matrix = build_generator(k, 20, 2, 9, &dist).unwrap();
        let check1 = build_check1(k, k).unwrap();
        let erasures = erasure_set(&[0, 1], 20, 2).unwrap();
        let (_, unresolved) =
            bp_decode_stripe(&[], &matrix, &erasures, &check1, 20, 4).unwrap();
        assert_eq!(unresolved.len(), 10);
    }

    #[test]
    fn dpg_degree_one_columns_converge_in_one_iteration() {
        // k = 1 forces every column to be {0}: the whole ripple appears in
        // the first iteration and exactly k pairs are recorded.
        let dist = make_distribution(DistKind::FiniteDist, 1, 0.0, 0.5).unwrap();
        let matrix = build_generator(1, 6, 2, 5, &dist).unwrap();
        let (path, unresolved) = dpg(&matrix, &ErasureSet::empty(), 6);
        assert!(unresolved.is_empty());
        assert_eq!(path.iterations(), 1);
        assert_eq!(path.pairs.len(), 1);
        assert_eq!(path.ripples[0].len(), 6);
    }

    #[test]
    fn dpg_matches_bp_and_replays() {
        let k = 40u64;
        let n = 100u64;
        let dist = make_distribution(DistKind::FiniteDist, k, 0.0, 0.5).unwrap();
        let matrix = build_generator(k, n, 5, 31_337, &dist).unwrap();
        let check1 = build_check1(35, k).unwrap();
        let t = 8usize;
        let mut stream = RandomStream::new(4);
        let payload: Vec<u8> = (0..35 * t).map(|_| stream.next_value() as u8).collect();
        let buf = super::super::encode_stripe(&payload, &matrix, &check1, t as u64).unwrap();

        let erasures = erasure_set(&[2], n, 5).unwrap();
        let survivors: Vec<(u32, &[u8])> = (0..n as u32)
            .filter(|&j| !erasures.contains(j))
            .map(|j| (j, buf.coding_symbol(j)))
            .collect();

        let (bp_data, bp_unresolved) =
            bp_decode_stripe(&survivors, &matrix, &erasures, &check1, n as usize, t).unwrap();
        let (path, dpg_unresolved) = dpg(&matrix, &erasures, n as usize);
        // Each source symbol is decoded by exactly one pair.
        let mut seen = std::collections::HashSet::new();
        for &(f, _) in &path.pairs {
            assert!(seen.insert(f), "source {f} decoded twice");
        }
        let (replay_data, replay_unresolved) =
            replay_decode_stripe(&path, &survivors, &matrix, &check1, t, 1).unwrap();
        if bp_unresolved.is_empty() && dpg_unresolved.is_empty() {
            assert_eq!(bp_data, replay_data);
            assert_eq!(replay_unresolved, bp_unresolved);
        }
    }

    #[test]
    fn dpg_prefers_minimum_original_degree() {
        // Find an instance where some ripple offers two candidates for the
        // same source; the selected pair must carry the smallest original
        // degree, with the lowest id breaking ties.
        let k = 24u64;
        let dist = make_distribution(DistKind::FiniteDist, k, 0.0, 0.5).unwrap();
        let mut checked = false;
        for seed in 0..200u64 {
            let matrix = build_generator(k, 96, 1, seed, &dist).unwrap();
            let (path, _) = dpg(&matrix, &ErasureSet::empty(), 96);
            for (i, ripple) in path.ripples.iter().enumerate() {
                // Reconstruct the unknown of each ripple member at round i.
                let decoded_before: std::collections::HashSet<u32> = path.pairs
                    [..if i == 0 { 0 } else { path.rounds[i - 1] }]
                    .iter()
                    .map(|&(f, _)| f)
                    .collect();
                let mut by_source: std::collections::HashMap<u32, Vec<u32>> =
                    std::collections::HashMap::new();
                for &g in ripple {
                    let unknowns: Vec<u32> = matrix
                        .column(g)
                        .iter()
                        .copied()
                        .filter(|d| !decoded_before.contains(d))
                        .collect();
                    assert_eq!(unknowns.len(), 1, "ripple member must have one unknown");
                    by_source.entry(unknowns[0]).or_default().push(g);
                }
                for (f, candidates) in by_source {
                    if candidates.len() < 2 {
                        continue;
                    }
                    let best = candidates
                        .iter()
                        .map(|&g| (matrix.degree(g), g))
                        .min()
                        .unwrap();
                    let chosen = path
                        .round_pairs(i)
                        .iter()
                        .find(|&&(pf, _)| pf == f)
                        .map(|&(_, g)| g)
                        .expect("source with candidates must be decoded this round");
                    assert_eq!((matrix.degree(chosen), chosen), best);
                    checked = true;
                }
            }
            if checked {
                break;
            }
        }
        assert!(checked, "no multi-candidate ripple found across seeds");
    }
}
