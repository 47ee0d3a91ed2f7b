//! Exhaustive failure-tolerance certification.
//!
//! For a given number of simultaneous disk failures `f`, every one of the
//! `C(s, f)` combinations is tried with a structure-only peel (boolean masks,
//! no symbol contents): a pattern is decodable when all `b` user symbols
//! resolve after the graph pass and the precode pass. Erasure decoding
//! depends only on the graph, so the structural verdict matches a real
//! content decode; that equivalence is itself under test.

use std::sync::Mutex;
use std::thread;

use crate::codec::can_decode_users;
use crate::error::{Error, Result};
use crate::graph::erasure_set;
use crate::params::{CodeInstance, CodeParams};

/// Default cap on the number of failing patterns kept in a report.
pub const DEFAULT_FAILING_CAP: usize = 64;

/// Lexicographic iterator over all `C(s, f)` disk-index combinations.
#[derive(Debug, Clone)]
pub struct Combinations {
    s: u64,
    f: u64,
    next: Option<Vec<u32>>,
}

impl Iterator for Combinations {
    type Item = Vec<u32>;

    fn next(&mut self) -> Option<Vec<u32>> {
        let current = self.next.take()?;
        // Advance: find the rightmost index that can still move up.
        let f = self.f as usize;
        let mut succ = current.clone();
        let mut i = f;
        loop {
            if i == 0 {
                self.next = None;
                break;
            }
            i -= 1;
            if (succ[i] as u64) < self.s - (f - i) as u64 {
                succ[i] += 1;
                for j in i + 1..f {
                    succ[j] = succ[j - 1] + 1;
                }
                self.next = Some(succ);
                break;
            }
        }
        Some(current)
    }
}

/// Yields every `f`-subset of `{0, .., s-1}` exactly once, in lexicographic
/// order. `f = 0` yields the single empty combination.
pub fn enumerate_failures(s: u64, f: u64) -> Result<Combinations> {
    if f > s {
        return Err(Error::Parameter(format!("cannot fail {f} of {s} disks")));
    }
    Ok(Combinations { s, f, next: Some((0..f as u32).collect()) })
}

/// `C(s, f)` without overflow for the sizes in play here.
pub fn binomial(s: u64, f: u64) -> u64 {
    if f > s {
        return 0;
    }
    let f = f.min(s - f);
    let mut acc: u128 = 1;
    for i in 0..f {
        acc = acc * (s - i) as u128 / (i + 1) as u128;
    }
    acc as u64
}

#[derive(Debug, Clone)]
pub struct ReliabilityReport {
    pub s: u64,
    pub f: u64,
    pub total_combinations: u64,
    pub decodable: u64,
    pub fraction: f64,
    /// First failing patterns, capped; sorted lexicographically.
    pub failing_patterns: Vec<Vec<u32>>,
}

impl ReliabilityReport {
    /// One machine-readable line: `f total decodable fraction`.
    pub fn report_line(&self) -> String {
        format!("{} {} {} {:.6}", self.f, self.total_combinations, self.decodable, self.fraction)
    }
}

/// Tries every `f`-failure combination and reports the decodable fraction.
/// Combinations are pulled from a shared iterator by `workers` threads, each
/// peeling with private mask state.
pub fn simdisk(
    inst: &CodeInstance,
    params: &CodeParams,
    f: u64,
    workers: usize,
    failing_cap: usize,
) -> Result<ReliabilityReport> {
    let total = binomial(params.s, f);
    let combos = enumerate_failures(params.s, f)?;

    let verdict = |pattern: &[u32]| -> Result<bool> {
        let erasures = erasure_set(pattern, params.n, params.s)?;
        Ok(can_decode_users(&inst.matrix, &inst.check1, &erasures, params.b))
    };

    let (decodable, mut failing) = if workers <= 1 || total < 2 {
        let mut decodable = 0u64;
        let mut failing = Vec::new();
        for pattern in combos {
            if verdict(&pattern)? {
                decodable += 1;
            } else {
                failing.push(pattern);
            }
        }
        (decodable, failing)
    } else {
        let shared = Mutex::new(combos);
        let results: Vec<(u64, Vec<Vec<u32>>)> = thread::scope(|scope| {
            let handles: Vec<_> = (0..workers)
                .map(|_| {
                    let shared = &shared;
                    let verdict = &verdict;
                    scope.spawn(move || -> Result<(u64, Vec<Vec<u32>>)> {
                        let mut decodable = 0u64;
                        let mut failing = Vec::new();
                        loop {
                            let pattern = { shared.lock().unwrap().next() };
                            let Some(pattern) = pattern else { break };
                            if verdict(&pattern)? {
                                decodable += 1;
                            } else {
                                failing.push(pattern);
                            }
                        }
                        Ok((decodable, failing))
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("reliability worker panicked"))
                .collect::<Result<Vec<_>>>()
        })?;
        let mut decodable = 0u64;
        let mut failing = Vec::new();
        for (d, fpats) in results {
            decodable += d;
            failing.extend(fpats);
        }
        (decodable, failing)
    };

    failing.sort();
    failing.truncate(failing_cap);
    let fraction = if total == 0 { 1.0 } else { decodable as f64 / total as f64 };
    Ok(ReliabilityReport {
        s: params.s,
        f,
        total_combinations: total,
        decodable,
        fraction,
        failing_patterns: failing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::PrecodeKind;
    use crate::rngdist::{DistKind, DEFAULT_SEED};

    fn small_params() -> CodeParams {
        CodeParams {
            b: 28,
            k: 35,
            n: 72,
            t: 32,
            s: 6,
            seed: DEFAULT_SEED,
            dist: DistKind::FiniteDist,
            precode: PrecodeKind::ArrayLdpc,
            stripes: 2,
            redundant_zeros: 1,
        }
    }

    #[test]
    fn combination_counts() {
        assert_eq!(enumerate_failures(4, 2).unwrap().count(), 6);
        assert_eq!(enumerate_failures(10, 3).unwrap().count(), 120);
        let empties: Vec<_> = enumerate_failures(5, 0).unwrap().collect();
        assert_eq!(empties, vec![Vec::<u32>::new()]);
        assert!(enumerate_failures(3, 4).is_err());
        assert_eq!(binomial(10, 3), 120);
    }

    #[test]
    fn combinations_are_lexicographic_and_unique() {
        let all: Vec<_> = enumerate_failures(6, 3).unwrap().collect();
        assert_eq!(all.len(), 20);
        for w in all.windows(2) {
            assert!(w[0] < w[1], "{:?} !< {:?}", w[0], w[1]);
        }
        assert!(all.iter().all(|c| c.windows(2).all(|w| w[0] < w[1])));
    }

    #[test]
    fn zero_failures_on_a_healthy_code() {
        let params = small_params();
        let inst = params.instance().unwrap();
        let report = simdisk(&inst, &params, 0, 1, DEFAULT_FAILING_CAP).unwrap();
        assert_eq!(report.total_combinations, 1);
        assert_eq!(report.fraction, 1.0, "seeded graph must decode with no erasures");
    }

    #[test]
    fn all_disks_failed_is_hopeless() {
        let params = small_params();
        let inst = params.instance().unwrap();
        let report = simdisk(&inst, &params, 6, 1, DEFAULT_FAILING_CAP).unwrap();
        assert_eq!(report.fraction, 0.0);
        assert_eq!(report.failing_patterns.len(), 1);
    }

    #[test]
    fn fractions_are_monotone_in_f() {
        let params = small_params();
        let inst = params.instance().unwrap();
        let mut last = 1.0f64;
        for f in 0..=params.s {
            let report = simdisk(&inst, &params, f, 1, DEFAULT_FAILING_CAP).unwrap();
            assert!(
                report.fraction <= last + 1e-12,
                "fraction({f}) = {} rose above {last}",
                report.fraction
            );
            last = report.fraction;
        }
    }

    #[test]
    fn parallel_matches_serial() {
        let params = small_params();
        let inst = params.instance().unwrap();
        for f in [1u64, 2, 3] {
            let a = simdisk(&inst, &params, f, 1, DEFAULT_FAILING_CAP).unwrap();
            let b = simdisk(&inst, &params, f, 4, DEFAULT_FAILING_CAP).unwrap();
            assert_eq!(a.decodable, b.decodable);
            assert_eq!(a.failing_patterns, b.failing_patterns);
        }
    }
}
