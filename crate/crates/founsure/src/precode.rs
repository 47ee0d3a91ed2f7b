//! Array LDPC precoding.
//!
//! Before the fountain stage, `b` user symbols are expanded to `k` data
//! symbols by appending `k - b` parity symbols. The parity structure is a
//! binary array LDPC code built from the largest prime factor `p` of `k`:
//! with `k' = k / p` and `j' = k' - b / p`, the code defines `j' * p` parity
//! groups of `k' - j' + 1` symbols each, every group XORing to zero. Groups
//! reference only symbols defined earlier, so encoding is a single linear
//! sweep.
//!
//! Because an array code does not exist for every `(b, k)` pair, user
//! parameters are first pushed through a randomized search
//! ([`adjust_parameters`]) that lands on a nearby realizable pair.

use crate::error::{Error, Result};
use crate::rngdist::RandomStream;

/// Tunables of the parameter-adjustment search and array-code construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Thresholds {
    /// Allowed distance between the requested and chosen `b`.
    pub diff_th: u64,
    /// Allowed distance between the requested and chosen precode rate.
    pub rrate_th: f64,
    /// Allowed zero padding appended to the file.
    pub red_byte_th: u64,
    /// Upper edge of the random search window around `b / rate`.
    pub rand_win_max: u32,
    /// Lower edge of the random search window.
    pub rand_win_min: u32,
    /// Minimum array-code `j'` value.
    pub array_min_jj: u64,
    /// Minimum array-code `k'` value (stored for configuration parity; the
    /// search itself never consults it).
    pub array_min_kk: u64,
    /// Failed attempts before the acceptance thresholds are relaxed.
    pub tries_th: u64,
    /// Relaxation step for `diff_th`.
    pub delta_diff_th: u64,
    /// Relaxation step for `rrate_th`.
    pub delta_rrate_th: f64,
    /// Relaxation step for `red_byte_th`. The candidate set is finite, so
    /// without relaxing the padding bound the search can cycle forever for
    /// most file sizes.
    pub delta_red_byte_th: u64,
}

impl Thresholds {
    /// Default thresholds for a symbol size of `t` bytes.
    pub fn for_symbol_size(t: u64) -> Self {
        Thresholds {
            diff_th: 16,
            rrate_th: 0.02,
            red_byte_th: 4 * t,
            rand_win_max: 64,
            rand_win_min: 32,
            array_min_jj: 2,
            array_min_kk: 3,
            tries_th: 200,
            delta_diff_th: 8,
            delta_rrate_th: 0.005,
            delta_red_byte_th: t,
        }
    }
}

/// Derived shape of a realizable array LDPC precode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrecodeParams {
    pub b: u64,
    pub k: u64,
    /// Largest prime factor of `k`.
    pub p: u64,
    pub k_prime: u64,
    pub j_prime: u64,
}

impl PrecodeParams {
    /// Validates `(b, k)` and derives `(p, k', j')`. `b = k` is the trivial
    /// rate-1 precode with no parity groups.
    pub fn derive(b: u64, k: u64) -> Result<Self> {
        if k < 1 || b < 1 || b > k {
            return Err(Error::Parameter(format!("unusable precode pair b = {b}, k = {k}")));
        }
        if b == k {
            return Ok(PrecodeParams { b, k, p: 1, k_prime: k, j_prime: 0 });
        }
        let p = largest_prime_factor(k)?;
        if b % p != 0 {
            return Err(Error::Parameter(format!(
                "b = {b} is not a multiple of p = {p} (largest prime factor of k = {k})"
            )));
        }
        let k_prime = k / p;
        let j_prime = k_prime - b / p;
        Ok(PrecodeParams { b, k, p, k_prime, j_prime })
    }

    pub fn rate(&self) -> f64 {
        self.b as f64 / self.k as f64
    }
}

/// The parity groups of the precode. Group `r` defines parity symbol
/// `b + r` as the XOR of the other members; every group XORs to zero once
/// the parities are in place.
#[derive(Debug, Clone)]
pub struct Check1Sets {
    b: u64,
    k: u64,
    groups: Vec<Vec<u32>>,
}

impl Check1Sets {
    #[cfg(test)]
    pub(crate) fn from_groups(b: u64, k: u64, groups: Vec<Vec<u32>>) -> Self {
        Check1Sets { b, k, groups }
    }

    pub fn b(&self) -> u64 {
        self.b
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    /// Parity groups in definition order; each is sorted ascending and its
    /// last element is the parity symbol the group defines.
    pub fn groups(&self) -> &[Vec<u32>] {
        &self.groups
    }

    pub fn parity_count(&self) -> u64 {
        self.k - self.b
    }
}

/// Largest prime factor of `k >= 2` by trial division.
pub fn largest_prime_factor(k: u64) -> Result<u64> {
    if k < 2 {
        return Err(Error::Parameter(format!("no prime factor for k = {k}")));
    }
    let mut rest = k;
    let mut largest = 1;
    let mut d = 2u64;
    while d * d <= rest {
        while rest % d == 0 {
            largest = d;
            rest /= d;
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if rest > 1 {
        largest = rest;
    }
    Ok(largest)
}

/// Result of the parameter-adjustment search.
#[derive(Debug, Clone)]
pub struct AdjustedParams {
    pub b: u64,
    pub k: u64,
    /// Zero bytes appended past the end of the file: `b*t*stripes - filesize`.
    pub redundant_zeros: u64,
    /// Number of `b*t`-byte partitions the file is split into.
    pub stripes: u64,
    /// Thresholds in effect when the search accepted, after any relaxations.
    pub final_thresholds: Thresholds,
}

/// Randomized search for a realizable `(b, k)` near the requested values.
///
/// Candidate `k` values are drawn in a window around `requested_b / r_ldpc`;
/// each candidate is accepted only if the derived array code exists
/// (`k' <= p`, `j' <= p`, `k' >= j'`), the resulting `b` is close to the
/// request, the realized rate is close to `r_ldpc`, and the zero padding
/// stays below `red_byte_th`. Every `tries_th` failed attempts the acceptance
/// thresholds are relaxed by their delta steps. Exceeding 10^7 iterations is
/// reported as non-convergence.
pub fn adjust_parameters(
    r_ldpc: f64,
    filesize: u64,
    requested_b: u64,
    t: u64,
    thresholds: &Thresholds,
    stream: &mut RandomStream,
) -> Result<AdjustedParams> {
    if !(r_ldpc > 0.0 && r_ldpc < 1.0) {
        return Err(Error::Parameter(format!("precode rate {r_ldpc} must lie in (0, 1)")));
    }
    if filesize == 0 {
        return Err(Error::Parameter("empty input file".into()));
    }
    if t == 0 {
        return Err(Error::Parameter("symbol size t must be positive".into()));
    }
    if requested_b == 0 {
        return Err(Error::Parameter("requested b must be positive".into()));
    }
    let window = (thresholds.rand_win_max + thresholds.rand_win_min) as i64;
    if window <= 0 {
        return Err(Error::Parameter("empty random search window".into()));
    }

    let b_hat = requested_b as i64;
    let center = (b_hat as f64 / r_ldpc).floor() as i64;
    let fsize = filesize as i64;
    let ti = t as i64;

    let mut th = thresholds.clone();
    let mut b: i64 = 0;
    let mut k: i64 = 1;
    let mut k_prime: i64 = 1_000_000_000;
    let mut j_prime: i64 = 1_000_000_000;
    let mut p: i64 = 2;
    let mut blocks: i64 = 1;
    let mut tries: u64 = 0;
    let mut iter: u64 = 0;

    loop {
        let rate_err = if k > 0 { (b as f64 / k as f64 - r_ldpc).abs() } else { f64::INFINITY };
        let accepted = (b - b_hat).unsigned_abs() <= th.diff_th
            && rate_err <= th.rrate_th
            && k_prime <= p
            && j_prime <= p
            && k_prime >= j_prime
            && (blocks * ti * b - fsize).unsigned_abs() <= th.red_byte_th;
        if accepted {
            break;
        }

        let offset = stream.next_value() as i64 % window - thresholds.rand_win_min as i64;
        let candidate = center + offset;
        if candidate >= 2 {
            k = candidate;
            p = largest_prime_factor(k as u64)? as i64;
            k_prime = k / p;
            j_prime = k_prime - b_hat / p;
            if j_prime < th.array_min_jj as i64 {
                j_prime = 2;
            }
            b = (k_prime - j_prime) * p;
            if b > 0 {
                blocks = fsize / (ti * b) + 1;
                tries += 1;
                if tries > th.tries_th {
                    th.diff_th += th.delta_diff_th;
                    th.rrate_th += th.delta_rrate_th;
                    th.red_byte_th += th.delta_red_byte_th;
                    tries = 0;
                }
            }
        }

        iter += 1;
        if iter > 10_000_000 {
            return Err(Error::NonConvergence(iter));
        }
    }

    let blocks = filesize / (t * b as u64) + 1;
    let redundant_zeros = b as u64 * t * blocks - filesize;
    Ok(AdjustedParams {
        b: b as u64,
        k: k as u64,
        redundant_zeros,
        stripes: blocks,
        final_thresholds: th,
    })
}

/// Builds the parity groups of the array LDPC precode for a realizable
/// `(b, k)` pair. Intermediate index terms that go negative are reduced into
/// `[0, p)` before use, preserving the residue class.
pub fn build_check1(b: u64, k: u64) -> Result<Check1Sets> {
    let params = PrecodeParams::derive(b, k)?;
    if params.j_prime == 0 {
        return Ok(Check1Sets { b, k, groups: Vec::new() });
    }
    let p = params.p as i64;
    let kp = params.k_prime as i64;
    let jp = params.j_prime as i64;
    let mut groups = Vec::with_capacity((k - b) as usize);
    for j in 0..jp {
        for i in 0..p {
            let row = (i + j * p) as u64;
            let span = kp - jp; // members per group, excluding the parity
            let mut members = Vec::with_capacity(span as usize + 1);
            for m in 1..=span {
                let shift = (m * (jp - j - 1) - i - 1).rem_euclid(p);
                let value = kp * p - (jp - j + m - 1) * p - shift - 1;
                debug_assert!(value >= 0 && (value as u64) < b + (j as u64) * params.p);
                members.push(value as u32);
            }
            members.push((b + row) as u32);
            members.sort_unstable();
            groups.push(members);
        }
    }
    debug_assert_eq!(groups.len() as u64, k - b);
    Ok(Check1Sets { b, k, groups })
}

/// Fills the `k - b` parity symbols from `b` user symbols of `t` bytes each.
/// Groups are processed in definition order; each parity is the XOR of the
/// members already available (user data or previously emitted parities).
pub fn apply_precode(user_data: &[u8], sets: &Check1Sets, t: usize) -> Result<Vec<u8>> {
    let b = sets.b() as usize;
    if user_data.len() != b * t {
        return Err(Error::Internal(format!(
            "user data is {} bytes, expected {}",
            user_data.len(),
            b * t
        )));
    }
    let parity_count = sets.parity_count() as usize;
    let mut parities = vec![0u8; parity_count * t];
    for (r, group) in sets.groups().iter().enumerate() {
        let parity_index = (sets.b() + r as u64) as u32;
        for &m in group {
            if m == parity_index {
                continue;
            }
            let m = m as usize;
            let (dst, src) = if m < b {
                (&mut parities[r * t..(r + 1) * t], &user_data[m * t..(m + 1) * t])
            } else {
                debug_assert!(m - b < r);
                let (done, rest) = parities.split_at_mut(r * t);
                (&mut rest[..t], &done[(m - b) * t..(m - b + 1) * t])
            };
            for (d, s) in dst.iter_mut().zip(src.iter()) {
                *d ^= s;
            }
        }
    }
    Ok(parities)
}

/// Peels the parity groups over symbol contents: any group with exactly one
/// unknown member resolves it to the XOR of the others; repeats to fixpoint.
/// `known` and `symbols` cover all `k` data symbols. Stalling is legal; the
/// mask reports what was recovered.
pub fn precode_bp(known: &mut [bool], symbols: &mut [u8], sets: &Check1Sets, t: usize) {
    debug_assert_eq!(known.len() as u64, sets.k());
    debug_assert_eq!(symbols.len(), known.len() * t);
    loop {
        let mut progress = false;
        for group in sets.groups() {
            let mut unknown = None;
            let mut unknown_count = 0;
            for &m in group {
                if !known[m as usize] {
                    unknown_count += 1;
                    unknown = Some(m as usize);
                    if unknown_count > 1 {
                        break;
                    }
                }
            }
            if unknown_count == 1 {
                let u = unknown.unwrap();
                let mut block = vec![0u8; t];
                for &m in group {
                    let m = m as usize;
                    if m == u {
                        continue;
                    }
                    for (d, s) in block.iter_mut().zip(&symbols[m * t..(m + 1) * t]) {
                        *d ^= s;
                    }
                }
                symbols[u * t..(u + 1) * t].copy_from_slice(&block);
                known[u] = true;
                progress = true;
            }
        }
        if !progress {
            break;
        }
    }
}

/// Structure-only variant of [`precode_bp`]: advances the known mask without
/// touching contents. Used by reliability simulation and capability checks.
pub fn precode_bp_mask(known: &mut [bool], sets: &Check1Sets) {
    loop {
        let mut progress = false;
        for group in sets.groups() {
            let mut unknown = None;
            let mut unknown_count = 0;
            for &m in group {
                if !known[m as usize] {
                    unknown_count += 1;
                    unknown = Some(m as usize);
                    if unknown_count > 1 {
                        break;
                    }
                }
            }
            if unknown_count == 1 {
                known[unknown.unwrap()] = true;
                progress = true;
            }
        }
        if !progress {
            break;
        }
    }
}
