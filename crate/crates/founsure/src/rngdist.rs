//! Deterministic pseudo-random streams and degree-distribution sampling.
//!
//! Every structural choice in a code instance (coding-symbol degrees, their
//! data-node neighbors, parameter-search draws) comes from a seeded linear
//! congruential stream. Replaying a stream from its origin seed reproduces
//! the full assignment bit-for-bit on any platform, which is what lets the
//! decoder and repair engine rebuild the graph from metadata alone.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Default code seed used when the caller does not supply one.
pub const DEFAULT_SEED: u64 = 1_389_488_782;

/// Default Robust Soliton `c` tuning constant.
pub const DEFAULT_RSD_C: f64 = 0.1;
/// Default Robust Soliton decode-failure bound `delta`.
pub const DEFAULT_RSD_DELTA: f64 = 0.05;

const LCG_MULTIPLIER: u64 = 1_103_515_245;
const LCG_INCREMENT: u64 = 12_345;
const LCG_MODULUS: u64 = 1 << 31;

/// A 31-bit linear congruential stream with classic ANSI-C constants.
///
/// The state update is `state' = (1103515245 * state + 12345) mod 2^31` and
/// the emitted value is the new state. Advancing is the only mutation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RandomStream {
    state: u64,
    origin_seed: u64,
    draws: u64,
}

impl RandomStream {
    pub fn new(seed: u64) -> Self {
        RandomStream {
            state: seed % LCG_MODULUS,
            origin_seed: seed,
            draws: 0,
        }
    }

    /// Advances the stream and returns the next 31-bit value.
    pub fn next_value(&mut self) -> u32 {
        self.state = (LCG_MULTIPLIER.wrapping_mul(self.state) + LCG_INCREMENT) % LCG_MODULUS;
        self.draws += 1;
        self.state as u32
    }

    /// The next value mapped into `[0, 1)`.
    pub fn next_unit(&mut self) -> f64 {
        self.next_value() as f64 / LCG_MODULUS as f64
    }

    pub fn origin_seed(&self) -> u64 {
        self.origin_seed
    }

    /// Number of values emitted so far.
    pub fn draws(&self) -> u64 {
        self.draws
    }
}

/// Degree distribution families supported by the encoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DistKind {
    /// The fixed ten-term finite distribution (max degree 65).
    FiniteDist,
    /// Robust Soliton with the library defaults for `c` and `delta`.
    Rsd,
}

impl fmt::Display for DistKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DistKind::FiniteDist => write!(f, "FiniteDist"),
            DistKind::Rsd => write!(f, "RSD"),
        }
    }
}

impl FromStr for DistKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "FiniteDist" => Ok(DistKind::FiniteDist),
            "RSD" => Ok(DistKind::Rsd),
            other => Err(Error::Config(format!("unknown degree distribution '{other}'"))),
        }
    }
}

/// The ten-term finite distribution used by default.
const FINITE_DIST: [(u32, f64); 10] = [
    (1, 0.007969),
    (2, 0.49357),
    (3, 0.16622),
    (4, 0.072646),
    (5, 0.082558),
    (8, 0.056058),
    (9, 0.037229),
    (19, 0.05559),
    (64, 0.025023),
    (65, 0.003135),
];

/// A sampled degree distribution: strictly increasing degrees, probabilities
/// summing to one, and the cumulative sums used for inverse-CDF sampling.
#[derive(Debug, Clone)]
pub struct DegreeDistribution {
    kind: DistKind,
    support: Vec<(u32, f64)>,
    cdf: Vec<f64>,
}

impl DegreeDistribution {
    pub fn kind(&self) -> DistKind {
        self.kind
    }

    /// `(degree, probability)` pairs with strictly increasing degrees.
    pub fn support(&self) -> &[(u32, f64)] {
        &self.support
    }

    pub fn cdf(&self) -> &[f64] {
        &self.cdf
    }

    pub fn max_degree(&self) -> u32 {
        self.support.last().map(|&(d, _)| d).unwrap_or(0)
    }

    /// Expected degree under the distribution.
    pub fn mean_degree(&self) -> f64 {
        self.support.iter().map(|&(d, p)| d as f64 * p).sum()
    }
}

/// Builds a degree distribution truncated to degrees `<= k`.
///
/// For [`DistKind::FiniteDist`] the fixed ten-term table is used; any entry
/// with degree above `k` is merged into degree `k` and the result is
/// renormalized to sum to one. For [`DistKind::Rsd`] the usual `rho + tau`
/// Robust Soliton construction is normalized over degrees `1..=k`.
pub fn make_distribution(
    kind: DistKind,
    k: u64,
    rsd_c: f64,
    rsd_delta: f64,
) -> Result<DegreeDistribution> {
    if k < 1 {
        return Err(Error::Parameter(format!("k = {k} must be at least 1")));
    }
    let raw: Vec<(u32, f64)> = match kind {
        DistKind::FiniteDist => {
            let mut merged: Vec<(u32, f64)> = Vec::new();
            for &(d, p) in FINITE_DIST.iter() {
                let d = d.min(k as u32);
                match merged.last_mut() {
                    Some(last) if last.0 == d => last.1 += p,
                    _ => merged.push((d, p)),
                }
            }
            merged
        }
        DistKind::Rsd => {
            if k < 2 {
                return Err(Error::Parameter("RSD requires k >= 2".into()));
            }
            if rsd_c <= 0.0 {
                return Err(Error::Parameter(format!("RSD c = {rsd_c} must be positive")));
            }
            if !(rsd_delta > 0.0 && rsd_delta < 1.0) {
                return Err(Error::Parameter(format!(
                    "RSD delta = {rsd_delta} must lie in (0, 1)"
                )));
            }
            let kf = k as f64;
            let r = rsd_c * (kf / rsd_delta).ln() * kf.sqrt();
            let spike = ((kf / r).floor() as u64).clamp(1, k);
            let mut terms = Vec::with_capacity(k as usize);
            for d in 1..=k {
                let rho = if d == 1 { 1.0 / kf } else { 1.0 / (d as f64 * (d as f64 - 1.0)) };
                let tau = if d < spike {
                    r / (d as f64 * kf)
                } else if d == spike {
                    (r * (r / rsd_delta).ln() / kf).max(0.0)
                } else {
                    0.0
                };
                terms.push((d as u32, rho + tau));
            }
            terms
        }
    };

    let total: f64 = raw.iter().map(|&(_, p)| p).sum();
    if total <= 0.0 {
        return Err(Error::Config("degree distribution has zero mass".into()));
    }
    let support: Vec<(u32, f64)> = raw
        .into_iter()
        .filter(|&(_, p)| p > 0.0)
        .map(|(d, p)| (d, p / total))
        .collect();
    let mut cdf = Vec::with_capacity(support.len());
    let mut acc = 0.0;
    for &(_, p) in &support {
        acc += p;
        cdf.push(acc);
    }
    // Pin the tail so inverse-CDF lookups cannot fall off the end.
    if let Some(last) = cdf.last_mut() {
        *last = 1.0;
    }
    debug_assert!(support.windows(2).all(|w| w[0].0 < w[1].0));
    Ok(DegreeDistribution { kind, support, cdf })
}

/// Draws one degree by pushing the next stream value through the inverse CDF.
pub fn sample_degree(dist: &DegreeDistribution, stream: &mut RandomStream) -> u32 {
    let u = stream.next_unit();
    let idx = dist.cdf.partition_point(|&c| c <= u).min(dist.support.len() - 1);
    dist.support[idx].0
}

/// Selects `degree` distinct data-node indices in `[0, k)`.
///
/// Indices come from modulo reduction of successive stream values; duplicate
/// hits are rejected and redrawn, so stream consumption stays proportional to
/// the degree. The returned indices are sorted.
pub fn sample_neighbors(stream: &mut RandomStream, degree: u32, k: u64) -> Result<Vec<u32>> {
    if degree as u64 > k {
        return Err(Error::Parameter(format!("degree {degree} exceeds k = {k}")));
    }
    let mut picked: Vec<u32> = Vec::with_capacity(degree as usize);
    while picked.len() < degree as usize {
        let candidate = (stream.next_value() as u64 % k) as u32;
        if let Err(pos) = picked.binary_search(&candidate) {
            picked.insert(pos, candidate);
        }
    }
    Ok(picked)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lcg_first_values() {
        let mut s = RandomStream::new(1);
        assert_eq!(s.next_value(), 1_103_527_590);
        let mut z = RandomStream::new(0);
        assert_eq!(z.next_value(), 12_345);
    }

    #[test]
    fn lcg_determinism_and_draw_count() {
        let mut a = RandomStream::new(DEFAULT_SEED);
        let mut b = RandomStream::new(DEFAULT_SEED);
        for i in 1..=3 {
            assert_eq!(a.next_value(), b.next_value());
            assert_eq!(a.draws(), i);
        }
        assert_eq!(a.origin_seed(), DEFAULT_SEED);
    }

    #[test]
    fn finite_dist_support_matches_table() {
        let dist = make_distribution(DistKind::FiniteDist, 500, 0.0, 0.5).unwrap();
        assert_eq!(dist.support().len(), 10);
        for (&(d, p), &(ed, ep)) in dist.support().iter().zip(FINITE_DIST.iter()) {
            assert_eq!(d, ed);
            // Table entries sum to 0.999998; normalization shifts each by ~2e-6.
            assert!((p - ep).abs() < 1e-5, "degree {d}: {p} vs {ep}");
        }
        let sum: f64 = dist.support().iter().map(|&(_, p)| p).sum();
        assert!((sum - 1.0).abs() < 1e-9);
    }

    #[test]
    fn finite_dist_truncates_at_k() {
        let dist = make_distribution(DistKind::FiniteDist, 10, 0.0, 0.5).unwrap();
        assert_eq!(dist.max_degree(), 10);
        let sum: f64 = dist.support().iter().map(|&(_, p)| p).sum();
        assert!((sum - 1.0).abs() < 1e-9);
        // Degrees 19, 64 and 65 all fold into degree 10.
        let tail = dist.support().last().unwrap();
        assert_eq!(tail.0, 10);
        let expected = (0.05559 + 0.025023 + 0.003135) / 0.999998;
        assert!((tail.1 - expected).abs() < 1e-6);
    }

    #[test]
    fn rsd_normalizes() {
        let dist = make_distribution(DistKind::Rsd, 100, 0.1, 0.5).unwrap();
        let sum: f64 = dist.support().iter().map(|&(_, p)| p).sum();
        assert!((sum - 1.0).abs() < 1e-9);
        assert!(dist.max_degree() <= 100);
        let cdf = dist.cdf();
        assert!(cdf.windows(2).all(|w| w[0] <= w[1]));
        assert!((cdf.last().unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn degenerate_distribution_always_degree_one() {
        let dist = make_distribution(DistKind::FiniteDist, 1, 0.0, 0.5).unwrap();
        assert_eq!(dist.support().len(), 1);
        let mut s = RandomStream::new(7);
        for _ in 0..32 {
            assert_eq!(sample_degree(&dist, &mut s), 1);
        }
    }

    #[test]
    fn sample_degree_statistics() {
        let dist = make_distribution(DistKind::FiniteDist, 500, 0.0, 0.5).unwrap();
        let mut s = RandomStream::new(DEFAULT_SEED);
        let samples = 1_000_000usize;
        let mut sum = 0u64;
        let mut twos = 0u64;
        for _ in 0..samples {
            let d = sample_degree(&dist, &mut s);
            sum += d as u64;
            if d == 2 {
                twos += 1;
            }
            assert!(dist.support().iter().any(|&(sd, _)| sd == d));
        }
        let mean = sum as f64 / samples as f64;
        assert!((mean - 5.842).abs() < 0.05, "mean degree {mean}");
        let freq2 = twos as f64 / samples as f64;
        assert!((freq2 - 0.49357).abs() < 0.005, "degree-2 frequency {freq2}");
    }

    #[test]
    fn neighbors_full_set_when_degree_is_k() {
        let mut s = RandomStream::new(42);
        let picked = sample_neighbors(&mut s, 10, 10).unwrap();
        assert_eq!(picked, (0..10).collect::<Vec<u32>>());
    }

    #[test]
    fn neighbors_single_reproducible() {
        let a = sample_neighbors(&mut RandomStream::new(99), 1, 10).unwrap();
        let b = sample_neighbors(&mut RandomStream::new(99), 1, 10).unwrap();
        assert_eq!(a.len(), 1);
        assert_eq!(a, b);
    }

    #[test]
    fn neighbors_uniform() {
        let mut s = RandomStream::new(DEFAULT_SEED);
        let mut counts = [0u32; 10];
        for _ in 0..100_000 {
            let picked = sample_neighbors(&mut s, 1, 10).unwrap();
            counts[picked[0] as usize] += 1;
        }
        for (i, &c) in counts.iter().enumerate() {
            let freq = c as f64 / 100_000.0;
            assert!((freq - 0.1).abs() < 0.01, "index {i}: {freq}");
        }
    }

    #[test]
    fn neighbors_reject_duplicates() {
        let mut picker = RandomStream::new(3);
        for _ in 0..10_000 {
            let k = 2 + picker.next_value() as u64 % 64;
            let degree = 1 + (picker.next_value() as u64 % k) as u32;
            let mut s = RandomStream::new(picker.next_value() as u64);
            let picked = sample_neighbors(&mut s, degree, k).unwrap();
            assert_eq!(picked.len(), degree as usize);
            assert!(picked.windows(2).all(|w| w[0] < w[1]), "sorted and distinct");
            assert!(picked.iter().all(|&i| (i as u64) < k));
        }
    }

    #[test]
    fn neighbors_degree_above_k_rejected() {
        let mut s = RandomStream::new(1);
        assert!(sample_neighbors(&mut s, 11, 10).is_err());
    }

    #[test]
    fn unknown_distribution_name() {
        assert!("FiniteDist".parse::<DistKind>().is_ok());
        assert!("RSD".parse::<DistKind>().is_ok());
        assert!("Soliton".parse::<DistKind>().is_err());
    }
}
