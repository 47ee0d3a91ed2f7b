//! The parameter record shared by every operation, and the code instance
//! (distribution + generator matrix + precode groups) rebuilt from it.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::graph::{build_generator, GeneratorMatrix};
use crate::precode::{build_check1, Check1Sets};
use crate::rngdist::{make_distribution, DegreeDistribution, DistKind, DEFAULT_RSD_C, DEFAULT_RSD_DELTA};

/// Precode families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PrecodeKind {
    /// Binary array LDPC precode.
    ArrayLdpc,
    /// No precode: every data symbol is user data (`b = k`).
    None,
}

impl fmt::Display for PrecodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PrecodeKind::ArrayLdpc => write!(f, "ArrayLDPC"),
            PrecodeKind::None => write!(f, "None"),
        }
    }
}

impl FromStr for PrecodeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ArrayLDPC" => Ok(PrecodeKind::ArrayLdpc),
            "None" => Ok(PrecodeKind::None),
            other => Err(Error::Config(format!("unknown precode '{other}'"))),
        }
    }
}

/// Everything needed to regenerate a code and interpret its coding directory.
#[derive(Debug, Clone, PartialEq)]
pub struct CodeParams {
    /// User data symbols per stripe.
    pub b: u64,
    /// Total data symbols per stripe (user + precode parities).
    pub k: u64,
    /// Coding symbols per stripe.
    pub n: u64,
    /// Bytes per symbol.
    pub t: u64,
    /// Failure domains (output files).
    pub s: u64,
    /// Origin seed of all pseudo-random structure.
    pub seed: u64,
    pub dist: DistKind,
    pub precode: PrecodeKind,
    /// Number of `b*t`-byte partitions of the input file.
    pub stripes: u64,
    /// Zero bytes appended past the end of the file.
    pub redundant_zeros: u64,
}

impl CodeParams {
    pub fn chunks_per_disk(&self) -> u64 {
        self.n / self.s
    }

    /// Bytes held by one healthy disk file.
    pub fn disk_file_size(&self) -> u64 {
        self.chunks_per_disk() * self.t * self.stripes
    }

    pub fn validate(&self) -> Result<()> {
        if self.b == 0 || self.k == 0 || self.n == 0 || self.t == 0 || self.s == 0 {
            return Err(Error::Parameter("b, k, n, t and s must all be positive".into()));
        }
        if self.b > self.k {
            return Err(Error::Parameter(format!("b = {} exceeds k = {}", self.b, self.k)));
        }
        if self.n % self.s != 0 {
            return Err(Error::Parameter(format!(
                "s = {} must divide n = {}",
                self.s, self.n
            )));
        }
        if self.k > u32::MAX as u64 || self.n > u32::MAX as u64 {
            return Err(Error::Parameter("k and n must fit in 32 bits".into()));
        }
        if self.precode == PrecodeKind::None && self.b != self.k {
            return Err(Error::Parameter("precode 'None' requires b = k".into()));
        }
        if self.stripes == 0 {
            return Err(Error::Parameter("stripe count must be positive".into()));
        }
        Ok(())
    }

    pub fn distribution(&self) -> Result<DegreeDistribution> {
        make_distribution(self.dist, self.k, DEFAULT_RSD_C, DEFAULT_RSD_DELTA)
    }

    /// Rebuilds the full structural instance (distribution, generator matrix
    /// and precode groups) from the record alone.
    pub fn instance(&self) -> Result<CodeInstance> {
        self.validate()?;
        let dist = self.distribution()?;
        let matrix = build_generator(self.k, self.n, self.s, self.seed, &dist)?;
        let check1 = build_check1(self.b, self.k)?;
        Ok(CodeInstance { dist, matrix, check1 })
    }
}

/// A materialized code: the structures every operation works against.
#[derive(Debug, Clone)]
pub struct CodeInstance {
    pub dist: DegreeDistribution,
    pub matrix: GeneratorMatrix,
    pub check1: Check1Sets,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rngdist::DEFAULT_SEED;

    fn sample() -> CodeParams {
        CodeParams {
            b: 28,
            k: 35,
            n: 80,
            t: 64,
            s: 8,
            seed: DEFAULT_SEED,
            dist: DistKind::FiniteDist,
            precode: PrecodeKind::ArrayLdpc,
            stripes: 4,
            redundant_zeros: 100,
        }
    }

    #[test]
    fn instance_builds() {
        let inst = sample().instance().unwrap();
        assert_eq!(inst.matrix.n(), 80);
        assert_eq!(inst.check1.parity_count(), 7);
    }

    #[test]
    fn validation_catches_bad_striping() {
        let mut p = sample();
        p.n = 81;
        assert!(p.validate().is_err());
    }

    #[test]
    fn precode_names_round_trip() {
        assert_eq!("ArrayLDPC".parse::<PrecodeKind>().unwrap(), PrecodeKind::ArrayLdpc);
        assert_eq!(PrecodeKind::ArrayLdpc.to_string(), "ArrayLDPC");
        assert!("foo".parse::<PrecodeKind>().is_err());
    }
}
