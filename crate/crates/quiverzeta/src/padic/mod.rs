//! Exact linear algebra over the p-adic integers at desk scale.
//!
//! Everything here works with a fixed prime `p` and bounded index exponents.
//! A finite-index submodule of `Z_p^r` is held in canonical Hermite normal
//! form ([`HNFLattice`]); the canonical form makes equality, hashing and
//! deterministic enumeration trivial. All arithmetic is exact: lattice
//! entries are machine integers bounded by `p^cap` (enforced at context
//! construction), measures and series coefficients are exact rationals.

mod hnf;
mod measure;

pub(crate) use hnf::{advance_offdiag_from, echelon_in_place, for_each_in_profile, offdiag_moduli};
pub use hnf::{
    contains_lattice, contains_rows, contains_vector, enumerate_sublattices, hnf_reduce, index_exp,
    profiles_of_weight, project_and_sum, row_echelon_mod, sublattice_count, sublattice_count_upto,
    sum_lattices, HNFLattice, SublatticeIter,
};
pub use measure::{good_basis_count_mod, good_basis_measure};

use std::collections::BTreeMap;

use num_bigint::BigUint;
use thiserror::Error;

/// Largest value allowed for `p^cap`. Keeps every lattice entry, and every
/// product of two entries, comfortably inside an `i64`.
pub const MAX_PRIME_POWER: u64 = 1 << 20;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PadicError {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("cap {cap} too large for p = {p}: p^cap exceeds {max}", max = MAX_PRIME_POWER)]
    CapTooLarge { p: u64, cap: u32 },
    #[error("rows span a rank-deficient (infinite-index) submodule")]
    RankDeficient,
    #[error("enumeration refused: predicted {predicted} items exceeds limit {limit}")]
    EnumerationTooLarge { predicted: BigUint, limit: u64 },
    #[error("vector length {got} does not match lattice rank {rank}")]
    LengthMismatch { rank: usize, got: usize },
    #[error("lattice ranks differ: {0} vs {1}")]
    RankMismatch(usize, usize),
    #[error("rank {rank} is not {m} blocks of {n}")]
    BadBlockShape { rank: usize, m: usize, n: usize },
    #[error("reduced entry exceeds the machine-word bound; lower the input valuations")]
    EntryOverflow,
    #[error("precision N = {n} must exceed the largest diagonal exponent {max_nu}")]
    PrecisionTooSmall { n: u32, max_nu: u32 },
    #[error("vertex {0:?} has no cap assigned")]
    MissingCap(String),
}

/// Per-vertex truncation caps, or one uniform cap when only a single
/// vertex/variable is in play.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CapSpec {
    Uniform(u32),
    PerVertex(BTreeMap<String, u32>),
}

impl CapSpec {
    pub fn max_cap(&self) -> u32 {
        match self {
            CapSpec::Uniform(k) => *k,
            CapSpec::PerVertex(m) => m.values().copied().max().unwrap_or(0),
        }
    }

    /// Resolve a cap for each vertex id, in the given order.
    pub fn resolve(&self, vertex_ids: &[String]) -> Result<Vec<u32>, PadicError> {
        match self {
            CapSpec::Uniform(k) => Ok(vec![*k; vertex_ids.len()]),
            CapSpec::PerVertex(m) => vertex_ids
                .iter()
                .map(|v| {
                    m.get(v)
                        .copied()
                        .ok_or_else(|| PadicError::MissingCap(v.clone()))
                })
                .collect(),
        }
    }
}

impl From<u32> for CapSpec {
    fn from(k: u32) -> Self {
        CapSpec::Uniform(k)
    }
}

/// Fixed prime and truncation caps for one computation.
///
/// `q = p` throughout: the residue field of `Z_p` has `p` elements, and the
/// p-adic absolute value is realized as exponent bookkeeping on integers,
/// never as floating point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PAdicContext {
    p: u64,
    caps: CapSpec,
    limit: u64,
    parallel: bool,
}

/// Default enumeration guard: refuse streams predicted to exceed this many items.
pub const DEFAULT_LIMIT: u64 = 10_000_000;

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3u64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

impl PAdicContext {
    /// Checks primality by trial division (desk-scale primes are small) and
    /// rejects caps for which `p^cap` would leave the machine-word range.
    pub fn new(p: u64, caps: impl Into<CapSpec>) -> Result<Self, PadicError> {
        let caps = caps.into();
        if !is_prime(p) {
            return Err(PadicError::NotPrime(p));
        }
        let max_cap = caps.max_cap();
        if !fits_prime_power(p, max_cap) {
            return Err(PadicError::CapTooLarge { p, cap: max_cap });
        }
        Ok(PAdicContext {
            p,
            caps,
            limit: DEFAULT_LIMIT,
            parallel: false,
        })
    }

    pub fn with_limit(mut self, limit: u64) -> Self {
        self.limit = limit.max(1);
        self
    }

    pub fn with_parallel(mut self, parallel: bool) -> Self {
        self.parallel = parallel;
        self
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn caps(&self) -> &CapSpec {
        &self.caps
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn parallel(&self) -> bool {
        self.parallel
    }

    /// `p^e` as an `i64`; panics past the word-size bound rather than
    /// wrapping (constructors guard every exponent that normal use reaches).
    pub(crate) fn pow(&self, e: u32) -> i64 {
        self.p
            .checked_pow(e)
            .and_then(|v| i64::try_from(v).ok())
            .expect("prime power exceeds the machine-word bound")
    }

    /// p-adic valuation of `x`, or `None` for `x = 0`.
    pub fn valuation(&self, x: i64) -> Option<u32> {
        if x == 0 {
            return None;
        }
        let p = self.p as i64;
        let mut x = x;
        let mut v = 0;
        while x % p == 0 {
            x /= p;
            v += 1;
        }
        Some(v)
    }
}

pub(crate) fn fits_prime_power(p: u64, cap: u32) -> bool {
    let mut acc: u64 = 1;
    for _ in 0..cap {
        acc = match acc.checked_mul(p) {
            Some(v) if v <= MAX_PRIME_POWER => v,
            _ => return false,
        };
    }
    true
}
