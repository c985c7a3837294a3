//! Random codebooks, materialized or virtual.
//!
//! A codebook holds `M = ceil(2^(n * rate_target))` length-`n` entries
//! drawn i.i.d. from a generation pmf. Small books are materialized;
//! beyond the memory guard the book is kept *virtual* and queried
//! through its exact sampling distribution instead (see
//! [`super::typebox`]): the number of entries jointly typical with an
//! observed sequence is Poisson-sampled at the exact expected count, and
//! the selected entry is drawn from the i.i.d. law conditioned on joint
//! typicality. Index values are sampled uniformly, which reproduces the
//! message-length distribution without storing the table.

use num_bigint::{BigUint, RandBigInt};
use rand::Rng;

use super::SimError;
use crate::probability::Pmf;

/// Default cap on materialized entries, as a power of two.
pub const DEFAULT_GUARD_LOG2: u32 = 24;
/// Environment variable overriding the materialization guard exponent.
pub const GUARD_ENV_VAR: &str = "TWOHOP_CODEBOOK_GUARD_LOG2";

pub(crate) fn guard_log2() -> u32 {
    std::env::var(GUARD_ENV_VAR)
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(DEFAULT_GUARD_LOG2)
}

/// `ceil(2^e)` as an exact big integer (to mantissa precision for huge `e`).
fn pow2_ceil(e: f64) -> BigUint {
    if e <= 0.0 {
        return BigUint::from(1u8);
    }
    if e < 53.0 {
        return BigUint::from(e.exp2().ceil() as u64);
    }
    let ip = e.floor() as u64;
    let frac = e - ip as f64;
    let scaled = (frac.exp2() * (1u64 << 52) as f64).ceil() as u64;
    BigUint::from(scaled) << (ip - 52)
}

#[derive(Debug, Clone)]
pub struct CodebookMeta {
    pub n: usize,
    pub gen_pmf: Pmf,
    pub seed: u64,
    pub rate_target: f64,
    /// Number of entries, `ceil(2^(n * rate_target))`.
    pub size: BigUint,
    pub log2_size: f64,
}

impl CodebookMeta {
    fn new(gen_pmf: Pmf, rate_target: f64, n: usize, seed: u64) -> Self {
        let log2_size = (n as f64 * rate_target).max(0.0);
        Self { n, gen_pmf, seed, rate_target, size: pow2_ceil(log2_size), log2_size }
    }
}

/// A random codebook; entries are reproducible from the seed.
#[derive(Debug, Clone)]
pub enum Codebook {
    /// Entries stored explicitly, row-major `M x n`.
    Materialized { meta: CodebookMeta, entries: Vec<u8> },
    /// Entries represented only by their sampling distribution.
    Virtual { meta: CodebookMeta },
}

impl Codebook {
    pub fn meta(&self) -> &CodebookMeta {
        match self {
            Codebook::Materialized { meta, .. } => meta,
            Codebook::Virtual { meta } => meta,
        }
    }

    pub fn n(&self) -> usize {
        self.meta().n
    }

    pub fn is_materialized(&self) -> bool {
        matches!(self, Codebook::Materialized { .. })
    }

    /// Number of entries as a `u64` (materialized books only).
    pub fn len_u64(&self) -> Option<u64> {
        match self {
            Codebook::Materialized { entries, meta } => Some((entries.len() / meta.n) as u64),
            Codebook::Virtual { .. } => None,
        }
    }

    /// Entry for message index `m` (1-based), materialized books only.
    pub fn entry(&self, m: u64) -> Option<&[u8]> {
        match self {
            Codebook::Materialized { meta, entries } => {
                let count = (entries.len() / meta.n) as u64;
                if m == 0 || m > count {
                    return None;
                }
                let i = (m - 1) as usize;
                Some(&entries[i * meta.n..(i + 1) * meta.n])
            }
            Codebook::Virtual { .. } => None,
        }
    }

    /// Materialize if within the guard, otherwise go virtual.
    pub fn auto(gen_pmf: Pmf, rate_target: f64, n: usize, seed: u64) -> Codebook {
        let meta = CodebookMeta::new(gen_pmf, rate_target, n, seed);
        if meta.log2_size <= guard_log2() as f64 {
            materialize(meta)
        } else {
            Codebook::Virtual { meta }
        }
    }
}

fn materialize(meta: CodebookMeta) -> Codebook {
    use rand::SeedableRng;
    let m = meta
        .size
        .to_u64_digits()
        .first()
        .copied()
        .unwrap_or(if meta.size == BigUint::from(0u8) { 0 } else { 1 });
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(meta.seed);
    let probs = meta.gen_pmf.probs().to_vec();
    let mut entries = Vec::with_capacity(m as usize * meta.n);
    for _ in 0..m {
        for _ in 0..meta.n {
            entries.push(sample_index(&mut rng, &probs) as u8);
        }
    }
    Codebook::Materialized { meta, entries }
}

/// Inverse-cdf draw from a small pmf.
pub(crate) fn sample_index(rng: &mut impl Rng, probs: &[f64]) -> usize {
    let r: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if r < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// Explicitly materialized codebook; errors when the table would exceed
/// the memory guard (`2^24` entries by default, overridable through the
/// `TWOHOP_CODEBOOK_GUARD_LOG2` environment variable).
pub fn generate_codebook(gen_pmf: Pmf, rate_target: f64, n: usize, seed: u64) -> Result<Codebook, SimError> {
    let meta = CodebookMeta::new(gen_pmf, rate_target, n, seed);
    let guard = guard_log2();
    if meta.log2_size > guard as f64 {
        return Err(SimError::CodebookTooLarge { log2_entries: meta.log2_size, guard });
    }
    Ok(materialize(meta))
}

/// Uniform message index in `1..=size`.
pub(crate) fn sample_message(rng: &mut impl Rng, size: &BigUint) -> BigUint {
    rng.gen_biguint_below(size) + 1u8
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn zero_rate_single_entry() {
        let cb = generate_codebook(Pmf::bernoulli(0.3).unwrap(), 0.0, 20, 1).unwrap();
        assert_eq!(cb.len_u64(), Some(1));
        assert_eq!(cb.entry(1).unwrap().len(), 20);
        assert!(cb.entry(2).is_none());
    }

    #[test]
    fn size_arithmetic() {
        let cb = generate_codebook(Pmf::bernoulli(0.5).unwrap(), 0.5, 10, 1).unwrap();
        assert_eq!(cb.len_u64(), Some(32));
    }

    #[test]
    fn entries_match_pmf_statistically() {
        let n = 16;
        let cb = generate_codebook(Pmf::bernoulli(0.3).unwrap(), 1.0, n, 9).unwrap();
        assert_eq!(cb.len_u64(), Some(65536));
        let Codebook::Materialized { entries, .. } = &cb else { unreachable!() };
        let ones: usize = entries.iter().map(|&b| b as usize).sum();
        let freq = ones as f64 / entries.len() as f64;
        assert!((freq - 0.3).abs() < 0.01, "{freq}");
    }

    #[test]
    fn reproducible_from_seed_and_guard_enforced() {
        let a = generate_codebook(Pmf::bernoulli(0.4).unwrap(), 0.5, 12, 77).unwrap();
        let b = generate_codebook(Pmf::bernoulli(0.4).unwrap(), 0.5, 12, 77).unwrap();
        let (Codebook::Materialized { entries: ea, .. }, Codebook::Materialized { entries: eb, .. }) =
            (&a, &b)
        else {
            unreachable!()
        };
        assert_eq!(ea, eb);
        assert!(matches!(
            generate_codebook(Pmf::bernoulli(0.4).unwrap(), 1.0, 100, 0),
            Err(SimError::CodebookTooLarge { .. })
        ));
    }

    #[test]
    fn auto_switches_to_virtual() {
        let cb = Codebook::auto(Pmf::bernoulli(0.5).unwrap(), 1.0, 100, 0);
        assert!(!cb.is_materialized());
        assert!((cb.meta().log2_size - 100.0).abs() < 1e-12);
        let small = Codebook::auto(Pmf::bernoulli(0.5).unwrap(), 0.5, 10, 0);
        assert!(small.is_materialized());
    }

    #[test]
    fn pow2_ceil_values() {
        assert_eq!(pow2_ceil(0.0), BigUint::from(1u8));
        assert_eq!(pow2_ceil(5.0), BigUint::from(32u8));
        assert_eq!(pow2_ceil(4.1), BigUint::from(18u8)); // ceil(17.15)
        assert_eq!(pow2_ceil(200.0).bits(), 201);
    }

    #[test]
    fn message_sampling_in_range() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let size = BigUint::from(1000u32);
        for _ in 0..100 {
            let m = sample_message(&mut rng, &size);
            assert!(m >= BigUint::from(1u8) && m <= size);
        }
    }
}
