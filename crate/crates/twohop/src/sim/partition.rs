//! Expected-rate partition of the transmitter's observation space.
//!
//! The variable-length schemes carve `X^n` into a degenerate set `S`
//! (send a single bit, both decisions forced to 1), and - in the
//! unequal-budget regimes - a double-primed set `D''` running the second
//! scheme version; everything else is `D'`. Only the target
//! probabilities are prescribed, so membership is realized by seeded-
//! hash Bernoulli thinning: typical sequences enter `S` with probability
//! `s_prob / Pr[typical]`, and the remainder (including atypical
//! sequences) enters `D''` with probability `d2_prob / (1 - s_prob)`.
//! Assignment is a pure function of `(seed, x_seq)`, so all terminals
//! agree on it implicitly through the transmitted flags.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::SimError;
use crate::probability::{is_typical, Pmf};

/// Which subset of the partition a sequence belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subset {
    S,
    Dprime,
    Ddprime,
}

/// Target subset probabilities.
#[derive(Debug, Clone, Copy)]
pub struct PartitionRule {
    /// Target `Pr[S]` (the paper's `eps - mu`).
    pub s_prob: f64,
    /// Target `Pr[D'']` (`|eps2 - eps1|`; zero in the equal regime).
    pub d2_prob: f64,
    pub seed: u64,
}

impl PartitionRule {
    pub fn new(s_prob: f64, d2_prob: f64, seed: u64) -> Result<Self, SimError> {
        if !(s_prob >= 0.0) || !(d2_prob >= 0.0) || s_prob + d2_prob > 1.0 {
            return Err(SimError::InvalidParams(format!(
                "partition probabilities must be non-negative with sum <= 1, got ({s_prob}, {d2_prob})"
            )));
        }
        Ok(Self { s_prob, d2_prob, seed })
    }
}

/// FNV-1a over the sequence, finalized by splitmix64, mapped to [0, 1).
fn hash_to_unit(seed: u64, salt: u64, seq: &[usize]) -> f64 {
    const FNV_OFFSET: u64 = 0xcbf29ce484222325;
    const FNV_PRIME: u64 = 0x100000001b3;
    let mut h = FNV_OFFSET;
    for chunk in [seed, salt] {
        for byte in chunk.to_le_bytes() {
            h = (h ^ byte as u64).wrapping_mul(FNV_PRIME);
        }
    }
    for &s in seq {
        for byte in (s as u64).to_le_bytes() {
            h = (h ^ byte as u64).wrapping_mul(FNV_PRIME);
        }
    }
    // splitmix64 finalizer to decorrelate low bits.
    h = h.wrapping_add(0x9e3779b97f4a7c15);
    h = (h ^ (h >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    h = (h ^ (h >> 27)).wrapping_mul(0x94d049bb133111eb);
    h ^= h >> 31;
    (h >> 11) as f64 / (1u64 << 53) as f64
}

/// Monte Carlo estimate of `Pr[X^n typical]` with `10^5` seeded draws.
pub fn estimate_typical_prob(p_x: &Pmf, n: usize, mu: f64, seed: u64) -> f64 {
    const DRAWS: usize = 100_000;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let probs = p_x.probs();
    let mut hits = 0usize;
    let mut seq = vec![0usize; n];
    for _ in 0..DRAWS {
        for slot in seq.iter_mut() {
            *slot = super::codebook::sample_index(&mut rng, probs);
        }
        if is_typical(&seq, p_x, mu).expect("non-empty sequence") {
            hits += 1;
        }
    }
    hits as f64 / DRAWS as f64
}

/// Deterministic subset assigner with the thinning probabilities fixed.
#[derive(Debug, Clone)]
pub struct PartitionSampler {
    rule: PartitionRule,
    p_x: Pmf,
    mu: f64,
    /// `Pr[S | typical]`, capped at 1.
    q_s: f64,
    /// `Pr[D'' | not S]`.
    q_d2: f64,
}

impl PartitionSampler {
    /// `typical_prob` is the (estimated) probability of the typical set;
    /// see [`estimate_typical_prob`]. When `s_prob` exceeds it the target
    /// is unreachable: a warning is logged and the inclusion probability
    /// is capped at 1.
    pub fn new(rule: PartitionRule, p_x: Pmf, mu: f64, typical_prob: f64) -> Self {
        let q_s = if rule.s_prob == 0.0 {
            0.0
        } else if rule.s_prob > typical_prob {
            log::warn!(
                "target Pr[S] = {} exceeds estimated typical-set probability {}; capping",
                rule.s_prob,
                typical_prob
            );
            1.0
        } else {
            rule.s_prob / typical_prob
        };
        let q_d2 = if rule.d2_prob == 0.0 {
            0.0
        } else {
            (rule.d2_prob / (1.0 - rule.s_prob)).min(1.0)
        };
        Self { rule, p_x, mu, q_s, q_d2 }
    }

    pub fn assign(&self, x_seq: &[usize]) -> Subset {
        let typical = is_typical(x_seq, &self.p_x, self.mu).unwrap_or(false);
        if typical && self.q_s > 0.0 && hash_to_unit(self.rule.seed, 1, x_seq) < self.q_s {
            return Subset::S;
        }
        if self.q_d2 > 0.0 && hash_to_unit(self.rule.seed, 2, x_seq) < self.q_d2 {
            return Subset::Ddprime;
        }
        Subset::Dprime
    }
}
