//! Finite-blocklength Monte Carlo simulation of the two-hop testing
//! schemes.
//!
//! The basic scheme quantizes each observation against a random
//! codebook and forwards the chosen index; each decision point declares
//! the null hypothesis only when a joint-typicality check succeeds. The
//! variable-length wrappers add a partition of the transmitter space: a
//! degenerate subset `S` (one-bit message, decisions forced to the
//! alternative) buys expected-rate slack, and in the unequal-budget
//! regimes a second scheme version runs on the `D''` subset behind
//! two-bit `"10"`/`"11"` flags.
//!
//! Codebooks at realistic rates are far too large to materialize, so the
//! simulator switches to an exact virtual representation (see
//! [`codebook`] and [`typebox`]). For the deep-tail type-II errors the
//! estimator also reports Rao-Blackwellized values: each trial
//! contributes its exact conditional error probability given the
//! transmitted codewords, computed in closed form from the multinomial
//! box machinery, so exponents are measurable far below `1/trials`.

mod bits;
mod codebook;
mod partition;
mod typebox;

pub use bits::{string_decode, string_encode, BitString};
pub use codebook::{generate_codebook, Codebook, CodebookMeta, DEFAULT_GUARD_LOG2, GUARD_ENV_VAR};
pub use partition::{estimate_typical_prob, PartitionRule, PartitionSampler, Subset};

use std::sync::Arc;

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::probability::{
    is_jointly_typical, is_typical, lift_channel, mutual_information, ConditionalPmf, JointPmf,
    Pmf, ProbError, TwoHopSource,
};
use crate::regions::{AuxiliarySolution, EpsilonPair, Regime};
use typebox::{LnFactorials, PairTypicality};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(
        "codebook of 2^{log2_entries:.1} entries exceeds the 2^{guard} guard; \
         lower the rate or blocklength, or raise {GUARD_ENV_VAR}"
    )]
    CodebookTooLarge { log2_entries: f64, guard: u32 },
    #[error("message index {index} outside codebook of {size} entries")]
    UnknownIndex { index: String, size: String },
    #[error("bit-string payload must start with 1")]
    InvalidPayload,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Prob(#[from] ProbError),
}

pub type Result<T> = std::result::Result<T, SimError>;

/// Which route a trial took through the scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TrialBranch {
    S,
    Dprime,
    Ddprime,
    /// Assigned to an active subset but the transmitter fell back to the
    /// degenerate message (observation atypical or covering failed).
    Atypical,
}

/// Outcome of a single simulated trial.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialOutcome {
    pub hyp: u8,
    pub h_hat_y: u8,
    pub h_hat_z: u8,
    pub len_m1: usize,
    pub len_m2: usize,
    pub branch: TrialBranch,
}

/// All inputs defining one simulated scheme instance.
#[derive(Debug, Clone)]
pub struct SchemeParams {
    pub source: TwoHopSource,
    pub regime: Regime,
    pub n: usize,
    pub mu: f64,
    pub eps: EpsilonPair,
    /// Auxiliary channels: `u1`/`u2` in the equal regime, the primed
    /// (and double-primed) variants otherwise.
    pub channels: AuxiliarySolution,
    pub partition_seed: u64,
    pub codebook_seed: u64,
    pub noise_seed: u64,
}

impl SchemeParams {
    /// The default typicality slack `mu = n^(-1/3)`.
    pub fn default_mu(n: usize) -> f64 {
        (n as f64).powf(-1.0 / 3.0)
    }
}

/// One link's encoder: codebook plus the joint reference and exact
/// typicality machinery needed to quantize an observation.
struct EncoderContext {
    cb: Codebook,
    /// Joint `(input, U)` reference for codeword selection.
    joint_in_u: JointPmf,
    input_marginal: Pmf,
    mu: f64,
    pair: PairTypicality,
}

impl EncoderContext {
    fn new(
        input_marginal: &Pmf,
        channel: &ConditionalPmf,
        n: usize,
        mu: f64,
        seed: u64,
        lnf: &Arc<LnFactorials>,
    ) -> Result<Self> {
        let joint_in_u = input_marginal.join(channel)?;
        let rate_target = mutual_information(&joint_in_u) + mu;
        let gen_pmf = channel.output_marginal(input_marginal)?;
        let cb = Codebook::auto(gen_pmf.clone(), rate_target, n, seed);
        let pair = PairTypicality::new(&joint_in_u, gen_pmf.probs(), n, mu, Arc::clone(lnf));
        Ok(Self { cb, joint_in_u, input_marginal: input_marginal.clone(), mu, pair })
    }

    /// Quantize: `None` means the degenerate `"0"` message.
    fn encode(&self, input: &[usize], rng: &mut impl Rng) -> Result<Option<(BigUint, Vec<usize>)>> {
        let (log2_psucc, picked) = self.encode_inner(input, rng, false)?;
        if log2_psucc == f64::NEG_INFINITY {
            return Ok(None);
        }
        Ok(picked)
    }

    /// Rao-Blackwell variant: returns the exact (log2) probability that
    /// encoding succeeds alongside a sample of the selected codeword.
    /// For materialized books the probability degenerates to an
    /// indicator, which keeps the estimator unbiased.
    fn encode_success_and_sample(
        &self,
        input: &[usize],
        rng: &mut impl Rng,
    ) -> Result<(f64, Option<(BigUint, Vec<usize>)>)> {
        self.encode_inner(input, rng, true)
    }

    /// Same verdict as `is_jointly_typical(&[input, entry], joint_in_u)`
    /// but with a caller-provided counts buffer, so materialized-book
    /// scans stay allocation-free per entry.
    fn entry_jointly_typical(&self, input: &[usize], entry: &[u8], counts: &mut [u32]) -> bool {
        let kb = self.joint_in_u.dims()[1];
        counts.fill(0);
        for (&a, &b) in input.iter().zip(entry) {
            counts[a * kb + b as usize] += 1;
        }
        let n = input.len() as f64;
        counts
            .iter()
            .zip(self.joint_in_u.probs())
            .all(|(&c, &p)| if p == 0.0 { c == 0 } else { (c as f64 / n - p).abs() <= self.mu })
    }

    fn encode_inner(
        &self,
        input: &[usize],
        rng: &mut impl Rng,
        analytic_success: bool,
    ) -> Result<(f64, Option<(BigUint, Vec<usize>)>)> {
        if !is_typical(input, &self.input_marginal, self.mu)? {
            return Ok((f64::NEG_INFINITY, None));
        }
        match &self.cb {
            Codebook::Materialized { meta, entries } => {
                // Reservoir-sample uniformly among the jointly typical
                // entries in one allocation-free pass.
                let m_count = entries.len() / meta.n;
                let mut counts = vec![0u32; self.joint_in_u.probs().len()];
                let mut hits = 0u64;
                let mut chosen: Option<usize> = None;
                for i in 0..m_count {
                    let entry = &entries[i * meta.n..(i + 1) * meta.n];
                    if self.entry_jointly_typical(input, entry, &mut counts) {
                        hits += 1;
                        if rng.gen_range(0..hits) == 0 {
                            chosen = Some(i);
                        }
                    }
                }
                let Some(i) = chosen else {
                    return Ok((f64::NEG_INFINITY, None));
                };
                let entry: Vec<usize> =
                    entries[i * meta.n..(i + 1) * meta.n].iter().map(|&b| b as usize).collect();
                Ok((0.0, Some((BigUint::from(i as u64 + 1), entry))))
            }
            Codebook::Virtual { meta } => {
                let log2_p = self.pair.log2_box_prob(input);
                let log2_lambda = meta.log2_size + log2_p;
                if log2_lambda == f64::NEG_INFINITY {
                    return Ok((f64::NEG_INFINITY, None));
                }
                // At least one of the ~Poisson(lambda) typical entries.
                let log2_psucc = if log2_lambda >= 7.0 {
                    0.0
                } else {
                    let lambda = log2_lambda.exp2();
                    (-(-lambda).exp_m1()).log2()
                };
                if !analytic_success {
                    let accept = log2_psucc >= 0.0 || rng.gen::<f64>() < log2_psucc.exp2();
                    if !accept {
                        return Ok((f64::NEG_INFINITY, None));
                    }
                }
                let codeword = self
                    .pair
                    .sample_conditional(input, rng)
                    .expect("box is non-empty when lambda > 0");
                let m = codebook::sample_message(rng, &meta.size);
                Ok((log2_psucc, Some((m, codeword))))
            }
        }
    }
}

/// Engines for one scheme version (main/primed or double-primed).
struct BranchEngines {
    tx: EncoderContext,
    /// `(U1, Y)` joint for the relay's check.
    j_u1y: JointPmf,
    /// Exact `Pr[(u1, Y) typical]` machinery under the alternative.
    rb_u1y: PairTypicality,
    /// Relay-side encoder and receiver check; absent where the branch
    /// never forwards a payload (double-primed, relay budget larger).
    relay: Option<RelayEngines>,
}

struct RelayEngines {
    enc: EncoderContext,
    j_u2z: JointPmf,
    rb_u2z: PairTypicality,
}

/// Prebuilt per-run state: codebooks, typicality machinery and the
/// partition sampler. Build once, share across trials.
pub struct SchemeContext {
    params: SchemeParams,
    rule: PartitionRule,
    sampler: PartitionSampler,
    main: BranchEngines,
    dd: Option<BranchEngines>,
}

fn make_branch(
    src: &TwoHopSource,
    ch1: &ConditionalPmf,
    ch2: Option<&ConditionalPmf>,
    n: usize,
    mu: f64,
    seed1: u64,
    seed2: u64,
    lnf: &Arc<LnFactorials>,
) -> Result<BranchEngines> {
    let tx = EncoderContext::new(src.p_x(), ch1, n, mu, seed1, lnf)?;
    let j_u1y = lift_channel(src.p_xy(), ch1)?;
    let rb_u1y = PairTypicality::new(&j_u1y, src.p_y().probs(), n, mu, Arc::clone(lnf));
    let relay = ch2
        .map(|ch2| -> Result<RelayEngines> {
            let enc = EncoderContext::new(src.p_y(), ch2, n, mu, seed2, lnf)?;
            let j_u2z = lift_channel(src.p_yz(), ch2)?;
            let rb_u2z = PairTypicality::new(&j_u2z, src.p_z().probs(), n, mu, Arc::clone(lnf));
            Ok(RelayEngines { enc, j_u2z, rb_u2z })
        })
        .transpose()?;
    Ok(BranchEngines { tx, j_u1y, rb_u1y, relay })
}

impl SchemeContext {
    pub fn new(params: &SchemeParams, rule: &PartitionRule) -> Result<Self> {
        if params.n == 0 || !(params.mu > 0.0) {
            return Err(SimError::InvalidParams(format!(
                "need n >= 1 and mu > 0, got n = {}, mu = {}",
                params.n, params.mu
            )));
        }
        let ch = &params.channels;
        let missing = |what: &str| SimError::InvalidParams(format!("channels missing {what}"));
        let (ch1, ch2, ch1dd, ch2dd) = match params.regime {
            Regime::Equal => {
                if params.eps.eps1 != params.eps.eps2 {
                    return Err(SimError::InvalidParams(
                        "equal regime needs eps1 = eps2".into(),
                    ));
                }
                if rule.d2_prob != 0.0 {
                    return Err(SimError::InvalidParams(
                        "equal regime has no double-primed subset".into(),
                    ));
                }
                (
                    ch.u1.as_ref().ok_or_else(|| missing("u1"))?,
                    ch.u2.as_ref().ok_or_else(|| missing("u2"))?,
                    None,
                    None,
                )
            }
            Regime::Eps2Greater => {
                if !(params.eps.eps2 > params.eps.eps1) {
                    return Err(SimError::InvalidParams("regime needs eps2 > eps1".into()));
                }
                (
                    ch.u1_prime.as_ref().ok_or_else(|| missing("u1_prime"))?,
                    ch.u2_prime.as_ref().ok_or_else(|| missing("u2_prime"))?,
                    Some(ch.u1_dprime.as_ref().ok_or_else(|| missing("u1_dprime"))?),
                    None,
                )
            }
            Regime::Eps1Greater => {
                if !(params.eps.eps1 > params.eps.eps2) {
                    return Err(SimError::InvalidParams("regime needs eps1 > eps2".into()));
                }
                (
                    ch.u1_prime.as_ref().ok_or_else(|| missing("u1_prime"))?,
                    ch.u2_prime.as_ref().ok_or_else(|| missing("u2_prime"))?,
                    Some(ch.u1_dprime.as_ref().ok_or_else(|| missing("u1_dprime"))?),
                    Some(ch.u2_dprime.as_ref().ok_or_else(|| missing("u2_dprime"))?),
                )
            }
            Regime::Fixed => {
                return Err(SimError::InvalidParams(
                    "fixed regime has no variable-length scheme to simulate".into(),
                ))
            }
        };
        let src = &params.source;
        let lnf = Arc::new(LnFactorials::up_to(params.n));
        let main = make_branch(
            src,
            ch1,
            Some(ch2),
            params.n,
            params.mu,
            mix_seed(params.codebook_seed, 1, 0),
            mix_seed(params.codebook_seed, 2, 0),
            &lnf,
        )?;
        let dd = ch1dd
            .map(|c1| {
                make_branch(
                    src,
                    c1,
                    ch2dd,
                    params.n,
                    params.mu,
                    mix_seed(params.codebook_seed, 3, 0),
                    mix_seed(params.codebook_seed, 4, 0),
                    &lnf,
                )
            })
            .transpose()?;
        let typical_prob =
            estimate_typical_prob(src.p_x(), params.n, params.mu, params.partition_seed);
        let sampler = PartitionSampler::new(*rule, src.p_x().clone(), params.mu, typical_prob);
        Ok(Self { params: params.clone(), rule: *rule, sampler, main, dd })
    }

    pub fn rule(&self) -> &PartitionRule {
        &self.rule
    }
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

/// Deterministic seed derivation for independent sub-streams.
fn mix_seed(a: u64, b: u64, c: u64) -> u64 {
    splitmix(a.wrapping_add(splitmix(b.wrapping_add(splitmix(c)))))
}

fn sample_seq(rng: &mut impl Rng, pmf: &Pmf, n: usize) -> Vec<usize> {
    (0..n).map(|_| codebook::sample_index(rng, pmf.probs())).collect()
}

fn sample_through(rng: &mut impl Rng, channel: &ConditionalPmf, input: &[usize]) -> Vec<usize> {
    input
        .iter()
        .map(|&a| codebook::sample_index(rng, channel.row(a).probs()))
        .collect()
}

/// Per-trial Rao-Blackwell weights, in log2 (`-inf` = zero contribution).
#[derive(Debug, Clone, Copy)]
struct RbTrace {
    log2_w_beta1: f64,
    log2_w_beta2: f64,
}

impl RbTrace {
    fn zero() -> Self {
        Self { log2_w_beta1: f64::NEG_INFINITY, log2_w_beta2: f64::NEG_INFINITY }
    }
}

/// Simulate one trial under hypothesis `hyp`, deterministically in
/// `trial_seed`.
pub fn run_trial(ctx: &SchemeContext, hyp: u8, trial_seed: u64) -> Result<TrialOutcome> {
    run_trial_traced(ctx, hyp, trial_seed, false).map(|(o, _)| o)
}

fn run_trial_traced(
    ctx: &SchemeContext,
    hyp: u8,
    trial_seed: u64,
    trace: bool,
) -> Result<(TrialOutcome, RbTrace)> {
    let params = &ctx.params;
    let src = &params.source;
    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed);
    let x = sample_seq(&mut rng, src.p_x(), params.n);
    let (y, z) = if hyp == 0 {
        let y = sample_through(&mut rng, src.p_y_given_x(), &x);
        let z = sample_through(&mut rng, src.p_z_given_y(), &y);
        (y, z)
    } else {
        (
            sample_seq(&mut rng, src.p_y(), params.n),
            sample_seq(&mut rng, src.p_z(), params.n),
        )
    };

    let subset = ctx.sampler.assign(&x);
    if subset == Subset::S {
        return Ok((
            TrialOutcome { hyp, h_hat_y: 1, h_hat_z: 1, len_m1: 1, len_m2: 1, branch: TrialBranch::S },
            RbTrace::zero(),
        ));
    }
    let is_dd = subset == Subset::Ddprime;
    let be = if is_dd { ctx.dd.as_ref().expect("dd subset only with dd engines") } else { &ctx.main };
    let flag_len = if params.regime == Regime::Equal { 0 } else { 2 };

    let Some((m1, u1)) = be.tx.encode(&x, &mut rng)? else {
        // Degenerate fallback: single "0" both hops.
        return Ok((
            TrialOutcome {
                hyp,
                h_hat_y: 1,
                h_hat_z: 1,
                len_m1: 1,
                len_m2: 1,
                branch: TrialBranch::Atypical,
            },
            RbTrace::zero(),
        ));
    };
    let len_m1 = flag_len + m1.bits() as usize;
    let tentative_null = is_jointly_typical(&[&u1, &y], &be.j_u1y, params.mu)?;

    // Relay decision: in the transmitter-heavy regime the double-primed
    // branch always declares the alternative (its own budget is larger)
    // but still gates the forwarded message on the tentative check.
    let h_hat_y = if params.regime == Regime::Eps1Greater && is_dd {
        1
    } else if tentative_null {
        0
    } else {
        1
    };

    let (h_hat_z, len_m2, enc2_u2) = if params.regime == Regime::Eps2Greater && is_dd {
        // Bare "11" flag: the receiver's larger budget absorbs D''.
        (1, 2, None)
    } else if !tentative_null {
        (1, 1, None)
    } else {
        let rel = be.relay.as_ref().expect("forwarding branch has relay engines");
        match rel.enc.encode(&y, &mut rng)? {
            None => (1, 1, None),
            Some((m2, u2)) => {
                let ok = is_jointly_typical(&[&u2, &z], &rel.j_u2z, params.mu)?;
                (
                    u8::from(!ok),
                    flag_len + m2.bits() as usize,
                    Some(u2),
                )
            }
        }
    };

    let outcome = TrialOutcome {
        hyp,
        h_hat_y,
        h_hat_z,
        len_m1,
        len_m2,
        branch: if is_dd { TrialBranch::Ddprime } else { TrialBranch::Dprime },
    };
    let _ = enc2_u2; // decision already folded into h_hat_z

    if !trace || hyp != 1 {
        return Ok((outcome, RbTrace::zero()));
    }

    // Rao-Blackwell stage: all draws happen after the outcome is fixed,
    // so traced and untraced runs agree on the same seed.
    let mut rb = RbTrace::zero();
    let log2_p1 = be.rb_u1y.log2_box_prob(&u1);
    let beta1_counts = !(params.regime == Regime::Eps1Greater && is_dd);
    if beta1_counts {
        rb.log2_w_beta1 = log2_p1;
    }
    let beta2_counts = !(params.regime == Regime::Eps2Greater && is_dd);
    if beta2_counts && log2_p1 > f64::NEG_INFINITY {
        let rel = be.relay.as_ref().expect("beta2 branch has relay engines");
        let y_star = be
            .rb_u1y
            .sample_conditional(&u1, &mut rng)
            .expect("box non-empty when its probability is positive");
        let (log2_psucc, enc2) = rel.enc.encode_success_and_sample(&y_star, &mut rng)?;
        if let Some((_, u2)) = enc2 {
            let log2_p2 = rel.rb_u2z.log2_box_prob(&u2);
            rb.log2_w_beta2 = log2_p1 + log2_psucc + log2_p2;
        }
    }
    Ok((outcome, rb))
}

/// A point estimate with a Wilson 95% confidence interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

fn wilson(successes: u64, trials: u64) -> Estimate {
    let z = 1.959963984540054_f64;
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = (z / denom) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    Estimate { value: p, ci_low: (center - half).max(0.0), ci_high: (center + half).min(1.0) }
}

/// Trial counts per branch, under the null hypothesis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
pub struct BranchCounts {
    pub s: u64,
    pub dprime: u64,
    pub ddprime: u64,
    pub atypical: u64,
}

/// Aggregated estimates from [`estimate_errors`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationStats {
    pub trials: u64,
    /// Type-I estimates (alternative declared under the null).
    pub alpha1_hat: Estimate,
    pub alpha2_hat: Estimate,
    /// Type-II estimates (null declared under the alternative).
    pub beta1_hat: Estimate,
    pub beta2_hat: Estimate,
    /// Mean message lengths in bits, under the null.
    pub mean_len1: f64,
    pub mean_len2: f64,
    pub branch_counts: BranchCounts,
    /// Rao-Blackwellized log2 type-II estimates (exact per-trial
    /// conditional probabilities averaged over trials); `None` when every
    /// trial contributed zero.
    pub beta1_rb_log2: Option<f64>,
    pub beta2_rb_log2: Option<f64>,
}

/// Run `trials` trials under each hypothesis and aggregate. Fully
/// deterministic in `master_seed` (and the seeds in `params`).
pub fn estimate_errors(
    params: &SchemeParams,
    rule: &PartitionRule,
    trials: u64,
    master_seed: u64,
) -> Result<SimulationStats> {
    if trials == 0 {
        return Err(SimError::InvalidParams("need at least one trial".into()));
    }
    let ctx = SchemeContext::new(params, rule)?;
    let base = mix_seed(master_seed, params.noise_seed, 0);

    let h0: Vec<TrialOutcome> = (0..trials)
        .into_par_iter()
        .map(|i| run_trial(&ctx, 0, mix_seed(base, i, 0)))
        .collect::<Result<_>>()?;
    let h1: Vec<(TrialOutcome, RbTrace)> = (0..trials)
        .into_par_iter()
        .map(|i| run_trial_traced(&ctx, 1, mix_seed(base, i, 1), true))
        .collect::<Result<_>>()?;

    let mut counts = BranchCounts::default();
    let (mut a1, mut a2) = (0u64, 0u64);
    let (mut len1, mut len2) = (0u64, 0u64);
    for o in &h0 {
        a1 += u64::from(o.h_hat_y == 1);
        a2 += u64::from(o.h_hat_z == 1);
        len1 += o.len_m1 as u64;
        len2 += o.len_m2 as u64;
        match o.branch {
            TrialBranch::S => counts.s += 1,
            TrialBranch::Dprime => counts.dprime += 1,
            TrialBranch::Ddprime => counts.ddprime += 1,
            TrialBranch::Atypical => counts.atypical += 1,
        }
    }
    let (mut b1, mut b2) = (0u64, 0u64);
    let mut rb1: Vec<f64> = Vec::new();
    let mut rb2: Vec<f64> = Vec::new();
    for (o, rb) in &h1 {
        b1 += u64::from(o.h_hat_y == 0);
        b2 += u64::from(o.h_hat_z == 0);
        if rb.log2_w_beta1 > f64::NEG_INFINITY {
            rb1.push(rb.log2_w_beta1);
        }
        if rb.log2_w_beta2 > f64::NEG_INFINITY {
            rb2.push(rb.log2_w_beta2);
        }
    }
    let rb_mean = |v: &[f64]| -> Option<f64> {
        if v.is_empty() {
            None
        } else {
            Some(typebox::log_sum_exp2_slice(v) - (trials as f64).log2())
        }
    };

    Ok(SimulationStats {
        trials,
        alpha1_hat: wilson(a1, trials),
        alpha2_hat: wilson(a2, trials),
        beta1_hat: wilson(b1, trials),
        beta2_hat: wilson(b2, trials),
        mean_len1: len1 as f64 / trials as f64,
        mean_len2: len2 as f64 / trials as f64,
        branch_counts: counts,
        beta1_rb_log2: rb_mean(&rb1),
        beta2_rb_log2: rb_mean(&rb2),
    })
}

// ---------------------------------------------------------------------
// Basic-scheme building blocks (materialized codebooks, no flags).
// ---------------------------------------------------------------------

fn transient_encoder(cb: &Codebook, joint_in_u: &JointPmf, mu: f64) -> EncoderContext {
    let meta = cb.meta();
    let lnf = Arc::new(LnFactorials::up_to(meta.n));
    EncoderContext {
        cb: cb.clone(),
        joint_in_u: joint_in_u.clone(),
        input_marginal: joint_in_u.marginal(0),
        mu,
        pair: PairTypicality::new(joint_in_u, meta.gen_pmf.probs(), meta.n, mu, lnf),
    }
}

/// Transmitter step of the basic scheme: quantize `x_seq` against the
/// codebook (selection joint `joint_xu`, axes `(x, u)`), or emit `"0"`.
pub fn tx_encode_basic(
    x_seq: &[usize],
    cb: &Codebook,
    joint_xu: &JointPmf,
    mu: f64,
    rng: &mut impl Rng,
) -> Result<BitString> {
    let enc = transient_encoder(cb, joint_xu, mu);
    Ok(match enc.encode(x_seq, rng)? {
        None => BitString::zero_flag(),
        Some((m, _)) => string_encode(&m),
    })
}

fn lookup_codeword(cb: &Codebook, m: &BigUint) -> Result<Vec<usize>> {
    let Codebook::Materialized { meta, entries } = cb else {
        return Err(SimError::InvalidParams(
            "index lookup requires a materialized codebook".into(),
        ));
    };
    let count = entries.len() / meta.n;
    let idx = m.to_u64_digits();
    let m_u64 = match (idx.len(), idx.first()) {
        (0, _) => 0,
        (1, Some(&v)) => v,
        _ => u64::MAX,
    };
    if m_u64 == 0 || m_u64 > count as u64 {
        return Err(SimError::UnknownIndex { index: m.to_string(), size: count.to_string() });
    }
    let i = (m_u64 - 1) as usize;
    Ok(entries[i * meta.n..(i + 1) * meta.n].iter().map(|&b| b as usize).collect())
}

/// Relay step of the basic scheme: decide from `(u1(m1), y)` and, on a
/// null decision, re-encode `y` against the second codebook.
#[allow(clippy::too_many_arguments)]
pub fn relay_step_basic(
    y_seq: &[usize],
    m1: &BitString,
    cb1: &Codebook,
    j_u1y: &JointPmf,
    cb2: &Codebook,
    joint_yu2: &JointPmf,
    mu: f64,
    rng: &mut impl Rng,
) -> Result<(u8, BitString)> {
    if m1 == &BitString::zero_flag() {
        return Ok((1, BitString::zero_flag()));
    }
    let m = string_decode(m1)?;
    let u1 = lookup_codeword(cb1, &m)?;
    if !is_jointly_typical(&[&u1, y_seq], j_u1y, mu)? {
        return Ok((1, BitString::zero_flag()));
    }
    let m2 = tx_encode_basic(y_seq, cb2, joint_yu2, mu, rng)?;
    Ok((0, m2))
}

/// Receiver step of the basic scheme: decide from `(u2(m2), z)`.
pub fn rx_decide_basic(
    z_seq: &[usize],
    m2: &BitString,
    cb2: &Codebook,
    j_u2z: &JointPmf,
    mu: f64,
) -> Result<u8> {
    if m2 == &BitString::zero_flag() {
        return Ok(1);
    }
    let m = string_decode(m2)?;
    let u2 = lookup_codeword(cb2, &m)?;
    Ok(u8::from(!is_jointly_typical(&[&u2, z_seq], j_u2z, mu)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regions::ExponentPair;
    use crate::regions::RateBudget;

    fn noisy_channel() -> ConditionalPmf {
        ConditionalPmf::from_table(&[vec![0.85, 0.15], vec![0.2, 0.8]]).unwrap()
    }

    fn solution(u1: ConditionalPmf, u2: ConditionalPmf) -> AuxiliarySolution {
        let mut sol = AuxiliarySolution {
            u1: None,
            u2: None,
            u1_prime: None,
            u1_dprime: None,
            u2_prime: None,
            u2_dprime: None,
            rate_split: None,
            achieved: ExponentPair { theta1: 0.0, theta2: 0.0 },
            rates_used: RateBudget::new(0.0, 0.0).unwrap(),
        };
        sol.u1 = Some(u1);
        sol.u2 = Some(u2);
        sol
    }

    fn equal_params(n: usize, mu: f64) -> SchemeParams {
        SchemeParams {
            source: TwoHopSource::dsbs_example(),
            regime: Regime::Equal,
            n,
            mu,
            eps: EpsilonPair::new(0.05, 0.05).unwrap(),
            channels: solution(noisy_channel(), noisy_channel()),
            partition_seed: 1,
            codebook_seed: 2,
            noise_seed: 3,
        }
    }

    fn unequal_params(regime: Regime, n: usize, mu: f64) -> SchemeParams {
        let (e1, e2) = match regime {
            Regime::Eps2Greater => (0.05, 0.15),
            Regime::Eps1Greater => (0.15, 0.05),
            _ => unreachable!(),
        };
        let mut sol = solution(noisy_channel(), noisy_channel());
        sol.u1 = None;
        sol.u2 = None;
        sol.u1_prime = Some(noisy_channel());
        sol.u1_dprime = Some(noisy_channel());
        sol.u2_prime = Some(noisy_channel());
        if regime == Regime::Eps1Greater {
            sol.u2_dprime = Some(noisy_channel());
        }
        SchemeParams {
            source: TwoHopSource::dsbs_example(),
            regime,
            n,
            mu,
            eps: EpsilonPair::new(e1, e2).unwrap(),
            channels: sol,
            partition_seed: 1,
            codebook_seed: 2,
            noise_seed: 3,
        }
    }

    #[test]
    fn forced_s_branch_is_degenerate() {
        let params = equal_params(24, 0.2);
        // s target above the typical probability: every typical draw -> S.
        let rule = PartitionRule::new(0.999, 0.0, 9).unwrap();
        let ctx = SchemeContext::new(&params, &rule).unwrap();
        let mut seen_s = false;
        for seed in 0..20 {
            let o = run_trial(&ctx, 0, seed).unwrap();
            if o.branch == TrialBranch::S {
                seen_s = true;
                assert_eq!((o.h_hat_y, o.h_hat_z), (1, 1));
                assert_eq!((o.len_m1, o.len_m2), (1, 1));
            }
        }
        assert!(seen_s);
    }

    #[test]
    fn eps2_greater_ddprime_relays_bare_flag() {
        let params = unequal_params(Regime::Eps2Greater, 60, 0.1);
        // All non-S mass to D''.
        let rule = PartitionRule::new(0.0, 1.0, 9).unwrap();
        let ctx = SchemeContext::new(&params, &rule).unwrap();
        let mut seen = false;
        for seed in 0..20 {
            let o = run_trial(&ctx, 0, seed).unwrap();
            if o.branch == TrialBranch::Ddprime {
                seen = true;
                assert_eq!(o.h_hat_z, 1);
                assert_eq!(o.len_m2, 2, "bare flag is exactly two bits");
                assert!(o.len_m1 > 2, "payload follows the M1 flag");
            }
        }
        assert!(seen);
    }

    #[test]
    fn eps1_greater_ddprime_relay_always_alternative() {
        let params = unequal_params(Regime::Eps1Greater, 60, 0.1);
        let rule = PartitionRule::new(0.0, 1.0, 9).unwrap();
        let ctx = SchemeContext::new(&params, &rule).unwrap();
        for seed in 0..20 {
            let o = run_trial(&ctx, 0, seed).unwrap();
            if o.branch == TrialBranch::Ddprime {
                assert_eq!(o.h_hat_y, 1);
            }
        }
    }

    #[test]
    fn trials_are_deterministic() {
        let params = equal_params(80, 0.1);
        let rule = PartitionRule::new(0.02, 0.0, 9).unwrap();
        let ctx = SchemeContext::new(&params, &rule).unwrap();
        for seed in [0, 17, 99] {
            assert_eq!(run_trial(&ctx, 0, seed).unwrap(), run_trial(&ctx, 0, seed).unwrap());
            assert_eq!(run_trial(&ctx, 1, seed).unwrap(), run_trial(&ctx, 1, seed).unwrap());
        }
    }

    #[test]
    fn single_trial_stats_match_outcome() {
        let params = equal_params(60, 0.1);
        let rule = PartitionRule::new(0.02, 0.0, 9).unwrap();
        let stats = estimate_errors(&params, &rule, 1, 42).unwrap();
        let ctx = SchemeContext::new(&params, &rule).unwrap();
        let base = mix_seed(42, params.noise_seed, 0);
        let o0 = run_trial(&ctx, 0, mix_seed(base, 0, 0)).unwrap();
        let o1 = run_trial(&ctx, 1, mix_seed(base, 0, 1)).unwrap();
        assert_eq!(stats.alpha1_hat.value, f64::from(u8::from(o0.h_hat_y == 1)));
        assert_eq!(stats.beta2_hat.value, f64::from(u8::from(o1.h_hat_z == 0)));
        assert_eq!(stats.mean_len1, o0.len_m1 as f64);
        assert_eq!(stats.mean_len2, o0.len_m2 as f64);
    }

    #[test]
    fn estimate_errors_is_deterministic() {
        let params = equal_params(30, 0.1);
        let rule = PartitionRule::new(0.02, 0.0, 9).unwrap();
        let a = estimate_errors(&params, &rule, 200, 7).unwrap();
        let b = estimate_errors(&params, &rule, 200, 7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn basic_ops_flag_paths() {
        let cb = generate_codebook(Pmf::bernoulli(0.5).unwrap(), 0.3, 20, 5).unwrap();
        let j = Pmf::bernoulli(0.5).unwrap().join(&ConditionalPmf::identity(2)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (h, m2) =
            relay_step_basic(&[0; 20], &BitString::zero_flag(), &cb, &j, &cb, &j, 0.1, &mut rng)
                .unwrap();
        assert_eq!((h, m2), (1, BitString::zero_flag()));
        assert_eq!(rx_decide_basic(&[0; 20], &BitString::zero_flag(), &cb, &j, 0.1).unwrap(), 1);
    }

    #[test]
    fn tx_encode_atypical_emits_zero() {
        // All-ones is wildly atypical under Bern(0.1).
        let p = Pmf::bernoulli(0.1).unwrap();
        let joint = p.join(&ConditionalPmf::identity(2)).unwrap();
        let cb = generate_codebook(p, 0.2, 50, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let m = tx_encode_basic(&[1; 50], &cb, &joint, 0.05, &mut rng).unwrap();
        assert_eq!(m, BitString::zero_flag());
    }

    #[test]
    fn tx_encode_finds_planted_codeword() {
        // Codebook whose single entry equals x, with U = X: the encoder
        // must pick it, so the payload starts with 1.
        let n = 24;
        let x: Vec<usize> = (0..n).map(|i| i % 2).collect();
        let p = Pmf::bernoulli(0.5).unwrap();
        let joint = p.join(&ConditionalPmf::identity(2)).unwrap();
        let cb = generate_codebook(p, 0.0, n, 3).unwrap();
        let Codebook::Materialized { meta, mut entries } = cb else { unreachable!() };
        entries.copy_from_slice(&x.iter().map(|&s| s as u8).collect::<Vec<u8>>());
        let cb = Codebook::Materialized { meta, entries };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let m = tx_encode_basic(&x, &cb, &joint, 0.05, &mut rng).unwrap();
        assert_eq!(m.bits()[0], 1);
        assert_eq!(string_decode(&m).unwrap(), BigUint::from(1u8));
    }

    #[test]
    fn unknown_index_reported() {
        let cb = generate_codebook(Pmf::bernoulli(0.5).unwrap(), 0.2, 20, 5).unwrap();
        let j = Pmf::bernoulli(0.5).unwrap().join(&ConditionalPmf::identity(2)).unwrap();
        let huge = string_encode(&BigUint::from(1_000_000u32));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let err = relay_step_basic(&[0; 20], &huge, &cb, &j, &cb, &j, 0.1, &mut rng);
        assert!(matches!(err, Err(SimError::UnknownIndex { .. })));
    }

    #[test]
    fn zero_trials_rejected() {
        let params = equal_params(40, 0.15);
        let rule = PartitionRule::new(0.0, 0.0, 1).unwrap();
        assert!(matches!(
            estimate_errors(&params, &rule, 0, 0),
            Err(SimError::InvalidParams(_))
        ));
    }
}
