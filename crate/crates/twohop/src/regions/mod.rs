//! Fixed-rate optimal exponents and the expected-rate achievable
//! exponent regions for the two-hop network.
//!
//! The fixed-rate exponents are two independent single-link
//! maximizations. Under expected-rate constraints the regions split into
//! three regimes by how the two type-I budgets compare:
//!
//! - equal budgets: both links simply run at boosted rate `r / (1 - eps)`
//!   and the region is a rectangle (no tradeoff);
//! - relay budget larger (`eps2 > eps1`): the transmitter keeps two
//!   channel variants (primed/double-primed) sharing `r1`, producing a
//!   genuine `theta1`-vs-`theta2` frontier;
//! - transmitter budget larger (`eps1 > eps2`): both links split their
//!   budgets across two variants and `theta2` is the worse of the two
//!   cascaded branches.
//!
//! Frontiers are traced by epsilon-constraint scalarization: fix a
//! `theta1` floor, maximize `theta2`. The split search runs on cached
//! rate-information curves; every emitted point is then re-solved
//! exactly so its stored channels reproduce the claimed exponents.

mod curve;
pub(crate) mod optimizer;
mod oracle;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::probability::{
    entropy, lift_channel, mutual_information, ConditionalPmf, JointPmf, Pmf, TwoHopSource,
};
use curve::RateInfoCurve;
use optimizer::LinkProblem;

pub use oracle::{brute_force_oracle, brute_force_oracle_sweep};

#[derive(Debug, Error)]
pub enum RegionError {
    #[error("no feasible solution for theta1 = {theta1}")]
    InfeasibleTheta1 { theta1: f64 },
    #[error("input alphabet of size {size} is too large for the brute-force oracle")]
    UnsupportedAlphabet { size: usize },
    #[error("invalid arguments: {0}")]
    InvalidArguments(String),
}

pub type Result<T> = std::result::Result<T, RegionError>;

/// Non-negative per-link rate budgets in bits per source symbol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateBudget {
    pub r1: f64,
    pub r2: f64,
}

impl RateBudget {
    pub fn new(r1: f64, r2: f64) -> Result<Self> {
        if !(r1 >= 0.0) || !(r2 >= 0.0) {
            return Err(RegionError::InvalidArguments(format!(
                "rate budgets must be non-negative, got ({r1}, {r2})"
            )));
        }
        Ok(Self { r1, r2 })
    }
}

/// Type-I error budgets for the two decision points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonPair {
    pub eps1: f64,
    pub eps2: f64,
}

impl EpsilonPair {
    pub fn new(eps1: f64, eps2: f64) -> Result<Self> {
        for e in [eps1, eps2] {
            if !(0.0..1.0).contains(&e) {
                return Err(RegionError::InvalidArguments(format!(
                    "epsilon must lie in [0, 1), got {e}"
                )));
            }
            if e >= 0.5 {
                log::warn!(
                    "epsilon = {e} >= 1/2: the region expressions are used as stated, \
                     but their validity in this range is not established"
                );
            }
        }
        Ok(Self { eps1, eps2 })
    }
}

/// A pair of type-II error exponents (bits per source symbol).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentPair {
    pub theta1: f64,
    pub theta2: f64,
}

/// How a rate budget is divided between the primed and double-primed
/// channel variants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateSplit {
    pub r1_prime: f64,
    pub r1_dprime: f64,
    pub r2_prime: f64,
    pub r2_dprime: f64,
}

/// The auxiliary channels (and split, where applicable) that certify an
/// exponent pair, plus the rates they consume.
#[derive(Debug, Clone)]
pub struct AuxiliarySolution {
    pub u1: Option<ConditionalPmf>,
    pub u2: Option<ConditionalPmf>,
    pub u1_prime: Option<ConditionalPmf>,
    pub u1_dprime: Option<ConditionalPmf>,
    pub u2_prime: Option<ConditionalPmf>,
    pub u2_dprime: Option<ConditionalPmf>,
    pub rate_split: Option<RateSplit>,
    pub achieved: ExponentPair,
    pub rates_used: RateBudget,
}

impl AuxiliarySolution {
    fn empty(achieved: ExponentPair, rates_used: RateBudget) -> Self {
        Self {
            u1: None,
            u2: None,
            u1_prime: None,
            u1_dprime: None,
            u2_prime: None,
            u2_dprime: None,
            rate_split: None,
            achieved,
            rates_used,
        }
    }
}

/// Which of the four region constructions a result belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Fixed,
    Equal,
    Eps2Greater,
    Eps1Greater,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::Fixed => "fixed",
            Regime::Equal => "equal",
            Regime::Eps2Greater => "eps2_greater",
            Regime::Eps1Greater => "eps1_greater",
        })
    }
}

impl FromStr for Regime {
    type Err = RegionError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed" => Ok(Regime::Fixed),
            "equal" => Ok(Regime::Equal),
            "eps2_greater" => Ok(Regime::Eps2Greater),
            "eps1_greater" => Ok(Regime::Eps1Greater),
            other => Err(RegionError::InvalidArguments(format!("unknown regime '{other}'"))),
        }
    }
}

/// Which equalities are forced between the primed and double-primed
/// channel variants while tracing a frontier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrontierVariant {
    Full,
    TiedU1,
    TiedU2,
    TiedBoth,
}

impl fmt::Display for FrontierVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FrontierVariant::Full => "full",
            FrontierVariant::TiedU1 => "tied_u1",
            FrontierVariant::TiedU2 => "tied_u2",
            FrontierVariant::TiedBoth => "tied_both",
        })
    }
}

impl FromStr for FrontierVariant {
    type Err = RegionError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(FrontierVariant::Full),
            "tied_u1" => Ok(FrontierVariant::TiedU1),
            "tied_u2" => Ok(FrontierVariant::TiedU2),
            "tied_both" => Ok(FrontierVariant::TiedBoth),
            other => Err(RegionError::InvalidArguments(format!("unknown variant '{other}'"))),
        }
    }
}

/// One traced frontier point: the largest `theta2` compatible with the
/// given `theta1` floor, with its certifying solution.
#[derive(Debug, Clone)]
pub struct FrontierPoint {
    pub theta1: f64,
    pub theta2: f64,
    pub solution: AuxiliarySolution,
}

/// A Pareto frontier: `theta1` strictly increasing, `theta2`
/// non-increasing.
#[derive(Debug, Clone)]
pub struct Frontier {
    pub regime: Regime,
    pub variant: FrontierVariant,
    pub points: Vec<FrontierPoint>,
    /// Requested grid values for which no solution exists (above the
    /// feasible `theta1` range).
    pub infeasible_theta1: Vec<f64>,
}

/// Tuning knobs for the channel optimizer. Fully deterministic; `seed`
/// is reserved for stochastic refinement stages and currently unused.
#[derive(Debug, Clone, Copy)]
pub struct OptimizerConfig {
    /// Auxiliary alphabet size; `None` selects input alphabet size + 1.
    pub u_cardinality: Option<usize>,
    pub grid_resolution: f64,
    pub refine_iterations: usize,
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            u_cardinality: None,
            grid_resolution: 0.05,
            refine_iterations: 400,
            tolerance: 1e-6,
            seed: 7,
        }
    }
}

/// Which link of the relay network a single-link optimization refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// Transmitter to relay: channel on `X`, value measured against `Y`.
    TxToRelay,
    /// Relay to receiver: channel on `Y`, value measured against `Z`.
    RelayToRx,
}

pub(crate) fn link_marginal_and_joint(src: &TwoHopSource, side: Side) -> (&Pmf, &JointPmf) {
    match side {
        Side::TxToRelay => (src.p_x(), src.p_xy()),
        Side::RelayToRx => (src.p_y(), src.p_yz()),
    }
}

fn u_cardinality(cfg: &OptimizerConfig, input_size: usize, output_size: usize) -> usize {
    let nu = cfg.u_cardinality.unwrap_or(input_size + 1).max(1);
    let bound = input_size * output_size + 2;
    if nu > bound {
        log::warn!("u_cardinality {nu} exceeds the sufficiency bound {bound}; clamping");
        return bound;
    }
    nu
}

fn rows_to_channel(rows: &[f64], na: usize, nu: usize) -> ConditionalPmf {
    let table: Vec<Vec<f64>> = (0..na)
        .map(|a| {
            let row = &rows[a * nu..(a + 1) * nu];
            let sum: f64 = row.iter().sum();
            row.iter().map(|&p| p / sum).collect()
        })
        .collect();
    ConditionalPmf::from_table(&table).expect("optimizer rows form a valid channel")
}

fn solve_link(src: &TwoHopSource, side: Side, cap: f64, cfg: &OptimizerConfig) -> (ConditionalPmf, f64) {
    let (p_a, joint) = link_marginal_and_joint(src, side);
    let problem = LinkProblem::new(p_a, joint);
    let nu = u_cardinality(cfg, p_a.alphabet_size(), joint.dims()[1]);
    let (rows, value) = optimizer::optimize_link(
        &problem,
        nu,
        cap,
        cfg.grid_resolution,
        cfg.refine_iterations,
    );
    (rows_to_channel(&rows, p_a.alphabet_size(), nu), value)
}

fn build_curve(src: &TwoHopSource, side: Side, cfg: &OptimizerConfig) -> RateInfoCurve {
    let (p_a, joint) = link_marginal_and_joint(src, side);
    let problem = LinkProblem::new(p_a, joint);
    let nu = u_cardinality(cfg, p_a.alphabet_size(), joint.dims()[1]);
    // Curve points only steer the split search; a lighter refinement
    // budget keeps construction fast without moving final answers.
    RateInfoCurve::build(
        &problem,
        nu,
        entropy(p_a),
        48,
        cfg.grid_resolution,
        cfg.refine_iterations.min(200),
    )
}

/// Best channel and value for `max I(U;Y)` s.t. `I(U;X) <= rate_cap`
/// (side `TxToRelay`), or `max I(U;Z)` s.t. `I(U;Y) <= rate_cap` (side
/// `RelayToRx`).
pub fn max_forwarded_info(
    src: &TwoHopSource,
    side: Side,
    rate_cap: f64,
    cfg: &OptimizerConfig,
) -> Result<(ConditionalPmf, f64)> {
    if !(rate_cap >= 0.0) {
        return Err(RegionError::InvalidArguments(format!(
            "rate_cap must be non-negative, got {rate_cap}"
        )));
    }
    Ok(solve_link(src, side, rate_cap, cfg))
}

/// Fixed-rate optimal exponent at the relay: the transmitter-link
/// maximization alone.
pub fn theta1_fix(src: &TwoHopSource, r1: f64, cfg: &OptimizerConfig) -> Result<f64> {
    Ok(max_forwarded_info(src, Side::TxToRelay, r1, cfg)?.1)
}

/// Fixed-rate optimal exponent at the receiver: sum of the two
/// independent single-link maximizations.
pub fn theta2_fix(src: &TwoHopSource, r: RateBudget, cfg: &OptimizerConfig) -> Result<f64> {
    let v1 = max_forwarded_info(src, Side::TxToRelay, r.r1, cfg)?.1;
    let v2 = max_forwarded_info(src, Side::RelayToRx, r.r2, cfg)?.1;
    Ok(v1 + v2)
}

/// Equal type-I budgets: the region is the rectangle below the returned
/// corner, reached by running both links at rate `r / (1 - eps)`.
pub fn region_equal_eps(
    src: &TwoHopSource,
    r: RateBudget,
    eps: f64,
    cfg: &OptimizerConfig,
) -> Result<(ExponentPair, AuxiliarySolution)> {
    let eps = EpsilonPair::new(eps, eps)?.eps1;
    let boost = 1.0 / (1.0 - eps);
    let (u1, v1) = solve_link(src, Side::TxToRelay, r.r1 * boost, cfg);
    let (u2, v2) = solve_link(src, Side::RelayToRx, r.r2 * boost, cfg);
    let corner = ExponentPair { theta1: v1, theta2: v1 + v2 };
    let mut sol = AuxiliarySolution::empty(corner, r);
    sol.u1 = Some(u1);
    sol.u2 = Some(u2);
    Ok((corner, sol))
}

/// Raw per-grid-point result before Pareto assembly.
enum PointOutcome {
    Feasible(FrontierPoint),
    Infeasible(f64),
}

fn assemble_frontier(
    regime: Regime,
    variant: FrontierVariant,
    outcomes: Vec<PointOutcome>,
) -> Result<Frontier> {
    let mut points = Vec::new();
    let mut infeasible = Vec::new();
    for o in outcomes {
        match o {
            PointOutcome::Feasible(p) => points.push(p),
            PointOutcome::Infeasible(t) => infeasible.push(t),
        }
    }
    if points.is_empty() {
        return Err(RegionError::InfeasibleTheta1 {
            theta1: infeasible.iter().cloned().fold(f64::INFINITY, f64::min),
        });
    }
    points.sort_by(|a, b| a.theta1.partial_cmp(&b.theta1).unwrap());
    // Pareto pass: theta2 must be non-increasing in theta1. Sweeping from
    // the right, a solution feasible at a larger theta1 floor is feasible
    // at any smaller one, so carry it left when it is better.
    let mut best: Option<(f64, AuxiliarySolution)> = None;
    for p in points.iter_mut().rev() {
        if let Some((theta2, sol)) = &best {
            if *theta2 > p.theta2 {
                p.theta2 = *theta2;
                p.solution = sol.clone();
                p.solution.achieved.theta1 = p.theta1.min(p.solution.achieved.theta1);
            }
        }
        if best.as_ref().map_or(true, |(t, _)| p.theta2 > *t) {
            best = Some((p.theta2, p.solution.clone()));
        }
    }
    // Enforce strictly increasing theta1 (clamping can create duplicates);
    // keep the higher theta2 among near-duplicates.
    let mut dedup: Vec<FrontierPoint> = Vec::with_capacity(points.len());
    for p in points {
        match dedup.last_mut() {
            Some(last) if (p.theta1 - last.theta1).abs() <= 1e-12 => {
                if p.theta2 > last.theta2 {
                    *last = p;
                }
            }
            _ => dedup.push(p),
        }
    }
    Ok(Frontier { regime, variant, points: dedup, infeasible_theta1: infeasible })
}

/// Deterministic 1-D pattern search maximizing `f` on `[lo, hi]`.
fn refine_1d(f: &dyn Fn(f64) -> f64, mut x: f64, lo: f64, hi: f64, mut step: f64) -> f64 {
    let mut fx = f(x);
    while step > 1e-7 {
        let mut improved = false;
        for cand in [(x + step).min(hi), (x - step).max(lo)] {
            let fc = f(cand);
            if fc > fx + 1e-15 {
                x = cand;
                fx = fc;
                improved = true;
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    x
}

/// Deterministic 2-D pattern search maximizing `f` on a rectangle.
#[allow(clippy::too_many_arguments)]
fn refine_2d(
    f: &dyn Fn(f64, f64) -> f64,
    mut x: f64,
    mut y: f64,
    lo_x: f64,
    hi_x: f64,
    lo_y: f64,
    hi_y: f64,
    mut step: f64,
) -> (f64, f64) {
    let mut fx = f(x, y);
    while step > 1e-7 {
        let mut improved = false;
        for (dx, dy) in [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)] {
            let cx = (x + dx * step).clamp(lo_x, hi_x);
            let cy = (y + dy * step).clamp(lo_y, hi_y);
            let fc = f(cx, cy);
            if fc > fx + 1e-15 {
                x = cx;
                y = cy;
                fx = fc;
                improved = true;
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (x, y)
}

/// Frontier for `eps2 > eps1`: the transmitter splits `r1` across a
/// primed channel (feeding both decisions) and a double-primed channel
/// (guarding `theta1` only); the relay runs a single boosted channel.
pub fn frontier_eps2_greater(
    src: &TwoHopSource,
    r: RateBudget,
    eps: EpsilonPair,
    theta1_grid: &[f64],
    variant: FrontierVariant,
    cfg: &OptimizerConfig,
) -> Result<Frontier> {
    if !(eps.eps2 > eps.eps1) {
        return Err(RegionError::InvalidArguments(format!(
            "this regime needs eps2 > eps1, got ({}, {})",
            eps.eps1, eps.eps2
        )));
    }
    match variant {
        FrontierVariant::Full | FrontierVariant::TiedU1 => {}
        other => {
            return Err(RegionError::InvalidArguments(format!(
                "variant '{other}' does not apply when only the transmitter splits its budget"
            )));
        }
    }
    let b = 1.0 - eps.eps2;
    let d = eps.eps2 - eps.eps1;
    let (u2, g2) = solve_link(src, Side::RelayToRx, r.r2 / b, cfg);

    let tied = variant == FrontierVariant::TiedU1;
    let f1 = if tied { None } else { Some(build_curve(src, Side::TxToRelay, cfg)) };

    // The exact tied-channel solution: the variant's whole answer when
    // requested, and an exact fallback candidate for the full variant
    // (whose curve interpolation can otherwise fall short of it).
    let tied_exact = solve_link(src, Side::TxToRelay, r.r1 / (1.0 - eps.eps1), cfg);

    // Largest feasible theta1 and the tied-channel solution if applicable.
    let (theta1_max, tied_u1) = if tied {
        let (ch, v) = tied_exact.clone();
        (v, Some((ch, v)))
    } else {
        // Fixed point of t -> f1((r1 - d f1^-1(t)) / b): the double-primed
        // channel must itself reach theta1 out of the leftover budget.
        let f1 = f1.as_ref().unwrap();
        let mut t = f1.value_at(r.r1 / b).min(f1.max_value());
        for _ in 0..200 {
            let cdd = f1.inverse(t).unwrap_or(f1.cap_max());
            let arg = ((r.r1 - d * cdd) / b).max(0.0);
            let next = f1.value_at(arg);
            if (next - t).abs() < 1e-13 {
                break;
            }
            t = 0.5 * (t + next);
        }
        (t, None)
    };

    let mut grid: Vec<f64> = theta1_grid.to_vec();
    grid.push(theta1_max);
    if !tied {
        // Where the tied fallback stops applying: include it so the full
        // frontier has a point exactly at the tied variant's endpoint.
        grid.push(tied_exact.1.min(theta1_max));
    }
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid.dedup_by(|a, b| (*a - *b).abs() <= 1e-12);

    let outcomes: Vec<PointOutcome> = grid
        .par_iter()
        .map(|&theta1| {
            if theta1 > theta1_max + 1e-9 || theta1 < 0.0 {
                return PointOutcome::Infeasible(theta1);
            }
            let (sol, theta2) = if let Some((ch, v1)) = &tied_u1 {
                let theta2 = v1 + g2;
                let mut sol = AuxiliarySolution::empty(
                    ExponentPair { theta1: theta1.min(*v1), theta2 },
                    r,
                );
                sol.u1_prime = Some(ch.clone());
                sol.u1_dprime = Some(ch.clone());
                sol.u2_prime = Some(u2.clone());
                sol.rate_split = Some(RateSplit {
                    r1_prime: r.r1 * b / (1.0 - eps.eps1),
                    r1_dprime: r.r1 * d / (1.0 - eps.eps1),
                    r2_prime: r.r2,
                    r2_dprime: 0.0,
                });
                (sol, theta2)
            } else {
                let f1 = f1.as_ref().unwrap();
                let Some(mut cdd) = f1.inverse(theta1) else {
                    return PointOutcome::Infeasible(theta1);
                };
                if d * cdd > r.r1 + 1e-9 {
                    return PointOutcome::Infeasible(theta1);
                }
                // Give the double-primed channel the minimum budget that
                // still reaches theta1; the rest maximizes theta2.
                let mut u1dd = solve_link(src, Side::TxToRelay, cdd, cfg);
                for _ in 0..8 {
                    if u1dd.1 >= theta1 - 1e-12 || d * cdd > r.r1 {
                        break;
                    }
                    cdd = (cdd * 1.01 + 1e-6).min(r.r1 / d.max(1e-300));
                    u1dd = solve_link(src, Side::TxToRelay, cdd, cfg);
                }
                let cp = ((r.r1 - d * cdd) / b).max(0.0);
                let (u1p, v1p) = solve_link(src, Side::TxToRelay, cp, cfg);
                let theta2 = v1p + g2;
                let feasible_theta1 = theta1.min(v1p).min(u1dd.1);
                let mut sol = AuxiliarySolution::empty(
                    ExponentPair { theta1: feasible_theta1, theta2 },
                    r,
                );
                sol.u1_prime = Some(u1p);
                sol.u1_dprime = Some(u1dd.0);
                sol.u2_prime = Some(u2.clone());
                let r1_dprime = (d * cdd).min(r.r1);
                sol.rate_split = Some(RateSplit {
                    r1_prime: r.r1 - r1_dprime,
                    r1_dprime,
                    r2_prime: r.r2,
                    r2_dprime: 0.0,
                });
                (sol, theta2)
            };
            // Exact tied candidate: guards the full variant against curve
            // interpolation error, keeping it dominant over tied_u1.
            let (tied_ch, tied_v) = &tied_exact;
            let (sol, theta2) = if !tied && theta1 <= tied_v + 1e-12 && tied_v + g2 > theta2 {
                let t2 = tied_v + g2;
                let mut s = AuxiliarySolution::empty(
                    ExponentPair { theta1: theta1.min(*tied_v), theta2: t2 },
                    r,
                );
                s.u1_prime = Some(tied_ch.clone());
                s.u1_dprime = Some(tied_ch.clone());
                s.u2_prime = Some(u2.clone());
                s.rate_split = Some(RateSplit {
                    r1_prime: r.r1 * b / (1.0 - eps.eps1),
                    r1_dprime: r.r1 * d / (1.0 - eps.eps1),
                    r2_prime: r.r2,
                    r2_dprime: 0.0,
                });
                (s, t2)
            } else {
                (sol, theta2)
            };
            PointOutcome::Feasible(FrontierPoint {
                theta1: sol.achieved.theta1,
                theta2,
                solution: sol,
            })
        })
        .collect();

    assemble_frontier(Regime::Eps2Greater, variant, outcomes)
}

/// Frontier for `eps1 > eps2`: both links split their budgets across a
/// primed and a double-primed branch and `theta2` is the worse of the
/// two cascaded branch sums.
pub fn frontier_eps1_greater(
    src: &TwoHopSource,
    r: RateBudget,
    eps: EpsilonPair,
    theta1_grid: &[f64],
    variant: FrontierVariant,
    cfg: &OptimizerConfig,
) -> Result<Frontier> {
    if !(eps.eps1 > eps.eps2) {
        return Err(RegionError::InvalidArguments(format!(
            "this regime needs eps1 > eps2, got ({}, {})",
            eps.eps1, eps.eps2
        )));
    }
    let a = 1.0 - eps.eps1;
    let d = eps.eps1 - eps.eps2;
    let b = 1.0 - eps.eps2;

    // Tied relay channel: both relay branches at the common boosted cap.
    let (u2t, g2t) = solve_link(src, Side::RelayToRx, r.r2 / b, cfg);

    let needs_curves = matches!(variant, FrontierVariant::Full | FrontierVariant::TiedU2);
    let f1c = needs_curves.then(|| build_curve(src, Side::TxToRelay, cfg));
    let f2c = (variant == FrontierVariant::Full).then(|| build_curve(src, Side::RelayToRx, cfg));

    // Shared exact transmitter solutions: the fully tied channel (common
    // boosted cap r1 / b) and the all-primed channel (cap r1 / a). The
    // tied solution doubles as an exact fallback candidate in the full
    // variant, keeping it dominant over the tied constructions despite
    // curve interpolation error.
    let tied_t = solve_link(src, Side::TxToRelay, r.r1 / b, cfg);
    let full_t = solve_link(src, Side::TxToRelay, r.r1 / a, cfg);

    // Per-variant theta1 endpoint and any shared exact solutions.
    let (theta1_max, tied_u1, tied_both_a) = match variant {
        FrontierVariant::Full | FrontierVariant::TiedU2 => {
            // All of r1 on the primed branch.
            (full_t.1, None, None)
        }
        FrontierVariant::TiedU1 => (tied_t.1, Some(tied_t.clone()), None),
        FrontierVariant::TiedBoth => {
            (full_t.1, None, Some((tied_t.clone(), full_t.clone())))
        }
    };

    let mut grid: Vec<f64> = theta1_grid.to_vec();
    grid.push(theta1_max);
    if variant == FrontierVariant::TiedBoth {
        // The staircase drops where the fully tied branch runs out.
        if let Some(((_, v_t), _)) = &tied_both_a {
            grid.push(*v_t);
        }
    }
    if variant == FrontierVariant::Full {
        // Where the tied fallback stops applying: include it so the full
        // frontier has a point exactly at the tied variants' endpoint.
        grid.push(tied_t.1.min(theta1_max));
    }
    grid.sort_by(|x, y| x.partial_cmp(y).unwrap());
    grid.dedup_by(|x, y| (*x - *y).abs() <= 1e-12);

    let outcomes: Vec<PointOutcome> = grid
        .par_iter()
        .map(|&theta1| {
            if theta1 > theta1_max + 1e-9 || theta1 < 0.0 {
                return PointOutcome::Infeasible(theta1);
            }
            match variant {
                FrontierVariant::TiedU1 => {
                    let (ch, v1) = tied_u1.as_ref().unwrap();
                    // With U1 tied, both branches share I(U1;Y); the relay
                    // optimum ties its branches at the common boosted cap.
                    let theta2 = v1 + g2t;
                    let mut sol = AuxiliarySolution::empty(
                        ExponentPair { theta1: theta1.min(*v1), theta2 },
                        r,
                    );
                    sol.u1_prime = Some(ch.clone());
                    sol.u1_dprime = Some(ch.clone());
                    sol.u2_prime = Some(u2t.clone());
                    sol.u2_dprime = Some(u2t.clone());
                    sol.rate_split = Some(RateSplit {
                        r1_prime: r.r1 * a / b,
                        r1_dprime: r.r1 * d / b,
                        r2_prime: r.r2 * a / b,
                        r2_dprime: r.r2 * d / b,
                    });
                    PointOutcome::Feasible(FrontierPoint {
                        theta1: sol.achieved.theta1,
                        theta2,
                        solution: sol,
                    })
                }
                FrontierVariant::TiedBoth => {
                    let ((ch_t, v_t), (ch_f, _)) = tied_both_a.as_ref().unwrap();
                    let (u1p, u1dd, theta2) = if theta1 <= *v_t + 1e-12 {
                        // Fully tied rectangle.
                        (ch_t.clone(), ch_t.clone(), v_t + g2t)
                    } else {
                        // Degenerate double-primed transmitter branch: all
                        // of r1 funds the primed channel, the idle branch
                        // caps theta2 at the relay value alone.
                        let constant = ConditionalPmf::constant(
                            src.p_x().alphabet_size(),
                            Pmf::point_mass(ch_f.output_size(), 0),
                        );
                        (ch_f.clone(), constant, g2t)
                    };
                    let v1p = mutual_information(&lift_channel(src.p_xy(), &u1p).unwrap());
                    let mut sol = AuxiliarySolution::empty(
                        ExponentPair { theta1: theta1.min(v1p), theta2 },
                        r,
                    );
                    let r1_dprime = if theta1 <= *v_t + 1e-12 { r.r1 * d / b } else { 0.0 };
                    sol.u1_prime = Some(u1p);
                    sol.u1_dprime = Some(u1dd);
                    sol.u2_prime = Some(u2t.clone());
                    sol.u2_dprime = Some(u2t.clone());
                    sol.rate_split = Some(RateSplit {
                        r1_prime: r.r1 - r1_dprime,
                        r1_dprime,
                        r2_prime: r.r2 * a / b,
                        r2_dprime: r.r2 * d / b,
                    });
                    PointOutcome::Feasible(FrontierPoint {
                        theta1: sol.achieved.theta1,
                        theta2,
                        solution: sol,
                    })
                }
                FrontierVariant::TiedU2 => {
                    // Feasibility was already established against the exact
                    // endpoint; the interpolated inverse may overshoot r1
                    // slightly near saturation, so clamp instead of rejecting.
                    let f1 = f1c.as_ref().unwrap();
                    let c1p_min = f1.inverse(theta1).unwrap_or(f1.cap_max());
                    let s1_min = (a * c1p_min).min(r.r1);
                    // Split r1 to maximize the worse transmitter branch.
                    let obj = |s1: f64| {
                        let v1p = f1.value_at(s1 / a);
                        let v1dd = f1.value_at(if d > 0.0 { (r.r1 - s1) / d } else { 0.0 });
                        v1p.min(v1dd)
                    };
                    let mut best_s1 = s1_min;
                    let mut best = f64::NEG_INFINITY;
                    for i in 0..=80 {
                        let s1 = s1_min + (r.r1 - s1_min) * i as f64 / 80.0;
                        let v = obj(s1);
                        if v > best {
                            best = v;
                            best_s1 = s1;
                        }
                    }
                    let s1 = refine_1d(&obj, best_s1, s1_min, r.r1, (r.r1 - s1_min) / 40.0 + 1e-9);
                    let (u1p, v1p) = solve_link(src, Side::TxToRelay, s1 / a, cfg);
                    let (u1dd, v1dd) =
                        solve_link(src, Side::TxToRelay, if d > 0.0 { (r.r1 - s1) / d } else { 0.0 }, cfg);
                    let theta2 = g2t + v1p.min(v1dd);
                    let mut sol = AuxiliarySolution::empty(
                        ExponentPair { theta1: theta1.min(v1p), theta2 },
                        r,
                    );
                    sol.u1_prime = Some(u1p);
                    sol.u1_dprime = Some(u1dd);
                    sol.u2_prime = Some(u2t.clone());
                    sol.u2_dprime = Some(u2t.clone());
                    sol.rate_split = Some(RateSplit {
                        r1_prime: s1,
                        r1_dprime: r.r1 - s1,
                        r2_prime: r.r2 * a / b,
                        r2_dprime: r.r2 * d / b,
                    });
                    PointOutcome::Feasible(FrontierPoint {
                        theta1: sol.achieved.theta1,
                        theta2,
                        solution: sol,
                    })
                }
                FrontierVariant::Full => {
                    let f1 = f1c.as_ref().unwrap();
                    let f2 = f2c.as_ref().unwrap();
                    // As above: clamp the interpolated minimum share; the
                    // exact nudge below restores theta1 if it falls short.
                    let c1p_min = f1.inverse(theta1).unwrap_or(f1.cap_max());
                    let s1_min = (a * c1p_min).min(r.r1);
                    let obj = |s1: f64, s2: f64| {
                        let branch_p = f1.value_at(s1 / a) + f2.value_at(s2 / a);
                        let branch_dd = f1.value_at(if d > 0.0 { (r.r1 - s1) / d } else { 0.0 })
                            + f2.value_at(if d > 0.0 { (r.r2 - s2) / d } else { 0.0 });
                        branch_p.min(branch_dd)
                    };
                    let mut best = (s1_min, 0.0, f64::NEG_INFINITY);
                    for i in 0..=40 {
                        let s1 = s1_min + (r.r1 - s1_min) * i as f64 / 40.0;
                        for j in 0..=40 {
                            let s2 = r.r2 * j as f64 / 40.0;
                            let v = obj(s1, s2);
                            if v > best.2 {
                                best = (s1, s2, v);
                            }
                        }
                    }
                    let (mut s1, s2) = refine_2d(
                        &obj,
                        best.0,
                        best.1,
                        s1_min,
                        r.r1,
                        0.0,
                        r.r2,
                        (r.r1.max(r.r2)) / 40.0 + 1e-9,
                    );
                    // Exact re-solve at the chosen split; nudge the primed
                    // share up if interpolation left theta1 short.
                    let mut u1p = solve_link(src, Side::TxToRelay, s1 / a, cfg);
                    for _ in 0..8 {
                        if u1p.1 >= theta1 - 1e-12 || s1 >= r.r1 {
                            break;
                        }
                        s1 = (s1 * 1.001 + 1e-6).min(r.r1);
                        u1p = solve_link(src, Side::TxToRelay, s1 / a, cfg);
                    }
                    let (u1dd, v1dd) =
                        solve_link(src, Side::TxToRelay, if d > 0.0 { (r.r1 - s1) / d } else { 0.0 }, cfg);
                    let (u2p, v2p) = solve_link(src, Side::RelayToRx, s2 / a, cfg);
                    let (u2dd, v2dd) =
                        solve_link(src, Side::RelayToRx, if d > 0.0 { (r.r2 - s2) / d } else { 0.0 }, cfg);
                    let mut theta2 = (u1p.1 + v2p).min(v1dd + v2dd);
                    let mut sol = AuxiliarySolution::empty(
                        ExponentPair { theta1: theta1.min(u1p.1), theta2 },
                        r,
                    );
                    sol.u1_prime = Some(u1p.0);
                    sol.u1_dprime = Some(u1dd);
                    sol.u2_prime = Some(u2p);
                    sol.u2_dprime = Some(u2dd);
                    sol.rate_split = Some(RateSplit {
                        r1_prime: s1,
                        r1_dprime: r.r1 - s1,
                        r2_prime: s2,
                        r2_dprime: r.r2 - s2,
                    });
                    // Exact fallback candidates: the fully tied split (when
                    // theta1 fits under the tied transmitter cap) and the
                    // degenerate double-primed split. Both lie inside the
                    // search space, so they only win when interpolation left
                    // the grid search short; keeping the best theta2 makes
                    // the full variant dominate the tied ones exactly.
                    let (ch_t, v_t) = &tied_t;
                    if theta1 <= v_t + 1e-12 && v_t + g2t > theta2 {
                        theta2 = v_t + g2t;
                        sol = AuxiliarySolution::empty(
                            ExponentPair { theta1: theta1.min(*v_t), theta2 },
                            r,
                        );
                        sol.u1_prime = Some(ch_t.clone());
                        sol.u1_dprime = Some(ch_t.clone());
                        sol.u2_prime = Some(u2t.clone());
                        sol.u2_dprime = Some(u2t.clone());
                        sol.rate_split = Some(RateSplit {
                            r1_prime: r.r1 * a / b,
                            r1_dprime: r.r1 * d / b,
                            r2_prime: r.r2 * a / b,
                            r2_dprime: r.r2 * d / b,
                        });
                    }
                    if g2t > theta2 {
                        let (ch_f, v_f) = &full_t;
                        theta2 = g2t;
                        sol = AuxiliarySolution::empty(
                            ExponentPair { theta1: theta1.min(*v_f), theta2 },
                            r,
                        );
                        sol.u1_prime = Some(ch_f.clone());
                        sol.u1_dprime = Some(ConditionalPmf::constant(
                            src.p_x().alphabet_size(),
                            Pmf::point_mass(ch_f.output_size(), 0),
                        ));
                        sol.u2_prime = Some(u2t.clone());
                        sol.u2_dprime = Some(u2t.clone());
                        sol.rate_split = Some(RateSplit {
                            r1_prime: r.r1,
                            r1_dprime: 0.0,
                            r2_prime: r.r2 * a / b,
                            r2_dprime: r.r2 * d / b,
                        });
                    }
                    PointOutcome::Feasible(FrontierPoint {
                        theta1: sol.achieved.theta1,
                        theta2,
                        solution: sol,
                    })
                }
            }
        })
        .collect();

    assemble_frontier(Regime::Eps1Greater, variant, outcomes)
}

fn tx_mis(src: &TwoHopSource, ch: &ConditionalPmf) -> Option<(f64, f64)> {
    let joint_xu = src.p_x().join(ch).ok()?;
    let lifted = lift_channel(src.p_xy(), ch).ok()?;
    Some((mutual_information(&joint_xu), mutual_information(&lifted)))
}

fn relay_mis(src: &TwoHopSource, ch: &ConditionalPmf) -> Option<(f64, f64)> {
    let joint_yu = src.p_y().join(ch).ok()?;
    let lifted = lift_channel(src.p_yz(), ch).ok()?;
    Some((mutual_information(&joint_yu), mutual_information(&lifted)))
}

/// Recompute every mutual information from the stored channels and check
/// the regime's exponent and rate constraints within `1e-9`.
pub fn verify_solution(
    src: &TwoHopSource,
    sol: &AuxiliarySolution,
    r: RateBudget,
    eps: EpsilonPair,
    regime: Regime,
) -> bool {
    const TOL: f64 = 1e-9;
    let t1 = sol.achieved.theta1;
    let t2 = sol.achieved.theta2;
    match regime {
        Regime::Fixed | Regime::Equal => {
            let (Some(u1), Some(u2)) = (&sol.u1, &sol.u2) else { return false };
            let Some((ix, iy)) = tx_mis(src, u1) else { return false };
            let Some((iy2, iz)) = relay_mis(src, u2) else { return false };
            let (s1, s2) = match regime {
                Regime::Fixed => (1.0, 1.0),
                _ => (1.0 - eps.eps1, 1.0 - eps.eps2),
            };
            t1 <= iy + TOL
                && t2 <= iy + iz + TOL
                && s1 * ix <= r.r1 + TOL
                && s2 * iy2 <= r.r2 + TOL
        }
        Regime::Eps2Greater => {
            if !(eps.eps2 > eps.eps1) {
                return false;
            }
            let (Some(u1p), Some(u1dd), Some(u2p)) =
                (&sol.u1_prime, &sol.u1_dprime, &sol.u2_prime)
            else {
                return false;
            };
            let Some((ixp, iyp)) = tx_mis(src, u1p) else { return false };
            let Some((ixdd, iydd)) = tx_mis(src, u1dd) else { return false };
            let Some((iyu2, izp)) = relay_mis(src, u2p) else { return false };
            let b = 1.0 - eps.eps2;
            let d = eps.eps2 - eps.eps1;
            t1 <= iyp.min(iydd) + TOL
                && t2 <= iyp + izp + TOL
                && b * ixp + d * ixdd <= r.r1 + TOL
                && b * iyu2 <= r.r2 + TOL
        }
        Regime::Eps1Greater => {
            if !(eps.eps1 > eps.eps2) {
                return false;
            }
            let (Some(u1p), Some(u1dd), Some(u2p), Some(u2dd)) =
                (&sol.u1_prime, &sol.u1_dprime, &sol.u2_prime, &sol.u2_dprime)
            else {
                return false;
            };
            let Some((ixp, iyp)) = tx_mis(src, u1p) else { return false };
            let Some((ixdd, iydd)) = tx_mis(src, u1dd) else { return false };
            let Some((iyu2p, izp)) = relay_mis(src, u2p) else { return false };
            let Some((iyu2dd, izdd)) = relay_mis(src, u2dd) else { return false };
            let a = 1.0 - eps.eps1;
            let d = eps.eps1 - eps.eps2;
            t1 <= iyp + TOL
                && t2 <= (iyp + izp).min(iydd + izdd) + TOL
                && a * ixp + d * ixdd <= r.r1 + TOL
                && a * iyu2p + d * iyu2dd <= r.r2 + TOL
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> OptimizerConfig {
        OptimizerConfig::default()
    }

    fn dsbs() -> TwoHopSource {
        TwoHopSource::dsbs_example()
    }

    #[test]
    fn forwarded_info_reference_points() {
        let src = dsbs();
        let (_, v) = max_forwarded_info(&src, Side::TxToRelay, 0.5, &cfg()).unwrap();
        assert!((v - 0.162282395565877).abs() < 1e-3, "{v}");
        let (_, v0) = max_forwarded_info(&src, Side::TxToRelay, 0.0, &cfg()).unwrap();
        assert_eq!(v0, 0.0);
        let (_, vs) = max_forwarded_info(&src, Side::TxToRelay, 1.0, &cfg()).unwrap();
        assert!((vs - src.i_xy()).abs() < 1e-3, "{vs}");
    }

    #[test]
    fn theta2_fix_reference_points() {
        let src = dsbs();
        let v = theta2_fix(&src, RateBudget::new(0.5, 0.5).unwrap(), &cfg()).unwrap();
        assert!((v - 0.325872480392762).abs() < 1e-3, "{v}");
        let z = theta2_fix(&src, RateBudget::new(0.0, 0.0).unwrap(), &cfg()).unwrap();
        assert_eq!(z, 0.0);
        let sat = theta2_fix(&src, RateBudget::new(1.0, 1.0).unwrap(), &cfg()).unwrap();
        assert!((sat - 0.541988627549646).abs() < 1e-3, "{sat}");
    }

    #[test]
    fn equal_eps_corner_reference() {
        let src = dsbs();
        let r = RateBudget::new(0.5, 0.5).unwrap();
        let (corner, sol) = region_equal_eps(&src, r, 0.05, &cfg()).unwrap();
        assert!((corner.theta1 - 0.169743069706874).abs() < 1e-3, "{}", corner.theta1);
        assert!((corner.theta2 - 0.340885797698503).abs() < 1e-3, "{}", corner.theta2);
        assert!(verify_solution(
            &src,
            &sol,
            r,
            EpsilonPair::new(0.05, 0.05).unwrap(),
            Regime::Equal
        ));
        // eps = 0 coincides with the fixed-rate solvers.
        let (corner0, _) = region_equal_eps(&src, r, 0.0, &cfg()).unwrap();
        let t2f = theta2_fix(&src, r, &cfg()).unwrap();
        assert!((corner0.theta2 - t2f).abs() < 1e-6);
        let (zero, _) = region_equal_eps(&src, RateBudget::new(0.0, 0.0).unwrap(), 0.05, &cfg()).unwrap();
        assert_eq!((zero.theta1, zero.theta2), (0.0, 0.0));
    }

    #[test]
    fn eps2_greater_frontier_reference() {
        let src = dsbs();
        let r = RateBudget::new(0.5, 0.5).unwrap();
        let eps = EpsilonPair::new(0.05, 0.15).unwrap();
        let grid = [0.0, 0.162282395565877];
        let f = frontier_eps2_greater(&src, r, eps, &grid, FrontierVariant::Full, &cfg()).unwrap();
        let at = |t: f64| -> f64 {
            f.points
                .iter()
                .filter(|p| (p.theta1 - t).abs() < 2e-3)
                .map(|p| p.theta2)
                .next()
                .unwrap_or(f64::NAN)
        };
        assert!((at(0.0) - 0.375149407228070).abs() < 2e-3, "{}", at(0.0));
        assert!((at(0.162282395565877) - 0.359001888537195).abs() < 2e-3);
        // Endpoint appended automatically.
        let last = f.points.last().unwrap();
        assert!((last.theta1 - 0.169743069706874).abs() < 2e-3, "{}", last.theta1);
        for p in &f.points {
            assert!(verify_solution(&src, &p.solution, r, eps, Regime::Eps2Greater));
        }
    }

    #[test]
    fn eps2_greater_tied_is_flat() {
        let src = dsbs();
        let r = RateBudget::new(0.5, 0.5).unwrap();
        let eps = EpsilonPair::new(0.05, 0.15).unwrap();
        let grid = [0.0, 0.08, 0.16];
        let f = frontier_eps2_greater(&src, r, eps, &grid, FrontierVariant::TiedU1, &cfg()).unwrap();
        for p in &f.points {
            assert!((p.theta2 - 0.358132875286663).abs() < 2e-3, "{}", p.theta2);
        }
    }

    #[test]
    fn eps1_greater_frontier_reference() {
        let src = dsbs();
        let r = RateBudget::new(0.5, 0.5).unwrap();
        let eps = EpsilonPair::new(0.15, 0.05).unwrap();
        let grid = [0.0, 0.1, 0.169743069706874];
        let f = frontier_eps1_greater(&src, r, eps, &grid, FrontierVariant::Full, &cfg()).unwrap();
        for p in f.points.iter().filter(|p| p.theta1 <= 0.1697431) {
            assert!((p.theta2 - 0.340885797698502).abs() < 2e-3, "{} {}", p.theta1, p.theta2);
        }
        let last = f.points.last().unwrap();
        assert!((last.theta1 - 0.186759601321881).abs() < 2e-3, "{}", last.theta1);
        assert!(last.theta2 >= 0.272352262830495 - 3e-3, "{}", last.theta2);
        for p in &f.points {
            assert!(verify_solution(&src, &p.solution, r, eps, Regime::Eps1Greater));
        }
    }

    #[test]
    fn eps1_greater_tied_both_staircase() {
        let src = dsbs();
        let r = RateBudget::new(0.5, 0.5).unwrap();
        let eps = EpsilonPair::new(0.15, 0.05).unwrap();
        let f = frontier_eps1_greater(&src, r, eps, &[0.05, 0.18], FrontierVariant::TiedBoth, &cfg())
            .unwrap();
        let last = f.points.last().unwrap();
        assert!((last.theta1 - 0.186759600912282).abs() < 3e-3, "{}", last.theta1);
        assert!((last.theta2 - 0.171142727863628).abs() < 3e-3, "{}", last.theta2);
        let first = f.points.first().unwrap();
        assert!((first.theta2 - 0.340885797698502).abs() < 3e-3, "{}", first.theta2);
        for p in &f.points {
            assert!(verify_solution(&src, &p.solution, r, eps, Regime::Eps1Greater));
        }
    }

    #[test]
    fn verify_rejects_tampered_and_accepts_hand_built() {
        let src = dsbs();
        let r = RateBudget::new(0.5, 0.5).unwrap();
        let eps = EpsilonPair::new(0.05, 0.05).unwrap();
        let (_, mut sol) = region_equal_eps(&src, r, 0.05, &cfg()).unwrap();
        sol.achieved.theta2 += 0.01;
        assert!(!verify_solution(&src, &sol, r, eps, Regime::Equal));

        // Hand-built U1 = X at exactly r1 = (1 - eps) H(X).
        let h_x = entropy(src.p_x());
        let r_exact = RateBudget::new(0.95 * h_x, 0.5).unwrap();
        let mut hand = AuxiliarySolution::empty(
            ExponentPair { theta1: src.i_xy(), theta2: src.i_xy() },
            r_exact,
        );
        hand.u1 = Some(ConditionalPmf::identity(2));
        hand.u2 = Some(ConditionalPmf::constant(2, Pmf::uniform(2)));
        assert!(verify_solution(&src, &hand, r_exact, eps, Regime::Equal));
        hand.rates_used.r1 -= 0.01;
        let r_tight = RateBudget::new(r_exact.r1 - 0.01, 0.5).unwrap();
        assert!(!verify_solution(&src, &hand, r_tight, eps, Regime::Equal));
    }

    #[test]
    fn regime_and_variant_round_trip_strings() {
        for s in ["fixed", "equal", "eps2_greater", "eps1_greater"] {
            assert_eq!(s.parse::<Regime>().unwrap().to_string(), s);
        }
        for s in ["full", "tied_u1", "tied_u2", "tied_both"] {
            assert_eq!(s.parse::<FrontierVariant>().unwrap().to_string(), s);
        }
        assert!("bogus".parse::<Regime>().is_err());
    }

    #[test]
    fn rejects_bad_arguments() {
        let src = dsbs();
        assert!(RateBudget::new(-0.1, 0.0).is_err());
        assert!(EpsilonPair::new(1.0, 0.1).is_err());
        let r = RateBudget::new(0.5, 0.5).unwrap();
        let swapped = EpsilonPair::new(0.15, 0.05).unwrap();
        assert!(frontier_eps2_greater(&src, r, swapped, &[0.0], FrontierVariant::Full, &cfg()).is_err());
        let ok = EpsilonPair::new(0.05, 0.15).unwrap();
        assert!(
            frontier_eps2_greater(&src, r, ok, &[0.0], FrontierVariant::TiedBoth, &cfg()).is_err()
        );
        // Entirely infeasible grid.
        let err = frontier_eps2_greater(&src, r, ok, &[0.9], FrontierVariant::Full, &cfg());
        assert!(err.is_ok(), "endpoint is always appended");
        let f = err.unwrap();
        assert_eq!(f.infeasible_theta1, vec![0.9]);
    }
}
