//! Command-line surface for the two-hop hypothesis-testing library:
//! region/frontier computations as CSV, simulation and validation as
//! JSON. Exit codes: 0 success, 1 validation failure, 2 config error.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};

use twohop::probability::compose_two_hop;
use twohop::regions::{
    brute_force_oracle, frontier_eps1_greater, frontier_eps2_greater, max_forwarded_info,
    region_equal_eps, theta1_fix, theta2_fix, EpsilonPair, Frontier, FrontierVariant,
    OptimizerConfig, RateBudget, Regime, Side,
};
use twohop::sim::{estimate_errors, PartitionRule, SchemeParams, SimulationStats};
use twohop::{ConditionalPmf, Pmf, TwoHopSource};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Command {
    Region,
    Frontier,
    Simulate,
    Validate,
}

/// Exponent regions and finite-blocklength simulation for two-hop
/// hypothesis testing under expected-rate constraints.
#[derive(Debug, Parser)]
#[command(name = "twohop", version, about)]
struct Args {
    /// Source: a TOML file path, or the built-in `dsbs-example`.
    #[arg(long)]
    source: String,
    #[arg(long, value_enum)]
    command: Command,
    /// Transmitter-link rate budget (bits/symbol).
    #[arg(long, default_value_t = 0.5)]
    r1: f64,
    /// Relay-link rate budget (bits/symbol).
    #[arg(long, default_value_t = 0.5)]
    r2: f64,
    /// Relay type-I error budget.
    #[arg(long, default_value_t = 0.05)]
    eps1: f64,
    /// Receiver type-I error budget.
    #[arg(long, default_value_t = 0.05)]
    eps2: f64,
    /// Sweep grid `start:step:end`: rate values for `region`, theta1
    /// values for `frontier`.
    #[arg(long)]
    grid: Option<String>,
    /// Frontier variant.
    #[arg(long, default_value = "full")]
    variant: String,
    /// Simulation blocklength.
    #[arg(long, default_value_t = 200)]
    n: usize,
    /// Typicality slack; defaults to n^(-1/3).
    #[arg(long)]
    mu: Option<f64>,
    /// Simulation trials per hypothesis.
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    /// Master seed for all randomized stages.
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
struct SourceConfig {
    p_x: Vec<f64>,
    p_y_given_x: Vec<Vec<f64>>,
    p_z_given_y: Vec<Vec<f64>>,
}

fn load_source(spec: &str) -> Result<TwoHopSource> {
    if spec == "dsbs-example" {
        return Ok(TwoHopSource::dsbs_example());
    }
    let text = std::fs::read_to_string(spec).with_context(|| format!("reading source file {spec}"))?;
    let cfg: SourceConfig =
        toml::from_str(&text).with_context(|| format!("parsing source file {spec}"))?;
    let p_x = Pmf::new(cfg.p_x).context("field p_x")?;
    let ch_yx = ConditionalPmf::from_table(&cfg.p_y_given_x).context("field p_y_given_x")?;
    let ch_zy = ConditionalPmf::from_table(&cfg.p_z_given_y).context("field p_z_given_y")?;
    compose_two_hop(p_x, ch_yx, ch_zy).context("composing source")
}

/// Inclusive `start:step:end` grid; empty when start > end.
fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [start, step, end] = parts.as_slice() else {
        bail!("grid must be start:step:end, got {spec}");
    };
    let (start, step, end): (f64, f64, f64) =
        (start.parse()?, step.parse()?, end.parse()?);
    if !(step > 0.0) {
        bail!("grid step must be positive, got {step}");
    }
    let mut out = Vec::new();
    let mut i = 0u64;
    loop {
        let v = start + i as f64 * step;
        if v > end + 1e-12 {
            break;
        }
        out.push(v);
        i += 1;
    }
    Ok(out)
}

/// 15 significant digits, the precision contract for all CSV output.
fn sig(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    format!("{v:.14e}")
}

fn emit(out: &Option<PathBuf>, content: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, content)
            .with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn cmd_region(args: &Args, src: &TwoHopSource) -> Result<String> {
    if args.eps1 != args.eps2 {
        bail!("region sweeps the equal-budget corner; for eps1 != eps2 use --command frontier");
    }
    let eps = args.eps1;
    let grid = match &args.grid {
        Some(g) => parse_grid(g)?,
        None => parse_grid("0.1:0.1:1.0").unwrap(),
    };
    let cfg = OptimizerConfig::default();
    let mut csv = String::from("r,theta1_fix,theta1_eps,theta2_fix,theta2_eps\n");
    for &r in &grid {
        let rb = RateBudget::new(r, r)?;
        let t1f = theta1_fix(src, r, &cfg)?;
        let t2f = theta2_fix(src, rb, &cfg)?;
        let (corner, _) = region_equal_eps(src, rb, eps, &cfg)?;
        writeln!(
            csv,
            "{},{},{},{},{}",
            sig(r),
            sig(t1f),
            sig(corner.theta1),
            sig(t2f),
            sig(corner.theta2)
        )
        .unwrap();
    }
    Ok(csv)
}

fn run_frontier(
    src: &TwoHopSource,
    r: RateBudget,
    eps: EpsilonPair,
    grid: &[f64],
    variant: FrontierVariant,
    cfg: &OptimizerConfig,
) -> Result<Frontier> {
    let f = if eps.eps2 > eps.eps1 {
        frontier_eps2_greater(src, r, eps, grid, variant, cfg)?
    } else {
        frontier_eps1_greater(src, r, eps, grid, variant, cfg)?
    };
    Ok(f)
}

fn cmd_frontier(args: &Args, src: &TwoHopSource) -> Result<String> {
    if args.eps1 == args.eps2 {
        bail!("frontier needs eps1 != eps2; the equal-budget region is a rectangle, use --command region");
    }
    let eps = EpsilonPair::new(args.eps1, args.eps2)?;
    let r = RateBudget::new(args.r1, args.r2)?;
    let variant: FrontierVariant = args.variant.parse()?;
    let grid = match &args.grid {
        Some(g) => parse_grid(g)?,
        None => parse_grid("0.0:0.01:0.25").unwrap(),
    };
    let cfg = OptimizerConfig::default();
    let frontier = run_frontier(src, r, eps, &grid, variant, &cfg)?;
    let mut csv = String::from("theta1,theta2,rate_used_1,rate_used_2,variant,status\n");
    for p in &frontier.points {
        writeln!(
            csv,
            "{},{},{},{},{},ok",
            sig(p.theta1),
            sig(p.theta2),
            sig(p.solution.rates_used.r1),
            sig(p.solution.rates_used.r2),
            frontier.variant
        )
        .unwrap();
    }
    for &t1 in &frontier.infeasible_theta1 {
        writeln!(csv, "{},nan,nan,nan,{},infeasible", sig(t1), frontier.variant).unwrap();
    }
    // Reference corner reachable without the expected-rate relaxation.
    let t1f = theta1_fix(src, r.r1, &cfg)?;
    let t2f = theta2_fix(src, r, &cfg)?;
    writeln!(csv, "{},{},{},{},fixed_corner,ok", sig(t1f), sig(t2f), sig(r.r1), sig(r.r2)).unwrap();
    Ok(csv)
}

#[derive(Debug, Serialize)]
struct SimulateReport {
    source: String,
    regime: String,
    n: usize,
    mu: f64,
    eps1: f64,
    eps2: f64,
    r1: f64,
    r2: f64,
    trials: u64,
    seed: u64,
    /// Asymptotic exponents of the channels being simulated.
    theory_theta1: f64,
    theory_theta2: f64,
    stats: SimulationStats,
}

fn cmd_simulate(args: &Args, src: &TwoHopSource) -> Result<String> {
    let eps = EpsilonPair::new(args.eps1, args.eps2)?;
    let r = RateBudget::new(args.r1, args.r2)?;
    let cfg = OptimizerConfig::default();
    let (regime, solution) = if eps.eps1 == eps.eps2 {
        let (_, sol) = region_equal_eps(src, r, eps.eps1, &cfg)?;
        (Regime::Equal, sol)
    } else {
        // Simulate the frontier endpoint (largest feasible theta1).
        let regime = if eps.eps2 > eps.eps1 { Regime::Eps2Greater } else { Regime::Eps1Greater };
        let frontier = run_frontier(src, r, eps, &[0.0], FrontierVariant::Full, &cfg)?;
        let point = frontier
            .points
            .last()
            .ok_or_else(|| anyhow!("frontier returned no feasible points"))?;
        (regime, point.solution.clone())
    };
    let n = args.n;
    let mu = args.mu.unwrap_or_else(|| SchemeParams::default_mu(n));
    let theory = solution.achieved;
    let params = SchemeParams {
        source: src.clone(),
        regime,
        n,
        mu,
        eps,
        channels: solution,
        partition_seed: args.seed,
        codebook_seed: args.seed.wrapping_add(1),
        noise_seed: args.seed.wrapping_add(2),
    };
    let s_prob = (eps.eps1.min(eps.eps2) - mu).max(0.0);
    let d2_prob = (eps.eps2 - eps.eps1).abs();
    let rule = PartitionRule::new(s_prob, d2_prob, args.seed.wrapping_add(3))
        .map_err(|e| anyhow!(e.to_string()))?;
    let stats = estimate_errors(&params, &rule, args.trials, args.seed)?;
    let report = SimulateReport {
        source: args.source.clone(),
        regime: regime.to_string(),
        n,
        mu,
        eps1: eps.eps1,
        eps2: eps.eps2,
        r1: r.r1,
        r2: r.r2,
        trials: args.trials,
        seed: args.seed,
        theory_theta1: theory.theta1,
        theory_theta2: theory.theta2,
        stats,
    };
    Ok(serde_json::to_string_pretty(&report)? + "\n")
}

#[derive(Debug, Serialize)]
struct Check {
    name: String,
    pass: bool,
    delta: f64,
    detail: String,
}

#[derive(Debug, Serialize)]
struct ValidateReport {
    source: String,
    all_pass: bool,
    checks: Vec<Check>,
}

fn cmd_validate(args: &Args, src: &TwoHopSource) -> Result<(String, bool)> {
    let cfg = OptimizerConfig::default();
    let mut checks: Vec<Check> = Vec::new();
    let mut push = |name: &str, pass: bool, delta: f64, detail: String| {
        checks.push(Check { name: name.into(), pass, delta, detail });
    };

    // Optimizer vs exhaustive-scan oracle on both links.
    for (side, label) in [(Side::TxToRelay, "tx"), (Side::RelayToRx, "relay")] {
        for cap in [0.1, 0.3, 0.5] {
            let opt = max_forwarded_info(src, side, cap, &cfg)?.1;
            let oracle = brute_force_oracle(src, side, cap, 0.01)?;
            let delta = (opt - oracle).abs();
            push(
                &format!("oracle_equivalence_{label}_cap_{cap}"),
                delta <= 0.02,
                delta,
                format!("optimizer {opt:.6}, oracle {oracle:.6}"),
            );
        }
    }

    // Monotonicity of the fixed-rate exponent in the rate cap.
    let caps = [0.1, 0.2, 0.3, 0.4, 0.5, 0.7];
    let vals: Vec<f64> = caps
        .iter()
        .map(|&c| theta1_fix(src, c, &cfg))
        .collect::<twohop::regions::Result<_>>()?;
    let worst = vals.windows(2).map(|w| w[0] - w[1]).fold(f64::NEG_INFINITY, f64::max);
    push(
        "theta1_fix_monotone",
        worst <= 1e-9,
        worst.max(0.0),
        format!("values {vals:?}"),
    );

    // Data-processing: forwarded information never exceeds I(X;Y).
    let top = theta1_fix(src, 5.0, &cfg)?;
    push(
        "theta1_fix_capped_by_ixy",
        top <= src.i_xy() + 1e-9,
        (top - src.i_xy()).max(0.0),
        format!("theta1_fix(5.0) {top:.6}, I(X;Y) {:.6}", src.i_xy()),
    );

    // The expected-rate corner dominates the fixed-rate corner.
    let eps = if args.eps1 == args.eps2 { args.eps1 } else { args.eps1.min(args.eps2) };
    let r = RateBudget::new(args.r1, args.r2)?;
    let (corner, _) = region_equal_eps(src, r, eps, &cfg)?;
    let t1f = theta1_fix(src, r.r1, &cfg)?;
    let t2f = theta2_fix(src, r, &cfg)?;
    let margin = (t1f - corner.theta1).max(t2f - corner.theta2);
    push(
        "expected_rate_dominates_fixed",
        margin <= 1e-9,
        margin.max(0.0),
        format!(
            "fixed ({t1f:.6}, {t2f:.6}), expected ({:.6}, {:.6})",
            corner.theta1, corner.theta2
        ),
    );

    let all_pass = checks.iter().all(|c| c.pass);
    let report = ValidateReport { source: args.source.clone(), all_pass, checks };
    Ok((serde_json::to_string_pretty(&report)? + "\n", all_pass))
}

fn run(args: &Args) -> Result<ExitCode> {
    let src = load_source(&args.source)?;
    let (content, ok) = match args.command {
        Command::Region => (cmd_region(args, &src)?, true),
        Command::Frontier => (cmd_frontier(args, &src)?, true),
        Command::Simulate => (cmd_simulate(args, &src)?, true),
        Command::Validate => cmd_validate(args, &src)?,
    };
    emit(&args.out, &content)?;
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn main() -> ExitCode {
    env_logger::init();
    let args = Args::parse();
    match run(&args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
