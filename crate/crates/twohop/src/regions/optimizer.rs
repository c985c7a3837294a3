//! Single-link auxiliary-channel optimizer.
//!
//! Solves `max I(U;B) over P(u|a) subject to I(U;A) <= cap` for a fixed
//! joint `P(a,b)`, the building block behind every exponent computation.
//! Strategy: exhaustive coarse grid over the channel rows (each row a
//! point on the probability simplex), then Nelder-Mead refinement in a
//! softmax parameterization from the best grid cells. Infeasible
//! candidates are repaired exactly by mixing toward a constant channel
//! until the rate constraint binds; both mutual informations are convex
//! in the channel, so repair never increases the objective and grid
//! cells that are already dominated can skip it.

use crate::probability::Pmf;

/// Constraint slack accepted when reporting feasibility.
pub const FEAS_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct LinkProblem {
    /// Input marginal `P(a)`.
    pub p_a: Vec<f64>,
    /// Joint `P(a,b)` row-major, `na x nb`.
    pub joint_ab: Vec<f64>,
    pub na: usize,
    pub nb: usize,
    h_b: f64,
}

fn neg_sum_plogp(v: &[f64]) -> f64 {
    -v.iter().filter(|&&p| p > 0.0).map(|&p| p * p.log2()).sum::<f64>()
}

impl LinkProblem {
    pub fn new(p_a: &Pmf, joint_ab: &crate::probability::JointPmf) -> Self {
        assert_eq!(joint_ab.dims().len(), 2);
        let na = joint_ab.dims()[0];
        let nb = joint_ab.dims()[1];
        assert_eq!(p_a.alphabet_size(), na);
        let p_b: Vec<f64> = (0..nb)
            .map(|b| (0..na).map(|a| joint_ab.prob(&[a, b])).sum())
            .collect();
        Self {
            p_a: p_a.probs().to_vec(),
            joint_ab: joint_ab.probs().to_vec(),
            na,
            nb,
            h_b: neg_sum_plogp(&p_b),
        }
    }

    /// `(I(U;A), I(U;B))` for channel rows flattened as `na x nu`.
    pub fn eval(&self, rows: &[f64], nu: usize) -> (f64, f64) {
        let mut p_u = vec![0.0; nu];
        let mut h_u_given_a = 0.0;
        for a in 0..self.na {
            let row = &rows[a * nu..(a + 1) * nu];
            h_u_given_a += self.p_a[a] * neg_sum_plogp(row);
            for u in 0..nu {
                p_u[u] += self.p_a[a] * row[u];
            }
        }
        let h_u = neg_sum_plogp(&p_u);
        let i_ua = (h_u - h_u_given_a).max(0.0);

        let mut p_ub = vec![0.0; nu * self.nb];
        for a in 0..self.na {
            let row = &rows[a * nu..(a + 1) * nu];
            for b in 0..self.nb {
                let j = self.joint_ab[a * self.nb + b];
                if j == 0.0 {
                    continue;
                }
                for u in 0..nu {
                    p_ub[u * self.nb + b] += row[u] * j;
                }
            }
        }
        let i_ub = (h_u + self.h_b - neg_sum_plogp(&p_ub)).max(0.0);
        (i_ua, i_ub)
    }

    /// Project an infeasible channel onto the rate cap by mixing toward the
    /// constant channel whose rows equal the current output marginal.
    /// Returns `(rows, i_ua, i_ub)` of the (possibly) repaired channel.
    pub fn repair(&self, rows: &[f64], nu: usize, cap: f64) -> (Vec<f64>, f64, f64) {
        let (i_ua, i_ub) = self.eval(rows, nu);
        if i_ua <= cap + FEAS_TOL {
            return (rows.to_vec(), i_ua, i_ub);
        }
        let mut p_u = vec![0.0; nu];
        for a in 0..self.na {
            for u in 0..nu {
                p_u[u] += self.p_a[a] * rows[a * nu + u];
            }
        }
        let mix = |t: f64| -> Vec<f64> {
            let mut out = vec![0.0; rows.len()];
            for a in 0..self.na {
                for u in 0..nu {
                    out[a * nu + u] = (1.0 - t) * rows[a * nu + u] + t * p_u[u];
                }
            }
            out
        };
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            let (i, _) = self.eval(&mix(mid), nu);
            if i > cap {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let repaired = mix(hi);
        let (i_ua, i_ub) = self.eval(&repaired, nu);
        (repaired, i_ua, i_ub)
    }
}

/// All compositions of `steps` equal increments into `k` simplex coordinates.
pub fn simplex_grid(k: usize, steps: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    let mut current = vec![0usize; k];
    fn rec(k: usize, left: usize, pos: usize, current: &mut Vec<usize>, steps: usize, out: &mut Vec<Vec<f64>>) {
        if pos == k - 1 {
            current[pos] = left;
            out.push(current.iter().map(|&c| c as f64 / steps as f64).collect());
            return;
        }
        for c in 0..=left {
            current[pos] = c;
            rec(k, left - c, pos + 1, current, steps, out);
        }
    }
    rec(k, steps, 0, &mut current, steps, &mut out);
    out
}

fn softmax_rows(x: &[f64], na: usize, nu: usize) -> Vec<f64> {
    let mut rows = vec![0.0; na * nu];
    for a in 0..na {
        let logits = &x[a * nu..(a + 1) * nu];
        let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for u in 0..nu {
            let e = (logits[u] - m).exp();
            rows[a * nu + u] = e;
            sum += e;
        }
        for u in 0..nu {
            rows[a * nu + u] /= sum;
        }
    }
    rows
}

/// Plain Nelder-Mead minimization with fixed coefficients.
fn nelder_mead(f: &mut dyn FnMut(&[f64]) -> f64, x0: &[f64], step: f64, iters: usize) -> (Vec<f64>, f64) {
    let dim = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    simplex.push((x0.to_vec(), f(x0)));
    for i in 0..dim {
        let mut x = x0.to_vec();
        x[i] += step;
        let fx = f(&x);
        simplex.push((x, fx));
    }
    for _ in 0..iters {
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
        let worst = simplex[dim].clone();
        let mut centroid = vec![0.0; dim];
        for (x, _) in &simplex[..dim] {
            for i in 0..dim {
                centroid[i] += x[i] / dim as f64;
            }
        }
        let lerp = |t: f64| -> Vec<f64> {
            (0..dim).map(|i| centroid[i] + t * (worst.0[i] - centroid[i])).collect()
        };
        let reflected = lerp(-1.0);
        let fr = f(&reflected);
        if fr < simplex[0].1 {
            let expanded = lerp(-2.0);
            let fe = f(&expanded);
            simplex[dim] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr < simplex[dim - 1].1 {
            simplex[dim] = (reflected, fr);
        } else {
            let contracted = lerp(0.5);
            let fc = f(&contracted);
            if fc < worst.1 {
                simplex[dim] = (contracted, fc);
            } else {
                let best = simplex[0].0.clone();
                for entry in simplex.iter_mut().skip(1) {
                    let x: Vec<f64> = entry.0.iter().zip(&best).map(|(xi, bi)| bi + 0.5 * (xi - bi)).collect();
                    entry.1 = f(&x);
                    entry.0 = x;
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
    simplex.swap_remove(0)
}

/// Best channel found for `max I(U;B) s.t. I(U;A) <= cap`.
///
/// Returns `(rows, value)` with `rows` feasible (`I(U;A) <= cap + FEAS_TOL`).
pub fn optimize_link(
    problem: &LinkProblem,
    nu: usize,
    cap: f64,
    grid_resolution: f64,
    refine_iterations: usize,
) -> (Vec<f64>, f64) {
    let na = problem.na;
    if cap <= 0.0 {
        // Zero rate: only constant channels qualify.
        let row = vec![1.0 / nu as f64; nu];
        let mut rows = Vec::with_capacity(na * nu);
        for _ in 0..na {
            rows.extend_from_slice(&row);
        }
        return (rows, 0.0);
    }

    let mut steps = (1.0 / grid_resolution).round().max(1.0) as usize;
    // Keep the exhaustive stage bounded; refinement recovers the resolution.
    loop {
        let per_row = simplex_grid_len(nu, steps);
        if per_row.pow(na as u32) <= 2_000_000 || steps <= 4 {
            break;
        }
        steps = steps / 2;
    }
    let points = simplex_grid(nu, steps);
    let per_row = points.len();

    // Exhaustive stage: odometer over row choices; track the top candidates.
    let mut top: Vec<(f64, Vec<f64>)> = Vec::new(); // (value, rows), descending
    let keep = 3;
    let mut combo = vec![0usize; na];
    let mut rows = vec![0.0; na * nu];
    loop {
        for a in 0..na {
            rows[a * nu..(a + 1) * nu].copy_from_slice(&points[combo[a]]);
        }
        let (i_ua, i_ub) = problem.eval(&rows, nu);
        let value = if i_ua <= cap + FEAS_TOL {
            Some(i_ub)
        } else if top.is_empty() || i_ub > top.last().map_or(f64::NEG_INFINITY, |t| t.0) {
            // Repair only when the unrepaired objective could still compete
            // (repair cannot increase it, by convexity).
            let (_, _, v) = problem.repair(&rows, nu, cap);
            Some(v)
        } else {
            None
        };
        if let Some(v) = value {
            if top.len() < keep || v > top.last().unwrap().0 {
                top.push((v, rows.clone()));
                top.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
                top.truncate(keep);
            }
        }
        // Advance odometer.
        let mut carry = true;
        for slot in combo.iter_mut().rev() {
            if carry {
                *slot += 1;
                if *slot == per_row {
                    *slot = 0;
                } else {
                    carry = false;
                }
            }
        }
        if carry {
            break;
        }
    }

    let mut best_rows = top[0].1.clone();
    let mut best_value = top[0].0;

    // Refinement from each retained start, in a softmax parameterization.
    for (_, start_rows) in &top {
        let x0: Vec<f64> = start_rows.iter().map(|&p| (p + 1e-9).ln()).collect();
        let mut objective = |x: &[f64]| -> f64 {
            let rows = softmax_rows(x, na, nu);
            let (_, _, v) = problem.repair(&rows, nu, cap);
            -v
        };
        let (x_best, f_best) = nelder_mead(&mut objective, &x0, 0.5, refine_iterations);
        if -f_best > best_value {
            best_value = -f_best;
            best_rows = softmax_rows(&x_best, na, nu);
        }
    }

    let (rows, _, value) = problem.repair(&best_rows, nu, cap);
    (rows, value)
}

fn simplex_grid_len(k: usize, steps: usize) -> usize {
    // C(steps + k - 1, k - 1)
    let mut num = 1usize;
    let mut den = 1usize;
    for i in 0..k - 1 {
        num *= steps + 1 + i;
        den *= i + 1;
    }
    num / den
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probability::{JointPmf, Pmf};

    #[test]
    fn simplex_grid_counts() {
        assert_eq!(simplex_grid(2, 10).len(), 11);
        assert_eq!(simplex_grid(3, 4).len(), simplex_grid_len(3, 4));
        for p in simplex_grid(3, 4) {
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_cap_gives_constant_channel() {
        let p_a = Pmf::bernoulli(0.4).unwrap();
        let joint = p_a.join(&crate::probability::ConditionalPmf::identity(2)).unwrap();
        let problem = LinkProblem::new(&p_a, &joint);
        let (rows, value) = optimize_link(&problem, 3, 0.0, 0.05, 100);
        assert_eq!(value, 0.0);
        assert_eq!(&rows[..3], &rows[3..]);
    }

    #[test]
    fn saturated_cap_recovers_full_information() {
        // U = X is feasible once cap >= H(X); the value must hit I(X;B).
        let src = crate::probability::TwoHopSource::dsbs_example();
        let problem = LinkProblem::new(src.p_x(), src.p_xy());
        let (_, value) = optimize_link(&problem, 3, 1.0, 0.05, 200);
        assert!((value - src.i_xy()).abs() < 1e-6, "value {value}");
    }

    #[test]
    fn repair_enforces_cap() {
        let src = crate::probability::TwoHopSource::dsbs_example();
        let problem = LinkProblem::new(src.p_x(), src.p_xy());
        let identity = vec![1.0, 0.0, 0.0, 1.0];
        let (rows, i_ua, _) = problem.repair(&identity, 2, 0.3);
        assert!(i_ua <= 0.3 + FEAS_TOL);
        let (check, _) = problem.eval(&rows, 2);
        assert!((check - i_ua).abs() < 1e-12);
    }

    #[test]
    fn matches_direct_two_point_scan() {
        // Independent check at coarse scale: binary U, scan q0, q1 directly.
        let src = crate::probability::TwoHopSource::dsbs_example();
        let problem = LinkProblem::new(src.p_x(), src.p_xy());
        let cap = 0.5;
        let mut best = 0.0f64;
        let steps = 400;
        for i in 0..=steps {
            for j in 0..=steps {
                let rows = vec![
                    1.0 - i as f64 / steps as f64,
                    i as f64 / steps as f64,
                    1.0 - j as f64 / steps as f64,
                    j as f64 / steps as f64,
                ];
                let (i_ua, i_ub) = problem.eval(&rows, 2);
                if i_ua <= cap {
                    best = best.max(i_ub);
                }
            }
        }
        let (_, value) = optimize_link(&problem, 3, cap, 0.05, 400);
        assert!(value >= best - 1e-4, "solver {value} vs scan {best}");
    }

    #[test]
    fn joint_pmf_roundtrip_eval() {
        let p_a = Pmf::new(vec![0.3, 0.7]).unwrap();
        let table = JointPmf::from_table2(&[vec![0.1, 0.2], vec![0.3, 0.4]]).unwrap();
        let problem = LinkProblem::new(&p_a, &table);
        // Identity channel: I(U;A) = H(A), I(U;B) = I(A;B).
        let (i_ua, i_ub) = problem.eval(&[1.0, 0.0, 0.0, 1.0], 2);
        assert!((i_ua - crate::probability::entropy(&p_a)).abs() < 1e-12);
        assert!((i_ub - crate::probability::mutual_information(&table)).abs() < 1e-12);
    }
}
