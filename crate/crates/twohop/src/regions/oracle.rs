//! Brute-force verification oracle for the single-link optimizer.
//!
//! Deliberately self-contained: the mutual informations are computed by
//! direct loops here rather than through the optimizer's evaluator, so
//! the oracle cross-checks the solver instead of sharing its bugs. The
//! search is an exhaustive scan over binary-output channels at the
//! requested resolution, plus a coarse scan over ternary-output channels
//! (binary inputs only) to cover cases where a third auxiliary symbol
//! strictly helps.

use rayon::prelude::*;

use super::{link_marginal_and_joint, RegionError, Side};
use crate::probability::TwoHopSource;

fn h(probs: &[f64]) -> f64 {
    -probs.iter().filter(|&&p| p > 0.0).map(|&p| p * p.log2()).sum::<f64>()
}

/// `(I(U;A), I(U;B))` computed from scratch for row-major `rows: na x nu`.
fn mis(p_a: &[f64], joint_ab: &[f64], nb: usize, rows: &[f64], nu: usize) -> (f64, f64) {
    let na = p_a.len();
    let mut p_u = vec![0.0; nu];
    let mut p_ub = vec![0.0; nu * nb];
    let mut h_u_given_a = 0.0;
    for a in 0..na {
        let row = &rows[a * nu..(a + 1) * nu];
        h_u_given_a += p_a[a] * h(row);
        for u in 0..nu {
            p_u[u] += p_a[a] * row[u];
            for b in 0..nb {
                p_ub[u * nb + b] += row[u] * joint_ab[a * nb + b];
            }
        }
    }
    let mut p_b = vec![0.0; nb];
    for a in 0..na {
        for b in 0..nb {
            p_b[b] += joint_ab[a * nb + b];
        }
    }
    let h_u = h(&p_u);
    ((h_u - h_u_given_a).max(0.0), (h_u + h(&p_b) - h(&p_ub)).max(0.0))
}

/// Exhaustive best value over binary-output channels, for several caps at
/// once (one scan, shared work).
fn scan_binary_u(p_a: &[f64], joint_ab: &[f64], nb: usize, caps: &[f64], steps: usize) -> Vec<f64> {
    let na = p_a.len();
    let n_rows = steps + 1;
    let total: usize = n_rows.pow(na as u32);
    (0..total)
        .into_par_iter()
        .fold(
            || vec![0.0f64; caps.len()],
            |mut best, combo| {
                let mut rows = vec![0.0; na * 2];
                let mut rest = combo;
                for a in 0..na {
                    let q = (rest % n_rows) as f64 / steps as f64;
                    rest /= n_rows;
                    rows[a * 2] = 1.0 - q;
                    rows[a * 2 + 1] = q;
                }
                let (i_ua, i_ub) = mis(p_a, joint_ab, nb, &rows, 2);
                for (slot, &cap) in best.iter_mut().zip(caps) {
                    if i_ua <= cap && i_ub > *slot {
                        *slot = i_ub;
                    }
                }
                best
            },
        )
        .reduce(
            || vec![0.0f64; caps.len()],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    if y > *x {
                        *x = y;
                    }
                }
                a
            },
        )
}

/// Coarse exhaustive scan over ternary-output channels (binary input only).
fn scan_ternary_u(p_a: &[f64], joint_ab: &[f64], nb: usize, caps: &[f64], steps: usize) -> Vec<f64> {
    let points = super::optimizer::simplex_grid(3, steps);
    (0..points.len())
        .into_par_iter()
        .fold(
            || vec![0.0f64; caps.len()],
            |mut best, i| {
                let mut rows = vec![0.0; 6];
                rows[..3].copy_from_slice(&points[i]);
                for p in &points {
                    rows[3..].copy_from_slice(p);
                    let (i_ua, i_ub) = mis(p_a, joint_ab, nb, &rows, 3);
                    for (slot, &cap) in best.iter_mut().zip(caps) {
                        if i_ua <= cap && i_ub > *slot {
                            *slot = i_ub;
                        }
                    }
                }
                best
            },
        )
        .reduce(
            || vec![0.0f64; caps.len()],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    if y > *x {
                        *x = y;
                    }
                }
                a
            },
        )
}

/// Exhaustive-search reference value for [`super::max_forwarded_info`].
pub fn brute_force_oracle(
    src: &TwoHopSource,
    side: Side,
    rate_cap: f64,
    grid_resolution: f64,
) -> Result<f64, RegionError> {
    brute_force_oracle_sweep(src, side, &[rate_cap], grid_resolution).map(|v| v[0])
}

/// Multi-cap variant of [`brute_force_oracle`]: one exhaustive scan
/// evaluated against every cap simultaneously.
pub fn brute_force_oracle_sweep(
    src: &TwoHopSource,
    side: Side,
    rate_caps: &[f64],
    grid_resolution: f64,
) -> Result<Vec<f64>, RegionError> {
    let (p_a, joint_ab) = link_marginal_and_joint(src, side);
    let na = p_a.alphabet_size();
    if na > 4 {
        return Err(RegionError::UnsupportedAlphabet { size: na });
    }
    let nb = joint_ab.dims()[1];
    let steps = (1.0 / grid_resolution).round().max(1.0) as usize;
    let mut best = scan_binary_u(p_a.probs(), joint_ab.probs(), nb, rate_caps, steps);
    if na == 2 {
        // A third auxiliary symbol can help; cover it at coarse resolution.
        let ternary = scan_ternary_u(p_a.probs(), joint_ab.probs(), nb, rate_caps, steps.min(50));
        for (b, t) in best.iter_mut().zip(ternary) {
            if t > *b {
                *b = t;
            }
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_cap_is_zero() {
        let src = TwoHopSource::dsbs_example();
        let v = brute_force_oracle(&src, Side::TxToRelay, 0.0, 0.02).unwrap();
        assert!(v.abs() < 1e-12, "{v}");
    }

    #[test]
    fn saturated_cap_hits_full_information() {
        // U = X sits exactly on the grid, so the oracle reaches I(X;Y).
        let src = TwoHopSource::dsbs_example();
        let v = brute_force_oracle(&src, Side::TxToRelay, 1.0, 0.02).unwrap();
        assert!((v - src.i_xy()).abs() < 1e-12, "{v}");
    }

    #[test]
    fn fine_resolution_matches_reference_value() {
        let src = TwoHopSource::dsbs_example();
        let v = brute_force_oracle(&src, Side::TxToRelay, 0.5, 0.001).unwrap();
        assert!((v - 0.162282395565877).abs() < 2e-3, "{v}");
    }

    #[test]
    fn relay_side_saturates_at_i_yz() {
        let src = TwoHopSource::dsbs_example();
        let v = brute_force_oracle(&src, Side::RelayToRx, 1.0, 0.02).unwrap();
        assert!((v - src.i_yz()).abs() < 1e-12);
    }
}
