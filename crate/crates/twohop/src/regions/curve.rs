//! Cached rate-information tradeoff curve for one link.
//!
//! Frontier tracing evaluates `cap -> max I(U;B) s.t. I(U;A) <= cap`
//! thousands of times while searching over rate splits. The curve
//! precomputes the (concave, non-decreasing) tradeoff on a uniform cap
//! grid and answers intermediate queries by linear interpolation; final
//! frontier points are always re-solved exactly, so interpolation error
//! only steers the search.

use rayon::prelude::*;

use super::optimizer::{optimize_link, LinkProblem};

#[derive(Debug, Clone)]
pub(crate) struct RateInfoCurve {
    caps: Vec<f64>,
    values: Vec<f64>,
}

impl RateInfoCurve {
    /// Tabulate the curve on `n_points + 1` caps spanning `[0, cap_max]`.
    /// `cap_max` should be the input entropy: the curve is flat beyond it.
    pub fn build(
        problem: &LinkProblem,
        nu: usize,
        cap_max: f64,
        n_points: usize,
        grid_resolution: f64,
        refine_iterations: usize,
    ) -> Self {
        let caps: Vec<f64> = (0..=n_points)
            .map(|i| cap_max * i as f64 / n_points as f64)
            .collect();
        let mut values: Vec<f64> = caps
            .par_iter()
            .map(|&cap| optimize_link(problem, nu, cap, grid_resolution, refine_iterations).1)
            .collect();
        // The exact curve is non-decreasing; flatten out optimizer noise so
        // interpolation and inversion stay consistent.
        for i in 1..values.len() {
            if values[i] < values[i - 1] {
                values[i] = values[i - 1];
            }
        }
        Self { caps, values }
    }

    pub fn cap_max(&self) -> f64 {
        *self.caps.last().unwrap()
    }

    pub fn max_value(&self) -> f64 {
        *self.values.last().unwrap()
    }

    /// Interpolated value at an arbitrary cap (clamped to the tabulated range).
    pub fn value_at(&self, cap: f64) -> f64 {
        if cap <= 0.0 {
            return 0.0;
        }
        if cap >= self.cap_max() {
            return self.max_value();
        }
        let i = match self.caps.partition_point(|&c| c <= cap) {
            0 => 1,
            i => i,
        };
        let (c0, c1) = (self.caps[i - 1], self.caps[i]);
        let (v0, v1) = (self.values[i - 1], self.values[i]);
        v0 + (v1 - v0) * (cap - c0) / (c1 - c0)
    }

    /// Smallest cap achieving at least `value`, or `None` if the link
    /// saturates below it.
    pub fn inverse(&self, value: f64) -> Option<f64> {
        if value <= 0.0 {
            return Some(0.0);
        }
        if value > self.max_value() {
            return None;
        }
        let i = self.values.partition_point(|&v| v < value);
        if i == 0 {
            return Some(0.0);
        }
        let (v0, v1) = (self.values[i - 1], self.values[i]);
        let (c0, c1) = (self.caps[i - 1], self.caps[i]);
        if v1 <= v0 {
            return Some(c1);
        }
        Some(c0 + (c1 - c0) * (value - v0) / (v1 - v0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probability::TwoHopSource;

    fn dsbs_tx_curve() -> RateInfoCurve {
        let src = TwoHopSource::dsbs_example();
        let problem = LinkProblem::new(src.p_x(), src.p_xy());
        let h_x = crate::probability::entropy(src.p_x());
        RateInfoCurve::build(&problem, 3, h_x, 40, 0.05, 200)
    }

    #[test]
    fn curve_is_monotone_and_saturates() {
        let curve = dsbs_tx_curve();
        let src = TwoHopSource::dsbs_example();
        let mut prev = -1.0;
        for i in 0..=50 {
            let v = curve.value_at(curve.cap_max() * i as f64 / 50.0);
            assert!(v >= prev - 1e-12);
            prev = v;
        }
        assert!((curve.max_value() - src.i_xy()).abs() < 1e-4);
        assert_eq!(curve.value_at(0.0), 0.0);
        assert!((curve.value_at(10.0) - curve.max_value()).abs() < 1e-15);
    }

    #[test]
    fn inverse_round_trips() {
        let curve = dsbs_tx_curve();
        for target in [0.05, 0.1, 0.15] {
            let cap = curve.inverse(target).unwrap();
            assert!((curve.value_at(cap) - target).abs() < 1e-9);
        }
        assert_eq!(curve.inverse(0.0), Some(0.0));
        assert!(curve.inverse(curve.max_value() + 0.01).is_none());
    }
}
