//! Property-based checks of the information-measure layer.

use proptest::prelude::*;
use twohop::probability::{
    compose_two_hop, empirical_type, entropy, is_typical, kl_divergence, mutual_information,
    ConditionalPmf, Pmf,
};

/// Strategy: a pmf over `k` symbols with strictly positive mass.
fn pmf(k: usize) -> impl Strategy<Value = Pmf> {
    prop::collection::vec(1e-3..1.0f64, k).prop_map(|w| {
        let total: f64 = w.iter().sum();
        Pmf::new(w.iter().map(|v| v / total).collect()).unwrap()
    })
}

fn channel(kin: usize, kout: usize) -> impl Strategy<Value = ConditionalPmf> {
    prop::collection::vec(pmf(kout), kin)
        .prop_map(|rows| ConditionalPmf::from_rows(rows).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn entropy_within_bounds(p in pmf(4)) {
        let h = entropy(&p);
        prop_assert!(h >= -1e-12);
        prop_assert!(h <= (4f64).log2() + 1e-12);
    }

    #[test]
    fn kl_nonnegative_and_zero_on_self(p in pmf(3), q in pmf(3)) {
        prop_assert!(kl_divergence(&p, &q).unwrap() >= -1e-12);
        prop_assert!(kl_divergence(&p, &p).unwrap().abs() < 1e-12);
    }

    #[test]
    fn mutual_information_identity(p in pmf(3), ch in channel(3, 3)) {
        // I(A;B) = H(A) + H(B) - H(A,B).
        let joint = p.join(&ch).unwrap();
        let i = mutual_information(&joint);
        let ha = entropy(&joint.marginal(0));
        let hb = entropy(&joint.marginal(1));
        let hab = -joint
            .probs()
            .iter()
            .filter(|&&v| v > 0.0)
            .map(|&v| v * v.log2())
            .sum::<f64>();
        prop_assert!(i >= -1e-12);
        prop_assert!((i - (ha + hb - hab)).abs() < 1e-9);
    }

    #[test]
    fn data_processing_inequality(p in pmf(2), ch1 in channel(2, 3), ch2 in channel(3, 2)) {
        // X -> Y -> Z: I(X;Z) <= min(I(X;Y), I(Y;Z)).
        let src = compose_two_hop(p.clone(), ch1.clone(), ch2.clone()).unwrap();
        let end_to_end = ch1.compose(&ch2).unwrap();
        let ixz = mutual_information(&p.join(&end_to_end).unwrap());
        prop_assert!(ixz <= src.i_xy() + 1e-9);
        prop_assert!(ixz <= src.i_yz() + 1e-9);
    }

    #[test]
    fn typicality_monotone_in_slack(seq in prop::collection::vec(0usize..3, 1..80), p in pmf(3)) {
        // A sequence typical at slack mu stays typical at any larger slack.
        let mut slacks = [0.01, 0.05, 0.1, 0.3, 1.0];
        slacks.sort_by(f64::total_cmp);
        let verdicts: Vec<bool> =
            slacks.iter().map(|&mu| is_typical(&seq, &p, mu).unwrap()).collect();
        for w in verdicts.windows(2) {
            prop_assert!(!w[0] || w[1]);
        }
        // The empirical type itself is always typical at slack 1.
        let t = empirical_type(&seq, 3).unwrap();
        prop_assert!(is_typical(&seq, &t, 1e-9).unwrap() || t.probs().iter().any(|&v| v == 0.0));
    }
}
