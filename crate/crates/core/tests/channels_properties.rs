mod common;

use common::{hermitian, positive, rng};
use ncmax::channels::MarkovChannel;
use ncmax::orlicz::lp_norm;
use ncmax::qps::Hermitian;
use proptest::prelude::*;

fn channel(seed: u64, d: usize, symmetric: bool) -> MarkovChannel {
    MarkovChannel::random_mixture(d, 3, symmetric, &mut rng(seed ^ 0xc4a)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn positive_unital_trace_preserving(seed in any::<u64>(), d in 1usize..7, sym in any::<bool>()) {
        let t = channel(seed, d, sym);
        let f = positive(d, &mut rng(seed));
        prop_assert!(t.apply(&f).unwrap().min_eigenvalue() >= -1e-10);
        prop_assert!((t.apply(&f).unwrap().trace() - f.trace()).abs() < 1e-10);
        let one = Hermitian::identity(d);
        prop_assert!(t.ergodic_mean(7, &one).unwrap().max_abs_diff(&one) < 1e-10);
        let m = t.ergodic_mean(7, &f).unwrap();
        prop_assert!((m.trace() - f.trace()).abs() < 1e-10);
        prop_assert!(m.min_eigenvalue() >= -1e-10);
    }

    #[test]
    fn fixed_point_projection_is_idempotent_and_fixed(seed in any::<u64>(), d in 1usize..6, sym in any::<bool>()) {
        let t = channel(seed, d, sym);
        let f = hermitian(d, &mut rng(seed));
        let p = t.fixed_point_projection(&f).unwrap();
        prop_assert!(t.fixed_point_projection(&p).unwrap().max_abs_diff(&p) < 1e-8);
        prop_assert!(t.apply(&p).unwrap().max_abs_diff(&p) < 1e-8);
        prop_assert!((p.trace() - f.trace()).abs() < 1e-8);
    }

    #[test]
    fn symmetric_powers_shrink_in_l2(seed in any::<u64>(), d in 1usize..7) {
        let t = channel(seed, d, true);
        let mut x = hermitian(d, &mut rng(seed));
        let mut prev = lp_norm(&x, 2.0).unwrap();
        for _ in 0..6 {
            x = t.apply(&x).unwrap();
            let now = lp_norm(&x, 2.0).unwrap();
            prop_assert!(now <= prev + 1e-10);
            prev = now;
        }
    }
}
