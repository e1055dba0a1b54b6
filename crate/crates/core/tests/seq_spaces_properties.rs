mod common;

use common::{positive, rng};
use ncmax::orlicz::lp_norm;
use ncmax::qps::{Hermitian, Interval};
use ncmax::seq_spaces::{majorant_of, sup_norm_diagonal, MajorantOptions, MajorantSolution, Method};
use proptest::prelude::*;
use rand::Rng;

fn barrier(fs: &[Hermitian<f64>], p: f64) -> MajorantSolution {
    majorant_of(fs, p, MajorantOptions { method: Method::Barrier, ..Default::default() }).unwrap()
}

fn family(seed: u64, d: usize, n: usize) -> Vec<Hermitian<f64>> {
    let mut g = rng(seed);
    (0..n).map(|_| positive(d, &mut g)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn feasible_and_above_every_entry(seed in any::<u64>(), d in 2usize..5, n in 1usize..4, p in prop::sample::select(vec![1.0, 2.0, 3.0])) {
        let fs = family(seed, d, n);
        let sol = barrier(&fs, p);
        prop_assert!(sol.feasibility_residual >= -1e-7);
        for f in &fs {
            prop_assert!(sol.objective >= lp_norm(f, p).unwrap() - 1e-7);
        }
    }

    #[test]
    fn dropping_an_entry_does_not_increase(seed in any::<u64>(), d in 2usize..5, n in 2usize..4, p in prop::sample::select(vec![1.0, 2.0])) {
        let fs = family(seed, d, n);
        prop_assert!(barrier(&fs[..n - 1], p).objective <= barrier(&fs, p).objective + 1e-7);
    }

    #[test]
    fn corners_do_not_increase(seed in any::<u64>(), d in 2usize..5, p in prop::sample::select(vec![1.0, 2.0])) {
        let fs = family(seed, d, 3);
        let mut g = rng(seed ^ 9);
        let k = g.random_range(1..d);
        let diag: Vec<f64> = (0..d).map(|i| if i < k { 1.0 } else { 0.0 }).collect();
        let e = common::with_spectrum(&diag, &mut g).spectral_projection(Interval::above(0.5));
        let corners: Vec<Hermitian<f64>> = fs.iter().map(|f| f.compress(&e)).collect();
        prop_assert!(barrier(&corners, p).objective <= barrier(&fs, p).objective + 1e-7);
    }

    #[test]
    fn diagonal_families_match_pointwise_max(seed in any::<u64>(), d in 2usize..12, n in 1usize..6, p in prop::sample::select(vec![1.0, 2.0])) {
        let mut g = rng(seed);
        let entries: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| g.random_range(0.0..1.0)).collect()).collect();
        let fs: Vec<Hermitian<f64>> = entries.iter().map(|e| Hermitian::from_real_diagonal(e)).collect();
        let (_, want) = sup_norm_diagonal(&entries, p).unwrap();
        let got = barrier(&fs, p).objective;
        prop_assert!((got - want).abs() <= 1e-6 * want);
    }
}
