use ncmax::free_group::{free_poisson, multiply, reduced_words, twist_phase, FreeElement, FreeWord};
use num_complex::Complex64;
use proptest::prelude::*;

#[test]
fn product_is_associative_on_short_words() {
    let words = reduced_words(2);
    for u in &words {
        for v in &words {
            for w in &words {
                assert_eq!(multiply(&multiply(u, v), w), multiply(u, &multiply(v, w)));
            }
        }
    }
}

#[test]
fn length_is_subadditive_and_inverse_invariant() {
    let words = reduced_words(4);
    for u in &words {
        assert_eq!(u.inverse().length(), u.length());
        assert!(multiply(u, &u.inverse()).is_identity());
        for v in &words {
            assert!(multiply(u, v).length() <= u.length() + v.length());
        }
    }
}

#[test]
fn quotient_counts_are_a_homomorphism() {
    let words = reduced_words(6);
    let short = reduced_words(3);
    for u in &words {
        for v in &short {
            let (a, b) = u.quotient_counts();
            let (c, e) = v.quotient_counts();
            assert_eq!(multiply(u, v).quotient_counts(), (a + c, b + e));
        }
    }
}

#[test]
fn reduced_words_are_enumerated_with_growth_4_times_3_pow() {
    for n in 1..=6 {
        let count = reduced_words(n).iter().filter(|w| w.length() == n as u64).count();
        assert_eq!(count, 4 * 3usize.pow(n as u32 - 1));
    }
}

#[test]
fn display_round_trips() {
    for w in reduced_words(4) {
        assert_eq!(w.to_string().parse::<FreeWord>().unwrap(), w);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn twist_phase_is_multiplicative(i in 0usize..161, j in 0usize..161, t1 in 0.0f64..1.0, t2 in 0.0f64..1.0) {
        let words = reduced_words(3);
        let (u, v) = (&words[i % words.len()], &words[j % words.len()]);
        let lhs = twist_phase(&multiply(u, v), (t1, t2));
        let rhs = twist_phase(u, (t1, t2)) * twist_phase(v, (t1, t2));
        prop_assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn poisson_semigroup(s in 0.0f64..3.0, t in 0.0f64..3.0, seed in 0usize..1000) {
        let words = reduced_words(4);
        let f = FreeElement::from_terms(
            (0..6).map(|k| (words[(seed * 7 + k * 31) % words.len()].clone(), Complex64::new(1.0 + k as f64, -(k as f64)))),
        );
        let two = free_poisson(&free_poisson(&f, s).unwrap(), t).unwrap();
        let one = free_poisson(&f, s + t).unwrap();
        for (w, c) in one.terms() {
            prop_assert!((two.coeff(w) - c).norm() <= 1e-14 * c.norm().max(1.0));
        }
        prop_assert_eq!(one.support_len(), two.support_len());
    }
}
