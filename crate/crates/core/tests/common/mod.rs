#![allow(dead_code)]

use nalgebra::DVector;
use ncmax::channels::haar_unitary;
use ncmax::harness::{instance_rng, log_uniform_spectrum};
use ncmax::qps::{CMatrix, Hermitian};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha20Rng;

pub fn rng(seed: u64) -> ChaCha20Rng {
    instance_rng(seed, 0)
}

pub fn with_spectrum<G: Rng>(vals: &[f64], rng: &mut G) -> Hermitian<f64> {
    let d = vals.len();
    let u = haar_unitary(d, rng);
    let dm = CMatrix::<f64>::from_diagonal(&DVector::from_iterator(d, vals.iter().map(|&x| Complex64::new(x, 0.0))));
    Hermitian::from_matrix(&u * dm * u.adjoint()).unwrap()
}

/// Hermitian with spectrum in `[-1, 1]`.
pub fn hermitian<G: Rng>(d: usize, rng: &mut G) -> Hermitian<f64> {
    let vals: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
    with_spectrum(&vals, rng)
}

/// Positive with spectrum in `[0, 1]`.
pub fn positive<G: Rng>(d: usize, rng: &mut G) -> Hermitian<f64> {
    let vals: Vec<f64> = (0..d).map(|_| rng.random_range(0.0..1.0)).collect();
    with_spectrum(&vals, rng)
}

/// Positive with a log-uniform spectrum, normalized to `τ(f) = 1`.
pub fn positive_wide<G: Rng>(d: usize, rng: &mut G) -> Hermitian<f64> {
    let vals = log_uniform_spectrum(d, rng);
    let mean = vals.iter().sum::<f64>() / d as f64;
    let vals: Vec<f64> = vals.iter().map(|v| v / mean).collect();
    with_spectrum(&vals, rng)
}
