#![allow(dead_code)]

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use wsnmf::{Dictionary, Ensemble, NonNegMatrix, Signal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || rng.sample(StandardNormal))
}

pub fn uniform(rng: &mut ChaCha8Rng, rows: usize, cols: usize, lo: f64, hi: f64) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || rng.random_range(lo..hi))
}

pub fn ensemble_from(x: &Array2<f64>) -> Ensemble<f64> {
    Ensemble::new(
        x.rows()
            .into_iter()
            .enumerate()
            .map(|(i, r)| Signal::new(format!("x{i}"), format!("c{i}"), r.to_vec(), 1.0).unwrap())
            .collect(),
    )
    .unwrap()
}

/// `d` correlated signals of length `n`: a random Gaussian mixing of white noise plus offsets.
pub fn random_ensemble(rng: &mut ChaCha8Rng, d: usize, n: usize) -> Ensemble<f64> {
    let mix = gaussian(rng, d, d);
    let offsets = gaussian(rng, d, 1);
    let x = mix.dot(&gaussian(rng, d, n)) + &offsets;
    ensemble_from(&x)
}

pub fn frobenius(a: &Array2<f64>) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn trace(a: &Array2<f64>) -> f64 {
    a.diag().sum()
}

/// Random dictionary with unit columns and the scale factors that were divided out.
pub fn random_dictionary(rng: &mut ChaCha8Rng, f: usize, m: usize) -> Dictionary<f64> {
    let w = uniform(rng, f, m, 0.05, 1.0);
    let labels = (0..m).map(|k| format!("a{k}")).collect();
    Dictionary::normalized(NonNegMatrix::new(w).unwrap(), labels).unwrap()
}
