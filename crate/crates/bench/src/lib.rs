//! Input fixtures shared by the benchmarks.

use jawprint_core::signal::SensorLocation;
use jawprint_core::LandmarkTrace;
use jawprint_core::Resolution;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A noisy sine window sampled at 100 Hz.
pub fn window(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| (2.0 * std::f64::consts::PI * 3.0 * i as f64 / 100.0).sin() + 0.1 * rng.random_range(-1.0..1.0))
        .collect()
}

/// Rows of `d` features with the first column shifted by the class label.
pub fn labelled_matrix(n: usize, d: usize, classes: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels: Vec<usize> = (0..n).map(|i| i % classes).collect();
    let x = labels
        .iter()
        .map(|&c| (0..d).map(|j| rng.random_range(-1.0..1.0) + if j == 0 { c as f64 } else { 0.0 }).collect())
        .collect();
    (x, labels)
}

pub fn sequences(count: usize, steps: usize, dim: usize, seed: u64) -> Vec<Array2<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| Array2::from_shape_fn((steps, dim), |_| rng.random_range(-1.0..1.0))).collect()
}

pub fn scores(n: usize, shift: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| shift + rng.random_range(-1.0..1.0)).collect()
}

pub fn master_trace(frames: usize, seed: u64) -> LandmarkTrace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = (0..frames).map(|_| [rng.random_range(0.4..0.6), rng.random_range(0.4..0.6), 0.0]).collect();
    LandmarkTrace::new(SensorLocation::BelowChin, 60, Resolution::P1080, 1.0, points).expect("valid trace")
}
