use jawprint_core::verifiers::lstm::{batch_loss, batch_loss_and_gradient, train_lstm, LstmConfig, LstmParams};
use jawprint_oracle::gradcheck::{central_difference, relative_error};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn flatten(p: &LstmParams) -> Vec<f64> {
    p.slices().concat()
}

fn unflatten(template: &LstmParams, flat: &[f64]) -> LstmParams {
    let mut p = template.clone();
    let mut off = 0;
    for s in p.slices_mut() {
        s.copy_from_slice(&flat[off..off + s.len()]);
        off += s.len();
    }
    p
}

fn random_point(input: usize, units: usize, rng: &mut ChaCha8Rng) -> LstmParams {
    let mut p = LstmParams::init(input, units, rng.random());
    for s in p.slices_mut() {
        for v in s.iter_mut() {
            *v += rng.random_range(-0.5..0.5);
        }
    }
    p
}

fn max_gradient_error(params: &LstmParams, seqs: &[Array2<f64>], idx: Option<Vec<usize>>) -> f64 {
    let labels = [1.0, 0.0];
    let weights = [0.7, 1.3];
    let (_, grad) = batch_loss_and_gradient(params, seqs, &labels, &weights);
    let analytic = flatten(&grad);
    let x = flatten(params);
    let idx = idx.unwrap_or_else(|| (0..x.len()).collect());
    let mut f = |flat: &[f64]| batch_loss(&unflatten(params, flat), seqs, &labels, &weights);
    let numeric = central_difference(&mut f, &x, &idx, 1e-5);
    idx.iter().zip(&numeric).map(|(&i, &n)| relative_error(analytic[i], n)).fold(0.0, f64::max)
}

fn two_sequences(rng: &mut ChaCha8Rng, steps: usize, dim: usize) -> Vec<Array2<f64>> {
    (0..2).map(|_| Array2::from_shape_fn((steps, dim), |_| rng.random_range(-1.0..1.0))).collect()
}

#[test]
fn gradient_matches_finite_differences_everywhere() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let seqs = two_sequences(&mut rng, 6, 3);
    for _ in 0..5 {
        let p = random_point(3, 4, &mut rng);
        let err = max_gradient_error(&p, &seqs, None);
        assert!(err < 1e-4, "max relative error {err}");
    }
}

#[test]
fn gradient_matches_at_full_width() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let seqs = two_sequences(&mut rng, 12, 9);
    let p = random_point(9, 64, &mut rng);
    let total = p.num_params();
    let idx: Vec<usize> = (0..300).map(|_| rng.random_range(0..total)).chain([total - 1]).collect();
    let err = max_gradient_error(&p, &seqs, Some(idx));
    assert!(err < 1e-4, "max relative error {err}");
}

#[test]
fn gradient_matches_on_long_sequences() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let seqs = two_sequences(&mut rng, 250, 3);
    let p = random_point(3, 16, &mut rng);
    let total = p.num_params();
    let idx: Vec<usize> = (0..200).map(|_| rng.random_range(0..total)).collect();
    let err = max_gradient_error(&p, &seqs, Some(idx));
    assert!(err < 1e-4, "max relative error {err}");
}

fn sine(freq: f64, phase: f64) -> Array2<f64> {
    Array2::from_shape_fn((40, 1), |(t, _)| (2.0 * std::f64::consts::PI * freq * t as f64 / 40.0 + phase).sin())
}

#[test]
fn overfits_two_sines() {
    let seqs: Vec<Array2<f64>> =
        (0..10).map(|i| if i % 2 == 0 { sine(1.0, i as f64 * 0.3) } else { sine(6.0, i as f64 * 0.3) }).collect();
    let labels: Vec<bool> = (0..10).map(|i| i % 2 == 0).collect();
    let cfg = LstmConfig {
        units_per_layer: 8,
        max_epochs: 200,
        learning_rate: 1e-2,
        batch_size: 10,
        validation_fraction: 0.0,
        ..LstmConfig::default()
    };
    let (model, summary) = train_lstm(&seqs, &labels, &cfg).unwrap();
    assert!(summary.epochs_run <= 200);
    let scores = model.score_batch(&seqs).unwrap();
    for (s, &l) in scores.iter().zip(&labels) {
        assert_eq!(*s > 0.5, l, "score {s}");
    }
    assert_eq!(model.score(&seqs[0]).unwrap(), model.score(&seqs[0]).unwrap());
}

#[test]
fn balanced_weighting_is_plain_loss() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let seqs = two_sequences(&mut rng, 5, 2);
    let p = random_point(2, 3, &mut rng);
    let a = batch_loss(&p, &seqs, &[1.0, 0.0], &[1.0, 1.0]);
    let (b, _) = batch_loss_and_gradient(&p, &seqs, &[1.0, 0.0], &[1.0, 1.0]);
    assert_eq!(a, b);
}
