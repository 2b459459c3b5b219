use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use jawprint_bench::{labelled_matrix, master_trace, scores, sequences, window};
use jawprint_core::attack::{decimate_fps, synthesize_accel};
use jawprint_core::evaluation::compute_eer;
use jawprint_core::features::{compute_axis_features, relieff_scores};
use jawprint_core::verifiers::lstm::{batch_loss_and_gradient, LstmParams};
use jawprint_core::verifiers::svm::{solve_linear_svm, SvmConfig};

fn features(c: &mut Criterion) {
    let x = window(250, 1);
    c.bench_function("axis_features_250", |b| b.iter(|| compute_axis_features(black_box(&x), 100.0).unwrap()));
}

fn relieff(c: &mut Criterion) {
    let (x, labels) = labelled_matrix(200, 50, 10, 2);
    c.bench_function("relieff_200x50_k10", |b| b.iter(|| relieff_scores(black_box(&x), &labels, 10, None, 0).unwrap()));
}

fn svm(c: &mut Criterion) {
    let (x, labels) = labelled_matrix(250, 50, 2, 3);
    let y: Vec<bool> = labels.iter().map(|&l| l == 1).collect();
    let cfg = SvmConfig::default();
    c.bench_function("linear_svm_250x50", |b| b.iter(|| solve_linear_svm(black_box(&x), &y, &cfg).unwrap()));
}

fn lstm(c: &mut Criterion) {
    let seqs = sequences(8, 250, 9, 4);
    let params = LstmParams::init(9, 64, 5);
    let labels = [1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0];
    let weights = [1.0; 8];
    let mut group = c.benchmark_group("lstm");
    group.sample_size(10);
    group.bench_function("batch8_steps250_units64", |b| {
        b.iter(|| batch_loss_and_gradient(black_box(&params), &seqs, &labels, &weights))
    });
    group.finish();
}

fn eer(c: &mut Criterion) {
    let (g, i) = (scores(500, 0.8, 6), scores(750, 0.0, 7));
    c.bench_function("eer_500_750", |b| b.iter(|| compute_eer(black_box(&g), black_box(&i)).unwrap()));
}

fn attack(c: &mut Criterion) {
    let master = master_trace(3600, 8);
    c.bench_function("second_difference_60s_60fps", |b| b.iter(|| synthesize_accel(black_box(&master)).unwrap()));
    c.bench_function("decimate_and_differentiate_15fps", |b| {
        b.iter(|| synthesize_accel(&decimate_fps(black_box(&master), 15).unwrap()).unwrap())
    });
}

criterion_group!(benches, features, relieff, svm, lstm, eer, attack);
criterion_main!(benches);
