use jawprint_core::features::{compute_axis_features, FeatureKind};
use jawprint_oracle::features as oracle;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_series(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    match rng.random_range(0..4) {
        0 => (0..n).map(|_| rng.random_range(-1.0..1.0)).collect(),
        1 => {
            let f = rng.random_range(0.3..8.0);
            let a = rng.random_range(0.01..2.0);
            let dc = rng.random_range(-1.0..1.0);
            (0..n)
                .map(|i| dc + a * (2.0 * std::f64::consts::PI * f * i as f64 / 100.0).sin() + 0.05 * rng.random_range(-1.0..1.0))
                .collect()
        }
        2 => {
            let mut acc = 0.0;
            (0..n)
                .map(|_| {
                    acc += rng.random_range(-0.1..0.1);
                    acc
                })
                .collect()
        }
        _ => (0..n).map(|i| (i as f64 * 0.01).powi(2) + 0.3 * rng.random_range(-1.0..1.0)).collect(),
    }
}

fn tolerance(kind: FeatureKind) -> f64 {
    match kind {
        FeatureKind::DetrendedFluctuation | FeatureKind::HiguchiFractalDimension => 1e-6,
        _ => 1e-9,
    }
}

#[test]
fn matches_oracle_on_random_windows() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let lengths = [250, 250, 250, 64, 101, 500];
    for trial in 0..100 {
        let n = lengths[trial % lengths.len()];
        let x = random_series(&mut rng, n);
        let got = compute_axis_features(&x, 100.0).unwrap();
        let want = oracle::axis_features(&x, 100.0);
        assert_eq!(want.len(), FeatureKind::ALL.len());
        for kind in FeatureKind::ALL {
            let (a, b) = (got.get(kind), want[kind.name()]);
            let tol = tolerance(kind) * b.abs().max(1.0);
            assert!((a - b).abs() <= tol, "trial {trial} n={n} {}: got {a}, oracle {b}", kind.name());
        }
    }
}

#[test]
fn oracle_lz_matches_known_sequences() {
    let bits = |s: &str| s.chars().map(|c| c == '1').collect::<Vec<_>>();
    // 0|001|10|100|1000|101
    assert_eq!(oracle::lz76_naive(&bits("0001101001000101")), 6);
    for s in ["0", "01", "0000000", "0101010101", "1101001110000110"] {
        assert_eq!(jawprint_core::features::lz76_complexity(&bits(s)), oracle::lz76_naive(&bits(s)), "{s}");
    }
}

const SHIFT_INVARIANT: &[FeatureKind] = &[
    FeatureKind::StandardDeviation,
    FeatureKind::MeanAbsoluteDeviation,
    FeatureKind::MedianAbsoluteDeviation,
    FeatureKind::MeanAbsoluteDifference,
    FeatureKind::SumAbsoluteDifferences,
    FeatureKind::SignalDistance,
    FeatureKind::PeakToPeak,
    FeatureKind::MeanSquaredError,
    FeatureKind::Variance,
    FeatureKind::Skewness,
    FeatureKind::Kurtosis,
    FeatureKind::InterquartileRange,
    FeatureKind::HistogramEntropy,
    FeatureKind::EcdfSlope,
    FeatureKind::LinearTrendSlope,
    FeatureKind::MeanDiff,
    FeatureKind::MedianDiff,
    FeatureKind::PositiveTurnings,
    FeatureKind::NegativeTurnings,
    FeatureKind::Autocorrelation,
    FeatureKind::PetrosianFractalDimension,
    FeatureKind::HiguchiFractalDimension,
    FeatureKind::DetrendedFluctuation,
    FeatureKind::LempelZivComplexity,
    FeatureKind::NeighbourhoodPeaks,
];

const SCALE_INVARIANT: &[FeatureKind] = &[
    FeatureKind::Skewness,
    FeatureKind::Kurtosis,
    FeatureKind::HistogramEntropy,
    FeatureKind::TemporalCentroid,
    FeatureKind::PositiveTurnings,
    FeatureKind::NegativeTurnings,
    FeatureKind::ZeroCrossings,
    FeatureKind::Autocorrelation,
    FeatureKind::PetrosianFractalDimension,
    FeatureKind::HiguchiFractalDimension,
    FeatureKind::DetrendedFluctuation,
    FeatureKind::LempelZivComplexity,
    FeatureKind::WaveletEntropy,
    FeatureKind::SpectralEntropy,
    FeatureKind::SpectralCentroid,
    FeatureKind::SpectralSpread,
    FeatureKind::SpectralSkewness,
    FeatureKind::SpectralKurtosis,
    FeatureKind::SpectralRollOff,
    FeatureKind::SpectralVariation,
    FeatureKind::HumanRangeEnergy,
    FeatureKind::SpectralDecrease,
    FeatureKind::FundamentalFrequency,
    FeatureKind::PowerBandwidth,
];

#[test]
fn shift_and_scale_invariants() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let x = random_series(&mut rng, 250);
        let base = compute_axis_features(&x, 100.0).unwrap();
        let shifted: Vec<f64> = x.iter().map(|v| v + 0.5).collect();
        let scaled: Vec<f64> = x.iter().map(|v| v * 4.0).collect();
        let s = compute_axis_features(&shifted, 100.0).unwrap();
        let c = compute_axis_features(&scaled, 100.0).unwrap();
        for &k in SHIFT_INVARIANT {
            let (a, b) = (base.get(k), s.get(k));
            assert!((a - b).abs() <= 1e-7 * a.abs().max(1.0), "shift {}: {a} vs {b}", k.name());
        }
        for &k in SCALE_INVARIANT {
            let (a, b) = (base.get(k), c.get(k));
            assert!((a - b).abs() <= 1e-7 * a.abs().max(1.0), "scale {}: {a} vs {b}", k.name());
        }
        // Second-moment features scale with the square of the gain.
        let (v0, v1) = (base.get(FeatureKind::Variance), c.get(FeatureKind::Variance));
        assert!((v1 - 16.0 * v0).abs() <= 1e-9 * v1.max(1.0));
    }
}
