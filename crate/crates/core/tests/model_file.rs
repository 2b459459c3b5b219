use jawprint_core::signal::{SensorLocation, Window, WindowOrigin};
use jawprint_core::verifiers::persist::{decode, encode};
use jawprint_core::verifiers::{
    load_model, save_model, train_verifier, ClassifierKind, LstmConfig, Sample, Scope, TrainConfig, VerifierError,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sample(rng: &mut ChaCha8Rng, freq: f64, idx: usize) -> Sample {
    let windows: Vec<Window> = SensorLocation::ALL
        .iter()
        .map(|&location| Window {
            location,
            data: (0..100)
                .map(|t| {
                    let s = (2.0 * std::f64::consts::PI * freq * t as f64 / 100.0).sin();
                    [s + 0.1 * rng.random_range(-1.0..1.0), 0.5 * s, rng.random_range(-0.2..0.2)]
                })
                .collect(),
            origin: WindowOrigin::untagged(idx),
        })
        .collect();
    Sample::from_windows(&windows).unwrap()
}

fn cohort() -> (Vec<Sample>, Vec<bool>) {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let labels: Vec<bool> = (0..30).map(|i| i % 5 < 2).collect();
    let samples = labels.iter().enumerate().map(|(i, &l)| sample(&mut rng, if l { 1.5 } else { 4.0 }, i)).collect();
    (samples, labels)
}

fn config() -> TrainConfig {
    let mut cfg = TrainConfig::default();
    cfg.selection.relieff_neighbors = 3;
    cfg.lstm = LstmConfig { units_per_layer: 6, max_epochs: 3, ..LstmConfig::default() };
    cfg
}

#[test]
fn round_trip_scores_bit_identical() {
    let (samples, labels) = cohort();
    let refs: Vec<&Sample> = samples.iter().collect();
    let dir = tempfile::tempdir().unwrap();
    for kind in ClassifierKind::ALL {
        for scope in [Scope::Fused, Scope::Location(SensorLocation::BelowChin)] {
            let v = train_verifier("u01", kind, scope, &refs, &labels, &config()).unwrap();
            let path = dir.path().join(format!("{kind}-{scope}.jwpr"));
            save_model(&v, &path).unwrap();
            let back = load_model(&path).unwrap();
            assert_eq!(back, v);
            let a = v.score_batch(&refs).unwrap();
            let b = back.score_batch(&refs).unwrap();
            assert_eq!(a, b);
            assert!(a.iter().all(|p| (0.0..=1.0).contains(p)));
        }
    }
}

#[test]
fn damaged_files_are_rejected() {
    let (samples, labels) = cohort();
    let refs: Vec<&Sample> = samples.iter().collect();
    let v = train_verifier("u01", ClassifierKind::Svm, Scope::Fused, &refs, &labels, &config()).unwrap();
    let bytes = encode(&v);

    for cut in [0, 3, 10, bytes.len() / 2, bytes.len() - 1] {
        assert!(matches!(decode(&bytes[..cut]), Err(VerifierError::CorruptModelFile(_))), "cut at {cut}");
    }
    let mut flipped = bytes.clone();
    let mid = flipped.len() / 2;
    flipped[mid] ^= 0x40;
    assert!(matches!(decode(&flipped), Err(VerifierError::CorruptModelFile(_))));

    let mut newer = bytes.clone();
    newer[4..6].copy_from_slice(&2u16.to_le_bytes());
    assert!(matches!(decode(&newer), Err(VerifierError::VersionMismatch { found: 2, supported: 1 })));
}

#[test]
fn batch_and_single_scores_agree() {
    let (samples, labels) = cohort();
    let refs: Vec<&Sample> = samples.iter().collect();
    let v = train_verifier("u01", ClassifierKind::Lstm, Scope::Fused, &refs, &labels, &config()).unwrap();
    let batch = v.score_batch(&refs).unwrap();
    for (s, b) in refs.iter().zip(&batch) {
        assert_eq!(v.score(s).unwrap().to_bits(), b.to_bits());
    }
}
