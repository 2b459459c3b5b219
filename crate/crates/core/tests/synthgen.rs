use jawprint_core::attack::synthesize_accel;
use jawprint_core::evaluation::Dataset;
use jawprint_core::features::NormalizerState;
use jawprint_core::signal::{Activity, SensorLocation};
use jawprint_core::synthgen::{
    generate_cohort, generate_cohort_sessions, generate_profile, generate_session, generate_session_with,
    render_landmark_traces, CohortSpec, SessionSpec, SynthConfig,
};
use jawprint_core::verifiers::Scope;
use jawprint_oracle::features::dft_magnitudes;

fn spectrum_of(x: &[f64]) -> Vec<f64> {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let centred: Vec<f64> = x.iter().map(|v| v - mean).collect();
    dft_magnitudes(&centred)
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

#[test]
fn profiles_are_deterministic_and_distinct() {
    assert_eq!(generate_profile("a", 5), generate_profile("a", 5));
    assert_ne!(generate_profile("a", 5).base_frequency, generate_profile("a", 6).base_frequency);
    let p = generate_profile("a", 5);
    assert!((1.5..=4.5).contains(&p.base_frequency));
}

#[test]
fn cohort_frequency_gaps() {
    let cfg = SynthConfig::default();
    let cohort = generate_cohort(10, 42, &cfg).unwrap();
    assert_eq!(cohort, generate_cohort(10, 42, &cfg).unwrap());
    for (i, a) in cohort.iter().enumerate() {
        for b in &cohort[i + 1..] {
            assert!((a.base_frequency - b.base_frequency).abs() >= 0.05, "{} vs {}", a.user_id, b.user_id);
        }
    }
}

#[test]
fn session_lengths_and_determinism() {
    let p = generate_profile("u", 1);
    let spec = SessionSpec::new(&p, 900.0, Activity::Seated, 1);
    let s = generate_session(&p, &spec).unwrap();
    for loc in SensorLocation::ALL {
        assert_eq!(s.stream(loc).len(), 90_000);
    }
    let short = SessionSpec::new(&p, 20.0, Activity::Seated, 1);
    assert_eq!(generate_session(&p, &short).unwrap(), generate_session(&p, &short).unwrap());
}

#[test]
fn sessions_correlated_but_not_identical() {
    let p = generate_profile("u", 3);
    let s1 = generate_session(&p, &SessionSpec::new(&p, 60.0, Activity::Seated, 1)).unwrap();
    let s2 = generate_session(&p, &SessionSpec::new(&p, 60.0, Activity::Seated, 2)).unwrap();
    let axis = |s: &jawprint_core::RecordingSession| -> Vec<f64> {
        s.stream(SensorLocation::BelowChin).samples.iter().map(|x| x.ax).collect()
    };
    let (a, b) = (axis(&s1), axis(&s2));
    assert_ne!(a, b);
    // Compare spectra up to 20 Hz where the articulation lives.
    let bins = 20 * 60;
    let r = pearson(&spectrum_of(&a)[..bins], &spectrum_of(&b)[..bins]);
    assert!(r > 0.5, "spectral correlation {r}");
}

#[test]
fn walking_adds_gait_energy() {
    let p = generate_profile("u", 8);
    let seated = generate_session(&p, &SessionSpec::new(&p, 40.0, Activity::Seated, 1)).unwrap();
    let walking = generate_session(&p, &SessionSpec::new(&p, 40.0, Activity::WalkFlat, 1)).unwrap();
    let band = |s: &jawprint_core::RecordingSession| {
        let z: Vec<f64> = s.stream(SensorLocation::BelowChin).samples.iter().map(|x| x.az).collect();
        let mags = spectrum_of(&z);
        // 1.8 to 2.2 Hz at 0.025 Hz resolution.
        mags[72..=88].iter().map(|m| m * m).sum::<f64>()
    };
    assert!(band(&walking) > 4.0 * band(&seated), "{} vs {}", band(&walking), band(&seated));
}

#[test]
fn silent_profile_renders_still_landmarks() {
    let p = generate_profile("u", 2).silenced();
    let cfg = SynthConfig::default();
    let traces = render_landmark_traces(&p, &SessionSpec::new(&p, 10.0, Activity::Seated, 0), &cfg).unwrap();
    for t in &traces {
        assert!(t.points.windows(2).all(|w| w[0] == w[1]));
        let a = synthesize_accel(t).unwrap();
        assert!(a.samples.iter().flatten().all(|v| v.abs() < 1e-12));
    }
}

#[test]
fn master_trace_recovers_articulation_frequency() {
    let cfg = SynthConfig::default();
    for seed in [4, 11, 29] {
        let p = generate_profile("u", seed);
        let spec = SessionSpec::new(&p, 30.0, Activity::Seated, 0);
        let traces = render_landmark_traces(&p, &spec, &cfg).unwrap();
        assert_eq!(traces, render_landmark_traces(&p, &spec, &cfg).unwrap());
        let chin = &traces[0];
        assert!(chin.is_master());
        let a = synthesize_accel(chin).unwrap();
        let n = a.samples.len();
        let mut power = vec![0.0; n / 2 + 1];
        for axis in 0..3 {
            let x: Vec<f64> = a.samples.iter().map(|s| s[axis]).collect();
            for (k, m) in spectrum_of(&x).iter().enumerate() {
                power[k] += m * m;
            }
        }
        let peak = (1..power.len()).max_by(|&i, &j| power[i].total_cmp(&power[j])).unwrap();
        let f = peak as f64 * a.rate / n as f64;
        assert!((f - p.base_frequency).abs() <= 0.2, "seed {seed}: peak {f} Hz, base {} Hz", p.base_frequency);
    }
}

fn centroid(rows: &[Vec<f64>]) -> Vec<f64> {
    let d = rows[0].len();
    (0..d).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / rows.len() as f64).collect()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

#[test]
fn users_separate_better_than_sessions_drift() {
    let cfg = SynthConfig::default();
    let profiles = generate_cohort(5, 7, &cfg).unwrap();
    let spec = CohortSpec { users: 5, seed: 7, duration: 30.0, activities: vec![Activity::Seated], video_duration: 0.0 };
    let ds = Dataset::from_sessions(&generate_cohort_sessions(&profiles, &spec, &cfg).unwrap(), 250, 250).unwrap();
    let rows = |u: &str, k: u8| -> Vec<Vec<f64>> {
        ds.samples(u, Activity::Seated, k).unwrap().iter().map(|s| s.feature_vector(Scope::Fused)).collect()
    };
    let all: Vec<Vec<f64>> = profiles.iter().flat_map(|p| [rows(&p.user_id, 1), rows(&p.user_id, 2)].concat()).collect();
    let norm = NormalizerState::fit_rows(&all).unwrap();
    let z = |r: Vec<Vec<f64>>| -> Vec<Vec<f64>> { r.iter().map(|x| norm.apply_row(x).unwrap()).collect() };
    let c: Vec<(Vec<f64>, Vec<f64>)> =
        profiles.iter().map(|p| (centroid(&z(rows(&p.user_id, 1))), centroid(&z(rows(&p.user_id, 2))))).collect();
    let within = c.iter().map(|(a, b)| dist(a, b)).fold(0.0, f64::max);
    let mut between = f64::INFINITY;
    for i in 0..c.len() {
        for j in 0..c.len() {
            if i != j {
                between = between.min(dist(&c[i].0, &c[j].0));
            }
        }
    }
    assert!(between > within, "between {between} within {within}");
}

#[test]
fn zero_duration_rejected() {
    let p = generate_profile("u", 1);
    let spec = SessionSpec { duration: 0.0, activity: Activity::Seated, session_index: 1, noise_seed: 0 };
    assert!(generate_session_with(&p, &spec, &SynthConfig::default()).is_err());
}
