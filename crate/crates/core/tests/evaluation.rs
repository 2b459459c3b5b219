use std::collections::HashSet;

use jawprint_core::evaluation::{
    build_split, compute_eer, threshold_decision, Dataset, Decision, EvalError, EvalReport, LanguageTag, SplitConfig,
    UserResult, UserThreshold,
};
use jawprint_core::signal::{Activity, WindowOrigin};
use jawprint_core::verifiers::{ClassifierKind, Sample, Scope};
use jawprint_oracle::eer as oracle;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn assert_close(a: f64, b: f64, tol: f64, what: &str) {
    assert!((a - b).abs() <= tol, "{what}: {a} vs {b}");
}

#[test]
fn eer_matches_oracle_on_random_scores() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..100 {
        let ng = rng.random_range(1..60);
        let ni = rng.random_range(1..90);
        let shift = rng.random_range(-0.5..1.5);
        // Coarse grids on some trials to force ties.
        let grid = if trial % 3 == 0 { 20.0 } else { 0.0 };
        let draw = |rng: &mut ChaCha8Rng, mu: f64| {
            let v: f64 = mu + rng.random_range(-1.0..1.0);
            if grid > 0.0 { (v * grid).round() / grid } else { v }
        };
        let g: Vec<f64> = (0..ng).map(|_| draw(&mut rng, shift)).collect();
        let i: Vec<f64> = (0..ni).map(|_| draw(&mut rng, 0.0)).collect();
        let (e, t) = compute_eer(&g, &i).unwrap();
        let (oe, ot) = oracle::eer(&g, &i);
        assert_close(e, oe, 1e-9, &format!("trial {trial} eer"));
        assert_close(t, ot, 1e-9 * ot.abs().max(1.0), &format!("trial {trial} threshold"));
        assert!((0.0..=1.0).contains(&e));
    }
}

#[test]
fn perfect_separation_and_identical_scores() {
    let g = [0.8, 0.9, 0.95];
    let i = [0.1, 0.2, 0.7];
    assert_eq!(compute_eer(&g, &i).unwrap().0, 0.0);
    let (e, _) = compute_eer(&[0.4; 5], &[0.4; 7]).unwrap();
    assert_close(e, 0.5, 1e-12, "identical");
}

#[test]
fn hand_computed_interleaving() {
    // Thresholds 1..4: FAR 1, .5, .5, 0; FRR 0, 0, .5, .5. Equal at 3.
    let (e, t) = compute_eer(&[2.0, 4.0], &[1.0, 3.0]).unwrap();
    assert_close(e, 0.5, 1e-12, "eer");
    assert_close(t, 3.0, 1e-12, "threshold");
    // Thresholds 1, 2, 3, sentinel: FAR 1, .5, 0, 0; FRR 0, 0, 0, 1.
    // No tie; the crossing sits between 2 and 3 where the lines meet.
    let (e, t) = compute_eer(&[3.0], &[1.0, 2.0]).unwrap();
    assert_close(e, 0.0, 1e-12, "separable eer");
    assert_close(t, 3.0, 1e-12, "separable threshold");
    // Genuine {3, 4}, impostors {1, 2, 3.5}. At 3: FAR 1/3, FRR 0. At 3.5:
    // FAR 1/3, FRR 1/2. The lines meet two thirds of the way along.
    let (e, t) = compute_eer(&[3.0, 4.0], &[1.0, 2.0, 3.5]).unwrap();
    assert_close(e, 1.0 / 3.0, 1e-12, "interpolated eer");
    assert_close(t, 3.0 + 2.0 / 3.0 * 0.5, 1e-12, "interpolated threshold");
}

#[test]
fn invariant_under_monotone_transform() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..30 {
        let g: Vec<f64> = (0..25).map(|_| rng.random_range(-0.5..1.0)).collect();
        let i: Vec<f64> = (0..40).map(|_| rng.random_range(-1.0..0.5)).collect();
        let f = |v: f64| 1.0 / (1.0 + (-3.0 * v).exp());
        let (e0, _) = compute_eer(&g, &i).unwrap();
        let (e1, _) = compute_eer(&g.iter().map(|&v| f(v)).collect::<Vec<_>>(), &i.iter().map(|&v| f(v)).collect::<Vec<_>>()).unwrap();
        assert_close(e0, e1, 1e-12, "monotone");
    }
}

#[test]
fn empty_scores_rejected() {
    assert!(matches!(compute_eer(&[0.1], &[]), Err(EvalError::EmptyScores)));
}

#[test]
fn threshold_at_eer_is_inclusive() {
    let (_, t) = compute_eer(&[0.9, 0.6], &[0.1, 0.6]).unwrap();
    let th = UserThreshold { user_id: "u".into(), threshold: t, eer: 0.0 };
    assert_eq!(threshold_decision(t, &th), Decision::Accept);
    assert_eq!(threshold_decision(t - 1e-9, &th), Decision::Reject);
}

fn fake_sample(user: &str, session: u8, idx: usize) -> Sample {
    Sample {
        origin: WindowOrigin { user_id: user.into(), activity: Some(Activity::Seated), session_index: session, window_index: idx },
        raw: [vec![[0.0; 3]; 4], vec![[0.0; 3]; 4], vec![[0.0; 3]; 4]],
        features: [vec![idx as f64], vec![session as f64], vec![0.0]],
    }
}

fn fake_dataset(users: usize, per_session: usize) -> Dataset {
    let mut ds = Dataset::default();
    for u in 0..users {
        let id = format!("u{u:02}");
        for k in 1..=2u8 {
            let samples = (0..per_session).map(|i| fake_sample(&id, k, i)).collect();
            ds.sessions.insert((id.clone(), Activity::Seated, k), samples);
        }
        ds.languages.insert(id, if u % 2 == 0 { LanguageTag::Native } else { LanguageTag::NonNative });
    }
    ds
}

#[test]
fn split_ratio_and_determinism() {
    let ds = fake_dataset(6, 10);
    let cfg = SplitConfig::default();
    let a = build_split(&ds, "u00", Activity::Seated, &cfg).unwrap();
    assert_eq!(a.train.len(), 25);
    assert_eq!(a.train_labels.iter().filter(|&&l| !l).count(), 15);
    assert_eq!(a.test_labels.iter().filter(|&&l| !l).count(), 15);
    assert!(!a.ratio_floored);

    let b = build_split(&ds, "u00", Activity::Seated, &cfg).unwrap();
    let tags = |v: &[&Sample]| v.iter().map(|s| s.origin.tag()).collect::<Vec<_>>();
    assert_eq!(tags(&a.train), tags(&b.train));
    assert_eq!(tags(&a.test), tags(&b.test));

    let c = build_split(&ds, "u00", Activity::Seated, &SplitConfig { seed: 7, ..cfg.clone() }).unwrap();
    assert_ne!(tags(&a.train), tags(&c.train));

    let odd = fake_dataset(6, 7);
    let s = build_split(&odd, "u01", Activity::Seated, &cfg).unwrap();
    assert_eq!(s.train_labels.iter().filter(|&&l| !l).count(), 10);
    assert!(s.ratio_floored);
}

#[test]
fn no_leakage_between_sessions_or_users() {
    let ds = fake_dataset(5, 8);
    for user in ds.users() {
        let s = build_split(&ds, &user, Activity::Seated, &SplitConfig::default()).unwrap();
        for (x, &l) in s.train.iter().zip(&s.train_labels) {
            assert_eq!(x.origin.session_index, 1);
            assert_eq!(x.origin.user_id == user, l);
        }
        for (x, &l) in s.test.iter().zip(&s.test_labels) {
            assert_eq!(x.origin.session_index, 2);
            assert_eq!(x.origin.user_id == user, l);
        }
        let train: HashSet<String> = s.train.iter().map(|x| x.origin.tag()).collect();
        assert_eq!(train.len(), s.train.len(), "impostors drawn without replacement");
        assert!(s.test.iter().all(|x| !train.contains(&x.origin.tag())));
    }
}

#[test]
fn split_errors() {
    let ds = fake_dataset(2, 10);
    assert!(matches!(
        build_split(&ds, "u00", Activity::Seated, &SplitConfig::default()),
        Err(EvalError::NotEnoughImpostors { needed: 15, available: 10, .. })
    ));
    let mut ds = fake_dataset(4, 4);
    ds.sessions.remove(&("u01".to_string(), Activity::Seated, 2));
    assert!(matches!(
        build_split(&ds, "u01", Activity::Seated, &SplitConfig::default()),
        Err(EvalError::MissingSession { session: 2, .. })
    ));
    assert!(matches!(
        build_split(&ds, "u00", Activity::WalkFlat, &SplitConfig::default()),
        Err(EvalError::MissingSession { session: 1, .. })
    ));
}

fn result(user: &str, kind: ClassifierKind, lang: LanguageTag, eer: f64) -> UserResult {
    UserResult {
        user_id: user.into(),
        classifier: kind,
        scope: Scope::Fused,
        activity: Activity::Seated,
        language: lang,
        eer,
        threshold: 0.5,
        train_genuine: 1,
        train_impostor: 1,
        test_genuine: 1,
        test_impostor: 1,
        ratio_floored: false,
    }
}

#[test]
fn report_aggregates() {
    let eers = [0.0, 0.04, 0.06, 0.2, 0.5];
    let mut rs = Vec::new();
    for (k, &e) in eers.iter().enumerate() {
        let lang = if k < 2 { LanguageTag::Native } else { LanguageTag::NonNative };
        rs.push(result(&format!("u{k}"), ClassifierKind::Svm, lang, e));
    }
    let report = EvalReport::from_results(rs);
    let all = report.row(ClassifierKind::Svm, Scope::Fused, Activity::Seated).unwrap();
    assert_eq!(all.users, 5);
    assert_eq!(all.median_eer, 0.06);
    assert_eq!(all.buckets, [2, 1, 1, 1]);
    let native = report.rows.iter().find(|r| r.language == Some(LanguageTag::Native)).unwrap();
    assert_eq!(native.users, 2);
    assert_close(native.median_eer, 0.02, 1e-15, "native median");

    let mut csv = Vec::new();
    report.write_summary_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert!(text.lines().nth(1).unwrap().starts_with("svm,fused,seated,all,5,0.0600,40.0,20.0,20.0,20.0"));
    assert!(report.render_tables().contains("Seated Conversation & 0.06 & -"));
}
