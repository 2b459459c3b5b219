#![allow(dead_code)]

use std::sync::{Arc, OnceLock};

use jawprint_core::evaluation::{evaluate_user, Dataset, EvalConfig};
use jawprint_core::signal::{segment, Activity, RecordingSession, SensorLocation, SensorSample};
use jawprint_core::synthgen::{generate_cohort, generate_session, SessionSpec, SynthConfig};
use jawprint_core::verifiers::{ClassifierKind, Sample, Scope};
use jawprint_service::Enrollment;

pub struct Fixture {
    pub enrollment: Arc<Enrollment>,
    /// Held-out session of the enrolled user.
    pub genuine: RecordingSession,
    /// Held-out session of someone else.
    pub impostor: RecordingSession,
}

pub fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let profiles = generate_cohort(4, 21, &SynthConfig::default()).unwrap();
        let mut sessions = Vec::new();
        for p in &profiles {
            for k in [1, 2] {
                sessions.push(generate_session(p, &SessionSpec::new(p, 40.0, Activity::Seated, k)).unwrap());
            }
        }
        let ds = Dataset::from_sessions(&sessions, 250, 250).unwrap();
        let user = &profiles[0].user_id;
        let trained = evaluate_user(&ds, user, Activity::Seated, ClassifierKind::Svm, Scope::Fused, &EvalConfig::default()).unwrap();
        Fixture {
            enrollment: Arc::new(Enrollment { verifier: trained.verifier, threshold: trained.result.user_threshold() }),
            genuine: sessions[1].clone(),
            impostor: sessions[3].clone(),
        }
    })
}

pub fn samples(session: &RecordingSession, loc: SensorLocation) -> &[SensorSample] {
    &session.stream(loc).samples
}

/// Offline scores of every non-overlapping window of a recording.
pub fn batch_scores(session: &RecordingSession) -> Vec<f64> {
    let per_loc = SensorLocation::ALL.map(|l| segment(session.stream(l), 250, 250).unwrap());
    let batch = Sample::from_aligned(&per_loc).unwrap();
    let refs: Vec<&Sample> = batch.iter().collect();
    fixture().enrollment.verifier.score_batch(&refs).unwrap()
}
