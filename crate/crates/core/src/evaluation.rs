//! Per-user evaluation: session-1 training against sampled impostors,
//! session-2 testing, EER operating points and population reports.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::FeatureError;
use crate::signal::{session_dir, Activity, RecordingSession, SensorLocation, SignalError};
use crate::verifiers::{train_verifier, ClassifierKind, Sample, Scope, TrainConfig, Verifier, VerifierError};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("user {user} has no session {session} for {activity}")]
    MissingSession { user: String, activity: Activity, session: u8 },
    #[error("user {user}: need {needed} impostor windows, only {available} available")]
    NotEnoughImpostors { user: String, needed: usize, available: usize },
    #[error("score lists must both be non-empty")]
    EmptyScores,
    #[error("evaluation needs at least two users, found {0}")]
    TooFewUsers(usize),
    #[error("unknown user {0}")]
    UnknownUser(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Verifier(#[from] VerifierError),
    #[error("malformed cohort file: {0}")]
    Malformed(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Report dimension only; nothing downstream depends on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LanguageTag {
    Native,
    NonNative,
    #[default]
    Unknown,
}

impl LanguageTag {
    pub fn as_str(self) -> &'static str {
        match self {
            LanguageTag::Native => "native",
            LanguageTag::NonNative => "non_native",
            LanguageTag::Unknown => "unknown",
        }
    }
}

impl fmt::Display for LanguageTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LanguageTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "native" => Ok(LanguageTag::Native),
            "non_native" => Ok(LanguageTag::NonNative),
            "unknown" | "" => Ok(LanguageTag::Unknown),
            other => Err(format!("unknown language tag `{other}`")),
        }
    }
}

/// Name of the optional per-cohort metadata file at the dataset root.
pub const COHORT_FILE: &str = "cohort.csv";

pub type SessionKey = (String, Activity, u8);

/// Windowed samples of a cohort, keyed by (user, activity, session).
#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub languages: BTreeMap<String, LanguageTag>,
    pub sessions: BTreeMap<SessionKey, Vec<Sample>>,
}

impl Dataset {
    pub fn users(&self) -> Vec<String> {
        let mut u: Vec<String> = self.sessions.keys().map(|k| k.0.clone()).collect();
        u.dedup();
        u
    }

    pub fn activities(&self) -> Vec<Activity> {
        let mut a: Vec<Activity> = self.sessions.keys().map(|k| k.1).collect();
        a.sort();
        a.dedup();
        a
    }

    pub fn language(&self, user: &str) -> LanguageTag {
        self.languages.get(user).copied().unwrap_or_default()
    }

    pub fn samples(&self, user: &str, activity: Activity, session: u8) -> Option<&[Sample]> {
        self.sessions.get(&(user.to_string(), activity, session)).map(|v| v.as_slice())
    }

    pub fn insert_session(&mut self, session: &RecordingSession, window: usize, hop: usize) -> Result<(), EvalError> {
        let per_location: [Vec<_>; 3] = [
            session.windows(SensorLocation::BelowChin, window, hop)?,
            session.windows(SensorLocation::UpperLeftCheek, window, hop)?,
            session.windows(SensorLocation::LowerRightCheek, window, hop)?,
        ];
        let samples = Sample::from_aligned(&per_location)?;
        self.sessions.insert((session.user_id.clone(), session.activity, session.session_index), samples);
        Ok(())
    }

    pub fn from_sessions(sessions: &[RecordingSession], window: usize, hop: usize) -> Result<Self, EvalError> {
        let mut ds = Dataset::default();
        for s in sessions {
            ds.insert_session(s, window, hop)?;
        }
        Ok(ds)
    }

    /// Reads `<root>/<user>/<activity>/session<k>/<location>.csv` for the
    /// given activities, plus `cohort.csv` when present.
    pub fn load(root: &Path, activities: &[Activity], window: usize, hop: usize) -> Result<Self, EvalError> {
        let mut ds = Dataset { languages: read_cohort_file(root)?, ..Default::default() };
        let mut users: Vec<String> = std::fs::read_dir(root)?
            .filter_map(|e| e.ok())
            .filter(|e| e.path().is_dir())
            .filter_map(|e| e.file_name().to_str().map(str::to_string))
            .collect();
        users.sort();
        for user in users {
            for &activity in activities {
                for k in 1..=2u8 {
                    let dir = session_dir(root, &user, activity, k);
                    if dir.is_dir() {
                        let session = RecordingSession::load(&dir, &user, activity, k)?;
                        ds.insert_session(&session, window, hop)?;
                    }
                }
            }
        }
        Ok(ds)
    }
}

pub fn read_cohort_file(root: &Path) -> Result<BTreeMap<String, LanguageTag>, EvalError> {
    let path = root.join(COHORT_FILE);
    let mut out = BTreeMap::new();
    if !path.exists() {
        return Ok(out);
    }
    let mut rdr = csv::Reader::from_path(&path).map_err(|e| EvalError::Malformed(e.to_string()))?;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| EvalError::Malformed(e.to_string()))?;
        let user = rec.get(0).ok_or_else(|| EvalError::Malformed("missing user_id".into()))?;
        let lang = rec.get(1).unwrap_or("unknown").parse().map_err(EvalError::Malformed)?;
        out.insert(user.to_string(), lang);
    }
    Ok(out)
}

pub fn write_cohort_file(root: &Path, languages: &BTreeMap<String, LanguageTag>) -> Result<(), EvalError> {
    let mut f = std::fs::File::create(root.join(COHORT_FILE))?;
    writeln!(f, "user_id,language")?;
    for (u, l) in languages {
        writeln!(f, "{u},{l}")?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    pub impostor_ratio: f64,
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig { impostor_ratio: 1.5, seed: 42 }
    }
}

/// Session-1 training set and session-2 test set for one target user.
#[derive(Debug, Clone)]
pub struct EvalSplit<'a> {
    pub target_user: String,
    pub activity: Activity,
    pub train: Vec<&'a Sample>,
    pub train_labels: Vec<bool>,
    pub test: Vec<&'a Sample>,
    pub test_labels: Vec<bool>,
    /// True when `ratio * genuine` was not an integer and was floored.
    pub ratio_floored: bool,
}

/// Stable across runs and platforms, unlike the std hasher.
fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

fn sample_impostors<'a>(
    ds: &'a Dataset,
    target: &str,
    activity: Activity,
    session: u8,
    needed: usize,
    seed: u64,
) -> Result<Vec<&'a Sample>, EvalError> {
    let mut pool: Vec<&Sample> = ds
        .sessions
        .iter()
        .filter(|((u, a, k), _)| u != target && *a == activity && *k == session)
        .flat_map(|(_, v)| v.iter())
        .collect();
    if pool.len() < needed {
        return Err(EvalError::NotEnoughImpostors { user: target.to_string(), needed, available: pool.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ fnv1a(target) ^ ((session as u64) << 56) ^ ((activity as u64) << 48));
    let (chosen, _) = pool.partial_shuffle(&mut rng, needed);
    Ok(chosen.to_vec())
}

pub fn build_split<'a>(
    ds: &'a Dataset,
    target_user: &str,
    activity: Activity,
    cfg: &SplitConfig,
) -> Result<EvalSplit<'a>, EvalError> {
    if !(cfg.impostor_ratio > 0.0) {
        return Err(EvalError::InvalidConfig("impostor_ratio must be positive".into()));
    }
    let others = ds.users().iter().filter(|u| *u != target_user).count();
    if others == 0 {
        return Err(EvalError::TooFewUsers(ds.users().len()));
    }
    let genuine = |k: u8| {
        ds.samples(target_user, activity, k).filter(|s| !s.is_empty()).ok_or_else(|| EvalError::MissingSession {
            user: target_user.to_string(),
            activity,
            session: k,
        })
    };
    let (g1, g2) = (genuine(1)?, genuine(2)?);
    let count = |n: usize| cfg.impostor_ratio * n as f64;
    let ratio_floored = count(g1.len()).fract() != 0.0 || count(g2.len()).fract() != 0.0;
    let i1 = sample_impostors(ds, target_user, activity, 1, count(g1.len()).floor() as usize, cfg.seed)?;
    let i2 = sample_impostors(ds, target_user, activity, 2, count(g2.len()).floor() as usize, cfg.seed)?;

    let join = |g: &'a [Sample], i: Vec<&'a Sample>| {
        let labels: Vec<bool> = std::iter::repeat(true).take(g.len()).chain(std::iter::repeat(false).take(i.len())).collect();
        let samples: Vec<&Sample> = g.iter().chain(i).collect();
        (samples, labels)
    };
    let (train, train_labels) = join(g1, i1);
    let (test, test_labels) = join(g2, i2);
    Ok(EvalSplit { target_user: target_user.to_string(), activity, train, train_labels, test, test_labels, ratio_floored })
}

/// Equal error rate by sweeping every distinct score as a threshold and
/// interpolating linearly between the two thresholds where FAR − FRR
/// changes sign. Accept iff score ≥ θ. Returns (eer, threshold).
pub fn compute_eer(genuine: &[f64], impostor: &[f64]) -> Result<(f64, f64), EvalError> {
    if genuine.is_empty() || impostor.is_empty() {
        return Err(EvalError::EmptyScores);
    }
    let mut g = genuine.to_vec();
    let mut i = impostor.to_vec();
    g.sort_by(f64::total_cmp);
    i.sort_by(f64::total_cmp);
    let mut thresholds: Vec<f64> = g.iter().chain(&i).copied().collect();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();
    let top = *thresholds.last().expect("non-empty");
    // Above every score: nothing accepted.
    thresholds.push(top + 1e-6 * top.abs().max(1.0));

    let rates = |t: f64| {
        let far = (i.len() - i.partition_point(|&s| s < t)) as f64 / i.len() as f64;
        let frr = g.partition_point(|&s| s < t) as f64 / g.len() as f64;
        (far, frr)
    };
    let (mut far0, mut frr0) = rates(thresholds[0]);
    for k in 1..thresholds.len() {
        let (far1, frr1) = rates(thresholds[k]);
        let (d0, d1) = (far0 - frr0, far1 - frr1);
        if d1 <= 0.0 {
            let lambda = if d0 == d1 { 1.0 } else { d0 / (d0 - d1) };
            let eer = far0 + lambda * (far1 - far0);
            let theta = thresholds[k - 1] + lambda * (thresholds[k] - thresholds[k - 1]);
            return Ok((eer, theta));
        }
        far0 = far1;
        frr0 = frr1;
    }
    unreachable!("FAR − FRR reaches −1 at the sentinel threshold")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserThreshold {
    pub user_id: String,
    pub threshold: f64,
    pub eer: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Accept,
    Reject,
}

/// Accept iff the probability reaches the threshold (inclusive).
pub fn threshold_decision(probability: f64, threshold: &UserThreshold) -> Decision {
    if probability >= threshold.threshold {
        Decision::Accept
    } else {
        Decision::Reject
    }
}

pub const THRESHOLD_FILE: &str = "thresholds.csv";

/// Model file of one enrolled user inside a model directory.
pub fn model_file_name(user_id: &str) -> String {
    format!("{user_id}.jwpr")
}

/// `user_id,threshold,eer`; floats use shortest round-trip formatting.
pub fn write_thresholds(path: &Path, thresholds: &[UserThreshold]) -> Result<(), EvalError> {
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "user_id,threshold,eer")?;
    for t in thresholds {
        writeln!(f, "{},{},{}", t.user_id, t.threshold, t.eer)?;
    }
    Ok(())
}

pub fn read_thresholds(path: &Path) -> Result<Vec<UserThreshold>, EvalError> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| EvalError::Malformed(e.to_string()))?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| EvalError::Malformed(e.to_string()))?;
        let field = |i: usize| rec.get(i).ok_or_else(|| EvalError::Malformed(format!("row {} too short", out.len() + 1)));
        let num = |i: usize| -> Result<f64, EvalError> {
            field(i)?.parse().map_err(|_| EvalError::Malformed(format!("bad number in row {}", out.len() + 1)))
        };
        out.push(UserThreshold { user_id: field(0)?.to_string(), threshold: num(1)?, eer: num(2)? });
    }
    Ok(out)
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 })
}

pub const BUCKET_LABELS: [&str; 4] = ["<0.05", "0.05-0.10", "0.10-0.30", ">0.30"];

/// [0, 0.05), [0.05, 0.10), [0.10, 0.30], above 0.30.
pub fn bucket_index(eer: f64) -> usize {
    if eer < 0.05 {
        0
    } else if eer < 0.10 {
        1
    } else if eer <= 0.30 {
        2
    } else {
        3
    }
}

pub fn bucket_counts(eers: &[f64]) -> [usize; 4] {
    let mut c = [0; 4];
    for &e in eers {
        c[bucket_index(e)] += 1;
    }
    c
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub classifiers: Vec<ClassifierKind>,
    pub scopes: Vec<Scope>,
    pub activities: Vec<Activity>,
    pub split: SplitConfig,
    pub train: TrainConfig,
    /// Restrict to these users; empty means everyone.
    pub users: Vec<String>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            classifiers: ClassifierKind::ALL.to_vec(),
            scopes: Scope::ALL.to_vec(),
            activities: vec![Activity::Seated],
            split: SplitConfig::default(),
            train: TrainConfig::default(),
            users: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserResult {
    pub user_id: String,
    pub classifier: ClassifierKind,
    pub scope: Scope,
    pub activity: Activity,
    pub language: LanguageTag,
    pub eer: f64,
    pub threshold: f64,
    pub train_genuine: usize,
    pub train_impostor: usize,
    pub test_genuine: usize,
    pub test_impostor: usize,
    pub ratio_floored: bool,
}

impl UserResult {
    pub fn user_threshold(&self) -> UserThreshold {
        UserThreshold { user_id: self.user_id.clone(), threshold: self.threshold, eer: self.eer }
    }
}

/// A trained verifier with its session-2 operating point.
#[derive(Debug, Clone)]
pub struct TrainedUser {
    pub verifier: Verifier,
    pub result: UserResult,
}

/// Trains on the split's session-1 data and finds the EER on session 2.
pub fn evaluate_user(
    ds: &Dataset,
    user: &str,
    activity: Activity,
    kind: ClassifierKind,
    scope: Scope,
    cfg: &EvalConfig,
) -> Result<TrainedUser, EvalError> {
    let split = build_split(ds, user, activity, &cfg.split)?;
    evaluate_split(ds, &split, kind, scope, &cfg.train)
}

pub fn evaluate_split(
    ds: &Dataset,
    split: &EvalSplit<'_>,
    kind: ClassifierKind,
    scope: Scope,
    train: &TrainConfig,
) -> Result<TrainedUser, EvalError> {
    let verifier = train_verifier(&split.target_user, kind, scope, &split.train, &split.train_labels, train)?;
    let scores = verifier.score_batch(&split.test)?;
    let (mut g, mut i) = (Vec::new(), Vec::new());
    for (s, &l) in scores.iter().zip(&split.test_labels) {
        if l { g.push(*s) } else { i.push(*s) }
    }
    let (eer, threshold) = compute_eer(&g, &i)?;
    let count = |labels: &[bool], v: bool| labels.iter().filter(|&&l| l == v).count();
    let result = UserResult {
        user_id: split.target_user.clone(),
        classifier: kind,
        scope,
        activity: split.activity,
        language: ds.language(&split.target_user),
        eer,
        threshold,
        train_genuine: count(&split.train_labels, true),
        train_impostor: count(&split.train_labels, false),
        test_genuine: count(&split.test_labels, true),
        test_impostor: count(&split.test_labels, false),
        ratio_floored: split.ratio_floored,
    };
    Ok(TrainedUser { verifier, result })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub classifier: ClassifierKind,
    pub scope: Scope,
    pub activity: Activity,
    /// `None` aggregates every user.
    pub language: Option<LanguageTag>,
    pub users: usize,
    pub median_eer: f64,
    pub buckets: [usize; 4],
}

impl ReportRow {
    pub fn bucket_percentages(&self) -> [f64; 4] {
        self.buckets.map(|c| 100.0 * c as f64 / self.users as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EvalReport {
    pub users: Vec<UserResult>,
    pub rows: Vec<ReportRow>,
}

impl EvalReport {
    /// Aggregates per-user results into one row per
    /// (classifier, scope, activity), plus per-language rows when tagged.
    pub fn from_results(mut users: Vec<UserResult>) -> Self {
        users.sort_by(|a, b| {
            (a.classifier, a.activity, a.scope, &a.user_id).cmp(&(b.classifier, b.activity, b.scope, &b.user_id))
        });
        let mut groups: BTreeMap<(ClassifierKind, Activity, Scope, Option<LanguageTag>), Vec<f64>> = BTreeMap::new();
        for u in &users {
            groups.entry((u.classifier, u.activity, u.scope, None)).or_default().push(u.eer);
            if u.language != LanguageTag::Unknown {
                groups.entry((u.classifier, u.activity, u.scope, Some(u.language))).or_default().push(u.eer);
            }
        }
        let rows = groups
            .into_iter()
            .map(|((classifier, activity, scope, language), eers)| ReportRow {
                classifier,
                scope,
                activity,
                language,
                users: eers.len(),
                median_eer: median(&eers).expect("non-empty group"),
                buckets: bucket_counts(&eers),
            })
            .collect();
        EvalReport { users, rows }
    }

    pub fn row(&self, classifier: ClassifierKind, scope: Scope, activity: Activity) -> Option<&ReportRow> {
        self.rows
            .iter()
            .find(|r| r.classifier == classifier && r.scope == scope && r.activity == activity && r.language.is_none())
    }

    pub fn write_users_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "user,classifier,scope,activity,language,eer,threshold,train_genuine,train_impostor,test_genuine,test_impostor")?;
        for u in &self.users {
            writeln!(
                out,
                "{},{},{},{},{},{:.6},{:.6},{},{},{},{}",
                u.user_id,
                u.classifier,
                u.scope,
                u.activity,
                u.language,
                u.eer,
                u.threshold,
                u.train_genuine,
                u.train_impostor,
                u.test_genuine,
                u.test_impostor
            )?;
        }
        Ok(())
    }

    pub fn write_summary_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "classifier,scope,activity,language,users,median_eer,pct_lt_0.05,pct_0.05_0.10,pct_0.10_0.30,pct_gt_0.30")?;
        for r in &self.rows {
            let p = r.bucket_percentages();
            writeln!(
                out,
                "{},{},{},{},{},{:.4},{:.1},{:.1},{:.1},{:.1}",
                r.classifier,
                r.scope,
                r.activity,
                r.language.map_or("all", |l| l.as_str()),
                r.users,
                r.median_eer,
                p[0],
                p[1],
                p[2],
                p[3]
            )?;
        }
        Ok(())
    }

    /// Text tables: median EER per activity (SVM and LSTM columns) and the
    /// user-level EER distribution per location.
    pub fn render_tables(&self) -> String {
        let mut s = String::new();
        let all: Vec<&ReportRow> = self.rows.iter().filter(|r| r.language.is_none()).collect();
        let mut scopes: Vec<Scope> = all.iter().map(|r| r.scope).collect();
        scopes.sort();
        scopes.dedup();
        let mut activities: Vec<Activity> = all.iter().map(|r| r.activity).collect();
        activities.sort();
        activities.dedup();
        let cell = |c: ClassifierKind, sc: Scope, a: Activity| {
            self.row(c, sc, a).map_or("-".to_string(), |r| format!("{:.2}", r.median_eer))
        };

        for &scope in &scopes {
            s.push_str(&format!("Median EER across activities ({scope})\n"));
            s.push_str("Activity & SVM & LSTM\n");
            for &a in &activities {
                s.push_str(&format!(
                    "{} & {} & {}\n",
                    a.display_name(),
                    cell(ClassifierKind::Svm, scope, a),
                    cell(ClassifierKind::Lstm, scope, a)
                ));
            }
            s.push('\n');
        }
        for &a in &activities {
            s.push_str(&format!("User-level EER distribution ({})\n", a.display_name()));
            s.push_str(&format!("Location & Classifier & {} & Median\n", BUCKET_LABELS.join(" & ")));
            for &scope in &scopes {
                for c in ClassifierKind::ALL {
                    if let Some(r) = self.row(c, scope, a) {
                        let p = r.bucket_percentages();
                        let name = match scope {
                            Scope::Fused => "Fused".to_string(),
                            Scope::Location(l) => l.display_name().to_string(),
                        };
                        s.push_str(&format!(
                            "{name} & {} & {:.0}% & {:.0}% & {:.0}% & {:.0}% & {:.2}\n",
                            c.as_str().to_uppercase(),
                            p[0],
                            p[1],
                            p[2],
                            p[3],
                            r.median_eer
                        ));
                    }
                }
            }
            s.push('\n');
        }
        s
    }
}

/// Trains and evaluates every (user, activity, classifier, scope) in the
/// config. Users run in parallel; results come back in a fixed order.
pub fn evaluate_population(ds: &Dataset, cfg: &EvalConfig) -> Result<(EvalReport, Vec<TrainedUser>), EvalError> {
    let users: Vec<String> = if cfg.users.is_empty() { ds.users() } else { cfg.users.clone() };
    if ds.users().len() < 2 {
        return Err(EvalError::TooFewUsers(ds.users().len()));
    }
    for u in &users {
        if !ds.users().contains(u) {
            return Err(EvalError::UnknownUser(u.clone()));
        }
    }
    let jobs: Vec<(String, Activity)> =
        cfg.activities.iter().flat_map(|&a| users.iter().map(move |u| (u.clone(), a))).collect();
    let per_job: Vec<Result<Vec<TrainedUser>, EvalError>> = jobs
        .par_iter()
        .map(|(user, activity)| {
            let split = build_split(ds, user, *activity, &cfg.split)?;
            let mut out = Vec::new();
            for &kind in &cfg.classifiers {
                for &scope in &cfg.scopes {
                    out.push(evaluate_split(ds, &split, kind, scope, &cfg.train)?);
                }
            }
            Ok(out)
        })
        .collect();
    let mut trained = Vec::new();
    for r in per_job {
        trained.extend(r?);
    }
    let report = EvalReport::from_results(trained.iter().map(|t| t.result.clone()).collect());
    Ok((report, trained))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eer_examples() {
        assert_eq!(compute_eer(&[0.9, 0.8, 0.7], &[0.1, 0.2, 0.3]).unwrap(), (0.0, 0.7));
        assert_eq!(compute_eer(&[0.5, 0.5], &[0.5, 0.5]).unwrap().0, 0.5);
        assert!(matches!(compute_eer(&[], &[0.1]), Err(EvalError::EmptyScores)));
    }

    #[test]
    fn boundary_is_inclusive() {
        let t = UserThreshold { user_id: "u".into(), threshold: 0.3, eer: 0.1 };
        assert_eq!(threshold_decision(0.3, &t), Decision::Accept);
        assert_eq!(threshold_decision(1.0, &t), Decision::Accept);
        assert_eq!(threshold_decision(0.0, &t), Decision::Reject);
    }

    #[test]
    fn buckets_and_median() {
        let e = [0.0, 0.049, 0.05, 0.1, 0.3, 0.31];
        assert_eq!(bucket_counts(&e), [2, 1, 2, 1]);
        assert!((median(&e).unwrap() - 0.075).abs() < 1e-15);
        assert_eq!(median(&[0.2]), Some(0.2));
    }

    #[test]
    fn stable_hash() {
        assert_eq!(fnv1a(""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(fnv1a("a"), 0xaf63_dc4c_8601_ec8c);
    }
}
