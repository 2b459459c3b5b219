//! The per-user verifier as used everywhere else: input preparation,
//! column selection, normalization and the trained classifier in one value,
//! so offline evaluation, the attack harness and the live service all score
//! through the same code.

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lstm::{train_lstm, LstmConfig, LstmModel};
use super::svm::{train_svm, SvmConfig, SvmModel};
use super::VerifierError;
use crate::features::{
    compute_window_features_at, relieff_rank, FeatureDescriptor, FeatureError, NormalizerState, SelectionConfig,
    FEATURES_PER_WINDOW,
};
use crate::signal::{SensorLocation, Window, WindowOrigin, NOMINAL_RATE_HZ};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierKind {
    Svm,
    Lstm,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 2] = [ClassifierKind::Svm, ClassifierKind::Lstm];

    pub fn as_str(self) -> &'static str {
        match self {
            ClassifierKind::Svm => "svm",
            ClassifierKind::Lstm => "lstm",
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClassifierKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "svm" => Ok(ClassifierKind::Svm),
            "lstm" => Ok(ClassifierKind::Lstm),
            other => Err(format!("unknown classifier `{other}` (expected svm or lstm)")),
        }
    }
}

/// Which sensor locations a verifier sees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    Location(SensorLocation),
    Fused,
}

impl Scope {
    /// Per-location scopes in fixed order, then fused.
    pub const ALL: [Scope; 4] = [
        Scope::Location(SensorLocation::BelowChin),
        Scope::Location(SensorLocation::UpperLeftCheek),
        Scope::Location(SensorLocation::LowerRightCheek),
        Scope::Fused,
    ];

    pub fn locations(self) -> Vec<SensorLocation> {
        match self {
            Scope::Fused => SensorLocation::ALL.to_vec(),
            Scope::Location(l) => vec![l],
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Scope::Fused => "fused",
            Scope::Location(l) => l.file_stem(),
        }
    }
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Scope {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("fused") {
            return Ok(Scope::Fused);
        }
        s.parse().map(Scope::Location)
    }
}

/// What the recurrent verifier consumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LstmInput {
    /// The raw window, one row per sample, three axes per location.
    Raw,
    /// Window cut into `segments` equal chunks, one feature vector per chunk.
    FeatureSequence { segments: usize },
}

impl Default for LstmInput {
    fn default() -> Self {
        LstmInput::Raw
    }
}

/// One scoring unit: time-aligned windows of all three locations plus their
/// 162-column feature vectors, indexed by `SensorLocation::index`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub origin: WindowOrigin,
    pub raw: [Vec<[f64; 3]>; 3],
    pub features: [Vec<f64>; 3],
}

impl Sample {
    /// `windows` in any order; all three locations must be present with
    /// equal lengths.
    pub fn from_windows(windows: &[Window]) -> Result<Sample, FeatureError> {
        let mut slots: [Option<&Window>; 3] = [None; 3];
        for w in windows {
            slots[w.location.index()] = Some(w);
        }
        let mut raw: [Vec<[f64; 3]>; 3] = Default::default();
        let mut features: [Vec<f64>; 3] = Default::default();
        for loc in SensorLocation::ALL {
            let w = slots[loc.index()].ok_or(FeatureError::MissingLocation(loc))?;
            if w.len() != windows[0].len() {
                return Err(FeatureError::DimensionMismatch { expected: windows[0].len(), got: w.len() });
            }
            features[loc.index()] = compute_window_features_at(w, NOMINAL_RATE_HZ)?.values;
            raw[loc.index()] = w.data.clone();
        }
        Ok(Sample { origin: windows[0].origin.clone(), raw, features })
    }

    /// Only the scope's locations are filled; the others stay empty, which
    /// is all a verifier of that scope reads.
    pub fn from_scope_windows(windows: &[Window], scope: Scope) -> Result<Sample, FeatureError> {
        let mut raw: [Vec<[f64; 3]>; 3] = Default::default();
        let mut features: [Vec<f64>; 3] = Default::default();
        let first = windows.first().ok_or(FeatureError::MissingLocation(scope.locations()[0]))?;
        for loc in scope.locations() {
            let w = windows.iter().find(|w| w.location == loc).ok_or(FeatureError::MissingLocation(loc))?;
            if w.len() != first.len() {
                return Err(FeatureError::DimensionMismatch { expected: first.len(), got: w.len() });
            }
            features[loc.index()] = compute_window_features_at(w, NOMINAL_RATE_HZ)?.values;
            raw[loc.index()] = w.data.clone();
        }
        Ok(Sample { origin: first.origin.clone(), raw, features })
    }

    /// Builds samples from per-location window lists aligned by position.
    pub fn from_aligned(per_location: &[Vec<Window>; 3]) -> Result<Vec<Sample>, FeatureError> {
        let n = per_location.iter().map(|v| v.len()).min().unwrap_or(0);
        (0..n)
            .into_par_iter()
            .map(|i| Sample::from_windows(&[per_location[0][i].clone(), per_location[1][i].clone(), per_location[2][i].clone()]))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.raw[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw[0].is_empty()
    }

    /// Feature vector of the scope, locations in fixed order.
    pub fn feature_vector(&self, scope: Scope) -> Vec<f64> {
        scope.locations().iter().flat_map(|l| self.features[l.index()].iter().copied()).collect()
    }

    /// T x 3L matrix, location-major then x, y, z.
    pub fn raw_sequence(&self, scope: Scope) -> Array2<f64> {
        let locs = scope.locations();
        Array2::from_shape_fn((self.len(), 3 * locs.len()), |(t, c)| self.raw[locs[c / 3].index()][t][c % 3])
    }

    pub fn feature_sequence(&self, scope: Scope, segments: usize) -> Result<Array2<f64>, VerifierError> {
        let locs = scope.locations();
        let seg = self.len() / segments.max(1);
        if seg < 2 {
            return Err(VerifierError::ShapeMismatch(format!("{} samples cannot form {segments} segments", self.len())));
        }
        let width = FEATURES_PER_WINDOW * locs.len();
        let mut out = Array2::zeros((segments, width));
        for s in 0..segments {
            let mut row = Vec::with_capacity(width);
            for l in &locs {
                let w = Window {
                    location: *l,
                    data: self.raw[l.index()][s * seg..(s + 1) * seg].to_vec(),
                    origin: self.origin.clone(),
                };
                row.extend(compute_window_features_at(&w, NOMINAL_RATE_HZ)?.values);
            }
            out.row_mut(s).assign(&ndarray::ArrayView1::from(&row));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainConfig {
    pub svm: SvmConfig,
    pub lstm: LstmConfig,
    pub selection: SelectionConfig,
    pub lstm_input: LstmInput,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum VerifierModel {
    Svm {
        /// Selected columns of the scope's feature vector, best first.
        columns: Vec<FeatureDescriptor>,
        indices: Vec<usize>,
        model: SvmModel,
    },
    Lstm {
        input: LstmInput,
        model: LstmModel,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verifier {
    pub user_id: String,
    pub scope: Scope,
    pub model: VerifierModel,
}

impl Verifier {
    pub fn kind(&self) -> ClassifierKind {
        match self.model {
            VerifierModel::Svm { .. } => ClassifierKind::Svm,
            VerifierModel::Lstm { .. } => ClassifierKind::Lstm,
        }
    }

    pub fn score(&self, sample: &Sample) -> Result<f64, VerifierError> {
        Ok(self.score_batch(std::slice::from_ref(&sample))?[0])
    }

    /// Probabilities in [0, 1]. Each sample is scored on its own so a
    /// score never depends on what else is in the batch.
    pub fn score_batch(&self, samples: &[&Sample]) -> Result<Vec<f64>, VerifierError> {
        match &self.model {
            VerifierModel::Svm { indices, model, .. } => samples
                .iter()
                .map(|s| {
                    let full = s.feature_vector(self.scope);
                    let picked = pick(&full, indices)?;
                    model.score(&model.normalizer.apply_row(&picked)?)
                })
                .collect(),
            VerifierModel::Lstm { input, model } => samples
                .iter()
                .map(|s| model.score(&lstm_input(s, self.scope, *input)?))
                .collect(),
        }
    }
}

fn pick(full: &[f64], indices: &[usize]) -> Result<Vec<f64>, VerifierError> {
    indices
        .iter()
        .map(|&i| full.get(i).copied().ok_or(VerifierError::DimensionMismatch { expected: i + 1, got: full.len() }))
        .collect()
}

fn lstm_input(s: &Sample, scope: Scope, input: LstmInput) -> Result<Array2<f64>, VerifierError> {
    match input {
        LstmInput::Raw => Ok(s.raw_sequence(scope)),
        LstmInput::FeatureSequence { segments } => s.feature_sequence(scope, segments),
    }
}

/// Trains one user's verifier. `labels[i]` is true for the user's own windows.
pub fn train_verifier(
    user_id: &str,
    kind: ClassifierKind,
    scope: Scope,
    samples: &[&Sample],
    labels: &[bool],
    cfg: &TrainConfig,
) -> Result<Verifier, VerifierError> {
    if samples.len() != labels.len() {
        return Err(VerifierError::ShapeMismatch(format!("{} samples, {} labels", samples.len(), labels.len())));
    }
    if labels.iter().all(|&y| y) || labels.iter().all(|&y| !y) {
        return Err(VerifierError::SingleClass);
    }
    let model = match kind {
        ClassifierKind::Svm => {
            let rows: Vec<Vec<f64>> = samples.iter().map(|s| s.feature_vector(scope)).collect();
            let columns: Vec<FeatureDescriptor> =
                scope.locations().into_iter().flat_map(crate::features::window_columns).collect();
            let classes: Vec<usize> = labels.iter().map(|&y| y as usize).collect();
            let ranked = relieff_rank(&rows, &classes, &columns, &cfg.selection)?;
            let k = cfg.selection.k_top.min(columns.len());
            let indices = ranked.top_columns(k)?;
            let picked: Vec<Vec<f64>> = rows.iter().map(|r| pick(r, &indices)).collect::<Result<_, _>>()?;
            let normalizer = NormalizerState::fit_rows(&picked)?;
            let normalized: Vec<Vec<f64>> = picked.iter().map(|r| normalizer.apply_row(r)).collect::<Result<_, _>>()?;
            let model = train_svm(&normalized, labels, normalizer, &cfg.svm)?;
            VerifierModel::Svm { columns: indices.iter().map(|&i| columns[i]).collect(), indices, model }
        }
        ClassifierKind::Lstm => {
            let seqs: Vec<Array2<f64>> =
                samples.iter().map(|s| lstm_input(s, scope, cfg.lstm_input)).collect::<Result<_, _>>()?;
            let (model, _) = train_lstm(&seqs, labels, &cfg.lstm)?;
            VerifierModel::Lstm { input: cfg.lstm_input, model }
        }
    };
    Ok(Verifier { user_id: user_id.to_string(), scope, model })
}
