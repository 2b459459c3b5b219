//! Speaker verification from inertial mouth-motion signals: sensor streams,
//! window features, per-user verifiers, evaluation, video-forgery attacks
//! and synthetic cohorts.

pub mod attack;
pub mod evaluation;
pub mod features;
pub mod signal;
pub mod synthgen;
pub mod verifiers;

pub use attack::{AttackReport, LandmarkTrace, QualityLevel, Resolution, SyntheticAccelTrace};
pub use evaluation::{Dataset, EvalReport, LanguageTag, UserThreshold};
pub use features::{FeatureDescriptor, FeatureVector, NormalizerState};
pub use signal::{Activity, RecordingSession, SensorLocation, SensorStream, Window, WindowOrigin};
pub use synthgen::{SessionSpec, SynthConfig, UserProfile};
pub use verifiers::{ClassifierKind, Sample, Scope, TrainConfig, Verifier};
