//! Video-driven impersonation: landmark trajectories from a victim's video
//! are degraded, differentiated twice into acceleration and replayed
//! against that victim's verifier.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evaluation::{threshold_decision, Decision, UserThreshold};
use crate::features::FeatureError;
use crate::signal::{
    resample, segment, SensorLocation, SensorSample, SensorStream, SignalError, DEFAULT_WINDOW, NOMINAL_RATE_HZ,
};
use crate::verifiers::{Sample, Verifier, VerifierError};

/// Standard gravity, m/s² per g.
pub const STANDARD_GRAVITY: f64 = 9.80665;

/// Metres per normalized image unit unless a trace says otherwise.
pub const DEFAULT_SCALE: f64 = 0.20;

#[derive(Debug, Error)]
pub enum AttackError {
    #[error("malformed landmark row {0}")]
    MalformedRow(usize),
    #[error("need at least 3 frames, got {0}")]
    TooFewFrames(usize),
    #[error("master traces must be 1920x1080 at 60 fps, got {width}x{height} at {fps} fps")]
    NotMaster { fps: u32, width: u32, height: u32 },
    #[error("cannot decimate {from} fps to {to} fps")]
    NonIntegerDecimation { from: u32, to: u32 },
    #[error("cannot upscale {from} to {to}")]
    Upscaling { from: Resolution, to: Resolution },
    #[error("trace is for {found}, expected {expected}")]
    LocationMismatch { expected: SensorLocation, found: SensorLocation },
    #[error("bad metadata: {0}")]
    Meta(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Verifier(#[from] VerifierError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Resolution {
    pub width: u32,
    pub height: u32,
}

impl Resolution {
    pub const P1080: Resolution = Resolution { width: 1920, height: 1080 };
    pub const P720: Resolution = Resolution { width: 1280, height: 720 };

    pub fn label(self) -> String {
        format!("{}p", self.height)
    }
}

impl fmt::Display for Resolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.width, self.height)
    }
}

impl FromStr for Resolution {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "1080p" | "1920x1080" => Ok(Resolution::P1080),
            "720p" | "1280x720" => Ok(Resolution::P720),
            other => Err(format!("unknown resolution `{other}` (expected 1080p or 720p)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct QualityLevel {
    pub fps: u32,
    pub resolution: Resolution,
}

impl QualityLevel {
    pub const MASTER: QualityLevel = QualityLevel { fps: 60, resolution: Resolution::P1080 };

    pub const ALL: [QualityLevel; 6] = [
        QualityLevel { fps: 60, resolution: Resolution::P1080 },
        QualityLevel { fps: 30, resolution: Resolution::P1080 },
        QualityLevel { fps: 15, resolution: Resolution::P1080 },
        QualityLevel { fps: 60, resolution: Resolution::P720 },
        QualityLevel { fps: 30, resolution: Resolution::P720 },
        QualityLevel { fps: 15, resolution: Resolution::P720 },
    ];
}

impl fmt::Display for QualityLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.resolution.label(), self.fps)
    }
}

/// One landmark's trajectory: x and y normalized to [0, 1] image
/// coordinates, z an estimated relative depth.
#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkTrace {
    pub location: SensorLocation,
    pub fps: u32,
    pub resolution: Resolution,
    /// Metres per normalized unit, shared by all three axes.
    pub scale: f64,
    pub points: Vec<[f64; 3]>,
}

impl LandmarkTrace {
    pub fn new(
        location: SensorLocation,
        fps: u32,
        resolution: Resolution,
        scale: f64,
        points: Vec<[f64; 3]>,
    ) -> Result<Self, AttackError> {
        if fps == 0 {
            return Err(AttackError::InvalidParameter("fps must be positive".into()));
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(AttackError::InvalidParameter(format!("scale {scale}")));
        }
        if points.len() < 3 {
            return Err(AttackError::TooFewFrames(points.len()));
        }
        Ok(LandmarkTrace { location, fps, resolution, scale, points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn quality(&self) -> QualityLevel {
        QualityLevel { fps: self.fps, resolution: self.resolution }
    }

    pub fn is_master(&self) -> bool {
        self.quality() == QualityLevel::MASTER
    }

    /// Writes `<path>` as CSV and `<path minus extension>.meta` alongside.
    pub fn save(&self, path: &Path) -> Result<(), AttackError> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "frame,t,x,y,z")?;
        for (k, p) in self.points.iter().enumerate() {
            writeln!(out, "{k},{:.6},{},{},{}", k as f64 / self.fps as f64, p[0], p[1], p[2])?;
        }
        out.flush()?;
        let meta = TraceMeta {
            fps: self.fps,
            width: self.resolution.width,
            height: self.resolution.height,
            location: self.location,
            scale: self.scale,
        };
        let text = toml::to_string(&meta).map_err(|e| AttackError::Meta(e.to_string()))?;
        std::fs::write(meta_path(path), text)?;
        Ok(())
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct TraceMeta {
    fps: u32,
    width: u32,
    height: u32,
    location: SensorLocation,
    #[serde(default = "default_scale")]
    scale: f64,
}

fn default_scale() -> f64 {
    DEFAULT_SCALE
}

pub fn meta_path(csv: &Path) -> PathBuf {
    csv.with_extension("meta")
}

/// Landmark file name for one location, e.g. `chin.landmarks.csv`.
pub fn trace_file_name(location: SensorLocation) -> String {
    format!("{}.landmarks.csv", location.file_stem())
}

/// Reads a master trace and its sidecar. Non-master tags are rejected:
/// every other quality level is derived from the master.
pub fn load_landmark_trace(path: &Path, location: SensorLocation) -> Result<LandmarkTrace, AttackError> {
    let meta_text = std::fs::read_to_string(meta_path(path))?;
    let meta: TraceMeta = toml::from_str(&meta_text).map_err(|e| AttackError::Meta(e.to_string()))?;
    if meta.location != location {
        return Err(AttackError::LocationMismatch { expected: location, found: meta.location });
    }
    let resolution = Resolution { width: meta.width, height: meta.height };
    if meta.fps != 60 || resolution != Resolution::P1080 {
        return Err(AttackError::NotMaster { fps: meta.fps, width: meta.width, height: meta.height });
    }
    let points = parse_landmark_csv(std::fs::File::open(path)?)?;
    LandmarkTrace::new(location, meta.fps, resolution, meta.scale, points)
}

/// Parses `frame,t,x,y,z` rows. Row numbers in errors are 1-based data rows.
pub fn parse_landmark_csv<R: std::io::Read>(reader: R) -> Result<Vec<[f64; 3]>, AttackError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let mut points = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|_| AttackError::MalformedRow(row))?;
        if rec.len() != 5 {
            return Err(AttackError::MalformedRow(row));
        }
        let mut p = [0.0f64; 3];
        for (k, v) in p.iter_mut().enumerate() {
            *v = rec[k + 2].parse().map_err(|_| AttackError::MalformedRow(row))?;
            if !v.is_finite() {
                return Err(AttackError::MalformedRow(row));
            }
        }
        points.push(p);
    }
    Ok(points)
}

/// Keeps every `fps / target_fps`-th frame starting at frame 0.
pub fn decimate_fps(trace: &LandmarkTrace, target_fps: u32) -> Result<LandmarkTrace, AttackError> {
    if target_fps == 0 || target_fps > trace.fps || trace.fps % target_fps != 0 {
        return Err(AttackError::NonIntegerDecimation { from: trace.fps, to: target_fps });
    }
    let stride = (trace.fps / target_fps) as usize;
    let points: Vec<[f64; 3]> = trace.points.iter().step_by(stride).copied().collect();
    LandmarkTrace::new(trace.location, target_fps, trace.resolution, trace.scale, points)
}

/// Snaps x to the nearest 1/width grid point and y to 1/height; z is a
/// model estimate and is left alone.
pub fn quantize_resolution(trace: &LandmarkTrace, resolution: Resolution) -> Result<LandmarkTrace, AttackError> {
    if resolution.width > trace.resolution.width || resolution.height > trace.resolution.height {
        return Err(AttackError::Upscaling { from: trace.resolution, to: resolution });
    }
    let (w, h) = (resolution.width as f64, resolution.height as f64);
    let points = trace.points.iter().map(|p| [(p[0] * w).round() / w, (p[1] * h).round() / h, p[2]]).collect();
    LandmarkTrace::new(trace.location, trace.fps, resolution, trace.scale, points)
}

pub fn degrade(master: &LandmarkTrace, quality: QualityLevel) -> Result<LandmarkTrace, AttackError> {
    quantize_resolution(&decimate_fps(master, quality.fps)?, quality.resolution)
}

/// Acceleration forged from a landmark trace, m/s², one row per interior frame.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticAccelTrace {
    pub location: SensorLocation,
    pub rate: f64,
    pub samples: Vec<[f64; 3]>,
}

impl SyntheticAccelTrace {
    /// As a sensor stream in g, timestamps k / rate.
    pub fn to_stream(&self) -> Result<SensorStream, AttackError> {
        let samples = self
            .samples
            .iter()
            .enumerate()
            .map(|(k, a)| {
                SensorSample::new(
                    k as f64 / self.rate,
                    a[0] / STANDARD_GRAVITY,
                    a[1] / STANDARD_GRAVITY,
                    a[2] / STANDARD_GRAVITY,
                )
            })
            .collect();
        Ok(SensorStream::new(self.location, self.rate, samples)?)
    }
}

/// aₜ = scale · (pₜ₊₁ − 2pₜ + pₜ₋₁) · fps².
pub fn synthesize_accel(trace: &LandmarkTrace) -> Result<SyntheticAccelTrace, AttackError> {
    if trace.points.len() < 3 {
        return Err(AttackError::TooFewFrames(trace.points.len()));
    }
    let k = trace.scale * (trace.fps as f64).powi(2);
    let samples = trace
        .points
        .windows(3)
        .map(|w| std::array::from_fn(|i| k * (w[2][i] - 2.0 * w[1][i] + w[0][i])))
        .collect();
    Ok(SyntheticAccelTrace { location: trace.location, rate: trace.fps as f64, samples })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackConfig {
    pub window: usize,
    pub hop: usize,
    pub target_rate: f64,
}

impl Default for AttackConfig {
    fn default() -> Self {
        AttackConfig { window: DEFAULT_WINDOW, hop: DEFAULT_WINDOW, target_rate: NOMINAL_RATE_HZ }
    }
}

/// Degrades the three master traces, synthesizes acceleration, brings it to
/// the verifier's rate and cuts aligned windows.
pub fn forge_samples(
    masters: &[LandmarkTrace; 3],
    quality: QualityLevel,
    cfg: &AttackConfig,
) -> Result<Vec<Sample>, AttackError> {
    let mut per_location: [Vec<crate::signal::Window>; 3] = Default::default();
    for (slot, loc) in SensorLocation::ALL.iter().enumerate() {
        let master = &masters[slot];
        if master.location != *loc {
            return Err(AttackError::LocationMismatch { expected: *loc, found: master.location });
        }
        let accel = synthesize_accel(&degrade(master, quality)?)?;
        let stream = resample(&accel.to_stream()?, cfg.target_rate)?;
        per_location[slot] = segment(&stream, cfg.window, cfg.hop)?;
    }
    Ok(Sample::from_aligned(&per_location)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackRow {
    pub user_id: String,
    pub classifier: crate::verifiers::ClassifierKind,
    pub quality: QualityLevel,
    pub windows: usize,
    pub false_accepts: usize,
    pub far: f64,
    pub scores: Vec<f64>,
}

/// Scores forged windows against one victim's verifier at its threshold.
pub fn run_attack(
    masters: &[LandmarkTrace; 3],
    verifier: &Verifier,
    threshold: &UserThreshold,
    quality: QualityLevel,
    cfg: &AttackConfig,
) -> Result<AttackRow, AttackError> {
    let samples = forge_samples(masters, quality, cfg)?;
    let refs: Vec<&Sample> = samples.iter().collect();
    let scores = verifier.score_batch(&refs)?;
    let false_accepts = scores.iter().filter(|&&s| threshold_decision(s, threshold) == Decision::Accept).count();
    Ok(AttackRow {
        user_id: verifier.user_id.clone(),
        classifier: verifier.kind(),
        quality,
        windows: scores.len(),
        false_accepts,
        far: if scores.is_empty() { 0.0 } else { false_accepts as f64 / scores.len() as f64 },
        scores,
    })
}

/// One victim: master traces plus every verifier trained for them.
#[derive(Debug, Clone)]
pub struct Victim {
    pub masters: [LandmarkTrace; 3],
    pub verifiers: Vec<(Verifier, UserThreshold)>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AttackReport {
    pub rows: Vec<AttackRow>,
}

impl AttackReport {
    /// Pooled false-accept rate per quality level, in the order of `ALL`.
    pub fn far_by_quality(&self) -> Vec<(QualityLevel, usize, usize, f64)> {
        QualityLevel::ALL
            .iter()
            .filter_map(|q| {
                let rows: Vec<&AttackRow> = self.rows.iter().filter(|r| r.quality == *q).collect();
                if rows.is_empty() {
                    return None;
                }
                let w: usize = rows.iter().map(|r| r.windows).sum();
                let fa: usize = rows.iter().map(|r| r.false_accepts).sum();
                Some((*q, w, fa, if w == 0 { 0.0 } else { fa as f64 / w as f64 }))
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "user,classifier,fps,resolution,windows,false_accepts,far")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{:.6}",
                r.user_id,
                r.classifier,
                r.quality.fps,
                r.quality.resolution.label(),
                r.windows,
                r.false_accepts,
                r.far
            )?;
        }
        Ok(())
    }

    pub fn render_table(&self) -> String {
        let mut s = String::from("Quality & Windows & False accepts & FAR\n");
        for (q, w, fa, far) in self.far_by_quality() {
            s.push_str(&format!("{q} & {w} & {fa} & {:.1}%\n", 100.0 * far));
        }
        s
    }
}

/// Every victim × verifier × quality level. Rows come back ordered by
/// victim, verifier, then quality.
pub fn run_attack_suite(
    victims: &[Victim],
    qualities: &[QualityLevel],
    cfg: &AttackConfig,
) -> Result<AttackReport, AttackError> {
    let jobs: Vec<(&Victim, &(Verifier, UserThreshold), QualityLevel)> = victims
        .iter()
        .flat_map(|v| v.verifiers.iter().flat_map(move |vt| qualities.iter().map(move |&q| (v, vt, q))))
        .collect();
    let rows = jobs
        .par_iter()
        .map(|(v, (verifier, threshold), q)| run_attack(&v.masters, verifier, threshold, *q, cfg))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(AttackReport { rows })
}
