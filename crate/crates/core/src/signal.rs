//! Raw inertial streams: ingestion, validation, segmentation and resampling.
//!
//! Everything here is a pure function over immutable values. Timestamps come
//! from the input file; the nominal rate carried by a stream is metadata used
//! for validation and never to re-derive sample times.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Nominal sensor rate of the head-worn accelerometers.
pub const NOMINAL_RATE_HZ: f64 = 100.0;

/// Default window length in samples (about 2.5 s at 100 Hz).
pub const DEFAULT_WINDOW: usize = 250;

#[derive(Debug, Error)]
pub enum SignalError {
    #[error("missing file: {0}")]
    MissingFile(String),
    #[error("malformed row {0}")]
    MalformedRow(usize),
    #[error("non-monotone timestamp at row {0}")]
    NonMonotoneTimestamp(usize),
    #[error("stream too short: have {have} samples, need {need}")]
    StreamTooShort { have: usize, need: usize },
    #[error("median sample gap {gap:.6}s is inconsistent with nominal rate {rate} Hz")]
    RateMismatch { gap: f64, rate: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("missing location {0} in session")]
    MissingLocation(SensorLocation),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Where on the lower face a sensor is strapped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensorLocation {
    BelowChin,
    UpperLeftCheek,
    LowerRightCheek,
}

impl SensorLocation {
    /// Fixed fusion order.
    pub const ALL: [SensorLocation; 3] = [
        SensorLocation::BelowChin,
        SensorLocation::UpperLeftCheek,
        SensorLocation::LowerRightCheek,
    ];

    /// File stem used in the dataset layout.
    pub fn file_stem(self) -> &'static str {
        match self {
            SensorLocation::BelowChin => "chin",
            SensorLocation::UpperLeftCheek => "upper_left_cheek",
            SensorLocation::LowerRightCheek => "lower_right_cheek",
        }
    }

    /// Short label used in ranking tables (C, ULC, LRC).
    pub fn short_label(self) -> &'static str {
        match self {
            SensorLocation::BelowChin => "C",
            SensorLocation::UpperLeftCheek => "ULC",
            SensorLocation::LowerRightCheek => "LRC",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            SensorLocation::BelowChin => "Below the Chin",
            SensorLocation::UpperLeftCheek => "Upper Left Cheek",
            SensorLocation::LowerRightCheek => "Lower Right Cheek",
        }
    }

    pub fn index(self) -> usize {
        match self {
            SensorLocation::BelowChin => 0,
            SensorLocation::UpperLeftCheek => 1,
            SensorLocation::LowerRightCheek => 2,
        }
    }
}

impl fmt::Display for SensorLocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.file_stem())
    }
}

impl FromStr for SensorLocation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "chin" | "below_chin" | "c" => Ok(SensorLocation::BelowChin),
            "upper_left_cheek" | "ulc" => Ok(SensorLocation::UpperLeftCheek),
            "lower_right_cheek" | "lrc" => Ok(SensorLocation::LowerRightCheek),
            other => Err(format!("unknown sensor location `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activity {
    Seated,
    WalkFlat,
    WalkStairs,
}

impl Activity {
    pub const ALL: [Activity; 3] = [Activity::Seated, Activity::WalkFlat, Activity::WalkStairs];

    pub fn dir_name(self) -> &'static str {
        match self {
            Activity::Seated => "seated",
            Activity::WalkFlat => "walk_flat",
            Activity::WalkStairs => "walk_stairs",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            Activity::Seated => "Seated Conversation",
            Activity::WalkFlat => "Walking on a Flat Surface",
            Activity::WalkStairs => "Walking Upstairs",
        }
    }
}

impl fmt::Display for Activity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.dir_name())
    }
}

impl FromStr for Activity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "seated" => Ok(Activity::Seated),
            "walk_flat" | "walkflat" | "flat" => Ok(Activity::WalkFlat),
            "walk_stairs" | "walkstairs" | "stairs" => Ok(Activity::WalkStairs),
            other => Err(format!("unknown activity `{other}`")),
        }
    }
}

/// One tri-axial accelerometer reading, acceleration in g.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorSample {
    pub t: f64,
    pub ax: f64,
    pub ay: f64,
    pub az: f64,
}

impl SensorSample {
    pub fn new(t: f64, ax: f64, ay: f64, az: f64) -> Self {
        SensorSample { t, ax, ay, az }
    }

    pub fn axes(&self) -> [f64; 3] {
        [self.ax, self.ay, self.az]
    }

    fn is_finite(&self) -> bool {
        self.t.is_finite() && self.ax.is_finite() && self.ay.is_finite() && self.az.is_finite()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensorStream {
    pub location: SensorLocation,
    pub rate: f64,
    pub samples: Vec<SensorSample>,
}

impl SensorStream {
    /// Builds a stream after checking finiteness, strictly increasing
    /// timestamps and consistency of the median gap with `rate` (within 20%).
    /// Row numbers in errors are 1-based sample indices.
    pub fn new(
        location: SensorLocation,
        rate: f64,
        samples: Vec<SensorSample>,
    ) -> Result<Self, SignalError> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(SignalError::InvalidParameter(format!("rate {rate}")));
        }
        for (i, s) in samples.iter().enumerate() {
            if !s.is_finite() {
                return Err(SignalError::MalformedRow(i + 1));
            }
            if i > 0 && s.t <= samples[i - 1].t {
                return Err(SignalError::NonMonotoneTimestamp(i + 1));
            }
        }
        let stream = SensorStream { location, rate, samples };
        if let Some(gap) = stream.median_gap() {
            let nominal = 1.0 / rate;
            if (gap - nominal).abs() > 0.2 * nominal {
                return Err(SignalError::RateMismatch { gap, rate });
            }
        }
        Ok(stream)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Median inter-sample gap, `None` for fewer than two samples.
    pub fn median_gap(&self) -> Option<f64> {
        if self.samples.len() < 2 {
            return None;
        }
        let mut gaps: Vec<f64> = self.samples.windows(2).map(|w| w[1].t - w[0].t).collect();
        gaps.sort_by(f64::total_cmp);
        let n = gaps.len();
        Some(if n % 2 == 1 {
            gaps[n / 2]
        } else {
            0.5 * (gaps[n / 2 - 1] + gaps[n / 2])
        })
    }

    /// Covered duration: first-to-last span plus one median gap.
    pub fn duration(&self) -> f64 {
        match (self.samples.first(), self.samples.last(), self.median_gap()) {
            (Some(a), Some(b), Some(g)) => b.t - a.t + g,
            _ => 0.0,
        }
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), SignalError> {
        use std::io::Write;
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "t,ax,ay,az")?;
        for s in &self.samples {
            writeln!(out, "{:.4},{},{},{}", s.t, s.ax, s.ay, s.az)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Identifies where a window came from.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct WindowOrigin {
    pub user_id: String,
    pub activity: Option<Activity>,
    /// 1 or 2 for recorded sessions, 0 for untagged streams.
    pub session_index: u8,
    pub window_index: usize,
}

impl WindowOrigin {
    pub fn untagged(window_index: usize) -> Self {
        WindowOrigin { user_id: String::new(), activity: None, session_index: 0, window_index }
    }

    /// `user/activity/session/window_index`, the row tag of feature files.
    pub fn tag(&self) -> String {
        let activity = self.activity.map(|a| a.dir_name()).unwrap_or("-");
        format!("{}/{}/{}/{}", self.user_id, activity, self.session_index, self.window_index)
    }
}

/// A fixed-length slice of one stream, rows are (ax, ay, az).
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub location: SensorLocation,
    pub data: Vec<[f64; 3]>,
    pub origin: WindowOrigin,
}

impl Window {
    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn axis(&self, axis: usize) -> Vec<f64> {
        self.data.iter().map(|r| r[axis]).collect()
    }
}

/// Parses a sensor CSV (`t,ax,ay,az`, header optional) into a validated stream
/// at the nominal 100 Hz rate.
pub fn load_stream(path: &Path, location: SensorLocation) -> Result<SensorStream, SignalError> {
    load_stream_with_rate(path, location, NOMINAL_RATE_HZ)
}

pub fn load_stream_with_rate(
    path: &Path,
    location: SensorLocation,
    rate: f64,
) -> Result<SensorStream, SignalError> {
    if !path.is_file() {
        return Err(SignalError::MissingFile(path.display().to_string()));
    }
    let file = std::fs::File::open(path)?;
    parse_stream(file, location, rate)
}

pub fn parse_stream<R: std::io::Read>(
    reader: R,
    location: SensorLocation,
    rate: f64,
) -> Result<SensorStream, SignalError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let mut samples = Vec::new();
    let mut row = 0usize;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|_| SignalError::MalformedRow(row + 1))?;
        if i == 0 && rec.get(0).is_some_and(|f| f.eq_ignore_ascii_case("t")) {
            continue;
        }
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        row += 1;
        if rec.len() != 4 {
            return Err(SignalError::MalformedRow(row));
        }
        let mut v = [0.0; 4];
        for (slot, field) in v.iter_mut().zip(rec.iter()) {
            *slot = field.parse::<f64>().map_err(|_| SignalError::MalformedRow(row))?;
        }
        let s = SensorSample::new(v[0], v[1], v[2], v[3]);
        if !s.is_finite() {
            return Err(SignalError::MalformedRow(row));
        }
        if let Some(prev) = samples.last() {
            let prev: &SensorSample = prev;
            if s.t <= prev.t {
                return Err(SignalError::NonMonotoneTimestamp(row));
            }
        }
        samples.push(s);
    }
    SensorStream::new(location, rate, samples)
}

/// Cuts a stream into windows of `length` samples every `hop` samples.
/// The trailing remainder shorter than `length` is discarded.
pub fn segment(stream: &SensorStream, length: usize, hop: usize) -> Result<Vec<Window>, SignalError> {
    if length < 2 {
        return Err(SignalError::InvalidParameter(format!("window length {length} < 2")));
    }
    if hop == 0 {
        return Err(SignalError::InvalidParameter("hop must be >= 1".into()));
    }
    let n = stream.samples.len();
    if n < length {
        return Err(SignalError::StreamTooShort { have: n, need: length });
    }
    let windows = (0..=(n - length))
        .step_by(hop)
        .enumerate()
        .map(|(index, start)| Window {
            location: stream.location,
            data: stream.samples[start..start + length].iter().map(SensorSample::axes).collect(),
            origin: WindowOrigin::untagged(index),
        })
        .collect();
    Ok(windows)
}

/// Linear interpolation of every axis onto a uniform grid at `target_rate`
/// starting at the first timestamp. Grid points that coincide with an input
/// timestamp copy that sample unchanged, which makes the operation idempotent.
pub fn resample(stream: &SensorStream, target_rate: f64) -> Result<SensorStream, SignalError> {
    let n = stream.samples.len();
    if n < 2 {
        return Err(SignalError::StreamTooShort { have: n, need: 2 });
    }
    if !(target_rate > 0.0 && target_rate.is_finite()) {
        return Err(SignalError::InvalidParameter(format!("target rate {target_rate}")));
    }
    let first = stream.samples[0];
    let last = stream.samples[n - 1];
    let step = 1.0 / target_rate;
    let snap = 1e-9 * step;
    let count = ((last.t - first.t) * target_rate + 1e-9).floor() as usize + 1;

    let mut out = Vec::with_capacity(count);
    let mut j = 0usize;
    for k in 0..count {
        let t = first.t + k as f64 * step;
        while j + 1 < n - 1 && stream.samples[j + 1].t <= t {
            j += 1;
        }
        let a = stream.samples[j];
        let b = stream.samples[j + 1];
        if (t - a.t).abs() <= snap {
            out.push(a);
        } else if (t - b.t).abs() <= snap {
            out.push(b);
        } else {
            let w = (t - a.t) / (b.t - a.t);
            out.push(SensorSample::new(
                t,
                a.ax + (b.ax - a.ax) * w,
                a.ay + (b.ay - a.ay) * w,
                a.az + (b.az - a.az) * w,
            ));
        }
    }
    SensorStream::new(stream.location, target_rate, out)
}

/// Per-axis means over consecutive `span`-second blocks, in time order.
/// Only complete blocks are emitted.
pub fn window_means(stream: &SensorStream, span: f64) -> Result<Vec<[f64; 3]>, SignalError> {
    if !(span > 0.0) {
        return Err(SignalError::InvalidParameter(format!("span {span}")));
    }
    let duration = stream.duration();
    let blocks = (duration / span + 1e-9).floor() as usize;
    if blocks == 0 {
        let need = (span * stream.rate).ceil() as usize;
        return Err(SignalError::StreamTooShort { have: stream.len(), need });
    }
    let t0 = stream.samples[0].t;
    let mut sums = vec![[0.0f64; 3]; blocks];
    let mut counts = vec![0usize; blocks];
    for s in &stream.samples {
        let b = ((s.t - t0) / span + 1e-9).floor() as usize;
        if b < blocks {
            for (acc, v) in sums[b].iter_mut().zip(s.axes()) {
                *acc += v;
            }
            counts[b] += 1;
        }
    }
    Ok(sums
        .into_iter()
        .zip(counts)
        .filter(|(_, c)| *c > 0)
        .map(|(s, c)| [s[0] / c as f64, s[1] / c as f64, s[2] / c as f64])
        .collect())
}

/// One recording: three synchronized streams of one user doing one activity.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordingSession {
    pub user_id: String,
    pub activity: Activity,
    pub session_index: u8,
    /// Indexed by `SensorLocation::index()`.
    pub streams: [SensorStream; 3],
}

impl RecordingSession {
    pub fn new(
        user_id: impl Into<String>,
        activity: Activity,
        session_index: u8,
        streams: Vec<SensorStream>,
    ) -> Result<Self, SignalError> {
        if !(1..=2).contains(&session_index) {
            return Err(SignalError::InvalidParameter(format!(
                "session index {session_index} not in {{1, 2}}"
            )));
        }
        let mut slots: [Option<SensorStream>; 3] = [None, None, None];
        for s in streams {
            let i = s.location.index();
            slots[i] = Some(s);
        }
        let [a, b, c] = slots;
        let missing = |loc: SensorLocation| SignalError::MissingLocation(loc);
        Ok(RecordingSession {
            user_id: user_id.into(),
            activity,
            session_index,
            streams: [
                a.ok_or_else(|| missing(SensorLocation::BelowChin))?,
                b.ok_or_else(|| missing(SensorLocation::UpperLeftCheek))?,
                c.ok_or_else(|| missing(SensorLocation::LowerRightCheek))?,
            ],
        })
    }

    pub fn stream(&self, location: SensorLocation) -> &SensorStream {
        &self.streams[location.index()]
    }

    /// Windows of one location with origin tags filled in.
    pub fn windows(
        &self,
        location: SensorLocation,
        length: usize,
        hop: usize,
    ) -> Result<Vec<Window>, SignalError> {
        let mut windows = segment(self.stream(location), length, hop)?;
        for w in &mut windows {
            w.origin.user_id.clone_from(&self.user_id);
            w.origin.activity = Some(self.activity);
            w.origin.session_index = self.session_index;
        }
        Ok(windows)
    }

    /// Loads `<dir>/<location>.csv` for all three locations.
    pub fn load(
        dir: &Path,
        user_id: &str,
        activity: Activity,
        session_index: u8,
    ) -> Result<Self, SignalError> {
        let streams = SensorLocation::ALL
            .iter()
            .map(|&loc| load_stream(&dir.join(format!("{}.csv", loc.file_stem())), loc))
            .collect::<Result<Vec<_>, _>>()?;
        RecordingSession::new(user_id, activity, session_index, streams)
    }

    pub fn save(&self, dir: &Path) -> Result<(), SignalError> {
        std::fs::create_dir_all(dir)?;
        for s in &self.streams {
            s.write_csv(&dir.join(format!("{}.csv", s.location.file_stem())))?;
        }
        Ok(())
    }
}

/// `<root>/<user_id>/<activity>/session<k>`
pub fn session_dir(root: &Path, user_id: &str, activity: Activity, session_index: u8) -> std::path::PathBuf {
    root.join(user_id)
        .join(activity.dir_name())
        .join(format!("session{session_index}"))
}
