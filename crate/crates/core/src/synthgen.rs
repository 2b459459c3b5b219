//! Seeded synthetic cohorts: per-user articulation profiles, three-location
//! sensor sessions, and matching landmark traces of the same motion as a
//! camera would see it.
//!
//! This is a test oracle, not a physiological model. Every tunable lives
//! in [`SynthConfig`].

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attack::{trace_file_name, AttackError, LandmarkTrace, Resolution, STANDARD_GRAVITY};
use crate::evaluation::{write_cohort_file, EvalError, LanguageTag};
use crate::signal::{session_dir, Activity, RecordingSession, SensorLocation, SensorSample, SensorStream, SignalError};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synthesis parameter: {0}")]
    InvalidParameter(String),
    #[error("could not place {0} users with distinct base frequencies and chin tilts")]
    CohortTooLarge(usize),
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    Attack(#[from] AttackError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub rate: f64,
    /// Base jaw-oscillation frequency range, Hz.
    pub frequency_range: (f64, f64),
    /// Minimum pairwise base-frequency gap within a cohort, Hz.
    pub min_frequency_gap: f64,
    /// Relative per-axis detuning around the base frequency.
    pub axis_detune: f64,
    /// Chin articulation amplitude range per axis, g.
    pub amplitude_range: (f64, f64),
    /// Articulation gain per location relative to the chin.
    pub location_gain: [f64; 3],
    /// Half-range of per-user sensor tilt per location, degrees. Tilt sets
    /// how gravity splits across the axes.
    pub tilt_range_deg: [f64; 3],
    /// Minimum pairwise angle between users' chin tilts within a cohort, degrees.
    pub min_chin_tilt_gap_deg: f64,
    /// Strap re-placement between sessions, degrees (standard deviation).
    pub session_tilt_jitter_deg: f64,
    /// Sensor noise per location, g (standard deviation).
    pub noise_std: [f64; 3],
    /// Relative day-to-day frequency jitter (standard deviation).
    pub session_frequency_jitter: f64,
    /// Range of the per-user amplitude jitter parameter.
    pub amplitude_jitter_range: (f64, f64),
    /// Silences per minute.
    pub pause_rate_range: (f64, f64),
    /// Silence length, seconds.
    pub pause_length: (f64, f64),
    /// Slow baseline wander amplitude, g.
    pub drift_range: (f64, f64),
    /// Syllable-rate amplitude modulation, Hz.
    pub syllable_rate_range: (f64, f64),
    /// Cadence (Hz) and vertical amplitude (g) of gait on flat ground.
    pub walk_flat_gait: (f64, f64),
    /// Same on stairs: slower and larger.
    pub walk_stairs_gait: (f64, f64),
    /// Gait pickup per location.
    pub gait_gain: [f64; 3],
    pub session_duration: f64,
    /// Metres per normalized image unit for rendered traces.
    pub landmark_scale: f64,
    /// Normalized image anchor of each location's landmark.
    pub landmark_anchor: [[f64; 3]; 3],
    /// Landmark depth-estimation noise relative to the trace's motion RMS.
    pub landmark_depth_noise: f64,
    /// Double integration discards content below this, Hz.
    pub integration_cutoff: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            rate: 100.0,
            frequency_range: (1.5, 4.5),
            min_frequency_gap: 0.05,
            axis_detune: 0.02,
            amplitude_range: (0.05, 0.25),
            location_gain: [1.0, 0.45, 0.45],
            tilt_range_deg: [45.0, 10.0, 10.0],
            min_chin_tilt_gap_deg: 15.0,
            session_tilt_jitter_deg: 1.5,
            noise_std: [0.01, 0.02, 0.02],
            session_frequency_jitter: 0.01,
            amplitude_jitter_range: (0.02, 0.08),
            pause_rate_range: (4.0, 12.0),
            pause_length: (0.3, 1.5),
            drift_range: (0.002, 0.01),
            syllable_rate_range: (0.5, 1.5),
            walk_flat_gait: (2.0, 0.15),
            walk_stairs_gait: (1.4, 0.3),
            gait_gain: [1.0, 0.8, 0.8],
            session_duration: 900.0,
            landmark_scale: crate::attack::DEFAULT_SCALE,
            landmark_anchor: [[0.5, 0.82, 0.0], [0.38, 0.55, 0.0], [0.6, 0.72, 0.0]],
            landmark_depth_noise: 0.02,
            integration_cutoff: 0.5,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: &str| Err(SynthError::InvalidParameter(m.into()));
        if !(self.rate > 0.0) {
            return bad("rate must be positive");
        }
        if !(self.frequency_range.0 > 0.0 && self.frequency_range.1 > self.frequency_range.0) {
            return bad("frequency_range must be increasing and positive");
        }
        if !(self.session_duration > 0.0) {
            return bad("session_duration must be positive");
        }
        if !(self.landmark_scale > 0.0) {
            return bad("landmark_scale must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisProfile {
    pub frequency: f64,
    /// g.
    pub amplitude: f64,
    /// Weights of the fundamental and the 2nd and 3rd harmonics.
    pub harmonics: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocationProfile {
    pub axes: [AxisProfile; 3],
    /// Tilt about x and y, radians.
    pub tilt: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserProfile {
    pub user_id: String,
    pub seed: u64,
    pub base_frequency: f64,
    /// Indexed by `SensorLocation::index()`.
    pub locations: [LocationProfile; 3],
    pub amplitude_jitter: f64,
    pub pause_rate: f64,
    pub drift: f64,
    pub syllable_rate: f64,
    pub language: LanguageTag,
}

impl UserProfile {
    /// Same profile with all articulation removed.
    pub fn silenced(&self) -> UserProfile {
        let mut p = self.clone();
        for l in &mut p.locations {
            for a in &mut l.axes {
                a.amplitude = 0.0;
            }
        }
        p
    }
}

fn uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

pub fn generate_profile(user_id: &str, seed: u64) -> UserProfile {
    generate_profile_with(user_id, seed, &SynthConfig::default())
}

pub fn generate_profile_with(user_id: &str, seed: u64, cfg: &SynthConfig) -> UserProfile {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = uniform(&mut rng, cfg.frequency_range);
    let locations = std::array::from_fn(|li| {
        let axes = std::array::from_fn(|_| AxisProfile {
            frequency: base * (1.0 + cfg.axis_detune * (2.0 * rng.random::<f64>() - 1.0)),
            amplitude: cfg.location_gain[li] * uniform(&mut rng, cfg.amplitude_range),
            harmonics: [1.0, uniform(&mut rng, (0.1, 0.6)), uniform(&mut rng, (0.05, 0.3))],
        });
        let t = cfg.tilt_range_deg[li].to_radians();
        LocationProfile { axes, tilt: [uniform(&mut rng, (-t, t)), uniform(&mut rng, (-t, t))] }
    });
    UserProfile {
        user_id: user_id.to_string(),
        seed,
        base_frequency: base,
        locations,
        amplitude_jitter: uniform(&mut rng, cfg.amplitude_jitter_range),
        pause_rate: uniform(&mut rng, cfg.pause_rate_range),
        drift: uniform(&mut rng, cfg.drift_range),
        syllable_rate: uniform(&mut rng, cfg.syllable_rate_range),
        language: if rng.random::<bool>() { LanguageTag::Native } else { LanguageTag::NonNative },
    }
}

fn mix(a: u64, b: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = a ^ b.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn user_id(index: usize) -> String {
    format!("user{:02}", index + 1)
}

fn chin_tilt_gap_deg(a: &UserProfile, b: &UserProfile) -> f64 {
    let (ta, tb) = (a.locations[0].tilt, b.locations[0].tilt);
    (ta[0] - tb[0]).hypot(ta[1] - tb[1]).to_degrees()
}

/// `n` profiles whose base frequencies are pairwise at least
/// `min_frequency_gap` apart and whose chin tilts differ by at least
/// `min_chin_tilt_gap_deg`; conflicting draws are re-drawn.
pub fn generate_cohort(n: usize, seed: u64, cfg: &SynthConfig) -> Result<Vec<UserProfile>, SynthError> {
    cfg.validate()?;
    let mut out: Vec<UserProfile> = Vec::with_capacity(n);
    for i in 0..n {
        let id = user_id(i);
        let profile = (0..10_000u64)
            .map(|attempt| generate_profile_with(&id, mix(seed, ((i as u64) << 20) | attempt), cfg))
            .find(|p| {
                out.iter().all(|q| {
                    (q.base_frequency - p.base_frequency).abs() >= cfg.min_frequency_gap
                        && chin_tilt_gap_deg(p, q) >= cfg.min_chin_tilt_gap_deg
                })
            })
            .ok_or(SynthError::CohortTooLarge(n))?;
        out.push(profile);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSpec {
    pub duration: f64,
    pub activity: Activity,
    pub session_index: u8,
    pub noise_seed: u64,
}

impl SessionSpec {
    /// Seed derived from the profile so sessions of one cohort never share noise.
    pub fn new(profile: &UserProfile, duration: f64, activity: Activity, session_index: u8) -> Self {
        let noise_seed = mix(profile.seed, ((activity as u64) << 8) | session_index as u64);
        SessionSpec { duration, activity, session_index, noise_seed }
    }
}

/// Articulation drawn once per session: jittered frequencies and phases,
/// silences, syllable modulation.
struct Articulation {
    /// [location][axis] -> (frequency, amplitude, harmonic weights, phases)
    axes: [[(f64, f64, [f64; 3], [f64; 3]); 3]; 3],
    pauses: Vec<(f64, f64)>,
    syllable_rate: f64,
    syllable_phase: f64,
}

impl Articulation {
    fn draw(profile: &UserProfile, duration: f64, cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> Self {
        let fj = Normal::new(0.0, cfg.session_frequency_jitter).expect("finite");
        let aj = Normal::new(0.0, profile.amplitude_jitter).expect("finite");
        let day_scale = 1.0 + fj.sample(rng);
        let axes = std::array::from_fn(|li| {
            std::array::from_fn(|ai| {
                let a = &profile.locations[li].axes[ai];
                let phases = std::array::from_fn(|_| 2.0 * PI * rng.random::<f64>());
                (a.frequency * day_scale, a.amplitude * (1.0 + aj.sample(rng)).max(0.0), a.harmonics, phases)
            })
        });
        let mut pauses = Vec::new();
        let mut t = 0.0;
        let mean_gap = 60.0 / profile.pause_rate.max(1e-6);
        loop {
            t += -mean_gap * (1.0 - rng.random::<f64>()).ln();
            if t >= duration {
                break;
            }
            let len = uniform(rng, cfg.pause_length);
            pauses.push((t, t + len));
            t += len;
        }
        Articulation { axes, pauses, syllable_rate: profile.syllable_rate, syllable_phase: 2.0 * PI * rng.random::<f64>() }
    }

    /// Speech envelope in [0, 1] with 50 ms raised-cosine edges on silences.
    fn envelope(&self, t: f64) -> f64 {
        const RAMP: f64 = 0.05;
        let mut gate: f64 = 1.0;
        for &(a, b) in &self.pauses {
            if t > a - RAMP && t < b + RAMP {
                let d = if t < a { a - t } else if t > b { t - b } else { 0.0 };
                gate = gate.min(0.5 - 0.5 * (PI * d / RAMP).cos());
            }
        }
        gate * (0.75 + 0.25 * (2.0 * PI * self.syllable_rate * t + self.syllable_phase).sin())
    }

    /// Articulation acceleration in g at one location, without gravity.
    fn accel(&self, loc: usize, t: f64) -> [f64; 3] {
        let env = self.envelope(t);
        std::array::from_fn(|ai| {
            let (f, amp, w, ph) = self.axes[loc][ai];
            if amp == 0.0 {
                return 0.0;
            }
            let s: f64 = (0..3).map(|h| w[h] * (2.0 * PI * (h + 1) as f64 * f * t + ph[h]).sin()).sum();
            amp * env * s
        })
    }
}

fn gravity(tilt: [f64; 2]) -> [f64; 3] {
    let (ax, ay) = (tilt[0], tilt[1]);
    [ax.sin(), ay.sin() * ax.cos(), ax.cos() * ay.cos()]
}

pub fn generate_session(profile: &UserProfile, spec: &SessionSpec) -> Result<RecordingSession, SynthError> {
    generate_session_with(profile, spec, &SynthConfig::default())
}

pub fn generate_session_with(
    profile: &UserProfile,
    spec: &SessionSpec,
    cfg: &SynthConfig,
) -> Result<RecordingSession, SynthError> {
    cfg.validate()?;
    if !(spec.duration > 0.0) {
        return Err(SynthError::InvalidParameter(format!("duration {}", spec.duration)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.noise_seed);
    let art = Articulation::draw(profile, spec.duration, cfg, &mut rng);
    let n = (spec.duration * cfg.rate).round() as usize;
    let dt = 1.0 / cfg.rate;

    let gait = match spec.activity {
        Activity::Seated => None,
        Activity::WalkFlat => Some(cfg.walk_flat_gait),
        Activity::WalkStairs => Some(cfg.walk_stairs_gait),
    }
    .map(|(cadence, amp)| (cadence * (1.0 + 0.05 * (2.0 * rng.random::<f64>() - 1.0)), amp, 2.0 * PI * rng.random::<f64>()));
    let drift_freq = uniform(&mut rng, (0.01, 0.05));
    let drift_phase = 2.0 * PI * rng.random::<f64>();

    let mut streams = Vec::with_capacity(3);
    for loc in SensorLocation::ALL {
        let li = loc.index();
        let jitter = Normal::new(0.0, cfg.session_tilt_jitter_deg.to_radians()).expect("finite");
        let tilt = profile.locations[li].tilt;
        let g = gravity([tilt[0] + jitter.sample(&mut rng), tilt[1] + jitter.sample(&mut rng)]);
        let noise = Normal::new(0.0, cfg.noise_std[li]).expect("finite");
        let mut samples = Vec::with_capacity(n);
        for k in 0..n {
            let t = k as f64 * dt;
            let a = art.accel(li, t);
            let wander = profile.drift * (2.0 * PI * drift_freq * t + drift_phase).sin();
            let step = gait.map_or(0.0, |(c, amp, ph)| {
                let x = 2.0 * PI * c * t + ph;
                cfg.gait_gain[li] * amp * (x.sin() + 0.3 * (2.0 * x).sin())
            });
            let v: [f64; 3] = std::array::from_fn(|ai| {
                let vertical = if ai == 2 { step } else { 0.25 * step };
                g[ai] + a[ai] + wander + vertical + noise.sample(&mut rng)
            });
            samples.push(SensorSample::new(t, v[0], v[1], v[2]));
        }
        streams.push(SensorStream::new(loc, cfg.rate, samples)?);
    }
    Ok(RecordingSession::new(profile.user_id.clone(), spec.activity, spec.session_index, streams)?)
}

/// Double integration in the frequency domain, discarding everything below
/// `cutoff` Hz, which keeps position bounded.
fn integrate_twice(a: &[f64], rate: f64, cutoff: f64) -> Vec<f64> {
    let n = a.len();
    let mut buf: Vec<Complex<f64>> = a.iter().map(|&v| Complex::new(v, 0.0)).collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    for (k, c) in buf.iter_mut().enumerate() {
        let bin = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
        let f = bin * rate / n as f64;
        if f.abs() < cutoff {
            *c = Complex::new(0.0, 0.0);
        } else {
            *c /= -(2.0 * PI * f).powi(2);
        }
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    buf.iter().map(|c| c.re / n as f64).collect()
}

/// Renders the session's articulation as the victim's 1080p/60 master
/// landmark traces, one per location.
pub fn render_landmark_traces(
    profile: &UserProfile,
    spec: &SessionSpec,
    cfg: &SynthConfig,
) -> Result<[LandmarkTrace; 3], SynthError> {
    cfg.validate()?;
    const FPS: u32 = 60;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.noise_seed);
    let art = Articulation::draw(profile, spec.duration, cfg, &mut rng);
    let n = ((spec.duration * FPS as f64).round() as usize).max(3);
    let mut trace_rng = ChaCha8Rng::seed_from_u64(mix(spec.noise_seed, 0x7ace));
    let std_normal = Normal::new(0.0, 1.0).expect("finite");

    let mut out = Vec::with_capacity(3);
    for loc in SensorLocation::ALL {
        let li = loc.index();
        let accel: Vec<[f64; 3]> = (0..n).map(|k| art.accel(li, k as f64 / FPS as f64)).collect();
        let mut axes: [Vec<f64>; 3] = std::array::from_fn(|ai| {
            let metres_s2: Vec<f64> = accel.iter().map(|a| a[ai] * STANDARD_GRAVITY).collect();
            integrate_twice(&metres_s2, FPS as f64, cfg.integration_cutoff)
                .into_iter()
                .map(|d| d / cfg.landmark_scale)
                .collect()
        });
        let rms = (axes.iter().flatten().map(|v| v * v).sum::<f64>() / (3 * n) as f64).sqrt();
        for v in axes[2].iter_mut() {
            *v += cfg.landmark_depth_noise * rms * std_normal.sample(&mut trace_rng);
        }
        let anchor = cfg.landmark_anchor[li];
        let points = (0..n).map(|k| std::array::from_fn(|ai| anchor[ai] + axes[ai][k])).collect();
        out.push(LandmarkTrace::new(loc, FPS, Resolution::P1080, cfg.landmark_scale, points)?);
    }
    let [a, b, c]: [LandmarkTrace; 3] = out.try_into().expect("three locations");
    Ok([a, b, c])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortSpec {
    pub users: usize,
    pub seed: u64,
    pub duration: f64,
    pub activities: Vec<Activity>,
    /// Seconds of landmark video per user; zero skips rendering.
    pub video_duration: f64,
}

impl Default for CohortSpec {
    fn default() -> Self {
        CohortSpec { users: 10, seed: 42, duration: 900.0, activities: Activity::ALL.to_vec(), video_duration: 60.0 }
    }
}

/// Landmark traces of a user live in `<root>/<user>/video/`.
pub fn video_dir(root: &Path, user_id: &str) -> std::path::PathBuf {
    root.join(user_id).join("video")
}

/// Generates every session of a cohort in memory.
pub fn generate_cohort_sessions(
    profiles: &[UserProfile],
    spec: &CohortSpec,
    cfg: &SynthConfig,
) -> Result<Vec<RecordingSession>, SynthError> {
    let jobs: Vec<(&UserProfile, Activity, u8)> = profiles
        .iter()
        .flat_map(|p| spec.activities.iter().flat_map(move |&a| [1u8, 2].map(|k| (p, a, k))))
        .collect();
    jobs.par_iter()
        .map(|&(p, a, k)| generate_session_with(p, &SessionSpec::new(p, spec.duration, a, k), cfg))
        .collect()
}

/// Video sessions use a seed stream of their own, index 0.
pub fn video_spec(profile: &UserProfile, duration: f64) -> SessionSpec {
    SessionSpec::new(profile, duration, Activity::Seated, 0)
}

/// Writes the dataset layout, `cohort.csv` and landmark traces.
pub fn write_dataset(root: &Path, spec: &CohortSpec, cfg: &SynthConfig) -> Result<Vec<UserProfile>, SynthError> {
    let profiles = generate_cohort(spec.users, spec.seed, cfg)?;
    std::fs::create_dir_all(root)?;
    profiles.par_iter().try_for_each(|p| -> Result<(), SynthError> {
        for &a in &spec.activities {
            for k in 1..=2u8 {
                let s = generate_session_with(p, &SessionSpec::new(p, spec.duration, a, k), cfg)?;
                s.save(&session_dir(root, &p.user_id, a, k))?;
            }
        }
        if spec.video_duration > 0.0 {
            let dir = video_dir(root, &p.user_id);
            std::fs::create_dir_all(&dir)?;
            for t in render_landmark_traces(p, &video_spec(p, spec.video_duration), cfg)? {
                t.save(&dir.join(trace_file_name(t.location)))?;
            }
        }
        Ok(())
    })?;
    let languages: BTreeMap<String, LanguageTag> = profiles.iter().map(|p| (p.user_id.clone(), p.language)).collect();
    write_cohort_file(root, &languages)?;
    Ok(profiles)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrate_twice_inverts_sine() {
        let rate = 60.0;
        let n = 600;
        let f = 3.0;
        let a: Vec<f64> = (0..n).map(|k| (2.0 * PI * f * k as f64 / rate).sin()).collect();
        let p = integrate_twice(&a, rate, 0.5);
        let w2 = (2.0 * PI * f).powi(2);
        for k in 0..n {
            assert!((p[k] + a[k] / w2).abs() < 1e-12);
        }
    }

    #[test]
    fn envelope_bounds() {
        let p = generate_profile("u", 1);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let art = Articulation::draw(&p, 120.0, &SynthConfig::default(), &mut rng);
        assert!(!art.pauses.is_empty());
        for k in 0..12_000 {
            let e = art.envelope(k as f64 / 100.0);
            assert!((0.0..=1.0).contains(&e));
        }
        let (a, b) = art.pauses[0];
        assert_eq!(art.envelope((a + b) / 2.0), 0.0);
    }
}
