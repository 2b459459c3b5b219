//! One authentication session: window buffering, scoring, the warning
//! policy and operator actions. All state changes go through
//! [`SessionState::apply`], so the snapshot is always a fold over the log.

use std::collections::{BTreeMap, VecDeque};
use std::sync::Arc;

use jawprint_core::evaluation::{threshold_decision, Decision, UserThreshold};
use jawprint_core::signal::{SensorLocation, SensorSample, Window, WindowOrigin, DEFAULT_WINDOW};
use jawprint_core::verifiers::{Sample, Verifier};
use serde::{Deserialize, Serialize};

use crate::ServiceError;

pub const RECENT_SCORES: usize = 100;

/// Seconds one location may run ahead of another before a gap is reported.
pub const STRAGGLER_LIMIT: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WarningPolicy {
    /// Consecutive failing windows that raise one `warning_triggered`.
    pub consecutive_window_failures: usize,
    /// Rolling failure fraction that raises `rate_exceeded`.
    pub failure_rate_threshold: f64,
    pub failure_rate_window: usize,
}

impl Default for WarningPolicy {
    fn default() -> Self {
        WarningPolicy { consecutive_window_failures: 3, failure_rate_threshold: 0.30, failure_rate_window: 20 }
    }
}

impl WarningPolicy {
    pub fn validate(&self) -> Result<(), ServiceError> {
        if self.consecutive_window_failures == 0 {
            return Err(ServiceError::InvalidConfig("consecutive_window_failures must be at least 1".into()));
        }
        if self.failure_rate_window == 0 || !(0.0..=1.0).contains(&self.failure_rate_threshold) {
            return Err(ServiceError::InvalidConfig("failure rate needs a window ≥ 1 and a threshold in [0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Active,
    Terminated,
    VerifiedPendingStepup,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    WindowPassed,
    WindowFailure,
    WarningTriggered,
    RateExceeded,
    DataGap,
    StepupRequested,
    Terminated,
    Verified,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Terminate,
    RequestStepup,
    MarkVerified,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WarningEvent {
    /// Position in the session's log, from 0.
    pub seq: u64,
    pub session_id: String,
    /// Windows scored before this event; for window events, the window's own index.
    pub window_index: usize,
    pub kind: EventKind,
    pub score: Option<f64>,
    pub threshold: Option<f64>,
    /// Unix seconds.
    pub timestamp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub session_id: String,
    pub user_id: String,
    pub status: Status,
    pub window_count: usize,
    pub failure_count: usize,
    pub consecutive_failures: usize,
    pub warning_count: usize,
    pub gap_count: usize,
    pub recent_scores: VecDeque<f64>,
    /// Pass/fail of the most recent windows, newest last, for the rolling rate.
    pub recent_failures: VecDeque<bool>,
    pub rate_alarm: bool,
    pub gap_pending: bool,
    pub event_count: u64,
}

impl SessionState {
    pub fn new(session_id: &str, user_id: &str) -> Self {
        SessionState {
            session_id: session_id.to_string(),
            user_id: user_id.to_string(),
            status: Status::Active,
            window_count: 0,
            failure_count: 0,
            consecutive_failures: 0,
            warning_count: 0,
            gap_count: 0,
            recent_scores: VecDeque::new(),
            recent_failures: VecDeque::new(),
            rate_alarm: false,
            gap_pending: false,
            event_count: 0,
        }
    }

    /// Rebuilds a snapshot from a log.
    pub fn fold(session_id: &str, user_id: &str, events: &[WarningEvent], policy: &WarningPolicy) -> Self {
        let mut s = SessionState::new(session_id, user_id);
        for e in events {
            s.apply(e, policy);
        }
        s
    }

    pub fn failure_rate(&self) -> f64 {
        if self.recent_failures.is_empty() {
            return 0.0;
        }
        self.recent_failures.iter().filter(|&&f| f).count() as f64 / self.recent_failures.len() as f64
    }

    pub fn apply(&mut self, e: &WarningEvent, policy: &WarningPolicy) {
        self.event_count += 1;
        match e.kind {
            EventKind::WindowPassed | EventKind::WindowFailure => {
                let failed = e.kind == EventKind::WindowFailure;
                self.window_count += 1;
                if failed {
                    self.failure_count += 1;
                    self.consecutive_failures += 1;
                } else {
                    self.consecutive_failures = 0;
                }
                if let Some(score) = e.score {
                    self.recent_scores.push_back(score);
                    if self.recent_scores.len() > RECENT_SCORES {
                        self.recent_scores.pop_front();
                    }
                }
                self.recent_failures.push_back(failed);
                if self.recent_failures.len() > policy.failure_rate_window {
                    self.recent_failures.pop_front();
                }
                if self.failure_rate() < policy.failure_rate_threshold {
                    self.rate_alarm = false;
                }
                self.gap_pending = false;
            }
            EventKind::WarningTriggered => self.warning_count += 1,
            EventKind::RateExceeded => self.rate_alarm = true,
            EventKind::DataGap => {
                self.gap_count += 1;
                self.gap_pending = true;
            }
            EventKind::StepupRequested => self.status = Status::VerifiedPendingStepup,
            EventKind::Verified => self.status = Status::Active,
            EventKind::Terminated => self.status = Status::Terminated,
        }
    }
}

/// What a session scores against.
#[derive(Debug, Clone)]
pub struct Enrollment {
    pub verifier: Verifier,
    pub threshold: UserThreshold,
}

#[derive(Debug, Default)]
struct Buffer {
    pending: VecDeque<SensorSample>,
    last_t: Option<f64>,
}

#[derive(Debug)]
pub struct Session {
    enrollment: Arc<Enrollment>,
    policy: WarningPolicy,
    state: SessionState,
    log: Vec<WarningEvent>,
    buffers: BTreeMap<SensorLocation, Buffer>,
}

impl Session {
    pub fn new(session_id: &str, enrollment: Arc<Enrollment>, policy: WarningPolicy) -> Self {
        let state = SessionState::new(session_id, &enrollment.verifier.user_id);
        let buffers = enrollment.verifier.scope.locations().into_iter().map(|l| (l, Buffer::default())).collect();
        Session { enrollment, policy, state, log: Vec::new(), buffers }
    }

    pub fn state(&self) -> &SessionState {
        &self.state
    }

    pub fn events(&self) -> &[WarningEvent] {
        &self.log
    }

    pub fn policy(&self) -> &WarningPolicy {
        &self.policy
    }

    pub fn enrolled_locations(&self) -> Vec<SensorLocation> {
        self.buffers.keys().copied().collect()
    }

    fn emit(&mut self, kind: EventKind, score: Option<f64>, window_index: usize, now: f64) -> WarningEvent {
        let e = WarningEvent {
            seq: self.log.len() as u64,
            session_id: self.state.session_id.clone(),
            window_index,
            kind,
            score,
            threshold: score.map(|_| self.enrollment.threshold.threshold),
            timestamp: now,
        };
        self.state.apply(&e, &self.policy);
        self.log.push(e.clone());
        e
    }

    /// Buffers a batch and scores every window it completes. The batch is
    /// checked as a whole before anything is buffered.
    pub fn ingest(
        &mut self,
        location: SensorLocation,
        samples: &[SensorSample],
        now: f64,
    ) -> Result<Vec<WarningEvent>, ServiceError> {
        if self.state.status == Status::Terminated {
            return Err(ServiceError::SessionNotActive(self.state.session_id.clone()));
        }
        let buf = self.buffers.get(&location).ok_or(ServiceError::UnknownLocation(location.to_string()))?;
        let mut prev = buf.last_t;
        for (i, s) in samples.iter().enumerate() {
            if ![s.t, s.ax, s.ay, s.az].iter().all(|v| v.is_finite()) {
                return Err(ServiceError::InvalidSamples(format!("sample {} is not finite", i + 1)));
            }
            if prev.is_some_and(|p| s.t <= p) {
                return Err(ServiceError::InvalidSamples(format!("timestamp of sample {} does not increase", i + 1)));
            }
            prev = Some(s.t);
        }
        let buf = self.buffers.get_mut(&location).expect("checked above");
        buf.pending.extend(samples.iter().copied());
        buf.last_t = prev;

        let mut out = Vec::new();
        while self.buffers.values().all(|b| b.pending.len() >= DEFAULT_WINDOW) {
            out.push(self.score_next_window(now)?);
            if let Some(w) = self.check_policy(now) {
                out.extend(w);
            }
        }
        if !self.state.gap_pending && self.straggler_lag() > STRAGGLER_LIMIT {
            out.push(self.emit(EventKind::DataGap, None, self.state.window_count, now));
        }
        Ok(out)
    }

    fn straggler_lag(&self) -> f64 {
        let start = self.buffers.values().filter_map(|b| b.pending.front().map(|s| s.t)).fold(f64::INFINITY, f64::min);
        if !start.is_finite() {
            return 0.0;
        }
        let latest: Vec<f64> = self.buffers.values().map(|b| b.last_t.unwrap_or(start)).collect();
        let hi = latest.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = latest.iter().copied().fold(f64::INFINITY, f64::min);
        hi - lo
    }

    fn score_next_window(&mut self, now: f64) -> Result<WarningEvent, ServiceError> {
        let index = self.state.window_count;
        let origin = WindowOrigin { user_id: self.state.user_id.clone(), activity: None, session_index: 0, window_index: index };
        let windows: Vec<Window> = self
            .buffers
            .iter_mut()
            .map(|(&location, b)| Window {
                location,
                data: b.pending.drain(..DEFAULT_WINDOW).map(|s| s.axes()).collect(),
                origin: origin.clone(),
            })
            .collect();
        let sample = Sample::from_scope_windows(&windows, self.enrollment.verifier.scope)
            .map_err(|e| ServiceError::Scoring(e.to_string()))?;
        let score = self.enrollment.verifier.score(&sample).map_err(|e| ServiceError::Scoring(e.to_string()))?;
        let kind = match threshold_decision(score, &self.enrollment.threshold) {
            Decision::Accept => EventKind::WindowPassed,
            Decision::Reject => EventKind::WindowFailure,
        };
        Ok(self.emit(kind, Some(score), index, now))
    }

    /// Warnings raised by the window just scored. Never changes the status.
    fn check_policy(&mut self, now: f64) -> Option<Vec<WarningEvent>> {
        let index = self.state.window_count - 1;
        let mut out = Vec::new();
        if self.state.consecutive_failures == self.policy.consecutive_window_failures {
            out.push(self.emit(EventKind::WarningTriggered, None, index, now));
        }
        let full = self.state.recent_failures.len() == self.policy.failure_rate_window;
        if full && !self.state.rate_alarm && self.state.failure_rate() >= self.policy.failure_rate_threshold {
            out.push(self.emit(EventKind::RateExceeded, None, index, now));
        }
        (!out.is_empty()).then_some(out)
    }

    /// Records an already-decided window outcome; used to drive the policy
    /// without a model.
    pub fn record_outcome(&mut self, score: f64, now: f64) -> Result<Vec<WarningEvent>, ServiceError> {
        if self.state.status == Status::Terminated {
            return Err(ServiceError::SessionNotActive(self.state.session_id.clone()));
        }
        let kind = match threshold_decision(score, &self.enrollment.threshold) {
            Decision::Accept => EventKind::WindowPassed,
            Decision::Reject => EventKind::WindowFailure,
        };
        let mut out = vec![self.emit(kind, Some(score), self.state.window_count, now)];
        if let Some(w) = self.check_policy(now) {
            out.extend(w);
        }
        Ok(out)
    }

    pub fn act(&mut self, action: Action, now: f64) -> Result<WarningEvent, ServiceError> {
        let kind = match (action, self.state.status) {
            (Action::Terminate, Status::Active | Status::VerifiedPendingStepup) => EventKind::Terminated,
            (Action::RequestStepup, Status::Active) => EventKind::StepupRequested,
            (Action::MarkVerified, Status::VerifiedPendingStepup) => EventKind::Verified,
            (action, status) => return Err(ServiceError::InvalidTransition { action, status }),
        };
        Ok(self.emit(kind, None, self.state.window_count, now))
    }
}
