use std::collections::BTreeMap;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use jawprint_core::evaluation::{model_file_name, read_thresholds, THRESHOLD_FILE};
use jawprint_core::signal::{SensorLocation, SensorSample};
use jawprint_core::verifiers::load_model;
use tokio::sync::broadcast;

use crate::session::{Action, Enrollment, Session, SessionState, WarningEvent, WarningPolicy};
use crate::ServiceError;

/// Per-subscriber backlog before a slow reader is dropped.
pub const SUBSCRIBER_BUFFER: usize = 1024;

/// Enrolled users, loaded once at start-up.
#[derive(Debug, Default, Clone)]
pub struct Registry {
    users: BTreeMap<String, Arc<Enrollment>>,
}

impl Registry {
    pub fn new(enrollments: impl IntoIterator<Item = Enrollment>) -> Self {
        let users = enrollments.into_iter().map(|e| (e.verifier.user_id.clone(), Arc::new(e))).collect();
        Registry { users }
    }

    /// Reads `thresholds.csv` and one model file per listed user.
    pub fn load(dir: &Path) -> Result<Self, ServiceError> {
        let thresholds =
            read_thresholds(&dir.join(THRESHOLD_FILE)).map_err(|e| ServiceError::Models(format!("{}: {e}", dir.display())))?;
        let mut out = Vec::new();
        for threshold in thresholds {
            let path = dir.join(model_file_name(&threshold.user_id));
            let verifier = load_model(&path).map_err(|e| ServiceError::Models(format!("{}: {e}", path.display())))?;
            if verifier.user_id != threshold.user_id {
                return Err(ServiceError::Models(format!(
                    "{} holds a model for {}, expected {}",
                    path.display(),
                    verifier.user_id,
                    threshold.user_id
                )));
            }
            out.push(Enrollment { verifier, threshold });
        }
        Ok(Registry::new(out))
    }

    pub fn get(&self, user_id: &str) -> Option<Arc<Enrollment>> {
        self.users.get(user_id).cloned()
    }

    pub fn users(&self) -> impl Iterator<Item = &str> {
        self.users.keys().map(String::as_str)
    }
}

struct Slot {
    session: Session,
    tx: broadcast::Sender<WarningEvent>,
}

impl Slot {
    fn publish(&self, events: &[WarningEvent]) {
        for e in events {
            // No receivers is fine; the log keeps everything for replay.
            let _ = self.tx.send(e.clone());
        }
    }
}

/// Backlog from a position in the log plus a live feed that starts
/// exactly where the backlog ends.
pub struct Subscription {
    pub backlog: Vec<WarningEvent>,
    pub live: broadcast::Receiver<WarningEvent>,
}

pub struct SessionManager {
    registry: Registry,
    policy: WarningPolicy,
    next_id: AtomicU64,
    sessions: Mutex<BTreeMap<String, Arc<Mutex<Slot>>>>,
}

impl SessionManager {
    pub fn new(registry: Registry, policy: WarningPolicy) -> Result<Self, ServiceError> {
        policy.validate()?;
        Ok(SessionManager { registry, policy, next_id: AtomicU64::new(1), sessions: Mutex::new(BTreeMap::new()) })
    }

    pub fn policy(&self) -> &WarningPolicy {
        &self.policy
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    pub fn create_session(&self, user_id: &str) -> Result<String, ServiceError> {
        let enrollment = self.registry.get(user_id).ok_or_else(|| ServiceError::UnknownUser(user_id.to_string()))?;
        let id = format!("s{:06}", self.next_id.fetch_add(1, Ordering::Relaxed));
        let (tx, _) = broadcast::channel(SUBSCRIBER_BUFFER);
        let slot = Slot { session: Session::new(&id, enrollment, self.policy.clone()), tx };
        self.sessions.lock().expect("session table poisoned").insert(id.clone(), Arc::new(Mutex::new(slot)));
        Ok(id)
    }

    fn slot(&self, id: &str) -> Result<Arc<Mutex<Slot>>, ServiceError> {
        self.sessions
            .lock()
            .expect("session table poisoned")
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::SessionNotFound(id.to_string()))
    }

    /// Serialized per session: the session lock is held while scoring.
    pub fn ingest(
        &self,
        id: &str,
        location: SensorLocation,
        samples: &[SensorSample],
        now: f64,
    ) -> Result<Vec<WarningEvent>, ServiceError> {
        let slot = self.slot(id)?;
        let mut slot = slot.lock().expect("session poisoned");
        let events = slot.session.ingest(location, samples, now)?;
        slot.publish(&events);
        Ok(events)
    }

    pub fn act(&self, id: &str, action: Action, now: f64) -> Result<SessionState, ServiceError> {
        let slot = self.slot(id)?;
        let mut slot = slot.lock().expect("session poisoned");
        let event = slot.session.act(action, now)?;
        slot.publish(std::slice::from_ref(&event));
        Ok(slot.session.state().clone())
    }

    pub fn status(&self, id: &str) -> Result<SessionState, ServiceError> {
        Ok(self.slot(id)?.lock().expect("session poisoned").session.state().clone())
    }

    pub fn list(&self) -> Vec<SessionState> {
        let slots: Vec<Arc<Mutex<Slot>>> = self.sessions.lock().expect("session table poisoned").values().cloned().collect();
        slots.iter().map(|s| s.lock().expect("session poisoned").session.state().clone()).collect()
    }

    pub fn events(&self, id: &str) -> Result<Vec<WarningEvent>, ServiceError> {
        Ok(self.slot(id)?.lock().expect("session poisoned").session.events().to_vec())
    }

    pub fn subscribe(&self, id: &str, from: u64) -> Result<Subscription, ServiceError> {
        let slot = self.slot(id)?;
        let slot = slot.lock().expect("session poisoned");
        let live = slot.tx.subscribe();
        let backlog = slot.session.events().iter().skip(from as usize).cloned().collect();
        Ok(Subscription { backlog, live })
    }
}
