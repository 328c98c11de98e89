use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use chrono::Utc;
use tokio::sync::Mutex as AsyncMutex;

use crate::session::ChatSession;

pub type SharedSession = Arc<AsyncMutex<ChatSession>>;

/// In-memory sessions with idle expiry. Each session has its own lock so
/// turns of one conversation are appended one request at a time.
#[derive(Debug)]
pub struct SessionStore {
    sessions: Mutex<HashMap<String, SharedSession>>,
    ttl: Duration,
}

impl SessionStore {
    pub fn new(ttl: Duration) -> Self {
        Self {
            sessions: Mutex::new(HashMap::new()),
            ttl,
        }
    }

    pub fn ttl(&self) -> Duration {
        self.ttl
    }

    pub fn create(&self) -> String {
        let mut map = self.sessions.lock().expect("poisoned");
        loop {
            let session = ChatSession::new();
            if !map.contains_key(&session.session_id) {
                let id = session.session_id.clone();
                map.insert(id.clone(), Arc::new(AsyncMutex::new(session)));
                return id;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.sessions.lock().expect("poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Looks up a live session. Sessions idle for longer than the TTL are
    /// removed and reported as missing.
    pub async fn get(&self, id: &str) -> Option<SharedSession> {
        let session = self.sessions.lock().expect("poisoned").get(id).cloned()?;
        let expired = self.is_expired(&*session.lock().await);
        if expired {
            self.sessions.lock().expect("poisoned").remove(id);
            return None;
        }
        Some(session)
    }

    fn is_expired(&self, session: &ChatSession) -> bool {
        let idle = Utc::now().signed_duration_since(session.last_active);
        idle.to_std().map(|d| d > self.ttl).unwrap_or(false)
    }

    /// Drops every expired session and returns how many were removed.
    pub fn sweep(&self) -> usize {
        let mut map = self.sessions.lock().expect("poisoned");
        let before = map.len();
        map.retain(|_, s| match s.try_lock() {
            Ok(guard) => !self.is_expired(&guard),
            // busy sessions are in use, hence not idle
            Err(_) => true,
        });
        before - map.len()
    }

    pub async fn snapshot(&self) -> Vec<ChatSession> {
        let handles: Vec<SharedSession> = self.sessions.lock().expect("poisoned").values().cloned().collect();
        let mut out = Vec::with_capacity(handles.len());
        for h in handles {
            out.push(h.lock().await.clone());
        }
        out.sort_by(|a, b| a.session_id.cmp(&b.session_id));
        out
    }

    pub async fn save_snapshot(&self, path: &Path) -> std::io::Result<()> {
        let json = serde_json::to_string(&self.snapshot().await)?;
        let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
        std::io::Write::write_all(&mut tmp, json.as_bytes())?;
        tmp.persist(path).map_err(|e| e.error)?;
        Ok(())
    }

    /// Restores sessions from a snapshot file, skipping expired ones.
    pub fn load_snapshot(&self, path: &Path) -> std::io::Result<usize> {
        let raw = fs::read_to_string(path)?;
        let sessions: Vec<ChatSession> = serde_json::from_str(&raw)?;
        let mut map = self.sessions.lock().expect("poisoned");
        let mut restored = 0;
        for s in sessions {
            if !self.is_expired(&s) {
                map.insert(s.session_id.clone(), Arc::new(AsyncMutex::new(s)));
                restored += 1;
            }
        }
        Ok(restored)
    }
}
