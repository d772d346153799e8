//! In-memory agent sessions with an optional JSONL snapshot.
//!
//! Each mutation is applied to a copy of the record and committed only on
//! success, after which the whole store is rewritten to the snapshot file.
//! Mutations of one session are serialized by a per-session lock.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, MutexGuard, PoisonError};

use serde::{Deserialize, Serialize};
use tenderforge_core::{AgentSession, Requirement, TenderDocument};
use thiserror::Error;

use crate::data::write_atomic;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("session snapshot io: {0}")]
    Io(#[from] std::io::Error),
    #[error("session snapshot line {line}: {message}")]
    Corrupt { line: usize, message: String },
    #[error("unknown session {0:?}")]
    UnknownSession(String),
}

impl StoreError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::Io(_) => "IoError",
            Self::Corrupt { .. } => "SnapshotError",
            Self::UnknownSession(_) => "UnknownSessionError",
        }
    }
}

/// A session together with the requirement it was opened for and the last
/// document it produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub session: AgentSession,
    pub requirement: Requirement,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub document: Option<TenderDocument>,
}

#[derive(Default)]
struct Inner {
    sessions: BTreeMap<String, Arc<Mutex<SessionRecord>>>,
    next: u64,
}

pub struct SessionStore {
    inner: Mutex<Inner>,
    snapshot: Option<PathBuf>,
    writer: Mutex<()>,
}

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    m.lock().unwrap_or_else(PoisonError::into_inner)
}

fn id_number(id: &str) -> Option<u64> {
    id.strip_prefix('s')?.parse().ok()
}

impl SessionStore {
    pub fn in_memory() -> Self {
        Self {
            inner: Mutex::new(Inner::default()),
            snapshot: None,
            writer: Mutex::new(()),
        }
    }

    /// Opens a store backed by `snapshot`, loading it when the file exists.
    pub fn open(snapshot: Option<&Path>) -> Result<Self, StoreError> {
        let mut inner = Inner::default();
        if let Some(path) = snapshot.filter(|p| p.exists()) {
            let text = std::fs::read_to_string(path)?;
            for (i, line) in text.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let record: SessionRecord =
                    serde_json::from_str(line).map_err(|e| StoreError::Corrupt {
                        line: i + 1,
                        message: e.to_string(),
                    })?;
                let id = record.session.session_id.clone();
                if let Some(n) = id_number(&id) {
                    inner.next = inner.next.max(n + 1);
                }
                if inner
                    .sessions
                    .insert(id.clone(), Arc::new(Mutex::new(record)))
                    .is_some()
                {
                    return Err(StoreError::Corrupt {
                        line: i + 1,
                        message: format!("duplicate session id {id:?}"),
                    });
                }
            }
        }
        Ok(Self {
            inner: Mutex::new(inner),
            snapshot: snapshot.map(Path::to_path_buf),
            writer: Mutex::new(()),
        })
    }

    pub fn len(&self) -> usize {
        lock(&self.inner).sessions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Allocates the next id, builds the record with `build` and stores it.
    /// A failed build consumes no id.
    pub fn create<E>(
        &self,
        build: impl FnOnce(String) -> Result<SessionRecord, E>,
    ) -> Result<SessionRecord, E>
    where
        E: From<StoreError>,
    {
        let record = {
            let mut inner = lock(&self.inner);
            let id = format!("s{}", inner.next);
            let record = build(id.clone())?;
            inner.next += 1;
            inner
                .sessions
                .insert(id, Arc::new(Mutex::new(record.clone())));
            record
        };
        self.persist()?;
        Ok(record)
    }

    pub fn get(&self, id: &str) -> Option<SessionRecord> {
        let slot = lock(&self.inner).sessions.get(id).cloned()?;
        let record = lock(&slot).clone();
        Some(record)
    }

    /// Runs `f` on a copy of the record and commits the copy if `f` succeeds.
    pub fn update<T, E>(
        &self,
        id: &str,
        f: impl FnOnce(&mut SessionRecord) -> Result<T, E>,
    ) -> Result<T, E>
    where
        E: From<StoreError>,
    {
        let slot = lock(&self.inner)
            .sessions
            .get(id)
            .cloned()
            .ok_or_else(|| StoreError::UnknownSession(id.to_string()))?;
        let out = {
            let mut guard = lock(&slot);
            let mut draft = guard.clone();
            let out = f(&mut draft)?;
            *guard = draft;
            out
        };
        self.persist()?;
        Ok(out)
    }

    /// The session whose latest document has id `doc_id`.
    pub fn find_document(&self, doc_id: &str) -> Option<SessionRecord> {
        let slots: Vec<_> = lock(&self.inner).sessions.values().cloned().collect();
        slots.into_iter().find_map(|slot| {
            let r = lock(&slot);
            (r.document.as_ref().map(|d| d.id.as_str()) == Some(doc_id)).then(|| r.clone())
        })
    }

    pub fn records(&self) -> Vec<SessionRecord> {
        let slots: Vec<_> = lock(&self.inner).sessions.values().cloned().collect();
        slots.into_iter().map(|s| lock(&s).clone()).collect()
    }

    fn persist(&self) -> Result<(), StoreError> {
        let Some(path) = &self.snapshot else {
            return Ok(());
        };
        let _writing = lock(&self.writer);
        let mut out = String::new();
        for record in self.records() {
            out.push_str(&serde_json::to_string(&record).expect("session records serialize"));
            out.push('\n');
        }
        write_atomic(path, out.as_bytes())?;
        Ok(())
    }
}
