//! In-memory mission registry with per-mission single-writer locking and an
//! optional append-only journal.

use std::collections::{BTreeMap, HashMap};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};
use std::time::Duration;

use ctxnav_core::map::GridMap;
use serde::{Deserialize, Serialize};
use tokio::sync::watch;

use crate::interpret::{interpret_deterministic, InterpretError, LlmInterpreter};
use crate::mission::{MissionError, MissionEvent, MissionState};

/// Upper bound on a single long-poll wait.
pub const MAX_WAIT: Duration = Duration::from_secs(30);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InterpreterChoice {
    #[default]
    Deterministic,
    Llm,
}

struct Slot {
    writer: tokio::sync::Mutex<()>,
    snapshot: RwLock<Arc<MissionState>>,
    last_seq: watch::Sender<u64>,
}

impl Slot {
    fn new(state: MissionState) -> Self {
        let (tx, _) = watch::channel(state.last_seq());
        Self {
            writer: tokio::sync::Mutex::new(()),
            snapshot: RwLock::new(Arc::new(state)),
            last_seq: tx,
        }
    }

    fn read(&self) -> Arc<MissionState> {
        self.snapshot.read().expect("snapshot lock poisoned").clone()
    }
}

#[derive(Serialize, Deserialize)]
struct JournalRecord {
    mission_id: String,
    state: MissionState,
}

/// One JSON line per committed mission state; the last line per mission wins
/// on recovery.
pub struct Journal {
    path: PathBuf,
    file: Mutex<File>,
}

impl Journal {
    pub fn open(path: &Path) -> std::io::Result<Self> {
        let torn_tail = std::fs::read(path)
            .map(|b| b.last().is_some_and(|&c| c != b'\n'))
            .unwrap_or(false);
        let mut file = OpenOptions::new().create(true).append(true).open(path)?;
        if torn_tail {
            writeln!(file)?;
        }
        Ok(Self {
            path: path.to_path_buf(),
            file: Mutex::new(file),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    fn append(&self, state: &MissionState) -> std::io::Result<()> {
        let line = serde_json::to_string(&JournalRecord {
            mission_id: state.mission_id.clone(),
            state: state.clone(),
        })?;
        let mut f = self.file.lock().expect("journal lock poisoned");
        writeln!(f, "{line}")?;
        f.flush()
    }

    /// Latest state per mission. A torn final line is skipped.
    pub fn recover(path: &Path) -> std::io::Result<BTreeMap<String, MissionState>> {
        let mut states = BTreeMap::new();
        if !path.exists() {
            return Ok(states);
        }
        for (i, line) in BufReader::new(File::open(path)?).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            match serde_json::from_str::<JournalRecord>(&line) {
                Ok(r) => {
                    states.insert(r.mission_id, r.state);
                }
                Err(e) => tracing::warn!(line = i + 1, "skipping unreadable journal record: {e}"),
            }
        }
        Ok(states)
    }
}

#[derive(Default)]
pub struct MissionStore {
    missions: RwLock<HashMap<String, Arc<Slot>>>,
    journal: Option<Journal>,
    llm: HashMap<String, LlmInterpreter>,
    default_llm: Option<String>,
}

impl MissionStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Replays `path` (if present) and keeps appending to it.
    pub fn with_journal(mut self, path: &Path) -> std::io::Result<Self> {
        let recovered = Journal::recover(path)?;
        if !recovered.is_empty() {
            tracing::info!(count = recovered.len(), path = %path.display(), "recovered missions from journal");
        }
        {
            let mut map = self.missions.write().expect("registry lock poisoned");
            for (id, state) in recovered {
                map.insert(id, Arc::new(Slot::new(state)));
            }
        }
        self.journal = Some(Journal::open(path)?);
        Ok(self)
    }

    /// Registers a provider for `llm` interpretation. The first one becomes
    /// the default.
    pub fn with_llm(mut self, interpreter: LlmInterpreter) -> Self {
        let id = interpreter.profile.id.clone();
        self.default_llm.get_or_insert_with(|| id.clone());
        self.llm.insert(id, interpreter);
        self
    }

    fn slot(&self, id: &str) -> Result<Arc<Slot>, MissionError> {
        self.missions
            .read()
            .expect("registry lock poisoned")
            .get(id)
            .cloned()
            .ok_or_else(|| MissionError::MissionNotFound(id.to_string()))
    }

    fn commit(&self, slot: &Slot, state: MissionState) -> Result<Arc<MissionState>, MissionError> {
        if let Some(j) = &self.journal {
            j.append(&state).map_err(|e| MissionError::Internal(format!("journal write failed: {e}")))?;
        }
        let seq = state.last_seq();
        let state = Arc::new(state);
        *slot.snapshot.write().expect("snapshot lock poisoned") = state.clone();
        slot.last_seq.send_replace(seq);
        Ok(state)
    }

    pub fn mission_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.missions.read().expect("registry lock poisoned").keys().cloned().collect();
        ids.sort();
        ids
    }

    pub fn create(&self, map: GridMap) -> Result<String, MissionError> {
        let id = uuid::Uuid::new_v4().simple().to_string();
        let state = MissionState::create(id.clone(), map)?;
        if let Some(j) = &self.journal {
            j.append(&state).map_err(|e| MissionError::Internal(format!("journal write failed: {e}")))?;
        }
        self.missions
            .write()
            .expect("registry lock poisoned")
            .insert(id.clone(), Arc::new(Slot::new(state)));
        tracing::info!(mission = %id, "mission created");
        Ok(id)
    }

    pub fn get(&self, id: &str) -> Result<Arc<MissionState>, MissionError> {
        Ok(self.slot(id)?.read())
    }

    pub async fn step(&self, id: &str) -> Result<Arc<MissionState>, MissionError> {
        let slot = self.slot(id)?;
        let _writer = slot.writer.lock().await;
        let mut next = (*slot.read()).clone();
        next.step()?;
        self.commit(&slot, next)
    }

    /// Failed interpretation leaves the mission untouched. A re-plan failure
    /// commits the aborted state and still reports `NoPath`.
    pub async fn apply_context(
        &self,
        id: &str,
        utterance: &str,
        interpreter: InterpreterChoice,
        provider: Option<&str>,
    ) -> Result<Arc<MissionState>, MissionError> {
        let slot = self.slot(id)?;
        let _writer = slot.writer.lock().await;
        let current = slot.read();
        match current.phase {
            crate::mission::Phase::Landed => return Err(MissionError::AlreadyLanded),
            crate::mission::Phase::Aborted => return Err(MissionError::MissionAborted),
            _ => {}
        }
        let zones = match interpreter {
            InterpreterChoice::Deterministic => interpret_deterministic(utterance, &current.map)?,
            InterpreterChoice::Llm => {
                let pid = provider.map(str::to_string).or_else(|| self.default_llm.clone());
                let llm = pid
                    .as_deref()
                    .and_then(|p| self.llm.get(p))
                    .cloned()
                    .ok_or_else(|| InterpretError::Provider(format!("no llm provider '{}' configured", pid.unwrap_or_default())))?;
                let (u, snapshot) = (utterance.to_string(), current.clone());
                tokio::task::spawn_blocking(move || llm.interpret(&u, &snapshot.map, &snapshot.zones))
                    .await
                    .map_err(|e| MissionError::Internal(e.to_string()))??
            }
        };
        let mut next = (*current).clone();
        match next.apply_zones(utterance, zones) {
            Ok(()) => self.commit(&slot, next),
            Err(e @ MissionError::NoPath(_)) => {
                self.commit(&slot, next)?;
                Err(e)
            }
            Err(e) => Err(e),
        }
    }

    /// Events with `seq > since`. With a `wait`, blocks until one arrives or
    /// the wait (capped at [`MAX_WAIT`]) elapses.
    pub async fn events(&self, id: &str, since: u64, wait: Option<Duration>) -> Result<Vec<MissionEvent>, MissionError> {
        let slot = self.slot(id)?;
        let mut rx = slot.last_seq.subscribe();
        let deadline = tokio::time::Instant::now() + wait.unwrap_or_default().min(MAX_WAIT);
        loop {
            let state = slot.read();
            let events = state.events_since(since);
            if !events.is_empty() {
                return Ok(events.to_vec());
            }
            if tokio::time::timeout_at(deadline, rx.changed()).await.is_err() {
                return Ok(Vec::new());
            }
        }
    }
}
