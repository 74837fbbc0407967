use std::fs;
use std::path::{Path, PathBuf};

use serde_json::Value;

use super::{SessionError, SessionState};
use crate::canonical::to_canonical_pretty;

pub const SESSION_FORMAT: &str = "ema-session";
pub const SESSION_VERSION: u64 = 1;

/// Session snapshots, one `<id>.session.json` file per session.
#[derive(Debug, Clone)]
pub struct SessionStore {
    dir: PathBuf,
}

fn io(path: &Path, e: std::io::Error) -> SessionError {
    SessionError::Io { path: path.display().to_string(), message: e.to_string() }
}

impl SessionStore {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, SessionError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| io(&dir, e))?;
        Ok(SessionStore { dir })
    }

    pub fn path(&self, id: &str) -> PathBuf {
        self.dir.join(format!("{id}.session.json"))
    }

    /// Write via a temporary file and rename, so a crash never leaves a torn snapshot.
    pub fn save(&self, state: &SessionState) -> Result<(), SessionError> {
        let path = self.path(&state.id);
        let tmp = self.dir.join(format!(".{}.tmp", state.id));
        let text = to_canonical_pretty(&serde_json::json!({
            "format": SESSION_FORMAT,
            "version": SESSION_VERSION,
            "state": state,
        }));
        fs::write(&tmp, text).map_err(|e| io(&tmp, e))?;
        fs::rename(&tmp, &path).map_err(|e| io(&path, e))
    }

    pub fn load(&self, id: &str) -> Result<SessionState, SessionError> {
        let path = self.path(id);
        let text = fs::read_to_string(&path).map_err(|e| io(&path, e))?;
        parse_snapshot(&text)
    }

    /// Every stored session, sorted by id.
    pub fn load_all(&self) -> Result<Vec<SessionState>, SessionError> {
        let entries = fs::read_dir(&self.dir).map_err(|e| io(&self.dir, e))?;
        let mut out = Vec::new();
        for entry in entries {
            let entry = entry.map_err(|e| io(&self.dir, e))?;
            let name = entry.file_name().to_string_lossy().into_owned();
            if let Some(id) = name.strip_suffix(".session.json") {
                out.push(self.load(id)?);
            }
        }
        out.sort_by(|a, b| a.id.cmp(&b.id));
        Ok(out)
    }
}

fn parse_snapshot(text: &str) -> Result<SessionState, SessionError> {
    let doc: Value = serde_json::from_str(text).map_err(|e| SessionError::Corrupt(format!("session snapshot: {e}")))?;
    if doc.get("format").and_then(Value::as_str) != Some(SESSION_FORMAT) {
        return Err(SessionError::Corrupt("not a session snapshot".into()));
    }
    let version = doc.get("version").and_then(Value::as_u64).unwrap_or(0);
    if version != SESSION_VERSION {
        return Err(SessionError::VersionMismatch { found: version, supported: SESSION_VERSION });
    }
    serde_json::from_value(doc["state"].clone()).map_err(|e| SessionError::Corrupt(format!("session snapshot: {e}")))
}
