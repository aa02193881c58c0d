//! Named QBAF handles, optionally mirrored to one file per handle.

use std::collections::HashMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use ewqbaf::{parse_qbaf, serialize_qbaf, Qbaf};

#[derive(Debug, Clone)]
pub struct Handle {
    pub id: String,
    /// Seconds since the Unix epoch.
    pub created_at: u64,
    pub qbaf: Arc<Qbaf>,
}

#[derive(Debug, Default)]
pub struct Store {
    handles: RwLock<HashMap<String, Handle>>,
    dir: Option<PathBuf>,
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

fn valid_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 64 && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-')
}

impl Store {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Opens `dir`, creating it if needed, and loads every `<id>.json` in it.
    pub fn open(dir: impl Into<PathBuf>) -> io::Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        let mut handles = HashMap::new();
        for entry in fs::read_dir(&dir)? {
            let path = entry?.path();
            let Some(id) = path
                .file_name()
                .and_then(|n| n.to_str())
                .and_then(|n| n.strip_suffix(".json"))
                .filter(|id| valid_id(id))
            else {
                continue;
            };
            let Ok(qbaf) = fs::read(&path).map_err(|_| ()).and_then(|b| parse_qbaf(&b).map_err(|_| ())) else {
                eprintln!("skipping unreadable store file {}", path.display());
                continue;
            };
            let created_at = fs::metadata(&path)
                .and_then(|m| m.modified())
                .ok()
                .and_then(|t| t.duration_since(UNIX_EPOCH).ok())
                .map_or(0, |d| d.as_secs());
            handles.insert(id.to_string(), Handle { id: id.to_string(), created_at, qbaf: Arc::new(qbaf) });
        }
        Ok(Self { handles: RwLock::new(handles), dir: Some(dir) })
    }

    pub fn len(&self) -> usize {
        self.handles.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, id: &str) -> Option<Handle> {
        self.handles.read().unwrap().get(id).cloned()
    }

    pub fn insert(&self, qbaf: Qbaf) -> io::Result<Handle> {
        let handle = Handle {
            id: uuid::Uuid::new_v4().simple().to_string(),
            created_at: now(),
            qbaf: Arc::new(qbaf),
        };
        self.persist(&handle)?;
        self.handles.write().unwrap().insert(handle.id.clone(), handle.clone());
        Ok(handle)
    }

    /// Swaps in a new QBAF for `id`. Readers holding the old snapshot keep it.
    pub fn replace(&self, id: &str, qbaf: Qbaf) -> io::Result<Option<Handle>> {
        let mut handles = self.handles.write().unwrap();
        let Some(existing) = handles.get(id) else {
            return Ok(None);
        };
        let handle = Handle { qbaf: Arc::new(qbaf), ..existing.clone() };
        self.persist(&handle)?;
        handles.insert(id.to_string(), handle.clone());
        Ok(Some(handle))
    }

    fn persist(&self, handle: &Handle) -> io::Result<()> {
        let Some(dir) = &self.dir else {
            return Ok(());
        };
        write_atomic(&dir.join(format!("{}.json", handle.id)), &serialize_qbaf(&handle.qbaf))
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let tmp = path.with_extension("json.tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(tmp, path)
}
