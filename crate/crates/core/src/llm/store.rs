use std::collections::BTreeMap;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::Usage;
use crate::fsutil::write_atomic;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordedResponse {
    pub key: String,
    pub model_id: String,
    pub text: String,
    #[serde(default)]
    pub usage: Usage,
}

/// JSON-lines file of responses keyed by request hash. Later lines win.
pub struct RecordingStore {
    path: PathBuf,
    entries: Mutex<BTreeMap<String, RecordedResponse>>,
}

impl RecordingStore {
    /// Opens `path`, loading existing recordings. A missing file is an empty store.
    pub fn open(path: impl AsRef<Path>) -> std::io::Result<Self> {
        let path = path.as_ref().to_path_buf();
        let mut entries = BTreeMap::new();
        match std::fs::File::open(&path) {
            Ok(file) => {
                for (n, line) in BufReader::new(file).lines().enumerate() {
                    let line = line?;
                    if line.trim().is_empty() {
                        continue;
                    }
                    let entry: RecordedResponse = serde_json::from_str(&line).map_err(|e| {
                        std::io::Error::new(
                            std::io::ErrorKind::InvalidData,
                            format!("{}:{}: {e}", path.display(), n + 1),
                        )
                    })?;
                    entries.insert(entry.key.clone(), entry);
                }
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
            Err(e) => return Err(e),
        }
        Ok(Self {
            path,
            entries: Mutex::new(entries),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn get(&self, key: &str) -> Option<RecordedResponse> {
        self.entries.lock().expect("store lock").get(key).cloned()
    }

    pub fn len(&self) -> usize {
        self.entries.lock().expect("store lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Inserts and rewrites the file atomically, sorted by key.
    pub fn put(&self, entry: RecordedResponse) -> std::io::Result<()> {
        let mut entries = self.entries.lock().expect("store lock");
        entries.insert(entry.key.clone(), entry);
        let mut out = String::new();
        for e in entries.values() {
            out.push_str(&serde_json::to_string(e).expect("entries serialize"));
            out.push('\n');
        }
        write_atomic(&self.path, out.as_bytes())
    }
}
