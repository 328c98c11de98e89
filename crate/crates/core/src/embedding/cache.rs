use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{EmbedError, EmbeddingProvider};

#[derive(Serialize, Deserialize)]
struct CacheLine {
    key: String,
    vector: Vec<f64>,
}

/// JSON Lines vector cache keyed by provider name, model and chunk id.
#[derive(Debug, Clone, Default)]
pub struct VectorCache {
    path: Option<PathBuf>,
    vectors: BTreeMap<String, Vec<f64>>,
    dirty: bool,
}

impl VectorCache {
    pub fn key(provider: &dyn EmbeddingProvider, chunk_id: &str) -> String {
        format!("{}|{}|{}", provider.name(), provider.model(), chunk_id)
    }

    /// Loads the cache at `path`; a missing file yields an empty cache.
    pub fn open(path: impl Into<PathBuf>) -> Result<Self, EmbedError> {
        let path = path.into();
        let mut vectors = BTreeMap::new();
        if path.exists() {
            let lines: Vec<CacheLine> =
                crate::corpus::read_jsonl(&path).map_err(|e| EmbedError::Cache(e.to_string()))?;
            for line in lines {
                vectors.insert(line.key, line.vector);
            }
        }
        Ok(Self {
            path: Some(path),
            vectors,
            dirty: false,
        })
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, provider: &dyn EmbeddingProvider, chunk_id: &str) -> Option<&[f64]> {
        self.vectors.get(&Self::key(provider, chunk_id)).map(Vec::as_slice)
    }

    pub fn insert(&mut self, provider: &dyn EmbeddingProvider, chunk_id: &str, vector: Vec<f64>) {
        self.vectors.insert(Self::key(provider, chunk_id), vector);
        self.dirty = true;
    }

    /// Writes the cache back to its file, sorted by key, if anything changed.
    pub fn save(&mut self) -> Result<(), EmbedError> {
        let Some(path) = self.path.as_deref() else {
            return Ok(());
        };
        if !self.dirty {
            return Ok(());
        }
        write_atomic(path, &self.vectors).map_err(|e| EmbedError::Cache(format!("{}: {e}", path.display())))?;
        self.dirty = false;
        Ok(())
    }
}

fn write_atomic(path: &Path, vectors: &BTreeMap<String, Vec<f64>>) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    {
        let mut w = std::io::BufWriter::new(tmp.as_file_mut());
        for (key, vector) in vectors {
            let line = serde_json::to_string(&CacheLine {
                key: key.clone(),
                vector: vector.clone(),
            })?;
            writeln!(w, "{line}")?;
        }
        w.flush()?;
    }
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}
