//! The persisted result of one ingestion and the directory that holds them.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tempfile::NamedTempFile;
use thiserror::Error;

use nestgraph_core::graph_model::Document;
use nestgraph_core::layout::{LayoutRun, LayoutState};
use nestgraph_core::review::EntityRank;
use nestgraph_core::timeline::Timeline;

use crate::pipeline::IngestConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Refusal {
    pub sentence: usize,
    pub label: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    /// Backend mode name.
    pub backend: String,
    /// Fixture key of every backend request, in call order.
    pub requests: Vec<String>,
    pub refusals: Vec<Refusal>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentBundle {
    pub id: String,
    pub document: Document,
    /// Settled layout after each sentence; entry `k` covers sentences `0..=k`.
    pub layouts: Vec<LayoutRun>,
    pub timeline: Timeline,
    pub entities: Vec<EntityRank>,
    pub config: IngestConfig,
    pub provenance: Provenance,
}

impl DocumentBundle {
    pub fn sentence_count(&self) -> usize {
        self.document.sentences.len()
    }

    /// Layout after the first `k` sentences; `None` for `k == 0` or past
    /// the end.
    pub fn prefix_layout(&self, k: usize) -> Option<&LayoutState> {
        k.checked_sub(1).and_then(|i| self.layouts.get(i)).map(|r| &r.state)
    }

    pub fn final_layout(&self) -> Option<&LayoutState> {
        self.layouts.last().map(|r| &r.state)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("bundle serialization cannot fail")
    }

    pub fn from_json(json: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(json)
    }
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("no document {0}")]
    NotFound(String),
    #[error("invalid document id {0:?}")]
    BadId(String),
    #[error("bundle {id} is corrupt: {source}")]
    Corrupt { id: String, source: serde_json::Error },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// One `<id>.json` file per bundle. Files appear atomically: each is
/// written to a temporary file in the same directory and renamed.
#[derive(Debug, Clone)]
pub struct Store {
    dir: PathBuf,
}

fn valid_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 64 && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

impl Store {
    pub fn open(dir: impl Into<PathBuf>) -> io::Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, id: &str) -> Result<PathBuf, StoreError> {
        if !valid_id(id) {
            return Err(StoreError::BadId(id.to_string()));
        }
        Ok(self.dir.join(format!("{id}.json")))
    }

    pub fn contains(&self, id: &str) -> bool {
        self.path(id).is_ok_and(|p| p.is_file())
    }

    pub fn save(&self, bundle: &DocumentBundle) -> Result<PathBuf, StoreError> {
        let path = self.path(&bundle.id)?;
        let mut tmp = NamedTempFile::new_in(&self.dir)?;
        tmp.write_all(bundle.to_json().as_bytes())?;
        tmp.as_file().sync_all()?;
        tmp.persist(&path).map_err(|e| e.error)?;
        Ok(path)
    }

    pub fn load(&self, id: &str) -> Result<DocumentBundle, StoreError> {
        let path = self.path(id)?;
        let json = match fs::read_to_string(&path) {
            Ok(json) => json,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Err(StoreError::NotFound(id.to_string())),
            Err(e) => return Err(e.into()),
        };
        DocumentBundle::from_json(&json).map_err(|source| StoreError::Corrupt {
            id: id.to_string(),
            source,
        })
    }
}
