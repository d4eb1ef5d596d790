//! Extraction backends: the request/response contract, deterministic fixture
//! replay, and a call log used for provenance.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::RawTriples;

pub const TOP_LEVEL_INSTRUCTION: &str = "top_level.v1";
pub const CORRECT_INSTRUCTION: &str = "correct.v1";
pub const REFINE_INSTRUCTION: &str = "refine.v1";

const TOP_LEVEL_TEMPLATE: &str = include_str!("../../templates/top_level.v1.txt");
const CORRECT_TEMPLATE: &str = include_str!("../../templates/correct.v1.txt");
const REFINE_TEMPLATE: &str = include_str!("../../templates/refine.v1.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RequestMode {
    Extract,
    Correct,
    Refine,
}

impl RequestMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            RequestMode::Extract => "extract",
            RequestMode::Correct => "correct",
            RequestMode::Refine => "refine",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackendRequest {
    pub mode: RequestMode,
    pub instruction: String,
    pub input: String,
}

impl BackendRequest {
    pub fn extract(sentence: &str) -> Self {
        Self {
            mode: RequestMode::Extract,
            instruction: TOP_LEVEL_INSTRUCTION.to_string(),
            input: sentence.to_string(),
        }
    }

    pub fn correct(input: String) -> Self {
        Self {
            mode: RequestMode::Correct,
            instruction: CORRECT_INSTRUCTION.to_string(),
            input,
        }
    }

    /// Refinement of `label`; `focus` lists concepts the split should expose.
    pub fn refine(label: &str, focus: &[String]) -> Self {
        let mut input = label.to_string();
        if !focus.is_empty() {
            input.push_str("\nfocus: ");
            input.push_str(&focus.join("; "));
        }
        Self {
            mode: RequestMode::Refine,
            instruction: REFINE_INSTRUCTION.to_string(),
            input,
        }
    }

    /// Stable SHA-256 over (mode, instruction id, input text), hex encoded.
    pub fn fixture_key(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.mode.as_str().as_bytes());
        hasher.update([0x1f]);
        hasher.update(self.instruction.as_bytes());
        hasher.update([0x1f]);
        hasher.update(self.input.as_bytes());
        hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Full instruction text sent to a remote model.
    pub fn render_prompt(&self) -> Result<String, BackendError> {
        let template = match self.instruction.as_str() {
            TOP_LEVEL_INSTRUCTION => TOP_LEVEL_TEMPLATE,
            CORRECT_INSTRUCTION => CORRECT_TEMPLATE,
            REFINE_INSTRUCTION => REFINE_TEMPLATE,
            other => return Err(BackendError::UnknownInstruction(other.to_string())),
        };
        Ok(template.replace("{{input}}", &self.input))
    }
}

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("backend unreachable: {0}")]
    Unreachable(String),
    #[error("no fixture for {mode} request {key} (input: {input:?})")]
    FixtureMissing { key: String, mode: &'static str, input: String },
    #[error("malformed backend response: {0}")]
    Malformed(String),
    #[error("unknown instruction id {0}")]
    UnknownInstruction(String),
    #[error("fixture {path}: {message}")]
    FixtureFile { path: PathBuf, message: String },
}

/// Anything that can answer extraction, correction and refinement requests.
pub trait ExtractionBackend: Send + Sync {
    /// `"fixture"` or `"remote"`; recorded in bundle provenance.
    fn mode_name(&self) -> &str;

    fn complete(&self, request: &BackendRequest) -> Result<RawTriples, BackendError>;
}

impl<B: ExtractionBackend + ?Sized> ExtractionBackend for &B {
    fn mode_name(&self) -> &str {
        (**self).mode_name()
    }

    fn complete(&self, request: &BackendRequest) -> Result<RawTriples, BackendError> {
        (**self).complete(request)
    }
}

impl<B: ExtractionBackend + ?Sized> ExtractionBackend for Box<B> {
    fn mode_name(&self) -> &str {
        (**self).mode_name()
    }

    fn complete(&self, request: &BackendRequest) -> Result<RawTriples, BackendError> {
        (**self).complete(request)
    }
}

/// One recorded backend exchange as stored on disk.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureEntry {
    /// Optional on input; checked against the recomputed key when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub key: Option<String>,
    pub mode: RequestMode,
    pub instruction: String,
    pub input: String,
    pub response: RawTriples,
}

impl FixtureEntry {
    pub fn new(request: &BackendRequest, response: RawTriples) -> Self {
        Self {
            key: Some(request.fixture_key()),
            mode: request.mode,
            instruction: request.instruction.clone(),
            input: request.input.clone(),
            response,
        }
    }

    pub fn request(&self) -> BackendRequest {
        BackendRequest {
            mode: self.mode,
            instruction: self.instruction.clone(),
            input: self.input.clone(),
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum FixtureFile {
    One(FixtureEntry),
    Many(Vec<FixtureEntry>),
}

/// Replays stored responses keyed by [`BackendRequest::fixture_key`].
#[derive(Debug, Clone, Default)]
pub struct FixtureBackend {
    entries: BTreeMap<String, RawTriples>,
}

impl FixtureBackend {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, request: &BackendRequest, response: RawTriples) {
        self.entries.insert(request.fixture_key(), response);
    }

    pub fn with(mut self, request: &BackendRequest, response: RawTriples) -> Self {
        self.insert(request, response);
        self
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn add_entry(&mut self, entry: FixtureEntry) -> Result<(), String> {
        let key = entry.request().fixture_key();
        if let Some(stated) = &entry.key {
            if stated != &key {
                return Err(format!("stated key {stated} does not match computed key {key}"));
            }
        }
        self.entries.insert(key, entry.response);
        Ok(())
    }

    /// Loads every `*.json` file in `dir`; each holds one entry or a list.
    pub fn from_dir(dir: impl AsRef<Path>) -> Result<Self, BackendError> {
        let dir = dir.as_ref();
        let read_err = |path: &Path, message: String| BackendError::FixtureFile {
            path: path.to_path_buf(),
            message,
        };
        let mut paths: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(|e| read_err(dir, e.to_string()))?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|ext| ext == "json"))
            .collect();
        paths.sort();
        let mut backend = Self::new();
        for path in paths {
            let raw = fs::read_to_string(&path).map_err(|e| read_err(&path, e.to_string()))?;
            let parsed: FixtureFile = serde_json::from_str(&raw).map_err(|e| read_err(&path, e.to_string()))?;
            let entries = match parsed {
                FixtureFile::One(entry) => vec![entry],
                FixtureFile::Many(entries) => entries,
            };
            for entry in entries {
                backend.add_entry(entry).map_err(|m| read_err(&path, m))?;
            }
        }
        Ok(backend)
    }
}

impl ExtractionBackend for FixtureBackend {
    fn mode_name(&self) -> &str {
        "fixture"
    }

    fn complete(&self, request: &BackendRequest) -> Result<RawTriples, BackendError> {
        let key = request.fixture_key();
        self.entries
            .get(&key)
            .cloned()
            .ok_or_else(|| BackendError::FixtureMissing {
                key,
                mode: request.mode.as_str(),
                input: request.input.clone(),
            })
    }
}

/// Wraps a backend and records the key of every request it forwards.
pub struct CallLog<B> {
    inner: B,
    keys: Mutex<Vec<String>>,
}

impl<B: ExtractionBackend> CallLog<B> {
    pub fn new(inner: B) -> Self {
        Self {
            inner,
            keys: Mutex::new(Vec::new()),
        }
    }

    pub fn calls(&self) -> usize {
        self.keys.lock().expect("call log poisoned").len()
    }

    pub fn keys(&self) -> Vec<String> {
        self.keys.lock().expect("call log poisoned").clone()
    }
}

impl<B: ExtractionBackend> ExtractionBackend for CallLog<B> {
    fn mode_name(&self) -> &str {
        self.inner.mode_name()
    }

    fn complete(&self, request: &BackendRequest) -> Result<RawTriples, BackendError> {
        self.keys.lock().expect("call log poisoned").push(request.fixture_key());
        self.inner.complete(request)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::{RawEntity, Relation};

    fn response() -> RawTriples {
        RawTriples {
            entities: vec![RawEntity::new("e1", "a"), RawEntity::new("e2", "b")],
            relations: vec![Relation::new("e1", "e2", "r")],
        }
    }

    #[test]
    fn keys_are_stable_and_distinguish_fields() {
        let a = BackendRequest::extract("Some sentence.");
        assert_eq!(a.fixture_key(), BackendRequest::extract("Some sentence.").fixture_key());
        assert_eq!(a.fixture_key().len(), 64);
        let mut b = a.clone();
        b.mode = RequestMode::Refine;
        assert_ne!(a.fixture_key(), b.fixture_key());
        assert_ne!(
            BackendRequest::refine("x", &[]).fixture_key(),
            BackendRequest::refine("x", &["y".into()]).fixture_key()
        );
    }

    #[test]
    fn replay_and_missing() {
        let req = BackendRequest::extract("s");
        let backend = FixtureBackend::new().with(&req, response());
        assert_eq!(backend.complete(&req).unwrap(), response());
        let err = backend.complete(&BackendRequest::extract("other")).unwrap_err();
        assert!(matches!(err, BackendError::FixtureMissing { .. }));
    }

    #[test]
    fn loads_directory_and_checks_keys() {
        let dir = std::env::temp_dir().join(format!("nestgraph-fixture-test-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let req = BackendRequest::extract("s");
        let entry = FixtureEntry::new(&req, response());
        fs::write(dir.join("one.json"), serde_json::to_string(&entry).unwrap()).unwrap();
        let mut unkeyed = FixtureEntry::new(&BackendRequest::refine("x", &[]), response());
        unkeyed.key = None;
        fs::write(dir.join("many.json"), serde_json::to_string(&vec![unkeyed]).unwrap()).unwrap();
        fs::write(dir.join("ignored.txt"), "not json").unwrap();
        let backend = FixtureBackend::from_dir(&dir).unwrap();
        assert_eq!(backend.len(), 2);

        let mut bad = entry.clone();
        bad.key = Some("0".repeat(64));
        fs::write(dir.join("bad.json"), serde_json::to_string(&bad).unwrap()).unwrap();
        assert!(matches!(FixtureBackend::from_dir(&dir), Err(BackendError::FixtureFile { .. })));
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn prompts_embed_input() {
        let prompt = BackendRequest::refine("the buildup of carbon dioxide", &["carbon dioxide".into()])
            .render_prompt()
            .unwrap();
        assert!(prompt.contains("the buildup of carbon dioxide\nfocus: carbon dioxide"));
        let mut odd = BackendRequest::extract("s");
        odd.instruction = "nope".into();
        assert!(odd.render_prompt().is_err());
    }

    #[test]
    fn call_log_counts() {
        let req = BackendRequest::extract("s");
        let log = CallLog::new(FixtureBackend::new().with(&req, response()));
        log.complete(&req).unwrap();
        let _ = log.complete(&BackendRequest::extract("t"));
        assert_eq!(log.calls(), 2);
        assert_eq!(log.keys()[0], req.fixture_key());
    }
}
