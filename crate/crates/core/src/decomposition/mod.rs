//! Sentence-by-sentence entity-relation extraction with on-demand refinement.
//!
//! Each sentence goes through: top-level extraction, local repair of the two
//! structural error classes (orphan entities, dangling relation endpoints),
//! matching against entities already in the document, selection of entities
//! to refine, refinement, and finally a merge into the growing document.

pub mod backend;
mod merge;
mod score;
pub mod text;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use backend::{BackendError, BackendRequest, CallLog, ExtractionBackend, FixtureBackend, FixtureEntry, RequestMode};
pub use merge::{match_entities, merge_sentence, EntityMatch, MatchKind, MergeError};
pub use score::{score_extraction, ExtractionScores, Metrics, ScoreError};
pub use text::{canonical_key, ComplexityRule};

use crate::graph_model::{Document, NodeId, SentenceId, TextSpan};
use text::find_case_insensitive;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawEntity {
    pub key: String,
    pub label: String,
}

impl RawEntity {
    pub fn new(key: impl Into<String>, label: impl Into<String>) -> Self {
        Self {
            key: key.into(),
            label: label.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Relation {
    pub source: String,
    pub target: String,
    pub label: String,
}

impl Relation {
    pub fn new(source: impl Into<String>, target: impl Into<String>, label: impl Into<String>) -> Self {
        Self {
            source: source.into(),
            target: target.into(),
            label: label.into(),
        }
    }
}

/// Backend response body: entities and relations without text anchors.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RawTriples {
    pub entities: Vec<RawEntity>,
    #[serde(default)]
    pub relations: Vec<Relation>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractedEntity {
    pub key: String,
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub span: Option<TextSpan>,
}

/// Extraction output for one sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TripleSet {
    pub sentence_id: SentenceId,
    pub entities: Vec<ExtractedEntity>,
    #[serde(default)]
    pub relations: Vec<Relation>,
}

impl TripleSet {
    pub fn entity(&self, key: &str) -> Option<&ExtractedEntity> {
        self.entities.iter().find(|e| e.key == key)
    }

    pub fn to_raw(&self) -> RawTriples {
        RawTriples {
            entities: self.entities.iter().map(|e| RawEntity::new(&e.key, &e.label)).collect(),
            relations: self.relations.clone(),
        }
    }
}

/// The two error classes repaired after extraction.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum TripleViolation {
    /// A relation names an entity key that is not in the entity list.
    MissingEndpoint { relation: usize, key: String },
    /// An entity takes part in no relation.
    OrphanEntity { key: String },
}

impl std::fmt::Display for TripleViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TripleViolation::MissingEndpoint { relation, key } => {
                write!(f, "relation {relation} references missing entity \"{key}\"")
            }
            TripleViolation::OrphanEntity { key } => write!(f, "entity \"{key}\" has no relation"),
        }
    }
}

/// Deterministic local check for both repair targets.
pub fn check_triples(raw: &RawTriples) -> Vec<TripleViolation> {
    let keys: BTreeSet<&str> = raw.entities.iter().map(|e| e.key.as_str()).collect();
    let mut violations = Vec::new();
    for (i, r) in raw.relations.iter().enumerate() {
        for key in [&r.source, &r.target] {
            if !keys.contains(key.as_str()) {
                violations.push(TripleViolation::MissingEndpoint {
                    relation: i,
                    key: key.clone(),
                });
            }
        }
    }
    let used: BTreeSet<&str> = raw
        .relations
        .iter()
        .flat_map(|r| [r.source.as_str(), r.target.as_str()])
        .collect();
    for e in &raw.entities {
        if !used.contains(e.key.as_str()) {
            violations.push(TripleViolation::OrphanEntity { key: e.key.clone() });
        }
    }
    violations.sort();
    violations.dedup();
    violations
}

#[derive(Debug, Error)]
pub enum ExtractionError {
    #[error("sentence text is empty")]
    EmptySentence,
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("entity \"{entity}\" does not occur in the sentence")]
    SpanNotFound { entity: String },
    #[error("max_rounds must be at least 1")]
    NoRounds,
    #[error("extraction still invalid after {rounds} correction rounds: {}", list(.violations))]
    Unrepaired { rounds: usize, violations: Vec<TripleViolation> },
}

fn list(violations: &[TripleViolation]) -> String {
    violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
}

fn anchor(sentence_id: &SentenceId, sentence_text: &str, raw: RawTriples) -> Result<TripleSet, ExtractionError> {
    let entities = raw
        .entities
        .into_iter()
        .map(|e| {
            let (start, end) = find_case_insensitive(sentence_text, &e.label)
                .ok_or_else(|| ExtractionError::SpanNotFound { entity: e.label.clone() })?;
            Ok(ExtractedEntity {
                key: e.key,
                label: e.label,
                span: Some(TextSpan::new(sentence_id.clone(), start, end)),
            })
        })
        .collect::<Result<Vec<_>, ExtractionError>>()?;
    Ok(TripleSet {
        sentence_id: sentence_id.clone(),
        entities,
        relations: raw.relations,
    })
}

/// Asks the backend for the sentence's top-level triples and anchors each
/// entity to its first case-insensitive occurrence in the sentence.
pub fn extract_top_level(
    sentence_id: &SentenceId,
    sentence_text: &str,
    backend: &dyn ExtractionBackend,
) -> Result<TripleSet, ExtractionError> {
    if sentence_text.trim().is_empty() {
        return Err(ExtractionError::EmptySentence);
    }
    let raw = backend.complete(&BackendRequest::extract(sentence_text))?;
    anchor(sentence_id, sentence_text, raw)
}

/// Text sent with a correction request: the sentence, the current
/// annotation and the detected problems.
pub fn correction_input(sentence_text: &str, raw: &RawTriples, violations: &[TripleViolation]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "sentence: {sentence_text}");
    out.push_str("entities:\n");
    for e in &raw.entities {
        let _ = writeln!(out, "- {}: {}", e.key, e.label);
    }
    out.push_str("relations:\n");
    for r in &raw.relations {
        let _ = writeln!(out, "- {} -[{}]-> {}", r.source, r.label, r.target);
    }
    out.push_str("problems:\n");
    for v in violations {
        let _ = writeln!(out, "- {v}");
    }
    out
}

/// Detects orphan entities and dangling endpoints locally, and only when
/// some are present asks the backend to self-correct, up to `max_rounds`.
pub fn repair_extraction(
    ts: TripleSet,
    sentence_text: &str,
    backend: &dyn ExtractionBackend,
    max_rounds: usize,
) -> Result<TripleSet, ExtractionError> {
    if max_rounds == 0 {
        return Err(ExtractionError::NoRounds);
    }
    let mut current = ts;
    let mut violations = check_triples(&current.to_raw());
    if violations.is_empty() {
        return Ok(current);
    }
    for _ in 0..max_rounds {
        let raw = current.to_raw();
        let request = BackendRequest::correct(correction_input(sentence_text, &raw, &violations));
        let corrected = backend.complete(&request)?;
        current = anchor(&current.sentence_id, sentence_text, corrected)?;
        violations = check_triples(&current.to_raw());
        if violations.is_empty() {
            return Ok(current);
        }
    }
    Err(ExtractionError::Unrepaired {
        rounds: max_rounds,
        violations,
    })
}

/// Something to refine: an incoming entity (by key) or an existing node.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "type", content = "id", rename_all = "snake_case")]
pub enum DecompositionTarget {
    Entity(String),
    Node(NodeId),
}

/// Targets mapped to the labels of concepts the refinement should expose.
pub type DecompositionTargets = BTreeMap<DecompositionTarget, BTreeSet<String>>;

/// Chooses what to refine for one incoming sentence.
///
/// Complex unmatched entities are refined on their own; every sub-concept
/// match refines both the incoming entity and the matched earlier node
/// (when that node is still atomic), each focused on the other's label.
pub fn select_decomposition_targets(
    doc: &Document,
    ts: &TripleSet,
    matches: &[EntityMatch],
    rule: &ComplexityRule,
) -> DecompositionTargets {
    let mut targets = DecompositionTargets::new();
    let exact: BTreeSet<&str> = matches
        .iter()
        .filter(|m| m.kind == MatchKind::Exact)
        .map(|m| m.entity_key.as_str())
        .collect();
    for e in &ts.entities {
        if !exact.contains(e.key.as_str()) && rule.is_complex(&e.label) {
            targets.entry(DecompositionTarget::Entity(e.key.clone())).or_default();
        }
    }
    for m in matches.iter().filter(|m| m.kind == MatchKind::SubConcept) {
        let (Some(entity), Some(node)) = (ts.entity(&m.entity_key), doc.node(&m.node_id)) else {
            continue;
        };
        targets
            .entry(DecompositionTarget::Entity(entity.key.clone()))
            .or_default()
            .insert(node.label.clone());
        if node.is_atomic() {
            targets
                .entry(DecompositionTarget::Node(node.id.clone()))
                .or_default()
                .insert(entity.label.clone());
        }
    }
    targets
}

/// Internal structure of one refined entity. Labels are known to occur in
/// the refined label's text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Refinement {
    pub entities: Vec<RawEntity>,
    pub relations: Vec<Relation>,
}

#[derive(Debug, Error)]
pub enum DecomposeError {
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("refinement of \"{label}\" returned {entities} entities and {relations} relations; kept atomic")]
    Degenerate { label: String, entities: usize, relations: usize },
    #[error("refinement entity \"{entity}\" does not occur in \"{label}\"")]
    SpanNotFound { label: String, entity: String },
    #[error("refinement of \"{label}\" is structurally invalid: {}", list(.violations))]
    Invalid { label: String, violations: Vec<TripleViolation> },
}

/// Refines one entity label into its internal entities and relations.
pub fn decompose_entity(
    label: &str,
    focus: &[String],
    backend: &dyn ExtractionBackend,
) -> Result<Refinement, DecomposeError> {
    let raw = backend.complete(&BackendRequest::refine(label, focus))?;
    let distinct: BTreeSet<String> = raw.entities.iter().map(|e| canonical_key(&e.label)).collect();
    if distinct.len() < 2 || raw.relations.is_empty() {
        return Err(DecomposeError::Degenerate {
            label: label.to_string(),
            entities: distinct.len(),
            relations: raw.relations.len(),
        });
    }
    for e in &raw.entities {
        if find_case_insensitive(label, &e.label).is_none() {
            return Err(DecomposeError::SpanNotFound {
                label: label.to_string(),
                entity: e.label.clone(),
            });
        }
    }
    let violations = check_triples(&raw);
    if !violations.is_empty() {
        return Err(DecomposeError::Invalid {
            label: label.to_string(),
            violations,
        });
    }
    Ok(Refinement {
        entities: raw.entities,
        relations: raw.relations,
    })
}
