//! Text in, bundle out: sentence-by-sentence extraction and merging, then
//! layout of every prefix, the timeline and the entity ranking.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use nestgraph_core::decomposition::{
    decompose_entity, extract_top_level, match_entities, merge_sentence, repair_extraction, select_decomposition_targets,
    CallLog, ComplexityRule, DecomposeError, DecompositionTarget, ExtractionBackend, ExtractionError, MergeError,
};
use nestgraph_core::graph_model::{char_slice, Document};
use nestgraph_core::layout::{progressive_layout, ConfigError, DefaultMetrics, LayoutConfig};
use nestgraph_core::review::rank_entities;
use nestgraph_core::segment::split_sentences;
use nestgraph_core::timeline::{assign_columns, compile_timeline, TimelineError};

use crate::bundle::{DocumentBundle, Provenance, Refusal};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IngestConfig {
    pub layout: LayoutConfig,
    pub complexity: ComplexityRule,
    pub max_repair_rounds: usize,
}

impl Default for IngestConfig {
    fn default() -> Self {
        Self {
            layout: LayoutConfig::default(),
            complexity: ComplexityRule::default(),
            max_repair_rounds: 2,
        }
    }
}

#[derive(Debug, Error)]
pub enum StageError {
    #[error(transparent)]
    Extraction(#[from] ExtractionError),
    #[error(transparent)]
    Decompose(#[from] DecomposeError),
    #[error(transparent)]
    Merge(#[from] MergeError),
}

impl StageError {
    /// Whether the failure came from the backend rather than its answer.
    pub fn is_backend(&self) -> bool {
        matches!(
            self,
            StageError::Extraction(ExtractionError::Backend(_)) | StageError::Decompose(DecomposeError::Backend(_))
        )
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("input text is empty")]
    EmptyText,
    #[error("invalid configuration: {0}")]
    Config(#[from] ConfigError),
    #[error("sentence {sentence}: {cause}")]
    Sentence { sentence: usize, cause: StageError },
    #[error(transparent)]
    Timeline(#[from] TimelineError),
}

/// Document id for a text under a configuration: the first 16 hex digits
/// of a SHA-256 over both.
pub fn document_id(text: &str, config: &IngestConfig) -> String {
    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    hasher.update([0x1f]);
    hasher.update(serde_json::to_vec(config).expect("config serialization cannot fail"));
    hasher.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// Runs the whole pipeline over `text`.
///
/// A refinement the backend declines, or answers unusably, leaves the
/// entity atomic and is recorded under `provenance.refusals`. Backend
/// failures, unrepairable extractions and merge errors abort.
pub fn ingest(text: &str, config: &IngestConfig, backend: &dyn ExtractionBackend) -> Result<DocumentBundle, IngestError> {
    if text.trim().is_empty() {
        return Err(IngestError::EmptyText);
    }
    config.layout.validate()?;
    let id = document_id(text, config);
    let log = CallLog::new(backend);
    let mut doc = Document::new(id.clone(), text);
    let mut prefixes = Vec::new();
    let mut refusals = Vec::new();

    for sentence in split_sentences(text) {
        let at = |cause: StageError| IngestError::Sentence {
            sentence: sentence.order,
            cause,
        };
        let sentence_text = char_slice(text, sentence.start, sentence.end).unwrap_or_default();
        let ts = extract_top_level(&sentence.id, sentence_text, &log).map_err(|e| at(e.into()))?;
        let ts = repair_extraction(ts, sentence_text, &log, config.max_repair_rounds).map_err(|e| at(e.into()))?;
        let matches = match_entities(&doc, &ts);
        let targets = select_decomposition_targets(&doc, &ts, &matches, &config.complexity);

        let mut refinements = BTreeMap::new();
        for (target, focus) in targets {
            let label = match &target {
                DecompositionTarget::Entity(key) => ts.entity(key).map(|e| e.label.clone()),
                DecompositionTarget::Node(id) => doc.node(id).map(|n| n.label.clone()),
            };
            let Some(label) = label else { continue };
            let focus: Vec<String> = focus.into_iter().collect();
            match decompose_entity(&label, &focus, &log) {
                Ok(r) => {
                    refinements.insert(target, r);
                }
                Err(DecomposeError::Backend(e)) => return Err(at(DecomposeError::Backend(e).into())),
                Err(e) => refusals.push(Refusal {
                    sentence: sentence.order,
                    label,
                    reason: e.to_string(),
                }),
            }
        }
        doc = merge_sentence(&doc, &sentence, &ts, &refinements).map_err(|e| at(e.into()))?;
        prefixes.push(doc.clone());
    }

    let columns = assign_columns(&doc);
    let layouts = progressive_layout(&prefixes, &columns, &config.layout, &DefaultMetrics);
    let snapshots: Vec<_> = layouts.iter().map(|r| r.state.clone()).collect();
    let timeline = compile_timeline(&prefixes, &snapshots, &config.layout, &DefaultMetrics)?;
    let entities = rank_entities(&doc);
    doc.canonicalize();
    Ok(DocumentBundle {
        id,
        document: doc,
        layouts,
        timeline,
        entities,
        config: config.clone(),
        provenance: Provenance {
            backend: backend.mode_name().to_string(),
            requests: log.keys(),
            refusals,
        },
    })
}
