//! Label normalization and the structural-complexity heuristic.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

const ARTICLES: &[&str] = &["a", "an", "the"];

/// Tokens that never count as content when measuring label complexity.
const FUNCTION_WORDS: &[&str] = &[
    "a", "an", "the", "of", "in", "that", "which", "to", "for", "with", "by", "and", "or", "on", "at", "from", "as",
    "into", "its", "their", "this", "these", "those", "is", "are", "be",
];

/// Lower-cased, article-stripped, whitespace-normalized form of a label.
///
/// Punctuation at token edges is dropped; inner hyphens and apostrophes stay.
pub fn canonical_key(label: &str) -> String {
    label
        .split_whitespace()
        .map(|t| t.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase())
        .filter(|t| !t.is_empty() && !ARTICLES.contains(&t.as_str()))
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn key_tokens(key: &str) -> BTreeSet<&str> {
    key.split(' ').filter(|t| !t.is_empty()).collect()
}

/// Whether one canonical key's token set is a proper subset of the other's.
pub fn is_sub_concept(a: &str, b: &str) -> bool {
    let (ta, tb) = (key_tokens(a), key_tokens(b));
    if ta.is_empty() || tb.is_empty() {
        return false;
    }
    (ta.len() < tb.len() && ta.is_subset(&tb)) || (tb.len() < ta.len() && tb.is_subset(&ta))
}

/// Decides which entity labels still encode sentence structure.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplexityRule {
    pub min_content_tokens: usize,
    pub connectors: Vec<String>,
}

impl Default for ComplexityRule {
    fn default() -> Self {
        Self {
            min_content_tokens: 4,
            connectors: ["of", "in", "that", "which", "to", "for", "with", "by"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
        }
    }
}

impl ComplexityRule {
    pub fn content_tokens(label: &str) -> usize {
        let key = canonical_key(label);
        key_tokens(&key)
            .into_iter()
            .filter(|t| !FUNCTION_WORDS.contains(t))
            .count()
    }

    pub fn is_complex(&self, label: &str) -> bool {
        let key = canonical_key(label);
        let has_connector = key.split(' ').any(|t| self.connectors.iter().any(|c| c == t));
        has_connector || Self::content_tokens(label) >= self.min_content_tokens
    }
}

/// Case-insensitive search returning character offsets of the leftmost hit.
pub fn find_case_insensitive(haystack: &str, needle: &str) -> Option<(usize, usize)> {
    let hay: Vec<char> = haystack.chars().collect();
    let pat: Vec<char> = needle.trim().chars().collect();
    if pat.is_empty() || pat.len() > hay.len() {
        return None;
    }
    let eq = |a: char, b: char| a == b || a.to_lowercase().eq(b.to_lowercase());
    (0..=hay.len() - pat.len())
        .find(|&i| pat.iter().enumerate().all(|(j, &p)| eq(hay[i + j], p)))
        .map(|i| (i, i + pat.len()))
}
