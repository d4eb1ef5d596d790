//! Precision/recall/F1 of predicted triples against a gold corpus.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::text::canonical_key;
use super::TripleSet;
use crate::graph_model::SentenceId;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub total_gold: usize,
    pub total_extracted: usize,
    pub correct: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// `num / den` as a percentage in tenths, rounded half-up; 0 when `den` is 0.
///
/// Integer arithmetic keeps the rounding exact at the .x5 boundary.
pub fn percent_tenths(num: usize, den: usize) -> u64 {
    if den == 0 {
        return 0;
    }
    let (num, den) = (num as u64, den as u64);
    (2000 * num + den) / (2 * den)
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn tenths(v: u64) -> String {
    format!("{}.{}", v / 10, v % 10)
}

impl Metrics {
    pub fn from_counts(total_gold: usize, total_extracted: usize, correct: usize) -> Self {
        Self {
            total_gold,
            total_extracted,
            correct,
            precision: ratio(correct, total_extracted),
            recall: ratio(correct, total_gold),
            f1: ratio(2 * correct, total_gold + total_extracted),
        }
    }

    pub fn precision_tenths(&self) -> u64 {
        percent_tenths(self.correct, self.total_extracted)
    }

    pub fn recall_tenths(&self) -> u64 {
        percent_tenths(self.correct, self.total_gold)
    }

    pub fn f1_tenths(&self) -> u64 {
        percent_tenths(2 * self.correct, self.total_gold + self.total_extracted)
    }

    /// Precision, recall and F1 as percentages with one decimal.
    pub fn display_percentages(&self) -> (String, String, String) {
        (
            tenths(self.precision_tenths()),
            tenths(self.recall_tenths()),
            tenths(self.f1_tenths()),
        )
    }
}

impl fmt::Display for Metrics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (p, r, f1) = self.display_percentages();
        write!(
            f,
            "gold={} extracted={} correct={} P={p} R={r} F1={f1}",
            self.total_gold, self.total_extracted, self.correct
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtractionScores {
    pub entities: Metrics,
    pub relations: Metrics,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScoreError {
    #[error("sentence {0} appears more than once in the {1} corpus")]
    DuplicateSentence(SentenceId, &'static str),
    #[error("corpora are misaligned: sentences only in gold {only_gold:?}, only in predicted {only_predicted:?}")]
    Misaligned {
        only_gold: Vec<SentenceId>,
        only_predicted: Vec<SentenceId>,
    },
}

fn index<'a>(corpus: &'a [TripleSet], name: &'static str) -> Result<BTreeMap<&'a SentenceId, &'a TripleSet>, ScoreError> {
    let mut map = BTreeMap::new();
    for ts in corpus {
        if map.insert(&ts.sentence_id, ts).is_some() {
            return Err(ScoreError::DuplicateSentence(ts.sentence_id.clone(), name));
        }
    }
    Ok(map)
}

fn entity_keys(ts: &TripleSet) -> BTreeMap<String, usize> {
    let mut bag = BTreeMap::new();
    for e in &ts.entities {
        *bag.entry(canonical_key(&e.label)).or_insert(0) += 1;
    }
    bag
}

fn relation_keys(ts: &TripleSet) -> BTreeMap<(String, String, String), usize> {
    let labels: BTreeMap<&str, String> = ts.entities.iter().map(|e| (e.key.as_str(), canonical_key(&e.label))).collect();
    let resolve = |key: &str| labels.get(key).cloned().unwrap_or_else(|| canonical_key(key));
    let mut bag = BTreeMap::new();
    for r in &ts.relations {
        let key = (resolve(&r.source), resolve(&r.target), canonical_key(&r.label));
        *bag.entry(key).or_insert(0) += 1;
    }
    bag
}

fn intersection<K: Ord>(a: &BTreeMap<K, usize>, b: &BTreeMap<K, usize>) -> usize {
    a.iter().map(|(k, n)| (*n).min(b.get(k).copied().unwrap_or(0))).sum()
}

/// Scores entities by canonical key and relations by (source, target,
/// label) after canonicalization, both as multisets per sentence.
pub fn score_extraction(predicted: &[TripleSet], gold: &[TripleSet]) -> Result<ExtractionScores, ScoreError> {
    let p = index(predicted, "predicted")?;
    let g = index(gold, "gold")?;
    let pk: BTreeSet<_> = p.keys().collect();
    let gk: BTreeSet<_> = g.keys().collect();
    if pk != gk {
        return Err(ScoreError::Misaligned {
            only_gold: gk.difference(&pk).map(|id| (**id).clone()).collect(),
            only_predicted: pk.difference(&gk).map(|id| (**id).clone()).collect(),
        });
    }
    let (mut eg, mut ee, mut ec) = (0, 0, 0);
    let (mut rg, mut re, mut rc) = (0, 0, 0);
    for (id, gold_ts) in &g {
        let pred_ts = p[id];
        let (gb, pb) = (entity_keys(gold_ts), entity_keys(pred_ts));
        eg += gold_ts.entities.len();
        ee += pred_ts.entities.len();
        ec += intersection(&gb, &pb);
        let (gb, pb) = (relation_keys(gold_ts), relation_keys(pred_ts));
        rg += gold_ts.relations.len();
        re += pred_ts.relations.len();
        rc += intersection(&gb, &pb);
    }
    Ok(ExtractionScores {
        entities: Metrics::from_counts(eg, ee, ec),
        relations: Metrics::from_counts(rg, re, rc),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::{ExtractedEntity, Relation};

    fn ts(id: &str, entities: &[(&str, &str)], relations: &[(&str, &str, &str)]) -> TripleSet {
        TripleSet {
            sentence_id: id.into(),
            entities: entities
                .iter()
                .map(|(k, l)| ExtractedEntity {
                    key: k.to_string(),
                    label: l.to_string(),
                    span: None,
                })
                .collect(),
            relations: relations.iter().map(|(s, t, l)| Relation::new(*s, *t, *l)).collect(),
        }
    }

    #[test]
    fn table_counts_round_as_published() {
        let e = Metrics::from_counts(1046, 1069, 995);
        assert_eq!(e.display_percentages(), ("93.1".into(), "95.1".into(), "94.1".into()));
        let r = Metrics::from_counts(637, 601, 534);
        assert_eq!(r.display_percentages(), ("88.9".into(), "83.8".into(), "86.3".into()));
    }

    #[test]
    fn half_up_rounding() {
        // 1/8 = 12.5% exactly; 1/16 = 6.25% rounds to 6.3.
        assert_eq!(percent_tenths(1, 8), 125);
        assert_eq!(percent_tenths(1, 16), 63);
        assert_eq!(percent_tenths(0, 0), 0);
        assert_eq!(percent_tenths(3, 3), 1000);
    }

    #[test]
    fn identity_corpus_scores_perfectly() {
        let corpus = vec![
            ts("s0", &[("a", "The Rise"), ("b", "carbon dioxide")], &[("a", "b", "of")]),
            ts("s1", &[("c", "forests")], &[]),
        ];
        let s = score_extraction(&corpus, &corpus).unwrap();
        assert_eq!(s.entities.display_percentages(), ("100.0".into(), "100.0".into(), "100.0".into()));
        assert_eq!(s.relations.f1, 1.0);
    }

    #[test]
    fn canonical_matching_and_multisets() {
        let gold = vec![ts(
            "s0",
            &[("a", "the atmosphere"), ("b", "heat"), ("c", "heat")],
            &[("a", "b", "traps"), ("a", "c", "traps")],
        )];
        let pred = vec![ts(
            "s0",
            &[("x", "Atmosphere"), ("y", "heat"), ("z", "sunlight")],
            &[("x", "y", "Traps"), ("x", "z", "traps")],
        )];
        let s = score_extraction(&pred, &gold).unwrap();
        assert_eq!((s.entities.total_gold, s.entities.total_extracted, s.entities.correct), (3, 3, 2));
        assert_eq!((s.relations.total_gold, s.relations.total_extracted, s.relations.correct), (2, 2, 1));
    }

    #[test]
    fn zero_denominators() {
        let m = Metrics::from_counts(0, 0, 0);
        assert_eq!((m.precision, m.recall, m.f1), (0.0, 0.0, 0.0));
    }

    #[test]
    fn misaligned_corpora_fail() {
        let gold = vec![ts("s0", &[], &[]), ts("s1", &[], &[])];
        let pred = vec![ts("s0", &[], &[]), ts("s2", &[], &[])];
        assert_eq!(
            score_extraction(&pred, &gold),
            Err(ScoreError::Misaligned {
                only_gold: vec!["s1".into()],
                only_predicted: vec!["s2".into()],
            })
        );
        let dup = vec![ts("s0", &[], &[]), ts("s0", &[], &[])];
        assert!(matches!(score_extraction(&dup, &dup), Err(ScoreError::DuplicateSentence(..))));
    }
}
