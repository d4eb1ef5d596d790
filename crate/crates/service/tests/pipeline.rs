use std::collections::BTreeSet;
use std::fs;

use nestgraph_core::decomposition::{
    BackendRequest, ExtractionError, FixtureBackend, FixtureEntry, RawEntity, RawTriples, Relation,
};
use nestgraph_core::timeline::{replay, EventKind};
use nestgraph_service::pipeline::StageError;
use nestgraph_service::{export_svg, ingest, IngestConfig, IngestError, Store};

const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/climate");

fn passage() -> String {
    fs::read_to_string(format!("{FIXTURES}/passage.txt")).unwrap()
}

fn backend() -> FixtureBackend {
    FixtureBackend::from_dir(FIXTURES).unwrap()
}

#[test]
fn empty_text_is_rejected() {
    for text in ["", "  \n\t "] {
        assert!(matches!(
            ingest(text, &IngestConfig::default(), &backend()),
            Err(IngestError::EmptyText)
        ));
    }
}

#[test]
fn single_sentence_has_one_plain_block() {
    let first = passage().split(". ").next().unwrap().to_string() + ".";
    let bundle = ingest(&first, &IngestConfig::default(), &backend()).unwrap();
    assert_eq!(bundle.timeline.blocks.len(), 1);
    let kinds: Vec<EventKind> = bundle.timeline.blocks[0].events.iter().map(|e| e.kind).collect();
    assert!(!kinds.contains(&EventKind::DimExisting));
    assert!(!kinds.contains(&EventKind::NodeSplit));
    assert_eq!(bundle.document.nodes.len(), 2);
    // The complex phrase was offered for refinement and declined.
    assert_eq!(bundle.provenance.refusals.len(), 1);
}

#[test]
fn climate_bundle_is_consistent() {
    let bundle = ingest(&passage(), &IngestConfig::default(), &backend()).unwrap();
    let n = bundle.sentence_count();
    assert_eq!(n, 4);
    assert_eq!(bundle.layouts.len(), n);
    assert_eq!(bundle.timeline.blocks.len(), n);
    assert!(bundle.layouts.iter().all(|r| r.converged));
    assert_eq!(&replay(&bundle.timeline), bundle.final_layout().unwrap());
    assert_eq!(bundle.provenance.backend, "fixture");
    // Unrelated third sentence opens a second column.
    let columns: Vec<usize> = bundle.timeline.columns.values().copied().collect();
    assert_eq!(columns, vec![0, 0, 1, 0]);
    let entities: Vec<u64> = bundle.entities.iter().map(|e| e.score).collect();
    assert!(entities.windows(2).all(|w| w[0] >= w[1]));
}

#[test]
fn every_recorded_fixture_is_used() {
    let bundle = ingest(&passage(), &IngestConfig::default(), &backend()).unwrap();
    let mut recorded = BTreeSet::new();
    for name in ["extract", "correct", "refine"] {
        let json = fs::read_to_string(format!("{FIXTURES}/{name}.json")).unwrap();
        let entries: Vec<FixtureEntry> = serde_json::from_str(&json).unwrap();
        recorded.extend(entries.iter().map(|e| e.request().fixture_key()));
    }
    let used: BTreeSet<String> = bundle.provenance.requests.iter().cloned().collect();
    assert_eq!(used, recorded);
}

#[test]
fn ingestion_is_byte_deterministic() {
    let a = ingest(&passage(), &IngestConfig::default(), &backend()).unwrap();
    let b = ingest(&passage(), &IngestConfig::default(), &backend()).unwrap();
    assert_eq!(a.to_json(), b.to_json());
    for k in 0..=a.sentence_count() {
        assert_eq!(export_svg(&a, k).unwrap(), export_svg(&b, k).unwrap(), "prefix {k}");
    }
}

#[test]
fn second_sentence_splits_and_moves_before_revealing() {
    let bundle = ingest(&passage(), &IngestConfig::default(), &backend()).unwrap();
    let coarse = bundle
        .document
        .nodes
        .iter()
        .find(|n| n.label == "the buildup of carbon dioxide in the air")
        .unwrap();
    assert!(coarse.is_composite());
    let events = &bundle.timeline.blocks[1].events;
    let at = |kind: EventKind| events.iter().position(|e| e.kind == kind);
    let dim = at(EventKind::DimExisting).unwrap();
    let split = at(EventKind::NodeSplit).unwrap();
    let moved = at(EventKind::NodeMove).unwrap();
    let reveal = events
        .iter()
        .position(|e| matches!(e.kind, EventKind::RevealNode | EventKind::RevealEdge))
        .unwrap();
    assert!(dim < split && split < moved && moved < reveal);
    let split_event = &events[split];
    assert_eq!(split_event.subjects[0], coarse.id.as_str());
    assert!(split_event.subjects[1..].len() >= 3);
}

#[test]
fn stored_bundles_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let store = Store::open(dir.path()).unwrap();
    let bundle = ingest(&passage(), &IngestConfig::default(), &backend()).unwrap();
    let path = store.save(&bundle).unwrap();
    assert_eq!(fs::read_to_string(&path).unwrap(), bundle.to_json());
    assert_eq!(store.load(&bundle.id).unwrap(), bundle);
    // Only the bundle itself remains in the directory.
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    assert!(store.load("0000000000000000").is_err());
    assert!(store.load("../etc/passwd").is_err());
}

#[test]
fn config_changes_the_document_id() {
    let mut config = IngestConfig::default();
    let a = ingest(&passage(), &config, &backend()).unwrap();
    config.layout.grid_interval = 4.0;
    let b = ingest(&passage(), &config, &backend()).unwrap();
    assert_ne!(a.id, b.id);
    assert_eq!(a.document.nodes.len(), b.document.nodes.len());
}

#[test]
fn failures_name_the_sentence() {
    let text = passage() + " Glaciers retreat.";
    match ingest(&text, &IngestConfig::default(), &backend()) {
        Err(IngestError::Sentence { sentence, cause }) => {
            assert_eq!(sentence, 4);
            assert!(cause.is_backend());
        }
        other => panic!("unexpected {other:?}"),
    }

    // A correction that never fixes the orphan gives up after two rounds.
    let sentence = "Glaciers retreat quickly.";
    let orphan = RawTriples {
        entities: vec![RawEntity::new("e1", "Glaciers")],
        relations: vec![],
    };
    let request = BackendRequest::extract(sentence);
    let mut stuck = FixtureBackend::new().with(&request, orphan.clone());
    let input = nestgraph_core::decomposition::correction_input(
        sentence,
        &orphan,
        &nestgraph_core::decomposition::check_triples(&orphan),
    );
    stuck.insert(&BackendRequest::correct(input), orphan);
    match ingest(sentence, &IngestConfig::default(), &stuck) {
        Err(IngestError::Sentence {
            sentence: 0,
            cause: StageError::Extraction(ExtractionError::Unrepaired { rounds: 2, .. }),
        }) => {}
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn invalid_configuration_is_rejected() {
    let mut config = IngestConfig::default();
    config.layout.damping = 1.5;
    assert!(matches!(ingest(&passage(), &config, &backend()), Err(IngestError::Config(_))));
}

#[test]
fn refinements_with_unknown_labels_keep_the_entity_atomic() {
    let sentence = "Methane released by wetlands warms the planet.";
    let backend = FixtureBackend::new()
        .with(
            &BackendRequest::extract(sentence),
            RawTriples {
                entities: vec![RawEntity::new("a", "Methane released by wetlands"), RawEntity::new("b", "the planet")],
                relations: vec![Relation::new("a", "b", "warms")],
            },
        )
        .with(
            &BackendRequest::refine("Methane released by wetlands", &[]),
            RawTriples {
                entities: vec![RawEntity::new("x", "methane"), RawEntity::new("y", "peat bogs")],
                relations: vec![Relation::new("x", "y", "released by")],
            },
        );
    let bundle = ingest(sentence, &IngestConfig::default(), &backend).unwrap();
    assert!(bundle.document.nodes.iter().all(|n| n.is_atomic()));
    assert_eq!(bundle.provenance.refusals.len(), 1);
    assert!(bundle.provenance.refusals[0].reason.contains("peat bogs"));
}
