//! Ingestion pipeline, bundle storage, SVG export, HTTP API and CLI.

pub mod bundle;
pub mod cli;
pub mod http;
pub mod pipeline;
pub mod remote;
pub mod svg;

pub use bundle::{DocumentBundle, Provenance, Refusal, Store, StoreError};
pub use pipeline::{document_id, ingest, IngestConfig, IngestError};
pub use svg::{export_svg, SvgError};
