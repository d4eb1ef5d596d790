//! Nested entity-relationship graphs built from text, with layout,
//! progressive-reveal timelines and review queries.

pub mod decomposition;
pub mod graph_model;
pub mod layout;
pub mod review;
pub mod segment;
pub mod timeline;
