//! Seeded generators, brute-force oracles and invariant checks shared by the
//! test suites. Nothing here is used by the library itself.

pub mod check;
pub mod gen;
pub mod oracle;

pub use check::{layout_violations, timeline_violations};
pub use gen::{random_digraph, random_nested_doc, random_prefix_chain, NestedDocParams};
pub use oracle::{brute_force_longest_cycle, brute_force_ranks};
