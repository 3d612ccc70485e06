//! Workspace loading, JSON rendering and the parallel search driver behind
//! the `chasemith` command line.

pub mod dsl;
pub mod json;
pub mod search;

pub use dsl::{parse_spec, serialize, Goal, ParseError, Workspace};
