//! Reasoning core for black-box data-transforming procedures over relational
//! data.
//!
//! Procedures are described by a scope, pre- and postconditions, and
//! preservation queries; this crate decides whether sequences of such
//! procedures apply, represents their outcome sets symbolically (scoped
//! knowledge bases for the static case, positive conditional instances for
//! the schema-altering case), answers entailment and certain-answer questions
//! over those representations, and searches for workflows that ready data for
//! a goal. A brute-force oracle over bounded universes backs every symbolic
//! algorithm in the test suites.
//!
//! The crate is `no_std` (with `alloc`); everything is pure and deterministic,
//! so values can be shared and checked from concurrent drivers.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod chase;
pub mod condtab;
pub mod dynschema;
pub mod entail;
pub mod error;
pub mod lang;
pub mod model;
pub mod oracle;
pub mod procedures;
pub mod readiness;
pub mod skb;

pub use error::{Error, Result};

/// Resource caps enforced by the engine. Exceeding a cap yields
/// [`Error::ResourceExhausted`] rather than an unbounded computation; the
/// worst-case blowups are intrinsic to the problems, not artifacts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    /// Maximum chase triggers fired in one run.
    pub chase_steps: u64,
    /// Maximum tgds kept in a scoped knowledge base.
    pub gamma_tgds: u64,
    /// Maximum candidate instances an oracle enumeration may visit.
    pub oracle_candidates: u64,
    /// Maximum variables a dependency premise may have when enumerating
    /// frozen-body assignment families.
    pub premise_vars: u64,
    /// Maximum rows a conditional instance may hold.
    pub condtab_tuples: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            chase_steps: 1_000_000,
            gamma_tgds: 100_000,
            oracle_candidates: 1_000_000,
            premise_vars: 8,
            condtab_tuples: 100_000,
        }
    }
}

impl Budget {
    /// A uniform override of the counting caps, keeping the premise-variable
    /// cap at its default. Used by the CLI's `CHASEMITH_BUDGET` variable.
    pub fn with_cap(cap: u64) -> Self {
        Budget {
            chase_steps: cap,
            gamma_tgds: cap,
            oracle_candidates: cap,
            premise_vars: Budget::default().premise_vars,
            condtab_tuples: cap,
        }
    }
}
