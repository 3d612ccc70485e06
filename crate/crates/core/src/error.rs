//! Error values shared across the reasoning core.

use alloc::string::String;
use core::fmt;

/// Errors raised by the reasoning core.
///
/// "Unsupported fragment" answers are mostly returned as values (see
/// [`crate::procedures::CheckedApplicability`] and
/// [`crate::readiness::ReadinessOutcome`]); this type covers genuine failures:
/// malformed inputs, precondition violations and exhausted resource caps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// A relation name is not part of the schema at hand.
    UnknownRelation(String),
    /// An attribute is not assigned to the given relation.
    UnknownAttribute { relation: String, attribute: String },
    /// A tuple does not range over exactly the relation's attributes.
    MalformedTuple { relation: String, detail: String },
    /// A query or dependency failed structural validation.
    MalformedExpression(String),
    /// Two instances were expected to share a schema.
    SchemaMismatch(String),
    /// A query or dependency is not compatible with the schema it is used on.
    Incompatible(String),
    /// An operation required a full tgd set.
    NotFull(String),
    /// An operation required an acyclic tgd set.
    NotAcyclic(String),
    /// An operation required a weakly acyclic dependency set.
    NotWeaklyAcyclic(String),
    /// A procedure does not belong to the class an algorithm requires.
    /// Carries the name of the failed classification flag.
    ClassViolation {
        procedure: String,
        flag: &'static str,
        detail: String,
    },
    /// An SKB flag (full / acyclic / safe) required by an operation is false.
    FlagViolation { flag: &'static str, detail: String },
    /// A configured resource cap was exceeded.
    ResourceExhausted { what: &'static str, limit: u64 },
    /// The input lies outside the decidable fragment the engine implements.
    Unsupported(String),
    /// An internal consistency check failed; indicates a bug.
    Internal(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::UnknownRelation(r) => write!(f, "unknown relation {r}"),
            Error::UnknownAttribute {
                relation,
                attribute,
            } => {
                write!(f, "relation {relation} has no attribute {attribute}")
            }
            Error::MalformedTuple { relation, detail } => {
                write!(f, "malformed tuple for {relation}: {detail}")
            }
            Error::MalformedExpression(d) => write!(f, "malformed expression: {d}"),
            Error::SchemaMismatch(d) => write!(f, "schema mismatch: {d}"),
            Error::Incompatible(d) => write!(f, "incompatible with schema: {d}"),
            Error::NotFull(d) => write!(f, "tgd set is not full: {d}"),
            Error::NotAcyclic(d) => write!(f, "tgd set is not acyclic: {d}"),
            Error::NotWeaklyAcyclic(d) => write!(f, "dependency set is not weakly acyclic: {d}"),
            Error::ClassViolation {
                procedure,
                flag,
                detail,
            } => {
                write!(f, "procedure {procedure} violates {flag}: {detail}")
            }
            Error::FlagViolation { flag, detail } => {
                write!(f, "scoped knowledge base violates {flag}: {detail}")
            }
            Error::ResourceExhausted { what, limit } => {
                write!(f, "resource cap exceeded: {what} (limit {limit})")
            }
            Error::Unsupported(d) => write!(f, "unsupported fragment: {d}"),
            Error::Internal(d) => write!(f, "internal error: {d}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
