//! Procedure descriptions, classification, applicability, the
//! scope-complement query, and the direct outcome-membership checker.
//!
//! A procedure is a black box described by what it may touch (scope), what
//! must hold before (pre) and after (post), and which query answers survive
//! (preserve). The outcome checker decides membership in a procedure's
//! outcome set clause by clause; the symbolic representations elsewhere in
//! this crate are validated against it through the bounded oracle.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::lang::{
    classify_tgd_set, eval_cq, satisfies_all, Cq, Dependency, Egd, NamedAtom, StructureConstraint,
    StructureSpec, Term, Tgd, TotalQuery, Var,
};
use crate::model::{unnamed_tuples, AttrName, Instance, RelName, Schema, Value};

/// A pre- or postcondition entry: a data dependency or a structure
/// constraint.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum Condition {
    Tgd(Tgd),
    Egd(Egd),
    Structure(StructureConstraint),
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Condition::Tgd(t) => write!(f, "{t}"),
            Condition::Egd(e) => write!(f, "{e}"),
            Condition::Structure(s) => write!(f, "{s}"),
        }
    }
}

/// A preservation query: conjunctive (answers over its free variables) or
/// total (all unnamed tuples of one relation, whatever its arity).
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum PreserveQuery {
    Cq(Cq),
    Total(TotalQuery),
}

impl PreserveQuery {
    pub fn compatible(&self, schema: &Schema) -> bool {
        match self {
            PreserveQuery::Cq(q) => q.compatible(schema),
            PreserveQuery::Total(t) => schema.contains(&t.rel),
        }
    }
}

impl fmt::Display for PreserveQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PreserveQuery::Cq(q) => write!(f, "{q}"),
            PreserveQuery::Total(t) => write!(f, "{t}"),
        }
    }
}

/// A black-box data-transforming procedure.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Procedure {
    pub name: String,
    pub scope: Vec<StructureConstraint>,
    pub pre: Vec<Condition>,
    pub post: Vec<Condition>,
    pub preserve: Vec<PreserveQuery>,
}

impl Procedure {
    pub fn post_tgds(&self) -> Vec<Tgd> {
        self.post
            .iter()
            .filter_map(|c| match c {
                Condition::Tgd(t) => Some(t.clone()),
                _ => None,
            })
            .collect()
    }

    pub fn post_structures(&self) -> Vec<StructureConstraint> {
        self.post
            .iter()
            .filter_map(|c| match c {
                Condition::Structure(s) => Some(s.clone()),
                _ => None,
            })
            .collect()
    }

    pub fn pre_structures(&self) -> Vec<StructureConstraint> {
        self.pre
            .iter()
            .filter_map(|c| match c {
                Condition::Structure(s) => Some(s.clone()),
                _ => None,
            })
            .collect()
    }

    pub fn pre_data(&self) -> Vec<Dependency> {
        self.pre
            .iter()
            .filter_map(|c| match c {
                Condition::Tgd(t) => Some(Dependency::Tgd(t.clone())),
                Condition::Egd(e) => Some(Dependency::Egd(e.clone())),
                Condition::Structure(_) => None,
            })
            .collect()
    }

    /// Relation names of the scope, for scopes made of `R[*]` constraints.
    pub fn scope_relations(&self) -> BTreeSet<RelName> {
        self.scope.iter().map(|c| c.rel.clone()).collect()
    }
}

/// Semantic classification of a procedure, computed eagerly at catalog load.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProcedureClass {
    /// No preconditions, acyclic tgd postconditions, scope exactly the
    /// conclusion relations as wildcards, and one total preservation query
    /// per scoped relation. Guarantees nonempty outcome sets.
    pub safe_scope: bool,
    /// Empty scope and preservation set, structure-constraint postconditions
    /// only. Models pure schema growth.
    pub safe_alteration: bool,
    /// The postconditions place demands on the schema itself, so outcomes
    /// may be forced onto extended schemas.
    pub forces_alteration: bool,
}

/// Classifies a procedure. `safe_scope` and `safe_alteration` can hold
/// together only for a procedure with empty postconditions, which is a no-op.
pub fn classify(p: &Procedure) -> ProcedureClass {
    let tgds = p.post_tgds();
    let safe_scope = p.pre.is_empty()
        && p.post.iter().all(|c| matches!(c, Condition::Tgd(_)))
        && classify_tgd_set(tgds.iter()).acyclic
        && scope_is_exactly_conclusions(p, &tgds)
        && preserve_is_exactly_scope_totals(p);
    let safe_alteration = p.scope.is_empty()
        && p.preserve.is_empty()
        && p.post.iter().all(|c| matches!(c, Condition::Structure(_)));
    let forces_alteration = !p.post_structures().is_empty();
    ProcedureClass {
        safe_scope,
        safe_alteration,
        forces_alteration,
    }
}

fn scope_is_exactly_conclusions(p: &Procedure, tgds: &[Tgd]) -> bool {
    let conclusions: BTreeSet<RelName> =
        tgds.iter().flat_map(|t| t.conclusion_relations()).collect();
    let wildcards: BTreeSet<RelName> = p
        .scope
        .iter()
        .filter(|c| matches!(c.spec, StructureSpec::Wildcard))
        .map(|c| c.rel.clone())
        .collect();
    wildcards == conclusions && p.scope.len() == wildcards.len()
}

fn preserve_is_exactly_scope_totals(p: &Procedure) -> bool {
    let totals: BTreeSet<RelName> = p
        .preserve
        .iter()
        .filter_map(|q| match q {
            PreserveQuery::Total(t) => Some(t.rel.clone()),
            PreserveQuery::Cq(_) => None,
        })
        .collect();
    totals == p.scope_relations() && p.preserve.len() == totals.len()
}

/// Requires a procedure to be safe-scope with full tgds, the class the SKB
/// algorithms work on. Returns the postcondition tgds.
pub fn require_safe_scope_full(p: &Procedure) -> Result<Vec<Tgd>> {
    let class = classify(p);
    if !class.safe_scope {
        return Err(Error::ClassViolation {
            procedure: p.name.clone(),
            flag: "safe_scope",
            detail: "preconditions must be empty, postconditions an acyclic tgd set, scope the \
                     conclusion relations, preservation the scoped totals"
                .into(),
        });
    }
    let tgds = p.post_tgds();
    if !classify_tgd_set(tgds.iter()).full {
        return Err(Error::ClassViolation {
            procedure: p.name.clone(),
            flag: "full",
            detail: "postcondition tgds must not use existential conclusion variables".into(),
        });
    }
    Ok(tgds)
}

/// The scope-complement query: retrieves the projection of the database over
/// every relation and attribute the constraint set does not mention. Atom
/// order follows relation-name order, variable order follows the attribute
/// order, so the output is unique for a given input.
pub fn scope_complement_query(schema: &Schema, scope: &[StructureConstraint]) -> Result<Cq> {
    for c in scope {
        if !schema.contains(&c.rel) {
            return Err(Error::UnknownRelation(c.rel.to_string()));
        }
    }
    let mentioned: BTreeSet<&RelName> = scope.iter().map(|c| &c.rel).collect();
    let wildcarded: BTreeSet<&RelName> = scope
        .iter()
        .filter(|c| matches!(c.spec, StructureSpec::Wildcard))
        .map(|c| &c.rel)
        .collect();

    let mut atoms = Vec::new();
    let mut counter = 0usize;
    for (rel, attrs) in schema.relations() {
        let keep: Vec<AttrName> = if !mentioned.contains(rel) {
            attrs.to_vec()
        } else if wildcarded.contains(rel) {
            continue;
        } else {
            let shielded: BTreeSet<&AttrName> = scope
                .iter()
                .filter(|c| &c.rel == rel)
                .flat_map(|c| match &c.spec {
                    StructureSpec::Attrs(a) => a.iter().collect::<Vec<_>>(),
                    StructureSpec::Wildcard => Vec::new(),
                })
                .collect();
            attrs
                .iter()
                .filter(|a| !shielded.contains(a))
                .cloned()
                .collect()
        };
        let bindings: Vec<(AttrName, Term)> = keep
            .into_iter()
            .map(|a| {
                let t = Term::var(&alloc::format!("x{counter}"));
                counter += 1;
                (a, t)
            })
            .collect();
        atoms.push(NamedAtom::new(rel.clone(), bindings)?);
    }
    Cq::all_free(atoms)
}

/// Applicability: every preservation query is compatible with the schema and
/// the instance satisfies the preconditions (structure constraints at the
/// schema level, data constraints over the instance).
pub fn is_applicable(p: &Procedure, i: &Instance) -> bool {
    p.preserve.iter().all(|q| q.compatible(i.schema()))
        && satisfies_all(i, &p.pre_structures(), &p.pre_data())
}

/// Semantics mode: static keeps the schema fixed, dynamic lets outcomes live
/// on any extending schema.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Static,
    Dynamic,
}

/// How the scope-complement pinning clause compares answers.
///
/// `Conjoined` evaluates the single conjunction query, whose answer set is a
/// cross product and therefore collapses to empty when any pinned relation is
/// empty. `PerRelation` compares each atom's projection separately, which is
/// the reading under which the knowledge-base representations are exact; the
/// oracle uses it when validating them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PinSemantics {
    Conjoined,
    PerRelation,
}

/// Membership in the outcome set of applying `p` to `i`, checked clause by
/// clause: applicability, postconditions on `j`, the scope-complement pin,
/// and preservation. Static mode additionally requires equal schemas.
pub fn is_possible_outcome(p: &Procedure, i: &Instance, j: &Instance, mode: Mode) -> bool {
    is_possible_outcome_with(p, i, j, mode, PinSemantics::Conjoined)
}

/// [`is_possible_outcome`] with an explicit pinning semantics.
pub fn is_possible_outcome_with(
    p: &Procedure,
    i: &Instance,
    j: &Instance,
    mode: Mode,
    pin: PinSemantics,
) -> bool {
    if mode == Mode::Static && i.schema() != j.schema() {
        return false;
    }
    if mode == Mode::Dynamic && !crate::model::schema_extends(j.schema(), i.schema()) {
        return false;
    }
    // (1) applicability
    if !is_applicable(p, i) {
        return false;
    }
    // (2) postconditions hold on j
    let post_structures = p.post_structures();
    let post_data: Vec<Dependency> = p
        .post
        .iter()
        .filter_map(|c| match c {
            Condition::Tgd(t) => Some(Dependency::Tgd(t.clone())),
            Condition::Egd(e) => Some(Dependency::Egd(e.clone())),
            Condition::Structure(_) => None,
        })
        .collect();
    if !satisfies_all(j, &post_structures, &post_data) {
        return false;
    }
    // (3) the scope-complement answers do not change
    let complement = match scope_complement_query(i.schema(), &p.scope) {
        Ok(q) => q,
        Err(_) => return false,
    };
    let pinned = match pin {
        PinSemantics::Conjoined => {
            let on_i = eval_cq(&complement, i);
            let on_j = eval_cq(&complement, j);
            match (on_i, on_j) {
                (Ok(a), Ok(b)) => a == b,
                _ => false,
            }
        }
        PinSemantics::PerRelation => complement.atoms().iter().all(|atom| {
            let attrs: Vec<AttrName> = atom.bindings().iter().map(|(a, _)| a.clone()).collect();
            match (
                crate::model::project(i, &atom.rel, &attrs),
                crate::model::project(j, &atom.rel, &attrs),
            ) {
                (Ok(a), Ok(b)) => a == b,
                _ => false,
            }
        }),
    };
    if !pinned {
        return false;
    }
    // (4) preservation: answers over i survive into j
    p.preserve.iter().all(|q| preserved(q, i, j))
}

fn preserved(q: &PreserveQuery, i: &Instance, j: &Instance) -> bool {
    match q {
        PreserveQuery::Cq(cq) => match (eval_cq(cq, i), eval_cq(cq, j)) {
            (Ok(a), Ok(b)) => a.is_subset(&b),
            _ => false,
        },
        PreserveQuery::Total(t) => match (unnamed_tuples(i, &t.rel), unnamed_tuples(j, &t.rel)) {
            (Ok(a), Ok(b)) => a.is_subset(&b),
            _ => false,
        },
    }
}

/// Answer of the sequence-applicability check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CheckedApplicability {
    Supported(bool),
    /// The sequence falls outside the decidable fragments this engine
    /// implements (preconditions beyond structure constraints).
    Unsupported(String),
}

/// Decides whether every procedure in the sequence is guaranteed applicable,
/// whatever outcomes the earlier ones produce. Trivially true without
/// preconditions; decided through minimal-schema folding when preconditions
/// are structure constraints only; unsupported otherwise (the general
/// problem is undecidable).
pub fn check_applicability_sequence(ps: &[Procedure], s: &Schema) -> CheckedApplicability {
    if ps.iter().all(|p| p.pre.is_empty()) {
        return CheckedApplicability::Supported(true);
    }
    if ps
        .iter()
        .all(|p| p.pre.iter().all(|c| matches!(c, Condition::Structure(_))))
    {
        return match crate::dynschema::applicability_dyn(ps, s) {
            Ok(answer) => CheckedApplicability::Supported(answer.holds),
            Err(e) => CheckedApplicability::Unsupported(e.to_string()),
        };
    }
    CheckedApplicability::Unsupported(
        "applicability with tgd or egd preconditions is undecidable; only empty or \
         structure-constraint preconditions are supported"
            .into(),
    )
}

/// Fresh-variable helper shared by tests.
pub fn var(s: &str) -> Var {
    Var::new(s)
}

/// Grounds the atoms of a conjunctive query under an assignment, yielding
/// (relation, tuple) pairs restricted to the atoms' attributes. Used to
/// freeze dependency bodies.
pub fn ground_atoms(
    atoms: &[NamedAtom],
    assignment: &crate::lang::Assignment,
) -> Vec<(RelName, Vec<(AttrName, Value)>)> {
    atoms
        .iter()
        .map(|atom| {
            let pairs = atom
                .bindings()
                .iter()
                .map(|(a, t)| {
                    let v = match t {
                        Term::Const(c) => c.clone(),
                        Term::Var(v) => assignment[v].clone(),
                    };
                    (a.clone(), v)
                })
                .collect();
            (atom.rel.clone(), pairs)
        })
        .collect()
}
