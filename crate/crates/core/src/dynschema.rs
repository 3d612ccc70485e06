//! Dynamic-semantics schema reasoning: the minimal schema every outcome of a
//! procedure must extend, sequence applicability under structure-constraint
//! preconditions, and nonemptiness for the safe classes.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::lang::{satisfies_structure, Cq, StructureSpec};
use crate::model::{AttrName, Instance, RelName, Schema};
use crate::procedures::{classify, scope_complement_query, Condition, PreserveQuery, Procedure};
use crate::Budget;

/// Result of the minimal-schema construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinimalSchemaResult {
    pub outcome: MinimalSchemaOutcome,
    /// Arity pins taken from total preservation queries.
    pub labels: BTreeMap<RelName, usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MinimalSchemaOutcome {
    Schema(Schema),
    Failure(String),
}

impl MinimalSchemaResult {
    pub fn schema(&self) -> Option<&Schema> {
        match &self.outcome {
            MinimalSchemaOutcome::Schema(s) => Some(s),
            MinimalSchemaOutcome::Failure(_) => None,
        }
    }

    pub fn failed(&self) -> bool {
        matches!(self.outcome, MinimalSchemaOutcome::Failure(_))
    }
}

/// Computes the least schema that the schema of every dynamic outcome of `p`
/// on an instance over `s` must extend, or a failure signal when no outcome
/// schema can exist.
///
/// The construction: reject early when the schema violates the structural
/// preconditions or cannot host the preservation and scope-complement
/// queries; seed from total preservation queries, pinning their arity; add
/// bare relations demanded by wildcard postconditions; collect
/// relation/attribute demands from out-of-scope relations, partially scoped
/// remainders, preservation atoms, postcondition atoms and postcondition
/// structure constraints; union the demands; fail when a pinned relation
/// outgrew its arity.
pub fn minimal_schema(p: &Procedure, s: &Schema) -> MinimalSchemaResult {
    let mut labels: BTreeMap<RelName, usize> = BTreeMap::new();
    let fail = |msg: String, labels: &BTreeMap<RelName, usize>| MinimalSchemaResult {
        outcome: MinimalSchemaOutcome::Failure(msg),
        labels: labels.clone(),
    };

    // Step 1: structural preconditions and compatibility.
    for c in p.pre_structures() {
        if !satisfies_structure(s, &c) {
            return fail(
                alloc::format!("schema does not satisfy precondition {c}"),
                &labels,
            );
        }
    }
    for q in &p.preserve {
        if !q.compatible(s) {
            return fail(
                alloc::format!("preservation query {q} is not compatible with the schema"),
                &labels,
            );
        }
    }
    if let Err(e) = scope_complement_query(s, &p.scope) {
        return fail(
            alloc::format!("scope-complement query cannot be formed: {e}"),
            &labels,
        );
    }

    // Steps 2-3: seed from total preservation queries, with arity labels.
    let mut min: BTreeMap<RelName, BTreeSet<AttrName>> = BTreeMap::new();
    for q in &p.preserve {
        if let PreserveQuery::Total(t) = q {
            let attrs = s.attrs(&t.rel).expect("compatibility checked");
            if attrs.is_empty() {
                // A total query over a relation with no attributes pins
                // nothing meaningful; reject with a diagnostic.
                return fail(
                    alloc::format!(
                        "total preservation query over {} which has no attributes",
                        t.rel
                    ),
                    &labels,
                );
            }
            labels.insert(t.rel.clone(), attrs.len());
            min.insert(t.rel.clone(), attrs.iter().cloned().collect());
        }
    }

    // Step 4: relations demanded bare by wildcard postconditions.
    for c in p.post_structures() {
        if matches!(c.spec, StructureSpec::Wildcard) {
            min.entry(c.rel.clone()).or_default();
        }
    }

    // Step 5: attribute demands.
    let mut demands: Vec<(RelName, BTreeSet<AttrName>)> = Vec::new();
    let scope_rels: BTreeSet<&RelName> = p.scope.iter().map(|c| &c.rel).collect();
    for (rel, attrs) in s.relations() {
        if !scope_rels.contains(rel) {
            demands.push((rel.clone(), attrs.iter().cloned().collect()));
        }
    }
    for c in &p.scope {
        if let StructureSpec::Attrs(shielded) = &c.spec {
            let attrs = s.attrs(&c.rel).expect("scope-complement query checked");
            let rest: BTreeSet<AttrName> = attrs
                .iter()
                .filter(|a| !shielded.contains(a))
                .cloned()
                .collect();
            demands.push((c.rel.clone(), rest));
        }
    }
    for q in &p.preserve {
        if let PreserveQuery::Cq(cq) = q {
            demands.extend(atom_demands(cq));
        }
    }
    for c in &p.post {
        match c {
            Condition::Tgd(t) => {
                demands.extend(atom_demands(&t.premise));
                demands.extend(atom_demands(&t.conclusion));
            }
            Condition::Egd(e) => demands.extend(atom_demands(&e.premise)),
            Condition::Structure(sc) => {
                if let StructureSpec::Attrs(attrs) = &sc.spec {
                    demands.push((sc.rel.clone(), attrs.iter().cloned().collect()));
                }
            }
        }
    }

    // Step 6: union the demands.
    for (rel, attrs) in demands {
        min.entry(rel).or_default().extend(attrs);
    }

    // Step 7: arity pins.
    for (rel, pin) in &labels {
        let grown = min.get(rel).map(|a| a.len()).unwrap_or(0);
        if grown > *pin {
            return fail(
                alloc::format!(
                    "total preservation query pins {rel} at arity {pin}, but the outcome \
                     schema needs {grown} attributes"
                ),
                &labels,
            );
        }
    }

    let mut schema = Schema::new();
    for (rel, attrs) in min {
        schema
            .add_relation(rel, attrs)
            .expect("sets cannot hold duplicates");
    }
    MinimalSchemaResult {
        outcome: MinimalSchemaOutcome::Schema(schema),
        labels,
    }
}

fn atom_demands(q: &Cq) -> Vec<(RelName, BTreeSet<AttrName>)> {
    q.atoms()
        .iter()
        .map(|a| {
            (
                a.rel.clone(),
                a.bindings().iter().map(|(attr, _)| attr.clone()).collect(),
            )
        })
        .collect()
}

/// Outcome of the dynamic applicability fold: the schema trace, or the step
/// that failed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DynApplicability {
    pub holds: bool,
    /// `S_0, ..., S_n` up to (and excluding) the first failure.
    pub trace: Vec<Schema>,
    /// Name of the first failing procedure plus the failure message.
    pub failure: Option<(String, String)>,
}

/// Folds the minimal-schema construction along a sequence: starting from
/// `s`, each procedure must succeed on the schema produced by the previous
/// one. Requires every precondition to be a structure constraint.
pub fn applicability_dyn(ps: &[Procedure], s: &Schema) -> Result<DynApplicability> {
    for p in ps {
        if !p.pre.iter().all(|c| matches!(c, Condition::Structure(_))) {
            return Err(Error::Unsupported(alloc::format!(
                "procedure {} has non-structural preconditions; dynamic applicability \
                 is decided only for structure-constraint preconditions",
                p.name
            )));
        }
    }
    let mut trace = alloc::vec![s.clone()];
    for p in ps {
        let current = trace.last().expect("nonempty");
        let result = minimal_schema(p, current);
        match result.outcome {
            MinimalSchemaOutcome::Schema(next) => trace.push(next),
            MinimalSchemaOutcome::Failure(msg) => {
                return Ok(DynApplicability {
                    holds: false,
                    trace,
                    failure: Some((p.name.clone(), msg)),
                })
            }
        }
    }
    Ok(DynApplicability {
        holds: true,
        trace,
        failure: None,
    })
}

/// Nonemptiness of the dynamic outcome set for sequences from the safe
/// classes: the schema fold must not fail and the conditional-instance fold
/// must produce a representation.
pub fn dyn_nonempty(i: &Instance, ps: &[Procedure]) -> Result<bool> {
    dyn_nonempty_with(i, ps, &Budget::default())
}

pub fn dyn_nonempty_with(i: &Instance, ps: &[Procedure], budget: &Budget) -> Result<bool> {
    for p in ps {
        let class = classify(p);
        if !class.safe_scope && !class.safe_alteration {
            return Err(Error::ClassViolation {
                procedure: p.name.clone(),
                flag: "safe_scope or safe_alteration",
                detail: "dynamic nonemptiness is decided for the safe classes only".to_string(),
            });
        }
    }
    let applicability = applicability_dyn(ps, i.schema())?;
    if !applicability.holds {
        return Ok(false);
    }
    match crate::condtab::outcomes_condtab_with(i, ps, budget)? {
        crate::condtab::CondOutcome::Instance(_) => Ok(true),
        crate::condtab::CondOutcome::Empty(_) => Ok(false),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{NamedAtom, StructureConstraint, Term, Tgd, TotalQuery};

    fn attr(s: &str) -> AttrName {
        AttrName::new(s)
    }

    fn rel(s: &str) -> RelName {
        RelName::new(s)
    }

    fn fig1_schema() -> Schema {
        let mut s = Schema::new();
        let visit = [attr("facility"), attr("pId"), attr("timestp")];
        s.add_relation(rel("EVisits"), visit.clone()).unwrap();
        s.add_relation(rel("LocVisits"), visit).unwrap();
        s.add_relation(rel("Patients"), [attr("insId"), attr("pId")])
            .unwrap();
        s
    }

    fn alter_proc(relation: &str, attrs: &[&str]) -> Procedure {
        Procedure {
            name: alloc::format!("alter_{relation}"),
            scope: alloc::vec![],
            pre: alloc::vec![],
            post: alloc::vec![Condition::Structure(
                StructureConstraint::attrs(rel(relation), attrs.iter().map(|a| attr(a))).unwrap()
            )],
            preserve: alloc::vec![],
        }
    }

    #[test]
    fn insurance_alteration_adds_attribute() {
        let s = fig1_schema();
        let p = alter_proc("LocVisits", &["insId"]);
        let result = minimal_schema(&p, &s);
        let out = result.schema().expect("succeeds");
        let attrs: Vec<String> = out
            .attrs(&rel("LocVisits"))
            .unwrap()
            .iter()
            .map(|a| a.to_string())
            .collect();
        assert_eq!(attrs, ["facility", "insId", "pId", "timestp"]);
        // Unscoped relations keep all their attributes.
        assert_eq!(out.attrs(&rel("Patients")).unwrap().len(), 2);
        assert_eq!(out.attrs(&rel("EVisits")).unwrap().len(), 3);
    }

    #[test]
    fn arity_pin_failure() {
        // Preserve total R with |S(R)| = 2 while the postcondition demands
        // R[A, B, C].
        let mut s = Schema::new();
        s.add_relation(rel("R"), [attr("A"), attr("B")]).unwrap();
        let p = Procedure {
            name: "grow".into(),
            scope: alloc::vec![],
            pre: alloc::vec![],
            post: alloc::vec![Condition::Structure(
                StructureConstraint::attrs(rel("R"), [attr("A"), attr("B"), attr("C")]).unwrap()
            )],
            preserve: alloc::vec![PreserveQuery::Total(TotalQuery { rel: rel("R") })],
        };
        let result = minimal_schema(&p, &s);
        assert!(result.failed());
        assert_eq!(result.labels.get(&rel("R")), Some(&2));
    }

    #[test]
    fn empty_procedure_keeps_whole_schema() {
        let s = fig1_schema();
        let p = Procedure {
            name: "noop".into(),
            scope: alloc::vec![],
            pre: alloc::vec![],
            post: alloc::vec![],
            preserve: alloc::vec![],
        };
        let result = minimal_schema(&p, &s);
        assert_eq!(result.schema(), Some(&s));
    }

    #[test]
    fn fold_with_structure_preconditions() {
        let s = fig1_schema();
        let alter = alter_proc("LocVisits", &["insId"]);
        let needs = Procedure {
            name: "needs_ins".into(),
            scope: alloc::vec![],
            pre: alloc::vec![Condition::Structure(
                StructureConstraint::attrs(rel("LocVisits"), [attr("insId")]).unwrap()
            )],
            post: alloc::vec![],
            preserve: alloc::vec![],
        };

        let ok = applicability_dyn(&[alter.clone(), needs.clone()], &s).unwrap();
        assert!(ok.holds);
        assert_eq!(ok.trace.len(), 3);

        let not_ok = applicability_dyn(core::slice::from_ref(&needs), &s).unwrap();
        assert!(!not_ok.holds);
        assert_eq!(not_ok.failure.as_ref().unwrap().0, "needs_ins");

        let empty = applicability_dyn(&[], &s).unwrap();
        assert!(empty.holds);
    }

    #[test]
    fn tgd_preconditions_are_unsupported() {
        let s = fig1_schema();
        let t = Tgd::new(
            [NamedAtom::new(rel("EVisits"), [(attr("facility"), Term::var("x"))]).unwrap()],
            [NamedAtom::new(rel("LocVisits"), [(attr("facility"), Term::var("x"))]).unwrap()],
        )
        .unwrap();
        let p = Procedure {
            name: "data_pre".into(),
            scope: alloc::vec![],
            pre: alloc::vec![Condition::Tgd(t)],
            post: alloc::vec![],
            preserve: alloc::vec![],
        };
        assert!(matches!(
            applicability_dyn(&[p], &s),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn minimal_schema_size_bound() {
        // |Sch_min| is at most the size of the schema plus the procedure.
        let s = fig1_schema();
        let p = alter_proc("LocVisits", &["insId", "planId"]);
        let result = minimal_schema(&p, &s);
        let out = result.schema().unwrap();
        let schema_size = s.len() + s.total_attrs();
        let proc_size = 2; // attributes the alteration introduces
        assert!(out.len() + out.total_attrs() <= schema_size + proc_size);
    }
}
