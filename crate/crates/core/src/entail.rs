//! Constraint satisfaction over scoped knowledge bases: does a dependency
//! hold on every represented instance?
//!
//! Egds are decided by a small-witness counterexample search: ground the
//! premise by matching its closed part into the base and freezing the rest
//! over fresh-or-known values, chase each candidate with the knowledge set,
//! and look for a violation. Tgds over safe SKBs reduce to a single frozen
//! body and a chase-and-check; the general acyclic case rewrites the premise
//! into a union of conjunctive queries with inequalities by a disjunctive
//! chase against the knowledge set and the closed-relation contents, and
//! tests containment in the conclusion.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::chase::{chase_standard, ChaseStatus};
use crate::error::{Error, Result};
use crate::lang::{
    satisfiable, satisfying_assignments, Assignment, Cq, Dependency, Egd, NamedAtom, Term, Tgd, Var,
};
use crate::model::{FreshAtoms, Instance, RelName, Schema, Tuple, Value};
use crate::skb::ScopedKnowledgeBase;
use crate::Budget;

/// Outcome of a satisfaction check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Holds,
    Violated(Violation),
}

impl Verdict {
    pub fn holds(&self) -> bool {
        matches!(self, Verdict::Holds)
    }
}

/// Why a dependency fails on some represented instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// The dependency is not compatible with the SKB's schema, so it fails
    /// on every represented instance by the compatibility clause.
    Incompatible,
    /// A represented counterexample instance.
    CounterModel(Instance),
    /// A rewritten-query disjunct that escapes the conclusion (general tgd
    /// path), rendered for diagnostics.
    Disjunct(String),
}

// ---------------------------------------------------------------------------
// Frozen-body machinery shared by the egd and safe-tgd checks
// ---------------------------------------------------------------------------

/// The premise of a dependency split against a scope: closed atoms must match
/// the base outright; open atoms are completed to full arity with padding
/// variables and will be frozen into the base.
struct SplitPremise {
    closed: Vec<NamedAtom>,
    open: Vec<NamedAtom>,
}

fn split_premise(atoms: &[NamedAtom], scope: &BTreeSet<RelName>, schema: &Schema) -> SplitPremise {
    let mut closed = Vec::new();
    let mut open = Vec::new();
    let mut pad = 0usize;
    for atom in atoms {
        if scope.contains(&atom.rel) {
            // Complete to full arity: unmentioned attributes are existential
            // and the frozen tuple needs a value for them.
            let attrs = schema.attrs(&atom.rel).expect("compatibility checked");
            let mut bindings: Vec<(crate::model::AttrName, Term)> = atom.bindings().to_vec();
            for a in attrs {
                if atom.term_for(a).is_none() {
                    bindings.push((a.clone(), Term::var(&alloc::format!("~pad{pad}"))));
                    pad += 1;
                }
            }
            open.push(NamedAtom::new(atom.rel.clone(), bindings).expect("distinct attrs"));
        } else {
            closed.push(atom.clone());
        }
    }
    SplitPremise { closed, open }
}

fn vars_of(atoms: &[NamedAtom]) -> Vec<Var> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for a in atoms {
        for v in a.vars() {
            if seen.insert(v.clone()) {
                out.push(v.clone());
            }
        }
    }
    out
}

/// Inserts the grounded open atoms into a copy of the base.
fn freeze_into(base: &Instance, open: &[NamedAtom], tau: &Assignment) -> Result<Instance> {
    let mut d = base.clone();
    for (rel, pairs) in crate::procedures::ground_atoms(open, tau) {
        let tuple: Tuple = pairs.into_iter().collect();
        d.insert(&rel, tuple)?;
    }
    Ok(d)
}

/// Replaces labeled nulls (invented by a chase over non-full knowledge) with
/// fresh constants, producing a proper ground instance.
fn groundize(i: &Instance, fresh: &mut FreshAtoms) -> Instance {
    if !i.has_nulls() {
        return i.clone();
    }
    let mut map: BTreeMap<Value, Value> = BTreeMap::new();
    let mut out = Instance::empty(i.schema().clone());
    for (rel, tuples) in i.relations() {
        for t in tuples {
            let rewritten: Tuple = t
                .iter()
                .map(|(a, v)| {
                    let v = if v.is_null() {
                        map.entry(v.clone()).or_insert_with(|| fresh.next()).clone()
                    } else {
                        v.clone()
                    };
                    (a.clone(), v)
                })
                .collect();
            out.insert(rel, rewritten).expect("same schema");
        }
    }
    out
}

fn require_weakly_acyclic(k: &ScopedKnowledgeBase) -> Result<()> {
    let flags = crate::lang::classify_tgd_set(k.gamma().iter());
    if !flags.weakly_acyclic {
        return Err(Error::NotWeaklyAcyclic(
            "satisfaction over SKBs needs a terminating chase".into(),
        ));
    }
    Ok(())
}

fn gamma_deps(k: &ScopedKnowledgeBase) -> Vec<Dependency> {
    k.gamma().iter().cloned().map(Dependency::Tgd).collect()
}

/// Chases a frozen candidate with the knowledge set; `None` when the
/// candidate admits no represented extension (the chase would have to touch
/// a closed relation).
fn chase_candidate(
    k: &ScopedKnowledgeBase,
    d: Instance,
    budget: &Budget,
) -> Result<Option<Instance>> {
    let result = chase_standard(&d, &gamma_deps(k), budget.chase_steps)?;
    match result.status {
        ChaseStatus::Success => {}
        ChaseStatus::StepLimitExceeded => {
            return Err(Error::ResourceExhausted {
                what: "chase triggers",
                limit: budget.chase_steps,
            })
        }
        ChaseStatus::EgdFailure { .. } => return Ok(None),
    }
    let chased = result.instance;
    for rel in k.closed_relations() {
        if chased.tuples(&rel) != k.base().tuples(&rel) {
            // The knowledge forces growth outside the scope, so no instance
            // represented by the SKB extends this candidate.
            return Ok(None);
        }
    }
    Ok(Some(chased))
}

/// Does the egd hold on every instance the SKB represents?
///
/// Enumerates the frozen bodies: every match of the closed premise part into
/// the base, extended by every assignment of the remaining variables to
/// either known values or freshly invented constants (covering all variable
/// partitions). Each frozen candidate is chased with the knowledge set and
/// searched for a premise match equating two distinct values.
pub fn skb_satisfies_egd(k: &ScopedKnowledgeBase, e: &Egd) -> Result<Verdict> {
    skb_satisfies_egd_with(k, e, &Budget::default())
}

pub fn skb_satisfies_egd_with(
    k: &ScopedKnowledgeBase,
    e: &Egd,
    budget: &Budget,
) -> Result<Verdict> {
    require_weakly_acyclic(k)?;
    if !e.compatible(k.base().schema()) {
        return Ok(Verdict::Violated(Violation::Incompatible));
    }
    let split = split_premise(e.premise.atoms(), k.scope(), k.base().schema());

    let mut closed_homs = satisfying_assignments(&split.closed, k.base(), &Assignment::new());
    closed_homs.sort_by_key(|a| {
        a.iter()
            .map(|(v, x)| (v.clone(), x.clone()))
            .collect::<Vec<_>>()
    });
    closed_homs.dedup();

    let mut avoid: BTreeSet<Value> = k.base().active_domain();
    avoid.extend(e.premise.constants());
    let mut fresh_pool = FreshAtoms::avoiding(avoid.clone());

    for h in closed_homs {
        let remaining: Vec<Var> = vars_of(&split.open)
            .into_iter()
            .filter(|v| !h.contains_key(v))
            .collect();
        if remaining.len() as u64 > budget.premise_vars {
            return Err(Error::ResourceExhausted {
                what: "frozen-body premise variables",
                limit: budget.premise_vars,
            });
        }
        let mut pool: BTreeSet<Value> = k.base().active_domain();
        let fresh: Vec<Value> = (0..remaining.len()).map(|_| fresh_pool.next()).collect();
        pool.extend(fresh.iter().cloned());

        for g in crate::chase::assignments_over(&remaining, &pool) {
            let mut tau = h.clone();
            tau.extend(g);
            let frozen = freeze_into(k.base(), &split.open, &tau)?;
            let chased = match chase_candidate(k, frozen, budget)? {
                Some(c) => c,
                None => continue,
            };
            let chased = groundize(&chased, &mut fresh_pool);
            // Any premise match with distinct endpoints violates the egd on
            // this represented instance.
            let violating = satisfying_assignments(e.premise.atoms(), &chased, &Assignment::new())
                .into_iter()
                .any(|m| m[&e.lhs] != m[&e.rhs]);
            if violating {
                return Ok(Verdict::Violated(Violation::CounterModel(chased)));
            }
        }
    }
    Ok(Verdict::Holds)
}

/// Does the tgd hold on every instance a safe SKB represents?
///
/// Safety means the chase never writes outside the scope, so one frozen body
/// per closed-part match suffices: the remaining premise variables freeze to
/// pairwise distinct fresh constants (the most general realizable pattern),
/// the candidate is chased, and the conclusion must follow. Unsafe SKBs are
/// routed to the general check.
pub fn skb_satisfies_tgd_safe(k: &ScopedKnowledgeBase, t: &Tgd) -> Result<Verdict> {
    skb_satisfies_tgd_safe_with(k, t, &Budget::default())
}

pub fn skb_satisfies_tgd_safe_with(
    k: &ScopedKnowledgeBase,
    t: &Tgd,
    budget: &Budget,
) -> Result<Verdict> {
    require_weakly_acyclic(k)?;
    if !k.flags().safe {
        return skb_satisfies_tgd_general_with(k, t, budget);
    }
    if !t.compatible(k.base().schema()) {
        return Ok(Verdict::Violated(Violation::Incompatible));
    }
    let split = split_premise(t.premise.atoms(), k.scope(), k.base().schema());

    let mut closed_homs = satisfying_assignments(&split.closed, k.base(), &Assignment::new());
    closed_homs.sort_by_key(|a| {
        a.iter()
            .map(|(v, x)| (v.clone(), x.clone()))
            .collect::<Vec<_>>()
    });
    closed_homs.dedup();

    let mut avoid: BTreeSet<Value> = k.base().active_domain();
    avoid.extend(t.premise.constants());
    avoid.extend(t.conclusion.constants());
    let mut fresh_pool = FreshAtoms::avoiding(avoid);

    for h in closed_homs {
        let remaining: Vec<Var> = vars_of(&split.open)
            .into_iter()
            .filter(|v| !h.contains_key(v))
            .collect();
        if remaining.len() as u64 > budget.premise_vars {
            return Err(Error::ResourceExhausted {
                what: "frozen-body premise variables",
                limit: budget.premise_vars,
            });
        }
        let mut tau = h.clone();
        for v in &remaining {
            tau.insert(v.clone(), fresh_pool.next());
        }
        let frozen = freeze_into(k.base(), &split.open, &tau)?;
        let chased = match chase_candidate(k, frozen, budget)? {
            Some(c) => c,
            None => continue,
        };
        let chased = groundize(&chased, &mut fresh_pool);
        let seed: Assignment = t
            .conclusion
            .free_vars()
            .iter()
            .map(|v| (v.clone(), tau[v].clone()))
            .collect();
        if !satisfiable(t.conclusion.atoms(), &chased, &seed) {
            return Ok(Verdict::Violated(Violation::CounterModel(chased)));
        }
    }
    Ok(Verdict::Holds)
}

// ---------------------------------------------------------------------------
// General tgd satisfaction through the rewritten-query containment test
// ---------------------------------------------------------------------------

/// A union of conjunctive queries with inequality side-conditions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UcqNeq {
    pub disjuncts: Vec<UcqDisjunct>,
}

/// One disjunct: head terms, body atoms, and inequalities over its own terms.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct UcqDisjunct {
    pub head: Vec<Term>,
    pub atoms: Vec<NamedAtom>,
    pub inequalities: BTreeSet<(Term, Term)>,
}

impl UcqDisjunct {
    /// A disjunct with an identical-term inequality is unsatisfiable.
    pub fn is_satisfiable(&self) -> bool {
        self.inequalities.iter().all(|(a, b)| a != b)
    }

    fn render(&self) -> String {
        let mut s = String::from("(");
        for (i, t) in self.head.iter().enumerate() {
            if i > 0 {
                s.push_str(", ");
            }
            s.push_str(&t.to_string());
        }
        s.push_str(") <- ");
        for (i, a) in self.atoms.iter().enumerate() {
            if i > 0 {
                s.push_str(", ");
            }
            s.push_str(&a.to_string());
        }
        for (a, b) in &self.inequalities {
            s.push_str(&alloc::format!(", {a} != {b}"));
        }
        s
    }
}

/// The dependencies the rewriting chases with: knowledge tgds split into
/// their conclusion and the negations of their normalization equalities, an
/// emptiness constraint per empty closed relation, and a row-disjunction per
/// nonempty closed relation.
enum PsiRule {
    TgdNeq {
        premise: Vec<NamedAtom>,
        equalities: Vec<(Term, Term)>,
        conclusion: Vec<NamedAtom>,
        existentials: Vec<Var>,
    },
    Implication {
        premise: NamedAtom,
    },
    RowDisjunction {
        premise: NamedAtom,
        head_vars: Vec<Var>,
        rows: Vec<Vec<Value>>,
    },
}

/// One branch of the disjunctive chase: atoms over variables and constants,
/// the head terms, and inequalities accumulated from negation branches.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct Branch {
    atoms: Vec<NamedAtom>,
    head: Vec<Term>,
    neqs: BTreeSet<(Term, Term)>,
}

impl Branch {
    fn knows_distinct(&self, a: &Term, b: &Term) -> bool {
        if let (Term::Const(x), Term::Const(y)) = (a, b) {
            return x != y;
        }
        self.neqs.contains(&norm_pair(a, b))
    }

    fn substitute(&self, map: &BTreeMap<Var, Term>) -> Option<Branch> {
        let apply_term = |t: &Term| -> Term {
            match t {
                Term::Var(v) => map.get(v).cloned().unwrap_or_else(|| t.clone()),
                Term::Const(_) => t.clone(),
            }
        };
        let atoms: Vec<NamedAtom> = self.atoms.iter().map(|a| a.substitute(map)).collect();
        let head: Vec<Term> = self.head.iter().map(apply_term).collect();
        let mut neqs = BTreeSet::new();
        for (a, b) in &self.neqs {
            let (a, b) = (apply_term(a), apply_term(b));
            if a == b {
                return None; // an accumulated inequality collapsed
            }
            if let (Term::Const(_), Term::Const(_)) = (&a, &b) {
                continue; // distinct constants: trivially true
            }
            neqs.insert(norm_pair(&a, &b));
        }
        let mut out = Branch { atoms, head, neqs };
        out.normalize();
        Some(out)
    }

    fn normalize(&mut self) {
        self.atoms.sort();
        self.atoms.dedup();
    }
}

fn norm_pair(a: &Term, b: &Term) -> (Term, Term) {
    if a <= b {
        (a.clone(), b.clone())
    } else {
        (b.clone(), a.clone())
    }
}

/// Homomorphisms from a pattern atom list into a target atom list: pattern
/// variables map to target terms; constants match only themselves. The
/// pattern atoms may mention a subset of an atom's attributes.
fn atom_homs(
    pattern: &[NamedAtom],
    target: &[NamedAtom],
    seed: &BTreeMap<Var, Term>,
    first_only: bool,
) -> Vec<BTreeMap<Var, Term>> {
    fn go(
        pattern: &[NamedAtom],
        target: &[NamedAtom],
        current: &mut BTreeMap<Var, Term>,
        out: &mut Vec<BTreeMap<Var, Term>>,
        first_only: bool,
    ) -> bool {
        let (atom, rest) = match pattern.split_first() {
            Some(x) => x,
            None => {
                out.push(current.clone());
                return first_only;
            }
        };
        'targets: for t in target.iter().filter(|t| t.rel == atom.rel) {
            let mut bound: Vec<Var> = Vec::new();
            for (attr, pterm) in atom.bindings() {
                let tterm = match t.term_for(attr) {
                    Some(x) => x.clone(),
                    None => {
                        for v in &bound {
                            current.remove(v);
                        }
                        continue 'targets;
                    }
                };
                let ok = match pterm {
                    Term::Const(c) => matches!(&tterm, Term::Const(d) if d == c),
                    Term::Var(v) => match current.get(v) {
                        Some(existing) => existing == &tterm,
                        None => {
                            current.insert(v.clone(), tterm.clone());
                            bound.push(v.clone());
                            true
                        }
                    },
                };
                if !ok {
                    for v in &bound {
                        current.remove(v);
                    }
                    continue 'targets;
                }
            }
            if go(rest, target, current, out, first_only) {
                return true;
            }
            for v in &bound {
                current.remove(v);
            }
        }
        false
    }
    let mut out = Vec::new();
    let mut current = seed.clone();
    go(pattern, target, &mut current, &mut out, first_only);
    out.sort();
    out.dedup();
    out
}

/// Normalizes a conjunction: the first occurrence of each variable stays;
/// every repeated variable occurrence and every non-first constant occurrence
/// is replaced by a fresh variable plus an equality. Returns the relational
/// part and the equalities.
fn normalize_conjunction(
    atoms: &[NamedAtom],
    counter: &mut usize,
) -> (Vec<NamedAtom>, Vec<(Term, Term)>) {
    let mut seen_vars: BTreeSet<Var> = BTreeSet::new();
    let mut seen_consts: BTreeSet<Value> = BTreeSet::new();
    let mut equalities = Vec::new();
    let mut out_atoms = Vec::new();
    for atom in atoms {
        let mut bindings: Vec<(crate::model::AttrName, Term)> = Vec::new();
        for (attr, term) in atom.bindings() {
            let rewritten = match term {
                Term::Var(v) => {
                    if seen_vars.insert(v.clone()) {
                        term.clone()
                    } else {
                        let fresh = Var::new(alloc::format!("~n{}", *counter));
                        *counter += 1;
                        equalities.push((Term::Var(fresh.clone()), term.clone()));
                        Term::Var(fresh)
                    }
                }
                Term::Const(c) => {
                    if seen_consts.insert(c.clone()) {
                        term.clone()
                    } else {
                        let fresh = Var::new(alloc::format!("~n{}", *counter));
                        *counter += 1;
                        equalities.push((Term::Var(fresh.clone()), term.clone()));
                        Term::Var(fresh)
                    }
                }
            };
            bindings.push((attr.clone(), rewritten));
        }
        out_atoms.push(NamedAtom::new(atom.rel.clone(), bindings).expect("distinct attrs"));
    }
    (out_atoms, equalities)
}

/// Completes an atom to the full attribute set of its relation with fresh
/// variables at unmentioned attributes.
fn complete_atom(atom: &NamedAtom, schema: &Schema, counter: &mut usize) -> NamedAtom {
    let attrs = schema.attrs(&atom.rel).expect("compatibility checked");
    let mut bindings: Vec<(crate::model::AttrName, Term)> = atom.bindings().to_vec();
    for a in attrs {
        if atom.term_for(a).is_none() {
            bindings.push((a.clone(), Term::var(&alloc::format!("~c{}", *counter))));
            *counter += 1;
        }
    }
    NamedAtom::new(atom.rel.clone(), bindings).expect("distinct attrs")
}

/// Builds the rule set the rewriting chases with.
fn build_psi(k: &ScopedKnowledgeBase, counter: &mut usize) -> Vec<PsiRule> {
    let mut rules = Vec::new();
    for gamma in k.gamma() {
        let (premise, equalities) = normalize_conjunction(gamma.premise.atoms(), counter);
        rules.push(PsiRule::TgdNeq {
            premise,
            equalities,
            conclusion: gamma.conclusion.atoms().to_vec(),
            existentials: gamma.conclusion.existential_vars().to_vec(),
        });
    }
    for rel in k.closed_relations() {
        let attrs = k
            .base()
            .schema()
            .attrs(&rel)
            .expect("closed relations are in the schema");
        let rows = k.base().tuples(&rel).expect("in schema");
        if rows.is_empty() {
            let head_vars: Vec<(crate::model::AttrName, Term)> = attrs
                .iter()
                .map(|a| {
                    let t = Term::var(&alloc::format!("~v{}", *counter));
                    *counter += 1;
                    (a.clone(), t)
                })
                .collect();
            rules.push(PsiRule::Implication {
                premise: NamedAtom::new(rel.clone(), head_vars).expect("distinct attrs"),
            });
        } else if !attrs.is_empty() {
            let mut head_vars = Vec::new();
            let bindings: Vec<(crate::model::AttrName, Term)> = attrs
                .iter()
                .map(|a| {
                    let v = Var::new(alloc::format!("~v{}", *counter));
                    *counter += 1;
                    head_vars.push(v.clone());
                    (a.clone(), Term::Var(v))
                })
                .collect();
            let rows: Vec<Vec<Value>> = rows
                .iter()
                .map(|t| attrs.iter().map(|a| t[a].clone()).collect())
                .collect();
            rules.push(PsiRule::RowDisjunction {
                premise: NamedAtom::new(rel.clone(), bindings).expect("distinct attrs"),
                head_vars,
                rows,
            });
        }
        // Nonempty boolean (zero-attribute) relations need no rule.
    }
    rules
}

/// First unsatisfied trigger of any rule on the branch, in rule order.
fn next_trigger<'r>(
    branch: &Branch,
    rules: &'r [PsiRule],
) -> Option<(&'r PsiRule, BTreeMap<Var, Term>)> {
    for rule in rules {
        match rule {
            PsiRule::TgdNeq {
                premise,
                equalities,
                conclusion,
                ..
            } => {
                for h in atom_homs(premise, &branch.atoms, &BTreeMap::new(), false) {
                    let resolved = |t: &Term| -> Term {
                        match t {
                            Term::Var(v) => h.get(v).cloned().unwrap_or_else(|| t.clone()),
                            Term::Const(_) => t.clone(),
                        }
                    };
                    let neq_satisfied = equalities
                        .iter()
                        .any(|(a, b)| branch.knows_distinct(&resolved(a), &resolved(b)));
                    if neq_satisfied {
                        continue;
                    }
                    let frontier_seed: BTreeMap<Var, Term> = h
                        .iter()
                        .filter(|(v, _)| conclusion.iter().any(|a| a.vars().any(|w| w == *v)))
                        .map(|(v, t)| (v.clone(), t.clone()))
                        .collect();
                    let concl_satisfied =
                        !atom_homs(conclusion, &branch.atoms, &frontier_seed, true).is_empty();
                    if concl_satisfied {
                        continue;
                    }
                    return Some((rule, h));
                }
            }
            PsiRule::Implication { premise } => {
                let homs = atom_homs(
                    core::slice::from_ref(premise),
                    &branch.atoms,
                    &BTreeMap::new(),
                    true,
                );
                if let Some(h) = homs.into_iter().next() {
                    return Some((rule, h));
                }
            }
            PsiRule::RowDisjunction {
                premise,
                head_vars,
                rows,
            } => {
                for h in atom_homs(
                    core::slice::from_ref(premise),
                    &branch.atoms,
                    &BTreeMap::new(),
                    false,
                ) {
                    let satisfied = rows.iter().any(|row| {
                        head_vars
                            .iter()
                            .zip(row.iter())
                            .all(|(v, c)| matches!(h.get(v), Some(Term::Const(d)) if d == c))
                    });
                    if !satisfied {
                        return Some((rule, h));
                    }
                }
            }
        }
    }
    None
}

/// Does the tgd hold on every instance an acyclic SKB represents?
///
/// Rewrites the premise (conjoined with the base facts) by the disjunctive
/// chase into a union of conjunctive queries with inequalities, then tests
/// containment of every satisfiable disjunct in the conclusion.
pub fn skb_satisfies_tgd_general(k: &ScopedKnowledgeBase, t: &Tgd) -> Result<Verdict> {
    skb_satisfies_tgd_general_with(k, t, &Budget::default())
}

pub fn skb_satisfies_tgd_general_with(
    k: &ScopedKnowledgeBase,
    t: &Tgd,
    budget: &Budget,
) -> Result<Verdict> {
    require_weakly_acyclic(k)?;
    if !t.compatible(k.base().schema()) {
        return Ok(Verdict::Violated(Violation::Incompatible));
    }
    let rewritten = rewrite_premise(k, t, budget)?;
    match escaping_disjunct(&rewritten, &t.conclusion) {
        None => Ok(Verdict::Holds),
        Some(d) => Ok(Verdict::Violated(Violation::Disjunct(d.render()))),
    }
}

/// The rewriting itself, exposed for tests: the premise of `t`, conjoined
/// with the base facts, chased disjunctively with the knowledge set and the
/// closed-relation contents.
pub fn rewrite_premise(k: &ScopedKnowledgeBase, t: &Tgd, budget: &Budget) -> Result<UcqNeq> {
    let mut counter = 0usize;
    let rules = build_psi(k, &mut counter);

    // Q' = premise ∧ facts(base), atoms completed to full arity.
    let mut atoms: Vec<NamedAtom> = t
        .premise
        .atoms()
        .iter()
        .map(|a| complete_atom(a, k.base().schema(), &mut counter))
        .collect();
    for (rel, tuples) in k.base().relations() {
        for tuple in tuples {
            let bindings: Vec<(crate::model::AttrName, Term)> = tuple
                .iter()
                .map(|(a, v)| (a.clone(), Term::Const(v.clone())))
                .collect();
            atoms.push(NamedAtom::new(rel.clone(), bindings).expect("distinct attrs"));
        }
    }
    let head: Vec<Term> = t
        .conclusion
        .free_vars()
        .iter()
        .map(|v| Term::Var(v.clone()))
        .collect();
    let mut initial = Branch {
        atoms,
        head,
        neqs: BTreeSet::new(),
    };
    initial.normalize();

    let mut alive = alloc::vec![initial];
    let mut terminal: Vec<Branch> = Vec::new();
    let mut seen: BTreeSet<Branch> = BTreeSet::new();
    let mut steps: u64 = 0;
    while let Some(branch) = alive.pop() {
        steps += 1;
        if steps > budget.chase_steps {
            return Err(Error::ResourceExhausted {
                what: "disjunctive chase branches",
                limit: budget.chase_steps,
            });
        }
        if !seen.insert(branch.clone()) {
            continue;
        }
        let (rule, h) = match next_trigger(&branch, &rules) {
            Some(x) => x,
            None => {
                terminal.push(branch);
                continue;
            }
        };
        match rule {
            PsiRule::Implication { .. } => {
                // The branch demands a row in an empty closed relation: no
                // represented instance realizes it.
            }
            PsiRule::TgdNeq {
                equalities,
                conclusion,
                existentials,
                ..
            } => {
                let resolved = |t: &Term| -> Term {
                    match t {
                        Term::Var(v) => h.get(v).cloned().unwrap_or_else(|| t.clone()),
                        Term::Const(_) => t.clone(),
                    }
                };
                // The conclusion disjunct.
                let mut map: BTreeMap<Var, Term> = h.clone();
                for z in existentials {
                    map.insert(z.clone(), Term::var(&alloc::format!("~z{}", counter)));
                    counter += 1;
                }
                let mut with_conclusion = branch.clone();
                for atom in conclusion {
                    let grounded = atom.substitute(&map);
                    with_conclusion.atoms.push(complete_atom(
                        &grounded,
                        k.base().schema(),
                        &mut counter,
                    ));
                }
                with_conclusion.normalize();
                alive.push(with_conclusion);
                // One disjunct per negated normalization equality.
                for (a, b) in equalities {
                    let (ra, rb) = (resolved(a), resolved(b));
                    if ra == rb {
                        continue; // x != x is unsatisfiable
                    }
                    let mut with_neq = branch.clone();
                    with_neq.neqs.insert(norm_pair(&ra, &rb));
                    alive.push(with_neq);
                }
            }
            PsiRule::RowDisjunction {
                head_vars, rows, ..
            } => {
                for row in rows {
                    let mut subst: BTreeMap<Var, Term> = BTreeMap::new();
                    let mut consistent = true;
                    for (v, c) in head_vars.iter().zip(row.iter()) {
                        match h.get(v) {
                            Some(Term::Const(d)) => {
                                if d != c {
                                    consistent = false;
                                    break;
                                }
                            }
                            Some(Term::Var(branch_var)) => match subst.get(branch_var) {
                                Some(Term::Const(d)) if d != c => {
                                    consistent = false;
                                    break;
                                }
                                _ => {
                                    subst.insert(branch_var.clone(), Term::Const(c.clone()));
                                }
                            },
                            None => {
                                consistent = false;
                                break;
                            }
                        }
                    }
                    if !consistent {
                        continue;
                    }
                    if let Some(next) = branch.substitute(&subst) {
                        alive.push(next);
                    }
                }
            }
        }
    }

    terminal.sort();
    terminal.dedup();
    Ok(UcqNeq {
        disjuncts: terminal
            .into_iter()
            .map(|b| UcqDisjunct {
                head: b.head,
                atoms: b.atoms,
                inequalities: b.neqs,
            })
            .collect(),
    })
}

/// Containment of a union of conjunctive queries with inequalities in a
/// plain conjunctive query: every satisfiable disjunct must admit a
/// containment mapping from the conclusion respecting head terms; disjuncts
/// with unsatisfiable conditions are vacuously contained.
pub fn ucq_contained_in_cq(u: &UcqNeq, q: &Cq) -> bool {
    escaping_disjunct(u, q).is_none()
}

/// The first satisfiable disjunct without a containment mapping, if any.
/// Freezing its variables to pairwise distinct fresh constants yields a
/// represented instance on which the checked tgd fails.
pub fn escaping_disjunct<'u>(u: &'u UcqNeq, q: &Cq) -> Option<&'u UcqDisjunct> {
    u.disjuncts.iter().find(|d| {
        if !d.is_satisfiable() {
            return false;
        }
        if d.head.len() != q.free_vars().len() {
            return true;
        }
        let seed: BTreeMap<Var, Term> = q
            .free_vars()
            .iter()
            .cloned()
            .zip(d.head.iter().cloned())
            .collect();
        // The seed may conflict with itself when the query repeats a head
        // variable; the zip keeps the last entry, so re-check consistency.
        let consistent = q
            .free_vars()
            .iter()
            .zip(d.head.iter())
            .all(|(v, t)| seed.get(v) == Some(t));
        if !consistent {
            return true;
        }
        atom_homs(q.atoms(), &d.atoms, &seed, true).is_empty()
    })
}

/// Freezes a disjunct into a ground instance: every variable becomes a
/// distinct fresh constant (avoiding `avoid`), which realizes all of its
/// satisfiable inequalities at once.
pub fn freeze_disjunct(
    d: &UcqDisjunct,
    schema: &Schema,
    avoid: BTreeSet<Value>,
) -> Result<Instance> {
    let mut fresh = FreshAtoms::avoiding(avoid);
    let mut map: BTreeMap<Var, Value> = BTreeMap::new();
    let mut out = Instance::empty(schema.clone());
    for atom in &d.atoms {
        let tuple: Tuple = atom
            .bindings()
            .iter()
            .map(|(a, term)| {
                let v = match term {
                    Term::Const(c) => c.clone(),
                    Term::Var(v) => map.entry(v.clone()).or_insert_with(|| fresh.next()).clone(),
                };
                (a.clone(), v)
            })
            .collect();
        out.insert(&atom.rel, tuple)?;
    }
    Ok(out)
}
