//! Scoped knowledge bases: a base instance, a tgd set, and a scope of open
//! relations. An SKB stands for every extension of its base that satisfies
//! the tgds while keeping out-of-scope relations exactly as they are.
//!
//! For safe-scope procedures over full tgds this is a strong representation
//! system: applying a procedure to everything an SKB represents is again an
//! SKB, computed by chasing the base with the postconditions and rewriting
//! the old knowledge so that no premise mentions a newly scoped relation
//! (resolution against the producing tgds).

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::chase::chase_full;
use crate::error::{Error, Result};
use crate::lang::{
    canonical_tgd, classify_tgd_set, dedupe_tgds, relation_topo_order, rename_apart,
    satisfies_dependency, Dependency, NamedAtom, Term, Tgd, Var,
};
use crate::model::{Instance, RelName, Value};
use crate::procedures::{require_safe_scope_full, Procedure};
use crate::Budget;

/// Flags of an SKB, always recomputed from its parts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SkbFlags {
    /// The tgd set is full.
    pub full: bool,
    /// The relation dependency graph of the tgd set is acyclic.
    pub acyclic: bool,
    /// The scope contains every relation a tgd can write to.
    pub safe: bool,
}

/// A scoped knowledge base.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ScopedKnowledgeBase {
    base: Instance,
    gamma: Vec<Tgd>,
    scope: BTreeSet<RelName>,
}

impl ScopedKnowledgeBase {
    /// Builds an SKB, canonicalizing and deduplicating the tgd set.
    pub fn new(
        base: Instance,
        gamma: impl IntoIterator<Item = Tgd>,
        scope: impl IntoIterator<Item = RelName>,
    ) -> Self {
        ScopedKnowledgeBase {
            base,
            gamma: dedupe_tgds(gamma),
            scope: scope.into_iter().collect(),
        }
    }

    /// The ground SKB `(i, ∅, ∅)`, representing exactly `i`.
    pub fn ground(i: Instance) -> Self {
        ScopedKnowledgeBase::new(i, [], [])
    }

    pub fn base(&self) -> &Instance {
        &self.base
    }

    pub fn gamma(&self) -> &[Tgd] {
        &self.gamma
    }

    pub fn scope(&self) -> &BTreeSet<RelName> {
        &self.scope
    }

    pub fn flags(&self) -> SkbFlags {
        let set = classify_tgd_set(self.gamma.iter());
        let writes: BTreeSet<RelName> = self
            .gamma
            .iter()
            .flat_map(|t| t.conclusion_relations())
            .collect();
        SkbFlags {
            full: set.full,
            acyclic: set.acyclic,
            safe: writes.iter().all(|r| self.scope.contains(r)),
        }
    }

    /// Relations not in scope, whose content is pinned to the base.
    pub fn closed_relations(&self) -> BTreeSet<RelName> {
        self.base
            .schema()
            .relation_names()
            .filter(|r| !self.scope.contains(*r))
            .cloned()
            .collect()
    }

    /// Canonical text form, used as a deduplication key in searches.
    pub fn canonical_key(&self) -> String {
        let mut s = alloc::format!("{:?}|scope:", self.base);
        for r in &self.scope {
            s.push_str(r.as_str());
            s.push(',');
        }
        s.push('|');
        for t in &self.gamma {
            s.push_str(&t.to_string());
            s.push(';');
        }
        s
    }
}

/// Membership in the represented set: `j` contains the base, satisfies the
/// tgds, and agrees with the base on every relation outside the scope.
/// Schemas must match.
pub fn rep_contains(k: &ScopedKnowledgeBase, j: &Instance) -> Result<bool> {
    if k.base.schema() != j.schema() {
        return Err(Error::SchemaMismatch(
            "representation membership needs the SKB's schema".into(),
        ));
    }
    if !k.base.subset_of(j) {
        return Ok(false);
    }
    if !k
        .gamma
        .iter()
        .all(|t| satisfies_dependency(j, &Dependency::Tgd(t.clone())))
    {
        return Ok(false);
    }
    for rel in k.closed_relations() {
        if j.tuples(&rel) != k.base.tuples(&rel) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Statistics from a [`remove_relations`] run, mainly to observe whether the
/// enumeration of variable partitions ever needs a non-identity partition.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RemoveStats {
    pub resolutions: u64,
    pub nontrivial_partitions_used: u64,
}

/// Rewrites an acyclic full tgd set so that no premise mentions a scoped
/// relation, preserving the represented extensions. Each premise occurrence
/// of a scoped relation is resolved against every tgd producing it, under
/// every variable partition of the producing atom that admits a match;
/// dependencies still mentioning the relation in their premise afterwards are
/// dropped, since within the new scope the relation is open.
pub fn remove_relations(gamma: &[Tgd], scope: &BTreeSet<RelName>) -> Result<Vec<Tgd>> {
    remove_relations_with(gamma, scope, &Budget::default()).map(|(tgds, _)| tgds)
}

/// [`remove_relations`] with an explicit budget and run statistics.
pub fn remove_relations_with(
    gamma: &[Tgd],
    scope: &BTreeSet<RelName>,
    budget: &Budget,
) -> Result<(Vec<Tgd>, RemoveStats)> {
    let flags = classify_tgd_set(gamma.iter());
    if !flags.full {
        return Err(Error::NotFull(
            "premise removal is defined on full tgds".into(),
        ));
    }
    if !flags.acyclic {
        return Err(Error::NotAcyclic(
            "premise removal is defined on acyclic tgd sets".into(),
        ));
    }
    let mut stats = RemoveStats::default();

    // Rename all dependencies apart.
    let mut current: Vec<Tgd> = gamma
        .iter()
        .enumerate()
        .map(|(i, t)| rename_apart(t, &alloc::format!("g{i}_")))
        .collect();

    // Scoped relations used in gamma, processed from the most downstream one
    // backwards, so resolution never reintroduces a relation handled earlier.
    let topo = relation_topo_order(gamma.iter()).expect("checked acyclic");
    let mut targets: Vec<RelName> = topo.into_iter().filter(|r| scope.contains(r)).collect();
    targets.reverse();

    let mut fresh_counter = 0usize;
    for target in targets {
        let (mut worklist, rest): (Vec<Tgd>, Vec<Tgd>) = current
            .into_iter()
            .partition(|t| t.premise_relations().contains(&target));
        let producers: Vec<Tgd> = rest
            .iter()
            .filter(|t| t.conclusion_relations().contains(&target))
            .cloned()
            .collect();

        let mut kept: Vec<Tgd> = Vec::new();
        let mut seen: BTreeSet<String> = BTreeSet::new();
        let mut processed: BTreeSet<String> = BTreeSet::new();
        while let Some(item) = worklist.pop() {
            if !item.premise_relations().contains(&target) {
                if seen.insert(canonical_tgd(&item).to_string()) {
                    kept.push(item);
                }
                continue;
            }
            if !processed.insert(canonical_tgd(&item).to_string()) {
                continue;
            }
            // Resolve the first target atom of the premise against every
            // producer under every admissible partition.
            let atom_idx = item
                .premise
                .atoms()
                .iter()
                .position(|a| a.rel == target)
                .expect("contains target");
            for producer in &producers {
                for conclusion_atom in producer
                    .conclusion
                    .atoms()
                    .iter()
                    .filter(|a| a.rel == target)
                {
                    for (partition, nontrivial) in variable_partitions(conclusion_atom) {
                        if let Some(resolvent) =
                            resolve(&item, atom_idx, producer, conclusion_atom, &partition)
                        {
                            stats.resolutions += 1;
                            if nontrivial {
                                stats.nontrivial_partitions_used += 1;
                            }
                            let renamed =
                                rename_apart(&resolvent, &alloc::format!("r{fresh_counter}_"));
                            fresh_counter += 1;
                            worklist.push(renamed);
                            if (kept.len() + worklist.len()) as u64 > budget.gamma_tgds {
                                return Err(Error::ResourceExhausted {
                                    what: "tgds produced by premise removal",
                                    limit: budget.gamma_tgds,
                                });
                            }
                        }
                    }
                }
            }
            // The unresolved original is dropped: its premise needs a scoped
            // relation, and those facts are no longer constrained.
        }
        if kept.len() as u64 > budget.gamma_tgds {
            return Err(Error::ResourceExhausted {
                what: "tgd set size",
                limit: budget.gamma_tgds,
            });
        }
        current = rest;
        current.extend(kept);
    }

    Ok((dedupe_tgds(current), stats))
}

/// All partitions of the variables of an atom, each returned as a
/// substitution onto class representatives, with a flag for non-identity
/// partitions. Enumerated in restricted-growth-string order.
fn variable_partitions(atom: &NamedAtom) -> Vec<(BTreeMap<Var, Term>, bool)> {
    let vars: Vec<Var> = {
        let mut seen = BTreeSet::new();
        atom.vars()
            .filter(|v| seen.insert((*v).clone()))
            .cloned()
            .collect()
    };
    let mut out = Vec::new();
    // Partitions by restricted growth strings.
    let n = vars.len();
    let mut codes = alloc::vec![0usize; n];
    loop {
        let mut map: BTreeMap<Var, Term> = BTreeMap::new();
        let mut reps: BTreeMap<usize, Var> = BTreeMap::new();
        let mut nontrivial = false;
        for (i, v) in vars.iter().enumerate() {
            let class = codes[i];
            match reps.get(&class) {
                Some(rep) => {
                    map.insert(v.clone(), Term::Var(rep.clone()));
                    nontrivial = true;
                }
                None => {
                    reps.insert(class, v.clone());
                    map.insert(v.clone(), Term::Var(v.clone()));
                }
            }
        }
        out.push((map, nontrivial));

        // Next restricted growth string.
        let mut i = n;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            let max_allowed = codes[..i].iter().copied().max().map(|m| m + 1).unwrap_or(0);
            if codes[i] < max_allowed {
                codes[i] += 1;
                for c in codes[i + 1..].iter_mut() {
                    *c = 0;
                }
                break;
            }
            if i == 0 {
                return out;
            }
        }
    }
}

/// One resolution step: unifies premise atom `atom_idx` of `item` with the
/// partition-collapsed conclusion atom of `producer`, and returns the
/// composed dependency (producer premise conjoined in place of the atom).
/// Returns `None` when the patterns cannot match, e.g. when the premise atom
/// mentions an attribute the producing atom does not determine.
fn resolve(
    item: &Tgd,
    atom_idx: usize,
    producer: &Tgd,
    conclusion_atom: &NamedAtom,
    partition: &BTreeMap<Var, Term>,
) -> Option<Tgd> {
    let collapsed = conclusion_atom.substitute(partition);
    let premise_atom = &item.premise.atoms()[atom_idx];

    // Match h: premise-atom terms onto collapsed conclusion terms, plus any
    // constant bindings forced onto the producer side.
    let mut h: BTreeMap<Var, Term> = BTreeMap::new();
    let mut force: BTreeMap<Var, Term> = BTreeMap::new();
    for (attr, pterm) in premise_atom.bindings() {
        let cterm = collapsed.term_for(attr)?;
        match (pterm, cterm) {
            (Term::Const(a), Term::Const(b)) => {
                if a != b {
                    return None;
                }
            }
            (Term::Const(a), Term::Var(cv)) => {
                // The producer must specialize to this constant.
                match force.get(cv) {
                    Some(Term::Const(existing)) if existing == a => {}
                    Some(_) => return None,
                    None => {
                        force.insert(cv.clone(), Term::Const(a.clone()));
                    }
                }
            }
            (Term::Var(pv), any) => match h.get(pv) {
                Some(existing) if existing == any => {}
                Some(_) => return None,
                None => {
                    h.insert(pv.clone(), any.clone());
                }
            },
        }
    }

    // Producer-side substitution: partition collapse, then forced constants.
    let producer_subst = |atom: &NamedAtom| -> NamedAtom {
        let collapsed = atom.substitute(partition);
        collapsed.substitute(&force)
    };
    // Item-side substitution: h on the matched variables, identity elsewhere.
    // If h itself maps a variable to a producer variable that was then forced
    // to a constant, follow the forcing.
    let h_final: BTreeMap<Var, Term> = h
        .into_iter()
        .map(|(v, t)| {
            let t = match &t {
                Term::Var(pv) => force.get(pv).cloned().unwrap_or(t),
                Term::Const(_) => t,
            };
            (v, t)
        })
        .collect();

    let mut new_premise: Vec<NamedAtom> = Vec::new();
    for (i, a) in item.premise.atoms().iter().enumerate() {
        if i == atom_idx {
            continue;
        }
        new_premise.push(a.substitute(&h_final));
    }
    for a in producer.premise.atoms() {
        new_premise.push(producer_subst(a));
    }
    let new_conclusion: Vec<NamedAtom> = item
        .conclusion
        .atoms()
        .iter()
        .map(|a| a.substitute(&h_final))
        .collect();

    Tgd::new(new_premise, new_conclusion).ok()
}

/// Applies a safe-scope full-tgd procedure to a full acyclic safe SKB,
/// producing the SKB of the outcome set: base chased with the
/// postconditions, knowledge rewritten off the procedure's scope and joined
/// with the postconditions, scopes united.
pub fn apply_procedure(k: &ScopedKnowledgeBase, p: &Procedure) -> Result<ScopedKnowledgeBase> {
    apply_procedure_with(k, p, &Budget::default())
}

/// [`apply_procedure`] with an explicit budget.
pub fn apply_procedure_with(
    k: &ScopedKnowledgeBase,
    p: &Procedure,
    budget: &Budget,
) -> Result<ScopedKnowledgeBase> {
    let flags = k.flags();
    for (ok, flag) in [
        (flags.full, "full"),
        (flags.acyclic, "acyclic"),
        (flags.safe, "safe"),
    ] {
        if !ok {
            return Err(Error::FlagViolation {
                flag,
                detail: "procedure application needs a full acyclic safe SKB".into(),
            });
        }
    }
    let post = require_safe_scope_full(p)?;
    let scope_p: BTreeSet<RelName> = p.scope_relations();

    let base = {
        let (chased, _) = crate::chase::chase_full_traced(&k.base, &post, budget)?;
        chased
    };
    let (rewritten, _) = remove_relations_with(&k.gamma, &scope_p, budget)?;
    let gamma: Vec<Tgd> = post.into_iter().chain(rewritten).collect();
    if gamma.len() as u64 > budget.gamma_tgds {
        return Err(Error::ResourceExhausted {
            what: "tgd set size",
            limit: budget.gamma_tgds,
        });
    }
    let scope: BTreeSet<RelName> = k.scope.union(&scope_p).cloned().collect();
    let out = ScopedKnowledgeBase::new(base, gamma, scope);

    let out_flags = out.flags();
    if !(out_flags.full && out_flags.acyclic && out_flags.safe) {
        return Err(Error::Internal(
            "procedure application should preserve full, acyclic and safe".into(),
        ));
    }
    Ok(out)
}

/// Folds a sequence of safe-scope full-tgd procedures over the ground SKB of
/// `i`, yielding the SKB of the sequence's outcome set.
pub fn outcomes_skb(i: &Instance, ps: &[Procedure]) -> Result<ScopedKnowledgeBase> {
    outcomes_skb_with(i, ps, &Budget::default())
}

pub fn outcomes_skb_with(
    i: &Instance,
    ps: &[Procedure],
    budget: &Budget,
) -> Result<ScopedKnowledgeBase> {
    for p in ps {
        let tgds = require_safe_scope_full(p)?;
        for t in &tgds {
            if !t.compatible(i.schema()) {
                return Err(Error::Incompatible(alloc::format!(
                    "postcondition of {}: {t}",
                    p.name
                )));
            }
        }
    }
    let mut k = ScopedKnowledgeBase::ground(i.clone());
    for p in ps {
        k = apply_procedure_with(&k, p, budget)?;
    }
    Ok(k)
}

/// The least represented instance of a full acyclic SKB: the base chased
/// with the knowledge set. For safe SKBs this lies in the represented set
/// and is contained in every member.
pub fn minimal_instance(k: &ScopedKnowledgeBase) -> Result<Instance> {
    let flags = k.flags();
    if !flags.full {
        return Err(Error::NotFull("minimal instance needs full tgds".into()));
    }
    if !flags.acyclic {
        return Err(Error::NotAcyclic(
            "minimal instance needs an acyclic tgd set".into(),
        ));
    }
    chase_full(&k.base, &k.gamma)
}

/// Lists all values appearing in the base instance, handy for universe
/// bounds in tests.
pub fn base_domain(k: &ScopedKnowledgeBase) -> BTreeSet<Value> {
    k.base.active_domain()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::Term;
    use crate::lang::TotalQuery;
    use crate::model::{tuple, AttrName, Schema};
    use crate::procedures::{Condition, PreserveQuery};

    fn attr(s: &str) -> AttrName {
        AttrName::new(s)
    }

    fn rel(s: &str) -> RelName {
        RelName::new(s)
    }

    fn unary_tgd(from: &str, to: &str) -> Tgd {
        Tgd::new(
            [NamedAtom::new(rel(from), [(attr("a"), Term::var("x"))]).unwrap()],
            [NamedAtom::new(rel(to), [(attr("a"), Term::var("x"))]).unwrap()],
        )
        .unwrap()
    }

    fn unary_schema(rels: &[&str]) -> Schema {
        let mut s = Schema::new();
        for r in rels {
            s.add_relation(rel(r), [attr("a")]).unwrap();
        }
        s
    }

    fn safe_proc(name: &str, tgds: Vec<Tgd>) -> Procedure {
        let scoped: BTreeSet<RelName> =
            tgds.iter().flat_map(|t| t.conclusion_relations()).collect();
        Procedure {
            name: name.into(),
            scope: scoped
                .iter()
                .map(|r| crate::lang::StructureConstraint::wildcard(r.clone()))
                .collect(),
            pre: alloc::vec![],
            post: tgds.into_iter().map(Condition::Tgd).collect(),
            preserve: scoped
                .into_iter()
                .map(|r| PreserveQuery::Total(TotalQuery { rel: r }))
                .collect(),
        }
    }

    fn instance_rst(r: &[i128], s: &[i128], t: &[i128]) -> Instance {
        let mut i = Instance::empty(unary_schema(&["R", "S", "T"]));
        for v in r {
            i.insert(&rel("R"), tuple([(attr("a"), Value::int(*v))]))
                .unwrap();
        }
        for v in s {
            i.insert(&rel("S"), tuple([(attr("a"), Value::int(*v))]))
                .unwrap();
        }
        for v in t {
            i.insert(&rel("T"), tuple([(attr("a"), Value::int(*v))]))
                .unwrap();
        }
        i
    }

    #[test]
    fn rep_contains_clauses() {
        let base = instance_rst(&[1], &[], &[1]);
        let k = ScopedKnowledgeBase::new(
            base.clone(),
            [unary_tgd("S", "T"), unary_tgd("S", "R")],
            [rel("R"), rel("T")],
        );
        assert!(rep_contains(&k, &base).unwrap());

        // The running example: R extended, T kept, S pinned empty.
        let j = instance_rst(&[1, 2], &[], &[1]);
        assert!(rep_contains(&k, &j).unwrap());

        // Out-of-scope S must not change.
        let bad = instance_rst(&[1, 2], &[2], &[1]);
        assert!(!rep_contains(&k, &bad).unwrap());

        // Schema mismatch is an error.
        let other = Instance::empty(unary_schema(&["R"]));
        assert!(rep_contains(&k, &other).is_err());
    }

    #[test]
    fn remove_relations_running_example() {
        let gamma = [
            unary_tgd("R", "T"),
            unary_tgd("S", "T"),
            unary_tgd("S", "R"),
        ];
        let scope = [rel("R")].into_iter().collect();
        let out = remove_relations(&gamma, &scope).unwrap();
        let expect = dedupe_tgds([unary_tgd("S", "T"), unary_tgd("S", "R")]);
        assert_eq!(out, expect);
    }

    #[test]
    fn remove_relations_chain() {
        let gamma = [unary_tgd("A", "B"), unary_tgd("B", "C")];
        let scope = [rel("B")].into_iter().collect();
        let out = remove_relations(&gamma, &scope).unwrap();
        let expect = dedupe_tgds([unary_tgd("A", "B"), unary_tgd("A", "C")]);
        assert_eq!(out, expect);
    }

    #[test]
    fn remove_relations_disjoint_scope_is_identity() {
        let gamma = [unary_tgd("A", "B")];
        let scope = [rel("Z")].into_iter().collect();
        let out = remove_relations(&gamma, &scope).unwrap();
        assert_eq!(out, dedupe_tgds(gamma));
    }

    #[test]
    fn remove_relations_rejects_bad_input() {
        let cyclic = [unary_tgd("A", "B"), unary_tgd("B", "A")];
        assert!(matches!(
            remove_relations(&cyclic, &[rel("A")].into_iter().collect()),
            Err(Error::NotAcyclic(_))
        ));
        let nonfull = Tgd::new(
            [NamedAtom::new(rel("A"), [(attr("a"), Term::var("x"))]).unwrap()],
            [NamedAtom::new(rel("B"), [(attr("a"), Term::var("z"))]).unwrap()],
        )
        .unwrap();
        assert!(matches!(
            remove_relations(&[nonfull], &[rel("A")].into_iter().collect()),
            Err(Error::NotFull(_))
        ));
    }

    #[test]
    fn remove_relations_premises_leave_scope() {
        // Two-relation scope with a chain through both.
        let gamma = [
            unary_tgd("A", "B"),
            unary_tgd("B", "C"),
            unary_tgd("C", "D"),
        ];
        let scope: BTreeSet<RelName> = [rel("B"), rel("C")].into_iter().collect();
        let out = remove_relations(&gamma, &scope).unwrap();
        for t in &out {
            assert!(t.premise_relations().is_disjoint(&scope), "{t}");
        }
    }

    #[test]
    fn skb_evolution_example() {
        // I: R = {1}; apply P_T then P_R.
        let i = instance_rst(&[1], &[], &[]);
        let p_t = safe_proc("p_t", alloc::vec![unary_tgd("R", "T"), unary_tgd("S", "T")]);
        let p_r = safe_proc("p_r", alloc::vec![unary_tgd("S", "R")]);

        let k = outcomes_skb(&i, &[p_t, p_r]).unwrap();
        assert_eq!(k.base(), &instance_rst(&[1], &[], &[1]));
        assert_eq!(
            k.scope().iter().cloned().collect::<Vec<_>>(),
            alloc::vec![rel("R"), rel("T")]
        );
        let expect = dedupe_tgds([unary_tgd("S", "T"), unary_tgd("S", "R")]);
        assert_eq!(k.gamma(), expect.as_slice());

        let flags = k.flags();
        assert!(flags.full && flags.acyclic && flags.safe);

        assert!(rep_contains(&k, &instance_rst(&[1, 2], &[], &[1])).unwrap());
        assert!(!rep_contains(&k, &instance_rst(&[1, 2], &[2], &[1])).unwrap());
    }

    #[test]
    fn apply_with_empty_post_is_noop() {
        let i = instance_rst(&[1], &[], &[]);
        let k = ScopedKnowledgeBase::ground(i.clone());
        let p = safe_proc("noop", alloc::vec![]);
        let out = apply_procedure(&k, &p).unwrap();
        assert_eq!(out.base(), &i);
        assert!(out.gamma().is_empty());
        assert!(out.scope().is_empty());
    }

    #[test]
    fn removal_needs_nontrivial_partitions() {
        // S(a: x, b: y) -> T(a: x, b: y) produces T rows; T(a: x, b: x) -> U(a: x)
        // reads only the diagonal. Resolving the diagonal premise against the
        // producer needs the partition collapsing the producer's variables.
        let s_to_t = Tgd::new(
            [NamedAtom::new(
                rel("S"),
                [(attr("a"), Term::var("x")), (attr("b"), Term::var("y"))],
            )
            .unwrap()],
            [NamedAtom::new(
                rel("T"),
                [(attr("a"), Term::var("x")), (attr("b"), Term::var("y"))],
            )
            .unwrap()],
        )
        .unwrap();
        let diag_to_u = Tgd::new(
            [NamedAtom::new(
                rel("T"),
                [(attr("a"), Term::var("x")), (attr("b"), Term::var("x"))],
            )
            .unwrap()],
            [NamedAtom::new(rel("U"), [(attr("a"), Term::var("x"))]).unwrap()],
        )
        .unwrap();
        let scope = [rel("T")].into_iter().collect();
        let (out, stats) =
            remove_relations_with(&[s_to_t.clone(), diag_to_u], &scope, &Budget::default())
                .unwrap();
        assert!(
            stats.nontrivial_partitions_used > 0,
            "the diagonal premise requires a collapsed producer atom"
        );
        // The resolvent reads the diagonal of S.
        let diag_resolvent = Tgd::new(
            [NamedAtom::new(
                rel("S"),
                [(attr("a"), Term::var("x")), (attr("b"), Term::var("x"))],
            )
            .unwrap()],
            [NamedAtom::new(rel("U"), [(attr("a"), Term::var("x"))]).unwrap()],
        )
        .unwrap();
        let expect = dedupe_tgds([s_to_t, diag_resolvent]);
        assert_eq!(out, expect);
    }

    #[test]
    fn minimal_instance_examples() {
        let i = instance_rst(&[1], &[], &[]);
        let k = ScopedKnowledgeBase::ground(i.clone());
        assert_eq!(minimal_instance(&k).unwrap(), i);

        let base = instance_rst(&[1], &[], &[1]);
        let k = ScopedKnowledgeBase::new(
            base.clone(),
            [unary_tgd("S", "T"), unary_tgd("S", "R")],
            [rel("R"), rel("T")],
        );
        // No S facts, so no triggers: the base is already least.
        assert_eq!(minimal_instance(&k).unwrap(), base);
    }
}
