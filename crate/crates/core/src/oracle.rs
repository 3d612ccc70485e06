//! Brute-force ground truth: enumerate the possible outcomes of procedures
//! over bounded universes, directly from the outcome-membership clauses.
//! Every symbolic representation in this crate is property-tested against
//! these enumerations at desk scale.
//!
//! An enumeration speaks only about the instances inside its bound: adding
//! and removing at most `max_extra_tuples` tuples (per side) around the
//! input, with values from the declared pool, plus (in dynamic mode) schema
//! extensions of at most `max_extra_attrs` fresh attributes and
//! `max_extra_rels` fresh unary relations. Claims outside the bound are not
//! made.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::lang::{eval_cq, satisfies_dependency, Assignment, Cq, Dependency};
use crate::model::{AttrName, Instance, RelName, Schema, Tuple, Value};
use crate::procedures::{is_possible_outcome_with, Mode, PinSemantics, Procedure};

/// The finite universe an enumeration ranges over.
#[derive(Debug, Clone)]
pub struct UniverseBound {
    /// Value pool; must contain the active domain of the instance under
    /// test, and should add a spare value or two so genuinely new data can
    /// appear.
    pub values: BTreeSet<Value>,
    /// Most tuples added, and most tuples removed, relative to the input.
    pub max_extra_tuples: usize,
    /// Dynamic mode: most fresh attributes added across the schema.
    pub max_extra_attrs: usize,
    /// Dynamic mode: most fresh unary relations added.
    pub max_extra_rels: usize,
    /// Candidate instances the enumeration may visit before giving up.
    pub candidate_budget: u64,
}

impl UniverseBound {
    pub fn for_instance(i: &Instance, extra_values: &[Value], max_extra_tuples: usize) -> Self {
        let mut values = i.active_domain();
        values.extend(extra_values.iter().cloned());
        UniverseBound {
            values,
            max_extra_tuples,
            max_extra_attrs: 0,
            max_extra_rels: 0,
            candidate_budget: 1_000_000,
        }
    }

    pub fn with_dynamic(mut self, max_extra_attrs: usize, max_extra_rels: usize) -> Self {
        self.max_extra_attrs = max_extra_attrs;
        self.max_extra_rels = max_extra_rels;
        self
    }
}

struct CandidateCounter {
    used: u64,
    budget: u64,
}

impl CandidateCounter {
    fn tick(&mut self) -> Result<()> {
        self.used += 1;
        if self.used > self.budget {
            return Err(Error::ResourceExhausted {
                what: "oracle candidate instances",
                limit: self.budget,
            });
        }
        Ok(())
    }
}

/// All (relation, tuple) pairs over the schema and value pool.
fn tuple_pool(schema: &Schema, values: &BTreeSet<Value>) -> Vec<(RelName, Tuple)> {
    let values: Vec<Value> = values.iter().cloned().collect();
    let mut out = Vec::new();
    for (rel, attrs) in schema.relations() {
        let arity = attrs.len();
        let count = values.len().checked_pow(arity as u32).unwrap_or(0);
        for mut idx in 0..count {
            let mut tuple = Tuple::new();
            for a in attrs {
                tuple.insert(a.clone(), values[idx % values.len()].clone());
                idx /= values.len();
            }
            out.push((rel.clone(), tuple));
        }
    }
    out
}

/// Visits every index combination of size at most `k` over `0..n`, in
/// deterministic order, without materializing the combinations.
fn for_each_subset<E>(
    n: usize,
    k: usize,
    mut f: impl FnMut(&[usize]) -> core::result::Result<(), E>,
) -> core::result::Result<(), E> {
    f(&[])?;
    for size in 1..=k.min(n) {
        let mut indices: Vec<usize> = (0..size).collect();
        loop {
            f(&indices)?;
            let mut advanced = false;
            let mut pos = size;
            while pos > 0 {
                pos -= 1;
                if indices[pos] < n - size + pos {
                    indices[pos] += 1;
                    for j in pos + 1..size {
                        indices[j] = indices[j - 1] + 1;
                    }
                    advanced = true;
                    break;
                }
            }
            if !advanced {
                break;
            }
        }
    }
    Ok(())
}

/// Materialized variant of [`for_each_subset`] for small pools.
fn bounded_subsets<T: Clone>(items: &[T], k: usize) -> Vec<Vec<T>> {
    let mut out = Vec::new();
    let _ = for_each_subset::<core::convert::Infallible>(items.len(), k, |indices| {
        out.push(indices.iter().map(|&i| items[i].clone()).collect());
        Ok(())
    });
    out
}

/// Visits every instance within the bound around `i` (same schema): remove
/// at most `max_extra_tuples` existing tuples, add at most
/// `max_extra_tuples` pool tuples. Candidates stream through the visitor.
fn visit_bounded_variants(
    i: &Instance,
    u: &UniverseBound,
    counter: &mut CandidateCounter,
    mut visit: impl FnMut(Instance),
) -> Result<()> {
    let existing: Vec<(RelName, Tuple)> = i
        .relations()
        .flat_map(|(rel, tuples)| tuples.iter().map(move |t| (rel.clone(), t.clone())))
        .collect();
    let pool: Vec<(RelName, Tuple)> = tuple_pool(i.schema(), &u.values)
        .into_iter()
        .filter(|(rel, t)| !i.tuples(rel).map(|ts| ts.contains(t)).unwrap_or(false))
        .collect();

    for_each_subset(existing.len(), u.max_extra_tuples, |removed| {
        let mut base = Instance::empty(i.schema().clone());
        for (idx, (rel, t)) in existing.iter().enumerate() {
            if !removed.contains(&idx) {
                base.insert(rel, t.clone()).expect("same schema");
            }
        }
        for_each_subset(pool.len(), u.max_extra_tuples, |added| {
            counter.tick()?;
            let mut j = base.clone();
            for &idx in added {
                let (rel, t) = &pool[idx];
                j.insert(rel, t.clone()).expect("pool is schema-conformant");
            }
            visit(j);
            Ok(())
        })
    })
}

/// Attribute names a procedure mentions anywhere: these are the attributes
/// a schema extension could be forced to introduce.
fn mentioned_attrs(p: &Procedure) -> BTreeSet<AttrName> {
    use crate::lang::StructureSpec;
    use crate::procedures::{Condition, PreserveQuery};
    let mut out: BTreeSet<AttrName> = BTreeSet::new();
    fn from_cq(out: &mut BTreeSet<AttrName>, q: &Cq) {
        for a in q.atoms() {
            out.extend(a.bindings().iter().map(|(attr, _)| attr.clone()));
        }
    }
    for c in p.pre.iter().chain(p.post.iter()) {
        match c {
            Condition::Tgd(t) => {
                from_cq(&mut out, &t.premise);
                from_cq(&mut out, &t.conclusion);
            }
            Condition::Egd(e) => from_cq(&mut out, &e.premise),
            Condition::Structure(sc) => {
                if let StructureSpec::Attrs(attrs) = &sc.spec {
                    out.extend(attrs.iter().cloned());
                }
            }
        }
    }
    for q in &p.preserve {
        if let PreserveQuery::Cq(cq) = q {
            for a in cq.atoms() {
                out.extend(a.bindings().iter().map(|(attr, _)| attr.clone()));
            }
        }
    }
    out
}

/// Schema variants for dynamic mode: distribute fresh attributes (the ones
/// the procedure mentions plus a generic pool) over existing relations,
/// placing at most `max_extra_attrs` of them, and add up to `max_extra_rels`
/// fresh unary relations.
fn schema_variants(s: &Schema, p: &Procedure, u: &UniverseBound) -> Vec<Schema> {
    let taken: BTreeSet<&str> = s
        .relations()
        .flat_map(|(_, attrs)| attrs.iter().map(|a| a.as_str()))
        .collect();
    let mut attr_pool: Vec<AttrName> = mentioned_attrs(p).into_iter().collect();
    attr_pool.extend(
        (1..)
            .map(|k| alloc::format!("x{k}"))
            .filter(|name| !taken.contains(name.as_str()))
            .take(u.max_extra_attrs)
            .map(AttrName::new),
    );
    attr_pool.dedup();
    let rel_pool: Vec<RelName> = (1..)
        .map(|k| alloc::format!("X{k}"))
        .filter(|name| !s.contains(&RelName::new(name.as_str())))
        .take(u.max_extra_rels)
        .map(RelName::new)
        .collect();

    // Each pool attribute may go to any relation or stay unused, with at
    // most `max_extra_attrs` placed in total.
    let rels: Vec<RelName> = s.relation_names().cloned().collect();
    let mut schemas = Vec::new();
    let placements = rels.len() + 1;
    let combos = placements.checked_pow(attr_pool.len() as u32).unwrap_or(1);
    for mut code in 0..combos {
        let mut schema = s.clone();
        let mut placed = 0usize;
        let mut valid = true;
        for attr in &attr_pool {
            let slot = code % placements;
            code /= placements;
            if slot < rels.len() {
                let rel = &rels[slot];
                let mut attrs: Vec<AttrName> = schema.attrs(rel).expect("existing").to_vec();
                if attrs.contains(attr) {
                    valid = false;
                    break;
                }
                attrs.push(attr.clone());
                schema
                    .add_relation(rel.clone(), attrs)
                    .expect("no duplicates");
                placed += 1;
            }
        }
        if !valid || placed > u.max_extra_attrs {
            continue;
        }
        for subset in bounded_subsets(&rel_pool, u.max_extra_rels) {
            let mut with_rels = schema.clone();
            for r in subset {
                with_rels
                    .add_relation(r.clone(), [AttrName::new("x0")])
                    .expect("fresh relation");
            }
            schemas.push(with_rels);
        }
    }
    schemas.sort();
    schemas.dedup();
    schemas
}

/// Visits instances over an extended schema whose projection relates to
/// `i`: each original tuple is dropped or padded (every padding combination
/// over the pool), plus up to `max_extra_tuples` brand-new rows.
fn visit_dynamic_variants(
    i: &Instance,
    target: &Schema,
    u: &UniverseBound,
    counter: &mut CandidateCounter,
    mut visit: impl FnMut(Instance),
) -> Result<()> {
    let values: Vec<Value> = u.values.iter().cloned().collect();

    // Per original tuple: the list of its padded variants in the target
    // schema (possibly just itself).
    let mut padded_options: Vec<(RelName, Vec<Tuple>)> = Vec::new();
    for (rel, tuples) in i.relations() {
        let target_attrs: Vec<AttrName> = match target.attrs(rel) {
            Some(a) => a.to_vec(),
            None => continue,
        };
        for t in tuples {
            let missing: Vec<AttrName> = target_attrs
                .iter()
                .filter(|a| !t.contains_key(*a))
                .cloned()
                .collect();
            let count = values.len().checked_pow(missing.len() as u32).unwrap_or(1);
            let mut variants = Vec::new();
            for mut idx in 0..count.max(1) {
                let mut padded = t.clone();
                for a in &missing {
                    padded.insert(a.clone(), values[idx % values.len().max(1)].clone());
                    idx /= values.len().max(1);
                }
                variants.push(padded);
            }
            padded_options.push((rel.clone(), variants));
        }
    }

    // New rows from the target pool.
    let pool: Vec<(RelName, Tuple)> = tuple_pool(target, &u.values);

    // Choice per original tuple: absent (0) or the n-th padding.
    let choices: Vec<usize> = padded_options.iter().map(|(_, v)| v.len() + 1).collect();
    let total: usize = choices
        .iter()
        .try_fold(1usize, |acc, c| acc.checked_mul(*c))
        .unwrap_or(0);
    if total == 0 {
        return Err(Error::ResourceExhausted {
            what: "oracle candidate instances",
            limit: u.candidate_budget,
        });
    }
    for mut code in 0..total {
        let mut base = Instance::empty(target.clone());
        for ((rel, variants), c) in padded_options.iter().zip(choices.iter()) {
            let pick = code % c;
            code /= c;
            if pick > 0 {
                base.insert(rel, variants[pick - 1].clone())
                    .expect("padded to target");
            }
        }
        for_each_subset(pool.len(), u.max_extra_tuples, |added| {
            counter.tick()?;
            let mut j = base.clone();
            for &idx in added {
                let (rel, t) = &pool[idx];
                j.insert(rel, t.clone()).expect("pool conforms to target");
            }
            visit(j);
            Ok(())
        })?;
    }
    Ok(())
}

/// Enumerates the possible outcomes of `p` on `i` inside the bound, by
/// filtering every candidate through the outcome-membership clauses.
pub fn enumerate_outcomes(
    i: &Instance,
    p: &Procedure,
    u: &UniverseBound,
    mode: Mode,
    pin: PinSemantics,
) -> Result<BTreeSet<Instance>> {
    let mut counter = CandidateCounter {
        used: 0,
        budget: u.candidate_budget,
    };
    enumerate_outcomes_inner(i, p, u, mode, pin, &mut counter)
}

fn enumerate_outcomes_inner(
    i: &Instance,
    p: &Procedure,
    u: &UniverseBound,
    mode: Mode,
    pin: PinSemantics,
    counter: &mut CandidateCounter,
) -> Result<BTreeSet<Instance>> {
    let mut out = BTreeSet::new();
    match mode {
        Mode::Static => {
            visit_bounded_variants(i, u, counter, |j| {
                if is_possible_outcome_with(p, i, &j, mode, pin) {
                    out.insert(j);
                }
            })?;
        }
        Mode::Dynamic => {
            for schema in schema_variants(i.schema(), p, u) {
                visit_dynamic_variants(i, &schema, u, counter, |j| {
                    if is_possible_outcome_with(p, i, &j, mode, pin) {
                        out.insert(j);
                    }
                })?;
            }
        }
    }
    Ok(out)
}

/// Outcomes of a sequence: the union over intermediate outcomes, folded left
/// to right.
pub fn enumerate_outcomes_seq(
    i: &Instance,
    ps: &[Procedure],
    u: &UniverseBound,
    mode: Mode,
    pin: PinSemantics,
) -> Result<BTreeSet<Instance>> {
    let mut counter = CandidateCounter {
        used: 0,
        budget: u.candidate_budget,
    };
    let mut current: BTreeSet<Instance> = [i.clone()].into_iter().collect();
    for p in ps {
        let mut next = BTreeSet::new();
        for intermediate in &current {
            next.extend(enumerate_outcomes_inner(
                intermediate,
                p,
                u,
                mode,
                pin,
                &mut counter,
            )?);
        }
        current = next;
    }
    Ok(current)
}

/// A boolean with a vacuity warning: `value` holds over every member of the
/// enumerated set, which may be empty.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleAnswer {
    pub value: bool,
    pub vacuous: bool,
}

/// Certain answer of a boolean query over the bounded outcome set.
/// Incompatible members count as non-satisfying.
pub fn oracle_certain(
    i: &Instance,
    ps: &[Procedure],
    u: &UniverseBound,
    q: &Cq,
    mode: Mode,
    pin: PinSemantics,
) -> Result<OracleAnswer> {
    let outcomes = enumerate_outcomes_seq(i, ps, u, mode, pin)?;
    let vacuous = outcomes.is_empty();
    let value = outcomes.iter().all(|j| {
        q.compatible(j.schema()) && !eval_cq(q, j).expect("compatibility checked").is_empty()
    });
    Ok(OracleAnswer { value, vacuous })
}

/// Satisfaction of a dependency over every member of an outcome set.
pub fn oracle_entails(outcomes: &BTreeSet<Instance>, d: &Dependency) -> OracleAnswer {
    OracleAnswer {
        value: outcomes.iter().all(|j| satisfies_dependency(j, d)),
        vacuous: outcomes.is_empty(),
    }
}

/// Brute-force dependency satisfaction by assignment enumeration over the
/// active domain; the independent check for the homomorphism-based
/// implementation in `lang`.
pub fn brute_satisfies_dependency(i: &Instance, d: &Dependency) -> bool {
    if !d.compatible(i.schema()) {
        return false;
    }
    let domain: Vec<Value> = i.active_domain().into_iter().collect();
    match d {
        Dependency::Tgd(t) => {
            let vars: Vec<crate::lang::Var> = t.premise.all_vars().cloned().collect();
            for tau in assignments_of(&vars, &domain) {
                if !holds_atoms(t.premise.atoms(), i, &tau) {
                    continue;
                }
                let evars: Vec<crate::lang::Var> = t.conclusion.existential_vars().to_vec();
                let extended = assignments_of(&evars, &domain).any(|ext| {
                    let mut full = tau.clone();
                    full.extend(ext);
                    holds_atoms(t.conclusion.atoms(), i, &full)
                });
                if !extended {
                    return false;
                }
            }
            true
        }
        Dependency::Egd(e) => {
            let vars: Vec<crate::lang::Var> = e.premise.all_vars().cloned().collect();
            for tau in assignments_of(&vars, &domain) {
                if holds_atoms(e.premise.atoms(), i, &tau) && tau[&e.lhs] != tau[&e.rhs] {
                    return false;
                }
            }
            true
        }
    }
}

fn assignments_of(vars: &[crate::lang::Var], domain: &[Value]) -> impl Iterator<Item = Assignment> {
    let vars = vars.to_vec();
    let domain = domain.to_vec();
    let total = if vars.is_empty() {
        1
    } else {
        domain.len().checked_pow(vars.len() as u32).unwrap_or(0)
    };
    (0..total).map(move |mut idx| {
        let mut a = Assignment::new();
        for v in &vars {
            a.insert(v.clone(), domain[idx % domain.len().max(1)].clone());
            idx /= domain.len().max(1);
        }
        a
    })
}

/// Grounded atom membership under a total assignment.
fn holds_atoms(atoms: &[crate::lang::NamedAtom], i: &Instance, tau: &Assignment) -> bool {
    atoms.iter().all(|atom| {
        let tuples = match i.tuples(&atom.rel) {
            Some(t) => t,
            None => return false,
        };
        tuples.iter().any(|t| {
            atom.bindings().iter().all(|(a, term)| {
                let want = match term {
                    crate::lang::Term::Const(c) => c.clone(),
                    crate::lang::Term::Var(v) => tau[v].clone(),
                };
                t.get(a) == Some(&want)
            })
        })
    })
}
