//! The constraint and query language: named atoms, conjunctive queries,
//! total queries, tgds, egds and structure constraints, together with
//! compatibility and satisfaction semantics.
//!
//! Queries are written against the named perspective, so a query stays valid
//! on any schema that keeps the attributes it mentions. Constants may appear
//! directly in atoms; the equivalent encoding through singleton unary
//! relations is exercised by the test suite.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::model::{AttrName, Instance, RelName, Schema, Value};

/// A query variable.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(Arc<str>);

impl Var {
    pub fn new(s: impl AsRef<str>) -> Self {
        Var(Arc::from(s.as_ref()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for Var {
    fn from(s: &str) -> Self {
        Var::new(s)
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Debug for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A term of a named atom.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(Var),
    Const(Value),
}

impl Term {
    pub fn var(s: &str) -> Self {
        Term::Var(Var::new(s))
    }

    pub fn as_var(&self) -> Option<&Var> {
        match self {
            Term::Var(v) => Some(v),
            Term::Const(_) => None,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "{v}"),
            Term::Const(c) => write!(f, "{c}"),
        }
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// A named atom `R(A1: t1, ..., Ak: tk)`. Bindings are kept in attribute
/// order; attributes within one atom are distinct. The attribute set may be
/// any subset of the relation's attributes, including the empty set, in which
/// case the atom just asserts that the relation is nonempty.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct NamedAtom {
    pub rel: RelName,
    bindings: Vec<(AttrName, Term)>,
}

impl NamedAtom {
    pub fn new(rel: RelName, bindings: impl IntoIterator<Item = (AttrName, Term)>) -> Result<Self> {
        let mut bindings: Vec<(AttrName, Term)> = bindings.into_iter().collect();
        bindings.sort_by(|a, b| a.0.cmp(&b.0));
        if bindings.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::MalformedExpression(alloc::format!(
                "duplicate attribute in atom over {rel}"
            )));
        }
        Ok(NamedAtom { rel, bindings })
    }

    pub fn bindings(&self) -> &[(AttrName, Term)] {
        &self.bindings
    }

    pub fn vars(&self) -> impl Iterator<Item = &Var> {
        self.bindings.iter().filter_map(|(_, t)| t.as_var())
    }

    pub fn term_for(&self, attr: &AttrName) -> Option<&Term> {
        self.bindings
            .binary_search_by(|(a, _)| a.cmp(attr))
            .ok()
            .map(|idx| &self.bindings[idx].1)
    }

    pub fn compatible(&self, schema: &Schema) -> bool {
        match schema.attrs(&self.rel) {
            Some(attrs) => self.bindings.iter().all(|(a, _)| attrs.contains(a)),
            None => false,
        }
    }

    /// Applies a substitution to the variable terms.
    pub fn substitute(&self, map: &BTreeMap<Var, Term>) -> NamedAtom {
        NamedAtom {
            rel: self.rel.clone(),
            bindings: self
                .bindings
                .iter()
                .map(|(a, t)| {
                    let t = match t {
                        Term::Var(v) => map.get(v).cloned().unwrap_or_else(|| t.clone()),
                        Term::Const(_) => t.clone(),
                    };
                    (a.clone(), t)
                })
                .collect(),
        }
    }
}

impl fmt::Display for NamedAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.rel)?;
        for (i, (a, t)) in self.bindings.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{a}: {t}")?;
        }
        write!(f, ")")
    }
}

impl fmt::Debug for NamedAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// A conjunctive query with declared free and existential variables.
/// Every declared variable occurs in some atom, and the two sets are
/// disjoint; a boolean query has no free variables.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Cq {
    free: Vec<Var>,
    existential: Vec<Var>,
    atoms: Vec<NamedAtom>,
}

impl Cq {
    pub fn new(
        free: impl IntoIterator<Item = Var>,
        existential: impl IntoIterator<Item = Var>,
        atoms: impl IntoIterator<Item = NamedAtom>,
    ) -> Result<Self> {
        let free: Vec<Var> = free.into_iter().collect();
        let existential: Vec<Var> = existential.into_iter().collect();
        let atoms: Vec<NamedAtom> = atoms.into_iter().collect();

        let declared: BTreeSet<&Var> = free.iter().chain(existential.iter()).collect();
        if declared.len() != free.len() + existential.len() {
            return Err(Error::MalformedExpression(
                "free and existential variable lists overlap or repeat".into(),
            ));
        }
        let used: BTreeSet<&Var> = atoms.iter().flat_map(|a| a.vars()).collect();
        for v in &used {
            if !declared.contains(v) {
                return Err(Error::MalformedExpression(alloc::format!(
                    "variable {v} is not declared"
                )));
            }
        }
        for v in &declared {
            if !used.contains(*v) {
                return Err(Error::MalformedExpression(alloc::format!(
                    "variable {v} does not occur in any atom"
                )));
            }
        }
        Ok(Cq {
            free,
            existential,
            atoms,
        })
    }

    /// A boolean query: all variables existential.
    pub fn boolean(atoms: impl IntoIterator<Item = NamedAtom>) -> Result<Self> {
        let atoms: Vec<NamedAtom> = atoms.into_iter().collect();
        let mut seen = BTreeSet::new();
        let mut existential = Vec::new();
        for a in &atoms {
            for v in a.vars() {
                if seen.insert(v.clone()) {
                    existential.push(v.clone());
                }
            }
        }
        Cq::new([], existential, atoms)
    }

    /// A query whose variables are all free, in first-occurrence order.
    pub fn all_free(atoms: impl IntoIterator<Item = NamedAtom>) -> Result<Self> {
        let atoms: Vec<NamedAtom> = atoms.into_iter().collect();
        let mut seen = BTreeSet::new();
        let mut free = Vec::new();
        for a in &atoms {
            for v in a.vars() {
                if seen.insert(v.clone()) {
                    free.push(v.clone());
                }
            }
        }
        Cq::new(free, [], atoms)
    }

    pub fn free_vars(&self) -> &[Var] {
        &self.free
    }

    pub fn existential_vars(&self) -> &[Var] {
        &self.existential
    }

    pub fn atoms(&self) -> &[NamedAtom] {
        &self.atoms
    }

    pub fn is_boolean(&self) -> bool {
        self.free.is_empty()
    }

    pub fn all_vars(&self) -> impl Iterator<Item = &Var> {
        self.free.iter().chain(self.existential.iter())
    }

    pub fn constants(&self) -> BTreeSet<Value> {
        self.atoms
            .iter()
            .flat_map(|a| a.bindings().iter())
            .filter_map(|(_, t)| match t {
                Term::Const(c) => Some(c.clone()),
                Term::Var(_) => None,
            })
            .collect()
    }

    pub fn compatible(&self, schema: &Schema) -> bool {
        self.atoms.iter().all(|a| a.compatible(schema))
    }
}

impl fmt::Display for Cq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.atoms.is_empty() {
            return write!(f, "true");
        }
        for (i, a) in self.atoms.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{a}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Cq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// A total query `SELECT * FROM R`: extracts the unnamed tuples of `R`
/// whatever the schema assigns to it.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct TotalQuery {
    pub rel: RelName,
}

impl fmt::Display for TotalQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "total {}", self.rel)
    }
}

impl fmt::Debug for TotalQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// A tuple-generating dependency. The premise holds the frontier variables as
/// its free list; the conclusion's free list is the subset of the frontier it
/// actually uses, and its existential list holds the fresh conclusion
/// variables.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Tgd {
    pub premise: Cq,
    pub conclusion: Cq,
}

impl Tgd {
    /// Builds a tgd from two atom lists, computing the frontier as the shared
    /// variables.
    pub fn new(
        premise_atoms: impl IntoIterator<Item = NamedAtom>,
        conclusion_atoms: impl IntoIterator<Item = NamedAtom>,
    ) -> Result<Self> {
        let premise_atoms: Vec<NamedAtom> = premise_atoms.into_iter().collect();
        let conclusion_atoms: Vec<NamedAtom> = conclusion_atoms.into_iter().collect();
        if conclusion_atoms.is_empty() {
            return Err(Error::MalformedExpression("tgd conclusion is empty".into()));
        }

        let premise_vars: BTreeSet<Var> = premise_atoms
            .iter()
            .flat_map(|a| a.vars().cloned())
            .collect();

        let mut frontier = Vec::new();
        let mut existential = Vec::new();
        let mut seen = BTreeSet::new();
        for a in &conclusion_atoms {
            for v in a.vars() {
                if seen.insert(v.clone()) {
                    if premise_vars.contains(v) {
                        frontier.push(v.clone());
                    } else {
                        existential.push(v.clone());
                    }
                }
            }
        }

        let mut premise_free = Vec::new();
        let mut premise_exist = Vec::new();
        let mut seen_p = BTreeSet::new();
        for a in &premise_atoms {
            for v in a.vars() {
                if seen_p.insert(v.clone()) {
                    if frontier.contains(v) {
                        premise_free.push(v.clone());
                    } else {
                        premise_exist.push(v.clone());
                    }
                }
            }
        }

        Ok(Tgd {
            premise: Cq::new(premise_free, premise_exist, premise_atoms)?,
            conclusion: Cq::new(frontier, existential, conclusion_atoms)?,
        })
    }

    /// No existentially quantified conclusion variables.
    pub fn is_full(&self) -> bool {
        self.conclusion.existential_vars().is_empty()
    }

    pub fn premise_relations(&self) -> BTreeSet<RelName> {
        self.premise.atoms().iter().map(|a| a.rel.clone()).collect()
    }

    pub fn conclusion_relations(&self) -> BTreeSet<RelName> {
        self.conclusion
            .atoms()
            .iter()
            .map(|a| a.rel.clone())
            .collect()
    }

    pub fn compatible(&self, schema: &Schema) -> bool {
        self.premise.compatible(schema) && self.conclusion.compatible(schema)
    }
}

impl fmt::Display for Tgd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "tgd: {} -> {}", self.premise, self.conclusion)
    }
}

impl fmt::Debug for Tgd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// An equality-generating dependency.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Egd {
    pub premise: Cq,
    pub lhs: Var,
    pub rhs: Var,
}

impl Egd {
    pub fn new(
        premise_atoms: impl IntoIterator<Item = NamedAtom>,
        lhs: Var,
        rhs: Var,
    ) -> Result<Self> {
        let premise = Cq::all_free(premise_atoms)?;
        for v in [&lhs, &rhs] {
            if !premise.all_vars().any(|p| p == v) {
                return Err(Error::MalformedExpression(alloc::format!(
                    "egd equates variable {v} that does not occur in its premise"
                )));
            }
        }
        Ok(Egd { premise, lhs, rhs })
    }

    pub fn compatible(&self, schema: &Schema) -> bool {
        self.premise.compatible(schema)
    }
}

impl fmt::Display for Egd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "egd: {} -> {} = {}", self.premise, self.lhs, self.rhs)
    }
}

impl fmt::Debug for Egd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// A data dependency: tgd or egd.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum Dependency {
    Tgd(Tgd),
    Egd(Egd),
}

impl Dependency {
    pub fn compatible(&self, schema: &Schema) -> bool {
        match self {
            Dependency::Tgd(t) => t.compatible(schema),
            Dependency::Egd(e) => e.compatible(schema),
        }
    }
}

impl fmt::Display for Dependency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Dependency::Tgd(t) => write!(f, "{t}"),
            Dependency::Egd(e) => write!(f, "{e}"),
        }
    }
}

/// A structure constraint `R[a1, ..., an]` or `R[*]`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct StructureConstraint {
    pub rel: RelName,
    pub spec: StructureSpec,
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum StructureSpec {
    Wildcard,
    Attrs(Vec<AttrName>),
}

impl StructureConstraint {
    pub fn wildcard(rel: RelName) -> Self {
        StructureConstraint {
            rel,
            spec: StructureSpec::Wildcard,
        }
    }

    pub fn attrs(rel: RelName, attrs: impl IntoIterator<Item = AttrName>) -> Result<Self> {
        let mut attrs: Vec<AttrName> = attrs.into_iter().collect();
        attrs.sort();
        attrs.dedup();
        if attrs.is_empty() {
            return Err(Error::MalformedExpression(alloc::format!(
                "structure constraint over {rel} lists no attributes; use {rel}[*]"
            )));
        }
        Ok(StructureConstraint {
            rel,
            spec: StructureSpec::Attrs(attrs),
        })
    }
}

impl fmt::Display for StructureConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.spec {
            StructureSpec::Wildcard => write!(f, "{}[*]", self.rel),
            StructureSpec::Attrs(attrs) => {
                write!(f, "{}[", self.rel)?;
                for (i, a) in attrs.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, "]")
            }
        }
    }
}

impl fmt::Debug for StructureConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// True iff the schema satisfies the structure constraint.
pub fn satisfies_structure(schema: &Schema, c: &StructureConstraint) -> bool {
    match (&c.spec, schema.attrs(&c.rel)) {
        (_, None) => false,
        (StructureSpec::Wildcard, Some(_)) => true,
        (StructureSpec::Attrs(attrs), Some(have)) => attrs.iter().all(|a| have.contains(a)),
    }
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

/// A variable assignment into the value domain.
pub type Assignment = BTreeMap<Var, Value>;

/// Enumerates every assignment of the atoms' variables that satisfies all
/// atoms in `i`, extending `seed`. Nulls are treated as ordinary values.
/// Assignments come out in deterministic order.
pub fn satisfying_assignments(
    atoms: &[NamedAtom],
    i: &Instance,
    seed: &Assignment,
) -> Vec<Assignment> {
    let mut out = Vec::new();
    let mut current = seed.clone();
    search(atoms, i, &mut current, &mut out);
    out
}

fn search(atoms: &[NamedAtom], i: &Instance, current: &mut Assignment, out: &mut Vec<Assignment>) {
    let (atom, rest) = match atoms.split_first() {
        Some(x) => x,
        None => {
            out.push(current.clone());
            return;
        }
    };
    let tuples = match i.tuples(&atom.rel) {
        Some(t) => t,
        None => return,
    };
    'tuples: for t in tuples {
        let mut bound: Vec<Var> = Vec::new();
        for (a, term) in atom.bindings() {
            let value = match t.get(a) {
                Some(v) => v,
                None => {
                    for v in &bound {
                        current.remove(v);
                    }
                    continue 'tuples;
                }
            };
            let ok = match term {
                Term::Const(c) => c == value,
                Term::Var(v) => match current.get(v) {
                    Some(existing) => existing == value,
                    None => {
                        current.insert(v.clone(), value.clone());
                        bound.push(v.clone());
                        true
                    }
                },
            };
            if !ok {
                for v in &bound {
                    current.remove(v);
                }
                continue 'tuples;
            }
        }
        search(rest, i, current, out);
        for v in &bound {
            current.remove(v);
        }
    }
}

/// True iff some assignment extending `seed` satisfies all atoms.
pub fn satisfiable(atoms: &[NamedAtom], i: &Instance, seed: &Assignment) -> bool {
    // Same search, short-circuited on the first hit.
    fn go(atoms: &[NamedAtom], i: &Instance, current: &mut Assignment) -> bool {
        let (atom, rest) = match atoms.split_first() {
            Some(x) => x,
            None => return true,
        };
        let tuples = match i.tuples(&atom.rel) {
            Some(t) => t,
            None => return false,
        };
        'tuples: for t in tuples {
            let mut bound: Vec<Var> = Vec::new();
            for (a, term) in atom.bindings() {
                let value = match t.get(a) {
                    Some(v) => v,
                    None => {
                        for v in &bound {
                            current.remove(v);
                        }
                        continue 'tuples;
                    }
                };
                let ok = match term {
                    Term::Const(c) => c == value,
                    Term::Var(v) => match current.get(v) {
                        Some(existing) => existing == value,
                        None => {
                            current.insert(v.clone(), value.clone());
                            bound.push(v.clone());
                            true
                        }
                    },
                };
                if !ok {
                    for v in &bound {
                        current.remove(v);
                    }
                    continue 'tuples;
                }
            }
            if go(rest, i, current) {
                return true;
            }
            for v in &bound {
                current.remove(v);
            }
        }
        false
    }
    let mut current = seed.clone();
    go(atoms, i, &mut current)
}

/// Evaluates a conjunctive query. Answers are tuples of values in the order
/// of the query's free variables; a boolean query answers with the empty
/// tuple or nothing.
pub fn eval_cq(q: &Cq, i: &Instance) -> Result<BTreeSet<Vec<Value>>> {
    if !q.compatible(i.schema()) {
        return Err(Error::Incompatible(alloc::format!("query {q}")));
    }
    let mut out = BTreeSet::new();
    if q.is_boolean() {
        if satisfiable(q.atoms(), i, &Assignment::new()) {
            out.insert(Vec::new());
        }
        return Ok(out);
    }
    for assignment in satisfying_assignments(q.atoms(), i, &Assignment::new()) {
        out.insert(
            q.free_vars()
                .iter()
                .map(|v| assignment[v].clone())
                .collect(),
        );
    }
    Ok(out)
}

/// Satisfaction of a single dependency. Incompatibility with the instance's
/// schema yields `false`, not an error, mirroring the two-clause definition
/// of constraint satisfaction.
pub fn satisfies_dependency(i: &Instance, d: &Dependency) -> bool {
    if !d.compatible(i.schema()) {
        return false;
    }
    match d {
        Dependency::Tgd(t) => satisfying_assignments(t.premise.atoms(), i, &Assignment::new())
            .into_iter()
            .all(|tau| {
                let seed: Assignment = t
                    .conclusion
                    .free_vars()
                    .iter()
                    .map(|v| (v.clone(), tau[v].clone()))
                    .collect();
                satisfiable(t.conclusion.atoms(), i, &seed)
            }),
        Dependency::Egd(e) => satisfying_assignments(e.premise.atoms(), i, &Assignment::new())
            .into_iter()
            .all(|tau| tau[&e.lhs] == tau[&e.rhs]),
    }
}

/// Satisfaction of a mixed set of structure and data constraints, as used for
/// preconditions: the schema must satisfy every structure constraint and the
/// instance every data constraint.
pub fn satisfies_all(i: &Instance, structure: &[StructureConstraint], data: &[Dependency]) -> bool {
    structure.iter().all(|c| satisfies_structure(i.schema(), c))
        && data.iter().all(|d| satisfies_dependency(i, d))
}

// ---------------------------------------------------------------------------
// Classification
// ---------------------------------------------------------------------------

/// Classification flags of a tgd set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TgdSetFlags {
    pub full: bool,
    pub acyclic: bool,
    pub weakly_acyclic: bool,
}

/// Classifies a tgd set: `full` iff no tgd has existential conclusion
/// variables; `acyclic` iff the relation dependency graph (premise relation →
/// conclusion relation, per tgd) has no cycle; `weakly_acyclic` by the
/// position-graph test.
pub fn classify_tgd_set<'a>(tgds: impl IntoIterator<Item = &'a Tgd> + Clone) -> TgdSetFlags {
    let full = tgds.clone().into_iter().all(|t| t.is_full());
    let acyclic = relation_graph_acyclic(tgds.clone());
    let weakly_acyclic = position_graph_weakly_acyclic(tgds);
    TgdSetFlags {
        full,
        acyclic,
        weakly_acyclic,
    }
}

fn relation_graph_acyclic<'a>(tgds: impl IntoIterator<Item = &'a Tgd>) -> bool {
    let mut edges: BTreeMap<RelName, BTreeSet<RelName>> = BTreeMap::new();
    let mut nodes: BTreeSet<RelName> = BTreeSet::new();
    for t in tgds {
        let prem = t.premise_relations();
        let conc = t.conclusion_relations();
        nodes.extend(prem.iter().cloned());
        nodes.extend(conc.iter().cloned());
        for p in &prem {
            edges
                .entry(p.clone())
                .or_default()
                .extend(conc.iter().cloned());
        }
    }
    is_dag(&nodes, |n| {
        edges.get(n).into_iter().flatten().cloned().collect()
    })
}

/// Topological order of the relation dependency graph of a tgd set, or `None`
/// when cyclic. Earlier entries have no incoming path from later ones.
pub fn relation_topo_order<'a>(tgds: impl IntoIterator<Item = &'a Tgd>) -> Option<Vec<RelName>> {
    let mut edges: BTreeMap<RelName, BTreeSet<RelName>> = BTreeMap::new();
    let mut nodes: BTreeSet<RelName> = BTreeSet::new();
    for t in tgds {
        let prem = t.premise_relations();
        let conc = t.conclusion_relations();
        nodes.extend(prem.iter().cloned());
        nodes.extend(conc.iter().cloned());
        for p in &prem {
            edges
                .entry(p.clone())
                .or_default()
                .extend(conc.iter().cloned());
        }
    }
    let mut indegree: BTreeMap<RelName, usize> = nodes.iter().map(|n| (n.clone(), 0)).collect();
    for targets in edges.values() {
        for t in targets {
            *indegree.get_mut(t).expect("node present") += 1;
        }
    }
    let mut ready: BTreeSet<RelName> = indegree
        .iter()
        .filter(|(_, d)| **d == 0)
        .map(|(n, _)| n.clone())
        .collect();
    let mut order = Vec::new();
    while let Some(n) = ready.iter().next().cloned() {
        ready.remove(&n);
        order.push(n.clone());
        if let Some(targets) = edges.get(&n) {
            for t in targets {
                let d = indegree.get_mut(t).expect("node present");
                *d -= 1;
                if *d == 0 {
                    ready.insert(t.clone());
                }
            }
        }
    }
    if order.len() == nodes.len() {
        Some(order)
    } else {
        None
    }
}

fn position_graph_weakly_acyclic<'a>(tgds: impl IntoIterator<Item = &'a Tgd>) -> bool {
    type Pos = (RelName, AttrName);
    let mut regular: BTreeMap<Pos, BTreeSet<Pos>> = BTreeMap::new();
    let mut special: BTreeMap<Pos, BTreeSet<Pos>> = BTreeMap::new();
    let mut nodes: BTreeSet<Pos> = BTreeSet::new();

    for t in tgds {
        let mut premise_positions: BTreeMap<Var, Vec<Pos>> = BTreeMap::new();
        for a in t.premise.atoms() {
            for (attr, term) in a.bindings() {
                let pos = (a.rel.clone(), attr.clone());
                nodes.insert(pos.clone());
                if let Term::Var(v) = term {
                    premise_positions
                        .entry(v.clone())
                        .or_default()
                        .push(pos.clone());
                }
            }
        }
        let mut conclusion_var_positions: BTreeMap<Var, Vec<Pos>> = BTreeMap::new();
        let mut existential_positions: Vec<Pos> = Vec::new();
        let existentials: BTreeSet<&Var> = t.conclusion.existential_vars().iter().collect();
        for a in t.conclusion.atoms() {
            for (attr, term) in a.bindings() {
                let pos = (a.rel.clone(), attr.clone());
                nodes.insert(pos.clone());
                if let Term::Var(v) = term {
                    if existentials.contains(v) {
                        existential_positions.push(pos.clone());
                    } else {
                        conclusion_var_positions
                            .entry(v.clone())
                            .or_default()
                            .push(pos.clone());
                    }
                }
            }
        }
        for (v, sources) in &premise_positions {
            if let Some(targets) = conclusion_var_positions.get(v) {
                for s in sources {
                    regular
                        .entry(s.clone())
                        .or_default()
                        .extend(targets.iter().cloned());
                    special
                        .entry(s.clone())
                        .or_default()
                        .extend(existential_positions.iter().cloned());
                }
            }
        }
    }

    // No cycle may pass through a special edge: contract strongly connected
    // components of regular ∪ special and reject if a special edge stays
    // inside one component. Small graphs, so a simple reachability check per
    // special edge is enough.
    let all_edges = |n: &Pos| -> Vec<Pos> {
        let mut out: Vec<Pos> = regular.get(n).into_iter().flatten().cloned().collect();
        out.extend(special.get(n).into_iter().flatten().cloned());
        out
    };
    for (from, targets) in &special {
        for to in targets {
            if reaches(to, from, &all_edges) {
                return false;
            }
        }
    }
    true
}

fn reaches<N: Ord + Clone>(from: &N, to: &N, edges: &impl Fn(&N) -> Vec<N>) -> bool {
    let mut seen = BTreeSet::new();
    let mut stack = alloc::vec![from.clone()];
    while let Some(n) = stack.pop() {
        if &n == to {
            return true;
        }
        if seen.insert(n.clone()) {
            stack.extend(edges(&n));
        }
    }
    false
}

fn is_dag<N: Ord + Clone>(nodes: &BTreeSet<N>, edges: impl Fn(&N) -> Vec<N>) -> bool {
    // Colors: 0 unvisited, 1 on stack, 2 done.
    let mut color: BTreeMap<N, u8> = BTreeMap::new();
    for start in nodes {
        if color.get(start).copied().unwrap_or(0) != 0 {
            continue;
        }
        let mut stack = alloc::vec![(start.clone(), false)];
        while let Some((n, processed)) = stack.pop() {
            if processed {
                color.insert(n, 2);
                continue;
            }
            match color.get(&n).copied().unwrap_or(0) {
                1 => continue,
                2 => continue,
                _ => {}
            }
            color.insert(n.clone(), 1);
            stack.push((n.clone(), true));
            for next in edges(&n) {
                match color.get(&next).copied().unwrap_or(0) {
                    0 => stack.push((next, false)),
                    1 => return false,
                    _ => {}
                }
            }
        }
    }
    true
}

// ---------------------------------------------------------------------------
// Canonical forms
// ---------------------------------------------------------------------------

/// Canonically renames the variables of a tgd so that tgds differing only by
/// variable names become syntactically identical, enabling set membership
/// and deduplication. Atoms are sorted by a variable-name-independent
/// skeleton, then variables are numbered by first occurrence, iterating to a
/// fixpoint.
pub fn canonical_tgd(t: &Tgd) -> Tgd {
    let premise = t.premise.atoms().to_vec();
    let conclusion = t.conclusion.atoms().to_vec();
    let (premise, conclusion, renaming) = canonicalize_atoms(premise, conclusion);
    let _ = renaming;
    Tgd::new(premise, conclusion).expect("renaming a valid tgd keeps it valid")
}

/// Canonical renaming of an egd.
pub fn canonical_egd(e: &Egd) -> Egd {
    let premise = e.premise.atoms().to_vec();
    let (premise, _, renaming) = canonicalize_atoms(premise, Vec::new());
    let lhs = renaming
        .get(&e.lhs)
        .cloned()
        .unwrap_or_else(|| e.lhs.clone());
    let rhs = renaming
        .get(&e.rhs)
        .cloned()
        .unwrap_or_else(|| e.rhs.clone());
    let (lhs, rhs) = if lhs <= rhs { (lhs, rhs) } else { (rhs, lhs) };
    Egd::new(premise, lhs, rhs).expect("renaming a valid egd keeps it valid")
}

fn canonicalize_atoms(
    mut first: Vec<NamedAtom>,
    mut second: Vec<NamedAtom>,
) -> (Vec<NamedAtom>, Vec<NamedAtom>, BTreeMap<Var, Var>) {
    let mut numbering: BTreeMap<Var, usize> = BTreeMap::new();
    for _ in 0..8 {
        // Sort by (relation, attrs, constants, current variable numbers);
        // unnumbered variables sort last.
        let key = |a: &NamedAtom, numbering: &BTreeMap<Var, usize>| -> String {
            let mut s = String::new();
            s.push_str(a.rel.as_str());
            for (attr, term) in a.bindings() {
                s.push('|');
                s.push_str(attr.as_str());
                s.push('=');
                match term {
                    Term::Const(c) => s.push_str(&alloc::format!("c{c}")),
                    Term::Var(v) => match numbering.get(v) {
                        Some(n) => s.push_str(&alloc::format!("v{n:06}")),
                        None => s.push_str("v~"),
                    },
                }
            }
            s
        };
        first.sort_by_key(|a| key(a, &numbering));
        second.sort_by_key(|a| key(a, &numbering));

        let mut next: BTreeMap<Var, usize> = BTreeMap::new();
        for atom in first.iter().chain(second.iter()) {
            for v in atom.vars() {
                let n = next.len();
                next.entry(v.clone()).or_insert(n);
            }
        }
        if next == numbering {
            break;
        }
        numbering = next;
    }
    let renaming: BTreeMap<Var, Var> = numbering
        .iter()
        .map(|(v, n)| (v.clone(), Var::new(alloc::format!("x{n}"))))
        .collect();
    let subst: BTreeMap<Var, Term> = renaming
        .iter()
        .map(|(v, r)| (v.clone(), Term::Var(r.clone())))
        .collect();
    let apply = |atoms: Vec<NamedAtom>| -> Vec<NamedAtom> {
        atoms.iter().map(|a| a.substitute(&subst)).collect()
    };
    (apply(first), apply(second), renaming)
}

/// Deduplicates a tgd set by canonical renaming.
pub fn dedupe_tgds(tgds: impl IntoIterator<Item = Tgd>) -> Vec<Tgd> {
    let mut seen: BTreeSet<String> = BTreeSet::new();
    let mut out = Vec::new();
    for t in tgds {
        let c = canonical_tgd(&t);
        if seen.insert(c.to_string()) {
            out.push(c);
        }
    }
    out.sort_by_key(|t| t.to_string());
    out
}

/// Renames every variable of a tgd with a caller-supplied prefix, keeping
/// dependencies variable-disjoint.
pub fn rename_apart(t: &Tgd, prefix: &str) -> Tgd {
    let mut subst: BTreeMap<Var, Term> = BTreeMap::new();
    let mut counter = 0usize;
    for atom in t.premise.atoms().iter().chain(t.conclusion.atoms().iter()) {
        for v in atom.vars() {
            if !subst.contains_key(v) {
                subst.insert(v.clone(), Term::var(&alloc::format!("{prefix}{counter}")));
                counter += 1;
            }
        }
    }
    let premise = t
        .premise
        .atoms()
        .iter()
        .map(|a| a.substitute(&subst))
        .collect::<Vec<_>>();
    let conclusion = t
        .conclusion
        .atoms()
        .iter()
        .map(|a| a.substitute(&subst))
        .collect::<Vec<_>>();
    Tgd::new(premise, conclusion).expect("renaming keeps the tgd valid")
}
