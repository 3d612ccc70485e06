//! Conditional instances: tuples over constants and labeled nulls, each
//! carrying an element-condition, with extension semantics (a represented
//! instance may live on any schema extending the instance's own). The
//! positive fragment (no inequalities) represents the dynamic outcomes of
//! sequences mixing safe-scope and safe schema-alteration procedures, and
//! answers certain boolean queries through its naive part.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::lang::{satisfiable, Assignment, Cq, NamedAtom, Term, Tgd};
use crate::model::{
    instance_extends, AttrName, Instance, NullSource, RelName, Schema, Tuple, Value,
};
use crate::procedures::{classify, Procedure};
use crate::Budget;

/// One equality or inequality literal over nulls and constants.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum CondLiteral {
    Eq(Value, Value),
    Neq(Value, Value),
}

impl CondLiteral {
    fn normalized(self) -> CondLiteral {
        match self {
            CondLiteral::Eq(a, b) if a > b => CondLiteral::Eq(b, a),
            CondLiteral::Neq(a, b) if a > b => CondLiteral::Neq(b, a),
            lit => lit,
        }
    }

    fn is_positive(&self) -> bool {
        matches!(self, CondLiteral::Eq(_, _))
    }
}

/// An element-condition: a positive boolean combination of (in)equalities,
/// held in canonical disjunctive normal form (sorted clauses of sorted
/// literals, trivial literals dropped, contradictory clauses removed).
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct ElementCondition {
    clauses: BTreeSet<BTreeSet<CondLiteral>>,
}

impl ElementCondition {
    /// The always-true condition: one empty clause.
    pub fn top() -> Self {
        ElementCondition {
            clauses: [BTreeSet::new()].into_iter().collect(),
        }
    }

    /// The unsatisfiable condition: no clause.
    pub fn bottom() -> Self {
        ElementCondition {
            clauses: BTreeSet::new(),
        }
    }

    /// A single conjunction of literals.
    pub fn conjunction(lits: impl IntoIterator<Item = CondLiteral>) -> Self {
        ElementCondition {
            clauses: [lits.into_iter().collect()].into_iter().collect(),
        }
        .simplified()
    }

    pub fn from_clauses(clauses: impl IntoIterator<Item = BTreeSet<CondLiteral>>) -> Self {
        ElementCondition {
            clauses: clauses.into_iter().collect(),
        }
        .simplified()
    }

    pub fn clauses(&self) -> impl Iterator<Item = &BTreeSet<CondLiteral>> {
        self.clauses.iter()
    }

    fn simplified(self) -> Self {
        let mut out: BTreeSet<BTreeSet<CondLiteral>> = BTreeSet::new();
        'clauses: for clause in self.clauses {
            let mut kept: BTreeSet<CondLiteral> = BTreeSet::new();
            for lit in clause {
                let lit = lit.normalized();
                match &lit {
                    CondLiteral::Eq(a, b) => {
                        if a == b {
                            continue; // trivially true
                        }
                        if let (Value::Atom(_), Value::Atom(_)) = (a, b) {
                            continue 'clauses; // distinct constants: clause false
                        }
                        kept.insert(lit);
                    }
                    CondLiteral::Neq(a, b) => {
                        if a == b {
                            continue 'clauses; // x != x: clause false
                        }
                        if let (Value::Atom(_), Value::Atom(_)) = (a, b) {
                            continue; // distinct constants: trivially true
                        }
                        kept.insert(lit);
                    }
                }
            }
            // A clause containing both l and its negation is false.
            let contradictory = kept.iter().any(|l| {
                let flipped = match l {
                    CondLiteral::Eq(a, b) => CondLiteral::Neq(a.clone(), b.clone()),
                    CondLiteral::Neq(a, b) => CondLiteral::Eq(a.clone(), b.clone()),
                };
                kept.contains(&flipped)
            });
            if !contradictory {
                out.insert(kept);
            }
        }
        // An empty clause makes every other clause redundant.
        if out.contains(&BTreeSet::new()) {
            return ElementCondition::top();
        }
        ElementCondition { clauses: out }
    }

    pub fn is_true(&self) -> bool {
        self.clauses.contains(&BTreeSet::new())
    }

    pub fn is_false(&self) -> bool {
        self.clauses.is_empty()
    }

    pub fn is_positive(&self) -> bool {
        self.clauses
            .iter()
            .all(|c| c.iter().all(CondLiteral::is_positive))
    }

    /// Disjunction, for merging duplicate tuples.
    pub fn or(&self, other: &ElementCondition) -> ElementCondition {
        ElementCondition {
            clauses: self
                .clauses
                .iter()
                .chain(other.clauses.iter())
                .cloned()
                .collect(),
        }
        .simplified()
    }

    /// Conjunction (DNF distribution).
    pub fn and(&self, other: &ElementCondition) -> ElementCondition {
        let mut clauses = BTreeSet::new();
        for a in &self.clauses {
            for b in &other.clauses {
                clauses.insert(a.iter().chain(b.iter()).cloned().collect());
            }
        }
        ElementCondition { clauses }.simplified()
    }

    /// Evaluates the condition under a total substitution of nulls.
    pub fn eval(&self, nu: &BTreeMap<Value, Value>) -> bool {
        let resolve = |v: &Value| -> Value {
            match v {
                Value::Null(_) => nu.get(v).cloned().unwrap_or_else(|| v.clone()),
                Value::Atom(_) => v.clone(),
            }
        };
        self.clauses.iter().any(|clause| {
            clause.iter().all(|lit| match lit {
                CondLiteral::Eq(a, b) => resolve(a) == resolve(b),
                CondLiteral::Neq(a, b) => resolve(a) != resolve(b),
            })
        })
    }

    pub fn nulls(&self) -> BTreeSet<Value> {
        self.clauses
            .iter()
            .flat_map(|c| c.iter())
            .flat_map(|lit| match lit {
                CondLiteral::Eq(a, b) | CondLiteral::Neq(a, b) => [a.clone(), b.clone()],
            })
            .filter(Value::is_null)
            .collect()
    }
}

/// A conditional instance: per relation, a set of tuples over constants and
/// nulls, each with an element-condition. Duplicate tuples merge by
/// disjunction of their conditions.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct CondInstance {
    schema: Schema,
    relations: BTreeMap<RelName, BTreeMap<Tuple, ElementCondition>>,
}

impl CondInstance {
    pub fn empty(schema: Schema) -> Self {
        let relations = schema
            .relation_names()
            .map(|r| (r.clone(), BTreeMap::new()))
            .collect();
        CondInstance { schema, relations }
    }

    /// Lifts a ground instance: every tuple unconditioned.
    pub fn from_instance(i: &Instance) -> Self {
        let mut t = CondInstance::empty(i.schema().clone());
        for (rel, tuples) in i.relations() {
            for tuple in tuples {
                t.insert(rel, tuple.clone(), ElementCondition::top());
            }
        }
        t
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn insert(&mut self, rel: &RelName, tuple: Tuple, condition: ElementCondition) {
        if condition.is_false() {
            return;
        }
        let entry = self
            .relations
            .get_mut(rel)
            .unwrap_or_else(|| panic!("relation {rel} not in schema"));
        match entry.get_mut(&tuple) {
            Some(existing) => *existing = existing.or(&condition),
            None => {
                entry.insert(tuple, condition);
            }
        }
    }

    pub fn rows(&self, rel: &RelName) -> Option<&BTreeMap<Tuple, ElementCondition>> {
        self.relations.get(rel)
    }

    pub fn relations(
        &self,
    ) -> impl Iterator<Item = (&RelName, &BTreeMap<Tuple, ElementCondition>)> {
        self.relations.iter()
    }

    pub fn total_rows(&self) -> usize {
        self.relations.values().map(|r| r.len()).sum()
    }

    pub fn is_positive(&self) -> bool {
        self.relations
            .values()
            .all(|rows| rows.values().all(ElementCondition::is_positive))
    }

    pub fn nulls(&self) -> BTreeSet<Value> {
        let mut out: BTreeSet<Value> = BTreeSet::new();
        for rows in self.relations.values() {
            for (tuple, cond) in rows {
                out.extend(tuple.values().filter(|v| v.is_null()).cloned());
                out.extend(cond.nulls());
            }
        }
        out
    }

    /// The naive part: tuples whose condition is trivially true, nulls kept
    /// as values. Conditions are already canonical, so "trivially true" is
    /// exactly the top condition.
    pub fn naive_instance(&self) -> Instance {
        let mut i = Instance::empty(self.schema.clone());
        for (rel, rows) in &self.relations {
            for (tuple, cond) in rows {
                if cond.is_true() {
                    i.insert(rel, tuple.clone())
                        .expect("schema-conformant rows");
                }
            }
        }
        i
    }

    /// Applies a substitution of nulls, keeping tuples whose condition holds.
    pub fn apply_substitution(&self, nu: &BTreeMap<Value, Value>) -> Instance {
        let mut i = Instance::empty(self.schema.clone());
        for (rel, rows) in &self.relations {
            for (tuple, cond) in rows {
                if !cond.eval(nu) {
                    continue;
                }
                let ground: Tuple = tuple
                    .iter()
                    .map(|(a, v)| {
                        let v = match v {
                            Value::Null(_) => nu.get(v).cloned().unwrap_or_else(|| v.clone()),
                            Value::Atom(_) => v.clone(),
                        };
                        (a.clone(), v)
                    })
                    .collect();
                i.insert(rel, ground).expect("schema-conformant rows");
            }
        }
        i
    }

    /// A canonical text key invariant under null renaming: nulls are
    /// renumbered by first occurrence over iterated canonical sorting. Equal
    /// keys imply isomorphic instances.
    pub fn canonical_key(&self) -> String {
        let mut numbering: BTreeMap<Value, u64> = BTreeMap::new();
        for _ in 0..8 {
            let mut entries: Vec<String> = Vec::new();
            for (rel, rows) in &self.relations {
                for (tuple, cond) in rows {
                    entries.push(render_row(rel, tuple, cond, &numbering));
                }
            }
            entries.sort();
            let mut next: BTreeMap<Value, u64> = BTreeMap::new();
            // Re-derive numbering from the sorted order.
            let mut ordered_rows: Vec<(&RelName, &Tuple, &ElementCondition)> = self
                .relations
                .iter()
                .flat_map(|(rel, rows)| rows.iter().map(move |(t, c)| (rel, t, c)))
                .collect();
            ordered_rows.sort_by_key(|(rel, t, c)| render_row(rel, t, c, &numbering));
            for (_, tuple, cond) in ordered_rows {
                for v in tuple.values().chain(cond.nulls().iter()) {
                    if v.is_null() && !next.contains_key(v) {
                        let n = next.len() as u64;
                        next.insert(v.clone(), n);
                    }
                }
            }
            if next == numbering {
                break;
            }
            numbering = next;
        }
        let mut entries: Vec<String> = Vec::new();
        for (rel, rows) in &self.relations {
            for (tuple, cond) in rows {
                entries.push(render_row(rel, tuple, cond, &numbering));
            }
        }
        entries.sort();
        alloc::format!("{:?}|{}", self.schema, entries.join(";"))
    }
}

fn render_row(
    rel: &RelName,
    tuple: &Tuple,
    cond: &ElementCondition,
    numbering: &BTreeMap<Value, u64>,
) -> String {
    let render_value = |v: &Value| -> String {
        match v {
            Value::Null(_) => match numbering.get(v) {
                Some(n) => alloc::format!("n{n:06}"),
                None => "n~".into(),
            },
            Value::Atom(_) => alloc::format!("{v}"),
        }
    };
    let mut s = alloc::format!("{rel}(");
    for (a, v) in tuple {
        s.push_str(&alloc::format!("{a}={},", render_value(v)));
    }
    s.push(')');
    s.push('[');
    for clause in cond.clauses() {
        s.push('{');
        for lit in clause {
            match lit {
                CondLiteral::Eq(a, b) => {
                    s.push_str(&alloc::format!("{}={},", render_value(a), render_value(b)))
                }
                CondLiteral::Neq(a, b) => {
                    s.push_str(&alloc::format!("{}!={},", render_value(a), render_value(b)))
                }
            }
        }
        s.push('}');
    }
    s.push(']');
    s
}

/// Membership in the represented set: some substitution of the instance's
/// nulls yields a conditional-free instance that `j` extends. The search
/// ranges over `j`'s active domain plus one fresh value per null, which
/// suffices under extension semantics.
pub fn cond_rep_contains(t: &CondInstance, j: &Instance) -> bool {
    let nulls: Vec<Value> = t.nulls().into_iter().collect();
    let mut pool: Vec<Value> = j.active_domain().into_iter().collect();
    let mut fresh = crate::model::FreshAtoms::avoiding(
        pool.iter()
            .cloned()
            .chain(
                t.relations()
                    .flat_map(|(_, rows)| rows.keys().flat_map(|tu| tu.values().cloned())),
            )
            .collect(),
    );
    for _ in &nulls {
        pool.push(fresh.next());
    }
    let mut nu: BTreeMap<Value, Value> = BTreeMap::new();
    search_substitution(t, j, &nulls, &pool, 0, &mut nu)
}

fn search_substitution(
    t: &CondInstance,
    j: &Instance,
    nulls: &[Value],
    pool: &[Value],
    idx: usize,
    nu: &mut BTreeMap<Value, Value>,
) -> bool {
    if idx == nulls.len() {
        return instance_extends(j, &t.apply_substitution(nu));
    }
    for v in pool {
        nu.insert(nulls[idx].clone(), v.clone());
        if search_substitution(t, j, nulls, pool, idx + 1, nu) {
            return true;
        }
    }
    nu.remove(&nulls[idx]);
    false
}

/// Conditional chase of a positive instance with the postconditions of a
/// safe-scope procedure. Triggers match premise atoms against rows,
/// collecting the equalities a match demands between null entries (and the
/// matched rows' own conditions); each trigger fires once, emitting its
/// conclusion rows under the collected condition, with fresh nulls at
/// existential positions and at conclusion attributes the atom leaves open.
pub fn chase_conditional(t: &CondInstance, p: &Procedure) -> Result<CondInstance> {
    chase_conditional_with(t, p, &Budget::default())
}

pub fn chase_conditional_with(
    t: &CondInstance,
    p: &Procedure,
    budget: &Budget,
) -> Result<CondInstance> {
    if !t.is_positive() {
        return Err(Error::Unsupported(
            "conditional chase is defined on the positive fragment".into(),
        ));
    }
    let class = classify(p);
    if !class.safe_scope {
        return Err(Error::ClassViolation {
            procedure: p.name.clone(),
            flag: "safe_scope",
            detail: "conditional chase applies safe-scope procedures".into(),
        });
    }
    let tgds = p.post_tgds();
    for tgd in &tgds {
        if !tgd.compatible(t.schema()) {
            return Err(Error::Incompatible(tgd.to_string()));
        }
    }

    let mut nulls = NullSource::past(t.nulls().into_iter());
    let mut current = t.clone();
    let mut fired: BTreeSet<String> = BTreeSet::new();
    loop {
        let mut changed = false;
        for (dep_idx, tgd) in tgds.iter().enumerate() {
            let triggers = conditional_triggers(&current, tgd);
            for (assignment, condition) in triggers {
                let key = alloc::format!("{dep_idx}|{assignment:?}");
                if fired.contains(&key) {
                    continue;
                }
                // Skip triggers whose conclusion rows are already present
                // under a condition at least as weak.
                if conclusion_covered(&current, tgd, &assignment, &condition) {
                    fired.insert(key);
                    continue;
                }
                fired.insert(key);
                changed = true;
                fire_conditional(&mut current, tgd, &assignment, &condition, &mut nulls);
                if current.total_rows() as u64 > budget.condtab_tuples {
                    return Err(Error::ResourceExhausted {
                        what: "conditional instance rows",
                        limit: budget.condtab_tuples,
                    });
                }
            }
        }
        if !changed {
            return Ok(current);
        }
    }
}

/// All matches of a tgd premise into the rows of a conditional instance.
/// Returns the variable assignment (to values or nulls) and the condition
/// under which the trigger exists.
fn conditional_triggers(
    t: &CondInstance,
    tgd: &Tgd,
) -> Vec<(Vec<(crate::lang::Var, Value)>, ElementCondition)> {
    let mut out = Vec::new();
    let mut assignment: BTreeMap<crate::lang::Var, Value> = BTreeMap::new();
    match_atoms(
        t,
        tgd.premise.atoms(),
        &mut assignment,
        &ElementCondition::top(),
        &mut out,
    );
    // Deterministic order and deduplication.
    out.sort();
    out.dedup();
    out
}

fn match_atoms(
    t: &CondInstance,
    atoms: &[NamedAtom],
    assignment: &mut BTreeMap<crate::lang::Var, Value>,
    condition: &ElementCondition,
    out: &mut Vec<(Vec<(crate::lang::Var, Value)>, ElementCondition)>,
) {
    let (atom, rest) = match atoms.split_first() {
        Some(x) => x,
        None => {
            if !condition.is_false() {
                out.push((
                    assignment
                        .iter()
                        .map(|(v, x)| (v.clone(), x.clone()))
                        .collect(),
                    condition.clone(),
                ));
            }
            return;
        }
    };
    let rows = match t.rows(&atom.rel) {
        Some(r) => r,
        None => return,
    };
    'rows: for (row, row_cond) in rows {
        let mut local = condition.and(row_cond);
        let mut bound: Vec<crate::lang::Var> = Vec::new();
        for (attr, term) in atom.bindings() {
            let entry = match row.get(attr) {
                Some(v) => v.clone(),
                None => continue 'rows,
            };
            match term {
                Term::Const(c) => {
                    local = local.and(&ElementCondition::conjunction([CondLiteral::Eq(
                        c.clone(),
                        entry.clone(),
                    )]));
                }
                Term::Var(v) => match assignment.get(v) {
                    Some(existing) => {
                        local = local.and(&ElementCondition::conjunction([CondLiteral::Eq(
                            existing.clone(),
                            entry.clone(),
                        )]));
                    }
                    None => {
                        assignment.insert(v.clone(), entry.clone());
                        bound.push(v.clone());
                    }
                },
            }
            if local.is_false() {
                for v in &bound {
                    assignment.remove(v);
                }
                continue 'rows;
            }
        }
        match_atoms(t, rest, assignment, &local, out);
        for v in &bound {
            assignment.remove(v);
        }
    }
}

fn conclusion_covered(
    t: &CondInstance,
    tgd: &Tgd,
    assignment: &[(crate::lang::Var, Value)],
    condition: &ElementCondition,
) -> bool {
    if !tgd.is_full() {
        // Rows for existential conclusions are never exactly reproducible;
        // covered only when literally fired before (handled by the caller's
        // fired set).
        return false;
    }
    let map: BTreeMap<crate::lang::Var, Value> = assignment.iter().cloned().collect();
    tgd.conclusion.atoms().iter().all(|atom| {
        let rows = match t.rows(&atom.rel) {
            Some(r) => r,
            None => return false,
        };
        let attrs = t.schema().attrs(&atom.rel).expect("compatible");
        if atom.bindings().len() != attrs.len() {
            return false;
        }
        let tuple: Tuple = atom
            .bindings()
            .iter()
            .map(|(a, term)| {
                let v = match term {
                    Term::Const(c) => c.clone(),
                    Term::Var(v) => map[v].clone(),
                };
                (a.clone(), v)
            })
            .collect();
        match rows.get(&tuple) {
            // Present under a weaker or equal condition: covered when the
            // existing condition is trivially true or syntactically equal.
            Some(existing) => existing.is_true() || existing == condition,
            None => false,
        }
    })
}

fn fire_conditional(
    t: &mut CondInstance,
    tgd: &Tgd,
    assignment: &[(crate::lang::Var, Value)],
    condition: &ElementCondition,
    nulls: &mut NullSource,
) {
    let mut map: BTreeMap<crate::lang::Var, Value> = assignment.iter().cloned().collect();
    for z in tgd.conclusion.existential_vars() {
        map.insert(z.clone(), nulls.fresh());
    }
    for atom in tgd.conclusion.atoms() {
        let attrs: Vec<AttrName> = t.schema().attrs(&atom.rel).expect("compatible").to_vec();
        let mut tuple: Tuple = atom
            .bindings()
            .iter()
            .map(|(a, term)| {
                let v = match term {
                    Term::Const(c) => c.clone(),
                    Term::Var(v) => map[v].clone(),
                };
                (a.clone(), v)
            })
            .collect();
        for a in attrs {
            tuple.entry(a).or_insert_with(|| nulls.fresh());
        }
        t.insert(&atom.rel, tuple, condition.clone());
    }
}

/// Pads a conditional instance onto an extending schema: rows of relations
/// gaining attributes receive a fresh null per new position; brand-new
/// relations start empty.
fn pad_to_schema(t: &CondInstance, target: &Schema) -> CondInstance {
    let mut nulls = NullSource::past(t.nulls().into_iter());
    let mut out = CondInstance::empty(target.clone());
    for (rel, rows) in t.relations() {
        let new_attrs: Vec<AttrName> = match target.attrs(rel) {
            Some(attrs) => attrs.to_vec(),
            None => continue,
        };
        for (row, cond) in rows {
            let mut padded = row.clone();
            for a in &new_attrs {
                padded.entry(a.clone()).or_insert_with(|| nulls.fresh());
            }
            out.insert(rel, padded, cond.clone());
        }
    }
    out
}

/// Applies a safe schema-alteration: the schema grows to the procedure's
/// minimal schema, padding rows with fresh nulls. Returns `None` when the
/// minimal-schema construction fails, meaning the outcome set is empty.
pub fn extend_schema_conditional(t: &CondInstance, p: &Procedure) -> Result<Option<CondInstance>> {
    let class = classify(p);
    if !class.safe_alteration {
        return Err(Error::ClassViolation {
            procedure: p.name.clone(),
            flag: "safe_alteration",
            detail: "schema extension applies safe schema-alterations".into(),
        });
    }
    match crate::dynschema::minimal_schema(p, t.schema()).schema() {
        Some(target) => Ok(Some(pad_to_schema(t, target))),
        None => Ok(None),
    }
}

/// One step of the conditional fold for either safe class. Safe-scope steps
/// are gated by the minimal-schema construction: a failed arity pin means
/// the outcome set is empty (`None`); postconditions demanding attributes
/// the schema lacks first pad the instance onto the minimal schema, then
/// chase.
pub fn apply_step(
    t: &CondInstance,
    p: &Procedure,
    budget: &Budget,
) -> Result<Option<CondInstance>> {
    let class = classify(p);
    if class.safe_scope {
        let padded = match crate::dynschema::minimal_schema(p, t.schema()).schema() {
            None => return Ok(None),
            Some(target) if target != t.schema() => pad_to_schema(t, target),
            Some(_) => t.clone(),
        };
        chase_conditional_with(&padded, p, budget).map(Some)
    } else if class.safe_alteration {
        extend_schema_conditional(t, p)
    } else {
        Err(Error::ClassViolation {
            procedure: p.name.clone(),
            flag: "safe_scope or safe_alteration",
            detail: "conditional outcomes are defined for the safe classes".into(),
        })
    }
}

/// Outcome of the conditional fold: a representation, or emptiness with the
/// failing procedure's name.
#[derive(Clone, Debug)]
pub enum CondOutcome {
    Instance(CondInstance),
    Empty(String),
}

impl CondOutcome {
    pub fn instance(&self) -> Option<&CondInstance> {
        match self {
            CondOutcome::Instance(t) => Some(t),
            CondOutcome::Empty(_) => None,
        }
    }
}

/// Folds a sequence of safe-scope / safe-alteration procedures over a ground
/// instance into a positive conditional instance over-approximating the
/// dynamic outcome set and agreeing with it on minimal instances.
/// Egd-bearing procedures are outside the positive fragment and rejected.
pub fn outcomes_condtab(i: &Instance, ps: &[Procedure]) -> Result<CondOutcome> {
    outcomes_condtab_with(i, ps, &Budget::default())
}

pub fn outcomes_condtab_with(
    i: &Instance,
    ps: &[Procedure],
    budget: &Budget,
) -> Result<CondOutcome> {
    let mut current = CondInstance::from_instance(i);
    for p in ps {
        match apply_step(&current, p, budget)? {
            Some(next) => current = next,
            None => return Ok(CondOutcome::Empty(p.name.clone())),
        }
        debug_assert!(current.is_positive());
    }
    Ok(CondOutcome::Instance(current))
}

/// Certain answer of a boolean conjunctive query over everything a positive
/// conditional instance represents: a homomorphism into the naive part,
/// nulls acting as ordinary values (each stands for some value in every
/// represented instance); query constants must match exactly. A query that
/// is not compatible with the instance's schema fails on the minimal
/// represented instances, so the answer is false.
pub fn certain_boolean_condtab(t: &CondInstance, q: &Cq) -> Result<bool> {
    if !q.is_boolean() {
        return Err(Error::Unsupported(
            "certain answers are computed for boolean queries; substitute constants for \
             free variables to reduce"
                .into(),
        ));
    }
    let naive = t.naive_instance();
    if !q.compatible(naive.schema()) {
        return Ok(false);
    }
    Ok(satisfiable(q.atoms(), &naive, &Assignment::new()))
}

/// Certain answer over the outcomes of a sequence from the safe classes,
/// under the dynamic semantics. An empty outcome set answers `false`: a
/// sequence that cannot run guarantees nothing about the data.
pub fn certain_boolean_dyn(i: &Instance, ps: &[Procedure], q: &Cq) -> Result<bool> {
    certain_boolean_dyn_with(i, ps, q, &Budget::default())
}

pub fn certain_boolean_dyn_with(
    i: &Instance,
    ps: &[Procedure],
    q: &Cq,
    budget: &Budget,
) -> Result<bool> {
    match outcomes_condtab_with(i, ps, budget)? {
        CondOutcome::Instance(t) => certain_boolean_condtab(&t, q),
        CondOutcome::Empty(_) => Ok(false),
    }
}

/// Certain answer over a ground full-tgd scoped knowledge base: the query
/// evaluated on the minimal instance.
pub fn certain_boolean_skb(k: &crate::skb::ScopedKnowledgeBase, q: &Cq) -> Result<bool> {
    if !q.is_boolean() {
        return Err(Error::Unsupported(
            "certain answers are computed for boolean queries".into(),
        ));
    }
    let minimal = crate::skb::minimal_instance(k)?;
    if !q.compatible(minimal.schema()) {
        return Ok(false);
    }
    Ok(satisfiable(q.atoms(), &minimal, &Assignment::new()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{StructureConstraint, TotalQuery};
    use crate::model::tuple;
    use crate::procedures::{Condition, PreserveQuery};

    fn attr(s: &str) -> AttrName {
        AttrName::new(s)
    }

    fn rel(s: &str) -> RelName {
        RelName::new(s)
    }

    fn unary_schema(rels: &[&str]) -> Schema {
        let mut s = Schema::new();
        for r in rels {
            s.add_relation(rel(r), [attr("a")]).unwrap();
        }
        s
    }

    #[test]
    fn condition_normalization() {
        let c =
            ElementCondition::conjunction([CondLiteral::Eq(Value::atom("a"), Value::atom("a"))]);
        assert!(c.is_true());

        let c =
            ElementCondition::conjunction([CondLiteral::Eq(Value::atom("a"), Value::atom("b"))]);
        assert!(c.is_false());

        let c = ElementCondition::conjunction([
            CondLiteral::Eq(Value::Null(0), Value::atom("a")),
            CondLiteral::Neq(Value::Null(0), Value::atom("a")),
        ]);
        assert!(c.is_false());

        let pos =
            ElementCondition::conjunction([CondLiteral::Eq(Value::Null(0), Value::atom("a"))]);
        assert!(pos.is_positive());
        let neg = ElementCondition::conjunction([CondLiteral::Neq(Value::Null(0), Value::Null(1))]);
        assert!(!neg.is_positive());
    }

    #[test]
    fn rep_contains_examples() {
        // Ground instance represents itself.
        let mut i = Instance::empty(unary_schema(&["R"]));
        i.insert(&rel("R"), tuple([(attr("a"), Value::int(5))]))
            .unwrap();
        let t = CondInstance::from_instance(&i);
        assert!(cond_rep_contains(&t, &i));

        // Single unconditioned null matches any value, even across schema
        // extension.
        let mut t2 = CondInstance::empty(unary_schema(&["R"]));
        t2.insert(
            &rel("R"),
            tuple([(attr("a"), Value::Null(0))]),
            ElementCondition::top(),
        );
        let mut s_ext = Schema::new();
        s_ext
            .add_relation(rel("R"), [attr("a"), attr("b")])
            .unwrap();
        let mut j = Instance::empty(s_ext);
        j.insert(
            &rel("R"),
            tuple([(attr("a"), Value::int(5)), (attr("b"), Value::int(7))]),
        )
        .unwrap();
        assert!(cond_rep_contains(&t2, &j));

        // A conditioned tuple whose condition forces a mismatch.
        let mut t3 = CondInstance::empty(unary_schema(&["R"]));
        t3.insert(
            &rel("R"),
            tuple([(attr("a"), Value::Null(0))]),
            ElementCondition::conjunction([CondLiteral::Eq(Value::Null(0), Value::atom("a"))]),
        );
        let mut j2 = Instance::empty(unary_schema(&["R"]));
        j2.insert(&rel("R"), tuple([(attr("a"), Value::atom("b"))]))
            .unwrap();
        // nu(n0) = "a" makes the tuple required but absent; any other choice
        // drops the tuple. Dropping it leaves the empty instance, which j2
        // extends, so membership holds.
        assert!(cond_rep_contains(&t3, &j2));

        // Requiring the tuple unconditionally breaks membership.
        let mut t4 = CondInstance::empty(unary_schema(&["R"]));
        t4.insert(
            &rel("R"),
            tuple([(attr("a"), Value::atom("a"))]),
            ElementCondition::top(),
        );
        assert!(!cond_rep_contains(&t4, &j2));
    }

    fn safe_proc(name: &str, tgds: Vec<Tgd>) -> Procedure {
        let scoped: BTreeSet<RelName> =
            tgds.iter().flat_map(|t| t.conclusion_relations()).collect();
        Procedure {
            name: name.into(),
            scope: scoped
                .iter()
                .map(|r| StructureConstraint::wildcard(r.clone()))
                .collect(),
            pre: alloc::vec![],
            post: tgds.into_iter().map(Condition::Tgd).collect(),
            preserve: scoped
                .into_iter()
                .map(|r| PreserveQuery::Total(TotalQuery { rel: r }))
                .collect(),
        }
    }

    #[test]
    fn ground_conditional_chase_matches_ground_chase() {
        let mut i = Instance::empty(unary_schema(&["R", "S", "T"]));
        i.insert(&rel("R"), tuple([(attr("a"), Value::int(1))]))
            .unwrap();
        i.insert(&rel("R"), tuple([(attr("a"), Value::int(2))]))
            .unwrap();
        let t1 = Tgd::new(
            [NamedAtom::new(rel("R"), [(attr("a"), Term::var("x"))]).unwrap()],
            [NamedAtom::new(rel("T"), [(attr("a"), Term::var("x"))]).unwrap()],
        )
        .unwrap();
        let t2 = Tgd::new(
            [NamedAtom::new(rel("T"), [(attr("a"), Term::var("x"))]).unwrap()],
            [NamedAtom::new(rel("S"), [(attr("a"), Term::var("x"))]).unwrap()],
        )
        .unwrap();
        let p = safe_proc("p", alloc::vec![t1.clone(), t2.clone()]);

        let cond = chase_conditional(&CondInstance::from_instance(&i), &p).unwrap();
        let ground = crate::chase::chase_full(&i, &[t1, t2]).unwrap();
        assert_eq!(cond.naive_instance(), ground);
        assert!(cond.is_positive());
    }

    #[test]
    fn conditional_chase_invents_fresh_nulls() {
        let mut s = Schema::new();
        s.add_relation(rel("R"), [attr("a")]).unwrap();
        s.add_relation(rel("T"), [attr("a"), attr("b")]).unwrap();
        let mut t = CondInstance::empty(s);
        t.insert(
            &rel("R"),
            tuple([(attr("a"), Value::Null(0))]),
            ElementCondition::top(),
        );

        let tgd = Tgd::new(
            [NamedAtom::new(rel("R"), [(attr("a"), Term::var("x"))]).unwrap()],
            [NamedAtom::new(
                rel("T"),
                [(attr("a"), Term::var("x")), (attr("b"), Term::var("z"))],
            )
            .unwrap()],
        )
        .unwrap();
        let p = safe_proc("p", alloc::vec![tgd]);
        let out = chase_conditional(&t, &p).unwrap();
        let rows = out.rows(&rel("T")).unwrap();
        assert_eq!(rows.len(), 1);
        let (row, cond) = rows.iter().next().unwrap();
        assert_eq!(row[&attr("a")], Value::Null(0));
        assert!(row[&attr("b")].is_null());
        assert_ne!(row[&attr("b")], Value::Null(0));
        assert!(cond.is_true());
        assert!(out.is_positive());
    }

    #[test]
    fn conditional_chase_records_merge_conditions() {
        // R(a), R(n1); tgd R(x), R(y) -> B(x, y) pins nothing; instead use a
        // premise that matches one variable against both rows.
        let mut s = Schema::new();
        s.add_relation(rel("R"), [attr("a"), attr("b")]).unwrap();
        s.add_relation(rel("T"), [attr("a")]).unwrap();
        let mut t = CondInstance::empty(s);
        t.insert(
            &rel("R"),
            tuple([(attr("a"), Value::atom("c")), (attr("b"), Value::Null(1))]),
            ElementCondition::top(),
        );
        // Premise R(a: x, b: x) requires the two columns to agree, which for
        // the row above means n1 = c.
        let tgd = Tgd::new(
            [NamedAtom::new(
                rel("R"),
                [(attr("a"), Term::var("x")), (attr("b"), Term::var("x"))],
            )
            .unwrap()],
            [NamedAtom::new(rel("T"), [(attr("a"), Term::var("x"))]).unwrap()],
        )
        .unwrap();
        let p = safe_proc("p", alloc::vec![tgd]);
        let out = chase_conditional(&t, &p).unwrap();
        let rows = out.rows(&rel("T")).unwrap();
        assert_eq!(rows.len(), 1);
        let (_, cond) = rows.iter().next().unwrap();
        assert!(!cond.is_true());
        assert!(cond.is_positive());
        assert_eq!(
            cond.clauses().next().unwrap().iter().next().unwrap(),
            &CondLiteral::Eq(Value::atom("c"), Value::Null(1)).normalized()
        );
    }

    #[test]
    fn schema_extension_pads_with_fresh_nulls() {
        let mut s = Schema::new();
        s.add_relation(rel("LocVisits"), [attr("facility"), attr("pId")])
            .unwrap();
        let mut i = Instance::empty(s);
        i.insert(
            &rel("LocVisits"),
            tuple([
                (attr("facility"), Value::int(1)),
                (attr("pId"), Value::int(2)),
            ]),
        )
        .unwrap();
        let p = Procedure {
            name: "alter".into(),
            scope: alloc::vec![],
            pre: alloc::vec![],
            post: alloc::vec![Condition::Structure(
                StructureConstraint::attrs(rel("LocVisits"), [attr("insId")]).unwrap()
            )],
            preserve: alloc::vec![],
        };
        let t = CondInstance::from_instance(&i);
        let out = extend_schema_conditional(&t, &p).unwrap().unwrap();
        let rows = out.rows(&rel("LocVisits")).unwrap();
        assert_eq!(rows.len(), 1);
        let (row, cond) = rows.iter().next().unwrap();
        assert!(row[&attr("insId")].is_null());
        assert!(cond.is_true());

        // A brand-new relation starts empty.
        let p2 = Procedure {
            name: "new_rel".into(),
            scope: alloc::vec![],
            pre: alloc::vec![],
            post: alloc::vec![Condition::Structure(
                StructureConstraint::attrs(rel("Audit"), [attr("who")]).unwrap()
            )],
            preserve: alloc::vec![],
        };
        let out2 = extend_schema_conditional(&out, &p2).unwrap().unwrap();
        assert!(out2.rows(&rel("Audit")).unwrap().is_empty());
    }

    #[test]
    fn alteration_then_fill_mixes_nulls_and_ground_rows() {
        // Visit rows lack the insurance column; the alteration pads them with
        // fresh nulls, and the filler then adds ground rows joining the
        // patient registry against the external feed. (Reading and writing
        // the same relation would leave the safe-scope class: its
        // postcondition set must stay acyclic.)
        let mut s = Schema::new();
        s.add_relation(rel("EVisits"), [attr("facility"), attr("pId")])
            .unwrap();
        s.add_relation(rel("LocVisits"), [attr("facility"), attr("pId")])
            .unwrap();
        s.add_relation(rel("Patients"), [attr("insId"), attr("pId")])
            .unwrap();
        let mut i = Instance::empty(s);
        i.insert(
            &rel("EVisits"),
            tuple([
                (attr("facility"), Value::int(1234)),
                (attr("pId"), Value::int(33)),
            ]),
        )
        .unwrap();
        i.insert(
            &rel("LocVisits"),
            tuple([
                (attr("facility"), Value::int(9)),
                (attr("pId"), Value::int(8)),
            ]),
        )
        .unwrap();
        i.insert(
            &rel("Patients"),
            tuple([
                (attr("pId"), Value::int(33)),
                (attr("insId"), Value::atom("INS1")),
            ]),
        )
        .unwrap();

        let alter = Procedure {
            name: "alter".into(),
            scope: alloc::vec![],
            pre: alloc::vec![],
            post: alloc::vec![Condition::Structure(
                StructureConstraint::attrs(rel("LocVisits"), [attr("insId")]).unwrap()
            )],
            preserve: alloc::vec![],
        };
        let fill_tgd = Tgd::new(
            [
                NamedAtom::new(
                    rel("Patients"),
                    [
                        (attr("pId"), Term::var("x")),
                        (attr("insId"), Term::var("y")),
                    ],
                )
                .unwrap(),
                NamedAtom::new(
                    rel("EVisits"),
                    [
                        (attr("facility"), Term::var("f")),
                        (attr("pId"), Term::var("x")),
                    ],
                )
                .unwrap(),
            ],
            [NamedAtom::new(
                rel("LocVisits"),
                [
                    (attr("facility"), Term::var("f")),
                    (attr("pId"), Term::var("x")),
                    (attr("insId"), Term::var("y")),
                ],
            )
            .unwrap()],
        )
        .unwrap();
        let fill = Procedure {
            name: "fill".into(),
            scope: alloc::vec![StructureConstraint::wildcard(rel("LocVisits"))],
            pre: alloc::vec![],
            post: alloc::vec![Condition::Tgd(fill_tgd)],
            preserve: alloc::vec![PreserveQuery::Total(TotalQuery {
                rel: rel("LocVisits")
            })],
        };

        // After the alteration alone the padded null already witnesses
        // "every visit row has some insurance value".
        let padded = match outcomes_condtab(&i, core::slice::from_ref(&alter)).unwrap() {
            CondOutcome::Instance(t) => t,
            CondOutcome::Empty(_) => unreachable!(),
        };
        let some_insured = Cq::boolean([NamedAtom::new(
            rel("LocVisits"),
            [
                (attr("insId"), Term::var("y")),
                (attr("pId"), Term::var("x")),
            ],
        )
        .unwrap()])
        .unwrap();
        assert!(certain_boolean_condtab(&padded, &some_insured).unwrap());

        // The full sequence keeps the padded row and adds the ground one.
        let t = match outcomes_condtab(&i, &[alter, fill]).unwrap() {
            CondOutcome::Instance(t) => t,
            CondOutcome::Empty(_) => unreachable!(),
        };
        let rows = t.rows(&rel("LocVisits")).unwrap();
        assert_eq!(rows.len(), 2);
        let mut ground = 0;
        let mut with_null = 0;
        for (row, cond) in rows {
            assert!(cond.is_true());
            if row[&attr("insId")].is_null() {
                with_null += 1;
            } else {
                assert_eq!(row[&attr("insId")], Value::atom("INS1"));
                ground += 1;
            }
        }
        assert_eq!((ground, with_null), (1, 1));
    }

    #[test]
    fn empty_sequence_is_identity() {
        let mut i = Instance::empty(unary_schema(&["R"]));
        i.insert(&rel("R"), tuple([(attr("a"), Value::int(1))]))
            .unwrap();
        let out = outcomes_condtab(&i, &[]).unwrap();
        assert_eq!(out.instance().unwrap().naive_instance(), i);
    }

    #[test]
    fn certain_boolean_examples() {
        let mut i = Instance::empty(unary_schema(&["R", "T"]));
        i.insert(&rel("R"), tuple([(attr("a"), Value::int(1))]))
            .unwrap();

        // Certain over an always-empty relation is false.
        let q_t = Cq::boolean([NamedAtom::new(rel("T"), [(attr("a"), Term::var("x"))]).unwrap()])
            .unwrap();
        let t = CondInstance::from_instance(&i);
        assert!(!certain_boolean_condtab(&t, &q_t).unwrap());

        // Unconditioned nulls count as values.
        let mut t2 = CondInstance::empty(unary_schema(&["R", "T"]));
        t2.insert(
            &rel("T"),
            tuple([(attr("a"), Value::Null(0))]),
            ElementCondition::top(),
        );
        assert!(certain_boolean_condtab(&t2, &q_t).unwrap());

        // Conditioned rows are dropped from the naive part.
        let mut t3 = CondInstance::empty(unary_schema(&["R", "T"]));
        t3.insert(
            &rel("T"),
            tuple([(attr("a"), Value::Null(0))]),
            ElementCondition::conjunction([CondLiteral::Eq(Value::Null(0), Value::atom("v"))]),
        );
        assert!(!certain_boolean_condtab(&t3, &q_t).unwrap());

        // Constants in the query must match exactly: a null is not "1".
        let q_const =
            Cq::boolean([
                NamedAtom::new(rel("T"), [(attr("a"), Term::Const(Value::int(1)))]).unwrap(),
            ])
            .unwrap();
        assert!(!certain_boolean_condtab(&t2, &q_const).unwrap());
    }

    #[test]
    fn canonical_key_is_null_renaming_invariant() {
        let mut s = Schema::new();
        s.add_relation(rel("R"), [attr("a"), attr("b")]).unwrap();
        let mut t1 = CondInstance::empty(s.clone());
        t1.insert(
            &rel("R"),
            tuple([(attr("a"), Value::Null(3)), (attr("b"), Value::Null(7))]),
            ElementCondition::top(),
        );
        let mut t2 = CondInstance::empty(s);
        t2.insert(
            &rel("R"),
            tuple([(attr("a"), Value::Null(10)), (attr("b"), Value::Null(2))]),
            ElementCondition::top(),
        );
        assert_eq!(t1.canonical_key(), t2.canonical_key());

        let mut t3 = t2.clone();
        t3.insert(
            &rel("R"),
            tuple([(attr("a"), Value::Null(2)), (attr("b"), Value::Null(2))]),
            ElementCondition::top(),
        );
        assert_ne!(t1.canonical_key(), t3.canonical_key());
    }
}
