//! Chase engines.
//!
//! Two distinct procedures share the name "chase" here and are never
//! coerced into each other: the ground chase for full tgds, whose result is
//! the unique minimal superset of the input satisfying the set, and the
//! standard restricted chase for tgd+egd sets, which introduces labeled
//! nulls and may fail on an egd.
//!
//! All runs are deterministic: active triggers are fired in the total order
//! given by [`fire_order`] (dependency index, then lexicographic assignment
//! order), and replaying the recorded steps reproduces the output exactly.

use alloc::collections::BTreeSet;
use alloc::string::ToString;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::lang::{
    classify_tgd_set, satisfiable, satisfying_assignments, Assignment, Dependency, Tgd, Var,
};
use crate::model::{Instance, NullSource, Tuple, Value};
use crate::Budget;

/// One fired trigger: which dependency, under which premise assignment.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Step {
    pub dependency: usize,
    pub assignment: Vec<(Var, Value)>,
}

/// Status of a standard chase run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ChaseStatus {
    /// The instance satisfies every input dependency.
    Success,
    /// An egd demanded the equality of two distinct constants.
    EgdFailure { dependency: usize },
    /// The step limit was reached before a fixpoint.
    StepLimitExceeded,
}

/// Result of a standard chase run. `steps` replayed against the input via
/// [`replay`] reproduce `instance` exactly.
#[derive(Debug, Clone)]
pub struct ChaseResult {
    pub instance: Instance,
    pub steps: Vec<Step>,
    pub status: ChaseStatus,
}

fn assignment_key(a: &Assignment) -> Vec<(Var, Value)> {
    a.iter().map(|(v, x)| (v.clone(), x.clone())).collect()
}

/// The ground chase for a full tgd set: the unique minimal superset of `i`
/// satisfying every tgd. No nulls are introduced; the result is independent
/// of firing order. Conclusion atoms must cover the full attribute set of
/// their relation, otherwise the required tuple would be underdetermined.
pub fn chase_full(i: &Instance, tgds: &[Tgd]) -> Result<Instance> {
    Ok(chase_full_traced(i, tgds, &Budget::default())?.0)
}

/// [`chase_full`] with the fired trigger sequence and an explicit budget.
pub fn chase_full_traced(
    i: &Instance,
    tgds: &[Tgd],
    budget: &Budget,
) -> Result<(Instance, Vec<Step>)> {
    if !classify_tgd_set(tgds.iter()).full {
        return Err(Error::NotFull("ground chase requires full tgds".into()));
    }
    for t in tgds {
        if !t.compatible(i.schema()) {
            return Err(Error::Incompatible(t.to_string()));
        }
        for atom in t.conclusion.atoms() {
            let attrs = i.schema().attrs(&atom.rel).expect("compatible");
            if atom.bindings().len() != attrs.len() {
                return Err(Error::MalformedExpression(alloc::format!(
                    "ground chase needs conclusion atoms over all attributes; {atom} misses some of {}",
                    atom.rel
                )));
            }
        }
    }

    let mut current = i.clone();
    let mut steps: Vec<Step> = Vec::new();
    let mut fired: u64 = 0;
    loop {
        // All full-tgd triggers are independent, so a whole round can fire at
        // once; the result equals one-at-a-time firing in any order.
        let round = active_full_triggers(&current, tgds);
        if round.is_empty() {
            return Ok((current, steps));
        }
        for (dep, tau) in round {
            fired += 1;
            if fired > budget.chase_steps {
                return Err(Error::ResourceExhausted {
                    what: "chase triggers",
                    limit: budget.chase_steps,
                });
            }
            apply_full_trigger(&mut current, &tgds[dep], &tau)?;
            steps.push(Step {
                dependency: dep,
                assignment: assignment_key(&tau),
            });
        }
    }
}

/// Active triggers of a full tgd set in deterministic fire order: premise
/// satisfied, conclusion not yet present.
fn active_full_triggers(i: &Instance, tgds: &[Tgd]) -> Vec<(usize, Assignment)> {
    let mut out = Vec::new();
    for (dep, t) in tgds.iter().enumerate() {
        let mut assignments = satisfying_assignments(t.premise.atoms(), i, &Assignment::new());
        assignments.sort_by_key(assignment_key);
        assignments.dedup();
        for tau in assignments {
            if !full_conclusion_present(i, t, &tau) {
                out.push((dep, tau));
            }
        }
    }
    out.sort_by_key(|(dep, tau)| (*dep, assignment_key(tau)));
    out
}

fn full_conclusion_present(i: &Instance, t: &Tgd, tau: &Assignment) -> bool {
    t.conclusion.atoms().iter().all(|atom| {
        let tuple = ground_atom(atom, tau);
        i.tuples(&atom.rel)
            .map(|ts| ts.contains(&tuple))
            .unwrap_or(false)
    })
}

fn ground_atom(atom: &crate::lang::NamedAtom, tau: &Assignment) -> Tuple {
    atom.bindings()
        .iter()
        .map(|(a, term)| {
            let v = match term {
                crate::lang::Term::Const(c) => c.clone(),
                crate::lang::Term::Var(v) => tau[v].clone(),
            };
            (a.clone(), v)
        })
        .collect()
}

fn apply_full_trigger(i: &mut Instance, t: &Tgd, tau: &Assignment) -> Result<()> {
    for atom in t.conclusion.atoms() {
        let tuple = ground_atom(atom, tau);
        i.insert(&atom.rel, tuple)?;
    }
    Ok(())
}

/// The standard restricted chase for mixed tgd/egd sets. Tgd triggers create
/// fresh labeled nulls for existential conclusion variables (and for
/// conclusion attributes left unmentioned); egd triggers unify a null with
/// the other side and fail on a clash of distinct constants. An
/// [`ChaseStatus::EgdFailure`] or [`ChaseStatus::StepLimitExceeded`] is a
/// reported value, not an error.
///
/// Termination is guaranteed for weakly acyclic tgd subsets; other callers
/// must rely on `step_limit`.
pub fn chase_standard(i: &Instance, deps: &[Dependency], step_limit: u64) -> Result<ChaseResult> {
    for d in deps {
        if !d.compatible(i.schema()) {
            return Err(Error::Incompatible(d.to_string()));
        }
    }
    let mut nulls = NullSource::past(i.active_domain().into_iter());
    let mut current = i.clone();
    let mut steps = Vec::new();
    let mut fired: u64 = 0;
    loop {
        let trigger = first_active_trigger(&current, deps);
        let (dep, tau) = match trigger {
            Some(t) => t,
            None => {
                return Ok(ChaseResult {
                    instance: current,
                    steps,
                    status: ChaseStatus::Success,
                })
            }
        };
        if fired >= step_limit {
            return Ok(ChaseResult {
                instance: current,
                steps,
                status: ChaseStatus::StepLimitExceeded,
            });
        }
        fired += 1;
        steps.push(Step {
            dependency: dep,
            assignment: assignment_key(&tau),
        });
        match &deps[dep] {
            Dependency::Tgd(t) => fire_tgd_with_nulls(&mut current, t, &tau, &mut nulls)?,
            Dependency::Egd(e) => {
                let a = tau[&e.lhs].clone();
                let b = tau[&e.rhs].clone();
                match unify(&mut current, &a, &b) {
                    Ok(()) => {}
                    Err(()) => {
                        return Ok(ChaseResult {
                            instance: current,
                            steps,
                            status: ChaseStatus::EgdFailure { dependency: dep },
                        })
                    }
                }
            }
        }
    }
}

/// The least active trigger in [`fire_order`], if any. Restricted semantics:
/// a tgd trigger is active only when its conclusion cannot be satisfied, an
/// egd trigger only when it equates two distinct values.
fn first_active_trigger(i: &Instance, deps: &[Dependency]) -> Option<(usize, Assignment)> {
    for (dep, d) in deps.iter().enumerate() {
        let premise_atoms = match d {
            Dependency::Tgd(t) => t.premise.atoms(),
            Dependency::Egd(e) => e.premise.atoms(),
        };
        let mut assignments = satisfying_assignments(premise_atoms, i, &Assignment::new());
        assignments.sort_by_key(assignment_key);
        assignments.dedup();
        for tau in assignments {
            let active = match d {
                Dependency::Tgd(t) => {
                    let seed: Assignment = t
                        .conclusion
                        .free_vars()
                        .iter()
                        .map(|v| (v.clone(), tau[v].clone()))
                        .collect();
                    !satisfiable(t.conclusion.atoms(), i, &seed)
                }
                Dependency::Egd(e) => tau[&e.lhs] != tau[&e.rhs],
            };
            if active {
                return Some((dep, tau));
            }
        }
    }
    None
}

/// The deterministic total order over active triggers: dependency index
/// first, then lexicographic assignment order. Exposed for inspection and
/// order-permutation tests; the chase engines fire in exactly this order.
pub fn fire_order(deps: &[Dependency], i: &Instance) -> Vec<(usize, Vec<(Var, Value)>)> {
    let mut out = Vec::new();
    for (dep, d) in deps.iter().enumerate() {
        let premise_atoms = match d {
            Dependency::Tgd(t) => t.premise.atoms(),
            Dependency::Egd(e) => e.premise.atoms(),
        };
        let mut assignments = satisfying_assignments(premise_atoms, i, &Assignment::new());
        assignments.sort_by_key(assignment_key);
        assignments.dedup();
        for tau in assignments {
            out.push((dep, assignment_key(&tau)));
        }
    }
    out.sort();
    out
}

fn fire_tgd_with_nulls(
    i: &mut Instance,
    t: &Tgd,
    tau: &Assignment,
    nulls: &mut NullSource,
) -> Result<()> {
    let mut local = tau.clone();
    for z in t.conclusion.existential_vars() {
        local.insert(z.clone(), nulls.fresh());
    }
    for atom in t.conclusion.atoms() {
        let attrs = i
            .schema()
            .attrs(&atom.rel)
            .ok_or_else(|| Error::UnknownRelation(atom.rel.to_string()))?
            .to_vec();
        let mut tuple = ground_atom(atom, &local);
        // Attributes the atom does not mention are existential by the named
        // semantics: fill them with fresh nulls.
        for a in attrs {
            tuple.entry(a).or_insert_with(|| nulls.fresh());
        }
        i.insert(&atom.rel, tuple)?;
    }
    Ok(())
}

/// Replaces `b` with `a` (or `a` with `b`) throughout the instance. Fails iff
/// both are distinct constants. Nulls collapse onto constants; between two
/// nulls the higher-numbered one is rewritten.
fn unify(i: &mut Instance, a: &Value, b: &Value) -> core::result::Result<(), ()> {
    let (keep, drop) = match (a, b) {
        (Value::Atom(_), Value::Atom(_)) => return Err(()),
        (Value::Atom(_), Value::Null(_)) => (a.clone(), b.clone()),
        (Value::Null(_), Value::Atom(_)) => (b.clone(), a.clone()),
        (Value::Null(x), Value::Null(y)) => {
            if x <= y {
                (a.clone(), b.clone())
            } else {
                (b.clone(), a.clone())
            }
        }
    };
    let mut replacement = Instance::empty(i.schema().clone());
    for (rel, tuples) in i.relations() {
        for t in tuples {
            let rewritten: Tuple = t
                .iter()
                .map(|(attr, v)| {
                    (
                        attr.clone(),
                        if v == &drop { keep.clone() } else { v.clone() },
                    )
                })
                .collect();
            replacement.insert(rel, rewritten).expect("same schema");
        }
    }
    *i = replacement;
    Ok(())
}

/// Replays a recorded step sequence against the original input, reproducing
/// the chase output (including null names, which are reallocated in the same
/// deterministic order).
pub fn replay(i: &Instance, deps: &[Dependency], steps: &[Step]) -> Result<Instance> {
    let mut nulls = NullSource::past(i.active_domain().into_iter());
    let mut current = i.clone();
    for step in steps {
        let tau: Assignment = step.assignment.iter().cloned().collect();
        match &deps[step.dependency] {
            Dependency::Tgd(t) => fire_tgd_with_nulls(&mut current, t, &tau, &mut nulls)?,
            Dependency::Egd(e) => {
                let a = tau[&e.lhs].clone();
                let b = tau[&e.rhs].clone();
                unify(&mut current, &a, &b)
                    .map_err(|_| Error::Internal("replayed egd step failed".into()))?;
            }
        }
    }
    Ok(current)
}

/// Checks `i ⊨ tgds` for a full set, used as a post-hoc sanity check in tests.
pub fn satisfies_all_tgds(i: &Instance, tgds: &[Tgd]) -> bool {
    tgds.iter()
        .all(|t| crate::lang::satisfies_dependency(i, &Dependency::Tgd(t.clone())))
}

/// All value combinations for a variable list, in deterministic order.
/// Shared by the frozen-body enumerations in `entail` and the oracles.
pub fn assignments_over(
    vars: &[Var],
    pool: &BTreeSet<Value>,
) -> impl Iterator<Item = Assignment> + Clone {
    let vars: Vec<Var> = vars.to_vec();
    let pool: Vec<Value> = pool.iter().cloned().collect();
    let total = pool
        .len()
        .checked_pow(vars.len() as u32)
        .unwrap_or(usize::MAX);
    (0..total).map(move |mut idx| {
        let mut a = Assignment::new();
        for v in &vars {
            a.insert(v.clone(), pool[idx % pool.len().max(1)].clone());
            idx /= pool.len().max(1);
        }
        a
    })
}
