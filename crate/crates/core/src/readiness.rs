//! Workflow synthesis: is there a sequence of catalog procedures whose every
//! outcome satisfies a goal constraint or boolean query?
//!
//! The search is breadth-first over sequences up to a caller-chosen length
//! bound, with nodes deduplicated on canonical keys; breadth-first order
//! makes every witness length-minimal, and catalog declaration order breaks
//! ties. An exhausted search proves nothing beyond the bound: the
//! theoretical sequence bounds are astronomically larger, and the answer
//! says so explicitly.

use alloc::collections::{BTreeSet, VecDeque};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::chase::chase_full_traced;
use crate::condtab::{certain_boolean_condtab, CondInstance};
use crate::error::{Error, Result};
use crate::lang::{satisfiable, Assignment, Cq, Dependency};
use crate::model::Instance;
use crate::procedures::{classify, require_safe_scope_full, Procedure};
use crate::skb::{apply_procedure_with, ScopedKnowledgeBase};
use crate::Budget;

/// What the data must be readied for.
#[derive(Debug, Clone)]
pub enum ReadinessGoal {
    Constraint(Dependency),
    Query(Cq),
}

/// The search verdict.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReadinessOutcome {
    /// A length-minimal sequence of catalog procedure names whose every
    /// outcome satisfies the goal. Verified again before being returned.
    Witness(Vec<String>),
    /// No sequence up to the bound works; says nothing beyond the bound.
    NoWithinBound(u32),
    /// The catalog or goal falls outside the decidable fragment.
    Unsupported(String),
}

/// Search statistics.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub nodes_checked: u64,
    pub dedup_hits: u64,
}

#[derive(Debug, Clone)]
pub struct ReadinessAnswer {
    pub outcome: ReadinessOutcome,
    pub stats: SearchStats,
}

fn catalog_safe_scope_full(catalog: &[Procedure]) -> core::result::Result<(), String> {
    for p in catalog {
        if let Err(e) = require_safe_scope_full(p) {
            return Err(e.to_string());
        }
    }
    Ok(())
}

/// Readiness for a constraint goal over a safe-scope full-tgd catalog.
/// Nodes are scoped knowledge bases; a node is a witness when the goal
/// holds on everything it represents. An egd goal that already fails on the
/// input is hopeless: procedures of this class only ever add data, so the
/// violation survives every sequence.
pub fn constraint_ready(
    i: &Instance,
    catalog: &[Procedure],
    goal: &Dependency,
    max_len: u32,
) -> Result<ReadinessAnswer> {
    constraint_ready_with(i, catalog, goal, max_len, &Budget::default())
}

pub fn constraint_ready_with(
    i: &Instance,
    catalog: &[Procedure],
    goal: &Dependency,
    max_len: u32,
    budget: &Budget,
) -> Result<ReadinessAnswer> {
    let mut stats = SearchStats::default();
    if let Err(reason) = catalog_safe_scope_full(catalog) {
        return Ok(ReadinessAnswer {
            outcome: ReadinessOutcome::Unsupported(reason),
            stats,
        });
    }
    if let Dependency::Egd(e) = goal {
        if e.compatible(i.schema())
            && !crate::lang::satisfies_dependency(i, &Dependency::Egd(e.clone()))
        {
            return Ok(ReadinessAnswer {
                outcome: ReadinessOutcome::Unsupported(
                    "the input instance already violates the egd goal, and safe-scope \
                     procedures never remove the violating rows"
                        .into(),
                ),
                stats,
            });
        }
    }

    let check = |k: &ScopedKnowledgeBase| -> Result<bool> {
        Ok(match goal {
            Dependency::Tgd(t) => crate::entail::skb_satisfies_tgd_safe_with(k, t, budget)?.holds(),
            Dependency::Egd(e) => crate::entail::skb_satisfies_egd_with(k, e, budget)?.holds(),
        })
    };

    let root = ScopedKnowledgeBase::ground(i.clone());
    let mut queue: VecDeque<(Vec<String>, ScopedKnowledgeBase)> = VecDeque::new();
    let mut seen: BTreeSet<String> = BTreeSet::new();
    seen.insert(root.canonical_key());
    queue.push_back((Vec::new(), root));

    while let Some((path, node)) = queue.pop_front() {
        stats.nodes_checked += 1;
        if check(&node)? {
            // Independent re-verification: recompute the representation from
            // scratch and decide the goal through the general path.
            let replayed = witness_procedures(catalog, &path);
            let fresh = crate::skb::outcomes_skb_with(i, &replayed, budget)?;
            let verified = match goal {
                Dependency::Tgd(t) => {
                    crate::entail::skb_satisfies_tgd_general_with(&fresh, t, budget)?.holds()
                }
                Dependency::Egd(e) => {
                    crate::entail::skb_satisfies_egd_with(&fresh, e, budget)?.holds()
                }
            };
            if !verified {
                return Err(Error::Internal(
                    "witness failed independent re-verification".into(),
                ));
            }
            return Ok(ReadinessAnswer {
                outcome: ReadinessOutcome::Witness(path),
                stats,
            });
        }
        if path.len() as u32 >= max_len {
            continue;
        }
        for p in catalog {
            let child = apply_procedure_with(&node, p, budget)?;
            let key = child.canonical_key();
            if seen.insert(key) {
                let mut next = path.clone();
                next.push(p.name.clone());
                queue.push_back((next, child));
            } else {
                stats.dedup_hits += 1;
            }
        }
    }
    Ok(ReadinessAnswer {
        outcome: ReadinessOutcome::NoWithinBound(max_len),
        stats,
    })
}

/// Readiness for a boolean query goal over a safe-scope full-tgd catalog.
/// For this class the certain answer depends only on the node's minimal
/// instance, and the minimal instance of a successor is the chase of the
/// current one, so nodes fold and deduplicate directly on minimal instances.
pub fn query_ready(
    i: &Instance,
    catalog: &[Procedure],
    goal: &Cq,
    max_len: u32,
) -> Result<ReadinessAnswer> {
    query_ready_with(i, catalog, goal, max_len, &Budget::default())
}

pub fn query_ready_with(
    i: &Instance,
    catalog: &[Procedure],
    goal: &Cq,
    max_len: u32,
    budget: &Budget,
) -> Result<ReadinessAnswer> {
    let mut stats = SearchStats::default();
    if let Err(reason) = catalog_safe_scope_full(catalog) {
        return Ok(ReadinessAnswer {
            outcome: ReadinessOutcome::Unsupported(reason),
            stats,
        });
    }
    if !goal.is_boolean() {
        return Ok(ReadinessAnswer {
            outcome: ReadinessOutcome::Unsupported(
                "query readiness is decided for boolean goals".into(),
            ),
            stats,
        });
    }

    let holds_on = |j: &Instance| -> bool {
        goal.compatible(j.schema()) && satisfiable(goal.atoms(), j, &Assignment::new())
    };

    let mut queue: VecDeque<(Vec<String>, Instance)> = VecDeque::new();
    let mut seen: BTreeSet<Instance> = BTreeSet::new();
    seen.insert(i.clone());
    queue.push_back((Vec::new(), i.clone()));

    while let Some((path, node)) = queue.pop_front() {
        stats.nodes_checked += 1;
        if holds_on(&node) {
            // Independent re-verification through the full representation.
            let replayed = witness_procedures(catalog, &path);
            let fresh = crate::skb::outcomes_skb_with(i, &replayed, budget)?;
            if !crate::condtab::certain_boolean_skb(&fresh, goal)? {
                return Err(Error::Internal(
                    "witness failed independent re-verification".into(),
                ));
            }
            return Ok(ReadinessAnswer {
                outcome: ReadinessOutcome::Witness(path),
                stats,
            });
        }
        if path.len() as u32 >= max_len {
            continue;
        }
        for p in catalog {
            let tgds = p.post_tgds();
            let (child, _) = chase_full_traced(&node, &tgds, budget)?;
            if seen.insert(child.clone()) {
                let mut next = path.clone();
                next.push(p.name.clone());
                queue.push_back((next, child));
            } else {
                stats.dedup_hits += 1;
            }
        }
    }
    Ok(ReadinessAnswer {
        outcome: ReadinessOutcome::NoWithinBound(max_len),
        stats,
    })
}

/// Readiness for a boolean query goal under the dynamic semantics, over a
/// catalog mixing safe-scope (full-tgd) and safe schema-alteration
/// procedures. Nodes are positive conditional instances, deduplicated up to
/// null renaming; sequences whose outcome set is empty are pruned, since a
/// workflow that cannot run readies nothing.
pub fn query_ready_dyn(
    i: &Instance,
    catalog: &[Procedure],
    goal: &Cq,
    max_len: u32,
) -> Result<ReadinessAnswer> {
    query_ready_dyn_with(i, catalog, goal, max_len, &Budget::default())
}

pub fn query_ready_dyn_with(
    i: &Instance,
    catalog: &[Procedure],
    goal: &Cq,
    max_len: u32,
    budget: &Budget,
) -> Result<ReadinessAnswer> {
    let mut stats = SearchStats::default();
    for p in catalog {
        let class = classify(p);
        if class.safe_scope {
            if let Err(e) = require_safe_scope_full(p) {
                return Ok(ReadinessAnswer {
                    outcome: ReadinessOutcome::Unsupported(e.to_string()),
                    stats,
                });
            }
        } else if !class.safe_alteration {
            return Ok(ReadinessAnswer {
                outcome: ReadinessOutcome::Unsupported(alloc::format!(
                    "procedure {} is neither safe-scope nor a safe schema-alteration",
                    p.name
                )),
                stats,
            });
        }
    }
    if !goal.is_boolean() {
        return Ok(ReadinessAnswer {
            outcome: ReadinessOutcome::Unsupported(
                "query readiness is decided for boolean goals".into(),
            ),
            stats,
        });
    }

    let root = CondInstance::from_instance(i);
    let mut queue: VecDeque<(Vec<String>, CondInstance)> = VecDeque::new();
    let mut seen: BTreeSet<String> = BTreeSet::new();
    seen.insert(root.canonical_key());
    queue.push_back((Vec::new(), root));

    while let Some((path, node)) = queue.pop_front() {
        stats.nodes_checked += 1;
        if certain_boolean_condtab(&node, goal)? {
            // Independent re-verification: fold the sequence afresh.
            let replayed = witness_procedures(catalog, &path);
            let verified = crate::condtab::certain_boolean_dyn_with(i, &replayed, goal, budget)?;
            if !verified {
                return Err(Error::Internal(
                    "witness failed independent re-verification".into(),
                ));
            }
            return Ok(ReadinessAnswer {
                outcome: ReadinessOutcome::Witness(path),
                stats,
            });
        }
        if path.len() as u32 >= max_len {
            continue;
        }
        for p in catalog {
            // A sequence whose outcome set is empty readies nothing; the
            // failed step prunes the branch.
            let child = match crate::condtab::apply_step(&node, p, budget)? {
                Some(c) => c,
                None => continue,
            };
            let key = child.canonical_key();
            if seen.insert(key) {
                let mut next = path.clone();
                next.push(p.name.clone());
                queue.push_back((next, child));
            } else {
                stats.dedup_hits += 1;
            }
        }
    }
    Ok(ReadinessAnswer {
        outcome: ReadinessOutcome::NoWithinBound(max_len),
        stats,
    })
}

fn witness_procedures(catalog: &[Procedure], path: &[String]) -> Vec<Procedure> {
    path.iter()
        .map(|name| {
            catalog
                .iter()
                .find(|p| &p.name == name)
                .expect("witness names come from the catalog")
                .clone()
        })
        .collect()
}

/// The theoretical sequence-length bound behind constraint readiness:
/// `|D|^|S| * |catalog| * 2^((|D| + |goal|)^|S|)`, saturating. A search
/// bound below this cannot prove unreadiness; the `--prove-bound` mode uses
/// it to refuse over-claiming.
pub fn theoretical_sequence_bound(i: &Instance, catalog_len: usize, goal_size: usize) -> u128 {
    let domain = i.active_domain().len() as u128;
    let schema = i.schema().total_attrs().max(1) as u128;
    let pow = |base: u128, exp: u128| -> u128 {
        let mut out: u128 = 1;
        for _ in 0..exp.min(128) {
            out = out.saturating_mul(base);
        }
        out
    };
    let instances = pow(domain.max(1), schema);
    let gamma_sets = pow(
        2,
        pow(domain.saturating_add(goal_size as u128), schema).min(127),
    );
    instances
        .saturating_mul(catalog_len.max(1) as u128)
        .saturating_mul(gamma_sets)
}
