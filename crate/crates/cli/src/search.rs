//! The readiness search driver used by the command line: breadth-first over
//! sequences, layer-synchronized so the per-node work (goal checks, node
//! expansion) can run on worker threads while answers and statistics stay
//! byte-identical whatever the thread count.
//!
//! Node checking and expansion are pure functions over immutable values;
//! workers receive contiguous chunks of a layer and results are stitched
//! back in layer order. Deduplication happens sequentially, in the same
//! order a single-threaded run would encounter the nodes, so the explored
//! graph never depends on scheduling.

use std::collections::BTreeSet;

use chasemith_core::condtab::{
    certain_boolean_condtab, certain_boolean_dyn_with, certain_boolean_skb, CondInstance,
};
use chasemith_core::entail::{
    skb_satisfies_egd_with, skb_satisfies_tgd_general_with, skb_satisfies_tgd_safe_with,
};
use chasemith_core::lang::{satisfiable, Assignment, Cq, Dependency};
use chasemith_core::model::Instance;
use chasemith_core::procedures::{classify, require_safe_scope_full, Procedure};
use chasemith_core::readiness::{ReadinessAnswer, ReadinessOutcome, SearchStats};
use chasemith_core::skb::{apply_procedure_with, outcomes_skb_with, ScopedKnowledgeBase};
use chasemith_core::{Budget, Error, Result};

/// Runs `f` over `items` on up to `threads` workers, preserving item order
/// in the result.
pub fn par_map<T, R, F>(threads: usize, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    let threads = threads.max(1).min(items.len().max(1));
    if threads <= 1 || items.len() <= 1 {
        return items.iter().map(&f).collect();
    }
    let chunk = items.len().div_ceil(threads);
    let mut out: Vec<Option<R>> = Vec::new();
    out.resize_with(items.len(), || None);
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for (index, slice) in items.chunks(chunk).enumerate() {
            let f = &f;
            handles.push((
                index * chunk,
                scope.spawn(move || slice.iter().map(f).collect::<Vec<R>>()),
            ));
        }
        for (offset, handle) in handles {
            for (k, r) in handle
                .join()
                .expect("worker panicked")
                .into_iter()
                .enumerate()
            {
                out[offset + k] = Some(r);
            }
        }
    });
    out.into_iter().map(|r| r.expect("filled")).collect()
}

/// A search space: how to start, check, expand and re-verify.
trait SearchSpace: Sync {
    type Node: Clone + Send + Sync;
    fn root(&self) -> Result<Self::Node>;
    fn key(&self, node: &Self::Node) -> String;
    fn goal_holds(&self, node: &Self::Node) -> Result<bool>;
    /// Children in catalog order; pruned candidates are omitted.
    fn expand(&self, node: &Self::Node) -> Result<Vec<(String, Self::Node)>>;
    /// Independent recomputation of the witness check.
    fn verify(&self, path: &[String]) -> Result<bool>;
}

fn drive<S: SearchSpace>(space: &S, max_len: u32, threads: usize) -> Result<ReadinessAnswer> {
    let mut stats = SearchStats::default();
    let root = space.root()?;
    let mut seen: BTreeSet<String> = BTreeSet::new();
    seen.insert(space.key(&root));
    let mut layer: Vec<(Vec<String>, S::Node)> = vec![(Vec::new(), root)];

    for depth in 0..=max_len {
        // Check the whole layer; take the first witness in layer order.
        let checks = par_map(threads, &layer, |(_, node)| space.goal_holds(node));
        stats.nodes_checked += layer.len() as u64;
        for ((path, _), verdict) in layer.iter().zip(checks) {
            if verdict? {
                if !space.verify(path)? {
                    return Err(Error::Internal(
                        "witness failed independent re-verification".into(),
                    ));
                }
                return Ok(ReadinessAnswer {
                    outcome: ReadinessOutcome::Witness(path.clone()),
                    stats,
                });
            }
        }
        if depth == max_len {
            break;
        }
        let expansions = par_map(threads, &layer, |(_, node)| space.expand(node));
        let mut next: Vec<(Vec<String>, S::Node)> = Vec::new();
        for ((path, _), children) in layer.iter().zip(expansions) {
            for (name, child) in children? {
                if seen.insert(space.key(&child)) {
                    let mut next_path = path.clone();
                    next_path.push(name);
                    next.push((next_path, child));
                } else {
                    stats.dedup_hits += 1;
                }
            }
        }
        if next.is_empty() {
            break;
        }
        layer = next;
    }
    Ok(ReadinessAnswer {
        outcome: ReadinessOutcome::NoWithinBound(max_len),
        stats,
    })
}

struct ConstraintSpace<'a> {
    input: &'a Instance,
    catalog: &'a [Procedure],
    goal: &'a Dependency,
    budget: &'a Budget,
}

impl SearchSpace for ConstraintSpace<'_> {
    type Node = ScopedKnowledgeBase;

    fn root(&self) -> Result<Self::Node> {
        Ok(ScopedKnowledgeBase::ground(self.input.clone()))
    }

    fn key(&self, node: &Self::Node) -> String {
        node.canonical_key()
    }

    fn goal_holds(&self, node: &Self::Node) -> Result<bool> {
        Ok(match self.goal {
            Dependency::Tgd(t) => skb_satisfies_tgd_safe_with(node, t, self.budget)?.holds(),
            Dependency::Egd(e) => skb_satisfies_egd_with(node, e, self.budget)?.holds(),
        })
    }

    fn expand(&self, node: &Self::Node) -> Result<Vec<(String, Self::Node)>> {
        self.catalog
            .iter()
            .map(|p| Ok((p.name.clone(), apply_procedure_with(node, p, self.budget)?)))
            .collect()
    }

    fn verify(&self, path: &[String]) -> Result<bool> {
        let ps = procedures_for(self.catalog, path);
        let fresh = outcomes_skb_with(self.input, &ps, self.budget)?;
        Ok(match self.goal {
            Dependency::Tgd(t) => skb_satisfies_tgd_general_with(&fresh, t, self.budget)?.holds(),
            Dependency::Egd(e) => skb_satisfies_egd_with(&fresh, e, self.budget)?.holds(),
        })
    }
}

struct QuerySpace<'a> {
    input: &'a Instance,
    catalog: &'a [Procedure],
    goal: &'a Cq,
    budget: &'a Budget,
}

impl SearchSpace for QuerySpace<'_> {
    type Node = Instance;

    fn root(&self) -> Result<Self::Node> {
        Ok(self.input.clone())
    }

    fn key(&self, node: &Self::Node) -> String {
        format!("{node:?}")
    }

    fn goal_holds(&self, node: &Self::Node) -> Result<bool> {
        Ok(self.goal.compatible(node.schema())
            && satisfiable(self.goal.atoms(), node, &Assignment::new()))
    }

    fn expand(&self, node: &Self::Node) -> Result<Vec<(String, Self::Node)>> {
        self.catalog
            .iter()
            .map(|p| {
                let (child, _) =
                    chasemith_core::chase::chase_full_traced(node, &p.post_tgds(), self.budget)?;
                Ok((p.name.clone(), child))
            })
            .collect()
    }

    fn verify(&self, path: &[String]) -> Result<bool> {
        let ps = procedures_for(self.catalog, path);
        let fresh = outcomes_skb_with(self.input, &ps, self.budget)?;
        certain_boolean_skb(&fresh, self.goal)
    }
}

struct DynQuerySpace<'a> {
    input: &'a Instance,
    catalog: &'a [Procedure],
    goal: &'a Cq,
    budget: &'a Budget,
}

impl SearchSpace for DynQuerySpace<'_> {
    type Node = CondInstance;

    fn root(&self) -> Result<Self::Node> {
        Ok(CondInstance::from_instance(self.input))
    }

    fn key(&self, node: &Self::Node) -> String {
        node.canonical_key()
    }

    fn goal_holds(&self, node: &Self::Node) -> Result<bool> {
        certain_boolean_condtab(node, self.goal)
    }

    fn expand(&self, node: &Self::Node) -> Result<Vec<(String, Self::Node)>> {
        let mut out = Vec::new();
        for p in self.catalog {
            // Steps with empty outcome sets ready nothing and prune here.
            if let Some(child) = chasemith_core::condtab::apply_step(node, p, self.budget)? {
                out.push((p.name.clone(), child));
            }
        }
        Ok(out)
    }

    fn verify(&self, path: &[String]) -> Result<bool> {
        let ps = procedures_for(self.catalog, path);
        certain_boolean_dyn_with(self.input, &ps, self.goal, self.budget)
    }
}

fn procedures_for(catalog: &[Procedure], path: &[String]) -> Vec<Procedure> {
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

/// Constraint readiness with layer-parallel node work.
pub fn constraint_ready_par(
    i: &Instance,
    catalog: &[Procedure],
    goal: &Dependency,
    max_len: u32,
    threads: usize,
    budget: &Budget,
) -> Result<ReadinessAnswer> {
    for p in catalog {
        if let Err(e) = require_safe_scope_full(p) {
            return Ok(ReadinessAnswer {
                outcome: ReadinessOutcome::Unsupported(e.to_string()),
                stats: SearchStats::default(),
            });
        }
    }
    if let Dependency::Egd(e) = goal {
        if e.compatible(i.schema())
            && !chasemith_core::lang::satisfies_dependency(i, &Dependency::Egd(e.clone()))
        {
            return Ok(ReadinessAnswer {
                outcome: ReadinessOutcome::Unsupported(
                    "the input instance already violates the egd goal, and safe-scope \
                     procedures never remove the violating rows"
                        .into(),
                ),
                stats: SearchStats::default(),
            });
        }
    }
    drive(
        &ConstraintSpace {
            input: i,
            catalog,
            goal,
            budget,
        },
        max_len,
        threads,
    )
}

/// Query readiness with layer-parallel node work.
pub fn query_ready_par(
    i: &Instance,
    catalog: &[Procedure],
    goal: &Cq,
    max_len: u32,
    threads: usize,
    budget: &Budget,
) -> Result<ReadinessAnswer> {
    for p in catalog {
        if let Err(e) = require_safe_scope_full(p) {
            return Ok(ReadinessAnswer {
                outcome: ReadinessOutcome::Unsupported(e.to_string()),
                stats: SearchStats::default(),
            });
        }
    }
    if !goal.is_boolean() {
        return Ok(ReadinessAnswer {
            outcome: ReadinessOutcome::Unsupported(
                "query readiness is decided for boolean goals".into(),
            ),
            stats: SearchStats::default(),
        });
    }
    drive(
        &QuerySpace {
            input: i,
            catalog,
            goal,
            budget,
        },
        max_len,
        threads,
    )
}

/// Dynamic query readiness with layer-parallel node work.
pub fn query_ready_dyn_par(
    i: &Instance,
    catalog: &[Procedure],
    goal: &Cq,
    max_len: u32,
    threads: usize,
    budget: &Budget,
) -> Result<ReadinessAnswer> {
    for p in catalog {
        let class = classify(p);
        if class.safe_scope {
            if let Err(e) = require_safe_scope_full(p) {
                return Ok(ReadinessAnswer {
                    outcome: ReadinessOutcome::Unsupported(e.to_string()),
                    stats: SearchStats::default(),
                });
            }
        } else if !class.safe_alteration {
            return Ok(ReadinessAnswer {
                outcome: ReadinessOutcome::Unsupported(format!(
                    "procedure {} is neither safe-scope nor a safe schema-alteration",
                    p.name
                )),
                stats: SearchStats::default(),
            });
        }
    }
    if !goal.is_boolean() {
        return Ok(ReadinessAnswer {
            outcome: ReadinessOutcome::Unsupported(
                "query readiness is decided for boolean goals".into(),
            ),
            stats: SearchStats::default(),
        });
    }
    drive(
        &DynQuerySpace {
            input: i,
            catalog,
            goal,
            budget,
        },
        max_len,
        threads,
    )
}
