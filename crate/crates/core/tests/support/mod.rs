//! Shared helpers for the property suites: a deterministic RNG, generators
//! for small instances, dependency sets and procedures, and bounded
//! enumeration of represented instances.

#![allow(dead_code)]

use std::collections::BTreeSet;

use chasemith_core::lang::{NamedAtom, StructureConstraint, Term, Tgd, TotalQuery, Var};
use chasemith_core::model::{tuple, AttrName, Instance, RelName, Schema, Value};
use chasemith_core::procedures::{Condition, PreserveQuery, Procedure};
use chasemith_core::skb::{rep_contains, ScopedKnowledgeBase};

/// xorshift64*, deterministic across platforms.
pub struct Rng(u64);

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng(seed.wrapping_mul(2685821657736338717).max(1))
    }

    pub fn next(&mut self) -> u64 {
        let mut x = self.0;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.0 = x;
        x.wrapping_mul(2685821657736338717)
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.next() % n.max(1) as u64) as usize
    }

    pub fn pick<'a, T>(&mut self, items: &'a [T]) -> &'a T {
        &items[self.below(items.len())]
    }

    pub fn chance(&mut self, num: u64, den: u64) -> bool {
        self.next() % den < num
    }
}

pub fn attr(s: &str) -> AttrName {
    AttrName::new(s)
}

pub fn rel(s: &str) -> RelName {
    RelName::new(s)
}

pub fn var(s: &str) -> Var {
    Var::new(s)
}

/// A schema of unary relations, the workhorse of the bounded suites.
pub fn unary_schema(rels: &[&str]) -> Schema {
    let mut s = Schema::new();
    for r in rels {
        s.add_relation(rel(r), [attr("a")]).unwrap();
    }
    s
}

pub fn unary_fact(i: &mut Instance, r: &str, v: &Value) {
    i.insert(&rel(r), tuple([(attr("a"), v.clone())])).unwrap();
}

pub fn unary_tgd(from: &str, to: &str) -> Tgd {
    Tgd::new(
        [NamedAtom::new(rel(from), [(attr("a"), Term::var("x"))]).unwrap()],
        [NamedAtom::new(rel(to), [(attr("a"), Term::var("x"))]).unwrap()],
    )
    .unwrap()
}

/// A random ground instance over unary relations, at most `max_tuples`
/// tuples drawn from `values`.
pub fn random_instance(
    rng: &mut Rng,
    rels: &[&str],
    values: &[Value],
    max_tuples: usize,
) -> Instance {
    let mut i = Instance::empty(unary_schema(rels));
    let count = rng.below(max_tuples + 1);
    for _ in 0..count {
        let r = *rng.pick(rels);
        let v = rng.pick(values).clone();
        unary_fact(&mut i, r, &v);
    }
    i
}

/// A random full acyclic unary tgd set: premises draw from relations ranked
/// strictly below their conclusions in the given order, which keeps the
/// relation graph a DAG. Premises may have one or two atoms.
pub fn random_full_acyclic_tgds(rng: &mut Rng, rels: &[&str], count: usize) -> Vec<Tgd> {
    let mut out = Vec::new();
    for _ in 0..count {
        // Conclusion strictly above at least one premise relation.
        let to_idx = 1 + rng.below(rels.len() - 1);
        let from_idx = rng.below(to_idx);
        if rng.chance(1, 3) {
            let second = rng.below(to_idx);
            let shared = rng.chance(1, 2);
            let premise = vec![
                NamedAtom::new(rel(rels[from_idx]), [(attr("a"), Term::var("x"))]).unwrap(),
                NamedAtom::new(
                    rel(rels[second]),
                    [(
                        attr("a"),
                        if shared {
                            Term::var("x")
                        } else {
                            Term::var("y")
                        },
                    )],
                )
                .unwrap(),
            ];
            let conclusion =
                vec![NamedAtom::new(rel(rels[to_idx]), [(attr("a"), Term::var("x"))]).unwrap()];
            out.push(Tgd::new(premise, conclusion).unwrap());
        } else {
            out.push(unary_tgd(rels[from_idx], rels[to_idx]));
        }
    }
    out
}

/// Wraps a tgd set as a safe-scope procedure: wildcard scope and a total
/// preservation query for every conclusion relation.
pub fn safe_proc(name: &str, tgds: Vec<Tgd>) -> Procedure {
    let scoped: BTreeSet<RelName> = tgds.iter().flat_map(|t| t.conclusion_relations()).collect();
    Procedure {
        name: name.into(),
        scope: scoped
            .iter()
            .map(|r| StructureConstraint::wildcard(r.clone()))
            .collect(),
        pre: vec![],
        post: tgds.into_iter().map(Condition::Tgd).collect(),
        preserve: scoped
            .into_iter()
            .map(|r| PreserveQuery::Total(TotalQuery { rel: r }))
            .collect(),
    }
}

/// A random safe-scope full-tgd procedure over the unary relation list.
pub fn random_safe_proc(rng: &mut Rng, name: &str, rels: &[&str], max_tgds: usize) -> Procedure {
    let count = 1 + rng.below(max_tgds);
    safe_proc(name, random_full_acyclic_tgds(rng, rels, count))
}

/// All instances formed by adding at most `max_added` tuples from the value
/// pool to `i`, including `i` itself. Unary relations only.
pub fn addition_variants(i: &Instance, values: &[Value], max_added: usize) -> Vec<Instance> {
    let mut pool: Vec<(RelName, Value)> = Vec::new();
    for (r, _) in i.schema().relations() {
        for v in values {
            let t = tuple([(attr("a"), v.clone())]);
            if !i.tuples(r).map(|ts| ts.contains(&t)).unwrap_or(false) {
                pool.push((r.clone(), v.clone()));
            }
        }
    }
    let mut out = vec![i.clone()];
    let n = pool.len();
    for size in 1..=max_added.min(n) {
        let mut indices: Vec<usize> = (0..size).collect();
        loop {
            let mut j = i.clone();
            for &idx in &indices {
                let (r, v) = &pool[idx];
                j.insert(r, tuple([(attr("a"), v.clone())])).unwrap();
            }
            out.push(j);
            let mut advanced = false;
            let mut pos = size;
            while pos > 0 {
                pos -= 1;
                if indices[pos] < n - size + pos {
                    indices[pos] += 1;
                    for k in pos + 1..size {
                        indices[k] = indices[k - 1] + 1;
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
    out
}

/// The represented instances of an SKB among bounded addition variants of
/// its base.
pub fn bounded_rep_members(
    k: &ScopedKnowledgeBase,
    values: &[Value],
    max_added: usize,
) -> Vec<Instance> {
    addition_variants(k.base(), values, max_added)
        .into_iter()
        .filter(|j| rep_contains(k, j).unwrap())
        .collect()
}

pub fn int_values(range: core::ops::Range<i128>) -> Vec<Value> {
    range.map(Value::int).collect()
}
