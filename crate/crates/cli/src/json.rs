//! JSON output for the reasoning artifacts. Every document carries
//! `"format": "chasemith/1"`; map keys follow the canonical orders of the
//! underlying structures, so output is byte-stable.

use serde_json::{json, Map, Value as Json};

use chasemith_core::chase::{ChaseResult, ChaseStatus, Step};
use chasemith_core::condtab::{CondInstance, CondLiteral, ElementCondition};
use chasemith_core::model::{Instance, Schema, Value};
use chasemith_core::skb::ScopedKnowledgeBase;

pub const FORMAT: &str = "chasemith/1";

/// Atoms render as their canonical text; nulls as `_:nK`.
pub fn value_json(v: &Value) -> Json {
    match v {
        Value::Atom(s) => Json::String(s.to_string()),
        Value::Null(k) => Json::String(format!("_:n{k}")),
    }
}

pub fn schema_json(s: &Schema) -> Json {
    let mut map = Map::new();
    for (rel, attrs) in s.relations() {
        map.insert(
            rel.to_string(),
            Json::Array(attrs.iter().map(|a| Json::String(a.to_string())).collect()),
        );
    }
    Json::Object(map)
}

/// Rows as value arrays in attribute order, relations and rows sorted.
pub fn instance_json(i: &Instance) -> Json {
    let mut map = Map::new();
    for (rel, tuples) in i.relations() {
        let attrs = i.schema().attrs(rel).expect("schema relation");
        let rows: Vec<Json> = tuples
            .iter()
            .map(|t| Json::Array(attrs.iter().map(|a| value_json(&t[a])).collect()))
            .collect();
        map.insert(rel.to_string(), Json::Array(rows));
    }
    Json::Object(map)
}

pub fn instance_document(i: &Instance) -> Json {
    json!({
        "format": FORMAT,
        "kind": "instance",
        "schema": schema_json(i.schema()),
        "relations": instance_json(i),
    })
}

pub fn skb_json(k: &ScopedKnowledgeBase) -> Json {
    json!({
        "format": FORMAT,
        "kind": "skb",
        "schema": schema_json(k.base().schema()),
        "base": instance_json(k.base()),
        "gamma": k.gamma().iter().map(|t| Json::String(t.to_string())).collect::<Vec<_>>(),
        "scope": k.scope().iter().map(|r| Json::String(r.to_string())).collect::<Vec<_>>(),
    })
}

fn condition_json(c: &ElementCondition) -> Json {
    let clauses: Vec<Json> = c
        .clauses()
        .map(|clause| {
            Json::Array(
                clause
                    .iter()
                    .map(|lit| match lit {
                        CondLiteral::Eq(a, b) => {
                            json!(["eq", value_json(a), value_json(b)])
                        }
                        CondLiteral::Neq(a, b) => {
                            json!(["neq", value_json(a), value_json(b)])
                        }
                    })
                    .collect(),
            )
        })
        .collect();
    Json::Array(clauses)
}

pub fn cond_instance_json(t: &CondInstance) -> Json {
    let mut map = Map::new();
    for (rel, rows) in t.relations() {
        let attrs = t.schema().attrs(rel).expect("schema relation");
        let rendered: Vec<Json> = rows
            .iter()
            .map(|(tuple, cond)| {
                json!({
                    "tuple": attrs.iter().map(|a| value_json(&tuple[a])).collect::<Vec<_>>(),
                    "condition": condition_json(cond),
                })
            })
            .collect();
        map.insert(rel.to_string(), Json::Array(rendered));
    }
    json!({
        "format": FORMAT,
        "kind": "conditional-instance",
        "schema": schema_json(t.schema()),
        "relations": Json::Object(map),
    })
}

fn step_json(step: &Step) -> Json {
    json!({
        "dependency": step.dependency,
        "assignment": step
            .assignment
            .iter()
            .map(|(v, x)| json!([v.to_string(), value_json(x)]))
            .collect::<Vec<_>>(),
    })
}

pub fn steps_json(steps: &[Step]) -> Json {
    Json::Array(steps.iter().map(step_json).collect())
}

pub fn chase_result_json(r: &ChaseResult) -> Json {
    let status = match &r.status {
        ChaseStatus::Success => json!("success"),
        ChaseStatus::EgdFailure { dependency } => json!({"egd-failure": dependency}),
        ChaseStatus::StepLimitExceeded => json!("step-limit-exceeded"),
    };
    json!({
        "format": FORMAT,
        "kind": "chase-trace",
        "status": status,
        "steps": steps_json(&r.steps),
        "instance": instance_json(&r.instance),
    })
}

/// Stable textual rendering: serde_json preserves object insertion order,
/// and every object here is built in canonical order.
pub fn to_string(v: &Json) -> String {
    serde_json::to_string_pretty(v).expect("tree built in memory")
}
