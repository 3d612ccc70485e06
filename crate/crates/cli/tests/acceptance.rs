//! Acceptance suite: one test per criterion, each printing a PASS line with
//! its runtime and asserting the stated bound. Golden cases pin exact
//! outputs; the randomized suites compare the symbolic algorithms against
//! the brute-force oracle over bounded universes.

use std::collections::BTreeSet;
use std::process::Command;
use std::time::{Duration, Instant};

use chasemith::dsl::{parse_spec, Goal};
use chasemith::json;
use chasemith_core::condtab::{cond_rep_contains, outcomes_condtab, CondOutcome};
use chasemith_core::dynschema::minimal_schema;
use chasemith_core::entail::{skb_satisfies_egd, skb_satisfies_tgd_general};
use chasemith_core::lang::{
    dedupe_tgds, Egd, NamedAtom, StructureConstraint, Term, Tgd, TotalQuery, Var,
};
use chasemith_core::model::{instance_extends, tuple, AttrName, Instance, RelName, Schema, Value};
use chasemith_core::oracle::{enumerate_outcomes_seq, UniverseBound};
use chasemith_core::procedures::{Condition, Mode, PinSemantics, PreserveQuery, Procedure};
use chasemith_core::skb::{minimal_instance, outcomes_skb, rep_contains, ScopedKnowledgeBase};

fn attr(s: &str) -> AttrName {
    AttrName::new(s)
}

fn rel(s: &str) -> RelName {
    RelName::new(s)
}

fn fixture(name: &str) -> String {
    let path = format!("{}/testdata/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(path).expect("fixture exists")
}

fn finish(criterion: &str, start: Instant, bound: Duration) {
    let elapsed = start.elapsed();
    println!("PASS {criterion} [{} ms]", elapsed.as_millis());
    assert!(
        elapsed <= bound,
        "{criterion} exceeded its runtime bound: {elapsed:?} > {bound:?}"
    );
}

// --- deterministic generator shared by the randomized criteria ------------

struct Rng(u64);

impl Rng {
    fn new(seed: u64) -> Self {
        Rng(seed.wrapping_mul(2685821657736338717).max(1))
    }

    fn next(&mut self) -> u64 {
        let mut x = self.0;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.0 = x;
        x.wrapping_mul(2685821657736338717)
    }

    fn below(&mut self, n: usize) -> usize {
        (self.next() % n.max(1) as u64) as usize
    }

    fn pick<'a, T>(&mut self, items: &'a [T]) -> &'a T {
        &items[self.below(items.len())]
    }

    fn chance(&mut self, num: u64, den: u64) -> bool {
        self.next() % den < num
    }
}

fn unary_schema(rels: &[&str]) -> Schema {
    let mut s = Schema::new();
    for r in rels {
        s.add_relation(rel(r), [attr("a")]).unwrap();
    }
    s
}

fn unary_tgd(from: &str, to: &str) -> Tgd {
    Tgd::new(
        [NamedAtom::new(rel(from), [(attr("a"), Term::var("x"))]).unwrap()],
        [NamedAtom::new(rel(to), [(attr("a"), Term::var("x"))]).unwrap()],
    )
    .unwrap()
}

fn random_instance(rng: &mut Rng, rels: &[&str], values: &[Value], max_tuples: usize) -> Instance {
    let mut i = Instance::empty(unary_schema(rels));
    for _ in 0..rng.below(max_tuples + 1) {
        let r = *rng.pick(rels);
        let v = rng.pick(values).clone();
        i.insert(&rel(r), tuple([(attr("a"), v)])).unwrap();
    }
    i
}

fn random_full_acyclic_tgds(rng: &mut Rng, rels: &[&str], count: usize) -> Vec<Tgd> {
    let mut out = Vec::new();
    for _ in 0..count {
        let to_idx = 1 + rng.below(rels.len() - 1);
        let from_idx = rng.below(to_idx);
        if rng.chance(1, 3) {
            let second = rng.below(to_idx);
            let shared = rng.chance(1, 2);
            out.push(
                Tgd::new(
                    [
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
                    ],
                    [NamedAtom::new(rel(rels[to_idx]), [(attr("a"), Term::var("x"))]).unwrap()],
                )
                .unwrap(),
            );
        } else {
            out.push(unary_tgd(rels[from_idx], rels[to_idx]));
        }
    }
    out
}

fn safe_proc(name: &str, tgds: Vec<Tgd>) -> Procedure {
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

fn addition_variants(i: &Instance, values: &[Value], max_added: usize) -> Vec<Instance> {
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
        let mut idx: Vec<usize> = (0..size).collect();
        loop {
            let mut j = i.clone();
            for &k in &idx {
                let (r, v) = &pool[k];
                j.insert(r, tuple([(attr("a"), v.clone())])).unwrap();
            }
            out.push(j);
            let mut advanced = false;
            let mut pos = size;
            while pos > 0 {
                pos -= 1;
                if idx[pos] < n - size + pos {
                    idx[pos] += 1;
                    for m in pos + 1..size {
                        idx[m] = idx[m - 1] + 1;
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

// ---------------------------------------------------------------------------

/// Criterion 1: applying the migration procedure to the visit log yields an
/// SKB whose minimal instance is exactly the migrated instance, bit-exact as
/// canonical JSON.
#[test]
fn criterion_1_migration_golden() {
    let start = Instant::now();
    let w = parse_spec(&fixture("fig1.wf")).unwrap();
    let migrate = w.procedure("migrate").unwrap().clone();
    let k = outcomes_skb(&w.instance, &[migrate]).unwrap();
    let minimal = minimal_instance(&k).unwrap();
    let rendered = json::to_string(&json::instance_document(&minimal));
    let golden = r#"{
  "format": "chasemith/1",
  "kind": "instance",
  "relations": {
    "EVisits": [
      [
        "1234",
        "33",
        "070916 12:00"
      ],
      [
        "2087",
        "91",
        "090916 03:10"
      ]
    ],
    "LocVisits": [
      [
        "1222",
        "33",
        "020715 07:50"
      ],
      [
        "1234",
        "33",
        "070916 12:00"
      ],
      [
        "2087",
        "91",
        "090916 03:10"
      ]
    ]
  },
  "schema": {
    "EVisits": [
      "facility",
      "pId",
      "timestp"
    ],
    "LocVisits": [
      "facility",
      "pId",
      "timestp"
    ]
  }
}"#;
    assert_eq!(rendered, golden);

    // The representation itself: base = the migrated instance, knowledge =
    // exactly the migration rule, scope = the written relation.
    assert_eq!(k.base(), &minimal);
    assert_eq!(k.gamma().len(), 1);
    assert_eq!(
        k.gamma()[0].to_string(),
        "tgd: EVisits(facility: x0, pId: x1, timestp: x2) -> \
         LocVisits(facility: x0, pId: x1, timestp: x2)"
    );
    assert_eq!(
        k.scope().iter().cloned().collect::<Vec<_>>(),
        vec![rel("LocVisits")]
    );
    finish(
        "criterion 1 (migration golden)",
        start,
        Duration::from_secs(1),
    );
}

/// Criterion 2: knowledge evolution under successive scopes. After the two
/// applications the knowledge keeps only the rules reading the relation that
/// stayed closed, the scope is the union, and the stated extension is
/// represented.
#[test]
fn criterion_2_skb_evolution_golden() {
    let start = Instant::now();
    let w = parse_spec(&fixture("evolution.wf")).unwrap();
    let ps: Vec<Procedure> = ["fill_t", "fill_r"]
        .iter()
        .map(|n| w.procedure(n).unwrap().clone())
        .collect();
    let k = outcomes_skb(&w.instance, &ps).unwrap();

    // Base: R = T = {1}, S pinned empty.
    let mut expected_base = Instance::empty(w.schema.clone());
    expected_base
        .insert(&rel("R"), tuple([(attr("v"), Value::int(1))]))
        .unwrap();
    expected_base
        .insert(&rel("T"), tuple([(attr("v"), Value::int(1))]))
        .unwrap();
    assert_eq!(k.base(), &expected_base);

    let expected_gamma = dedupe_tgds([
        Tgd::new(
            [NamedAtom::new(rel("S"), [(attr("v"), Term::var("x"))]).unwrap()],
            [NamedAtom::new(rel("T"), [(attr("v"), Term::var("x"))]).unwrap()],
        )
        .unwrap(),
        Tgd::new(
            [NamedAtom::new(rel("S"), [(attr("v"), Term::var("x"))]).unwrap()],
            [NamedAtom::new(rel("R"), [(attr("v"), Term::var("x"))]).unwrap()],
        )
        .unwrap(),
    ]);
    assert_eq!(k.gamma(), expected_gamma.as_slice());
    assert_eq!(
        k.scope().iter().cloned().collect::<Vec<_>>(),
        vec![rel("R"), rel("T")]
    );

    // The stated extension is represented: R = {1, 2}, T = {1}, S = {}.
    let mut extension = expected_base.clone();
    extension
        .insert(&rel("R"), tuple([(attr("v"), Value::int(2))]))
        .unwrap();
    assert!(rep_contains(&k, &extension).unwrap());
    let flags = k.flags();
    assert!(flags.full && flags.acyclic && flags.safe);
    finish(
        "criterion 2 (knowledge evolution golden)",
        start,
        Duration::from_secs(1),
    );
}

/// Criterion 3: the entailment worked example. R closed, T open: R ⊆ T
/// holds on everything represented, T ⊆ R does not.
#[test]
fn criterion_3_entailment_golden() {
    let start = Instant::now();
    let mut i = Instance::empty(unary_schema(&["R", "T"]));
    for (r, v) in [("R", "a"), ("R", "b"), ("T", "a"), ("T", "b")] {
        i.insert(&rel(r), tuple([(attr("a"), Value::atom(v))]))
            .unwrap();
    }
    let k = ScopedKnowledgeBase::new(i, [], [rel("T")]);
    assert!(skb_satisfies_tgd_general(&k, &unary_tgd("R", "T"))
        .unwrap()
        .holds());
    assert!(!skb_satisfies_tgd_general(&k, &unary_tgd("T", "R"))
        .unwrap()
        .holds());
    finish(
        "criterion 3 (entailment golden)",
        start,
        Duration::from_secs(1),
    );
}

/// Criterion 4: the exponential base growth is real: the pair of procedures
/// forces exactly 2^i rows into the wide relation, for i up to 8.
#[test]
fn criterion_4_exponential_base() {
    let start = Instant::now();
    for i in 1..=8usize {
        let wide_attrs: Vec<AttrName> = (1..=i).map(|k| attr(&format!("c{k}"))).collect();
        let mut s = Schema::new();
        s.add_relation(rel("R"), [attr("v")]).unwrap();
        s.add_relation(rel("Wide"), wide_attrs.clone()).unwrap();
        let mut input = Instance::empty(s);
        input
            .insert(&rel("R"), tuple([(attr("v"), Value::int(0))]))
            .unwrap();
        input
            .insert(&rel("R"), tuple([(attr("v"), Value::int(1))]))
            .unwrap();

        // R(x1), ..., R(xi) -> Wide(x1, ..., xi)
        let premise: Vec<NamedAtom> = (1..=i)
            .map(|k| NamedAtom::new(rel("R"), [(attr("v"), Term::var(&format!("x{k}")))]).unwrap())
            .collect();
        let conclusion = NamedAtom::new(
            rel("Wide"),
            wide_attrs
                .iter()
                .enumerate()
                .map(|(idx, a)| (a.clone(), Term::var(&format!("x{}", idx + 1)))),
        )
        .unwrap();
        let fan_out = safe_proc(
            "fan_out",
            vec![Tgd::new(premise, [conclusion.clone()]).unwrap()],
        );

        // Wide(x1, ..., xi) -> R(x1): reopens R, discarding the fan-out rule.
        let narrow = safe_proc(
            "narrow",
            vec![Tgd::new(
                [conclusion],
                [NamedAtom::new(rel("R"), [(attr("v"), Term::var("x1"))]).unwrap()],
            )
            .unwrap()],
        );

        let k = outcomes_skb(&input, &[fan_out, narrow]).unwrap();
        let wide_rows = k.base().tuples(&rel("Wide")).unwrap().len();
        assert_eq!(wide_rows, 1 << i, "2^{i} rows expected");
        // The reopened relation appears in no premise of the kept knowledge.
        for t in k.gamma() {
            assert!(!t.premise_relations().contains(&rel("R")), "{t}");
        }
    }
    finish(
        "criterion 4 (exponential base, i = 1..8)",
        start,
        Duration::from_secs(30),
    );
}

/// Criterion 5: strong representation at scale. 200 randomized cases:
/// everything the SKB of a sequence represents inside the bounded candidate
/// space is exactly the oracle-enumerated outcome set.
#[test]
fn criterion_5_strong_representation() {
    let start = Instant::now();
    let mut rng = Rng::new(105);
    const RELS: [&str; 3] = ["R", "S", "T"];
    let values: Vec<Value> = (0..3).map(Value::int).collect();
    for case in 0..200 {
        let i = random_instance(&mut rng, &RELS, &values, 6);
        let proc_count = 1 + rng.below(2);
        let mut ps = Vec::new();
        for p in 0..proc_count {
            let tgd_count = 1 + rng.below(3);
            ps.push(safe_proc(
                &format!("p{p}"),
                random_full_acyclic_tgds(&mut rng, &RELS, tgd_count),
            ));
        }
        let mut u = UniverseBound::for_instance(&i, &[Value::int(100)], 2);
        u.candidate_budget = 5_000_000;
        let oracle_set =
            enumerate_outcomes_seq(&i, &ps, &u, Mode::Static, PinSemantics::PerRelation).unwrap();
        let k = outcomes_skb(&i, &ps).unwrap();

        let mut pool: Vec<Value> = u.values.iter().cloned().collect();
        pool.sort();
        for j in addition_variants(&i, &pool, 2) {
            assert_eq!(
                rep_contains(&k, &j).unwrap(),
                oracle_set.contains(&j),
                "case {case}: representation and enumeration disagree on {j:?}"
            );
        }
    }
    finish(
        "criterion 5 (strong representation, 200 cases)",
        start,
        Duration::from_secs(300),
    );
}

// --- criterion 6: graph coloring gadget -----------------------------------

/// The coloring gadget: colors wired into a closed edge relation, two open
/// unary relations holding distinct markers, and an egd demanding the
/// markers collapse whenever the pattern graph maps into the edges.
fn coloring_gadget(edges: &[(usize, usize)]) -> (ScopedKnowledgeBase, Egd) {
    let mut s = Schema::new();
    s.add_relation(rel("Edge"), [attr("s"), attr("t")]).unwrap();
    s.add_relation(rel("Lo"), [attr("v")]).unwrap();
    s.add_relation(rel("Hi"), [attr("v")]).unwrap();
    let mut i = Instance::empty(s);
    for (a, b) in [
        ("r", "b"),
        ("b", "r"),
        ("b", "w"),
        ("w", "b"),
        ("w", "r"),
        ("r", "w"),
    ] {
        i.insert(
            &rel("Edge"),
            tuple([(attr("s"), Value::atom(a)), (attr("t"), Value::atom(b))]),
        )
        .unwrap();
    }
    i.insert(&rel("Lo"), tuple([(attr("v"), Value::int(1))]))
        .unwrap();
    i.insert(&rel("Hi"), tuple([(attr("v"), Value::int(2))]))
        .unwrap();
    let k = ScopedKnowledgeBase::new(i, [], [rel("Lo"), rel("Hi")]);

    let mut premise: Vec<NamedAtom> = edges
        .iter()
        .map(|(u, v)| {
            NamedAtom::new(
                rel("Edge"),
                [
                    (attr("s"), Term::var(&format!("n{u}"))),
                    (attr("t"), Term::var(&format!("n{v}"))),
                ],
            )
            .unwrap()
        })
        .collect();
    premise.push(NamedAtom::new(rel("Lo"), [(attr("v"), Term::var("x"))]).unwrap());
    premise.push(NamedAtom::new(rel("Hi"), [(attr("v"), Term::var("y"))]).unwrap());
    let egd = Egd::new(premise, Var::new("x"), Var::new("y")).unwrap();
    (k, egd)
}

fn brute_three_colorable(nodes: usize, edges: &[(usize, usize)]) -> bool {
    let total = 3usize.pow(nodes as u32);
    'outer: for mut code in 0..total {
        let mut color = vec![0usize; nodes];
        for c in color.iter_mut() {
            *c = code % 3;
            code /= 3;
        }
        for (u, v) in edges {
            if color[*u] == color[*v] {
                continue 'outer;
            }
        }
        return true;
    }
    nodes == 0
}

/// Criterion 6: the egd of the coloring gadget holds exactly when the
/// pattern graph is not 3-colorable: triangle and K4 golden, plus 20 random
/// graphs cross-checked against brute-force coloring.
#[test]
fn criterion_6_coloring_gadget() {
    let start = Instant::now();

    let triangle = [(0, 1), (1, 2), (2, 0)];
    let (k, egd) = coloring_gadget(&triangle);
    assert!(
        !skb_satisfies_egd(&k, &egd).unwrap().holds(),
        "triangle is 3-colorable"
    );

    let k4 = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
    let (k, egd) = coloring_gadget(&k4);
    assert!(
        skb_satisfies_egd(&k, &egd).unwrap().holds(),
        "K4 is not 3-colorable"
    );

    let mut rng = Rng::new(106);
    for case in 0..20 {
        let nodes = 2 + rng.below(5); // up to 6 nodes
        let mut edges = Vec::new();
        for u in 0..nodes {
            for v in u + 1..nodes {
                if rng.chance(1, 2) {
                    edges.push((u, v));
                }
            }
        }
        if edges.is_empty() {
            edges.push((0, 1));
        }
        let (k, egd) = coloring_gadget(&edges);
        let engine_holds = skb_satisfies_egd(&k, &egd).unwrap().holds();
        let colorable = brute_three_colorable(nodes, &edges);
        assert_eq!(
            engine_holds, !colorable,
            "case {case}: {nodes} nodes, edges {edges:?}"
        );
    }
    finish(
        "criterion 6 (coloring gadget, 22 graphs)",
        start,
        Duration::from_secs(60),
    );
}

/// Criterion 7: dynamic-semantics suite. Golden minimal-schema outputs, the
/// arity-pin failure rule, and 100 randomized sequences of safe procedures
/// whose conditional representation must contain the oracle outcomes and
/// agree on the minimal ones.
#[test]
fn criterion_7_dynamic_semantics() {
    let start = Instant::now();

    // Golden: the insurance alteration adds exactly the insId column.
    let w = parse_spec(&fixture("motivating.wf")).unwrap();
    let alter = w.procedure("add_insurance_column").unwrap();
    let result = minimal_schema(alter, &w.schema);
    let min = result.schema().expect("alteration applies");
    assert_eq!(
        min.attrs(&rel("LocVisits"))
            .unwrap()
            .iter()
            .map(|a| a.to_string())
            .collect::<Vec<_>>(),
        ["facility", "insId", "pId", "timestp"]
    );

    // Golden: a total preservation query pins the arity; growing past it
    // fails. fill_insurance before the alteration demands a 4-attribute
    // LocVisits pinned at 3.
    let fill = w.procedure("fill_insurance").unwrap();
    let result = minimal_schema(fill, &w.schema);
    assert!(result.failed());
    assert_eq!(result.labels.get(&rel("LocVisits")), Some(&3));

    // Randomized clause checks.
    let mut rng = Rng::new(107);
    let minimal_of = |set: &BTreeSet<Instance>| -> BTreeSet<Instance> {
        set.iter()
            .filter(|j| !set.iter().any(|k| *k != **j && instance_extends(j, k)))
            .cloned()
            .collect()
    };
    for case in 0..100 {
        let values: Vec<Value> = (0..2).map(Value::int).collect();
        let mut i = Instance::empty(unary_schema(&["R", "T"]));
        i.insert(&rel("R"), tuple([(attr("a"), rng.pick(&values).clone())]))
            .unwrap();
        if rng.chance(1, 2) {
            i.insert(&rel("T"), tuple([(attr("a"), rng.pick(&values).clone())]))
                .unwrap();
        }
        let alter_rel = *rng.pick(&["R", "T"]);
        let alteration = Procedure {
            name: "alter".into(),
            scope: vec![],
            pre: vec![],
            post: vec![Condition::Structure(
                StructureConstraint::attrs(rel(alter_rel), [attr("b")]).unwrap(),
            )],
            preserve: vec![],
        };
        let fill = safe_proc(
            "fill",
            vec![if rng.chance(1, 2) {
                unary_tgd("R", "T")
            } else {
                unary_tgd("T", "R")
            }],
        );
        let ps = if rng.chance(1, 2) {
            [alteration, fill]
        } else {
            [fill, alteration]
        };

        let t = match outcomes_condtab(&i, &ps).unwrap() {
            CondOutcome::Instance(t) => t,
            CondOutcome::Empty(_) => panic!("case {case}: no arity pins can fail here"),
        };
        assert!(t.is_positive());

        let mut u = UniverseBound::for_instance(&i, &[], 2);
        u.max_extra_attrs = 1;
        u.candidate_budget = 8_000_000;
        let oracle_set =
            enumerate_outcomes_seq(&i, &ps, &u, Mode::Dynamic, PinSemantics::PerRelation).unwrap();
        assert!(!oracle_set.is_empty(), "case {case}");

        // Containment: every bounded outcome is represented.
        for j in &oracle_set {
            assert!(
                cond_rep_contains(&t, j),
                "case {case}: unrepresented outcome {j:?}"
            );
        }

        // Minimal-instance agreement, exact: substitution images over the
        // shared pool versus minimal bounded outcomes.
        let nulls: Vec<Value> = t.nulls().into_iter().collect();
        let pool: Vec<Value> = u.values.iter().cloned().collect();
        let mut images: BTreeSet<Instance> = BTreeSet::new();
        let combos = pool.len().pow(nulls.len() as u32);
        for mut code in 0..combos {
            let mut nu = std::collections::BTreeMap::new();
            for n in &nulls {
                nu.insert(n.clone(), pool[code % pool.len()].clone());
                code /= pool.len();
            }
            images.insert(t.apply_substitution(&nu));
        }
        assert_eq!(
            minimal_of(&images),
            minimal_of(&oracle_set),
            "case {case}: minimal instances disagree"
        );
    }
    finish(
        "criterion 7 (dynamic semantics, 100 cases)",
        start,
        Duration::from_secs(300),
    );
}

// --- criterion 8 and 9: end-to-end through the binary ----------------------

fn run_cli(args: &[&str]) -> (String, String, i32) {
    let out = Command::new(env!("CARGO_BIN_EXE_chasemith"))
        .args(args)
        .output()
        .expect("binary runs");
    (
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
        out.status.code().unwrap_or(-1),
    )
}

fn testdata(name: &str) -> String {
    format!("{}/testdata/{name}", env!("CARGO_MANIFEST_DIR"))
}

/// Criterion 8: readiness end to end. The insurance corpus needs the
/// schema-widening procedure followed by the filler, found length-minimal
/// under the dynamic semantics; without the widening the search proves
/// nothing within the bound and exits 3. The returned witness re-verifies.
#[test]
fn criterion_8_readiness_end_to_end() {
    let start = Instant::now();
    let corpus = testdata("motivating.wf");
    let (stdout, stderr, code) = run_cli(&[
        "ready",
        &corpus,
        "--goal",
        "insured_facilities",
        "--max-len",
        "3",
        "--semantics",
        "dynamic",
    ]);
    assert_eq!(code, 0, "stderr: {stderr}");
    assert!(
        stdout.contains("WITNESS: add_insurance_column, fill_insurance"),
        "unexpected witness: {stdout}"
    );

    // Witness re-verification happens inside the search; cross-check here
    // once more through the conditional representation.
    let w = parse_spec(&fixture("motivating.wf")).unwrap();
    let ps: Vec<Procedure> = ["add_insurance_column", "fill_insurance"]
        .iter()
        .map(|n| w.procedure(n).unwrap().clone())
        .collect();
    let goal = match w.goal("insured_facilities").unwrap() {
        Goal::Query(q) => q.clone(),
        _ => unreachable!(),
    };
    assert!(chasemith_core::condtab::certain_boolean_dyn(&w.instance, &ps, &goal).unwrap());

    // No length-1 witness exists: the three single steps all fail.
    for p in ["add_insurance_column", "fill_insurance", "migrate"] {
        let single = [w.procedure(p).unwrap().clone()];
        let certain = match outcomes_condtab(&w.instance, &single).unwrap() {
            CondOutcome::Instance(t) => {
                chasemith_core::condtab::certain_boolean_condtab(&t, &goal).unwrap()
            }
            CondOutcome::Empty(_) => false,
        };
        assert!(!certain, "single-step witness {p} should not exist");
    }

    let noalter = testdata("motivating_noalter.wf");
    let (_, _, code) = run_cli(&[
        "ready",
        &noalter,
        "--goal",
        "insured_facilities",
        "--max-len",
        "3",
        "--semantics",
        "dynamic",
    ]);
    assert_eq!(
        code, 3,
        "without the widening procedure the answer is no-within-bound"
    );
    finish(
        "criterion 8 (readiness end to end)",
        start,
        Duration::from_secs(10),
    );
}

/// Criterion 9: every command's output is byte-identical across repeated
/// runs and across thread counts 1 and 8.
#[test]
fn criterion_9_determinism() {
    let start = Instant::now();
    let fig1 = testdata("fig1.wf");
    let motivating = testdata("motivating.wf");
    let evolution = testdata("evolution.wf");
    let commands: Vec<Vec<&str>> = vec![
        vec!["check", &fig1],
        vec!["check", &motivating, "--json"],
        vec![
            "applicability",
            &motivating,
            "--seq",
            "add_insurance_column,fill_insurance",
            "--dynamic",
        ],
        vec![
            "nonempty",
            &motivating,
            "--seq",
            "add_insurance_column,fill_insurance",
        ],
        vec!["apply", &fig1, "--seq", "migrate", "--json", "--trace"],
        vec!["apply", &fig1, "--seq", "migrate", "--minimal"],
        vec![
            "apply",
            &motivating,
            "--seq",
            "add_insurance_column,migrate",
            "--semantics",
            "dynamic",
        ],
        vec!["apply", &evolution, "--seq", "fill_t,fill_r"],
        vec!["entails", &fig1, "--seq", "migrate", "--goal", "migrated"],
        vec![
            "entails",
            &evolution,
            "--seq",
            "fill_t,fill_r",
            "--goal",
            "r_feeds_t",
            "--json",
        ],
        vec!["certain", &fig1, "--seq", "migrate", "--goal", "visit_2087"],
        vec![
            "ready",
            &fig1,
            "--goal",
            "visit_2087",
            "--max-len",
            "2",
            "--json",
        ],
        vec![
            "oracle",
            "outcomes",
            &fig1,
            "--seq",
            "migrate",
            "--max-extra-tuples",
            "1",
        ],
    ];
    for args in &commands {
        let first = run_cli(args);
        let second = run_cli(args);
        assert_eq!(first, second, "two runs differ for {args:?}");
    }

    // Thread counts must not change the readiness output, including stats.
    let ready_base = vec![
        "ready",
        motivating.as_str(),
        "--goal",
        "insured_facilities",
        "--max-len",
        "3",
        "--semantics",
        "dynamic",
        "--json",
    ];
    let mut one = ready_base.clone();
    one.extend(["--threads", "1"]);
    let mut eight = ready_base.clone();
    eight.extend(["--threads", "8"]);
    let out_one = run_cli(&one);
    let out_eight = run_cli(&eight);
    assert_eq!(out_one, out_eight, "thread count changed the output");
    assert_eq!(out_one.2, 0);

    let static_ready = vec![
        "ready",
        fig1.as_str(),
        "--goal",
        "visit_2087",
        "--max-len",
        "2",
    ];
    let mut one = static_ready.clone();
    one.extend(["--threads", "1"]);
    let mut eight = static_ready.clone();
    eight.extend(["--threads", "8"]);
    assert_eq!(run_cli(&one), run_cli(&eight));

    finish("criterion 9 (determinism)", start, Duration::from_secs(60));
}
