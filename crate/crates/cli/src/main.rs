//! Command-line front end: loads a workspace description, dispatches to the
//! reasoning core, and reports through stable text or JSON.
//!
//! Exit codes: 0 for yes/success, 3 for a no-style answer (including
//! no-within-bound), 4 for inputs outside the supported fragments, 2 for
//! input errors.

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use chasemith::dsl::{parse_spec, Goal, Workspace};
use chasemith::json;
use chasemith::search;
use chasemith_core::chase::chase_full_traced;
use chasemith_core::condtab::{certain_boolean_skb, outcomes_condtab_with, CondOutcome};
use chasemith_core::dynschema;
use chasemith_core::entail;
use chasemith_core::lang::{Cq, Dependency};
use chasemith_core::model::Value;
use chasemith_core::oracle;
use chasemith_core::procedures::{
    check_applicability_sequence, CheckedApplicability, Mode, PinSemantics, Procedure,
};
use chasemith_core::readiness::{theoretical_sequence_bound, ReadinessOutcome};
use chasemith_core::skb;
use chasemith_core::Budget;

/// Writes a line to stdout, exiting quietly when the consumer closed the
/// pipe (e.g. `... | head`).
macro_rules! emit {
    ($($arg:tt)*) => {{
        use std::io::Write;
        let mut stdout = std::io::stdout().lock();
        if writeln!(stdout, $($arg)*).is_err() {
            std::process::exit(0);
        }
    }};
}

const EXIT_OK: u8 = 0;
const EXIT_INTERNAL: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_NO: u8 = 3;
const EXIT_UNSUPPORTED: u8 = 4;

#[derive(Parser)]
#[command(
    name = "chasemith",
    version,
    about = "Reasoning about black-box data-transforming procedures"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Workspace description file (.wf).
    file: String,
    /// Emit JSON instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Args, Clone)]
struct Sequence {
    /// Comma-separated procedure names, in application order.
    #[arg(long, value_delimiter = ',', default_value = "")]
    seq: Vec<String>,
}

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum Semantics {
    Static,
    Dynamic,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a workspace and report procedure classifications.
    Check(Common),
    /// Is every procedure of the sequence guaranteed applicable?
    Applicability {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        seq: Sequence,
        /// Decide under the dynamic semantics and print the schema fold.
        #[arg(long)]
        dynamic: bool,
    },
    /// Is the outcome set of the sequence guaranteed nonempty?
    Nonempty {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        seq: Sequence,
    },
    /// Emit the symbolic outcome representation of a sequence.
    Apply {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        seq: Sequence,
        #[arg(long, value_enum, default_value = "static")]
        semantics: Semantics,
        /// Print the minimal represented instance instead (static only).
        #[arg(long)]
        minimal: bool,
        /// Include the chase trigger trace (static only).
        #[arg(long)]
        trace: bool,
    },
    /// Does a goal constraint hold on every outcome of the sequence?
    Entails {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        seq: Sequence,
        /// Goal name (a tgd or egd goal in the workspace).
        #[arg(long)]
        goal: String,
    },
    /// Is a boolean query certainly true over every outcome?
    Certain {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        seq: Sequence,
        /// Goal name (a query goal in the workspace).
        #[arg(long)]
        goal: String,
        #[arg(long, value_enum, default_value = "static")]
        semantics: Semantics,
    },
    /// Search for a workflow readying the data for a goal.
    Ready {
        #[command(flatten)]
        common: Common,
        /// Goal name in the workspace.
        #[arg(long, required_unless_present = "goal_file")]
        goal: Option<String>,
        /// A file containing a single goal block.
        #[arg(long)]
        goal_file: Option<String>,
        /// Longest sequence to try.
        #[arg(long)]
        max_len: u32,
        #[arg(long, value_enum, default_value = "static")]
        semantics: Semantics,
        /// Worker threads for layer expansion; answers do not depend on it.
        #[arg(long, default_value = "1")]
        threads: usize,
        /// Refuse unless max-len reaches the theoretical completeness bound.
        #[arg(long)]
        prove_bound: bool,
    },
    /// Brute-force ground truth over bounded universes.
    #[command(subcommand)]
    Oracle(OracleCommand),
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Enumerate the bounded outcome set of a sequence.
    Outcomes {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        seq: Sequence,
        #[command(flatten)]
        bound: OracleBound,
        #[arg(long, value_enum, default_value = "static")]
        semantics: Semantics,
    },
    /// Certain answer of a query goal over the bounded outcome set.
    Certain {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        seq: Sequence,
        #[command(flatten)]
        bound: OracleBound,
        #[arg(long)]
        goal: String,
        #[arg(long, value_enum, default_value = "static")]
        semantics: Semantics,
    },
    /// Does a constraint goal hold on every bounded outcome?
    Entails {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        seq: Sequence,
        #[command(flatten)]
        bound: OracleBound,
        #[arg(long)]
        goal: String,
        #[arg(long, value_enum, default_value = "static")]
        semantics: Semantics,
    },
}

#[derive(Args, Clone)]
struct OracleBound {
    /// Extra universe values beyond the active domain (comma-separated).
    #[arg(long, value_delimiter = ',', default_value = "")]
    values: Vec<String>,
    /// Most tuples added (and removed) per step.
    #[arg(long, default_value = "1")]
    max_extra_tuples: usize,
    /// Dynamic mode: most fresh attributes added.
    #[arg(long, default_value = "0")]
    max_extra_attrs: usize,
    /// Dynamic mode: most fresh relations added.
    #[arg(long, default_value = "0")]
    max_extra_rels: usize,
    /// Evaluate the outcome pinning clause as the single conjoined query
    /// instead of per relation.
    #[arg(long)]
    conjoined_pin: bool,
}

impl OracleBound {
    fn build(&self, i: &chasemith_core::model::Instance, budget: &Budget) -> oracle::UniverseBound {
        let extra: Vec<Value> = self.values.iter().map(Value::atom).collect();
        let mut u = oracle::UniverseBound::for_instance(i, &extra, self.max_extra_tuples);
        u.max_extra_attrs = self.max_extra_attrs;
        u.max_extra_rels = self.max_extra_rels;
        u.candidate_budget = budget.oracle_candidates;
        u
    }

    fn pin(&self) -> PinSemantics {
        if self.conjoined_pin {
            PinSemantics::Conjoined
        } else {
            PinSemantics::PerRelation
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_INPUT)
        }
        Err(Failure::Unsupported(msg)) => {
            eprintln!("unsupported: {msg}");
            ExitCode::from(EXIT_UNSUPPORTED)
        }
        Err(Failure::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            ExitCode::from(EXIT_INTERNAL)
        }
    }
}

enum Failure {
    Input(String),
    Unsupported(String),
    Internal(String),
}

impl From<chasemith_core::Error> for Failure {
    fn from(e: chasemith_core::Error) -> Self {
        match e {
            chasemith_core::Error::Unsupported(_)
            | chasemith_core::Error::ClassViolation { .. }
            | chasemith_core::Error::NotWeaklyAcyclic(_) => Failure::Unsupported(e.to_string()),
            chasemith_core::Error::Internal(_) => Failure::Internal(e.to_string()),
            other => Failure::Input(other.to_string()),
        }
    }
}

fn budget_from_env() -> Budget {
    match std::env::var("CHASEMITH_BUDGET") {
        Ok(v) => match v.parse::<u64>() {
            Ok(cap) => Budget::with_cap(cap),
            Err(_) => Budget::default(),
        },
        Err(_) => Budget::default(),
    }
}

fn load(path: &str) -> Result<Workspace, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Input(format!("cannot read {path}: {e}")))?;
    parse_spec(&text).map_err(|e| Failure::Input(format!("{path}:{e}")))
}

fn resolve_sequence<'w>(w: &'w Workspace, seq: &[String]) -> Result<Vec<&'w Procedure>, Failure> {
    seq.iter()
        .filter(|s| !s.is_empty())
        .map(|name| {
            w.procedure(name)
                .ok_or_else(|| Failure::Input(format!("unknown procedure {name}")))
        })
        .collect()
}

fn goal_query(w: &Workspace, name: &str) -> Result<Cq, Failure> {
    match w.goal(name) {
        Some(Goal::Query(q)) => Ok(q.clone()),
        Some(_) => Err(Failure::Input(format!(
            "goal {name} is a constraint, not a query"
        ))),
        None => Err(Failure::Input(format!("unknown goal {name}"))),
    }
}

fn goal_constraint(w: &Workspace, name: &str) -> Result<Dependency, Failure> {
    match w.goal(name) {
        Some(Goal::Tgd(t)) => Ok(Dependency::Tgd(t.clone())),
        Some(Goal::Egd(e)) => Ok(Dependency::Egd(e.clone())),
        Some(Goal::Query(_)) => Err(Failure::Input(format!(
            "goal {name} is a query, not a constraint"
        ))),
        None => Err(Failure::Input(format!("unknown goal {name}"))),
    }
}

fn yes_no(answer: bool) -> (String, u8) {
    if answer {
        ("YES".into(), EXIT_OK)
    } else {
        ("NO".into(), EXIT_NO)
    }
}

/// Emits a boolean verdict as text or a small JSON document.
fn report_answer(kind: &str, answer: bool, as_json: bool) -> u8 {
    let (line, code) = yes_no(answer);
    if as_json {
        let doc = serde_json::json!({
            "format": json::FORMAT,
            "kind": kind,
            "answer": answer,
        });
        emit!("{}", json::to_string(&doc));
    } else {
        emit!("{line}");
    }
    code
}

fn run(cli: Cli) -> Result<u8, Failure> {
    let budget = budget_from_env();
    match cli.command {
        Command::Check(common) => {
            let w = load(&common.file)?;
            if common.json {
                let classes: Vec<serde_json::Value> = w
                    .classes()
                    .into_iter()
                    .map(|(name, c)| {
                        serde_json::json!({
                            "name": name,
                            "safe_scope": c.safe_scope,
                            "safe_alteration": c.safe_alteration,
                            "forces_alteration": c.forces_alteration,
                        })
                    })
                    .collect();
                let doc = serde_json::json!({
                    "format": json::FORMAT,
                    "kind": "check",
                    "relations": w.schema.len(),
                    "tuples": w.instance.total_tuples(),
                    "procedures": classes,
                    "goals": w.goals.iter().map(|(n, _)| n.clone()).collect::<Vec<_>>(),
                });
                emit!("{}", json::to_string(&doc));
            } else {
                emit!(
                    "workspace OK: {} relations, {} tuples, {} procedures, {} goals",
                    w.schema.len(),
                    w.instance.total_tuples(),
                    w.catalog.len(),
                    w.goals.len()
                );
                for (name, class) in w.classes() {
                    let label = if class.safe_scope && class.safe_alteration {
                        "no-op (safe scope and safe alteration)"
                    } else if class.safe_scope {
                        "safe scope"
                    } else if class.safe_alteration {
                        "safe schema-alteration"
                    } else {
                        "outside the safe classes"
                    };
                    emit!("procedure {name}: {label}");
                }
            }
            Ok(EXIT_OK)
        }

        Command::Applicability {
            common,
            seq,
            dynamic,
        } => {
            let w = load(&common.file)?;
            let ps: Vec<Procedure> = resolve_sequence(&w, &seq.seq)?
                .into_iter()
                .cloned()
                .collect();
            if dynamic {
                let fold = dynschema::applicability_dyn(&ps, &w.schema)?;
                for (idx, schema) in fold.trace.iter().enumerate() {
                    emit!("S{idx}: {schema:?}");
                }
                if let Some((proc_name, msg)) = &fold.failure {
                    emit!("FAILS at {proc_name}: {msg}");
                }
                let (line, code) = yes_no(fold.holds);
                emit!("{line}");
                Ok(code)
            } else {
                match check_applicability_sequence(&ps, &w.schema) {
                    CheckedApplicability::Supported(answer) => {
                        Ok(report_answer("applicability", answer, common.json))
                    }
                    CheckedApplicability::Unsupported(reason) => Err(Failure::Unsupported(reason)),
                }
            }
        }

        Command::Nonempty { common, seq } => {
            let w = load(&common.file)?;
            let ps: Vec<Procedure> = resolve_sequence(&w, &seq.seq)?
                .into_iter()
                .cloned()
                .collect();
            let answer = dynschema::dyn_nonempty_with(&w.instance, &ps, &budget)?;
            Ok(report_answer("nonempty", answer, common.json))
        }

        Command::Apply {
            common,
            seq,
            semantics,
            minimal,
            trace,
        } => {
            let w = load(&common.file)?;
            let ps: Vec<Procedure> = resolve_sequence(&w, &seq.seq)?
                .into_iter()
                .cloned()
                .collect();
            match semantics {
                Semantics::Static => {
                    let k = skb::outcomes_skb_with(&w.instance, &ps, &budget)?;
                    if minimal {
                        let m = skb::minimal_instance(&k)?;
                        emit!("{}", json::to_string(&json::instance_document(&m)));
                        return Ok(EXIT_OK);
                    }
                    let mut doc = json::skb_json(&k);
                    if trace {
                        let mut steps = Vec::new();
                        let mut base = w.instance.clone();
                        for p in &ps {
                            let (next, fired) = chase_full_traced(&base, &p.post_tgds(), &budget)?;
                            steps.extend(fired);
                            base = next;
                        }
                        doc.as_object_mut()
                            .expect("object")
                            .insert("trace".into(), json::steps_json(&steps));
                    }
                    emit!("{}", json::to_string(&doc));
                    Ok(EXIT_OK)
                }
                Semantics::Dynamic => match outcomes_condtab_with(&w.instance, &ps, &budget)? {
                    CondOutcome::Instance(t) => {
                        emit!("{}", json::to_string(&json::cond_instance_json(&t)));
                        Ok(EXIT_OK)
                    }
                    CondOutcome::Empty(name) => {
                        emit!("EMPTY-OUTCOME at {name}");
                        Ok(EXIT_NO)
                    }
                },
            }
        }

        Command::Entails { common, seq, goal } => {
            let w = load(&common.file)?;
            let ps: Vec<Procedure> = resolve_sequence(&w, &seq.seq)?
                .into_iter()
                .cloned()
                .collect();
            let d = goal_constraint(&w, &goal)?;
            let k = skb::outcomes_skb_with(&w.instance, &ps, &budget)?;
            let verdict = match &d {
                Dependency::Tgd(t) => entail::skb_satisfies_tgd_safe_with(&k, t, &budget)?,
                Dependency::Egd(e) => entail::skb_satisfies_egd_with(&k, e, &budget)?,
            };
            match &verdict {
                entail::Verdict::Holds => {
                    emit!("YES");
                    Ok(EXIT_OK)
                }
                entail::Verdict::Violated(violation) => {
                    emit!("NO");
                    if common.json {
                        let detail = match violation {
                            entail::Violation::Incompatible => {
                                serde_json::json!({"incompatible": true})
                            }
                            entail::Violation::CounterModel(m) => serde_json::json!({
                                "counterexample": json::instance_document(m),
                            }),
                            entail::Violation::Disjunct(d) => {
                                serde_json::json!({"escaping_disjunct": d})
                            }
                        };
                        emit!("{}", json::to_string(&detail));
                    }
                    Ok(EXIT_NO)
                }
            }
        }

        Command::Certain {
            common,
            seq,
            goal,
            semantics,
        } => {
            let w = load(&common.file)?;
            let ps: Vec<Procedure> = resolve_sequence(&w, &seq.seq)?
                .into_iter()
                .cloned()
                .collect();
            let q = goal_query(&w, &goal)?;
            let answer = match semantics {
                Semantics::Static => {
                    let k = skb::outcomes_skb_with(&w.instance, &ps, &budget)?;
                    certain_boolean_skb(&k, &q)?
                }
                Semantics::Dynamic => chasemith_core::condtab::certain_boolean_dyn_with(
                    &w.instance,
                    &ps,
                    &q,
                    &budget,
                )?,
            };
            Ok(report_answer("certain", answer, common.json))
        }

        Command::Ready {
            common,
            goal,
            goal_file,
            max_len,
            semantics,
            threads,
            prove_bound,
        } => {
            let w = load(&common.file)?;
            let resolved_goal = match (&goal, &goal_file) {
                (Some(name), _) => w
                    .goal(name)
                    .cloned()
                    .ok_or_else(|| Failure::Input(format!("unknown goal {name}")))?,
                (None, Some(path)) => {
                    let gw = load(path)?;
                    let mut goals = gw.goals;
                    if goals.len() != 1 {
                        return Err(Failure::Input(format!(
                            "{path}: expected exactly one goal block, found {}",
                            goals.len()
                        )));
                    }
                    goals.remove(0).1
                }
                (None, None) => unreachable!("clap enforces one of the two"),
            };

            if prove_bound {
                let goal_size = match &resolved_goal {
                    Goal::Tgd(t) => t.premise.atoms().len() + t.conclusion.atoms().len(),
                    Goal::Egd(e) => e.premise.atoms().len() + 1,
                    Goal::Query(q) => q.atoms().len(),
                };
                let bound = theoretical_sequence_bound(&w.instance, w.catalog.len(), goal_size);
                if u128::from(max_len) < bound {
                    return Err(Failure::Input(format!(
                        "a negative answer at --max-len {max_len} proves nothing: the \
                         completeness bound for this input is {bound}; drop --prove-bound \
                         to search heuristically"
                    )));
                }
            }

            let answer = match (&resolved_goal, semantics) {
                (Goal::Query(q), Semantics::Static) => {
                    search::query_ready_par(&w.instance, &w.catalog, q, max_len, threads, &budget)?
                }
                (Goal::Query(q), Semantics::Dynamic) => search::query_ready_dyn_par(
                    &w.instance,
                    &w.catalog,
                    q,
                    max_len,
                    threads,
                    &budget,
                )?,
                (Goal::Tgd(t), Semantics::Static) => search::constraint_ready_par(
                    &w.instance,
                    &w.catalog,
                    &Dependency::Tgd(t.clone()),
                    max_len,
                    threads,
                    &budget,
                )?,
                (Goal::Egd(e), Semantics::Static) => search::constraint_ready_par(
                    &w.instance,
                    &w.catalog,
                    &Dependency::Egd(e.clone()),
                    max_len,
                    threads,
                    &budget,
                )?,
                (Goal::Tgd(_) | Goal::Egd(_), Semantics::Dynamic) => {
                    return Err(Failure::Unsupported(
                        "constraint readiness under the dynamic semantics is not part of \
                         the decidable fragment this engine implements"
                            .into(),
                    ))
                }
            };

            if common.json {
                let outcome = match &answer.outcome {
                    ReadinessOutcome::Witness(names) => serde_json::json!({"witness": names}),
                    ReadinessOutcome::NoWithinBound(b) => {
                        serde_json::json!({"no_within_bound": b})
                    }
                    ReadinessOutcome::Unsupported(r) => {
                        serde_json::json!({"unsupported": r})
                    }
                };
                let doc = serde_json::json!({
                    "format": json::FORMAT,
                    "kind": "readiness",
                    "outcome": outcome,
                    "stats": {
                        "nodes_checked": answer.stats.nodes_checked,
                        "dedup_hits": answer.stats.dedup_hits,
                    },
                });
                emit!("{}", json::to_string(&doc));
            }
            match &answer.outcome {
                ReadinessOutcome::Witness(names) => {
                    if !common.json {
                        emit!("WITNESS: {}", names.join(", "));
                        emit!(
                            "stats: nodes_checked={} dedup_hits={}",
                            answer.stats.nodes_checked,
                            answer.stats.dedup_hits
                        );
                    }
                    Ok(EXIT_OK)
                }
                ReadinessOutcome::NoWithinBound(bound) => {
                    if !common.json {
                        emit!("NO-WITHIN-BOUND {bound}");
                        emit!(
                            "stats: nodes_checked={} dedup_hits={}",
                            answer.stats.nodes_checked,
                            answer.stats.dedup_hits
                        );
                    }
                    Ok(EXIT_NO)
                }
                ReadinessOutcome::Unsupported(reason) => Err(Failure::Unsupported(reason.clone())),
            }
        }

        Command::Oracle(oracle_cmd) => run_oracle(oracle_cmd, &budget),
    }
}

fn run_oracle(cmd: OracleCommand, budget: &Budget) -> Result<u8, Failure> {
    match cmd {
        OracleCommand::Outcomes {
            common,
            seq,
            bound,
            semantics,
        } => {
            let w = load(&common.file)?;
            let ps: Vec<Procedure> = resolve_sequence(&w, &seq.seq)?
                .into_iter()
                .cloned()
                .collect();
            let u = bound.build(&w.instance, budget);
            let mode = match semantics {
                Semantics::Static => Mode::Static,
                Semantics::Dynamic => Mode::Dynamic,
            };
            let outcomes = oracle::enumerate_outcomes_seq(&w.instance, &ps, &u, mode, bound.pin())?;
            let doc = serde_json::json!({
                "format": json::FORMAT,
                "kind": "oracle-outcomes",
                "count": outcomes.len(),
                "outcomes": outcomes
                    .iter()
                    .map(json::instance_document)
                    .collect::<Vec<_>>(),
            });
            emit!("{}", json::to_string(&doc));
            Ok(EXIT_OK)
        }
        OracleCommand::Certain {
            common,
            seq,
            bound,
            goal,
            semantics,
        } => {
            let w = load(&common.file)?;
            let ps: Vec<Procedure> = resolve_sequence(&w, &seq.seq)?
                .into_iter()
                .cloned()
                .collect();
            let q = goal_query(&w, &goal)?;
            let u = bound.build(&w.instance, budget);
            let mode = match semantics {
                Semantics::Static => Mode::Static,
                Semantics::Dynamic => Mode::Dynamic,
            };
            let answer = oracle::oracle_certain(&w.instance, &ps, &u, &q, mode, bound.pin())?;
            if answer.vacuous {
                emit!("VACUOUS (empty bounded outcome set)");
            }
            let (line, code) = yes_no(answer.value);
            emit!("{line}");
            Ok(code)
        }
        OracleCommand::Entails {
            common,
            seq,
            bound,
            goal,
            semantics,
        } => {
            let w = load(&common.file)?;
            let ps: Vec<Procedure> = resolve_sequence(&w, &seq.seq)?
                .into_iter()
                .cloned()
                .collect();
            let d = goal_constraint(&w, &goal)?;
            let u = bound.build(&w.instance, budget);
            let mode = match semantics {
                Semantics::Static => Mode::Static,
                Semantics::Dynamic => Mode::Dynamic,
            };
            let outcomes = oracle::enumerate_outcomes_seq(&w.instance, &ps, &u, mode, bound.pin())?;
            let answer = oracle::oracle_entails(&outcomes, &d);
            if answer.vacuous {
                emit!("VACUOUS (empty bounded outcome set)");
            }
            let (line, code) = yes_no(answer.value);
            emit!("{line}");
            Ok(code)
        }
    }
}
