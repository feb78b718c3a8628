//! The command-line front end: argument parsing, dispatch and JSON reports.
//!
//! Every command prints one report with the fields `command`, `effect`,
//! `params`, `result`, optional `witness`, `values` and `resolution`, and
//! `timings`. Timings are deterministic work counters; wall-clock time is
//! added only with `--timings`. The exit code is 0 for decided queries, 2
//! when the answer holds only up to a resolution or is undecided, and 1 for
//! usage errors.

use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value as Json};

use crate::effect::{get_effect, EffectSpec, Params};
use crate::involution::{check_involution_preservation, Involution, InvolutionConfig, Tally};
use crate::modalities::modal_leq;
use crate::proofs::{check_derivation, format as proof_format};
use crate::regular::RegularTree;
use crate::relations::{check_leq, check_single_valued_instance, distinguish, is_exact, Decision, Status};
use crate::relator::check_relator_laws;
use crate::semantics::build_quotient;
use crate::semantics::dyadic::Dyadic;
use crate::semantics::eval::{eval_bounds, eval_exact, EvalError};
use crate::semantics::value::{Assignment, ClosedTree, ExcValue, ExtNat, Nothing, Space, StateSet, Three, Value};
use crate::syntax::{parse_expr, print_regular_with, print_term};
use crate::tree::{ExcName, Term, Var};

#[derive(Parser, Debug)]
#[command(name = "effalg", about = "Decide, refute and certify inequalities between algebraic-effect expressions")]
struct Cli {
    /// Number of store states.
    #[arg(long, global = true, default_value_t = 2)]
    store_size: u32,
    /// Exception names, comma separated.
    #[arg(long, global = true, value_delimiter = ',', default_value = "e1,e2")]
    exceptions: Vec<String>,
    /// Grid resolution exponent for the combined effect.
    #[arg(long, global = true, default_value_t = 3)]
    grid: u32,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long, global = true, default_value_t = 7)]
    seed: u64,
    /// Add wall-clock time to the report.
    #[arg(long, global = true)]
    timings: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate an expression under an assignment.
    Eval {
        #[arg(long)]
        effect: String,
        /// Truncation depth bound for infinite probabilistic trees.
        #[arg(long, default_value_t = 20)]
        depth: usize,
        /// Tolerance, as a dyadic `n/2^k`.
        #[arg(long, default_value = "1/2^20")]
        eps: String,
        /// Values of variables: `x0=VAL,x1=VAL`; may be repeated.
        #[arg(long)]
        assign: Vec<String>,
        expr: String,
    },
    /// Decide `a ⊑ b`.
    Leq {
        #[arg(long)]
        effect: String,
        a: String,
        b: String,
    },
    /// Find an assignment separating two expressions.
    Distinguish {
        #[arg(long)]
        effect: String,
        a: String,
        b: String,
    },
    /// Tabulate the `{⊥, x0}` substitutions next to the full comparison.
    SingleValued {
        #[arg(long)]
        effect: String,
        a: String,
        b: String,
    },
    /// Check a derivation document.
    CheckProof { file: PathBuf },
    /// Build the quotient of closed trees.
    Quotient {
        #[arg(long)]
        effect: String,
        #[arg(long, default_value_t = 2)]
        depth: usize,
    },
    /// Check the relator laws on small carriers.
    RelatorLaws {
        #[arg(long)]
        effect: String,
        #[arg(long, default_value_t = 2)]
        carrier: usize,
        #[arg(long, default_value_t = 2)]
        depth: usize,
    },
    /// Check negation against evaluation.
    Involution {
        #[arg(long)]
        effect: String,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
    },
    /// Decide the modal preorder `a ⊑_Ω b`.
    ModalLeq {
        #[arg(long)]
        effect: String,
        a: String,
        b: String,
    },
}

/// The outcome of one command: exit code and the two output streams.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

struct Usage(String);

impl<E: std::fmt::Display> From<E> for Usage {
    fn from(e: E) -> Self {
        Usage(e.to_string())
    }
}

/// A report under construction, with its exit code.
struct Report {
    fields: Map<String, Json>,
    code: i32,
    work: usize,
}

impl Report {
    fn new(result: impl Into<Json>) -> Self {
        let mut fields = Map::new();
        fields.insert("result".into(), result.into());
        Report { fields, code: 0, work: 0 }
    }

    fn with(mut self, key: &str, value: Json) -> Self {
        self.fields.insert(key.into(), value);
        self
    }
}

/// Runs the command line `argv` (without the program name).
pub fn run_command<S: AsRef<str>>(argv: &[S]) -> Outcome {
    let args = std::iter::once("effalg").chain(argv.iter().map(|s| s.as_ref()));
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    Outcome { code: 0, stdout: text, stderr: String::new() }
                }
                _ => Outcome { code: 1, stdout: String::new(), stderr: text },
            };
        }
    };
    let start = Instant::now();
    let params = Params {
        store_size: cli.store_size,
        exceptions: cli.exceptions.iter().map(|e| ExcName::new(e)).collect(),
        grid: cli.grid,
    };
    let (name, effect, outcome) = dispatch(&cli, &params);
    let report = match outcome {
        Ok(r) => r,
        Err(Usage(msg)) => return Outcome { code: 1, stdout: String::new(), stderr: format!("error: {msg}\n") },
    };
    let mut doc = Map::new();
    doc.insert("command".into(), json!(name));
    doc.insert("effect".into(), json!(effect.as_ref().map(|s| s.name())));
    let p = effect.as_ref().map(|s| s.params.clone()).unwrap_or(params);
    doc.insert(
        "params".into(),
        json!({
            "store_size": p.store_size,
            "exceptions": p.exceptions.iter().map(|e| e.as_str().to_string()).collect::<Vec<_>>(),
            "grid": p.grid,
        }),
    );
    doc.extend(report.fields);
    let mut timings = Map::new();
    timings.insert("work".into(), json!(report.work));
    if cli.timings {
        timings.insert("wall_ms".into(), json!(start.elapsed().as_secs_f64() * 1000.0));
    }
    doc.insert("timings".into(), Json::Object(timings));
    let stdout = match cli.format {
        Format::Json => serde_json::to_string_pretty(&Json::Object(doc)).expect("reports serialize") + "\n",
        Format::Text => text_report(&doc),
    };
    Outcome { code: report.code, stdout, stderr: String::new() }
}

fn text_report(doc: &Map<String, Json>) -> String {
    let mut out = String::new();
    for (k, v) in doc {
        let v = match v {
            Json::String(s) => s.clone(),
            other => other.to_string(),
        };
        out.push_str(&format!("{k}: {v}\n"));
    }
    out
}

fn dispatch(cli: &Cli, params: &Params) -> (&'static str, Option<EffectSpec>, Result<Report, Usage>) {
    let with = |cmd, name: &str, run: &dyn Fn(&EffectSpec) -> Result<Report, Usage>| match get_effect(name, params) {
        Ok(s) => {
            let r = run(&s);
            (cmd, Some(s), r)
        }
        Err(e) => (cmd, None, Err(e.into())),
    };
    macro_rules! with_spec {
        ($cmd:expr, $effect:expr, |$s:ident| $body:expr) => {
            with($cmd, $effect, &|$s: &EffectSpec| -> Result<Report, Usage> { $body })
        };
    }
    match &cli.command {
        Command::Eval { effect, depth, eps, assign, expr } => {
            with_spec!("eval", effect, |s| cmd_eval(s, *depth, eps, assign, expr))
        }
        Command::Leq { effect, a, b } => with_spec!("leq", effect, |s| {
            let (a, b) = (expr(s, a, 1)?, expr(s, b, 2)?);
            Ok(decision_report(s, check_leq(s, &a, &b)?))
        }),
        Command::ModalLeq { effect, a, b } => with_spec!("modal-leq", effect, |s| {
            let (a, b) = (expr(s, a, 1)?, expr(s, b, 2)?);
            Ok(decision_report(s, modal_leq(s, &a, &b)?))
        }),
        Command::Distinguish { effect, a, b } => with_spec!("distinguish", effect, |s| {
            let (a, b) = (expr(s, a, 1)?, expr(s, b, 2)?);
            Ok(match distinguish(s, &a, &b)? {
                Some(d) => Report::new("distinguished").with("witness", assignment_json(&d.witness)).with(
                    "values",
                    json!({
                        "lhs": value_json(&d.values.0),
                        "rhs": value_json(&d.values.1),
                        "direction": if d.forward { "lhs_not_below_rhs" } else { "rhs_not_below_lhs" },
                    }),
                ),
                None if is_exact(s) => Report::new("indistinguishable"),
                None => {
                    let mut r = Report::new("indistinguishable_at_resolution")
                        .with("resolution", json!({"grid": s.params.grid}));
                    r.code = 2;
                    r
                }
            })
        }),
        Command::SingleValued { effect, a, b } => with_spec!("single-valued", effect, |s| cmd_single_valued(s, a, b)),
        Command::CheckProof { file } => {
            let d = match proof_format::load(file) {
                Ok(d) => d,
                Err(e) => return ("check-proof", None, Err(e.into())),
            };
            let s = match proof_format::spec_for(&d) {
                Ok(s) => s,
                Err(e) => return ("check-proof", None, Err(e.into())),
            };
            let r = match check_derivation(&s, &d) {
                Ok(c) => Report::new("ok").with(
                    "values",
                    json!({
                        "conclusion": format!("{} {} {}", print_term(&d.conclusion.lhs), c.relation, print_term(&d.conclusion.rhs)),
                        "symmetric": c.symmetric,
                        "uses_assumptions": c.uses_assumptions,
                        "steps": c.steps,
                    }),
                ),
                Err(e) => Report::new("rejected").with("values", json!({"step": e.index, "reason": e.reason.to_string()})),
            };
            ("check-proof", Some(s), Ok(r))
        }
        Command::Quotient { effect, depth } => with_spec!("quotient", effect, |s| {
            let table = build_quotient(s, *depth)?;
            let classes: Vec<Json> = table
                .classes
                .iter()
                .map(|c| {
                    let v = crate::semantics::eval_term(s, &c.canonical, &Assignment::new());
                    json!({
                        "canonical": print_term(&c.canonical),
                        "members": c.members.len(),
                        "value": v.map(|v| value_json(&v)).unwrap_or(Json::Null),
                    })
                })
                .collect();
            let order: Vec<Vec<u8>> = table.order.iter().map(|row| row.iter().map(|&b| b as u8).collect()).collect();
            let mut r = Report::new(json!(table.len())).with("values", json!({"classes": classes, "order": order}));
            r.work = table.classes.iter().map(|c| c.members.len()).sum();
            Ok(r)
        }),
        Command::RelatorLaws { effect, carrier, depth } => with_spec!("relator-laws", effect, |s| {
            let rep = check_relator_laws(s, *carrier, *depth)?;
            let violations: Vec<Json> = rep
                .violations
                .iter()
                .take(20)
                .map(|v| json!({"law": format!("{:?}", v.law), "detail": v.detail}))
                .collect();
            let mut r = Report::new(if rep.passed() { "ok" } else { "violations" }).with(
                "values",
                json!({
                    "checked": {
                        "identity": rep.checked[0],
                        "composition": rep.checked[1],
                        "monotonicity": rep.checked[2],
                        "reindexing": rep.checked[3],
                    },
                    "violations": rep.violations.len(),
                    "examples": violations,
                    "trees": rep.trees,
                    "classes": rep.classes,
                }),
            );
            r.work = rep.checked.iter().sum();
            Ok(r)
        }),
        Command::Involution { effect, samples } => with_spec!("involution", effect, |s| {
            let cfg = InvolutionConfig { samples: *samples, seed: cli.seed, ..InvolutionConfig::default() };
            let rep = check_involution_preservation(s, &Involution::identity(), &cfg)?;
            let tally = |t: &Tally| json!({"checked": t.checked, "failed": t.failed, "examples": t.examples});
            let ok = rep.double_negation.passed()
                && rep.tree_order.passed()
                && rep.order_reversal.as_ref().is_none_or(Tally::passed)
                && rep.values.as_ref().is_none_or(Tally::passed);
            let mut r = Report::new(if ok { "ok" } else { "failures" }).with(
                "values",
                json!({
                    "double_negation": tally(&rep.double_negation),
                    "tree_order": tally(&rep.tree_order),
                    "order_reversal": rep.order_reversal.as_ref().map(tally),
                    "value_involution": rep.values.as_ref().map(tally),
                    "impossibility": rep.impossibility,
                }),
            );
            if let Some(w) = &rep.regular_witness {
                r = r.with(
                    "witness",
                    json!({
                        "tree": crate::syntax::print_regular(&w.tree),
                        "value": value_json(&w.value),
                        "negated_value": value_json(&w.negated_value),
                        "reflected_value": value_json(&w.reflected),
                    }),
                );
            }
            r.work = rep.double_negation.checked;
            Ok(r)
        }),
    }
}

/// Parses the `n`-th expression argument against the signature of `spec`.
fn expr(spec: &EffectSpec, text: &str, n: usize) -> Result<RegularTree<Var>, Usage> {
    parse_expr(text, Some(spec)).map_err(|e| Usage(format!("in expression {n} `{text}`: {e}")))
}

fn cmd_eval(spec: &EffectSpec, depth: usize, eps: &str, assign: &[String], text: &str) -> Result<Report, Usage> {
    let t = expr(spec, text, 1)?;
    let eps: Dyadic = eps.parse()?;
    let space = Space::of(spec);
    let mut h = Assignment::new();
    for item in assign.iter().flat_map(|a| split_top_level(a)) {
        let (var, val) = item.split_once('=').ok_or_else(|| Usage(format!("assignment `{item}` is not VAR=VALUE")))?;
        let var = match parse_expr(var.trim(), None) {
            Ok(e) => match e.as_finite() {
                Some(crate::tree::Tree::Leaf(v)) => v,
                _ => return Err(Usage(format!("`{var}` is not a variable"))),
            },
            Err(e) => return Err(Usage(format!("`{var}`: {e}"))),
        };
        h.insert(var, parse_value(spec, &space, val.trim())?);
    }
    match eval_exact(spec, &t, &h) {
        Ok(v) => Ok(Report::new("exact").with("values", json!({"value": value_json(&v)}))),
        Err(EvalError::UseBounds(_)) => {
            let b = eval_bounds(spec, &t, &h, depth, &eps)?;
            let mut r = Report::new(if b.converged { "bounds" } else { "undecided" })
                .with("values", json!({"lower": value_json(&b.lower), "upper": value_json(&b.upper)}))
                .with("resolution", json!({"depth": b.depth, "eps": eps.to_string(), "converged": b.converged}));
            r.work = b.depth;
            if !b.converged {
                r.code = 2;
            }
            Ok(r)
        }
        Err(e) => Err(e.into()),
    }
}

fn cmd_single_valued(spec: &EffectSpec, a: &str, b: &str) -> Result<Report, Usage> {
    let finite = |text: &str, n| -> Result<Term, Usage> {
        expr(spec, text, n)?.as_finite().ok_or_else(|| Usage(format!("expression {n} must be finite")))
    };
    let (a, b) = (finite(a, 1)?, finite(b, 2)?);
    let rep = check_single_valued_instance(spec, &a, &b)?;
    let rows: Vec<Json> = rep
        .rows
        .iter()
        .map(|row| {
            let subst: Map<String, Json> =
                row.substitution.iter().map(|(v, s)| (v.to_string(), json!(if *s { "x0" } else { "bot" }))).collect();
            json!({
                "substitution": subst,
                "lhs": print_term(&row.lhs),
                "rhs": print_term(&row.rhs),
                "forward": row.forward.status.name(),
                "backward": row.backward.status.name(),
            })
        })
        .collect();
    let result = if rep.is_failure() {
        "not_single_valued"
    } else if rep.rows_hold() {
        "consistent"
    } else {
        "rows_refuted"
    };
    let mut values = json!({
        "rows": rows,
        "rows_hold": rep.rows_hold(),
        "full": rep.full.status.name(),
        "full_converse": rep.full_converse.status.name(),
    });
    let refutation = [(&rep.full, "lhs_not_below_rhs"), (&rep.full_converse, "rhs_not_below_lhs")]
        .into_iter()
        .find(|(d, _)| d.status.is_refuted());
    let mut witness = None;
    if let Some((d, direction)) = refutation {
        if let (Some(w), Some((va, vb))) = (&d.witness, &d.values) {
            witness = Some(assignment_json(w));
            values["refutation"] = json!({"lhs": value_json(va), "rhs": value_json(vb), "direction": direction});
        }
    }
    let mut r = Report::new(result);
    if let Some(w) = witness {
        r = r.with("witness", w);
    }
    r = r.with("values", values);
    r.work = rep.rows.iter().map(|row| row.forward.work + row.backward.work).sum::<usize>()
        + rep.full.work
        + rep.full_converse.work;
    let decisions =
        rep.rows.iter().flat_map(|row| [&row.forward, &row.backward]).chain([&rep.full, &rep.full_converse]);
    let caveat = decisions.filter_map(|d| match d.status {
        Status::HoldsAtResolution(k) => Some(k),
        _ => None,
    });
    if let Some(k) = caveat.max() {
        r = r.with("resolution", json!({"grid": k}));
        if refutation.is_none() {
            r.code = 2;
        }
    }
    Ok(r)
}

fn decision_report(spec: &EffectSpec, d: Decision) -> Report {
    let mut r = Report::new(d.status.name());
    if let Some(w) = &d.witness {
        r = r.with("witness", assignment_json(w));
    }
    if let Some((va, vb)) = &d.values {
        r = r.with("values", json!({"lhs": value_json(va), "rhs": value_json(vb)}));
    }
    if let Status::HoldsAtResolution(k) = d.status {
        let key = if matches!(spec.strategy, crate::effect::LeqStrategy::Grid(_)) { "grid" } else { "eps_bits" };
        r = r.with("resolution", json!({ key: k }));
        r.code = 2;
    }
    r.work = d.work;
    r
}

/// Splits `a,b` at commas outside brackets.
fn split_top_level(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    for c in s.chars() {
        match c {
            '(' | '[' | '{' => depth += 1,
            ')' | ']' | '}' => depth -= 1,
            ',' if depth == 0 => {
                out.push(std::mem::take(&mut cur));
                continue;
            }
            _ => {}
        }
        cur.push(c);
    }
    if !cur.trim().is_empty() {
        out.push(cur);
    }
    out
}

/// Parses a value of the space of `spec` from its report notation.
fn parse_value(spec: &EffectSpec, space: &Space, text: &str) -> Result<Value, Usage> {
    let bad = || Usage(format!("`{text}` is not a value of the {} space", space.name()));
    let inner = |open: char, close: char| text.strip_prefix(open).and_then(|t| t.strip_suffix(close));
    let v = match space {
        Space::Three => Value::Three(match text {
            "bot" => Three::Bottom,
            "diamond" => Three::Diamond,
            "top" => Three::Top,
            _ => return Err(bad()),
        }),
        Space::Prob => Value::Prob(text.parse()?),
        Space::States(k) => {
            let body = inner('{', '}').or_else(|| inner('[', ']')).ok_or_else(bad)?;
            let states = body
                .split(',')
                .filter(|s| !s.trim().is_empty())
                .map(|s| s.trim().parse::<u32>().map_err(|_| bad()))
                .collect::<Result<Vec<_>, _>>()?;
            if states.iter().any(|&s| s >= *k) {
                return Err(bad());
            }
            Value::States(StateSet::from_states(*k, states))
        }
        Space::Exc(_) => Value::Exc(match text {
            "bot" => ExcValue::Bottom,
            "top" => ExcValue::Top,
            _ => {
                let name = text.strip_prefix("raise[").and_then(|t| t.strip_suffix(']')).ok_or_else(bad)?;
                ExcValue::Raise(ExcName::new(name))
            }
        }),
        Space::Cost => Value::Cost(match text {
            "inf" => ExtNat::Inf,
            n => ExtNat::Fin(n.parse().map_err(|_| bad())?),
        }),
        Space::Tree => {
            let t = parse_expr(text, Some(spec))?;
            if !t.vars().is_empty() {
                return Err(Usage(format!("tree value `{text}` must be closed")));
            }
            let closed: RegularTree<Nothing> = t.map(&mut |_| unreachable!("closed"));
            Value::Tree(closed.graph().canonical())
        }
        Space::Pair => {
            let body = inner('(', ')').or_else(|| inner('[', ']')).ok_or_else(bad)?;
            let (lo, hi) = body.split_once(',').ok_or_else(bad)?;
            let (lo, hi): (Dyadic, Dyadic) = (lo.trim().parse()?, hi.trim().parse()?);
            Value::Pair(lo, hi)
        }
    };
    space.check(&v)?;
    Ok(v)
}

fn closed_tree_text(g: &ClosedTree) -> String {
    print_regular_with(&g.to_regular(), &mut |n: &Nothing, _| match *n {})
}

/// The report notation of a value.
pub fn value_json(v: &Value) -> Json {
    match v {
        Value::Three(t) => json!(t.to_string()),
        Value::Prob(p) => json!(p.to_string()),
        Value::States(s) => json!(s.states()),
        Value::Exc(e) => json!(e.to_string()),
        Value::Cost(ExtNat::Fin(n)) => json!(n),
        Value::Cost(ExtNat::Inf) => json!("inf"),
        Value::Tree(g) => json!(closed_tree_text(g)),
        Value::Pair(lo, hi) => json!([lo.to_string(), hi.to_string()]),
    }
}

fn assignment_json(h: &Assignment) -> Json {
    Json::Object(h.iter().map(|(x, v)| (x.to_string(), value_json(v))).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn leq_report() {
        let out = run_command(&["leq", "--effect", "nondet", "bot", "or(top,bot)"]);
        assert_eq!(out.code, 0, "{}", out.stderr);
        let doc: Json = serde_json::from_str(&out.stdout).unwrap();
        assert_eq!(doc["result"], "holds");
        assert_eq!(doc["command"], "leq");
        let keys: Vec<&str> = doc.as_object().unwrap().keys().map(|k| k.as_str()).collect();
        assert_eq!(keys, ["command", "effect", "params", "result", "timings"]);
    }

    #[test]
    fn refutation_carries_witness() {
        let out = run_command(&["leq", "--effect", "nondet", "x0", "or(x0,x0)"]);
        let doc: Json = serde_json::from_str(&out.stdout).unwrap();
        assert_eq!(doc["result"], "holds");
        let out = run_command(&["leq", "--effect", "nondet", "top", "or(top,bot)"]);
        let doc: Json = serde_json::from_str(&out.stdout).unwrap();
        assert_eq!(doc["result"], "refuted");
        assert_eq!(doc["values"], json!({"lhs": "top", "rhs": "diamond"}));
    }

    #[test]
    fn eval_with_assignment_and_bounds() {
        let out = run_command(&["eval", "--effect", "store", "--assign", "x0={1}", "upd[1](x0)"]);
        let doc: Json = serde_json::from_str(&out.stdout).unwrap();
        assert_eq!(doc["values"]["value"], json!([0, 1]));
        let out = run_command(&["eval", "--effect", "prob", "rec s. por(top, s)"]);
        assert_eq!(out.code, 0);
        let doc: Json = serde_json::from_str(&out.stdout).unwrap();
        assert_eq!(doc["result"], "bounds");
        assert_eq!(doc["values"]["upper"], "1/2^0");
        let out = run_command(&["eval", "--effect", "prob", "--depth", "3", "rec s. por(top, s)"]);
        assert_eq!(out.code, 2);
    }

    #[test]
    fn usage_errors() {
        let out = run_command(&["leq", "--effect", "nondet", "or(top)", "bot"]);
        assert_eq!(out.code, 1);
        assert!(out.stderr.contains("line 1, column"), "{}", out.stderr);
        assert_eq!(run_command(&["leq", "--effect", "bogus", "bot", "top"]).code, 1);
        assert_eq!(run_command(&["frobnicate"]).code, 1);
        let out = run_command(&["eval", "--effect", "nondet", "--assign", "x0=purple", "x0"]);
        assert_eq!(out.code, 1);
    }

    #[test]
    fn text_format_and_timings() {
        let out = run_command(&["--format", "text", "leq", "--effect", "cost", "tick(x0)", "x0"]);
        assert!(out.stdout.contains("result: holds"), "{}", out.stdout);
        let out = run_command(&["leq", "--effect", "cost", "--timings", "tick(x0)", "x0"]);
        let doc: Json = serde_json::from_str(&out.stdout).unwrap();
        assert!(doc["timings"]["wall_ms"].is_number());
    }

    #[test]
    fn split_respects_brackets() {
        assert_eq!(split_top_level("x0={0,1},x1=(1/2,1)"), ["x0={0,1}", "x1=(1/2,1)"]);
    }
}
