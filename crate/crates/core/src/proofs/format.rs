//! The JSON document format of derivations.
//!
//! Trees are written in the concrete syntax, substitutions as objects from
//! variable names to trees, and steps as objects tagged by `rule`. Writing a
//! parsed document reproduces it byte for byte when it was written by
//! [`to_json`].

use std::collections::BTreeMap;
use std::path::Path as FsPath;

use serde::{Deserialize, Serialize};

use super::{Assumption, Conclusion, Derivation, Direction, Relation, Step, Subst};
use crate::effect::{get_effect, EffectError, EffectSpec, Params};
use crate::syntax::{parse_term, print_term, ParseError};
use crate::tree::{ExcName, Term, Var};

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("malformed derivation document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("in tree `{text}`: {error}")]
    Term { text: String, error: ParseError },
    #[error("`{0}` is not a variable name")]
    BadVar(String),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamsDoc {
    store_size: u32,
    exceptions: Vec<String>,
    grid: u32,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConclusionDoc {
    lhs: String,
    relation: RelationDoc,
    rhs: String,
}

#[derive(Serialize, Deserialize, Clone, Copy)]
#[serde(rename_all = "snake_case")]
enum RelationDoc {
    Leq,
    Eq,
}

#[derive(Serialize, Deserialize, Clone, Copy)]
#[serde(rename_all = "snake_case")]
enum DirectionDoc {
    Forward,
    Backward,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AssumptionDoc {
    label: String,
    lhs: String,
    rhs: String,
}

fn is_empty_path(p: &[usize]) -> bool {
    p.is_empty()
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
enum StepDoc {
    Refl,
    Axiom {
        name: String,
        subst: BTreeMap<String, String>,
        direction: DirectionDoc,
        #[serde(default, skip_serializing_if = "is_empty_path")]
        at: Vec<usize>,
        to: String,
    },
    Assumption {
        label: String,
        subst: BTreeMap<String, String>,
        #[serde(default, skip_serializing_if = "is_empty_path")]
        at: Vec<usize>,
        to: String,
    },
    Order {
        to: String,
    },
    Congruence {
        at: Vec<usize>,
        steps: Vec<StepDoc>,
        to: String,
    },
    Substitution {
        subst: BTreeMap<String, String>,
        lhs: String,
        rhs: String,
        steps: Vec<StepDoc>,
        to: String,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DerivationDoc {
    effect: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    params: Option<ParamsDoc>,
    conclusion: ConclusionDoc,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    assumptions: Vec<AssumptionDoc>,
    steps: Vec<StepDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    converse_steps: Vec<StepDoc>,
}

fn term(text: &str) -> Result<Term, FormatError> {
    parse_term(text, None).map_err(|error| FormatError::Term { text: text.to_string(), error })
}

fn var(name: &str) -> Result<Var, FormatError> {
    match term(name) {
        Ok(crate::tree::Tree::Leaf(v)) => Ok(v),
        _ => Err(FormatError::BadVar(name.to_string())),
    }
}

fn subst_from(doc: &BTreeMap<String, String>) -> Result<Subst, FormatError> {
    doc.iter().map(|(k, v)| Ok((var(k)?, term(v)?))).collect()
}

fn subst_to(s: &Subst) -> BTreeMap<String, String> {
    s.iter().map(|(k, v)| (k.to_string(), print_term(v))).collect()
}

fn step_from(doc: &StepDoc) -> Result<Step, FormatError> {
    Ok(match doc {
        StepDoc::Refl => Step::Refl,
        StepDoc::Axiom { name, subst, direction, at, to } => Step::Axiom {
            name: name.clone(),
            subst: subst_from(subst)?,
            direction: match direction {
                DirectionDoc::Forward => Direction::Forward,
                DirectionDoc::Backward => Direction::Backward,
            },
            at: at.clone(),
            to: term(to)?,
        },
        StepDoc::Assumption { label, subst, at, to } => {
            Step::Assumption { label: label.clone(), subst: subst_from(subst)?, at: at.clone(), to: term(to)? }
        }
        StepDoc::Order { to } => Step::Order { to: term(to)? },
        StepDoc::Congruence { at, steps, to } => Step::Congruence {
            at: at.clone(),
            steps: steps.iter().map(step_from).collect::<Result<_, _>>()?,
            to: term(to)?,
        },
        StepDoc::Substitution { subst, lhs, rhs, steps, to } => Step::Substitution {
            subst: subst_from(subst)?,
            lhs: term(lhs)?,
            rhs: term(rhs)?,
            steps: steps.iter().map(step_from).collect::<Result<_, _>>()?,
            to: term(to)?,
        },
    })
}

fn step_to(s: &Step) -> StepDoc {
    match s {
        Step::Refl => StepDoc::Refl,
        Step::Axiom { name, subst, direction, at, to } => StepDoc::Axiom {
            name: name.clone(),
            subst: subst_to(subst),
            direction: match direction {
                Direction::Forward => DirectionDoc::Forward,
                Direction::Backward => DirectionDoc::Backward,
            },
            at: at.clone(),
            to: print_term(to),
        },
        Step::Assumption { label, subst, at, to } => {
            StepDoc::Assumption { label: label.clone(), subst: subst_to(subst), at: at.clone(), to: print_term(to) }
        }
        Step::Order { to } => StepDoc::Order { to: print_term(to) },
        Step::Congruence { at, steps, to } => {
            StepDoc::Congruence { at: at.clone(), steps: steps.iter().map(step_to).collect(), to: print_term(to) }
        }
        Step::Substitution { subst, lhs, rhs, steps, to } => StepDoc::Substitution {
            subst: subst_to(subst),
            lhs: print_term(lhs),
            rhs: print_term(rhs),
            steps: steps.iter().map(step_to).collect(),
            to: print_term(to),
        },
    }
}

pub fn from_json(text: &str) -> Result<Derivation, FormatError> {
    let doc: DerivationDoc = serde_json::from_str(text)?;
    Ok(Derivation {
        effect: doc.effect,
        params: doc.params.map(|p| Params {
            store_size: p.store_size,
            exceptions: p.exceptions.iter().map(|e| ExcName::new(e)).collect(),
            grid: p.grid,
        }),
        conclusion: Conclusion {
            lhs: term(&doc.conclusion.lhs)?,
            rhs: term(&doc.conclusion.rhs)?,
            relation: match doc.conclusion.relation {
                RelationDoc::Leq => Relation::Leq,
                RelationDoc::Eq => Relation::Eq,
            },
        },
        assumptions: doc
            .assumptions
            .iter()
            .map(|a| Ok(Assumption { label: a.label.clone(), lhs: term(&a.lhs)?, rhs: term(&a.rhs)? }))
            .collect::<Result<_, FormatError>>()?,
        steps: doc.steps.iter().map(step_from).collect::<Result<_, _>>()?,
        converse_steps: doc.converse_steps.iter().map(step_from).collect::<Result<_, _>>()?,
    })
}

/// The canonical document text, ending in a newline.
pub fn to_json(d: &Derivation) -> String {
    let doc = DerivationDoc {
        effect: d.effect.clone(),
        params: d.params.as_ref().map(|p| ParamsDoc {
            store_size: p.store_size,
            exceptions: p.exceptions.iter().map(|e| e.to_string()).collect(),
            grid: p.grid,
        }),
        conclusion: ConclusionDoc {
            lhs: print_term(&d.conclusion.lhs),
            relation: match d.conclusion.relation {
                Relation::Leq => RelationDoc::Leq,
                Relation::Eq => RelationDoc::Eq,
            },
            rhs: print_term(&d.conclusion.rhs),
        },
        assumptions: d
            .assumptions
            .iter()
            .map(|a| AssumptionDoc { label: a.label.clone(), lhs: print_term(&a.lhs), rhs: print_term(&a.rhs) })
            .collect(),
        steps: d.steps.iter().map(step_to).collect(),
        converse_steps: d.converse_steps.iter().map(step_to).collect(),
    };
    let mut out = serde_json::to_string_pretty(&doc).expect("documents always serialize");
    out.push('\n');
    out
}

pub fn load(path: &FsPath) -> Result<Derivation, FormatError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| FormatError::Io { path: path.display().to_string(), message: e.to_string() })?;
    from_json(&text)
}

/// The effect a derivation is stated in, with its parameters.
pub fn spec_for(d: &Derivation) -> Result<EffectSpec, EffectError> {
    get_effect(&d.effect, &d.params.clone().unwrap_or_default())
}

#[cfg(test)]
mod tests {
    use super::*;

    const DOC: &str = r#"{
  "effect": "nondet",
  "conclusion": {
    "lhs": "or(x0, x1)",
    "relation": "eq",
    "rhs": "or(x1, x0)"
  },
  "steps": [
    {
      "rule": "axiom",
      "name": "or-comm",
      "subst": {
        "x0": "x0",
        "x1": "x1"
      },
      "direction": "forward",
      "to": "or(x1, x0)"
    }
  ]
}
"#;

    #[test]
    fn round_trip_is_byte_exact() {
        let d = from_json(DOC).unwrap();
        assert_eq!(to_json(&d), DOC);
        let spec = spec_for(&d).unwrap();
        assert!(super::super::check_derivation(&spec, &d).is_ok());
    }

    #[test]
    fn rejects_malformed_documents() {
        assert!(matches!(from_json("{}"), Err(FormatError::Json(_))));
        let bad = DOC.replace("or(x1, x0)\"\n    }", "or(x1,\"\n    }");
        assert!(matches!(from_json(&bad), Err(FormatError::Term { .. })));
        let bad = DOC.replace("\"x1\": \"x1\"", "\"y\": \"x1\"");
        assert!(matches!(from_json(&bad), Err(FormatError::BadVar(_))));
    }
}
