//! Derivations in the axiomatic preorder and their checker.
//!
//! A derivation is a chain of steps starting at the left side of its
//! conclusion. Each step rewrites the current tree into the tree recorded in
//! its `to` field and is justified by an axiom instance, an assumption, the
//! tree order, a congruence (a sub-chain at a position) or a substitution
//! instance of a sub-chain. Chaining is transitivity. An equational
//! conclusion either needs every step to be symmetric or a second chain
//! from the right side back to the left.

pub mod format;
pub mod saturate;

use std::collections::BTreeMap;
use std::fmt;

use crate::effect::{instantiate_finite, EffectError, EffectSpec};
use crate::syntax::print_term;
use crate::tree::{Path, Term, Tree, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Relation {
    Leq,
    Eq,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Direction {
    Forward,
    Backward,
}

/// An externally justified inequation `lhs ≤ rhs`, schematic in its variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Assumption {
    pub label: String,
    pub lhs: Term,
    pub rhs: Term,
}

pub type Subst = BTreeMap<Var, Term>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Step {
    /// The current tree is related to itself.
    Refl,
    /// Rewrite the subtree at `at` with an axiom instance.
    Axiom { name: String, subst: Subst, direction: Direction, at: Path, to: Term },
    /// Rewrite the subtree at `at` with an assumption instance, left to right.
    Assumption { label: String, subst: Subst, at: Path, to: Term },
    /// The current tree is below `to` in the tree order.
    Order { to: Term },
    /// A sub-chain on the subtree at `at`.
    Congruence { at: Path, steps: Vec<Step>, to: Term },
    /// A chain proving `lhs ⊑ rhs`, used at the instance `subst`.
    Substitution { subst: Subst, lhs: Term, rhs: Term, steps: Vec<Step>, to: Term },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Conclusion {
    pub lhs: Term,
    pub rhs: Term,
    pub relation: Relation,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Derivation {
    pub effect: String,
    pub params: Option<crate::effect::Params>,
    pub conclusion: Conclusion,
    pub assumptions: Vec<Assumption>,
    pub steps: Vec<Step>,
    /// A chain from the right side back to the left, for equations.
    pub converse_steps: Vec<Step>,
}

/// Why a step was rejected.
#[derive(Clone, Debug, thiserror::Error, PartialEq, Eq)]
pub enum Reason {
    #[error(transparent)]
    Effect(#[from] EffectError),
    #[error("axiom `{0}` is a recursive pattern and cannot be used in a finite derivation")]
    RecursiveAxiom(String),
    #[error("binding for {0} is not a metavariable of the rule")]
    ExtraBinding(Var),
    #[error("inequation `{0}` cannot be used right to left")]
    InequationBackwards(String),
    #[error("no assumption labelled `{0}`")]
    UnknownAssumption(String),
    #[error("assumption `{label}` needs a binding for {var}")]
    MissingBinding { label: String, var: Var },
    #[error("path {0:?} leaves the tree")]
    BadPath(Path),
    #[error("the rule expects {expected} but finds {found}")]
    NoMatch { expected: String, found: String },
    #[error("the step produces {produced} but records {recorded}")]
    WrongResult { produced: String, recorded: String },
    #[error("order violation: {from} is not below {to}")]
    OrderViolation { from: String, to: String },
    #[error("the sub-chain ends at {end}, not at {expected}")]
    SubChainEnd { end: String, expected: String },
    #[error("{0} is not well formed in the {1} signature")]
    IllFormed(String, &'static str),
    #[error("the chain ends at {end}, not at the conclusion {expected}")]
    ChainEnd { end: String, expected: String },
    #[error("an equation needs symmetric steps or a converse chain")]
    NotSymmetric,
    #[error("a converse chain is only allowed for equations")]
    UnexpectedConverse,
    #[error("in sub-step {index}: {reason}")]
    Nested { index: usize, reason: Box<Reason> },
}

/// A rejected derivation. Converse steps are numbered after the forward steps.
#[derive(Clone, Debug, thiserror::Error, PartialEq, Eq)]
#[error("step {index}: {reason}")]
pub struct ProofError {
    pub index: usize,
    pub reason: Reason,
}

/// What an accepted derivation establishes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Checked {
    pub relation: Relation,
    /// Every forward step is an equation, so the converse also holds.
    pub symmetric: bool,
    pub uses_assumptions: bool,
    pub steps: usize,
}

fn show(t: &Term) -> String {
    print_term(t)
}

fn apply_subst(t: &Term, s: &Subst) -> Term {
    t.bind(&mut |v| s.get(v).cloned().unwrap_or(Tree::Leaf(*v)))
}

struct Checker<'a> {
    spec: &'a EffectSpec,
    assumptions: &'a [Assumption],
    used_assumption: bool,
}

impl Checker<'_> {
    fn well_formed(&self, t: &Term) -> Result<(), Reason> {
        if self.spec.signature.admits(t) {
            Ok(())
        } else {
            Err(Reason::IllFormed(show(t), self.spec.name()))
        }
    }

    fn subst_well_formed(&self, s: &Subst) -> Result<(), Reason> {
        s.values().try_for_each(|t| self.well_formed(t))
    }

    fn rewrite_at(&self, cur: &Term, at: &Path, from: &Term, into: &Term, to: &Term) -> Result<Term, Reason> {
        let sub = cur.subtree(at).ok_or_else(|| Reason::BadPath(at.clone()))?;
        if sub != from {
            return Err(Reason::NoMatch { expected: show(from), found: show(sub) });
        }
        let next = cur.replace(at, into.clone()).expect("path checked above");
        if next != *to {
            return Err(Reason::WrongResult { produced: show(&next), recorded: show(to) });
        }
        Ok(next)
    }

    /// Checks one step from `cur`; returns the next tree and whether the step is symmetric.
    fn step(&mut self, cur: &Term, step: &Step) -> Result<(Term, bool), Reason> {
        match step {
            Step::Refl => Ok((cur.clone(), true)),
            Step::Axiom { name, subst, direction, at, to } => {
                self.subst_well_formed(subst)?;
                self.well_formed(to)?;
                let ax = self.spec.axiom(name)?;
                if let Some(v) = subst.keys().find(|v| !ax.metavars.contains(v)) {
                    return Err(Reason::ExtraBinding(*v));
                }
                let (l, r) = instantiate_finite(ax, subst)?.ok_or_else(|| Reason::RecursiveAxiom(name.clone()))?;
                let (from, into) = match direction {
                    Direction::Forward => (l, r),
                    Direction::Backward if ax.is_equation() => (r, l),
                    Direction::Backward => return Err(Reason::InequationBackwards(name.clone())),
                };
                Ok((self.rewrite_at(cur, at, &from, &into, to)?, ax.is_equation()))
            }
            Step::Assumption { label, subst, at, to } => {
                self.subst_well_formed(subst)?;
                self.well_formed(to)?;
                let a = self
                    .assumptions
                    .iter()
                    .find(|a| a.label == *label)
                    .ok_or_else(|| Reason::UnknownAssumption(label.clone()))?;
                let vars = a.lhs.vars().union(&a.rhs.vars()).copied().collect::<Vec<_>>();
                if let Some(v) = vars.iter().find(|v| !subst.contains_key(v)) {
                    return Err(Reason::MissingBinding { label: label.clone(), var: *v });
                }
                if let Some(v) = subst.keys().find(|v| !vars.contains(v)) {
                    return Err(Reason::ExtraBinding(*v));
                }
                self.used_assumption = true;
                let (from, into) = (apply_subst(&a.lhs, subst), apply_subst(&a.rhs, subst));
                Ok((self.rewrite_at(cur, at, &from, &into, to)?, false))
            }
            Step::Order { to } => {
                self.well_formed(to)?;
                if cur.leq(to) {
                    Ok((to.clone(), cur == to))
                } else {
                    Err(Reason::OrderViolation { from: show(cur), to: show(to) })
                }
            }
            Step::Congruence { at, steps, to } => {
                self.well_formed(to)?;
                let sub = cur.subtree(at).ok_or_else(|| Reason::BadPath(at.clone()))?;
                let (end, sym) = self.chain(sub, steps)?;
                let next = cur.replace(at, end).expect("path checked above");
                if next != *to {
                    return Err(Reason::WrongResult { produced: show(&next), recorded: show(to) });
                }
                Ok((next, sym))
            }
            Step::Substitution { subst, lhs, rhs, steps, to } => {
                self.subst_well_formed(subst)?;
                self.well_formed(lhs)?;
                self.well_formed(rhs)?;
                self.well_formed(to)?;
                let (end, sym) = self.chain(lhs, steps)?;
                if end != *rhs {
                    return Err(Reason::SubChainEnd { end: show(&end), expected: show(rhs) });
                }
                let from = apply_subst(lhs, subst);
                if *cur != from {
                    return Err(Reason::NoMatch { expected: show(&from), found: show(cur) });
                }
                let next = apply_subst(rhs, subst);
                if next != *to {
                    return Err(Reason::WrongResult { produced: show(&next), recorded: show(to) });
                }
                Ok((next, sym))
            }
        }
    }

    fn chain(&mut self, start: &Term, steps: &[Step]) -> Result<(Term, bool), Reason> {
        let mut cur = start.clone();
        let mut sym = true;
        for (index, s) in steps.iter().enumerate() {
            let (next, s_sym) =
                self.step(&cur, s).map_err(|reason| Reason::Nested { index, reason: Box::new(reason) })?;
            cur = next;
            sym &= s_sym;
        }
        Ok((cur, sym))
    }

    fn top_chain(&mut self, start: &Term, steps: &[Step], offset: usize) -> Result<(Term, bool), ProofError> {
        let mut cur = start.clone();
        let mut sym = true;
        for (i, s) in steps.iter().enumerate() {
            let (next, s_sym) = self.step(&cur, s).map_err(|reason| ProofError { index: offset + i, reason })?;
            cur = next;
            sym &= s_sym;
        }
        Ok((cur, sym))
    }
}

/// Checks a derivation against the axioms of `spec` and its own assumptions.
pub fn check_derivation(spec: &EffectSpec, d: &Derivation) -> Result<Checked, ProofError> {
    let mut c = Checker { spec, assumptions: &d.assumptions, used_assumption: false };
    let n = d.steps.len();
    let at_end = |reason| ProofError { index: n, reason };
    let concl = &d.conclusion;
    for t in [&concl.lhs, &concl.rhs] {
        c.well_formed(t).map_err(at_end)?;
    }
    for a in &d.assumptions {
        for t in [&a.lhs, &a.rhs] {
            c.well_formed(t).map_err(at_end)?;
        }
    }
    let (end, symmetric) = c.top_chain(&concl.lhs, &d.steps, 0)?;
    if end != concl.rhs {
        return Err(at_end(Reason::ChainEnd { end: show(&end), expected: show(&concl.rhs) }));
    }
    match concl.relation {
        Relation::Leq if !d.converse_steps.is_empty() => return Err(at_end(Reason::UnexpectedConverse)),
        Relation::Eq if !d.converse_steps.is_empty() => {
            let (back, _) = c.top_chain(&concl.rhs, &d.converse_steps, n)?;
            if back != concl.lhs {
                return Err(ProofError {
                    index: n + d.converse_steps.len(),
                    reason: Reason::ChainEnd { end: show(&back), expected: show(&concl.lhs) },
                });
            }
        }
        Relation::Eq if !symmetric => return Err(at_end(Reason::NotSymmetric)),
        _ => {}
    }
    Ok(Checked {
        relation: concl.relation,
        symmetric,
        uses_assumptions: c.used_assumption,
        steps: n + d.converse_steps.len(),
    })
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Leq => "leq",
            Relation::Eq => "eq",
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::effect::{get_effect, Params};
    use crate::syntax::parse_term;

    fn t(s: &str) -> Term {
        parse_term(s, None).unwrap()
    }

    fn subst(pairs: &[(u32, &str)]) -> Subst {
        pairs.iter().map(|(v, s)| (Var(*v), t(s))).collect()
    }

    fn ax(name: &str, s: &[(u32, &str)], direction: Direction, at: Path, to: &str) -> Step {
        Step::Axiom { name: name.into(), subst: subst(s), direction, at, to: t(to) }
    }

    fn derivation(effect: &str, lhs: &str, rhs: &str, relation: Relation, steps: Vec<Step>) -> Derivation {
        Derivation {
            effect: effect.into(),
            params: None,
            conclusion: Conclusion { lhs: t(lhs), rhs: t(rhs), relation },
            assumptions: Vec::new(),
            steps,
            converse_steps: Vec::new(),
        }
    }

    #[test]
    fn order_violation_is_reported() {
        let nd = get_effect("nondet", &Params::default()).unwrap();
        let d = derivation("nondet", "top", "bot", Relation::Leq, vec![Step::Order { to: t("bot") }]);
        let e = check_derivation(&nd, &d).unwrap_err();
        assert_eq!(e.index, 0);
        assert!(matches!(e.reason, Reason::OrderViolation { .. }));
    }

    #[test]
    fn nondet_commutation_inside_context() {
        let nd = get_effect("nondet", &Params::default()).unwrap();
        let d = derivation(
            "nondet",
            "or(or(x0, x1), bot)",
            "or(or(x1, x0), top)",
            Relation::Leq,
            vec![
                ax("or-comm", &[(0, "x0"), (1, "x1")], Direction::Forward, vec![0], "or(or(x1, x0), bot)"),
                Step::Order { to: t("or(or(x1, x0), top)") },
            ],
        );
        let c = check_derivation(&nd, &d).unwrap();
        assert!(!c.symmetric);

        let mut bad = d.clone();
        bad.conclusion.relation = Relation::Eq;
        assert_eq!(check_derivation(&nd, &bad).unwrap_err().reason, Reason::NotSymmetric);
    }

    #[test]
    fn inequations_only_forward() {
        let c = get_effect("cost", &Params::default()).unwrap();
        let d = derivation(
            "cost",
            "x0",
            "tick(x0)",
            Relation::Leq,
            vec![ax("tick-leq", &[(0, "x0")], Direction::Backward, vec![], "tick(x0)")],
        );
        assert!(matches!(check_derivation(&c, &d).unwrap_err().reason, Reason::InequationBackwards(_)));
        let d = derivation(
            "cost",
            "tick(tick(x0))",
            "x0",
            Relation::Leq,
            vec![
                ax("tick-leq", &[(0, "tick(x0)")], Direction::Forward, vec![], "tick(x0)"),
                ax("tick-leq", &[(0, "x0")], Direction::Forward, vec![], "x0"),
            ],
        );
        assert!(check_derivation(&c, &d).is_ok());
    }

    #[test]
    fn congruence_and_substitution() {
        let pr = get_effect("prob", &Params::default()).unwrap();
        let inner = vec![ax("por-comm", &[(0, "x0"), (1, "x1")], Direction::Forward, vec![], "por(x1, x0)")];
        let d = derivation(
            "prob",
            "por(por(top, bot), x0)",
            "por(por(bot, top), x0)",
            Relation::Eq,
            vec![Step::Congruence {
                at: vec![0],
                steps: vec![Step::Substitution {
                    subst: subst(&[(0, "top"), (1, "bot")]),
                    lhs: t("por(x0, x1)"),
                    rhs: t("por(x1, x0)"),
                    steps: inner,
                    to: t("por(bot, top)"),
                }],
                to: t("por(por(bot, top), x0)"),
            }],
        );
        assert!(check_derivation(&pr, &d).unwrap().symmetric);
        let mut bad = d.clone();
        if let Step::Congruence { at, .. } = &mut bad.steps[0] {
            *at = vec![3];
        }
        assert_eq!(check_derivation(&pr, &bad).unwrap_err().reason, Reason::BadPath(vec![3]));
    }

    #[test]
    fn recursive_axiom_is_rejected() {
        let pr = get_effect("prob", &Params::default()).unwrap();
        let d = derivation(
            "prob",
            "top",
            "top",
            Relation::Leq,
            vec![ax("por-fix", &[(0, "top")], Direction::Forward, vec![], "top")],
        );
        assert!(matches!(check_derivation(&pr, &d).unwrap_err().reason, Reason::RecursiveAxiom(_)));
    }

    #[test]
    fn assumptions_must_resolve() {
        let ex = get_effect("exceptions", &Params::default()).unwrap();
        let step = Step::Assumption { label: "missing".into(), subst: Subst::new(), at: vec![], to: t("top") };
        let d = derivation("exceptions", "top", "top", Relation::Leq, vec![step]);
        assert_eq!(check_derivation(&ex, &d).unwrap_err().reason, Reason::UnknownAssumption("missing".into()));
    }
}
