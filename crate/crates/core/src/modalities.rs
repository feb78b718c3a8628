//! Boolean modalities `(P, v)`: an open predicate `P` on the value space and
//! a continuation value `v`. A modality observes a tree over Booleans by
//! sending `true` to `v` and `false` to `⊥`, evaluating, and testing `P`.
//!
//! The induced relation `a ⊑_Ω b` holds when every modality that accepts an
//! instance of `a` also accepts the same instance of `b`. It is decided through
//! its characterization: for every `v` and every `f` from the variables to
//! `{⊥, v}`, the value of `a` under `f` lies below the value of `b`.

use std::collections::{BTreeMap, BTreeSet};

use crate::effect::{EffectKind, EffectSpec};
use crate::regular::{Graph, RegularTree};
use crate::relations::{grid_pairs, search_values, Config, Decision, RelError, Status};
use crate::semantics::dyadic::Dyadic;
use crate::semantics::eval::{apply, eval_bounds_graph, eval_graph, EvalError};
use crate::semantics::quotient::{alpha_quotient, QuotientError, ValueTable};
use crate::semantics::value::{Assignment, Space, Value, WrongSpace};
use crate::tree::{Tree, Var};

#[derive(Clone, Debug, thiserror::Error, PartialEq, Eq)]
pub enum ModalError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Rel(#[from] RelError),
    #[error(transparent)]
    Space(#[from] WrongSpace),
    #[error(transparent)]
    Quotient(#[from] QuotientError),
    #[error("no truth value given for {0}")]
    MissingPredicate(Var),
    #[error("predicate is not open on the {space} space: {reason}")]
    NotOpen { space: &'static str, reason: String },
    #[error("bounds at depth {depth} straddle the predicate")]
    Undecided { depth: usize },
    #[error("the {0} space is infinite; use the threshold family (P_r, v) instead")]
    InfiniteSpace(&'static str),
}

/// An open predicate on a value space.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum OpenPredicate {
    /// The upward closure of finitely many elements.
    Upset { minimal: Vec<Value> },
    /// An arbitrary subset of a finite space.
    Set { members: Vec<Value> },
    /// `v > r` on probabilities; `None` is the constantly true predicate.
    Threshold(Option<Dyadic>),
}

impl OpenPredicate {
    fn validate(&self, space: &Space) -> Result<(), ModalError> {
        let not_open = |reason: &str| ModalError::NotOpen { space: space.name(), reason: reason.to_string() };
        match self {
            OpenPredicate::Upset { minimal } => {
                minimal.iter().try_for_each(|m| space.check(m))?;
                match space {
                    _ if space.is_finite() => Ok(()),
                    Space::Cost => Ok(()),
                    Space::Tree if minimal.iter().all(|m| matches!(m, Value::Tree(g) if !g.has_cycle())) => Ok(()),
                    _ => Err(not_open("upsets are open only on finite, cost and finite-tree generators")),
                }
            }
            OpenPredicate::Set { members } => {
                members.iter().try_for_each(|m| space.check(m))?;
                if space.is_finite() {
                    Ok(())
                } else {
                    Err(not_open("arbitrary subsets need a finite space"))
                }
            }
            OpenPredicate::Threshold(r) => match (space, r) {
                (Space::Prob, None) => Ok(()),
                (Space::Prob, Some(r)) if *r < Dyadic::one() => Ok(()),
                (Space::Prob, Some(_)) => Err(not_open("threshold must be below 1")),
                _ => Err(not_open("thresholds apply to probabilities")),
            },
        }
    }

    pub fn holds(&self, space: &Space, v: &Value) -> Result<bool, ModalError> {
        Ok(match self {
            OpenPredicate::Upset { minimal } => {
                for m in minimal {
                    if space.leq(m, v)? {
                        return Ok(true);
                    }
                }
                false
            }
            OpenPredicate::Set { members } => members.contains(v),
            OpenPredicate::Threshold(None) => true,
            OpenPredicate::Threshold(Some(r)) => match v {
                Value::Prob(p) => p > r,
                _ => return Err(WrongSpace { value: format!("{v:?}"), space: Space::Prob.name() }.into()),
            },
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Modality {
    pub predicate: OpenPredicate,
    pub continuation: Value,
}

/// The assignment sending variables in `pred` to `v` or `⊥`.
fn lift_predicate(
    space: &Space,
    v: &Value,
    pred: &BTreeMap<Var, bool>,
    vars: &BTreeSet<Var>,
) -> Result<Assignment, ModalError> {
    let mut h = Assignment::new();
    for x in vars {
        let b = *pred.get(x).ok_or(ModalError::MissingPredicate(*x))?;
        h.insert(*x, if b { v.clone() } else { space.bottom() });
    }
    Ok(h)
}

/// `P(α(T(v̂ ∘ pred)(t)))`, falling back to bounds for infinite probabilistic trees.
pub fn eval_modality(
    spec: &EffectSpec,
    o: &Modality,
    pred: &BTreeMap<Var, bool>,
    t: &RegularTree<Var>,
) -> Result<bool, ModalError> {
    let space = Space::of(spec);
    space.check(&o.continuation)?;
    o.predicate.validate(&space)?;
    let h = lift_predicate(&space, &o.continuation, pred, &t.vars())?;
    let g = t.graph();
    match eval_graph(spec, &g, &h) {
        Ok(v) => o.predicate.holds(&space, &v),
        Err(EvalError::UseBounds(_)) => {
            let cfg = Config::default();
            let b = eval_bounds_graph(spec, &g, &h, cfg.max_depth, &cfg.eps)?;
            if o.predicate.holds(&space, &b.lower)? {
                Ok(true)
            } else if !o.predicate.holds(&space, &b.upper)? {
                Ok(false)
            } else {
                Err(ModalError::Undecided { depth: b.depth })
            }
        }
        Err(e) => Err(e.into()),
    }
}

/// Continuations sufficient for the characterization of `⊑_Ω`.
///
/// Finite spaces use every element. For probability the value under
/// `f: vars → {0, v}` is `v` times the value under `{0, 1}`, so `v = 1`
/// suffices. For cost, a continuation `n` shifts both sides by `n` unless
/// one side ends in `⊤`; `0` and `∞` cover both cases. For input trees the
/// order is decided by `⊥` and `⊤` leaves.
fn continuations(spec: &EffectSpec, space: &Space) -> Option<Vec<Value>> {
    if let Some(all) = space.elements() {
        return Some(all);
    }
    match spec.kind {
        EffectKind::Prob => Some(vec![space.top()]),
        EffectKind::Cost | EffectKind::Input => Some(vec![space.bottom(), space.top()]),
        _ => None,
    }
}

/// Decides `a ⊑_Ω b`. The combined effect searches continuations on dyadic
/// grids and reports the resolution reached when nothing refutes.
pub fn modal_leq(spec: &EffectSpec, a: &RegularTree<Var>, b: &RegularTree<Var>) -> Result<Decision, ModalError> {
    modal_leq_graphs(spec, &a.graph(), &b.graph())
}

pub fn modal_leq_graphs(spec: &EffectSpec, ga: &Graph<Var>, gb: &Graph<Var>) -> Result<Decision, ModalError> {
    let space = Space::of(spec);
    let cfg = Config::default();
    let bottom = space.bottom();
    let mut work = 0;
    let mut inconclusive = false;
    let mut try_values = |vs: &[Value]| -> Result<Option<Decision>, ModalError> {
        for v in vs {
            let s = search_values(spec, ga, gb, &[bottom.clone(), v.clone()], &cfg)?;
            work += s.work;
            inconclusive |= s.inconclusive;
            if let Some(mut d) = s.refutation {
                d.work = work;
                return Ok(Some(d));
            }
        }
        Ok(None)
    };
    if let Some(vs) = continuations(spec, &space) {
        if let Some(d) = try_values(&vs)? {
            return Ok(d);
        }
        let status = if inconclusive { Status::HoldsAtResolution(cfg.eps_bits()) } else { Status::Holds };
        return Ok(Decision { status, witness: None, values: None, work });
    }
    let r = match spec.strategy {
        crate::effect::LeqStrategy::Grid(r) => r,
        _ => unreachable!("every effect without a finite continuation set is searched on grids"),
    };
    for j in 0..=r {
        let grid = if j == 0 { vec![space.top()] } else { grid_pairs(j) };
        if let Some(d) = try_values(&grid)? {
            return Ok(d);
        }
    }
    Ok(Decision { status: Status::HoldsAtResolution(r), witness: None, values: None, work })
}

/// Which predicates count as open when enumerating.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Openness {
    /// Upward closed; on finite spaces the chain condition is automatic.
    #[default]
    Monotone,
    /// Only the chain condition: every subset of a finite space.
    ChainOnly,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EnumeratedModality {
    pub modality: Modality,
    /// An earlier modality with the same denotation on all trees.
    pub duplicate_of: Option<usize>,
}

/// All modalities `(P, v)` of a finite space, upsets in order of size.
pub fn enumerate_modalities(spec: &EffectSpec, openness: Openness) -> Result<Vec<EnumeratedModality>, ModalError> {
    let space = Space::of(spec);
    let elems = space.elements().ok_or(ModalError::InfiniteSpace(space.name()))?;
    let n = elems.len();
    let mut subsets: Vec<Vec<usize>> = Vec::new();
    for mask in 0u64..(1u64 << n) {
        let members: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        let upward = members
            .iter()
            .all(|&i| (0..n).all(|j| !space.leq(&elems[i], &elems[j]).unwrap_or(false) || mask >> j & 1 == 1));
        if openness == Openness::ChainOnly || upward {
            subsets.push(members);
        }
    }
    subsets.sort_by_key(|m| (m.len(), m.clone()));
    let predicate = |members: &[usize]| match openness {
        Openness::Monotone => OpenPredicate::Upset {
            minimal: members
                .iter()
                .filter(|&&i| !members.iter().any(|&j| j != i && space.leq(&elems[j], &elems[i]).unwrap_or(false)))
                .map(|&i| elems[i].clone())
                .collect(),
        },
        Openness::ChainOnly => OpenPredicate::Set { members: members.iter().map(|&i| elems[i].clone()).collect() },
    };
    let mut out: Vec<EnumeratedModality> = Vec::new();
    for members in &subsets {
        for v in &elems {
            let modality = Modality { predicate: predicate(members), continuation: v.clone() };
            let mut duplicate_of = None;
            for (i, prev) in out.iter().enumerate() {
                if same_denotation(spec, &space, &prev.modality, &modality)? {
                    duplicate_of = Some(i);
                    break;
                }
            }
            out.push(EnumeratedModality { modality, duplicate_of });
        }
    }
    Ok(out)
}

/// Whether two modalities agree on every tree over Booleans.
///
/// The pairs of values a single tree takes under the two continuations form
/// the subalgebra of `A × A` generated by `(⊥, ⊥)`, `(⊤, ⊤)` and `(v1, v2)`.
/// On a finite space regular trees add nothing: their values are reached by
/// finite truncations.
fn same_denotation(spec: &EffectSpec, space: &Space, o1: &Modality, o2: &Modality) -> Result<bool, ModalError> {
    let mut pairs: Vec<(Value, Value)> = vec![
        (space.bottom(), space.bottom()),
        (space.top(), space.top()),
        (o1.continuation.clone(), o2.continuation.clone()),
    ];
    pairs.dedup();
    let mut changed = true;
    while changed {
        changed = false;
        for (op, arity) in spec.signature.ops() {
            let len = pairs.len();
            let mut idx = vec![0usize; *arity];
            loop {
                let left: Vec<&Value> = idx.iter().map(|&i| &pairs[i].0).collect();
                let right: Vec<&Value> = idx.iter().map(|&i| &pairs[i].1).collect();
                let p = (apply(spec, op, &left)?, apply(spec, op, &right)?);
                if !pairs.contains(&p) {
                    pairs.push(p);
                    changed = true;
                }
                if !advance(&mut idx, len) {
                    break;
                }
            }
        }
    }
    for (a, b) in &pairs {
        if o1.predicate.holds(space, a)? != o2.predicate.holds(space, b)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Steps an odometer over `0..len` per digit; false once it wraps around.
fn advance(idx: &mut [usize], len: usize) -> bool {
    for d in idx.iter_mut().rev() {
        *d += 1;
        if *d < len {
            return true;
        }
        *d = 0;
    }
    false
}

/// Disagreements between modalities evaluated in a quotient algebra and in
/// the value space, over all upsets of classes, all continuation classes and
/// the given trees over Booleans.
pub fn coincidence_failures(table: &ValueTable, trees: &[Tree<bool>]) -> Result<usize, ModalError> {
    let spec = &table.spec;
    let values: Vec<Value> = table
        .classes
        .iter()
        .map(|c| crate::semantics::eval::eval_term(spec, &c.canonical, &Assignment::new()))
        .collect::<Result<_, _>>()?;
    let n = table.len();
    let bottom = table.bottom();
    let mut failures = 0;
    for mask in 0u64..(1u64 << n) {
        let inside = |i: usize| mask >> i & 1 == 1;
        let upward = (0..n).all(|i| !inside(i) || (0..n).all(|j| !table.leq(i, j) || inside(j)));
        if !upward {
            continue;
        }
        let predicate =
            OpenPredicate::Set { members: (0..n).filter(|&i| inside(i)).map(|i| values[i].clone()).collect() };
        for (c, value) in values.iter().enumerate() {
            let o = Modality { predicate: predicate.clone(), continuation: value.clone() };
            for t in trees {
                let class = alpha_quotient(table, &t.map(&mut |b| if *b { c } else { bottom }))?;
                let term = t.map(&mut |b| if *b { Var(0) } else { Var(1) });
                let pred = BTreeMap::from([(Var(0), true), (Var(1), false)]);
                let by_value = eval_modality(spec, &o, &pred, &RegularTree::from_tree(&term))?;
                if inside(class) != by_value {
                    failures += 1;
                }
            }
        }
    }
    Ok(failures)
}
