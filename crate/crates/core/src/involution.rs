//! Negation of trees and its interaction with evaluation.
//!
//! `¬t` swaps the `⊥` and `⊤` leaves of `t` and relabels variables through an
//! involution of the variables. An effect preserves the negation when
//! evaluation commutes with it: `α(¬t) = ι(α(t))` for an order-reversing
//! involution `ι` of the value space. On finite trees this holds for every
//! effect with such an `ι`; on leafless infinite trees it fails, since
//! `¬t = t` while `α(t) = ⊥` and `ι(⊥) = ⊤`. The cost space has no
//! order-reversing involution at all.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::effect::{EffectKind, EffectSpec};
use crate::gen;
use crate::regular::{GNode, Graph, RegularTree, Slot};
use crate::relations::{check_leq_terms, RelError};
use crate::semantics::dyadic::Dyadic;
use crate::semantics::eval::{apply, eval_bounds, eval_exact, eval_term, EvalError};
use crate::semantics::value::{Assignment, ClosedTree, ExcValue, Space, StateSet, Three, Value};
use crate::tree::{Term, Tree, Var};

#[derive(Clone, Debug, thiserror::Error, PartialEq, Eq)]
pub enum InvolutionError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Rel(#[from] RelError),
    #[error("the variable map is not an involution: {0} ↦ {1} ↦ {2}")]
    NotInvolutive(Var, Var, Var),
}

/// An involution of the variables; unmapped variables are fixed.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Involution {
    leaf_map: BTreeMap<Var, Var>,
}

impl Involution {
    pub fn identity() -> Self {
        Involution::default()
    }

    pub fn new(leaf_map: BTreeMap<Var, Var>) -> Result<Self, InvolutionError> {
        let inv = Involution { leaf_map };
        for (&x, &y) in &inv.leaf_map {
            let z = inv.apply(y);
            if z != x {
                return Err(InvolutionError::NotInvolutive(x, y, z));
            }
        }
        Ok(inv)
    }

    pub fn apply(&self, x: Var) -> Var {
        self.leaf_map.get(&x).copied().unwrap_or(x)
    }
}

fn swap<L: Clone>(t: &Tree<L>, f: &mut impl FnMut(&L) -> L) -> Tree<L> {
    match t {
        Tree::Bottom => Tree::Top,
        Tree::Top => Tree::Bottom,
        Tree::Leaf(l) => Tree::Leaf(f(l)),
        Tree::Node(op, cs) => Tree::Node(op.clone(), cs.iter().map(|c| swap(c, f)).collect()),
    }
}

pub fn negate(t: &Term, inv: &Involution) -> Term {
    swap(t, &mut |x| inv.apply(*x))
}

/// Negates every state body of a regular tree.
pub fn negate_regular(t: &RegularTree<Var>, inv: &Involution) -> RegularTree<Var> {
    let mut f = |s: &Slot<Var>| match s {
        Slot::Leaf(x) => Slot::Leaf(inv.apply(*x)),
        Slot::Ref(i) => Slot::Ref(*i),
    };
    RegularTree {
        states: t
            .states
            .iter()
            .map(|st| crate::regular::State { name: st.name.clone(), body: swap(&st.body, &mut f) })
            .collect(),
        root: swap(&t.root, &mut f),
    }
}

fn negate_graph(g: &ClosedTree) -> ClosedTree {
    let nodes = g
        .nodes()
        .iter()
        .map(|n| match n {
            GNode::Bottom => GNode::Top,
            GNode::Top => GNode::Bottom,
            other => other.clone(),
        })
        .collect();
    Graph::from_parts(nodes, g.root()).canonical()
}

/// The order-reversing involution `ι` of a value space; `None` for cost.
pub fn reflect(v: &Value) -> Option<Value> {
    Some(match v {
        Value::Three(t) => Value::Three(match t {
            Three::Bottom => Three::Top,
            Three::Diamond => Three::Diamond,
            Three::Top => Three::Bottom,
        }),
        Value::Prob(p) => Value::Prob(Dyadic::one().sub(p)),
        Value::States(s) => Value::States(StateSet::complement(*s)),
        Value::Exc(e) => Value::Exc(match e {
            ExcValue::Bottom => ExcValue::Top,
            ExcValue::Top => ExcValue::Bottom,
            raise => raise.clone(),
        }),
        Value::Cost(_) => return None,
        Value::Tree(g) => Value::Tree(negate_graph(g)),
        Value::Pair(lo, hi) => Value::Pair(Dyadic::one().sub(hi), Dyadic::one().sub(lo)),
    })
}

/// Counts of checked instances and the first few failures.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Tally {
    pub checked: usize,
    pub failed: usize,
    pub examples: Vec<String>,
}

impl Tally {
    fn record(&mut self, ok: bool, describe: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok {
            self.failed += 1;
            if self.examples.len() < 5 {
                self.examples.push(describe());
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.checked > 0 && self.failed == 0
    }
}

/// A regular tree on which evaluation does not commute with negation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub tree: RegularTree<Var>,
    /// `α(t)`, `α(¬t)` and `ι(α(t))`.
    pub value: Value,
    pub negated_value: Value,
    pub reflected: Value,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InvolutionConfig {
    pub samples: usize,
    pub depth: usize,
    /// Closed trees up to this depth are checked exhaustively.
    pub exhaustive_depth: usize,
    pub seed: u64,
}

impl Default for InvolutionConfig {
    fn default() -> Self {
        InvolutionConfig { samples: 1000, depth: 3, exhaustive_depth: 2, seed: 7 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InvolutionReport {
    pub effect: &'static str,
    /// `¬¬t = t` on random trees.
    pub double_negation: Tally,
    /// `a ≤ b ⟺ ¬b ≤ ¬a` in the tree order.
    pub tree_order: Tally,
    /// `a ⊑ b ⟺ ¬b ⊑ ¬a` in the induced preorder; absent without an involution.
    pub order_reversal: Option<Tally>,
    /// `α(¬t) = ι(α(t))` on closed finite trees.
    pub values: Option<Tally>,
    /// The first leafless tree `rec s. op(s, …, s)` on which preservation fails.
    pub regular_witness: Option<Witness>,
    /// Why the effect has no involution, when it has none.
    pub impossibility: Option<String>,
}

/// Replaces random subtrees of `t` by `⊤`, giving a tree above `t`.
fn raise_some(t: &Term, rng: &mut impl Rng) -> Term {
    match t {
        _ if rng.gen_bool(0.15) => Tree::Top,
        Tree::Node(op, cs) => Tree::Node(op.clone(), cs.iter().map(|c| raise_some(c, rng)).collect()),
        other => other.clone(),
    }
}

/// Exact value of a leafless regular tree whose operators are strict, if it is one:
/// every truncation then evaluates to `⊥`.
fn leafless_value(spec: &EffectSpec, g: &Graph<Var>) -> Result<Option<Value>, EvalError> {
    let bottom = Space::of(spec).bottom();
    for n in g.nodes() {
        match n {
            GNode::Node(op, cs) if !cs.is_empty() => {
                let args = vec![&bottom; cs.len()];
                if apply(spec, op, &args)? != bottom {
                    return Ok(None);
                }
            }
            _ => return Ok(None),
        }
    }
    Ok(Some(bottom))
}

fn eval_closed_regular(spec: &EffectSpec, t: &RegularTree<Var>) -> Result<Value, EvalError> {
    if let Some(v) = leafless_value(spec, &t.graph())? {
        return Ok(v);
    }
    match eval_exact(spec, t, &Assignment::new()) {
        Err(EvalError::UseBounds(_)) => {
            let b = eval_bounds(spec, t, &Assignment::new(), 64, &Dyadic::pow2_neg(30))?;
            if b.lower == b.upper {
                Ok(b.lower)
            } else {
                Err(EvalError::UseBounds(spec.name()))
            }
        }
        other => other,
    }
}

/// Searches `rec s. op(s, …, s)` over the operators of the signature.
fn find_witness(spec: &EffectSpec, inv: &Involution) -> Result<Option<Witness>, InvolutionError> {
    for (op, arity) in spec.signature.ops() {
        if *arity == 0 {
            continue;
        }
        let t = RegularTree::rec("s", Tree::Node(op.clone(), vec![Tree::Leaf(Slot::Ref(0)); *arity]));
        let value = eval_closed_regular(spec, &t)?;
        let negated_value = eval_closed_regular(spec, &negate_regular(&t, inv))?;
        let Some(reflected) = reflect(&value) else { return Ok(None) };
        if negated_value != reflected {
            return Ok(Some(Witness { tree: t, value, negated_value, reflected }));
        }
    }
    Ok(None)
}

pub fn check_involution_preservation(
    spec: &EffectSpec,
    inv: &Involution,
    cfg: &InvolutionConfig,
) -> Result<InvolutionReport, InvolutionError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let has_involution = spec.kind != EffectKind::Cost;
    let mut report = InvolutionReport {
        effect: spec.name(),
        double_negation: Tally::default(),
        tree_order: Tally::default(),
        order_reversal: has_involution.then(Tally::default),
        values: has_involution.then(Tally::default),
        regular_witness: None,
        impossibility: (!has_involution).then(|| {
            "the extended naturals have no order-reversing involution: the top 0 has an immediate \
             predecessor 1, but the bottom ∞ has no immediate successor"
                .to_string()
        }),
    };
    let show = crate::syntax::print_term;
    for _ in 0..cfg.samples {
        let a = gen::random_term(&spec.signature, 2, cfg.depth, &mut rng);
        let b = if rng.gen_bool(0.5) {
            raise_some(&a, &mut rng)
        } else {
            gen::random_term(&spec.signature, 2, cfg.depth, &mut rng)
        };
        let (na, nb) = (negate(&a, inv), negate(&b, inv));
        report.double_negation.record(negate(&na, inv) == a, || show(&a));
        report.tree_order.record(a.leq(&b) == nb.leq(&na), || format!("{} vs {}", show(&a), show(&b)));
        if let Some(tally) = &mut report.order_reversal {
            let forward = check_leq_terms(spec, &a, &b)?.status.is_refuted();
            let backward = check_leq_terms(spec, &nb, &na)?.status.is_refuted();
            tally.record(forward == backward, || format!("{} vs {}", show(&a), show(&b)));
        }
    }
    if let Some(tally) = &mut report.values {
        let mut closed = gen::enumerate(&spec.signature, &gen::atoms(0), cfg.exhaustive_depth);
        closed.extend((0..cfg.samples).map(|_| gen::random_term(&spec.signature, 0, cfg.depth, &mut rng)));
        let h = Assignment::new();
        for t in &closed {
            let v = eval_term(spec, t, &h)?;
            let nv = eval_term(spec, &negate(t, inv), &h)?;
            let expected = reflect(&v).expect("effects with an involution");
            tally.record(nv == expected, || format!("{}: {v:?} negated to {nv:?}", show(t)));
        }
        report.regular_witness = find_witness(spec, inv)?;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::effect::{get_effect, Params};
    use crate::syntax::{parse_expr, parse_term};

    fn spec(name: &str) -> EffectSpec {
        get_effect(name, &Params::default()).unwrap()
    }

    #[test]
    fn negation_examples() {
        let id = Involution::identity();
        assert_eq!(negate(&parse_term("or(top, bot)", None).unwrap(), &id), parse_term("or(bot, top)", None).unwrap());
        let t = parse_expr("rec s. or(s, s)", None).unwrap();
        assert_eq!(negate_regular(&t, &id), t);
        let swap = Involution::new(BTreeMap::from([(Var(0), Var(1)), (Var(1), Var(0))])).unwrap();
        assert_eq!(negate(&parse_term("or(x0, x2)", None).unwrap(), &swap), parse_term("or(x1, x2)", None).unwrap());
        assert!(Involution::new(BTreeMap::from([(Var(0), Var(1))])).is_err());
    }

    #[test]
    fn reflection_is_an_order_reversing_involution() {
        for name in ["nondet", "store", "exceptions"] {
            let s = spec(name);
            let space = Space::of(&s);
            let elems = space.elements().unwrap();
            for v in &elems {
                assert_eq!(reflect(&reflect(v).unwrap()).unwrap(), *v);
                for w in &elems {
                    let r = space.leq(&reflect(w).unwrap(), &reflect(v).unwrap()).unwrap();
                    assert_eq!(space.leq(v, w).unwrap(), r);
                }
            }
        }
        assert_eq!(reflect(&Value::prob(1, 2)), Some(Value::prob(3, 2)));
        assert_eq!(reflect(&Value::Cost(crate::semantics::ExtNat::Fin(2))), None);
    }

    #[test]
    fn nondet_report() {
        let cfg = InvolutionConfig { samples: 200, ..InvolutionConfig::default() };
        let r = check_involution_preservation(&spec("nondet"), &Involution::identity(), &cfg).unwrap();
        assert!(r.double_negation.passed() && r.tree_order.passed());
        assert!(r.order_reversal.unwrap().passed() && r.values.unwrap().passed());
        let w = r.regular_witness.unwrap();
        assert_eq!(w.tree, parse_expr("rec s. or(s, s)", None).unwrap());
        assert_eq!(
            (w.value, w.negated_value, w.reflected),
            (Value::Three(Three::Bottom), Value::Three(Three::Bottom), Value::Three(Three::Top))
        );
    }

    #[test]
    fn cost_has_no_involution() {
        let cfg = InvolutionConfig { samples: 50, ..InvolutionConfig::default() };
        let r = check_involution_preservation(&spec("cost"), &Involution::identity(), &cfg).unwrap();
        assert!(r.impossibility.is_some() && r.order_reversal.is_none() && r.regular_witness.is_none());
        // tick(x) ⊑ x, but not x ⊑ tick(x): negation fixes both sides, so reversal fails.
        let (t, x) = (parse_term("tick(x0)", None).unwrap(), parse_term("x0", None).unwrap());
        let cost = spec("cost");
        assert!(!check_leq_terms(&cost, &t, &x).unwrap().status.is_refuted());
        assert!(check_leq_terms(&cost, &x, &t).unwrap().status.is_refuted());
    }
}
