//! The Eilenberg-Moore algebras of the catalog and evaluation of trees.
//!
//! Every algebra except the input one is computed by Kleene iteration on the
//! graph of a regular tree: operator nodes start at a fill value and are
//! recomputed from their children round by round. Round `d` equals the value
//! of the depth-`d` truncation, so iterating from the bottom value converges
//! to the value of the whole tree whenever the iteration stabilises.

use crate::effect::{EffectKind, EffectSpec};
use crate::regular::{GNode, Graph, RegularTree};
use crate::semantics::dyadic::Dyadic;
use crate::semantics::value::{Assignment, ExcValue, Nothing, Space, StateSet, Three, Value, WrongSpace};
use crate::tree::{Op, Term, Tree, Var};

#[derive(Clone, Debug, thiserror::Error, PartialEq, Eq)]
pub enum EvalError {
    #[error(transparent)]
    WrongSpace(#[from] WrongSpace),
    #[error("operator {op} is not interpreted by the {effect} algebra")]
    UnsupportedOperator { op: String, effect: &'static str },
    #[error("the {0} tree is infinite and has no exact value here; use eval_bounds")]
    UseBounds(&'static str),
}

/// Lower and upper approximations of the value of a regular tree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bounds {
    pub lower: Value,
    pub upper: Value,
    pub converged: bool,
    /// The last truncation depth that was evaluated.
    pub depth: usize,
}

/// The local algebra operation at one node.
pub fn apply(spec: &EffectSpec, op: &Op, args: &[&Value]) -> Result<Value, EvalError> {
    let unsupported = || EvalError::UnsupportedOperator { op: op.to_string(), effect: spec.name() };
    Ok(match (spec.kind, op, args) {
        (EffectKind::Nondet, Op::Or, [Value::Three(a), Value::Three(b)]) => {
            Value::Three(if a == b { *a } else { Three::Diamond })
        }
        (EffectKind::Prob, Op::Por, [Value::Prob(a), Value::Prob(b)]) => Value::Prob(a.average(b)),
        (EffectKind::Store, Op::Upd(n), [Value::States(s)]) => {
            let k = spec.params.store_size;
            Value::States(if s.contains(*n) { StateSet::full(k) } else { StateSet::empty(k) })
        }
        (EffectKind::Store, Op::Lkp, children) => {
            let k = spec.params.store_size;
            let mut states = Vec::new();
            for (m, c) in children.iter().enumerate() {
                match c {
                    Value::States(s) if s.contains(m as u32) => states.push(m as u32),
                    Value::States(_) => {}
                    _ => return Err(unsupported()),
                }
            }
            Value::States(StateSet::from_states(k, states))
        }
        (EffectKind::Exceptions, Op::Raise(e), []) => Value::Exc(ExcValue::Raise(e.clone())),
        (EffectKind::Exceptions, Op::Catch(e), [Value::Exc(a), b]) => match a {
            ExcValue::Raise(d) if d == e => Value::clone(b),
            _ => Value::Exc(a.clone()),
        },
        (EffectKind::Cost, Op::Tick, [Value::Cost(n)]) => Value::Cost(n.succ()),
        (EffectKind::NondetProb, Op::Or, [Value::Pair(a, b), Value::Pair(c, d)]) => {
            Value::Pair(a.min(c).clone(), b.max(d).clone())
        }
        (EffectKind::NondetProb, Op::Por, [Value::Pair(a, b), Value::Pair(c, d)]) => {
            Value::Pair(a.average(c), b.average(d))
        }
        _ => return Err(unsupported()),
    })
}

fn initial(space: &Space, g: &Graph<Value>, fill: &Value) -> Result<Vec<Value>, EvalError> {
    g.nodes()
        .iter()
        .map(|n| match n {
            GNode::Bottom => Ok(space.bottom()),
            GNode::Top => Ok(space.top()),
            GNode::Leaf(v) => {
                space.check(v)?;
                Ok(v.clone())
            }
            GNode::Node(..) => Ok(fill.clone()),
        })
        .collect()
}

fn round(spec: &EffectSpec, g: &Graph<Value>, vals: &[Value]) -> Result<Vec<Value>, EvalError> {
    g.nodes()
        .iter()
        .enumerate()
        .map(|(i, n)| match n {
            GNode::Node(op, cs) => {
                let args: Vec<&Value> = cs.iter().map(|c| &vals[*c]).collect();
                apply(spec, op, &args)
            }
            _ => Ok(vals[i].clone()),
        })
        .collect()
}

/// Run `rounds` Kleene rounds from `fill`, stopping early at a fixed point.
/// Returns the root value and whether a fixed point was reached.
fn iterate(spec: &EffectSpec, g: &Graph<Value>, fill: &Value, rounds: usize) -> Result<(Value, bool), EvalError> {
    let space = Space::of(spec);
    let mut vals = initial(&space, g, fill)?;
    for _ in 0..rounds {
        let next = round(spec, g, &vals)?;
        if next == vals {
            return Ok((vals[g.root()].clone(), true));
        }
        vals = next;
    }
    Ok((vals[g.root()].clone(), false))
}

/// The value of the depth-`d` truncation with the given frontier value.
pub fn eval_truncated(spec: &EffectSpec, g: &Graph<Value>, depth: usize, fill: &Value) -> Result<Value, EvalError> {
    Ok(iterate(spec, g, fill, depth)?.0)
}

fn flatten_closed(g: &Graph<Value>) -> Result<Graph<Nothing>, EvalError> {
    let mut bad = None;
    let out = g.bind(&mut |v| match v {
        Value::Tree(t) => t.clone(),
        other => {
            bad = Some(other.clone());
            Graph::bottom()
        }
    });
    match bad {
        Some(v) => Err(WrongSpace { value: format!("{v:?}"), space: Space::Tree.name() }.into()),
        None => Ok(out.canonical()),
    }
}

/// `α` applied to a regular tree of values.
pub fn alpha(spec: &EffectSpec, g: &Graph<Value>) -> Result<Value, EvalError> {
    let space = Space::of(spec);
    match spec.kind {
        EffectKind::Input => {
            // All operators are free: `α` is the multiplication of the monad.
            if let Some(op) = g.nodes().iter().find_map(|n| match n {
                GNode::Node(op, _) if *op != Op::In => Some(op),
                _ => None,
            }) {
                return Err(EvalError::UnsupportedOperator { op: op.to_string(), effect: spec.name() });
            }
            Ok(Value::Tree(flatten_closed(g)?))
        }
        EffectKind::Prob | EffectKind::NondetProb => {
            // Stabilises within one round per node on acyclic graphs; on
            // some cyclic ones too, in which case the fixed point is exact.
            let (v, stable) = iterate(spec, g, &space.bottom(), g.len() + 1)?;
            if stable {
                Ok(v)
            } else {
                Err(EvalError::UseBounds(spec.name()))
            }
        }
        _ => {
            let mut rounds = g.len() + 1;
            loop {
                let (v, stable) = iterate(spec, g, &space.bottom(), rounds)?;
                if stable {
                    return Ok(v);
                }
                rounds *= 2;
            }
        }
    }
}

/// `α` on a finite tree of values.
pub fn alpha_tree(spec: &EffectSpec, t: &Tree<Value>) -> Result<Value, EvalError> {
    alpha(spec, &Graph::from_tree(t))
}

/// `α(T(h)(t))` on a compiled tree.
pub fn eval_graph(spec: &EffectSpec, g: &Graph<Var>, h: &Assignment) -> Result<Value, EvalError> {
    let space = Space::of(spec);
    alpha(spec, &g.map(&mut |v| h.get(*v, &space)))
}

/// `α(T(h)(t))`.
pub fn eval_exact(spec: &EffectSpec, t: &RegularTree<Var>, h: &Assignment) -> Result<Value, EvalError> {
    eval_graph(spec, &t.graph(), h)
}

pub fn eval_term(spec: &EffectSpec, t: &Term, h: &Assignment) -> Result<Value, EvalError> {
    eval_graph(spec, &Graph::from_tree(t), h)
}

fn within(space: &Space, lower: &Value, upper: &Value, eps: &Dyadic) -> bool {
    match (space, lower, upper) {
        (Space::Prob, Value::Prob(a), Value::Prob(b)) => b.sub(a) <= *eps,
        (Space::Pair, Value::Pair(a, b), Value::Pair(c, d)) => c.sub(a) <= *eps && d.sub(b) <= *eps,
        _ => lower == upper,
    }
}

/// Bracket the value of a regular tree between the values of its truncations
/// filled with `⊥` and with `⊤`, doubling the depth until the gap is at most
/// `eps` or `max_depth` has been evaluated.
pub fn eval_bounds_graph(
    spec: &EffectSpec,
    g: &Graph<Var>,
    h: &Assignment,
    max_depth: usize,
    eps: &Dyadic,
) -> Result<Bounds, EvalError> {
    let space = Space::of(spec);
    if !matches!(spec.kind, EffectKind::Prob | EffectKind::NondetProb) {
        let v = eval_graph(spec, g, h)?;
        return Ok(Bounds { lower: v.clone(), upper: v, converged: true, depth: 0 });
    }
    let g = g.map(&mut |v| h.get(*v, &space));
    let (bottom, top) = (space.bottom(), space.top());
    let mut lo = initial(&space, &g, &bottom)?;
    let mut hi = initial(&space, &g, &top)?;
    let mut done = 0usize;
    let mut target = 1usize.min(max_depth);
    loop {
        while done < target {
            lo = round(spec, &g, &lo)?;
            hi = round(spec, &g, &hi)?;
            done += 1;
        }
        let (l, u) = (&lo[g.root()], &hi[g.root()]);
        let converged = within(&space, l, u, eps);
        if converged || done >= max_depth {
            return Ok(Bounds { lower: l.clone(), upper: u.clone(), converged, depth: done });
        }
        target = (target * 2).min(max_depth);
    }
}

pub fn eval_bounds(
    spec: &EffectSpec,
    t: &RegularTree<Var>,
    h: &Assignment,
    max_depth: usize,
    eps: &Dyadic,
) -> Result<Bounds, EvalError> {
    eval_bounds_graph(spec, &t.graph(), h, max_depth, eps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::effect::{get_effect, Params};
    use crate::regular::{Fill, Slot};
    use crate::semantics::value::ExtNat;

    fn spec(name: &str) -> EffectSpec {
        get_effect(name, &Params::default()).unwrap()
    }

    fn node(op: Op, cs: Vec<Term>) -> Term {
        Tree::Node(op, cs)
    }

    fn closed(spec: &EffectSpec, t: Term) -> Value {
        eval_term(spec, &t, &Assignment::new()).unwrap()
    }

    #[test]
    fn reference_values() {
        let nd = spec("nondet");
        assert_eq!(closed(&nd, node(Op::Or, vec![Tree::Top, Tree::Bottom])), Value::Three(Three::Diamond));
        let pr = spec("prob");
        assert_eq!(closed(&pr, node(Op::Por, vec![Tree::Top, Tree::Bottom])), Value::prob(1, 1));
        let cb = spec("nondet_prob");
        let t = node(Op::Por, vec![Tree::Top, node(Op::Or, vec![Tree::Top, Tree::Bottom])]);
        assert_eq!(closed(&cb, t), Value::Pair(Dyadic::half(), Dyadic::one()));
        let st = spec("store");
        let lkp = node(Op::Lkp, vec![Tree::Top, Tree::Bottom]);
        assert_eq!(closed(&st, node(Op::Upd(1), vec![lkp.clone()])), Value::States(StateSet::empty(2)));
        assert_eq!(closed(&st, lkp), Value::States(StateSet::from_states(2, [0])));
    }

    #[test]
    fn infinite_ticks_cost_infinity() {
        let c = spec("cost");
        let t = RegularTree::rec("s", Tree::Node(Op::Tick, vec![Tree::Leaf(Slot::Ref(0))]));
        assert_eq!(eval_exact(&c, &t, &Assignment::new()).unwrap(), Value::Cost(ExtNat::Inf));
    }

    #[test]
    fn cyclic_prob_needs_bounds() {
        let p = spec("prob");
        let t = RegularTree::rec("s", Tree::Node(Op::Por, vec![Tree::Top, Tree::Leaf(Slot::Ref(0))]));
        assert_eq!(eval_exact(&p, &t, &Assignment::new()), Err(EvalError::UseBounds("prob")));
        let b = eval_bounds(&p, &t, &Assignment::new(), 10, &Dyadic::zero()).unwrap();
        assert_eq!(b.lower, Value::prob(1023, 10));
        assert_eq!(b.upper, Value::prob(1, 0));
        assert!(!b.converged);
        // The oracle: evaluate the two depth-10 truncations as finite trees.
        let g = t.graph();
        let lo = eval_term(&p, &g.truncate(10, Fill::Bottom), &Assignment::new()).unwrap();
        let hi = eval_term(&p, &g.truncate(10, Fill::Top), &Assignment::new()).unwrap();
        assert_eq!((lo, hi), (b.lower, b.upper));
    }

    #[test]
    fn bounds_converge_to_one() {
        let p = spec("prob");
        let t = RegularTree::rec("s", Tree::Node(Op::Por, vec![Tree::Top, Tree::Leaf(Slot::Ref(0))]));
        let eps = Dyadic::pow2_neg(20);
        let b = eval_bounds(&p, &t, &Assignment::new(), 20, &eps).unwrap();
        assert!(b.converged);
        assert_eq!(b.upper, Value::prob(1, 0));
        assert!(*b.lower.as_prob().unwrap() >= Dyadic::one().sub(&eps));
    }

    #[test]
    fn finite_trees_have_tight_bounds() {
        let p = spec("prob");
        let t = node(Op::Por, vec![Tree::Top, node(Op::Por, vec![Tree::Bottom, Tree::Top])]);
        let exact = closed(&p, t.clone());
        let b = eval_bounds(&p, &RegularTree::from_tree(&t), &Assignment::new(), 20, &Dyadic::zero()).unwrap();
        assert!(b.converged);
        assert_eq!((b.lower, b.upper), (exact.clone(), exact));
    }

    #[test]
    fn nondet_cycles_are_divergence() {
        let nd = spec("nondet");
        let both = RegularTree::rec("s", Tree::Node(Op::Or, vec![Tree::Leaf(Slot::Ref(0)), Tree::Leaf(Slot::Ref(0))]));
        assert_eq!(eval_exact(&nd, &both, &Assignment::new()).unwrap(), Value::Three(Three::Bottom));
        let some = RegularTree::rec("s", Tree::Node(Op::Or, vec![Tree::Top, Tree::Leaf(Slot::Ref(0))]));
        assert_eq!(eval_exact(&nd, &some, &Assignment::new()).unwrap(), Value::Three(Three::Diamond));
    }

    #[test]
    fn assignments_feed_leaves() {
        let ex = spec("exceptions");
        let e1 = ex.params.exceptions[0].clone();
        let t = node(Op::Catch(e1.clone()), vec![Term::var(0), Term::var(1)]);
        let h =
            Assignment::from_pairs([(Var(0), Value::Exc(ExcValue::Raise(e1))), (Var(1), Value::Exc(ExcValue::Top))]);
        assert_eq!(eval_term(&ex, &t, &h).unwrap(), Value::Exc(ExcValue::Top));
        assert_eq!(eval_term(&ex, &t, &Assignment::new()).unwrap(), Value::Exc(ExcValue::Bottom));
    }

    #[test]
    fn input_flattens() {
        let inp = spec("input");
        let t = node(Op::In, vec![Term::var(0), Tree::Top]);
        let sub = Graph::from_tree(&Tree::Node(Op::In, vec![Tree::Bottom, Tree::Top]));
        let h = Assignment::from_pairs([(Var(0), Value::Tree(sub))]);
        let expected = Graph::from_tree(&Tree::<Nothing>::Node(
            Op::In,
            vec![Tree::Node(Op::In, vec![Tree::Bottom, Tree::Top]), Tree::Top],
        ));
        assert_eq!(eval_term(&inp, &t, &h).unwrap(), Value::Tree(expected.canonical()));
    }

    #[test]
    fn operator_outside_algebra() {
        let nd = spec("nondet");
        let t = node(Op::Tick, vec![Tree::Top]);
        assert!(matches!(eval_term(&nd, &t, &Assignment::new()), Err(EvalError::UnsupportedOperator { .. })));
    }
}
