//! Direct characterizations of the base relation on closed finite trees.
//!
//! These are computed without the algebras of [`super::eval`] and serve as
//! the reference for the quotient construction.

use std::cmp::Ordering;

use num_bigint::BigUint;

use crate::effect::{EffectKind, EffectSpec};
use crate::tree::{ExcName, Op, Term, Tree};

#[derive(Clone, Debug, thiserror::Error, PartialEq, Eq)]
pub enum BaseError {
    #[error("the {0} effect has no closed-form base relation")]
    Unsupported(&'static str),
    #[error("base relation is only defined on closed trees")]
    NotClosed,
    #[error("operator {0} does not belong to the {1} signature")]
    Operator(String, &'static str),
}

/// Leaf kinds of a closed nondeterministic tree.
fn nondet_class(t: &Term) -> u8 {
    let (mut top, mut bot) = (false, false);
    fn walk(t: &Term, top: &mut bool, bot: &mut bool) {
        match t {
            Tree::Top => *top = true,
            Tree::Bottom => *bot = true,
            Tree::Node(_, cs) => cs.iter().for_each(|c| walk(c, top, bot)),
            Tree::Leaf(_) => {}
        }
    }
    walk(t, &mut top, &mut bot);
    match (top, bot) {
        (false, _) => 0,
        (true, true) => 1,
        (true, false) => 2,
    }
}

/// Normal form of a closed exception tree: `⊥`, `⊤` or a raise.
#[derive(Clone, Debug, PartialEq, Eq)]
enum ExcNf {
    Bottom,
    Top,
    Raise(ExcName),
}

fn exc_normal_form(t: &Term) -> Result<ExcNf, BaseError> {
    Ok(match t {
        Tree::Bottom => ExcNf::Bottom,
        Tree::Top => ExcNf::Top,
        Tree::Node(Op::Raise(e), _) => ExcNf::Raise(e.clone()),
        Tree::Node(Op::Catch(e), cs) => match exc_normal_form(&cs[0])? {
            ExcNf::Raise(d) if d == *e => exc_normal_form(&cs[1])?,
            other => other,
        },
        Tree::Node(op, _) => return Err(BaseError::Operator(op.to_string(), "exceptions")),
        Tree::Leaf(_) => return Err(BaseError::NotClosed),
    })
}

/// `P(t) · 2^depth(t)` as an integer, with the depth used.
fn prob_scaled(t: &Term) -> Result<(BigUint, usize), BaseError> {
    let d = t.depth();
    fn go(t: &Term, d: usize) -> Result<BigUint, BaseError> {
        Ok(match t {
            Tree::Bottom => BigUint::from(0u32),
            Tree::Top => BigUint::from(1u32) << d,
            Tree::Node(Op::Por, cs) => go(&cs[0], d - 1)? + go(&cs[1], d - 1)?,
            Tree::Node(op, _) => return Err(BaseError::Operator(op.to_string(), "prob")),
            Tree::Leaf(_) => return Err(BaseError::NotClosed),
        })
    }
    Ok((go(t, d)?, d))
}

/// Whether the run from `state` ends in `⊤`.
fn store_accepts(t: &Term, mut state: u32) -> Result<bool, BaseError> {
    let mut t = t;
    loop {
        match t {
            Tree::Top => return Ok(true),
            Tree::Bottom => return Ok(false),
            Tree::Node(Op::Upd(n), cs) => {
                state = *n;
                t = &cs[0];
            }
            Tree::Node(Op::Lkp, cs) => t = &cs[state as usize],
            Tree::Node(op, _) => return Err(BaseError::Operator(op.to_string(), "store")),
            Tree::Leaf(_) => return Err(BaseError::NotClosed),
        }
    }
}

/// Tick count before `⊤`; `None` when the run ends in `⊥`.
fn cost_ticks(t: &Term) -> Result<Option<u64>, BaseError> {
    let mut n = 0;
    let mut t = t;
    loop {
        match t {
            Tree::Top => return Ok(Some(n)),
            Tree::Bottom => return Ok(None),
            Tree::Node(Op::Tick, cs) => {
                n += 1;
                t = &cs[0];
            }
            Tree::Node(op, _) => return Err(BaseError::Operator(op.to_string(), "cost")),
            Tree::Leaf(_) => return Err(BaseError::NotClosed),
        }
    }
}

/// Decides `a IU b` for closed finite trees.
pub fn base_oracle(spec: &EffectSpec, a: &Term, b: &Term) -> Result<bool, BaseError> {
    if !a.is_closed() || !b.is_closed() {
        return Err(BaseError::NotClosed);
    }
    match spec.kind {
        EffectKind::Nondet => Ok(nondet_class(a) <= nondet_class(b)),
        EffectKind::Exceptions => Ok(match (exc_normal_form(a)?, exc_normal_form(b)?) {
            (ExcNf::Bottom, _) | (_, ExcNf::Top) => true,
            (ExcNf::Raise(e), ExcNf::Raise(d)) => e == d,
            _ => false,
        }),
        EffectKind::Prob => {
            let ((pa, da), (pb, db)) = (prob_scaled(a)?, prob_scaled(b)?);
            // pa / 2^da ≤ pb / 2^db
            Ok((pa << db).cmp(&(pb << da)) != Ordering::Greater)
        }
        EffectKind::Store => {
            for m in 0..spec.params.store_size {
                if store_accepts(a, m)? && !store_accepts(b, m)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        EffectKind::Cost => Ok(match (cost_ticks(a)?, cost_ticks(b)?) {
            (None, _) => true,
            (Some(_), None) => false,
            (Some(n), Some(m)) => n >= m,
        }),
        EffectKind::Input => Ok(a.leq(b)),
        EffectKind::NondetProb => Err(BaseError::Unsupported("nondet_prob")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::effect::{get_effect, Params};

    fn spec(name: &str) -> EffectSpec {
        get_effect(name, &Params::default()).unwrap()
    }

    fn n(op: Op, cs: Vec<Term>) -> Term {
        Tree::Node(op, cs)
    }

    #[test]
    fn examples() {
        let nd = spec("nondet");
        let a = n(Op::Or, vec![n(Op::Or, vec![Tree::Top, Tree::Bottom]), Tree::Bottom]);
        let b = n(Op::Or, vec![Tree::Top, Tree::Bottom]);
        assert!(base_oracle(&nd, &a, &b).unwrap() && base_oracle(&nd, &b, &a).unwrap());

        let pr = spec("prob");
        let a = n(Op::Por, vec![Tree::Top, n(Op::Por, vec![Tree::Top, Tree::Bottom])]);
        let b = n(Op::Por, vec![Tree::Top, Tree::Top]);
        assert!(base_oracle(&pr, &a, &b).unwrap());
        assert!(!base_oracle(&pr, &b, &a).unwrap());

        let c = spec("cost");
        let tick = n(Op::Tick, vec![Tree::Top]);
        assert!(base_oracle(&c, &tick, &Tree::Top).unwrap());
        assert!(!base_oracle(&c, &Tree::Top, &tick).unwrap());

        assert!(matches!(base_oracle(&spec("nondet_prob"), &Tree::Top, &Tree::Top), Err(BaseError::Unsupported(_))));
        assert_eq!(base_oracle(&nd, &Term::var(0), &Tree::Top), Err(BaseError::NotClosed));
    }

    #[test]
    fn store_runs() {
        let st = spec("store");
        let lkp = n(Op::Lkp, vec![Tree::Top, Tree::Bottom]);
        assert!(base_oracle(&st, &lkp, &Tree::Top).unwrap());
        assert!(!base_oracle(&st, &lkp, &n(Op::Upd(1), vec![lkp.clone()])).unwrap());
        assert!(base_oracle(&st, &n(Op::Upd(0), vec![lkp.clone()]), &Tree::Top).unwrap());
        assert!(base_oracle(&st, &Tree::Top, &n(Op::Upd(0), vec![lkp])).unwrap());
    }

    #[test]
    fn exception_normal_forms() {
        let ex = spec("exceptions");
        let e1 = ex.params.exceptions[0].clone();
        let e2 = ex.params.exceptions[1].clone();
        let raise = |e: &ExcName| n(Op::Raise(e.clone()), vec![]);
        let t = n(Op::Catch(e1.clone()), vec![raise(&e1), raise(&e2)]);
        assert!(base_oracle(&ex, &t, &raise(&e2)).unwrap());
        assert!(!base_oracle(&ex, &t, &raise(&e1)).unwrap());
        let u = n(Op::Catch(e1.clone()), vec![raise(&e2), Tree::Top]);
        assert!(base_oracle(&ex, &u, &raise(&e2)).unwrap() && base_oracle(&ex, &raise(&e2), &u).unwrap());
    }
}
