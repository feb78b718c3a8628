//! Sampled checks of the Eilenberg-Moore unit and multiplication laws.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::effect::{EffectKind, EffectSpec};
use crate::gen;
use crate::regular::Graph;
use crate::semantics::dyadic::Dyadic;
use crate::semantics::eval::alpha_tree;
use crate::semantics::quotient::{alpha_quotient, ValueTable};
use crate::semantics::value::{ExtNat, Nothing, Space, Value};
use crate::tree::Tree;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EmReport {
    pub unit_checks: usize,
    pub mult_checks: usize,
    pub failures: Vec<String>,
}

impl EmReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// A random value of the effect's space.
pub fn random_value(spec: &EffectSpec, rng: &mut impl Rng) -> Value {
    let space = Space::of(spec);
    if let Some(els) = space.elements() {
        return els[rng.gen_range(0..els.len())].clone();
    }
    let dyadic = |rng: &mut ChaCha8Rng| {
        let e = rng.gen_range(0..5u32);
        Dyadic::new(rng.gen_range(0..=(1u32 << e)), e)
    };
    let mut r = ChaCha8Rng::seed_from_u64(rng.gen());
    match space {
        Space::Prob => Value::Prob(dyadic(&mut r)),
        Space::Pair => {
            let (a, b) = (dyadic(&mut r), dyadic(&mut r));
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            Value::Pair(lo, hi)
        }
        Space::Cost => {
            if r.gen_bool(0.2) {
                Value::Cost(ExtNat::Inf)
            } else {
                Value::Cost(ExtNat::Fin(r.gen_range(0..6)))
            }
        }
        Space::Tree => {
            let t: Tree<Nothing> = gen::random_tree(&spec.signature, &[Tree::Bottom, Tree::Top], 3, 0.4, &mut r);
            Value::Tree(Graph::from_tree(&t).canonical())
        }
        _ => unreachable!("finite spaces handled above"),
    }
}

fn random_value_tree(spec: &EffectSpec, depth: usize, rng: &mut impl Rng) -> Tree<Value> {
    let pool: Vec<Tree<Value>> =
        (0..4).map(|_| Tree::Leaf(random_value(spec, rng))).chain([Tree::Bottom, Tree::Top]).collect();
    gen::random_tree(&spec.signature, &pool, depth, 0.3, rng)
}

/// Checks `α ∘ η = id` and `α ∘ T(α) = α ∘ μ` for the exact algebra of `spec`
/// on `samples` random values and double trees.
pub fn check_em_laws(spec: &EffectSpec, samples: usize, seed: u64) -> EmReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = EmReport::default();
    for i in 0..samples {
        let v = random_value(spec, &mut rng);
        match alpha_tree(spec, &Tree::Leaf(v.clone())) {
            Ok(w) if w == v => {}
            other => report.failures.push(format!("unit law, sample {i}: {v:?} gave {other:?}")),
        }
        report.unit_checks += 1;

        let inner: Vec<Tree<Tree<Value>>> = (0..3).map(|_| Tree::Leaf(random_value_tree(spec, 2, &mut rng))).collect();
        let mut pool = inner;
        pool.extend([Tree::Bottom, Tree::Top]);
        let double: Tree<Tree<Value>> = gen::random_tree(&spec.signature, &pool, 2, 0.3, &mut rng);
        let lhs = collect(double.map(&mut |t| alpha_tree(spec, t))).and_then(|t| alpha_tree(spec, &t));
        let rhs = alpha_tree(spec, &double.flatten());
        if lhs != rhs || lhs.is_err() {
            report.failures.push(format!("multiplication law, sample {i}: {lhs:?} vs {rhs:?}"));
        }
        report.mult_checks += 1;
    }
    report
}

fn collect<T: Clone, E: Clone>(t: Tree<Result<T, E>>) -> Result<Tree<T>, E> {
    let mut err = None;
    let out = t.map(&mut |r| match r {
        Ok(v) => Some(v.clone()),
        Err(e) => {
            err = Some(e.clone());
            None
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(out.map(&mut |v| v.clone().expect("no errors"))),
    }
}

/// The same laws for the quotient algebra of a table: the unit law on every
/// class and the multiplication law on `samples` random double trees.
pub fn check_em_laws_quotient(table: &ValueTable, samples: usize, seed: u64) -> EmReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = EmReport::default();
    for i in 0..table.len() {
        match alpha_quotient(table, &Tree::Leaf(i)) {
            Ok(j) if j == i => {}
            other => report.failures.push(format!("unit law on class {i}: {other:?}")),
        }
        report.unit_checks += 1;
    }
    let classes: Vec<Tree<usize>> = (0..table.len()).map(Tree::Leaf).chain([Tree::Bottom, Tree::Top]).collect();
    let sig = &table.spec.signature;
    for s in 0..samples {
        let pool: Vec<Tree<Tree<usize>>> = (0..3)
            .map(|_| Tree::Leaf(gen::random_tree(sig, &classes, 2, 0.4, &mut rng)))
            .chain([Tree::Bottom, Tree::Top])
            .collect();
        let double = gen::random_tree(sig, &pool, 2, 0.3, &mut rng);
        let inner: Result<Tree<usize>, _> = collect(double.map(&mut |t| alpha_quotient(table, t)));
        let lhs = inner.and_then(|t| alpha_quotient(table, &t));
        let rhs = alpha_quotient(table, &double.flatten());
        if lhs != rhs || lhs.is_err() {
            report.failures.push(format!("multiplication law, sample {s}: {lhs:?} vs {rhs:?}"));
        }
        report.mult_checks += 1;
    }
    report
}

/// Whether the quotient algebra is available for `spec` at small depth.
pub fn has_quotient(spec: &EffectSpec) -> bool {
    spec.kind != EffectKind::NondetProb
}
