//! Property tests: monad laws, the tree order, truncations, lifting,
//! substitution, concrete syntax, evaluation monotonicity, the modal
//! preorder and negation.

use std::collections::BTreeMap;

use effalg::effect::{get_effect, EffectKind, EffectSpec, Params};
use effalg::gen::random_regular;
use effalg::involution::{negate, negate_regular, Involution};
use effalg::modalities::modal_leq;
use effalg::regular::{Fill, RegularTree};
use effalg::relations::check_leq;
use effalg::semantics::eval::eval_term;
use effalg::semantics::laws::random_value;
use effalg::semantics::value::{Assignment, Space, Value};
use effalg::syntax::{parse_expr, parse_term, print_regular, print_term};
use effalg::tree::{lift_relation_check, BinaryRelation, Term, Tree, Var};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const VARS: u32 = 3;

fn spec(i: usize) -> EffectSpec {
    get_effect(EffectKind::ALL[i].name(), &Params::default()).unwrap()
}

fn tree_of<L: Clone + std::fmt::Debug + 'static>(
    spec: &EffectSpec,
    leaf: impl Strategy<Value = Tree<L>> + 'static,
) -> impl Strategy<Value = Tree<L>> {
    let ops = spec.signature.ops().to_vec();
    leaf.prop_recursive(3, 32, 4, move |inner| {
        prop::sample::select(ops.clone()).prop_flat_map(move |(op, n)| {
            prop::collection::vec(inner.clone(), n).prop_map(move |cs| Tree::Node(op.clone(), cs))
        })
    })
}

fn term(spec: &EffectSpec) -> impl Strategy<Value = Term> {
    tree_of(spec, prop_oneof![Just(Tree::Bottom), Just(Tree::Top), (0..VARS).prop_map(Term::var)])
}

/// An effect index with a term over its signature.
fn effect_and_term() -> impl Strategy<Value = (usize, Term)> {
    (0..EffectKind::ALL.len()).prop_flat_map(|i| (Just(i), term(&spec(i))))
}

fn effect_and_terms(n: usize) -> impl Strategy<Value = (usize, Vec<Term>)> {
    (0..EffectKind::ALL.len()).prop_flat_map(move |i| (Just(i), prop::collection::vec(term(&spec(i)), n)))
}

fn position(t: &Term, pick: prop::sample::Index) -> Vec<usize> {
    let ps = t.positions();
    ps[pick.index(ps.len())].clone()
}

fn assignment(spec: &EffectSpec, seed: u64) -> Assignment {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Assignment::from_pairs((0..VARS).map(|v| (Var(v), random_value(spec, &mut rng))))
}

fn value(spec: &EffectSpec, t: &Term, h: &Assignment) -> Value {
    eval_term(spec, t, h).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn unit_laws((_, ts) in effect_and_terms(4)) {
        let t = &ts[0];
        prop_assert_eq!(&t.bind(&mut |v| Tree::Leaf(*v)), t);
        let f = |v: &Var| ts[1 + v.0 as usize].clone();
        for v in 0..VARS {
            prop_assert_eq!(Term::var(v).bind(&mut |x| f(x)), f(&Var(v)));
        }
    }

    #[test]
    fn kleisli_associativity((_, ts) in effect_and_terms(7)) {
        let f = |v: &Var| ts[1 + v.0 as usize].clone();
        let g = |v: &Var| ts[4 + v.0 as usize].clone();
        let left = ts[0].bind(&mut |v| f(v)).bind(&mut |v| g(v));
        let right = ts[0].bind(&mut |v| f(v).bind(&mut |w| g(w)));
        prop_assert_eq!(left, right);
    }

    #[test]
    fn tree_order((_, t) in effect_and_term(), pick in any::<prop::sample::Index>()) {
        let p = position(&t, pick);
        let up = t.replace(&p, Tree::Top).unwrap();
        let down = t.replace(&p, Tree::Bottom).unwrap();
        prop_assert!(t.leq(&t));
        prop_assert!(down.leq(&t) && t.leq(&up) && down.leq(&up));
        prop_assert_eq!(up.leq(&t), up == t);
        prop_assert_eq!(t.leq(&down), t == down);
        prop_assert!(Term::Bottom.leq(&t) && t.leq(&Term::Top));
    }

    #[test]
    fn truncations_form_chains(i in 0..EffectKind::ALL.len(), seed in any::<u64>()) {
        let s = spec(i);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_regular(&s.signature, 2, 2, 2, &mut rng).graph();
        for n in 0..5 {
            let (lo, hi) = (g.truncate(n, Fill::Bottom), g.truncate(n, Fill::Top));
            prop_assert!(lo.leq(&hi));
            prop_assert!(lo.leq(&g.truncate(n + 1, Fill::Bottom)));
            prop_assert!(g.truncate(n + 1, Fill::Top).leq(&hi));
        }
    }

    #[test]
    fn lifting_relates_functional_images((_, t) in effect_and_term(), bits in any::<[bool; 9]>()) {
        let a: Tree<u32> = t.map(&mut |v| v.0);
        prop_assert!(lift_relation_check(&BinaryRelation::identity(VARS), &a, &a));
        let pairs = (0..VARS).flat_map(|x| (0..VARS).map(move |y| (x, y)));
        let rel = BinaryRelation::new(VARS, VARS, pairs.filter(|&(x, y)| bits[(x * VARS + y) as usize])).unwrap();
        let b: Tree<u32> = a.map(&mut |x| (0..VARS).find(|&y| rel.contains(*x, y)).unwrap_or(*x));
        let related = a.leaves().iter().all(|x| (0..VARS).any(|y| rel.contains(**x, y)));
        if related {
            prop_assert!(lift_relation_check(&rel, &a, &b));
        }
    }

    #[test]
    fn evaluation_commutes_with_substitution((i, ts) in effect_and_terms(4), seed in any::<u64>()) {
        let s = spec(i);
        let h = assignment(&s, seed);
        let inner = Assignment::from_pairs((0..VARS).map(|v| (Var(v), value(&s, &ts[1 + v as usize], &h))));
        let flat = ts[0].bind(&mut |v| ts[1 + v.0 as usize].clone());
        prop_assert_eq!(value(&s, &flat, &h), value(&s, &ts[0], &inner));
    }

    #[test]
    fn parse_print_round_trip((i, t) in effect_and_term(), seed in any::<u64>()) {
        let s = spec(i);
        prop_assert_eq!(parse_term(&print_term(&t), Some(&s)).unwrap(), t);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = random_regular(&s.signature, 2, 2, 2, &mut rng);
        let text = print_regular(&r);
        let back = parse_expr(&text, Some(&s)).unwrap();
        prop_assert_eq!(print_regular(&back), text);
        prop_assert!(back.graph().same(&r.graph()));
    }

    #[test]
    fn evaluation_is_monotone((i, t) in effect_and_term(), pick in any::<prop::sample::Index>(), seed in any::<u64>()) {
        let s = spec(i);
        let space = Space::of(&s);
        let h = assignment(&s, seed);
        let p = position(&t, pick);
        let (down, up) = (t.replace(&p, Tree::Bottom).unwrap(), t.replace(&p, Tree::Top).unwrap());
        let (vd, vt, vu) = (value(&s, &down, &h), value(&s, &t, &h), value(&s, &up, &h));
        prop_assert!(space.leq(&vd, &vt).unwrap());
        prop_assert!(space.leq(&vt, &vu).unwrap());
    }

    #[test]
    fn double_negation((i, t) in effect_and_term(), seed in any::<u64>()) {
        let id = Involution::identity();
        prop_assert_eq!(negate(&negate(&t, &id), &id), t.clone());
        let swap = Involution::new(BTreeMap::from([(Var(0), Var(1)), (Var(1), Var(0))])).unwrap();
        prop_assert_eq!(negate(&negate(&t, &swap), &swap), t);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = random_regular(&spec(i).signature, 2, 2, 2, &mut rng);
        prop_assert!(negate_regular(&negate_regular(&r, &id), &id).graph().same(&r.graph()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn assignment_preorder_is_inside_modal_preorder((i, ts) in effect_and_terms(2), pick in any::<prop::sample::Index>()) {
        let s = spec(i);
        let a = RegularTree::from_tree(&ts[0]);
        let p = position(&ts[0], pick);
        let above = RegularTree::from_tree(&ts[0].replace(&p, Tree::Top).unwrap());
        for b in [RegularTree::from_tree(&ts[1]), above] {
            if check_leq(&s, &a, &b).unwrap().status.is_refuted() {
                continue;
            }
            prop_assert!(!modal_leq(&s, &a, &b).unwrap().status.is_refuted());
        }
    }
}
