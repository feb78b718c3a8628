//! Exhaustive and random generation of trees over a signature.

use rand::Rng;

use crate::effect::Signature;
use crate::regular::{RegularTree, Slot, State};
use crate::tree::{Term, Tree, Var};

/// All trees of depth at most `depth` whose leaves are drawn from `leaves`,
/// grouped by increasing depth bound.
pub fn enumerate<L: Clone>(sig: &Signature, leaves: &[Tree<L>], depth: usize) -> Vec<Tree<L>> {
    let mut level: Vec<Tree<L>> = leaves.to_vec();
    for _ in 0..depth {
        let mut next = leaves.to_vec();
        for (op, arity) in sig.ops() {
            let mut combos: Vec<Vec<Tree<L>>> = vec![Vec::new()];
            for _ in 0..*arity {
                combos = combos
                    .into_iter()
                    .flat_map(|prefix| {
                        level.iter().map(move |c| {
                            let mut p = prefix.clone();
                            p.push(c.clone());
                            p
                        })
                    })
                    .collect();
            }
            next.extend(combos.into_iter().map(|cs| Tree::Node(op.clone(), cs)));
        }
        level = next;
    }
    level
}

/// `⊥`, `⊤` and the variables `x0..x{n-1}`.
pub fn atoms(vars: u32) -> Vec<Term> {
    let mut out = vec![Tree::Bottom, Tree::Top];
    out.extend((0..vars).map(Term::var));
    out
}

/// A random tree: below `depth`, each position is a leaf with probability `leaf_p`.
pub fn random_tree<L: Clone>(
    sig: &Signature,
    leaves: &[Tree<L>],
    depth: usize,
    leaf_p: f64,
    rng: &mut impl Rng,
) -> Tree<L> {
    if depth == 0 || sig.ops().is_empty() || rng.gen_bool(leaf_p) {
        return leaves[rng.gen_range(0..leaves.len())].clone();
    }
    let (op, arity) = &sig.ops()[rng.gen_range(0..sig.ops().len())];
    Tree::Node(op.clone(), (0..*arity).map(|_| random_tree(sig, leaves, depth - 1, leaf_p, rng)).collect())
}

pub fn random_term(sig: &Signature, vars: u32, depth: usize, rng: &mut impl Rng) -> Term {
    random_tree(sig, &atoms(vars), depth, 0.3, rng)
}

/// A random regular tree with up to `states` recursive states.
pub fn random_regular(sig: &Signature, vars: u32, states: usize, depth: usize, rng: &mut impl Rng) -> RegularTree<Var> {
    let n = rng.gen_range(0..=states);
    let mut leaves: Vec<Tree<Slot<Var>>> = vec![Tree::Bottom, Tree::Top];
    leaves.extend((0..vars).map(|v| Tree::Leaf(Slot::Leaf(Var(v)))));
    leaves.extend((0..n).map(|s| Tree::Leaf(Slot::Ref(s))));
    let states =
        (0..n).map(|s| State { name: format!("s{s}"), body: random_tree(sig, &leaves, depth, 0.3, rng) }).collect();
    let root = random_tree(sig, &leaves, depth, 0.3, rng);
    RegularTree { states, root }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::effect::{get_effect, Params};
    use rand::SeedableRng;

    #[test]
    fn enumeration_sizes() {
        let p = Params::default();
        let count = |name: &str, d| enumerate(&get_effect(name, &p).unwrap().signature, &atoms(2), d).len();
        assert_eq!(count("nondet", 2), 404);
        assert_eq!(count("prob", 2), 404);
        assert_eq!(count("store", 2), 844);
        assert_eq!(count("exceptions", 2), 2894);
        let closed = enumerate(&get_effect("nondet", &p).unwrap().signature, &atoms(0), 3);
        assert_eq!(closed.len(), 1446);
        assert!(closed.iter().all(|t| t.depth() <= 3));
    }

    #[test]
    fn random_trees_are_well_formed() {
        let sig = get_effect("store", &Params::default()).unwrap().signature;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let t = random_term(&sig, 2, 4, &mut rng);
            assert!(sig.admits(&t) && t.depth() <= 4);
            let r = random_regular(&sig, 2, 2, 3, &mut rng);
            assert!(r.states.iter().all(|s| sig.admits(&s.body)));
        }
    }
}
