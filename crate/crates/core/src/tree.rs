//! Finite effect trees and the tree monad.
//!
//! A [`Tree`] has leaves `⊥` (divergence), `⊤` (success) and `Leaf(l)`, and
//! operator nodes labelled by an [`Op`] from the ambient signature. The monad
//! structure is `Leaf` for the unit, [`Tree::flatten`] for the multiplication
//! and [`Tree::bind`] for Kleisli substitution.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

/// A variable of an algebraic expression.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(pub u32);

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{}", self.0)
    }
}

/// The name of an exception.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ExcName(Arc<str>);

impl ExcName {
    pub fn new(name: &str) -> Self {
        ExcName(Arc::from(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ExcName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Effect operators of all supported theories.
///
/// `Lkp` has one child per store value; its arity comes from the signature.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Op {
    Or,
    Por,
    In,
    Tick,
    Upd(u32),
    Lkp,
    Raise(ExcName),
    Catch(ExcName),
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Op::Or => f.write_str("or"),
            Op::Por => f.write_str("por"),
            Op::In => f.write_str("in"),
            Op::Tick => f.write_str("tick"),
            Op::Upd(n) => write!(f, "upd[{n}]"),
            Op::Lkp => f.write_str("lkp"),
            Op::Raise(e) => write!(f, "raise[{e}]"),
            Op::Catch(e) => write!(f, "catch[{e}]"),
        }
    }
}

/// A finite effect tree with leaves drawn from `L`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Tree<L> {
    Bottom,
    Top,
    Leaf(L),
    Node(Op, Vec<Tree<L>>),
}

/// Algebraic expressions: trees over variables.
pub type Term = Tree<Var>;

/// A path from the root: the child index taken at each node.
pub type Path = Vec<usize>;

impl<L> Tree<L> {
    pub fn leaf(l: L) -> Self {
        Tree::Leaf(l)
    }

    pub fn node(op: Op, children: Vec<Tree<L>>) -> Self {
        Tree::Node(op, children)
    }

    /// Leaves have depth 0; a node has depth one more than its deepest child.
    /// Nullary nodes therefore have depth 1.
    pub fn depth(&self) -> usize {
        match self {
            Tree::Node(_, cs) => 1 + cs.iter().map(Tree::depth).max().unwrap_or(0),
            _ => 0,
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Tree::Node(_, cs) => 1 + cs.iter().map(Tree::size).sum::<usize>(),
            _ => 1,
        }
    }

    /// `T(f)`: relabel every `Leaf`, keeping the shape.
    pub fn map<M>(&self, f: &mut impl FnMut(&L) -> M) -> Tree<M> {
        match self {
            Tree::Bottom => Tree::Bottom,
            Tree::Top => Tree::Top,
            Tree::Leaf(l) => Tree::Leaf(f(l)),
            Tree::Node(op, cs) => Tree::Node(op.clone(), cs.iter().map(|c| c.map(f)).collect()),
        }
    }

    /// Kleisli substitution `f* = μ ∘ T(f)`, computed in a single pass.
    pub fn bind<M>(&self, f: &mut impl FnMut(&L) -> Tree<M>) -> Tree<M> {
        match self {
            Tree::Bottom => Tree::Bottom,
            Tree::Top => Tree::Top,
            Tree::Leaf(l) => f(l),
            Tree::Node(op, cs) => Tree::Node(op.clone(), cs.iter().map(|c| c.bind(f)).collect()),
        }
    }

    pub fn leaves(&self) -> Vec<&L> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a L>) {
        match self {
            Tree::Leaf(l) => out.push(l),
            Tree::Node(_, cs) => cs.iter().for_each(|c| c.collect_leaves(out)),
            _ => {}
        }
    }

    pub fn subtree(&self, path: &[usize]) -> Option<&Tree<L>> {
        match path.split_first() {
            None => Some(self),
            Some((&i, rest)) => match self {
                Tree::Node(_, cs) => cs.get(i)?.subtree(rest),
                _ => None,
            },
        }
    }

    /// Positions of all subtrees in pre-order.
    pub fn positions(&self) -> Vec<Path> {
        let mut out = Vec::new();
        let mut path = Vec::new();
        self.collect_positions(&mut path, &mut out);
        out
    }

    fn collect_positions(&self, path: &mut Path, out: &mut Vec<Path>) {
        out.push(path.clone());
        if let Tree::Node(_, cs) = self {
            for (i, c) in cs.iter().enumerate() {
                path.push(i);
                c.collect_positions(path, out);
                path.pop();
            }
        }
    }

    /// Structural recursion for the coinductive order on finite trees,
    /// parameterized by the order on leaves.
    pub fn leq_by<M>(&self, other: &Tree<M>, leaf_leq: &mut impl FnMut(&L, &M) -> bool) -> bool {
        match (self, other) {
            (Tree::Bottom, _) | (_, Tree::Top) => true,
            (Tree::Leaf(x), Tree::Leaf(y)) => leaf_leq(x, y),
            (Tree::Node(o1, c1), Tree::Node(o2, c2)) => {
                o1 == o2 && c1.len() == c2.len() && c1.iter().zip(c2).all(|(a, b)| a.leq_by(b, leaf_leq))
            }
            _ => false,
        }
    }

    /// Decides `a T⟨R⟩ b` for the functorial lifting of a relation.
    pub fn lift_by<M>(&self, other: &Tree<M>, rel: &mut impl FnMut(&L, &M) -> bool) -> bool {
        match (self, other) {
            (Tree::Bottom, Tree::Bottom) | (Tree::Top, Tree::Top) => true,
            (Tree::Leaf(x), Tree::Leaf(y)) => rel(x, y),
            (Tree::Node(o1, c1), Tree::Node(o2, c2)) => {
                o1 == o2 && c1.len() == c2.len() && c1.iter().zip(c2).all(|(a, b)| a.lift_by(b, rel))
            }
            _ => false,
        }
    }
}

impl<L: Clone> Tree<L> {
    /// Replace the subtree at `path`. Returns `None` for a path that leaves the tree.
    pub fn replace(&self, path: &[usize], with: Tree<L>) -> Option<Tree<L>> {
        match path.split_first() {
            None => Some(with),
            Some((&i, rest)) => match self {
                Tree::Node(op, cs) if i < cs.len() => {
                    let mut cs = cs.clone();
                    cs[i] = cs[i].replace(rest, with)?;
                    Some(Tree::Node(op.clone(), cs))
                }
                _ => None,
            },
        }
    }

    pub fn substitute<M>(&self, f: &mut impl FnMut(&L) -> Tree<M>) -> Tree<M> {
        self.bind(f)
    }
}

impl<L: PartialEq> Tree<L> {
    /// The order `≤_{TX}` with the discrete order on leaves.
    pub fn leq(&self, other: &Tree<L>) -> bool {
        self.leq_by(other, &mut |a, b| a == b)
    }
}

impl<L: Clone> Tree<Tree<L>> {
    /// `μ`: graft every leaf tree in place.
    pub fn flatten(&self) -> Tree<L> {
        self.bind(&mut |t| t.clone())
    }
}

impl Term {
    pub fn var(n: u32) -> Self {
        Tree::Leaf(Var(n))
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        self.leaves().into_iter().copied().collect()
    }

    pub fn is_closed(&self) -> bool {
        self.leaves().is_empty()
    }
}

/// A finite binary relation between the carriers `{0..left}` and `{0..right}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BinaryRelation {
    left: u32,
    right: u32,
    pairs: BTreeSet<(u32, u32)>,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("pair ({0}, {1}) lies outside the declared carriers")]
pub struct OutOfCarrier(pub u32, pub u32);

impl BinaryRelation {
    pub fn new(left: u32, right: u32, pairs: impl IntoIterator<Item = (u32, u32)>) -> Result<Self, OutOfCarrier> {
        let pairs: BTreeSet<_> = pairs.into_iter().collect();
        if let Some(&(x, y)) = pairs.iter().find(|&&(x, y)| x >= left || y >= right) {
            return Err(OutOfCarrier(x, y));
        }
        Ok(BinaryRelation { left, right, pairs })
    }

    pub fn identity(n: u32) -> Self {
        BinaryRelation { left: n, right: n, pairs: (0..n).map(|i| (i, i)).collect() }
    }

    /// Every relation between carriers of the given sizes, in bitmask order.
    pub fn all(left: u32, right: u32) -> Vec<BinaryRelation> {
        let cells: Vec<(u32, u32)> = (0..left).flat_map(|x| (0..right).map(move |y| (x, y))).collect();
        (0u64..(1u64 << cells.len()))
            .map(|mask| BinaryRelation {
                left,
                right,
                pairs: cells.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &p)| p).collect(),
            })
            .collect()
    }

    pub fn left_size(&self) -> u32 {
        self.left
    }

    pub fn right_size(&self) -> u32 {
        self.right
    }

    pub fn contains(&self, x: u32, y: u32) -> bool {
        self.pairs.contains(&(x, y))
    }

    pub fn pairs(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.pairs.iter().copied()
    }

    pub fn is_subset(&self, other: &BinaryRelation) -> bool {
        self.pairs.is_subset(&other.pairs)
    }

    /// Relational composition `R;S`.
    pub fn compose(&self, other: &BinaryRelation) -> BinaryRelation {
        let mut pairs = BTreeSet::new();
        for &(x, y) in &self.pairs {
            for &(y2, z) in &other.pairs {
                if y == y2 {
                    pairs.insert((x, z));
                }
            }
        }
        BinaryRelation { left: self.left, right: other.right, pairs }
    }

    /// `{(x, y) | f(x) R g(y)}` for `f: X → Z`, `g: Y → W`.
    pub fn reindex(&self, left: u32, f: &[u32], right: u32, g: &[u32]) -> BinaryRelation {
        let pairs = (0..left)
            .flat_map(|x| (0..right).map(move |y| (x, y)))
            .filter(|&(x, y)| self.contains(f[x as usize], g[y as usize]))
            .collect();
        BinaryRelation { left, right, pairs }
    }
}

/// Decides `a T⟨R⟩ b` for trees over the carriers of `rel`.
pub fn lift_relation_check(rel: &BinaryRelation, a: &Tree<u32>, b: &Tree<u32>) -> bool {
    a.lift_by(b, &mut |x, y| rel.contains(*x, *y))
}
