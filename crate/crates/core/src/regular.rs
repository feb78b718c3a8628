//! Regular (rational) trees: finite systems of recursive equations.
//!
//! A [`RegularTree`] keeps the binder structure of the `rec s. e` syntax it
//! was written in. Algorithms run on the compiled [`Graph`] form, where every
//! state reference is an edge.

use std::collections::{HashMap, HashSet, VecDeque};
use std::hash::Hash;

use crate::tree::{Op, Tree, Var};

/// A leaf of a state body: either an ordinary leaf or a reference to a state.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Slot<L> {
    Leaf(L),
    Ref(usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct State<L> {
    pub name: String,
    pub body: Tree<Slot<L>>,
}

/// A possibly infinite tree with finitely many distinct subtrees.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RegularTree<L> {
    pub states: Vec<State<L>>,
    pub root: Tree<Slot<L>>,
}

fn shift<L: Clone>(t: &Tree<Slot<L>>, by: usize) -> Tree<Slot<L>> {
    t.map(&mut |s| match s {
        Slot::Leaf(l) => Slot::Leaf(l.clone()),
        Slot::Ref(i) => Slot::Ref(i + by),
    })
}

impl<L: Clone> RegularTree<L> {
    pub fn from_tree(t: &Tree<L>) -> Self {
        RegularTree { states: Vec::new(), root: t.map(&mut |l| Slot::Leaf(l.clone())) }
    }

    /// The single-state tree `rec name. body`, where `Slot::Ref(0)` refers back to the binder.
    pub fn rec(name: &str, body: Tree<Slot<L>>) -> Self {
        RegularTree { states: vec![State { name: name.to_string(), body }], root: Tree::Leaf(Slot::Ref(0)) }
    }

    pub fn map<M>(&self, f: &mut impl FnMut(&L) -> M) -> RegularTree<M> {
        let mut g = |s: &Slot<L>| match s {
            Slot::Leaf(l) => Slot::Leaf(f(l)),
            Slot::Ref(i) => Slot::Ref(*i),
        };
        RegularTree {
            states: self.states.iter().map(|st| State { name: st.name.clone(), body: st.body.map(&mut g) }).collect(),
            root: self.root.map(&mut g),
        }
    }

    /// Kleisli substitution of regular trees for leaves.
    pub fn bind<M: Clone>(&self, f: &mut impl FnMut(&L) -> RegularTree<M>) -> RegularTree<M> {
        let base = self.states.len();
        let mut extra: Vec<State<M>> = Vec::new();
        let mut subst = |t: &Tree<Slot<L>>, extra: &mut Vec<State<M>>| {
            t.bind(&mut |s| match s {
                Slot::Ref(i) => Tree::Leaf(Slot::Ref(*i)),
                Slot::Leaf(l) => {
                    let r = f(l);
                    let off = base + extra.len();
                    extra.extend(r.states.iter().map(|st| State { name: st.name.clone(), body: shift(&st.body, off) }));
                    shift(&r.root, off)
                }
            })
        };
        let mut states: Vec<State<M>> = Vec::with_capacity(base);
        for st in &self.states {
            let body = subst(&st.body, &mut extra);
            states.push(State { name: st.name.clone(), body });
        }
        let root = subst(&self.root, &mut extra);
        states.extend(extra);
        RegularTree { states, root }
    }

    pub fn leaves(&self) -> Vec<L> {
        let mut out = Vec::new();
        let mut push = |t: &Tree<Slot<L>>| {
            for s in t.leaves() {
                if let Slot::Leaf(l) = s {
                    out.push(l.clone());
                }
            }
        };
        push(&self.root);
        self.states.iter().for_each(|st| push(&st.body));
        out
    }

    /// The underlying finite tree when no binder occurs.
    pub fn as_finite(&self) -> Option<Tree<L>> {
        if !self.states.is_empty() {
            return None;
        }
        Some(self.root.map(&mut |s| match s {
            Slot::Leaf(l) => l.clone(),
            Slot::Ref(_) => unreachable!("no states"),
        }))
    }

    pub fn graph(&self) -> Graph<L> {
        Graph::from_regular(self)
    }
}

impl RegularTree<Var> {
    pub fn vars(&self) -> std::collections::BTreeSet<Var> {
        self.leaves().into_iter().collect()
    }
}

/// A node of a compiled regular tree.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum GNode<L> {
    Bottom,
    Top,
    Leaf(L),
    Node(Op, Vec<usize>),
}

/// A rooted graph whose unfolding is a regular tree. Every node is reachable
/// from the root.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Graph<L> {
    nodes: Vec<GNode<L>>,
    root: usize,
}

/// Filler for the frontier of a truncation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fill {
    Bottom,
    Top,
}

impl<L: Clone> Graph<L> {
    pub fn from_parts(nodes: Vec<GNode<L>>, root: usize) -> Self {
        Graph { nodes, root }.pruned()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn nodes(&self) -> &[GNode<L>] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &GNode<L> {
        &self.nodes[i]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn bottom() -> Self {
        Graph { nodes: vec![GNode::Bottom], root: 0 }
    }

    pub fn top() -> Self {
        Graph { nodes: vec![GNode::Top], root: 0 }
    }

    pub fn from_tree(t: &Tree<L>) -> Self {
        fn go<L: Clone>(t: &Tree<L>, nodes: &mut Vec<GNode<L>>) -> usize {
            let node = match t {
                Tree::Bottom => GNode::Bottom,
                Tree::Top => GNode::Top,
                Tree::Leaf(l) => GNode::Leaf(l.clone()),
                Tree::Node(op, cs) => {
                    let ids = cs.iter().map(|c| go(c, nodes)).collect();
                    GNode::Node(op.clone(), ids)
                }
            };
            nodes.push(node);
            nodes.len() - 1
        }
        let mut nodes = Vec::new();
        let root = go(t, &mut nodes);
        Graph { nodes, root }
    }

    fn from_regular(r: &RegularTree<L>) -> Self {
        // Chains of bare references resolve to their target; a cycle of them denotes ⊥.
        let resolve = |mut s: usize| -> Option<usize> {
            let mut seen = HashSet::new();
            while let Tree::Leaf(Slot::Ref(t)) = &r.states[s].body {
                if !seen.insert(s) {
                    return None;
                }
                s = *t;
            }
            Some(s)
        };
        let mut nodes: Vec<GNode<L>> = vec![GNode::Bottom; r.states.len()];
        let targets: Vec<Option<usize>> = (0..r.states.len()).map(resolve).collect();
        let bottom = nodes.len();
        nodes.push(GNode::Bottom);

        fn build<L: Clone>(
            t: &Tree<Slot<L>>,
            targets: &[Option<usize>],
            bottom: usize,
            nodes: &mut Vec<GNode<L>>,
        ) -> GNode<L> {
            match t {
                Tree::Bottom => GNode::Bottom,
                Tree::Top => GNode::Top,
                Tree::Leaf(Slot::Leaf(l)) => GNode::Leaf(l.clone()),
                Tree::Leaf(Slot::Ref(_)) => unreachable!("handled by compile"),
                Tree::Node(op, cs) => {
                    let ids = cs.iter().map(|c| compile(c, targets, bottom, nodes)).collect();
                    GNode::Node(op.clone(), ids)
                }
            }
        }
        fn compile<L: Clone>(
            t: &Tree<Slot<L>>,
            targets: &[Option<usize>],
            bottom: usize,
            nodes: &mut Vec<GNode<L>>,
        ) -> usize {
            if let Tree::Leaf(Slot::Ref(s)) = t {
                return targets[*s].unwrap_or(bottom);
            }
            let n = build(t, targets, bottom, nodes);
            nodes.push(n);
            nodes.len() - 1
        }

        for (s, st) in r.states.iter().enumerate() {
            if targets[s] == Some(s) {
                let n = build(&st.body, &targets, bottom, &mut nodes);
                nodes[s] = n;
            }
        }
        let root = compile(&r.root, &targets, bottom, &mut nodes);
        Graph { nodes, root }.pruned()
    }

    /// Drop unreachable nodes and renumber in depth-first discovery order.
    fn pruned(self) -> Self {
        let mut order = Vec::new();
        let mut index = vec![usize::MAX; self.nodes.len()];
        let mut stack = vec![self.root];
        while let Some(n) = stack.pop() {
            if index[n] != usize::MAX {
                continue;
            }
            index[n] = order.len();
            order.push(n);
            if let GNode::Node(_, cs) = &self.nodes[n] {
                stack.extend(cs.iter().rev());
            }
        }
        let nodes = order
            .iter()
            .map(|&n| match &self.nodes[n] {
                GNode::Node(op, cs) => GNode::Node(op.clone(), cs.iter().map(|c| index[*c]).collect()),
                other => other.clone(),
            })
            .collect();
        Graph { nodes, root: 0 }
    }

    pub fn map<M: Clone>(&self, f: &mut impl FnMut(&L) -> M) -> Graph<M> {
        Graph {
            nodes: self
                .nodes
                .iter()
                .map(|n| match n {
                    GNode::Bottom => GNode::Bottom,
                    GNode::Top => GNode::Top,
                    GNode::Leaf(l) => GNode::Leaf(f(l)),
                    GNode::Node(op, cs) => GNode::Node(op.clone(), cs.clone()),
                })
                .collect(),
            root: self.root,
        }
    }

    /// Graft a graph in place of every leaf.
    pub fn bind<M: Clone>(&self, f: &mut impl FnMut(&L) -> Graph<M>) -> Graph<M> {
        let mut out: Vec<GNode<M>> = Vec::new();
        let mut ids = vec![0usize; self.nodes.len()];
        for (i, n) in self.nodes.iter().enumerate() {
            if let GNode::Leaf(l) = n {
                let g = f(l);
                let off = out.len();
                out.extend(g.nodes.into_iter().map(|n| match n {
                    GNode::Node(op, cs) => GNode::Node(op, cs.into_iter().map(|c| c + off).collect()),
                    other => other,
                }));
                ids[i] = off + g.root;
            } else {
                ids[i] = out.len();
                out.push(GNode::Bottom);
            }
        }
        for (i, n) in self.nodes.iter().enumerate() {
            match n {
                GNode::Top => out[ids[i]] = GNode::Top,
                GNode::Node(op, cs) => out[ids[i]] = GNode::Node(op.clone(), cs.iter().map(|c| ids[*c]).collect()),
                _ => {}
            }
        }
        Graph { nodes: out, root: ids[self.root] }.pruned()
    }

    /// Whether the unfolding is infinite.
    pub fn has_cycle(&self) -> bool {
        // 0 = unvisited, 1 = on stack, 2 = done
        let mut color = vec![0u8; self.nodes.len()];
        let mut stack: Vec<(usize, usize)> = vec![(self.root, 0)];
        color[self.root] = 1;
        while let Some((n, next)) = stack.pop() {
            let children: &[usize] = match &self.nodes[n] {
                GNode::Node(_, cs) => cs,
                _ => &[],
            };
            if next < children.len() {
                stack.push((n, next + 1));
                let c = children[next];
                match color[c] {
                    1 => return true,
                    0 => {
                        color[c] = 1;
                        stack.push((c, 0));
                    }
                    _ => {}
                }
            } else {
                color[n] = 2;
            }
        }
        false
    }

    /// The unfolding, when it is finite.
    pub fn to_tree(&self) -> Option<Tree<L>> {
        if self.has_cycle() {
            return None;
        }
        Some(self.unfold(self.root, usize::MAX, Fill::Bottom))
    }

    /// Unfold to `depth`; operator nodes at the frontier are replaced by `fill`.
    pub fn truncate(&self, depth: usize, fill: Fill) -> Tree<L> {
        self.unfold(self.root, depth, fill)
    }

    fn unfold(&self, n: usize, depth: usize, fill: Fill) -> Tree<L> {
        match &self.nodes[n] {
            GNode::Bottom => Tree::Bottom,
            GNode::Top => Tree::Top,
            GNode::Leaf(l) => Tree::Leaf(l.clone()),
            GNode::Node(op, cs) => {
                if depth == 0 {
                    match fill {
                        Fill::Bottom => Tree::Bottom,
                        Fill::Top => Tree::Top,
                    }
                } else {
                    Tree::Node(op.clone(), cs.iter().map(|c| self.unfold(*c, depth.saturating_sub(1), fill)).collect())
                }
            }
        }
    }

    /// The coinductive order, decided as a greatest fixed point over pairs of nodes.
    pub fn leq_by<M: Clone>(&self, other: &Graph<M>, leaf_leq: &mut impl FnMut(&L, &M) -> bool) -> bool {
        let mut index: HashMap<(usize, usize), usize> = HashMap::new();
        let mut pairs: Vec<(usize, usize)> = Vec::new();
        let mut parents: Vec<Vec<usize>> = Vec::new();
        let mut alive: Vec<bool> = Vec::new();
        let mut dead = Vec::new();
        let mut queue = VecDeque::new();

        index.insert((self.root, other.root), 0);
        pairs.push((self.root, other.root));
        parents.push(Vec::new());
        alive.push(true);
        queue.push_back(0);

        while let Some(p) = queue.pop_front() {
            let (n, m) = pairs[p];
            let ok = match (&self.nodes[n], &other.nodes[m]) {
                (GNode::Bottom, _) | (_, GNode::Top) => true,
                (GNode::Leaf(x), GNode::Leaf(y)) => leaf_leq(x, y),
                (GNode::Node(o1, c1), GNode::Node(o2, c2)) if o1 == o2 && c1.len() == c2.len() => {
                    for (&a, &b) in c1.iter().zip(c2) {
                        let q = *index.entry((a, b)).or_insert_with(|| {
                            pairs.push((a, b));
                            parents.push(Vec::new());
                            alive.push(true);
                            queue.push_back(pairs.len() - 1);
                            pairs.len() - 1
                        });
                        parents[q].push(p);
                    }
                    true
                }
                _ => false,
            };
            if !ok {
                alive[p] = false;
                dead.push(p);
            }
        }
        while let Some(q) = dead.pop() {
            for &p in &parents[q] {
                if alive[p] {
                    alive[p] = false;
                    dead.push(p);
                }
            }
        }
        alive[0]
    }

    /// Rebuild binder syntax: nodes that are targets of back edges become states.
    pub fn to_regular(&self) -> RegularTree<L> {
        let mut binders = HashSet::new();
        let mut on_path = vec![false; self.nodes.len()];
        self.find_back_edges(self.root, &mut on_path, &mut binders);

        let mut states: Vec<State<L>> = Vec::new();
        let mut open: HashMap<usize, usize> = HashMap::new();
        let root = self.rebuild(self.root, &binders, &mut open, &mut states);
        RegularTree { states, root }
    }

    fn find_back_edges(&self, n: usize, on_path: &mut [bool], binders: &mut HashSet<usize>) {
        on_path[n] = true;
        if let GNode::Node(_, cs) = &self.nodes[n] {
            for &c in cs {
                if on_path[c] {
                    binders.insert(c);
                } else {
                    self.find_back_edges(c, on_path, binders);
                }
            }
        }
        on_path[n] = false;
    }

    fn rebuild(
        &self,
        n: usize,
        binders: &HashSet<usize>,
        open: &mut HashMap<usize, usize>,
        states: &mut Vec<State<L>>,
    ) -> Tree<Slot<L>> {
        if let Some(&s) = open.get(&n) {
            return Tree::Leaf(Slot::Ref(s));
        }
        let state = if binders.contains(&n) {
            let s = states.len();
            states.push(State { name: format!("s{s}"), body: Tree::Bottom });
            open.insert(n, s);
            Some(s)
        } else {
            None
        };
        let body = match &self.nodes[n] {
            GNode::Bottom => Tree::Bottom,
            GNode::Top => Tree::Top,
            GNode::Leaf(l) => Tree::Leaf(Slot::Leaf(l.clone())),
            GNode::Node(op, cs) => {
                Tree::Node(op.clone(), cs.iter().map(|c| self.rebuild(*c, binders, open, states)).collect())
            }
        };
        match state {
            Some(s) => {
                open.remove(&n);
                states[s].body = body;
                Tree::Leaf(Slot::Ref(s))
            }
            None => body,
        }
    }
}

impl<L: Clone + PartialEq> Graph<L> {
    pub fn leq(&self, other: &Graph<L>) -> bool {
        self.leq_by(other, &mut |a, b| a == b)
    }
}

impl<L: Clone + Eq + Hash> Graph<L> {
    /// The minimal graph with the same unfolding, numbered canonically, so
    /// that structural equality coincides with equality of infinite trees.
    pub fn canonical(&self) -> Graph<L> {
        #[derive(PartialEq, Eq, Hash)]
        enum Label<'a, L> {
            Bottom,
            Top,
            Leaf(&'a L),
            Node(&'a Op, usize),
        }
        fn label<L>(n: &GNode<L>) -> Label<'_, L> {
            match n {
                GNode::Bottom => Label::Bottom,
                GNode::Top => Label::Top,
                GNode::Leaf(l) => Label::Leaf(l),
                GNode::Node(op, cs) => Label::Node(op, cs.len()),
            }
        }
        let mut ids: HashMap<Label<'_, L>, usize> = HashMap::new();
        let mut block: Vec<usize> = self
            .nodes
            .iter()
            .map(|n| {
                let k = ids.len();
                *ids.entry(label(n)).or_insert(k)
            })
            .collect();
        let mut count = ids.len();
        loop {
            let mut sig: HashMap<(usize, Vec<usize>), usize> = HashMap::new();
            let next: Vec<usize> = self
                .nodes
                .iter()
                .enumerate()
                .map(|(i, n)| {
                    let children = match n {
                        GNode::Node(_, cs) => cs.iter().map(|c| block[*c]).collect(),
                        _ => Vec::new(),
                    };
                    let k = sig.len();
                    *sig.entry((block[i], children)).or_insert(k)
                })
                .collect();
            let refined = sig.len();
            block = next;
            if refined == count {
                break;
            }
            count = refined;
        }
        // Representative per block, then renumber by discovery from the root.
        let mut rep = vec![usize::MAX; count];
        for (i, &b) in block.iter().enumerate() {
            if rep[b] == usize::MAX {
                rep[b] = i;
            }
        }
        let collapsed: Vec<GNode<L>> = rep
            .iter()
            .map(|&i| match &self.nodes[i] {
                GNode::Node(op, cs) => GNode::Node(op.clone(), cs.iter().map(|c| block[*c]).collect()),
                other => other.clone(),
            })
            .collect();
        Graph { nodes: collapsed, root: block[self.root] }.pruned()
    }

    pub fn same(&self, other: &Graph<L>) -> bool {
        self.canonical() == other.canonical()
    }
}

impl<L: Clone> Graph<Graph<L>> {
    pub fn flatten(&self) -> Graph<L> {
        self.bind(&mut |g| g.clone())
    }
}

/// Decides the order between two regular trees with the discrete order on leaves.
pub fn regular_leq<L: Clone + PartialEq>(a: &RegularTree<L>, b: &RegularTree<L>) -> bool {
    a.graph().leq(&b.graph())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tick_loop() -> RegularTree<Var> {
        RegularTree::rec("s", Tree::Node(Op::Tick, vec![Tree::Leaf(Slot::Ref(0))]))
    }

    fn por_top_loop() -> RegularTree<Var> {
        RegularTree::rec("s", Tree::Node(Op::Por, vec![Tree::Top, Tree::Leaf(Slot::Ref(0))]))
    }

    #[test]
    fn truncation_examples() {
        let t = tick_loop().graph();
        let tick = |x: Tree<Var>| Tree::Node(Op::Tick, vec![x]);
        assert_eq!(t.truncate(3, Fill::Bottom), tick(tick(tick(Tree::Bottom))));
        let p = por_top_loop().graph();
        let por = |x: Tree<Var>| Tree::Node(Op::Por, vec![Tree::Top, x]);
        assert_eq!(p.truncate(2, Fill::Bottom), por(por(Tree::Bottom)));
        assert_eq!(p.truncate(2, Fill::Top), por(por(Tree::Top)));
    }

    #[test]
    fn bare_reference_cycle_is_bottom() {
        let r: RegularTree<Var> = RegularTree::rec("s", Tree::Leaf(Slot::Ref(0)));
        assert_eq!(r.graph().to_tree(), Some(Tree::Bottom));
    }

    #[test]
    fn regular_order() {
        let t = tick_loop().graph();
        assert!(t.leq(&t));
        assert!(Graph::<Var>::bottom().leq(&t));
        assert!(t.leq(&Graph::top()));
        assert!(!t.leq(&Graph::bottom()));
        // rec s. tick(s) vs tick(rec s. tick(s)): same infinite tree
        let unrolled =
            RegularTree { states: tick_loop().states, root: Tree::Node(Op::Tick, vec![Tree::Leaf(Slot::Ref(0))]) }
                .graph();
        assert!(t.leq(&unrolled) && unrolled.leq(&t));
        assert!(t.same(&unrolled));
        assert!(!t.leq(&Graph::from_tree(&Tree::Node(Op::Tick, vec![Tree::Bottom]))));
    }

    #[test]
    fn canonical_collapses_unrollings() {
        let t = tick_loop().graph().canonical();
        assert_eq!(t.len(), 1);
        let g = Graph::from_tree(&Tree::Node(Op::Or, vec![Tree::<Var>::Top, Tree::Top])).canonical();
        assert_eq!(g.len(), 2);
    }

    #[test]
    fn bind_grafts_regular_trees() {
        let body = Tree::Node(Op::Por, vec![Tree::Leaf(Slot::Leaf(Var(0))), Tree::Leaf(Slot::Ref(0))]);
        let r = RegularTree::rec("s", body);
        let inst = r.bind(&mut |_| RegularTree::from_tree(&Tree::Top));
        assert!(inst.graph().same(&por_top_loop().graph()));
    }

    #[test]
    fn to_regular_round_trips_graphs() {
        let g = por_top_loop().graph();
        let back = g.to_regular();
        assert_eq!(back.states.len(), 1);
        assert!(back.graph().same(&g));
    }
}
