//! A bounded derivation oracle: the preorder generated by a fixed number of
//! rounds of axiom rewriting and order steps, closed under reflexivity and
//! transitivity.
//!
//! Terms are hash-consed. Each round rewrites every term of the frontier at
//! every position with every finite axiom (equations in both directions,
//! inequations left to right) and adds the single-position order steps
//! `t ≤ t[p := ⊤]` and `t[p := ⊥] ≤ t`. Terms deeper than `max_depth` are
//! discarded. The closure is computed on the strongly connected components
//! of the resulting graph, restricted to the domain terms. The result
//! under-approximates the axiomatic preorder.

use std::collections::HashMap;

use fixedbitset::FixedBitSet;

use crate::effect::EffectSpec;
use crate::tree::{Op, Term, Tree, Var};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SaturationConfig {
    pub rounds: usize,
    pub max_depth: usize,
    /// Bound on the number of interned terms; later terms are dropped.
    pub max_terms: usize,
    /// Terms tried for metavariables that occur only on the produced side.
    pub fillers: Vec<Term>,
}

impl SaturationConfig {
    /// Six rounds, depth at most 3, fillers `⊥`, `⊤`, `x0`, `x1` and the constants of `spec`.
    pub fn for_spec(spec: &EffectSpec) -> Self {
        let mut fillers = crate::gen::atoms(2);
        fillers.extend(
            spec.signature.ops().iter().filter(|(_, a)| *a == 0).map(|(op, _)| Tree::Node(op.clone(), Vec::new())),
        );
        SaturationConfig { rounds: 6, max_depth: 3, max_terms: 150_000, fillers }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum Node {
    Bottom,
    Top,
    Var(u32),
    Op(u16, Box<[u32]>),
}

struct Store {
    ops: Vec<Op>,
    nodes: Vec<Node>,
    depth: Vec<u8>,
    ids: HashMap<Node, u32>,
    max_terms: usize,
}

impl Store {
    fn intern(&mut self, n: Node) -> Option<u32> {
        if let Some(&id) = self.ids.get(&n) {
            return Some(id);
        }
        if self.nodes.len() >= self.max_terms {
            return None;
        }
        let d = match &n {
            Node::Op(_, cs) => 1 + cs.iter().map(|&c| self.depth[c as usize]).max().unwrap_or(0),
            _ => 0,
        };
        let id = self.nodes.len() as u32;
        self.nodes.push(n.clone());
        self.depth.push(d);
        self.ids.insert(n, id);
        Some(id)
    }

    fn op_index(&self, op: &Op) -> u16 {
        self.ops.iter().position(|o| o == op).expect("operator of the signature") as u16
    }

    fn intern_term(&mut self, t: &Term) -> Option<u32> {
        let n = match t {
            Tree::Bottom => Node::Bottom,
            Tree::Top => Node::Top,
            Tree::Leaf(v) => Node::Var(v.0),
            Tree::Node(op, cs) => {
                let ids = cs.iter().map(|c| self.intern_term(c)).collect::<Option<Vec<_>>>()?;
                Node::Op(self.op_index(op), ids.into_boxed_slice())
            }
        };
        self.intern(n)
    }

    fn term(&self, id: u32) -> Term {
        match &self.nodes[id as usize] {
            Node::Bottom => Tree::Bottom,
            Node::Top => Tree::Top,
            Node::Var(v) => Tree::Leaf(Var(*v)),
            Node::Op(o, cs) => Tree::Node(self.ops[*o as usize].clone(), cs.iter().map(|&c| self.term(c)).collect()),
        }
    }

    fn matches(&self, pat: &Term, id: u32, binding: &mut HashMap<Var, u32>) -> bool {
        match (pat, &self.nodes[id as usize]) {
            (Tree::Leaf(v), _) => match binding.get(v) {
                Some(&b) => b == id,
                None => {
                    binding.insert(*v, id);
                    true
                }
            },
            (Tree::Bottom, Node::Bottom) | (Tree::Top, Node::Top) => true,
            (Tree::Node(op, pcs), Node::Op(o, cs)) => {
                self.ops[*o as usize] == *op
                    && pcs.len() == cs.len()
                    && pcs.iter().zip(cs.iter()).all(|(p, &c)| self.matches(p, c, binding))
            }
            _ => false,
        }
    }

    fn build(&mut self, pat: &Term, binding: &HashMap<Var, u32>) -> Option<u32> {
        let n = match pat {
            Tree::Leaf(v) => return Some(binding[v]),
            Tree::Bottom => Node::Bottom,
            Tree::Top => Node::Top,
            Tree::Node(op, cs) => {
                let ids = cs.iter().map(|c| self.build(c, binding)).collect::<Option<Vec<_>>>()?;
                Node::Op(self.op_index(op), ids.into_boxed_slice())
            }
        };
        self.intern(n)
    }
}

struct Rule {
    from: Term,
    into: Term,
    symmetric: bool,
    /// Metavariables of `into` that `from` does not bind.
    free: Vec<Var>,
}

/// The saturated preorder on a domain of terms.
pub struct Saturation {
    domain: Vec<Term>,
    index: HashMap<Term, usize>,
    reach: Vec<FixedBitSet>,
    store: Store,
    edges_list: Vec<(u32, u32)>,
    domain_ids: Vec<u32>,
    pub terms: usize,
    pub edges: usize,
    pub truncated: bool,
}

impl Saturation {
    pub fn domain(&self) -> &[Term] {
        &self.domain
    }

    /// Whether `domain[i] ≤ domain[j]` was derived.
    pub fn derivable(&self, i: usize, j: usize) -> bool {
        self.reach[i].contains(j)
    }

    pub fn derivable_terms(&self, a: &Term, b: &Term) -> Option<bool> {
        Some(self.derivable(*self.index.get(a)?, *self.index.get(b)?))
    }

    /// Indices derivable from `domain[i]`.
    pub fn successors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.reach[i].ones()
    }

    /// A shortest chain of rewrite and order steps from `domain[i]` to `domain[j]`.
    pub fn chain(&self, i: usize, j: usize) -> Option<Vec<Term>> {
        let (from, goal) = (self.domain_ids[i], self.domain_ids[j]);
        let mut adj: HashMap<u32, Vec<u32>> = HashMap::new();
        for &(u, v) in &self.edges_list {
            adj.entry(u).or_default().push(v);
        }
        let mut parent: HashMap<u32, u32> = HashMap::from([(from, from)]);
        let mut queue = std::collections::VecDeque::from([from]);
        while let Some(u) = queue.pop_front() {
            if u == goal {
                let mut path = vec![self.store.term(u)];
                let mut cur = u;
                while cur != from {
                    cur = parent[&cur];
                    path.push(self.store.term(cur));
                }
                path.reverse();
                return Some(path);
            }
            for &v in adj.get(&u).into_iter().flatten() {
                if let std::collections::hash_map::Entry::Vacant(e) = parent.entry(v) {
                    e.insert(u);
                    queue.push_back(v);
                }
            }
        }
        None
    }

    pub fn pair_count(&self) -> usize {
        self.reach.iter().map(|r| r.count_ones(..)).sum()
    }
}

struct Saturator<'a> {
    store: Store,
    rules: Vec<Rule>,
    fillers: Vec<u32>,
    cfg: &'a SaturationConfig,
    edges: Vec<(u32, u32)>,
    truncated: bool,
}

impl Saturator<'_> {
    fn depth(&self, id: u32) -> usize {
        self.store.depth[id as usize] as usize
    }

    /// Root rewrites of `id`: pairs `(result, symmetric)`.
    fn local(&mut self, id: u32, budget: usize) -> Vec<(u32, bool)> {
        let mut out = Vec::new();
        for r in 0..self.rules.len() {
            let mut binding = HashMap::new();
            if !self.store.matches(&self.rules[r].from, id, &mut binding) {
                continue;
            }
            let free = self.rules[r].free.clone();
            let mut choices: Vec<HashMap<Var, u32>> = vec![binding];
            for v in free {
                choices = choices
                    .into_iter()
                    .flat_map(|b| {
                        self.fillers.iter().map(move |&f| {
                            let mut b = b.clone();
                            b.insert(v, f);
                            b
                        })
                    })
                    .collect();
            }
            for b in choices {
                let into = self.rules[r].into.clone();
                match self.store.build(&into, &b) {
                    Some(res) if self.depth(res) <= budget => out.push((res, self.rules[r].symmetric)),
                    Some(_) => {}
                    None => self.truncated = true,
                }
            }
        }
        out
    }

    /// Rewrites of `id` at every position, within `budget` depth.
    fn rewrites(&mut self, id: u32, budget: usize) -> Vec<(u32, bool)> {
        let mut out = self.local(id, budget);
        if let Node::Op(o, cs) = self.store.nodes[id as usize].clone() {
            if budget == 0 {
                return out;
            }
            for i in 0..cs.len() {
                for (s, sym) in self.rewrites(cs[i], budget - 1) {
                    let mut next = cs.to_vec();
                    next[i] = s;
                    match self.store.intern(Node::Op(o, next.into_boxed_slice())) {
                        Some(res) => out.push((res, sym)),
                        None => self.truncated = true,
                    }
                }
            }
        }
        out
    }

    /// `id` with the subtree at one position replaced by `leaf`, for every position.
    fn replacements(&mut self, id: u32, leaf: u32) -> Vec<u32> {
        let mut out = Vec::new();
        if id != leaf {
            out.push(leaf);
        }
        if let Node::Op(o, cs) = self.store.nodes[id as usize].clone() {
            for i in 0..cs.len() {
                for s in self.replacements(cs[i], leaf) {
                    let mut next = cs.to_vec();
                    next[i] = s;
                    match self.store.intern(Node::Op(o, next.into_boxed_slice())) {
                        Some(res) => out.push(res),
                        None => self.truncated = true,
                    }
                }
            }
        }
        out
    }
}

/// Saturates `domain` under the finite axioms of `spec`.
pub fn saturate(spec: &EffectSpec, domain: &[Term], cfg: &SaturationConfig) -> Saturation {
    let mut rules = Vec::new();
    for ax in &spec.axioms {
        let Some((l, r)) = ax.finite_sides() else { continue };
        let sym = ax.is_equation();
        let free = |from: &Term, into: &Term| into.vars().difference(&from.vars()).copied().collect::<Vec<_>>();
        rules.push(Rule { free: free(&l, &r), from: l.clone(), into: r.clone(), symmetric: sym });
        if sym {
            rules.push(Rule { free: free(&r, &l), from: r, into: l, symmetric: sym });
        }
    }
    let store = Store {
        ops: spec.signature.ops().iter().map(|(o, _)| o.clone()).collect(),
        nodes: Vec::new(),
        depth: Vec::new(),
        ids: HashMap::new(),
        max_terms: cfg.max_terms.max(domain.len() + 2),
    };
    let mut s = Saturator { store, rules, fillers: Vec::new(), cfg, edges: Vec::new(), truncated: false };
    let domain_ids: Vec<u32> =
        domain.iter().map(|t| s.store.intern_term(t).expect("the bound admits the domain")).collect();
    let bottom = s.store.intern(Node::Bottom).expect("room for constants");
    let top = s.store.intern(Node::Top).expect("room for constants");
    s.fillers = cfg.fillers.iter().filter_map(|f| s.store.intern_term(f)).collect();

    let mut expanded = vec![false; 0];
    let mut frontier: Vec<u32> = domain_ids.clone();
    for _ in 0..s.cfg.rounds {
        let mut next = Vec::new();
        let before = s.store.nodes.len();
        for &t in &frontier {
            if expanded.len() <= t as usize {
                expanded.resize(t as usize + 1, false);
            }
            if expanded[t as usize] {
                continue;
            }
            expanded[t as usize] = true;
            let max_depth = s.cfg.max_depth;
            for (res, sym) in s.rewrites(t, max_depth) {
                s.edges.push((t, res));
                if sym {
                    s.edges.push((res, t));
                }
                next.push(res);
            }
            for up in s.replacements(t, top) {
                s.edges.push((t, up));
                next.push(up);
            }
            for down in s.replacements(t, bottom) {
                s.edges.push((down, t));
                next.push(down);
            }
        }
        next.retain(|&t| (t as usize) >= before || !expanded.get(t as usize).copied().unwrap_or(false));
        next.sort_unstable();
        next.dedup();
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    let n = s.store.nodes.len();
    let reach = closure(n, &s.edges, &domain_ids);
    let mut index = HashMap::new();
    for (i, t) in domain.iter().enumerate() {
        index.entry(t.clone()).or_insert(i);
    }
    Saturation {
        domain: domain.to_vec(),
        index,
        reach,
        terms: n,
        edges: s.edges.len(),
        truncated: s.truncated,
        store: s.store,
        edges_list: s.edges,
        domain_ids,
    }
}

/// Reflexive-transitive closure restricted to the domain, via Tarjan's algorithm.
fn closure(n: usize, edges: &[(u32, u32)], domain: &[u32]) -> Vec<FixedBitSet> {
    let mut start = vec![0usize; n + 1];
    for &(u, _) in edges {
        start[u as usize + 1] += 1;
    }
    for i in 0..n {
        start[i + 1] += start[i];
    }
    let mut adj = vec![0u32; edges.len()];
    let mut fill = start.clone();
    for &(u, v) in edges {
        adj[fill[u as usize]] = v;
        fill[u as usize] += 1;
    }

    let mut domain_bits: HashMap<u32, Vec<usize>> = HashMap::new();
    for (i, &id) in domain.iter().enumerate() {
        domain_bits.entry(id).or_default().push(i);
    }

    const UNSEEN: u32 = u32::MAX;
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0u32; n];
    let mut on_stack = vec![false; n];
    let mut comp = vec![UNSEEN; n];
    let mut stack: Vec<u32> = Vec::new();
    let mut comp_bits: Vec<FixedBitSet> = Vec::new();
    let mut counter = 0u32;
    let width = domain.len();

    for root in 0..n as u32 {
        if index[root as usize] != UNSEEN {
            continue;
        }
        let mut call: Vec<(u32, usize)> = vec![(root, start[root as usize])];
        index[root as usize] = counter;
        low[root as usize] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root as usize] = true;
        while let Some(&mut (v, ref mut next)) = call.last_mut() {
            if *next < start[v as usize + 1] {
                let w = adj[*next];
                *next += 1;
                if index[w as usize] == UNSEEN {
                    index[w as usize] = counter;
                    low[w as usize] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w as usize] = true;
                    call.push((w, start[w as usize]));
                } else if on_stack[w as usize] {
                    low[v as usize] = low[v as usize].min(index[w as usize]);
                }
                continue;
            }
            call.pop();
            if let Some(&(parent, _)) = call.last() {
                low[parent as usize] = low[parent as usize].min(low[v as usize]);
            }
            if low[v as usize] == index[v as usize] {
                let c = comp_bits.len() as u32;
                let mut members = Vec::new();
                loop {
                    let w = stack.pop().expect("component members are on the stack");
                    on_stack[w as usize] = false;
                    comp[w as usize] = c;
                    members.push(w);
                    if w == v {
                        break;
                    }
                }
                // Successor components are complete: Tarjan emits them first.
                let mut bits = FixedBitSet::with_capacity(width);
                for &m in &members {
                    if let Some(is) = domain_bits.get(&m) {
                        is.iter().for_each(|&i| bits.insert(i));
                    }
                    for &w in &adj[start[m as usize]..start[m as usize + 1]] {
                        let cw = comp[w as usize];
                        if cw != c {
                            bits.union_with(&comp_bits[cw as usize]);
                        }
                    }
                }
                comp_bits.push(bits);
            }
        }
    }
    domain.iter().map(|&id| comp_bits[comp[id as usize] as usize].clone()).collect()
}
