//! Deciding the preorder induced by an algebra: `a ⊑ b` iff
//! `α(T(h)(a)) ⊑ α(T(h)(b))` for every assignment `h`.
//!
//! Each effect has its own strategy. Finite value spaces enumerate all
//! assignments. Probability only needs the vertices `{0,1}^vars`: the value of
//! a tree is affine in the values of its variables, so the difference of two
//! sides attains its maximum at a vertex. Cost is decided in closed form from
//! the unique tick path of each side. Input compares trees directly. The
//! combined effect is searched on dyadic grids; only a refutation is exact.

use std::collections::BTreeSet;

use crate::effect::{EffectKind, EffectSpec, LeqStrategy};
use crate::regular::{GNode, Graph, RegularTree};
use crate::semantics::dyadic::Dyadic;
use crate::semantics::eval::{eval_bounds_graph, eval_graph, EvalError};
use crate::semantics::value::{Assignment, ExtNat, Space, Value, WrongSpace};
use crate::tree::{Op, Term, Tree, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Status {
    Holds,
    Refuted,
    /// No refutation found down to resolution `2^-r`.
    HoldsAtResolution(u32),
}

impl Status {
    pub fn is_refuted(self) -> bool {
        self == Status::Refuted
    }

    pub fn name(self) -> &'static str {
        match self {
            Status::Holds => "holds",
            Status::Refuted => "refuted",
            Status::HoldsAtResolution(_) => "holds_at_resolution",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decision {
    pub status: Status,
    pub witness: Option<Assignment>,
    /// Values of the two sides under the witness.
    pub values: Option<(Value, Value)>,
    /// Number of assignments examined.
    pub work: usize,
}

impl Decision {
    pub fn holds(work: usize) -> Self {
        Decision { status: Status::Holds, witness: None, values: None, work }
    }

    pub fn refuted(h: Assignment, va: Value, vb: Value, work: usize) -> Self {
        Decision { status: Status::Refuted, witness: Some(h), values: Some((va, vb)), work }
    }
}

#[derive(Clone, Debug, thiserror::Error, PartialEq, Eq)]
pub enum RelError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Space(#[from] WrongSpace),
    #[error("internal inconsistency: {0}")]
    Internal(String),
}

/// Depth and tolerance for bound evaluation of infinite probabilistic trees.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Config {
    pub max_depth: usize,
    pub eps: Dyadic,
}

impl Default for Config {
    fn default() -> Self {
        Config { max_depth: 20, eps: Dyadic::pow2_neg(20) }
    }
}

impl Config {
    pub fn eps_bits(&self) -> u32 {
        self.eps.exponent()
    }
}

enum Cmp {
    Holds,
    Fails(Value, Value),
    Unknown,
}

/// Compares the two sides under one assignment, falling back to bounds for
/// infinite probabilistic trees.
fn compare_at(
    spec: &EffectSpec,
    ga: &Graph<Var>,
    gb: &Graph<Var>,
    h: &Assignment,
    cfg: &Config,
) -> Result<Cmp, RelError> {
    let space = Space::of(spec);
    match (eval_graph(spec, ga, h), eval_graph(spec, gb, h)) {
        (Ok(va), Ok(vb)) => {
            return Ok(if space.leq(&va, &vb)? { Cmp::Holds } else { Cmp::Fails(va, vb) });
        }
        (Err(EvalError::UseBounds(_)), _) | (_, Err(EvalError::UseBounds(_))) => {}
        (Err(e), _) | (_, Err(e)) => return Err(e.into()),
    }
    let ba = eval_bounds_graph(spec, ga, h, cfg.max_depth, &cfg.eps)?;
    let bb = eval_bounds_graph(spec, gb, h, cfg.max_depth, &cfg.eps)?;
    if space.leq(&ba.upper, &bb.lower)? {
        Ok(Cmp::Holds)
    } else if !space.leq(&ba.lower, &bb.upper)? {
        Ok(Cmp::Fails(ba.lower, bb.upper))
    } else {
        Ok(Cmp::Unknown)
    }
}

/// Variables of both sides, in increasing order.
fn shared_vars(a: &Graph<Var>, b: &Graph<Var>) -> Vec<Var> {
    let mut vars = BTreeSet::new();
    for g in [a, b] {
        for n in g.nodes() {
            if let GNode::Leaf(v) = n {
                vars.insert(*v);
            }
        }
    }
    vars.into_iter().collect()
}

/// Calls `f` on every assignment of `values` to `vars` in lexicographic order,
/// the first variable most significant, until `f` returns `Some`.
pub fn search_assignments<T>(
    vars: &[Var],
    values: &[Value],
    mut f: impl FnMut(&Assignment) -> Result<Option<T>, RelError>,
) -> Result<Option<T>, RelError> {
    if values.is_empty() {
        return Ok(None);
    }
    let mut idx = vec![0usize; vars.len()];
    loop {
        let h = Assignment::from_pairs(vars.iter().zip(&idx).map(|(v, &i)| (*v, values[i].clone())));
        if let Some(t) = f(&h)? {
            return Ok(Some(t));
        }
        let mut pos = vars.len();
        loop {
            if pos == 0 {
                return Ok(None);
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < values.len() {
                break;
            }
            idx[pos] = 0;
        }
    }
}

/// Refutation search over a fixed value set. Returns the first refuting
/// assignment and whether any comparison was inconclusive.
fn search(
    spec: &EffectSpec,
    ga: &Graph<Var>,
    gb: &Graph<Var>,
    values: &[Value],
    cfg: &Config,
    work: &mut usize,
    unknown: &mut bool,
) -> Result<Option<Decision>, RelError> {
    let vars = shared_vars(ga, gb);
    search_assignments(&vars, values, |h| {
        *work += 1;
        Ok(match compare_at(spec, ga, gb, h, cfg)? {
            Cmp::Holds => None,
            Cmp::Unknown => {
                *unknown = true;
                None
            }
            Cmp::Fails(va, vb) => Some(Decision::refuted(h.clone(), va, vb, *work)),
        })
    })
}

/// Outcome of a refutation search over a fixed value set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Search {
    pub refutation: Option<Decision>,
    /// Some comparison could not be decided from bounds.
    pub inconclusive: bool,
    pub work: usize,
}

/// Searches the assignments of `values` to the variables of both sides for a refutation.
pub fn search_values(
    spec: &EffectSpec,
    ga: &Graph<Var>,
    gb: &Graph<Var>,
    values: &[Value],
    cfg: &Config,
) -> Result<Search, RelError> {
    let (mut work, mut inconclusive) = (0, false);
    let refutation = search(spec, ga, gb, values, cfg, &mut work, &mut inconclusive)?;
    Ok(Search { refutation, inconclusive, work })
}

/// The dyadic interval pairs of resolution `2^-j`, degenerate pairs first.
pub fn grid_pairs(j: u32) -> Vec<Value> {
    let n = 1u32 << j;
    let mut out: Vec<(u32, u32)> = (0..=n).flat_map(|lo| (lo..=n).map(move |hi| (lo, hi))).collect();
    out.sort_by_key(|&(lo, hi)| (hi - lo, lo));
    out.into_iter().map(|(lo, hi)| Value::Pair(Dyadic::new(lo, j), Dyadic::new(hi, j))).collect()
}

/// Where the unique path of a cost tree ends.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CostEnd {
    Bottom,
    Top,
    Var(Var),
    Cycle,
}

/// Tick count and endpoint of a cost tree.
pub fn cost_path(g: &Graph<Var>) -> Result<(u64, CostEnd), RelError> {
    let mut seen = vec![false; g.len()];
    let mut n = g.root();
    let mut ticks = 0;
    loop {
        if seen[n] {
            return Ok((ticks, CostEnd::Cycle));
        }
        seen[n] = true;
        match g.node(n) {
            GNode::Bottom => return Ok((ticks, CostEnd::Bottom)),
            GNode::Top => return Ok((ticks, CostEnd::Top)),
            GNode::Leaf(v) => return Ok((ticks, CostEnd::Var(*v))),
            GNode::Node(Op::Tick, cs) => {
                ticks += 1;
                n = cs[0];
            }
            GNode::Node(op, _) => {
                return Err(EvalError::UnsupportedOperator { op: op.to_string(), effect: "cost" }.into())
            }
        }
    }
}

/// The closed-form decision for cost: `a ⊑ b` iff `a` costs at least as much
/// as `b` under every assignment.
pub fn cost_leq_closed_form(a: (u64, CostEnd), b: (u64, CostEnd)) -> bool {
    use CostEnd::*;
    let diverges = |e: CostEnd| matches!(e, Bottom | Cycle);
    let (na, ea) = a;
    let (nb, eb) = b;
    if diverges(ea) {
        return true;
    }
    match eb {
        Bottom | Cycle => false,
        Top => na >= nb,
        Var(y) => ea == Var(y) && na >= nb,
    }
}

pub fn check_leq(spec: &EffectSpec, a: &RegularTree<Var>, b: &RegularTree<Var>) -> Result<Decision, RelError> {
    check_leq_graphs(spec, &a.graph(), &b.graph(), &Config::default())
}

pub fn check_leq_terms(spec: &EffectSpec, a: &Term, b: &Term) -> Result<Decision, RelError> {
    check_leq_graphs(spec, &Graph::from_tree(a), &Graph::from_tree(b), &Config::default())
}

pub fn check_leq_graphs(
    spec: &EffectSpec,
    ga: &Graph<Var>,
    gb: &Graph<Var>,
    cfg: &Config,
) -> Result<Decision, RelError> {
    let space = Space::of(spec);
    let mut work = 0;
    let mut unknown = false;
    match spec.strategy {
        LeqStrategy::Enumerate => {
            let values = space.elements().expect("enumerated spaces are finite");
            Ok(search(spec, ga, gb, &values, cfg, &mut work, &mut unknown)?.unwrap_or(Decision::holds(work)))
        }
        LeqStrategy::Vertex => {
            let values = [Value::Prob(Dyadic::zero()), Value::Prob(Dyadic::one())];
            match search(spec, ga, gb, &values, cfg, &mut work, &mut unknown)? {
                Some(d) => Ok(d),
                None if unknown => Ok(Decision {
                    status: Status::HoldsAtResolution(cfg.eps_bits()),
                    witness: None,
                    values: None,
                    work,
                }),
                None => Ok(Decision::holds(work)),
            }
        }
        LeqStrategy::CaseAnalysis => {
            let holds = cost_leq_closed_form(cost_path(ga)?, cost_path(gb)?);
            let values = [Value::Cost(ExtNat::Fin(0)), Value::Cost(ExtNat::Inf)];
            let found = search(spec, ga, gb, &values, cfg, &mut work, &mut unknown)?;
            match (holds, found) {
                (true, None) => Ok(Decision::holds(work)),
                (false, Some(d)) => Ok(d),
                (h, _) => {
                    Err(RelError::Internal(format!("cost case analysis says {h} but the {{0, inf}} search disagrees")))
                }
            }
        }
        LeqStrategy::Bisimulation => {
            if ga.leq(gb) {
                return Ok(Decision::holds(1));
            }
            let values = [Value::Tree(Graph::bottom()), Value::Tree(Graph::top())];
            search(spec, ga, gb, &values, cfg, &mut work, &mut unknown)?
                .ok_or_else(|| RelError::Internal("tree order fails but no {bot, top} witness".into()))
        }
        LeqStrategy::Grid(r) => {
            let vars = shared_vars(ga, gb);
            if vars.is_empty() {
                let values = [space.bottom()];
                return Ok(search(spec, ga, gb, &values, cfg, &mut work, &mut unknown)?.unwrap_or(if unknown {
                    Decision { status: Status::HoldsAtResolution(cfg.eps_bits()), witness: None, values: None, work }
                } else {
                    Decision::holds(work)
                }));
            }
            for j in 1..=r {
                if let Some(d) = search(spec, ga, gb, &grid_pairs(j), cfg, &mut work, &mut unknown)? {
                    return Ok(d);
                }
            }
            Ok(Decision { status: Status::HoldsAtResolution(r), witness: None, values: None, work })
        }
    }
}

/// A distinguishing test for two expressions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Distinction {
    pub witness: Assignment,
    /// Values of the first and second expression.
    pub values: (Value, Value),
    /// `true` when the first expression is not below the second.
    pub forward: bool,
}

/// A witness separating `a` and `b` in either direction, if one exists.
pub fn distinguish(
    spec: &EffectSpec,
    a: &RegularTree<Var>,
    b: &RegularTree<Var>,
) -> Result<Option<Distinction>, RelError> {
    let (ga, gb) = (a.graph(), b.graph());
    let cfg = Config::default();
    let fwd = check_leq_graphs(spec, &ga, &gb, &cfg)?;
    if let (Status::Refuted, Some(w), Some(v)) = (fwd.status, fwd.witness, fwd.values) {
        return Ok(Some(Distinction { witness: w, values: v, forward: true }));
    }
    let bwd = check_leq_graphs(spec, &gb, &ga, &cfg)?;
    if let (Status::Refuted, Some(w), Some((vb, va))) = (bwd.status, bwd.witness, bwd.values) {
        return Ok(Some(Distinction { witness: w, values: (va, vb), forward: false }));
    }
    Ok(None)
}

/// One row of a single-valuedness table: variables sent to `⊥` or to `x0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SvRow {
    /// For each variable, whether it is sent to `x0` (otherwise to `⊥`).
    pub substitution: Vec<(Var, bool)>,
    pub lhs: Term,
    pub rhs: Term,
    pub forward: Decision,
    pub backward: Decision,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SvReport {
    pub rows: Vec<SvRow>,
    pub full: Decision,
    pub full_converse: Decision,
}

impl SvReport {
    /// No row is refuted in either direction.
    pub fn rows_hold(&self) -> bool {
        self.rows.iter().all(|r| !r.forward.status.is_refuted() && !r.backward.status.is_refuted())
    }

    /// The rows hold but the full comparison is refuted in some direction.
    pub fn is_failure(&self) -> bool {
        self.rows_hold() && (self.full.status.is_refuted() || self.full_converse.status.is_refuted())
    }
}

/// The table of substitutions `f: vars → {⊥, x0}` with the comparisons of
/// `f*(a)` and `f*(b)`, next to the full comparison of `a` and `b`.
pub fn check_single_valued_instance(spec: &EffectSpec, a: &Term, b: &Term) -> Result<SvReport, RelError> {
    let vars: Vec<Var> = a.vars().union(&b.vars()).copied().collect();
    let mut rows = Vec::new();
    for mask in 0..(1u64 << vars.len()) {
        let substitution: Vec<(Var, bool)> =
            vars.iter().enumerate().map(|(i, v)| (*v, mask >> (vars.len() - 1 - i) & 1 == 1)).collect();
        let mut f = |v: &Var| {
            let to_var = substitution.iter().find(|(w, _)| w == v).map(|(_, s)| *s).unwrap_or(false);
            if to_var {
                Term::var(0)
            } else {
                Tree::Bottom
            }
        };
        let (lhs, rhs) = (a.bind(&mut f), b.bind(&mut f));
        let forward = check_leq_terms(spec, &lhs, &rhs)?;
        let backward = check_leq_terms(spec, &rhs, &lhs)?;
        rows.push(SvRow { substitution, lhs, rhs, forward, backward });
    }
    Ok(SvReport { rows, full: check_leq_terms(spec, a, b)?, full_converse: check_leq_terms(spec, b, a)? })
}

/// Whether `check_leq` treats the effect exactly (no resolution caveat).
pub fn is_exact(spec: &EffectSpec) -> bool {
    spec.kind != EffectKind::NondetProb
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::effect::{get_effect, Params};
    use crate::semantics::eval::eval_term;
    use crate::semantics::value::{ExcValue, Three};

    fn spec(name: &str) -> EffectSpec {
        get_effect(name, &Params::default()).unwrap()
    }

    fn n(op: Op, cs: Vec<Term>) -> Term {
        Tree::Node(op, cs)
    }

    fn x(i: u32) -> Term {
        Term::var(i)
    }

    #[test]
    fn nondet_examples() {
        let nd = spec("nondet");
        let d = n(Op::Or, vec![Tree::Top, Tree::Bottom]);
        assert_eq!(check_leq_terms(&nd, &Tree::Bottom, &d).unwrap().status, Status::Holds);
        let r = check_leq_terms(&nd, &Tree::Top, &d).unwrap();
        assert_eq!(r.status, Status::Refuted);
        assert_eq!(r.values, Some((Value::Three(Three::Top), Value::Three(Three::Diamond))));
    }

    #[test]
    fn prob_commutativity() {
        let pr = spec("prob");
        let (a, b) = (n(Op::Por, vec![x(0), x(1)]), n(Op::Por, vec![x(1), x(0)]));
        assert_eq!(check_leq_terms(&pr, &a, &b).unwrap().status, Status::Holds);
        assert_eq!(check_leq_terms(&pr, &b, &a).unwrap().status, Status::Holds);
    }

    #[test]
    fn scheduler_distributivity_is_refuted() {
        let cb = spec("nondet_prob");
        let a = n(Op::Por, vec![n(Op::Or, vec![x(0), x(1)]), n(Op::Or, vec![x(0), x(2)])]);
        let b = n(Op::Or, vec![x(0), n(Op::Por, vec![x(1), x(2)])]);
        let d = check_leq_terms(&cb, &a, &b).unwrap();
        assert_eq!(d.status, Status::Refuted);
        let pair = |l: (u32, u32), h: (u32, u32)| Value::Pair(Dyadic::new(l.0, l.1), Dyadic::new(h.0, h.1));
        let expected = Assignment::from_pairs([
            (Var(0), pair((1, 1), (1, 1))),
            (Var(1), pair((0, 0), (0, 0))),
            (Var(2), pair((1, 0), (1, 0))),
        ]);
        assert_eq!(d.witness.as_ref(), Some(&expected));
        // Oracle: evaluate both sides under the witness.
        let (va, vb) = (eval_term(&cb, &a, &expected).unwrap(), eval_term(&cb, &b, &expected).unwrap());
        assert_eq!(va, pair((1, 2), (3, 2)));
        assert_eq!(vb, pair((1, 1), (1, 1)));
        assert_eq!(d.values, Some((va, vb)));
    }

    #[test]
    fn distinguish_examples() {
        let pr = spec("prob");
        let a = RegularTree::from_tree(&n(Op::Por, vec![Tree::Top, Tree::Bottom]));
        let d = distinguish(&pr, &a, &RegularTree::from_tree(&Tree::Bottom)).unwrap().unwrap();
        assert!(d.witness.is_empty());
        assert_eq!(d.values, (Value::prob(1, 1), Value::prob(0, 0)));

        let nd = spec("nondet");
        let a = RegularTree::from_tree(&n(Op::Or, vec![x(0), x(0)]));
        assert_eq!(distinguish(&nd, &a, &RegularTree::from_tree(&x(0))).unwrap(), None);

        let ex = spec("exceptions");
        let raise = |i: usize| n(Op::Raise(ex.params.exceptions[i].clone()), vec![]);
        let d =
            distinguish(&ex, &RegularTree::from_tree(&raise(0)), &RegularTree::from_tree(&raise(1))).unwrap().unwrap();
        let rv = |i: usize| Value::Exc(ExcValue::Raise(ex.params.exceptions[i].clone()));
        assert_eq!(d.values, (rv(0), rv(1)));
    }

    #[test]
    fn cost_closed_form_matches_search() {
        let c = spec("cost");
        let tick = |t: Term| n(Op::Tick, vec![t]);
        let trees =
            [Tree::Bottom, Tree::Top, x(0), x(1), tick(Tree::Top), tick(x(0)), tick(tick(x(1))), tick(Tree::Bottom)];
        for a in &trees {
            for b in &trees {
                // check_leq itself cross-checks the two procedures.
                check_leq_terms(&c, a, b).unwrap();
            }
        }
        assert_eq!(check_leq_terms(&c, &tick(x(0)), &x(0)).unwrap().status, Status::Holds);
        assert_eq!(check_leq_terms(&c, &x(0), &tick(x(0))).unwrap().status, Status::Refuted);
    }

    #[test]
    fn input_witnesses() {
        let inp = spec("input");
        let d = check_leq_terms(&inp, &x(0), &n(Op::In, vec![x(0), x(0)])).unwrap();
        assert_eq!(d.status, Status::Refuted);
        assert_eq!(
            check_leq_terms(&inp, &n(Op::In, vec![Tree::Bottom, x(1)]), &n(Op::In, vec![x(0), x(1)])).unwrap().status,
            Status::Holds
        );
    }

    #[test]
    fn single_valued_exception_rows() {
        let ex = spec("exceptions");
        let a = n(Op::Catch(ex.params.exceptions[0].clone()), vec![x(0), x(1)]);
        let r = check_single_valued_instance(&ex, &a, &x(0)).unwrap();
        assert_eq!(r.rows.len(), 4);
        assert!(r.rows.iter().all(|row| row.forward.status == Status::Holds));
    }

    #[test]
    fn grid_order() {
        let g = grid_pairs(1);
        assert_eq!(g.len(), 6);
        assert_eq!(g[0], Value::Pair(Dyadic::zero(), Dyadic::zero()));
        assert_eq!(g[1], Value::Pair(Dyadic::half(), Dyadic::half()));
        assert_eq!(g[5], Value::Pair(Dyadic::zero(), Dyadic::one()));
    }
}
