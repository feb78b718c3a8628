//! The relator `Γ^α` induced by an algebra, on finite carriers.
//!
//! `a Γ(R) b` holds when `α(T f a) ⊑ α(T g b)` for all `f: X → A` and
//! `g: Y → A` such that `x R y` implies `f(x) ⊑ g(y)`.

use fixedbitset::FixedBitSet;
use std::collections::HashMap;

use crate::effect::{EffectSpec, LeqStrategy};
use crate::gen;
use crate::relations::{grid_pairs, Status};
use crate::semantics::dyadic::Dyadic;
use crate::semantics::eval::{alpha_tree, EvalError};
use crate::semantics::value::{Space, Value, WrongSpace};
use crate::tree::{BinaryRelation, Tree};

#[derive(Clone, Debug, thiserror::Error, PartialEq, Eq)]
pub enum RelatorError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Space(#[from] WrongSpace),
    #[error("the relator is not decidable on the {0} space")]
    Unsupported(&'static str),
    #[error("leaf {leaf} lies outside a carrier of size {size}")]
    OutOfCarrier { leaf: u32, size: u32 },
}

/// A verdict with the separating pair of valuations when refuted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lift {
    pub status: Status,
    pub witness: Option<ValuationPair>,
}

/// Valuations of the left and right carriers.
pub type ValuationPair = (Vec<Value>, Vec<Value>);

/// Lifted relations per pair of carrier sizes, as bit rows over classes.
type LiftTable = HashMap<(usize, usize), Vec<(BinaryRelation, Vec<FixedBitSet>)>>;

fn check_carrier(t: &Tree<u32>, size: u32) -> Result<(), RelatorError> {
    match t.leaves().into_iter().find(|&&x| x >= size) {
        Some(&leaf) => Err(RelatorError::OutOfCarrier { leaf, size }),
        None => Ok(()),
    }
}

/// Calls `f` on every function `{0..n} → {0..m}` in odometer order, the last argument fastest.
fn for_each_function(n: usize, m: usize, mut f: impl FnMut(&[usize]) -> bool) {
    let mut idx = vec![0usize; n];
    loop {
        if !f(&idx) {
            return;
        }
        let mut pos = n;
        loop {
            if pos == 0 {
                return;
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < m {
                break;
            }
            idx[pos] = 0;
        }
    }
}

fn value_of(spec: &EffectSpec, t: &Tree<u32>, f: &[Value]) -> Result<Value, EvalError> {
    alpha_tree(spec, &t.map(&mut |x| f[*x as usize].clone()))
}

/// Searches valuations drawn from `values` for a refutation of `a Γ(R) b`.
fn refute(
    spec: &EffectSpec,
    space: &Space,
    rel: &BinaryRelation,
    a: &Tree<u32>,
    b: &Tree<u32>,
    values: &[Value],
) -> Result<Option<ValuationPair>, RelatorError> {
    let mut found = None;
    let mut error = None;
    let (nx, ny) = (rel.left_size() as usize, rel.right_size() as usize);
    for_each_function(nx, values.len(), |fi| {
        let f: Vec<Value> = fi.iter().map(|&i| values[i].clone()).collect();
        let va = match value_of(spec, a, &f) {
            Ok(v) => v,
            Err(e) => {
                error = Some(e.into());
                return false;
            }
        };
        for_each_function(ny, values.len(), |gi| {
            let g: Vec<Value> = gi.iter().map(|&i| values[i].clone()).collect();
            let premise = rel.pairs().all(|(x, y)| space.leq(&f[x as usize], &g[y as usize]).unwrap_or(false));
            if !premise {
                return true;
            }
            let step = value_of(spec, b, &g).map_err(RelatorError::from).and_then(|vb| Ok(space.leq(&va, &vb)?));
            match step {
                Ok(true) => true,
                Ok(false) => {
                    found = Some((f.clone(), g));
                    false
                }
                Err(e) => {
                    error = Some(e);
                    false
                }
            }
        });
        error.is_none() && found.is_none()
    });
    match error {
        Some(e) => Err(e),
        None => Ok(found),
    }
}

/// Decides `a Γ^α(R) b`. Probability only needs valuations into `{0, 1}`:
/// the value is affine in the valuation and the premise cuts out a polytope
/// with integral vertices. The combined effect is searched on dyadic grids.
pub fn relator_lift(
    spec: &EffectSpec,
    rel: &BinaryRelation,
    a: &Tree<u32>,
    b: &Tree<u32>,
) -> Result<Lift, RelatorError> {
    check_carrier(a, rel.left_size())?;
    check_carrier(b, rel.right_size())?;
    let space = Space::of(spec);
    let verdict = |w: Option<(Vec<Value>, Vec<Value>)>, holds: Status| match w {
        Some(w) => Lift { status: Status::Refuted, witness: Some(w) },
        None => Lift { status: holds, witness: None },
    };
    if let Some(values) = space.elements() {
        return Ok(verdict(refute(spec, &space, rel, a, b, &values)?, Status::Holds));
    }
    match (spec.strategy, &space) {
        (LeqStrategy::Vertex, Space::Prob) => {
            let values = [Value::Prob(Dyadic::zero()), Value::Prob(Dyadic::one())];
            Ok(verdict(refute(spec, &space, rel, a, b, &values)?, Status::Holds))
        }
        (LeqStrategy::Grid(r), Space::Pair) => {
            for j in 1..=r {
                if let Some(w) = refute(spec, &space, rel, a, b, &grid_pairs(j))? {
                    return Ok(verdict(Some(w), Status::Holds));
                }
            }
            Ok(verdict(None, Status::HoldsAtResolution(r)))
        }
        _ => Err(RelatorError::Unsupported(space.name())),
    }
}

/// The four relator laws.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Law {
    /// `=_{TX} ⊆ Γ(=_X)`.
    Identity,
    /// `Γ(R); Γ(S) ⊆ Γ(R; S)`.
    Composition,
    /// `R ⊆ S` implies `Γ(R) ⊆ Γ(S)`.
    Monotonicity,
    /// `Γ((f × g)⁻¹ R) = (Tf × Tg)⁻¹ Γ(R)`.
    Reindexing,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub law: Law,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LawReport {
    /// Number of law instances checked, per law.
    pub checked: [usize; 4],
    pub violations: Vec<Violation>,
    /// Trees enumerated per carrier size, and their classes.
    pub trees: Vec<usize>,
    pub classes: Vec<usize>,
}

impl LawReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Trees over one carrier, grouped by their values under every valuation.
struct Carrier {
    size: usize,
    /// Value indices, one per valuation in odometer order.
    signatures: Vec<Vec<usize>>,
    index: HashMap<Vec<usize>, usize>,
    examples: Vec<Tree<u32>>,
}

/// Value-level data shared by all carriers.
struct Algebra {
    values: Vec<Value>,
    /// `leq[i]` holds the indices above value `i`.
    leq: Vec<FixedBitSet>,
}

impl Algebra {
    fn leq(&self, i: usize, j: usize) -> bool {
        self.leq[i].contains(j)
    }

    fn valuations(&self, n: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        for_each_function(n, self.values.len(), |f| {
            out.push(f.to_vec());
            true
        });
        out
    }

    fn encode(&self, f: &[usize]) -> usize {
        f.iter().fold(0, |acc, &i| acc * self.values.len() + i)
    }
}

fn build_carrier(spec: &EffectSpec, alg: &Algebra, n: usize, depth: usize) -> Result<(Carrier, usize), RelatorError> {
    let mut leaves = vec![Tree::Bottom, Tree::Top];
    leaves.extend((0..n as u32).map(Tree::Leaf));
    let trees = gen::enumerate(&spec.signature, &leaves, depth);
    let valuations = alg.valuations(n);
    let mut c = Carrier { size: n, signatures: Vec::new(), index: HashMap::new(), examples: Vec::new() };
    for t in &trees {
        let mut sig = Vec::with_capacity(valuations.len());
        for f in &valuations {
            let vals: Vec<Value> = f.iter().map(|&i| alg.values[i].clone()).collect();
            let v = value_of(spec, t, &vals)?;
            sig.push(alg.values.iter().position(|w| *w == v).expect("finite spaces are closed"));
        }
        if !c.index.contains_key(&sig) {
            c.index.insert(sig.clone(), c.signatures.len());
            c.signatures.push(sig);
            c.examples.push(t.clone());
        }
    }
    Ok((c, trees.len()))
}

/// `Γ(R)` as a matrix between the classes of two carriers.
fn gamma(alg: &Algebra, rel: &BinaryRelation, x: &Carrier, y: &Carrier) -> Vec<FixedBitSet> {
    let fs = alg.valuations(x.size);
    let gs = alg.valuations(y.size);
    let mut admissible = Vec::new();
    for (fi, f) in fs.iter().enumerate() {
        for (gi, g) in gs.iter().enumerate() {
            if rel.pairs().all(|(a, b)| alg.leq(f[a as usize], g[b as usize])) {
                admissible.push((fi, gi));
            }
        }
    }
    x.signatures
        .iter()
        .map(|sa| {
            let mut row = FixedBitSet::with_capacity(y.signatures.len());
            for (j, sb) in y.signatures.iter().enumerate() {
                if admissible.iter().all(|&(fi, gi)| alg.leq(sa[fi], sb[gi])) {
                    row.insert(j);
                }
            }
            row
        })
        .collect()
}

fn compose(r: &[FixedBitSet], s: &[FixedBitSet], width: usize) -> Vec<FixedBitSet> {
    r.iter()
        .map(|row| {
            let mut out = FixedBitSet::with_capacity(width);
            for j in row.ones() {
                out.union_with(&s[j]);
            }
            out
        })
        .collect()
}

fn subset(r: &[FixedBitSet], s: &[FixedBitSet]) -> bool {
    r.iter().zip(s).all(|(a, b)| a.is_subset(b))
}

/// Checks the four laws exhaustively over carriers of size `1..=max_carrier`,
/// all relations between them and all trees of depth at most `max_depth`.
/// Trees with the same values under every valuation are interchangeable, so
/// the laws are checked on these classes.
pub fn check_relator_laws(spec: &EffectSpec, max_carrier: usize, max_depth: usize) -> Result<LawReport, RelatorError> {
    let space = Space::of(spec);
    let values = space.elements().ok_or(RelatorError::Unsupported(space.name()))?;
    let leq = values
        .iter()
        .map(|v| {
            let mut row = FixedBitSet::with_capacity(values.len());
            for (j, w) in values.iter().enumerate() {
                if space.leq(v, w)? {
                    row.insert(j);
                }
            }
            Ok(row)
        })
        .collect::<Result<_, WrongSpace>>()?;
    let alg = Algebra { values, leq };
    let mut report = LawReport::default();
    let mut carriers = Vec::new();
    for n in 1..=max_carrier {
        let (c, count) = build_carrier(spec, &alg, n, max_depth)?;
        report.trees.push(count);
        report.classes.push(c.signatures.len());
        carriers.push(c);
    }
    let mut violation = |law: Law, detail: String| report.violations.push(Violation { law, detail });
    let mut checked = [0usize; 4];

    let mut gammas: LiftTable = HashMap::new();
    for x in &carriers {
        for y in &carriers {
            let rels = BinaryRelation::all(x.size as u32, y.size as u32);
            let gs = rels.into_iter().map(|r| {
                let g = gamma(&alg, &r, x, y);
                (r, g)
            });
            gammas.insert((x.size, y.size), gs.collect());
        }
    }

    for x in &carriers {
        let id = gamma(&alg, &BinaryRelation::identity(x.size as u32), x, x);
        for (i, row) in id.iter().enumerate() {
            checked[0] += 1;
            if !row.contains(i) {
                violation(Law::Identity, format!("carrier {}: tree {:?}", x.size, x.examples[i]));
            }
        }
    }

    for x in &carriers {
        for y in &carriers {
            let rs = &gammas[&(x.size, y.size)];
            for (r, gr) in rs {
                for (s, gs) in rs {
                    if r != s && r.is_subset(s) {
                        checked[2] += 1;
                        if !subset(gr, gs) {
                            violation(Law::Monotonicity, format!("{r:?} within {s:?}"));
                        }
                    }
                }
            }
            for z in &carriers {
                for (r, gr) in &gammas[&(x.size, y.size)] {
                    for (s, gs) in &gammas[&(y.size, z.size)] {
                        checked[1] += 1;
                        let lhs = compose(gr, gs, z.signatures.len());
                        let rs = r.compose(s);
                        let rhs = &gammas[&(x.size, z.size)].iter().find(|(q, _)| *q == rs).expect("all relations").1;
                        if !subset(&lhs, rhs) {
                            violation(Law::Composition, format!("{r:?} then {s:?}"));
                        }
                    }
                }
            }
        }
    }

    for x2 in &carriers {
        for y2 in &carriers {
            for x in &carriers {
                for y in &carriers {
                    let fs = functions(x2.size, x.size);
                    let gs = functions(y2.size, y.size);
                    for (r, gr) in &gammas[&(x.size, y.size)] {
                        for f in &fs {
                            for g in &gs {
                                checked[3] += 1;
                                let f32: Vec<u32> = f.iter().map(|&i| i as u32).collect();
                                let g32: Vec<u32> = g.iter().map(|&i| i as u32).collect();
                                let back = r.reindex(x2.size as u32, &f32, y2.size as u32, &g32);
                                let lhs = &gammas[&(x2.size, y2.size)]
                                    .iter()
                                    .find(|(q, _)| *q == back)
                                    .expect("all relations")
                                    .1;
                                let tf: Vec<usize> =
                                    (0..x2.signatures.len()).map(|a| push_forward(&alg, x2, x, f, a)).collect();
                                let tg: Vec<usize> =
                                    (0..y2.signatures.len()).map(|b| push_forward(&alg, y2, y, g, b)).collect();
                                let agrees = (0..x2.signatures.len()).all(|a| {
                                    (0..y2.signatures.len()).all(|b| lhs[a].contains(b) == gr[tf[a]].contains(tg[b]))
                                });
                                if !agrees {
                                    violation(Law::Reindexing, format!("{r:?} along {f:?} and {g:?}"));
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    report.checked = checked;
    Ok(report)
}

fn functions(n: usize, m: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for_each_function(n, m, |f| {
        out.push(f.to_vec());
        true
    });
    out
}

/// The class of `T f (t)` for `t` in class `a` of `from`: its value under `h` is that of `t` under `h ∘ f`.
fn push_forward(alg: &Algebra, from: &Carrier, to: &Carrier, f: &[usize], a: usize) -> usize {
    let sig: Vec<usize> = alg
        .valuations(to.size)
        .iter()
        .map(|h| {
            let hf: Vec<usize> = f.iter().map(|&x| h[x]).collect();
            from.signatures[a][alg.encode(&hf)]
        })
        .collect();
    *to.index.get(&sig).expect("reindexed trees stay within the enumeration")
}
