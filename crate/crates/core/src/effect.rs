//! The catalog of effect theories: signatures, axiom schemes and the
//! metadata that binds each theory to its value space and decision strategy.

use std::collections::BTreeMap;
use std::fmt;

use crate::regular::{RegularTree, Slot};
use crate::tree::{ExcName, Op, Term, Tree, Var};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EffectKind {
    Nondet,
    Prob,
    Store,
    Exceptions,
    Input,
    Cost,
    NondetProb,
}

impl EffectKind {
    pub const ALL: [EffectKind; 7] = [
        EffectKind::Nondet,
        EffectKind::Prob,
        EffectKind::Store,
        EffectKind::Exceptions,
        EffectKind::Input,
        EffectKind::Cost,
        EffectKind::NondetProb,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EffectKind::Nondet => "nondet",
            EffectKind::Prob => "prob",
            EffectKind::Store => "store",
            EffectKind::Exceptions => "exceptions",
            EffectKind::Input => "input",
            EffectKind::Cost => "cost",
            EffectKind::NondetProb => "nondet_prob",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "combined" => Some(EffectKind::NondetProb),
            _ => EffectKind::ALL.into_iter().find(|k| k.name() == name),
        }
    }
}

impl fmt::Display for EffectKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Theory parameters: store width, exception names and the grid resolution
/// used by the combined effect.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Params {
    pub store_size: u32,
    pub exceptions: Vec<ExcName>,
    pub grid: u32,
}

impl Default for Params {
    fn default() -> Self {
        Params { store_size: 2, exceptions: vec![ExcName::new("e1"), ExcName::new("e2")], grid: 3 }
    }
}

impl Params {
    pub fn with_store_size(mut self, k: u32) -> Self {
        self.store_size = k;
        self
    }

    pub fn with_exceptions(mut self, names: &[&str]) -> Self {
        self.exceptions = names.iter().map(|n| ExcName::new(n)).collect();
        self
    }
}

/// Operators with their arities.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Signature {
    ops: Vec<(Op, usize)>,
}

impl Signature {
    pub fn new(ops: Vec<(Op, usize)>) -> Self {
        Signature { ops }
    }

    pub fn ops(&self) -> &[(Op, usize)] {
        &self.ops
    }

    pub fn arity(&self, op: &Op) -> Option<usize> {
        self.ops.iter().find(|(o, _)| o == op).map(|(_, n)| *n)
    }

    /// Whether every node of `t` uses a signature operator with the right child count.
    pub fn admits<L>(&self, t: &Tree<L>) -> bool {
        match t {
            Tree::Node(op, cs) => self.arity(op) == Some(cs.len()) && cs.iter().all(|c| self.admits(c)),
            _ => true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AxiomKind {
    Equation,
    Inequation,
}

/// An axiom `lhs = rhs` or `lhs ≤ rhs`, with variables standing for metavariables.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AxiomScheme {
    pub name: String,
    pub kind: AxiomKind,
    pub lhs: RegularTree<Var>,
    pub rhs: RegularTree<Var>,
    pub metavars: Vec<Var>,
}

impl AxiomScheme {
    fn finite(name: impl Into<String>, kind: AxiomKind, lhs: Term, rhs: Term) -> Self {
        let mut metavars: Vec<Var> = lhs.vars().union(&rhs.vars()).copied().collect();
        metavars.sort();
        AxiomScheme {
            name: name.into(),
            kind,
            lhs: RegularTree::from_tree(&lhs),
            rhs: RegularTree::from_tree(&rhs),
            metavars,
        }
    }

    fn eq(name: impl Into<String>, lhs: Term, rhs: Term) -> Self {
        Self::finite(name, AxiomKind::Equation, lhs, rhs)
    }

    pub fn is_equation(&self) -> bool {
        self.kind == AxiomKind::Equation
    }

    /// Both sides as finite terms, unless a side is a recursive pattern.
    pub fn finite_sides(&self) -> Option<(Term, Term)> {
        Some((self.lhs.as_finite()?, self.rhs.as_finite()?))
    }
}

#[derive(Clone, Debug, thiserror::Error, PartialEq, Eq)]
pub enum EffectError {
    #[error("unknown effect `{0}`")]
    UnknownEffect(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("axiom `{axiom}` needs a binding for {var}")]
    MissingBinding { axiom: String, var: Var },
    #[error("no axiom named `{0}`")]
    UnknownAxiom(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ValueSpaceTag {
    ThreePoint,
    Dyadic,
    StateSet,
    FlatExc,
    ExtNat,
    ClosedTree,
    IntervalPair,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LeqStrategy {
    Enumerate,
    Vertex,
    CaseAnalysis,
    Bisimulation,
    Grid(u32),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct EffectSpec {
    pub kind: EffectKind,
    pub params: Params,
    pub signature: Signature,
    pub axioms: Vec<AxiomScheme>,
    pub value_space: ValueSpaceTag,
    pub strategy: LeqStrategy,
}

impl EffectSpec {
    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    pub fn axiom(&self, name: &str) -> Result<&AxiomScheme, EffectError> {
        self.axioms.iter().find(|a| a.name == name).ok_or_else(|| EffectError::UnknownAxiom(name.to_string()))
    }

    pub fn store_size(&self) -> u32 {
        self.params.store_size
    }
}

fn x(n: u32) -> Term {
    Term::var(n)
}

fn op(o: Op, cs: Vec<Term>) -> Term {
    Tree::Node(o, cs)
}

fn nondet_axioms() -> Vec<AxiomScheme> {
    let or = |a, b| op(Op::Or, vec![a, b]);
    vec![
        AxiomScheme::eq("or-idem", or(x(0), x(0)), x(0)),
        AxiomScheme::eq("or-comm", or(x(0), x(1)), or(x(1), x(0))),
        AxiomScheme::eq("or-assoc", or(x(0), or(x(1), x(2))), or(or(x(0), x(1)), x(2))),
    ]
}

fn prob_axioms() -> Vec<AxiomScheme> {
    let por = |a, b| op(Op::Por, vec![a, b]);
    let fix =
        RegularTree::rec("s", Tree::Node(Op::Por, vec![Tree::Leaf(Slot::Leaf(Var(0))), Tree::Leaf(Slot::Ref(0))]));
    vec![
        AxiomScheme::eq("por-idem", por(x(0), x(0)), x(0)),
        AxiomScheme::eq("por-comm", por(x(0), x(1)), por(x(1), x(0))),
        AxiomScheme::eq("por-medial", por(por(x(0), x(1)), por(x(2), x(3))), por(por(x(0), x(2)), por(x(1), x(3)))),
        AxiomScheme {
            name: "por-fix".into(),
            kind: AxiomKind::Equation,
            lhs: fix,
            rhs: RegularTree::from_tree(&x(0)),
            metavars: vec![Var(0)],
        },
    ]
}

fn store_axioms(k: u32) -> Vec<AxiomScheme> {
    let upd = |n, t| op(Op::Upd(n), vec![t]);
    let lkp = |cs| op(Op::Lkp, cs);
    let mut out = Vec::new();
    for n in 0..k {
        for m in 0..k {
            out.push(AxiomScheme::eq(format!("upd-upd[{n},{m}]"), upd(n, upd(m, x(0))), upd(m, x(0))));
        }
    }
    out.push(AxiomScheme::eq("lkp-const", lkp((0..k).map(|_| x(0)).collect()), x(0)));
    for n in 0..k {
        out.push(AxiomScheme::eq(format!("upd-lkp[{n}]"), upd(n, lkp((0..k).map(x).collect())), upd(n, x(n))));
    }
    out.push(AxiomScheme::eq("lkp-upd", lkp((0..k).map(|m| upd(m, x(m))).collect()), lkp((0..k).map(x).collect())));
    out
}

fn exception_axioms(names: &[ExcName]) -> Vec<AxiomScheme> {
    let catch = |e: &ExcName, a, b| op(Op::Catch(e.clone()), vec![a, b]);
    let raise = |e: &ExcName| op(Op::Raise(e.clone()), vec![]);
    let mut out = Vec::new();
    for e in names {
        out.push(AxiomScheme::eq(format!("catch-raise[{e}]"), catch(e, raise(e), x(0)), x(0)));
        for d in names.iter().filter(|d| *d != e) {
            out.push(AxiomScheme::eq(format!("catch-raise[{e},{d}]"), catch(e, raise(d), x(0)), raise(d)));
        }
        out.push(AxiomScheme::eq(format!("catch-idem[{e}]"), catch(e, x(0), x(0)), x(0)));
        out.push(AxiomScheme::eq(
            format!("catch-assoc[{e}]"),
            catch(e, catch(e, x(0), x(1)), x(2)),
            catch(e, x(0), catch(e, x(1), x(2))),
        ));
        out.push(AxiomScheme::eq(format!("catch-bot[{e}]"), catch(e, Tree::Bottom, x(0)), Tree::Bottom));
        out.push(AxiomScheme::eq(format!("catch-top[{e}]"), catch(e, Tree::Top, x(0)), Tree::Top));
    }
    out
}

/// Look up a theory by name (`combined` is accepted for `nondet_prob`).
pub fn get_effect(name: &str, params: &Params) -> Result<EffectSpec, EffectError> {
    let kind = EffectKind::from_name(name).ok_or_else(|| EffectError::UnknownEffect(name.to_string()))?;
    effect(kind, params)
}

pub fn effect(kind: EffectKind, params: &Params) -> Result<EffectSpec, EffectError> {
    if params.store_size < 1 || params.store_size > 32 {
        return Err(EffectError::InvalidParams(format!("store size must lie in 1..=32, got {}", params.store_size)));
    }
    if params.exceptions.is_empty() {
        return Err(EffectError::InvalidParams("the exception set is empty".into()));
    }
    let mut names = params.exceptions.clone();
    names.sort();
    names.dedup();
    if names.len() != params.exceptions.len() {
        return Err(EffectError::InvalidParams("duplicate exception names".into()));
    }
    if params.grid < 1 {
        return Err(EffectError::InvalidParams("grid resolution must be at least 1".into()));
    }
    let k = params.store_size;
    let (ops, axioms, value_space, strategy) = match kind {
        EffectKind::Nondet => (vec![(Op::Or, 2)], nondet_axioms(), ValueSpaceTag::ThreePoint, LeqStrategy::Enumerate),
        EffectKind::Prob => (vec![(Op::Por, 2)], prob_axioms(), ValueSpaceTag::Dyadic, LeqStrategy::Vertex),
        EffectKind::Store => {
            let mut ops: Vec<(Op, usize)> = (0..k).map(|n| (Op::Upd(n), 1)).collect();
            ops.push((Op::Lkp, k as usize));
            (ops, store_axioms(k), ValueSpaceTag::StateSet, LeqStrategy::Enumerate)
        }
        EffectKind::Exceptions => {
            let mut ops = Vec::new();
            for e in &params.exceptions {
                ops.push((Op::Raise(e.clone()), 0));
                ops.push((Op::Catch(e.clone()), 2));
            }
            (ops, exception_axioms(&params.exceptions), ValueSpaceTag::FlatExc, LeqStrategy::Enumerate)
        }
        EffectKind::Input => (vec![(Op::In, 2)], Vec::new(), ValueSpaceTag::ClosedTree, LeqStrategy::Bisimulation),
        EffectKind::Cost => (
            vec![(Op::Tick, 1)],
            vec![AxiomScheme::finite("tick-leq", AxiomKind::Inequation, op(Op::Tick, vec![x(0)]), x(0))],
            ValueSpaceTag::ExtNat,
            LeqStrategy::CaseAnalysis,
        ),
        EffectKind::NondetProb => {
            let mut axioms = nondet_axioms();
            axioms.extend(prob_axioms());
            axioms.push(AxiomScheme::eq(
                "por-or-dist",
                op(Op::Por, vec![x(0), op(Op::Or, vec![x(1), x(2)])]),
                op(Op::Or, vec![op(Op::Por, vec![x(0), x(1)]), op(Op::Por, vec![x(0), x(2)])]),
            ));
            (vec![(Op::Or, 2), (Op::Por, 2)], axioms, ValueSpaceTag::IntervalPair, LeqStrategy::Grid(params.grid))
        }
    };
    Ok(EffectSpec { kind, params: params.clone(), signature: Signature::new(ops), axioms, value_space, strategy })
}

/// Substitute closed or open terms for the metavariables of an axiom.
pub fn instantiate_axiom(
    ax: &AxiomScheme,
    subst: &BTreeMap<Var, Term>,
) -> Result<(RegularTree<Var>, RegularTree<Var>), EffectError> {
    if let Some(v) = ax.metavars.iter().find(|v| !subst.contains_key(v)) {
        return Err(EffectError::MissingBinding { axiom: ax.name.clone(), var: *v });
    }
    let mut f = |v: &Var| RegularTree::from_tree(&subst[v]);
    Ok((ax.lhs.bind(&mut f), ax.rhs.bind(&mut f)))
}

/// Like [`instantiate_axiom`] for finite axioms; `None` for recursive patterns.
pub fn instantiate_finite(ax: &AxiomScheme, subst: &BTreeMap<Var, Term>) -> Result<Option<(Term, Term)>, EffectError> {
    if let Some(v) = ax.metavars.iter().find(|v| !subst.contains_key(v)) {
        return Err(EffectError::MissingBinding { axiom: ax.name.clone(), var: *v });
    }
    Ok(ax.finite_sides().map(|(l, r)| {
        let mut f = |v: &Var| subst[v].clone();
        (l.bind(&mut f), r.bind(&mut f))
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(name: &str) -> EffectSpec {
        get_effect(name, &Params::default()).unwrap()
    }

    #[test]
    fn axiom_counts() {
        assert_eq!(spec("nondet").axioms.len(), 3);
        assert_eq!(spec("nondet").signature.ops(), &[(Op::Or, 2)]);
        assert_eq!(spec("prob").axioms.len(), 4);
        assert_eq!(spec("store").axioms.len(), 4 + 1 + 2 + 1);
        assert_eq!(spec("exceptions").axioms.len(), 12);
        assert!(spec("input").axioms.is_empty());
        assert_eq!(spec("input").signature.ops(), &[(Op::In, 2)]);
        let cost = spec("cost");
        assert_eq!(cost.axioms.len(), 1);
        assert_eq!(cost.axioms[0].kind, AxiomKind::Inequation);
        assert_eq!(cost.axioms[0].lhs.as_finite(), Some(op(Op::Tick, vec![x(0)])));
        assert_eq!(spec("nondet_prob").axioms.len(), 3 + 4 + 1);
        assert_eq!(spec("combined").kind, EffectKind::NondetProb);
    }

    #[test]
    fn combined_is_union_plus_interaction() {
        let mut names: Vec<_> = spec("nondet").axioms.into_iter().map(|a| a.name).collect();
        names.extend(spec("prob").axioms.into_iter().map(|a| a.name));
        let combined: Vec<_> = spec("nondet_prob").axioms.into_iter().map(|a| a.name).collect();
        assert_eq!(&combined[..names.len()], &names[..]);
        assert_eq!(combined.len(), names.len() + 1);
    }

    #[test]
    fn bad_params() {
        assert!(matches!(get_effect("state", &Params::default()), Err(EffectError::UnknownEffect(_))));
        let p = Params::default().with_store_size(0);
        assert!(matches!(get_effect("store", &p), Err(EffectError::InvalidParams(_))));
        let p = Params { exceptions: vec![], ..Params::default() };
        assert!(matches!(get_effect("exceptions", &p), Err(EffectError::InvalidParams(_))));
    }

    #[test]
    fn instantiation() {
        let nd = spec("nondet");
        let pt = op(Op::Por, vec![Tree::Top, Tree::Bottom]);
        let s = BTreeMap::from([(Var(0), pt.clone())]);
        let (l, r) = instantiate_finite(nd.axiom("or-idem").unwrap(), &s).unwrap().unwrap();
        assert_eq!(l, op(Op::Or, vec![pt.clone(), pt.clone()]));
        assert_eq!(r, pt);

        let st = spec("store");
        let s = BTreeMap::from([(Var(0), x(0)), (Var(1), x(1))]);
        let (l, r) = instantiate_finite(st.axiom("upd-lkp[1]").unwrap(), &s).unwrap().unwrap();
        assert_eq!(l, op(Op::Upd(1), vec![op(Op::Lkp, vec![x(0), x(1)])]));
        assert_eq!(r, op(Op::Upd(1), vec![x(1)]));

        let pr = spec("prob");
        let s = BTreeMap::from([(Var(0), Tree::Top)]);
        let (l, r) = instantiate_axiom(pr.axiom("por-fix").unwrap(), &s).unwrap();
        assert_eq!(l.states.len(), 1);
        let expected = RegularTree::rec("s", Tree::Node(Op::Por, vec![Tree::Top, Tree::Leaf(Slot::Ref(0))]));
        assert!(l.graph().same(&expected.graph()));
        assert_eq!(r.as_finite(), Some(Tree::Top));

        let err = instantiate_axiom(nd.axiom("or-comm").unwrap(), &BTreeMap::from([(Var(0), x(0))]));
        assert!(matches!(err, Err(EffectError::MissingBinding { .. })));
        assert!(matches!(nd.axiom("upd-upd[3,0]"), Err(EffectError::UnknownAxiom(_))));
    }

    #[test]
    fn axioms_are_well_formed() {
        for kind in EffectKind::ALL {
            let s = effect(kind, &Params::default()).unwrap();
            for ax in &s.axioms {
                assert!(s.signature.admits(&ax.lhs.root), "{}", ax.name);
                assert!(s.signature.admits(&ax.rhs.root), "{}", ax.name);
                for st in &ax.lhs.states {
                    assert!(s.signature.admits(&st.body));
                }
            }
        }
    }
}
