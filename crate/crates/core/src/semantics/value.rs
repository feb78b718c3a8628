//! Value spaces of the evaluators and their orders.

use std::collections::BTreeMap;
use std::fmt;

use crate::effect::{EffectSpec, ValueSpaceTag};
use crate::regular::Graph;
use crate::semantics::dyadic::Dyadic;
use crate::tree::{ExcName, Var};

/// The three-element chain `⊥ ⊑ ◇ ⊑ ⊤`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Three {
    Bottom,
    Diamond,
    Top,
}

/// The flat lattice `⊥ ⊑ raise(e) ⊑ ⊤`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ExcValue {
    Bottom,
    Raise(ExcName),
    Top,
}

/// `ℕ ∪ {∞}`, ordered in reverse: `∞` is the least element and `0` the greatest.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ExtNat {
    Fin(u64),
    Inf,
}

impl ExtNat {
    pub fn succ(self) -> ExtNat {
        match self {
            ExtNat::Fin(n) => ExtNat::Fin(n.saturating_add(1)),
            ExtNat::Inf => ExtNat::Inf,
        }
    }

    pub fn plus(self, n: u64) -> ExtNat {
        match self {
            ExtNat::Fin(m) => ExtNat::Fin(m.saturating_add(n)),
            ExtNat::Inf => ExtNat::Inf,
        }
    }

    /// The value order: `a ⊑ b` iff `a ≥ b` numerically.
    pub fn value_leq(self, other: ExtNat) -> bool {
        match (self, other) {
            (ExtNat::Inf, _) => true,
            (ExtNat::Fin(_), ExtNat::Inf) => false,
            (ExtNat::Fin(a), ExtNat::Fin(b)) => a >= b,
        }
    }
}

/// A subset of the store states `{0..k-1}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateSet {
    bits: u64,
    k: u32,
}

impl StateSet {
    pub fn empty(k: u32) -> Self {
        StateSet { bits: 0, k }
    }

    pub fn full(k: u32) -> Self {
        StateSet { bits: if k >= 64 { u64::MAX } else { (1u64 << k) - 1 }, k }
    }

    pub fn from_bits(bits: u64, k: u32) -> Self {
        StateSet { bits: bits & StateSet::full(k).bits, k }
    }

    pub fn from_states(k: u32, states: impl IntoIterator<Item = u32>) -> Self {
        let bits = states.into_iter().filter(|&s| s < k).fold(0u64, |b, s| b | 1 << s);
        StateSet { bits, k }
    }

    pub fn bits(self) -> u64 {
        self.bits
    }

    pub fn size(self) -> u32 {
        self.k
    }

    pub fn contains(self, s: u32) -> bool {
        s < self.k && self.bits >> s & 1 == 1
    }

    pub fn is_subset(self, other: StateSet) -> bool {
        self.bits & !other.bits == 0
    }

    pub fn complement(self) -> StateSet {
        StateSet { bits: !self.bits & StateSet::full(self.k).bits, k: self.k }
    }

    pub fn states(self) -> Vec<u32> {
        (0..self.k).filter(|&s| self.contains(s)).collect()
    }
}

/// Leaf type of closed trees: there are no variables.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Nothing {}

/// A closed regular tree, kept in canonical form so equality is tree equality.
pub type ClosedTree = Graph<Nothing>;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Value {
    Three(Three),
    Prob(Dyadic),
    States(StateSet),
    Exc(ExcValue),
    Cost(ExtNat),
    Tree(ClosedTree),
    /// A lower and an upper probability, `lo ≤ hi`.
    Pair(Dyadic, Dyadic),
}

impl Value {
    pub fn prob(num: u32, exp: u32) -> Value {
        Value::Prob(Dyadic::new(num, exp))
    }

    pub fn pair(lo: Dyadic, hi: Dyadic) -> Value {
        debug_assert!(lo <= hi);
        Value::Pair(lo, hi)
    }

    pub fn as_prob(&self) -> Option<&Dyadic> {
        match self {
            Value::Prob(d) => Some(d),
            _ => None,
        }
    }
}

/// A value space together with its parameters.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Space {
    Three,
    Prob,
    States(u32),
    Exc(Vec<ExcName>),
    Cost,
    Tree,
    Pair,
}

#[derive(Clone, Debug, thiserror::Error, PartialEq, Eq)]
#[error("value {value} does not belong to the {space} space")]
pub struct WrongSpace {
    pub value: String,
    pub space: &'static str,
}

impl Space {
    pub fn of(spec: &EffectSpec) -> Space {
        match spec.value_space {
            ValueSpaceTag::ThreePoint => Space::Three,
            ValueSpaceTag::Dyadic => Space::Prob,
            ValueSpaceTag::StateSet => Space::States(spec.params.store_size),
            ValueSpaceTag::FlatExc => Space::Exc(spec.params.exceptions.clone()),
            ValueSpaceTag::ExtNat => Space::Cost,
            ValueSpaceTag::ClosedTree => Space::Tree,
            ValueSpaceTag::IntervalPair => Space::Pair,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Space::Three => "three-point",
            Space::Prob => "dyadic",
            Space::States(_) => "state-set",
            Space::Exc(_) => "flat-exception",
            Space::Cost => "extended-natural",
            Space::Tree => "closed-tree",
            Space::Pair => "interval-pair",
        }
    }

    /// The least element `⋁∅`.
    pub fn bottom(&self) -> Value {
        match self {
            Space::Three => Value::Three(Three::Bottom),
            Space::Prob => Value::Prob(Dyadic::zero()),
            Space::States(k) => Value::States(StateSet::empty(*k)),
            Space::Exc(_) => Value::Exc(ExcValue::Bottom),
            Space::Cost => Value::Cost(ExtNat::Inf),
            Space::Tree => Value::Tree(Graph::bottom()),
            Space::Pair => Value::Pair(Dyadic::zero(), Dyadic::zero()),
        }
    }

    pub fn top(&self) -> Value {
        match self {
            Space::Three => Value::Three(Three::Top),
            Space::Prob => Value::Prob(Dyadic::one()),
            Space::States(k) => Value::States(StateSet::full(*k)),
            Space::Exc(_) => Value::Exc(ExcValue::Top),
            Space::Cost => Value::Cost(ExtNat::Fin(0)),
            Space::Tree => Value::Tree(Graph::top()),
            Space::Pair => Value::Pair(Dyadic::one(), Dyadic::one()),
        }
    }

    pub fn contains(&self, v: &Value) -> bool {
        match (self, v) {
            (Space::Three, Value::Three(_)) | (Space::Cost, Value::Cost(_)) | (Space::Tree, Value::Tree(_)) => true,
            (Space::Prob, Value::Prob(p)) => *p <= Dyadic::one(),
            (Space::States(k), Value::States(s)) => s.size() == *k,
            (Space::Exc(names), Value::Exc(e)) => match e {
                ExcValue::Raise(n) => names.contains(n),
                _ => true,
            },
            (Space::Pair, Value::Pair(lo, hi)) => lo <= hi && *hi <= Dyadic::one(),
            _ => false,
        }
    }

    pub fn check(&self, v: &Value) -> Result<(), WrongSpace> {
        if self.contains(v) {
            Ok(())
        } else {
            Err(WrongSpace { value: format!("{v:?}"), space: self.name() })
        }
    }

    /// The order `⊑` of the space.
    pub fn leq(&self, v: &Value, w: &Value) -> Result<bool, WrongSpace> {
        self.check(v)?;
        self.check(w)?;
        Ok(match (v, w) {
            (Value::Three(a), Value::Three(b)) => a <= b,
            (Value::Prob(a), Value::Prob(b)) => a <= b,
            (Value::States(a), Value::States(b)) => a.is_subset(*b),
            (Value::Exc(a), Value::Exc(b)) => match (a, b) {
                (ExcValue::Bottom, _) | (_, ExcValue::Top) => true,
                (ExcValue::Raise(e), ExcValue::Raise(d)) => e == d,
                _ => false,
            },
            (Value::Cost(a), Value::Cost(b)) => a.value_leq(*b),
            (Value::Tree(a), Value::Tree(b)) => a.leq(b),
            (Value::Pair(a, b), Value::Pair(c, d)) => a <= c && b <= d,
            _ => unreachable!("checked above"),
        })
    }

    /// All elements of a finite space, ascending in a linear extension of `⊑`.
    pub fn elements(&self) -> Option<Vec<Value>> {
        match self {
            Space::Three => Some([Three::Bottom, Three::Diamond, Three::Top].into_iter().map(Value::Three).collect()),
            Space::States(k) if *k <= 16 => {
                let mut sets: Vec<StateSet> = (0..1u64 << k).map(|b| StateSet::from_bits(b, *k)).collect();
                sets.sort_by_key(|s| (s.bits().count_ones(), s.bits()));
                Some(sets.into_iter().map(Value::States).collect())
            }
            Space::Exc(names) => {
                let mut out = vec![Value::Exc(ExcValue::Bottom)];
                out.extend(names.iter().map(|e| Value::Exc(ExcValue::Raise(e.clone()))));
                out.push(Value::Exc(ExcValue::Top));
                Some(out)
            }
            _ => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.elements().is_some()
    }
}

/// An assignment of values to variables; unmentioned variables take the bottom value.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Assignment(pub BTreeMap<Var, Value>);

impl Assignment {
    pub fn new() -> Self {
        Assignment(BTreeMap::new())
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (Var, Value)>) -> Self {
        Assignment(pairs.into_iter().collect())
    }

    pub fn get(&self, v: Var, space: &Space) -> Value {
        self.0.get(&v).cloned().unwrap_or_else(|| space.bottom())
    }

    pub fn insert(&mut self, v: Var, value: Value) {
        self.0.insert(v, value);
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Var, &Value)> {
        self.0.iter()
    }
}

impl fmt::Display for Three {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Three::Bottom => "bot",
            Three::Diamond => "diamond",
            Three::Top => "top",
        })
    }
}

impl fmt::Display for ExtNat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtNat::Fin(n) => write!(f, "{n}"),
            ExtNat::Inf => f.write_str("inf"),
        }
    }
}

impl fmt::Display for ExcValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExcValue::Bottom => f.write_str("bot"),
            ExcValue::Raise(e) => write!(f, "raise[{e}]"),
            ExcValue::Top => f.write_str("top"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orders() {
        let prob = Space::Prob;
        assert!(prob.leq(&Value::prob(1, 2), &Value::prob(1, 1)).unwrap());
        let three = Space::Three;
        assert!(!three.leq(&Value::Three(Three::Diamond), &Value::Three(Three::Bottom)).unwrap());
        let exc = Space::Exc(vec![ExcName::new("e1"), ExcName::new("e2")]);
        let r = |e: &str| Value::Exc(ExcValue::Raise(ExcName::new(e)));
        assert!(!exc.leq(&r("e1"), &r("e2")).unwrap());
        assert!(exc.leq(&Value::Exc(ExcValue::Bottom), &r("e2")).unwrap());
        let cost = Space::Cost;
        assert!(cost.leq(&Value::Cost(ExtNat::Fin(3)), &Value::Cost(ExtNat::Fin(1))).unwrap());
        assert!(cost.leq(&Value::Cost(ExtNat::Inf), &Value::Cost(ExtNat::Fin(1))).unwrap());
        assert!(!cost.leq(&Value::Cost(ExtNat::Fin(0)), &Value::Cost(ExtNat::Inf)).unwrap());
        assert!(prob.leq(&Value::prob(1, 1), &Value::Three(Three::Top)).is_err());
    }

    #[test]
    fn finite_spaces() {
        assert_eq!(Space::Three.elements().unwrap().len(), 3);
        assert_eq!(Space::States(2).elements().unwrap().len(), 4);
        assert_eq!(Space::Exc(vec![ExcName::new("e")]).elements().unwrap().len(), 3);
        assert!(Space::Prob.elements().is_none());
        for space in [Space::Three, Space::States(2), Space::Exc(vec![ExcName::new("e")])] {
            let els = space.elements().unwrap();
            assert_eq!(els[0], space.bottom());
            assert_eq!(els.last().unwrap(), &space.top());
            for (i, a) in els.iter().enumerate() {
                for b in &els[..i] {
                    assert!(!space.leq(a, b).unwrap() || a == b);
                }
            }
        }
    }

    #[test]
    fn state_sets() {
        let s = StateSet::from_states(3, [0, 2]);
        assert_eq!(s.complement().states(), vec![1]);
        assert!(s.is_subset(StateSet::full(3)));
        assert!(!StateSet::full(3).is_subset(s));
    }
}
