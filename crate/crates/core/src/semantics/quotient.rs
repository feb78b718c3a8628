//! The quotient algebra `α_c` on the closed trees of bounded depth.
//!
//! Closed trees are enumerated, partitioned by the symmetric part of the base
//! relation, and one member per class is chosen as its representative. The
//! algebra then evaluates a tree of classes by grafting representatives and
//! classifying the result.

use crate::effect::EffectSpec;
use crate::gen;
use crate::semantics::base::{base_oracle, BaseError};
use crate::tree::{Term, Tree};

/// Which member of a class represents it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Choice {
    /// Least in the enumeration order (size, then structure).
    Least,
    /// Greatest in the enumeration order.
    Greatest,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Class {
    pub canonical: Term,
    /// Members sorted in enumeration order.
    pub members: Vec<Term>,
}

#[derive(Clone, Debug)]
pub struct ValueTable {
    pub spec: EffectSpec,
    pub depth: usize,
    pub choice: Choice,
    pub classes: Vec<Class>,
    /// `order[i][j]` iff class `i` is below class `j`.
    pub order: Vec<Vec<bool>>,
}

#[derive(Clone, Debug, thiserror::Error, PartialEq, Eq)]
pub enum QuotientError {
    #[error(transparent)]
    Base(#[from] BaseError),
    #[error("enumeration at depth {depth} has {count} trees, above the limit {limit}")]
    TooLarge { depth: usize, count: usize, limit: usize },
    #[error("leaf {0} is not a class of the table")]
    UnknownClass(usize),
    #[error("the flattened tree lies in no class enumerated at depth {0}")]
    NotInTable(usize),
}

/// Default bound on the number of enumerated trees.
pub const DEFAULT_LIMIT: usize = 500_000;

/// The enumeration order: size first, then structure (`⊥ < ⊤ < variables < operators`).
pub fn enumeration_order(a: &Term, b: &Term) -> std::cmp::Ordering {
    (a.size(), a).cmp(&(b.size(), b))
}

pub fn build_quotient(spec: &EffectSpec, depth: usize) -> Result<ValueTable, QuotientError> {
    build_quotient_with(spec, depth, Choice::Least, DEFAULT_LIMIT)
}

pub fn build_quotient_with(
    spec: &EffectSpec,
    depth: usize,
    choice: Choice,
    limit: usize,
) -> Result<ValueTable, QuotientError> {
    let count = count_trees(spec, depth);
    if count > limit {
        return Err(QuotientError::TooLarge { depth, count, limit });
    }
    let mut trees = gen::enumerate(&spec.signature, &gen::atoms(0), depth);
    trees.sort_by(enumeration_order);

    let mut classes: Vec<Class> = Vec::new();
    for t in trees {
        let mut found = None;
        for (i, c) in classes.iter().enumerate() {
            let rep = &c.members[0];
            if base_oracle(spec, &t, rep)? && base_oracle(spec, rep, &t)? {
                found = Some(i);
                break;
            }
        }
        match found {
            Some(i) => classes[i].members.push(t),
            None => classes.push(Class { canonical: t.clone(), members: vec![t] }),
        }
    }
    let mut table = ValueTable { spec: spec.clone(), depth, choice: Choice::Least, classes, order: Vec::new() };
    table.order = table
        .classes
        .iter()
        .map(|a| table.classes.iter().map(|b| base_oracle(spec, &a.canonical, &b.canonical)).collect())
        .collect::<Result<_, _>>()?;
    Ok(table.with_choice(choice))
}

/// The number of closed trees of depth at most `depth`, without building them.
pub fn count_trees(spec: &EffectSpec, depth: usize) -> usize {
    let mut n: usize = 2;
    for _ in 0..depth {
        let mut next: usize = 2;
        for (_, arity) in spec.signature.ops() {
            next = next.saturating_add(n.saturating_pow(*arity as u32));
        }
        n = next;
    }
    n
}

impl ValueTable {
    /// The same partition with representatives picked by `choice`.
    pub fn with_choice(mut self, choice: Choice) -> ValueTable {
        for c in &mut self.classes {
            c.canonical = match choice {
                Choice::Least => c.members[0].clone(),
                Choice::Greatest => c.members.last().expect("classes are non-empty").clone(),
            };
        }
        self.choice = choice;
        self
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    /// The class of a closed tree, compared against the representatives.
    pub fn classify(&self, t: &Term) -> Result<Option<usize>, QuotientError> {
        for (i, c) in self.classes.iter().enumerate() {
            if base_oracle(&self.spec, t, &c.canonical)? && base_oracle(&self.spec, &c.canonical, t)? {
                return Ok(Some(i));
            }
        }
        Ok(None)
    }

    pub fn leq(&self, i: usize, j: usize) -> bool {
        self.order[i][j]
    }

    /// The index of the class containing `⊥`.
    pub fn bottom(&self) -> usize {
        self.classify(&Tree::Bottom).ok().flatten().expect("⊥ is enumerated")
    }

    pub fn top(&self) -> usize {
        self.classify(&Tree::Top).ok().flatten().expect("⊤ is enumerated")
    }
}

/// `α_c(t) = [μ(T(c)(t))]` for a tree whose leaves are class indices.
pub fn alpha_quotient(table: &ValueTable, t: &Tree<usize>) -> Result<usize, QuotientError> {
    if let Some(&i) = t.leaves().into_iter().find(|&&i| i >= table.len()) {
        return Err(QuotientError::UnknownClass(i));
    }
    let flat: Term = t.bind(&mut |i| table.classes[*i].canonical.clone());
    table.classify(&flat)?.ok_or(QuotientError::NotInTable(table.depth))
}
