//! Deciding, refuting and certifying inequalities between algebraic-effect
//! expressions.
//!
//! Effect trees ([`tree`], [`regular`]) are interpreted in the value spaces of
//! seven effect theories ([`effect`], [`semantics`]). On top of evaluation sit
//! the decision procedures for the induced preorder ([`relations`]), a
//! derivation checker for the axiomatic preorder ([`proofs`]), Boolean
//! modalities ([`modalities`]), relators ([`relator`]) and the negation of
//! trees ([`involution`]). [`syntax`] and [`cli`] provide the concrete syntax
//! and the command-line front end.

pub mod cli;
pub mod effect;
pub mod gen;
pub mod involution;
pub mod modalities;
pub mod proofs;
pub mod regular;
pub mod relations;
pub mod relator;
pub mod semantics;
pub mod syntax;
pub mod tree;
