//! Value spaces, the evaluators of the catalog, the quotient construction and
//! law checking.

pub mod base;
pub mod dyadic;
pub mod eval;
pub mod laws;
pub mod quotient;
pub mod value;

pub use base::{base_oracle, BaseError};
pub use dyadic::Dyadic;
pub use eval::{alpha, eval_bounds, eval_exact, eval_graph, eval_term, Bounds, EvalError};
pub use quotient::{alpha_quotient, build_quotient, Choice, ValueTable};
pub use value::{Assignment, ExcValue, ExtNat, Space, StateSet, Three, Value};

use crate::effect::EffectSpec;

/// Decides `v ⊑ w` in the value space of `spec`.
pub fn value_leq(spec: &EffectSpec, v: &Value, w: &Value) -> Result<bool, value::WrongSpace> {
    Space::of(spec).leq(v, w)
}
