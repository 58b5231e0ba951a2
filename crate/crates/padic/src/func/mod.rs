//! Compatible functions as an AST with a textual DSL: parsing, exact
//! evaluation modulo p^K, Mahler coefficients, and differentiation.

mod analysis;
mod ast;
mod eval;
mod parse;

pub use analysis::{
    compatibility_check, derivative_at, derivative_at_quotient, mahler_coefficients,
};
pub use ast::{Expr, FunctionSpec};
pub use eval::{binomial_at, evaluate, evaluate_multi, iterate_eval};
pub use parse::parse;

pub(crate) use analysis::eval_u64_scalar;
pub(crate) use eval::{eval_u64, SmallRing};
