//! Analysis of compatible (1-Lipschitz) transformations of the p-adic
//! integers: exact residue arithmetic at explicit precision, a DSL for
//! describing the maps, measure-preservation and ergodicity verdicts on
//! Z_p and on p-adic spheres (finite criteria cross-validated against
//! exhaustive sweeps), and full-period pseudorandom generators built from
//! ergodic 2-adic maps.

// Divisibility tests are written with `%` throughout.
#![allow(clippy::manual_is_multiple_of)]

mod context;
mod error;
pub mod func;
pub mod prng;
pub mod residue;
pub mod sphere;
mod verdict;

pub use context::{
    is_prime_u64, truncation_index, val_factorial, PadicContext, PadicInt,
};
pub use error::{Error, Result};
pub use func::{
    binomial_at, compatibility_check, derivative_at, derivative_at_quotient, evaluate,
    evaluate_multi, iterate_eval, mahler_coefficients, parse, Expr, FunctionSpec,
};
pub use verdict::{CriterionTrace, SphereVerdict, Thresholds, Verdict, VerdictStatus};
