//! Mahler coefficients, differentiation, and the congruence-preservation
//! check.

use std::time::Instant;

use num_bigint::{BigInt, BigUint};

use super::ast::FunctionSpec;
use super::eval::{eval_u64, evaluate, SmallRing};
use crate::context::{checked_states, PadicContext, PadicInt};
use crate::error::{Error, Result};
use crate::verdict::{Verdict, VerdictStatus};

fn require_univariate(f: &FunctionSpec) -> Result<()> {
    if f.arity() != 1 || f.co_arity() != 1 {
        return Err(Error::Arity {
            expected: 1,
            got: f.arity().max(f.co_arity()) as usize,
        });
    }
    Ok(())
}

pub(crate) fn eval_u64_scalar(f: &FunctionSpec, ring: &SmallRing, x: u64) -> Result<u64> {
    let mut outs = eval_u64(f, ring, &[x])?;
    debug_assert_eq!(outs.len(), 1);
    Ok(outs.pop().expect("scalar output"))
}

/// Mahler coefficients a_0..a_{count-1} of f modulo p^K, computed by
/// iterated forward differences at 0: a_i = (D^i f)(0) where
/// (D f)(x) = f(x+1) - f(x).
pub fn mahler_coefficients(
    f: &FunctionSpec,
    ctx: &PadicContext,
    count: usize,
) -> Result<Vec<BigUint>> {
    require_univariate(f)?;
    let mut row: Vec<PadicInt> = (0..count)
        .map(|x| evaluate(f, &ctx.int(x as i64)))
        .collect::<Result<_>>()?;
    let mut coefficients = Vec::with_capacity(count);
    for width in (1..=count).rev() {
        coefficients.push(row[0].residue().clone());
        for j in 0..width - 1 {
            row[j] = row[j + 1].sub(&row[j])?;
        }
        row.truncate(width.saturating_sub(1));
    }
    Ok(coefficients)
}

/// f'(y) modulo p^K. Polynomials are differentiated symbolically; series
/// functions use the first-order Taylor quotient at a raised precision (see
/// `derivative_at_quotient`). The two routes agree on polynomials; the
/// property suite pins that down.
pub fn derivative_at(f: &FunctionSpec, y: &PadicInt) -> Result<PadicInt> {
    if let Some(coeffs) = f.as_poly() {
        return poly_derivative_at(&coeffs, y);
    }
    derivative_at_quotient(f, y)
}

/// (f(y + p^s) - f(y)) / p^s with s = K + n, evaluated at precision 2K + n,
/// where n is the series scaling of f (0 for integral series). The Taylor
/// tail then has valuation at least 2s - n = s + K, so the quotient is
/// f'(y) modulo p^K exactly.
pub fn derivative_at_quotient(f: &FunctionSpec, y: &PadicInt) -> Result<PadicInt> {
    require_univariate(f)?;
    let shift = f.series_shift().ok_or_else(|| Error::NotSeriesClass {
        op: "derivative_at",
        found: f.to_string(),
    })?;
    let ctx = y.context();
    let precision = ctx.precision();
    let step = precision + shift;
    let work_ctx = ctx.with_precision(2 * precision + shift)?;
    let lifted = work_ctx.int_from_residue(y.residue().clone());
    let h = work_ctx.int_from_residue(BigUint::from(ctx.p()).pow(step));
    let upper = evaluate(f, &lifted.add(&h)?)?;
    let lower = evaluate(f, &lifted)?;
    upper.sub(&lower)?.exact_div_p(step)
}

fn poly_derivative_at(coeffs: &[i64], y: &PadicInt) -> Result<PadicInt> {
    let ctx = y.context();
    let mut acc = ctx.zero();
    for (i, c) in coeffs.iter().enumerate().skip(1).rev() {
        let coefficient = BigInt::from(*c) * BigInt::from(i);
        acc = acc.mul(y)?.add(&ctx.int(coefficient))?;
    }
    Ok(acc)
}

/// Checks that f preserves congruences up to level k: for every residue x
/// modulo p^k and every j < k, f(x) mod p^j equals f(x mod p^j) mod p^j.
pub fn compatibility_check(f: &FunctionSpec, p: u64, k: u32, max_states: u64) -> Result<Verdict> {
    let started = Instant::now();
    require_univariate(f)?;
    let states = checked_states(p, k, max_states)?;
    let ring_full = SmallRing::new(p, k)?;
    let full: Vec<u64> = (0..states)
        .map(|x| eval_u64_scalar(f, &ring_full, x))
        .collect::<Result<_>>()?;
    for j in 1..k {
        let ring_j = SmallRing::new(p, j)?;
        let m_j = ring_j.modulus;
        let reduced: Vec<u64> = (0..m_j)
            .map(|x| eval_u64_scalar(f, &ring_j, x))
            .collect::<Result<_>>()?;
        for x in 0..states {
            let via_full = full[x as usize] % m_j;
            let via_reduced = reduced[(x % m_j) as usize];
            if via_full != via_reduced {
                let witness = serde_json::json!({
                    "level": j,
                    "x": x,
                    "y": x % m_j,
                    "f_x_mod": via_full,
                    "f_y_mod": via_reduced,
                });
                return Ok(Verdict::finish(
                    "compatibility",
                    p,
                    (1..=k).collect(),
                    VerdictStatus::Fails,
                    Some(witness),
                    started,
                ));
            }
        }
    }
    Ok(Verdict::finish(
        "compatibility",
        p,
        (1..=k).collect(),
        VerdictStatus::Holds,
        None,
        started,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::func::parse::parse;
    use num_traits::ToPrimitive;

    const LIMIT: u64 = 1 << 22;

    fn ctx(p: u64, k: u32) -> PadicContext {
        PadicContext::new(p, k).unwrap()
    }

    fn coeffs_u64(f: &str, p: u64, k: u32, count: usize) -> Vec<u64> {
        mahler_coefficients(&parse(f).unwrap(), &ctx(p, k), count)
            .unwrap()
            .iter()
            .map(|c| c.to_u64().unwrap())
            .collect()
    }

    #[test]
    fn mahler_examples() {
        assert_eq!(coeffs_u64("x^2", 2, 4, 3), vec![0, 1, 2]);
        assert_eq!(coeffs_u64("7", 3, 3, 3), vec![7, 0, 0]);
        assert_eq!(coeffs_u64("3 + 5*x", 2, 4, 3), vec![3, 5, 0]);
    }

    #[test]
    fn derivative_examples() {
        let c = ctx(5, 3);
        let f = parse("x^2").unwrap();
        assert_eq!(derivative_at(&f, &c.int(3)).unwrap(), c.int(6));

        let c2 = ctx(5, 2);
        assert_eq!(derivative_at(&f, &c2.int(1)).unwrap(), c2.int(2));

        let c3 = ctx(3, 2);
        let g = parse("bseries(0, 1, 2)").unwrap();
        // 2x^2 - x has derivative 4x - 1; at 0 that is -1 = 8 mod 9
        assert_eq!(derivative_at(&g, &c3.int(0)).unwrap(), c3.int(8));
    }

    #[test]
    fn quotient_route_matches_symbolic_on_polynomials() {
        let f = parse("x^3 + 5*x + 1").unwrap();
        for (p, k) in [(2u64, 6u32), (3, 4), (5, 3)] {
            let c = ctx(p, k);
            for y in 0..10 {
                let sym = derivative_at(&f, &c.int(y)).unwrap();
                let num = derivative_at_quotient(&f, &c.int(y)).unwrap();
                assert_eq!(sym, num, "p={p} y={y}");
            }
        }
    }

    #[test]
    fn derivative_rejects_bitwise() {
        let f = parse("xor(x, 3)").unwrap();
        let c = ctx(2, 4);
        assert!(matches!(
            derivative_at(&f, &c.int(1)),
            Err(Error::NotSeriesClass { .. })
        ));
    }

    #[test]
    fn derivative_of_scaled_series() {
        // (x^3 - x)^2 / 3 is compatible at p = 3 (the inner value is
        // divisible by 9 everywhere); its derivative 2(x^3-x)(3x^2-1)/3 is
        // 0 at x = 1 and 132/3 = 44 at x = 2.
        let f = parse("scaled(n=1, f=x^6 - 2*x^4 + x^2)").unwrap();
        let c = ctx(3, 2);
        assert_eq!(derivative_at(&f, &c.int(1)).unwrap(), c.int(0));
        assert_eq!(derivative_at(&f, &c.int(2)).unwrap(), c.int(44 % 9));
    }

    #[test]
    fn compatibility_examples() {
        let square = parse("x^2").unwrap();
        assert!(compatibility_check(&square, 3, 3, LIMIT).unwrap().is_holds());

        let bitwise = parse("not(x)+x").unwrap();
        assert!(compatibility_check(&bitwise, 2, 4, LIMIT).unwrap().is_holds());

        // (x^2 - x)/2 is integer-valued but does not preserve congruences:
        // the enumeration finds a counterexample, e.g. C(0,2) = 0 and
        // C(2,2) = 1 differ mod 2.
        let half = parse("scaled(n=1, f=bseries(0, 0, 1))").unwrap();
        let verdict = compatibility_check(&half, 2, 4, LIMIT).unwrap();
        assert_eq!(verdict.status, VerdictStatus::Fails);
        let witness = verdict.witness.unwrap();
        assert_eq!(witness["level"], 1);
    }
}
