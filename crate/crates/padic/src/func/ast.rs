//! AST for compatible functions Z_p^n -> Z_p^m.
//!
//! Every constructible spec is 1-Lipschitz by construction, with one
//! exception: [`FunctionSpec::ScaledSeries`] divides by a power of p and the
//! caller asserts compatibility of the result (divisibility of the inner
//! values is still checked at every evaluation).

use std::fmt;

/// Expression tree over variables x1..xn, integer constants, ring
/// arithmetic, and (for p = 2 only) bitwise operations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expr {
    /// 1-indexed variable; `Var(1)` is the univariate `x`.
    Var(u32),
    Const(i64),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Xor(Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
}

impl Expr {
    pub fn max_var(&self) -> u32 {
        match self {
            Expr::Var(i) => *i,
            Expr::Const(_) => 0,
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => a.max_var().max(b.max_var()),
            Expr::And(a, b) | Expr::Or(a, b) | Expr::Xor(a, b) => a.max_var().max(b.max_var()),
            Expr::Pow(a, _) | Expr::Not(a) => a.max_var(),
        }
    }

    pub fn uses_bitops(&self) -> bool {
        match self {
            Expr::Var(_) | Expr::Const(_) => false,
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => {
                a.uses_bitops() || b.uses_bitops()
            }
            Expr::And(..) | Expr::Or(..) | Expr::Xor(..) | Expr::Not(_) => true,
            Expr::Pow(a, _) => a.uses_bitops(),
        }
    }

    /// Dense coefficient vector when this is a bitop-free polynomial in x1.
    /// Returns None on other variables, bitops, i64 overflow, or degree
    /// above an expansion cap.
    pub fn as_poly(&self) -> Option<Vec<i64>> {
        const DEGREE_CAP: usize = 1024;
        fn trim(mut v: Vec<i64>) -> Vec<i64> {
            while v.len() > 1 && v.last() == Some(&0) {
                v.pop();
            }
            v
        }
        fn mul(a: &[i64], b: &[i64]) -> Option<Vec<i64>> {
            if a.len() + b.len() > DEGREE_CAP + 2 {
                return None;
            }
            let mut out = vec![0i64; a.len() + b.len() - 1];
            for (i, &x) in a.iter().enumerate() {
                for (j, &y) in b.iter().enumerate() {
                    out[i + j] = out[i + j].checked_add(x.checked_mul(y)?)?;
                }
            }
            Some(out)
        }
        let coeffs = match self {
            Expr::Var(1) => vec![0, 1],
            Expr::Var(_) => return None,
            Expr::Const(c) => vec![*c],
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                let a = a.as_poly()?;
                let b = b.as_poly()?;
                let sub = matches!(self, Expr::Sub(..));
                let mut out = vec![0i64; a.len().max(b.len())];
                for (i, slot) in out.iter_mut().enumerate() {
                    let x = a.get(i).copied().unwrap_or(0);
                    let y = b.get(i).copied().unwrap_or(0);
                    *slot = if sub {
                        x.checked_sub(y)?
                    } else {
                        x.checked_add(y)?
                    };
                }
                out
            }
            Expr::Mul(a, b) => mul(&a.as_poly()?, &b.as_poly()?)?,
            Expr::Pow(a, e) => {
                let base = a.as_poly()?;
                let mut out = vec![1i64];
                for _ in 0..*e {
                    out = mul(&out, &base)?;
                }
                out
            }
            Expr::And(..) | Expr::Or(..) | Expr::Xor(..) | Expr::Not(_) => return None,
        };
        Some(trim(coeffs))
    }
}

/// A compatible function given as a structured description.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FunctionSpec {
    /// Polynomial over Z_p, coefficients low degree first, reduced at use.
    Poly(Vec<i64>),
    /// Falling-factorial series: f(x) = sum of b_i * x(x-1)...(x-i+1).
    BSeries(Vec<i64>),
    /// f = p^-shift * inner. The caller asserts the result is compatible;
    /// divisibility of the inner values by p^shift is checked per evaluation.
    ScaledSeries {
        shift: u32,
        inner: Box<FunctionSpec>,
    },
    /// x^ell + p^(r+1) * u(x).
    PerturbedMonomial {
        ell: u64,
        r: u32,
        u: Box<FunctionSpec>,
    },
    /// 1 + x + p * (v(x+1) - v(x)); ergodic on Z_p for any compatible v.
    ClosedFormErgodic(Box<FunctionSpec>),
    /// p = 2 only: 1 + x + sum of c_i * 2^(floor(log2(i+1)) + 1) * C(x, i),
    /// with the list starting at i = 1. Ergodic on Z_2 by construction.
    ErgodicMahler2(Vec<i64>),
    /// General expression; may use bitwise operations (p = 2 only) and
    /// variables x1..xn.
    Expr(Expr),
    /// Compose(f, g) is x -> f(g(x)).
    Compose(Box<FunctionSpec>, Box<FunctionSpec>),
    Iterate(Box<FunctionSpec>, u64),
    /// Multivariate output [f1, ..., fm].
    Tuple(Vec<FunctionSpec>),
}

impl FunctionSpec {
    /// Number of input variables (max referenced index, at least 1).
    pub fn arity(&self) -> u32 {
        match self {
            FunctionSpec::Poly(_) | FunctionSpec::BSeries(_) | FunctionSpec::ErgodicMahler2(_) => {
                1
            }
            FunctionSpec::ScaledSeries { inner, .. } => inner.arity(),
            FunctionSpec::PerturbedMonomial { u, .. } => u.arity(),
            FunctionSpec::ClosedFormErgodic(v) => v.arity(),
            FunctionSpec::Expr(e) => e.max_var().max(1),
            FunctionSpec::Compose(_, g) => g.arity(),
            FunctionSpec::Iterate(f, _) => f.arity(),
            FunctionSpec::Tuple(parts) => parts.iter().map(|f| f.arity()).max().unwrap_or(1),
        }
    }

    /// Number of output components.
    pub fn co_arity(&self) -> u32 {
        match self {
            FunctionSpec::Tuple(parts) => parts.len() as u32,
            FunctionSpec::Compose(f, _) => f.co_arity(),
            FunctionSpec::Iterate(f, _) => f.co_arity(),
            _ => 1,
        }
    }

    pub fn uses_bitops(&self) -> bool {
        match self {
            FunctionSpec::Poly(_) | FunctionSpec::BSeries(_) | FunctionSpec::ErgodicMahler2(_) => {
                false
            }
            FunctionSpec::ScaledSeries { inner, .. } => inner.uses_bitops(),
            FunctionSpec::PerturbedMonomial { u, .. } => u.uses_bitops(),
            FunctionSpec::ClosedFormErgodic(v) => v.uses_bitops(),
            FunctionSpec::Expr(e) => e.uses_bitops(),
            FunctionSpec::Compose(f, g) => f.uses_bitops() || g.uses_bitops(),
            FunctionSpec::Iterate(f, _) => f.uses_bitops(),
            FunctionSpec::Tuple(parts) => parts.iter().any(|f| f.uses_bitops()),
        }
    }

    /// Every constructor except `ScaledSeries` yields a compatible map by
    /// construction; scaled series rely on a caller assertion that the
    /// division by p^shift stays 1-Lipschitz.
    pub fn compatible_by_construction(&self) -> bool {
        match self {
            FunctionSpec::Poly(_)
            | FunctionSpec::BSeries(_)
            | FunctionSpec::ErgodicMahler2(_)
            | FunctionSpec::Expr(_) => true,
            FunctionSpec::ScaledSeries { .. } => false,
            FunctionSpec::PerturbedMonomial { u, .. } => u.compatible_by_construction(),
            FunctionSpec::ClosedFormErgodic(v) => v.compatible_by_construction(),
            FunctionSpec::Compose(f, g) => {
                f.compatible_by_construction() && g.compatible_by_construction()
            }
            FunctionSpec::Iterate(f, _) => f.compatible_by_construction(),
            FunctionSpec::Tuple(parts) => parts.iter().all(|f| f.compatible_by_construction()),
        }
    }

    /// Whether this spec denotes a falling-factorial series function with
    /// integral coefficients (polynomials, b-series, and their combinators).
    /// These are the functions whose ergodicity on Z_p is decided by a
    /// single critical level, and whose first-order Taylor quotient has the
    /// doubled-precision error bound used by `derivative_at`.
    ///
    /// `ErgodicMahler2` is accepted: its finite coefficient lists denote
    /// maps that are ergodic by construction, so the critical-level test is
    /// decisive for them too (it simply confirms).
    pub fn is_series_class(&self) -> bool {
        match self {
            FunctionSpec::Poly(_) | FunctionSpec::BSeries(_) | FunctionSpec::ErgodicMahler2(_) => {
                true
            }
            FunctionSpec::ScaledSeries { .. } => false,
            FunctionSpec::PerturbedMonomial { u, .. } => u.is_series_class(),
            FunctionSpec::ClosedFormErgodic(v) => v.is_series_class(),
            FunctionSpec::Expr(e) => !e.uses_bitops() && e.max_var() <= 1,
            FunctionSpec::Compose(f, g) => f.is_series_class() && g.is_series_class(),
            FunctionSpec::Iterate(f, _) => f.is_series_class(),
            FunctionSpec::Tuple(_) => false,
        }
    }

    /// The scaling exponent n such that p^n * f is an integral
    /// falling-factorial series. Polynomials and b-series need n = 0; a
    /// `ScaledSeries` over them needs its declared shift; a Mahler-pattern
    /// spec needs at most max(v_2(i!) - floor(log2(i+1)) - 1) over its
    /// nonzero coefficients. None when no bound is known (bitwise
    /// expressions, multivariate specs, nested scaling).
    pub fn series_shift(&self) -> Option<u32> {
        match self {
            FunctionSpec::Poly(_) | FunctionSpec::BSeries(_) => Some(0),
            FunctionSpec::ErgodicMahler2(c) => {
                let mut n = 0u64;
                for (idx, coeff) in c.iter().enumerate() {
                    if *coeff == 0 {
                        continue;
                    }
                    let i = idx as u64 + 1;
                    let exponent = (i + 1).ilog2() as u64 + 1;
                    n = n.max(crate::context::val_factorial(i, 2).saturating_sub(exponent));
                }
                u32::try_from(n).ok()
            }
            FunctionSpec::ScaledSeries { shift, inner } => {
                (inner.series_shift()? == 0).then_some(*shift)
            }
            FunctionSpec::PerturbedMonomial { u, .. } => (u.series_shift()? == 0).then_some(0),
            FunctionSpec::ClosedFormErgodic(v) => (v.series_shift()? == 0).then_some(0),
            FunctionSpec::Expr(e) => (!e.uses_bitops() && e.max_var() <= 1).then_some(0),
            FunctionSpec::Compose(f, g) => {
                (f.series_shift()? == 0 && g.series_shift()? == 0).then_some(0)
            }
            FunctionSpec::Iterate(f, _) => (f.series_shift()? == 0).then_some(0),
            FunctionSpec::Tuple(_) => None,
        }
    }

    /// Canonical polynomial form, when one exists.
    pub fn as_poly(&self) -> Option<Vec<i64>> {
        match self {
            FunctionSpec::Poly(c) => Some(c.clone()),
            FunctionSpec::Expr(e) => e.as_poly(),
            _ => None,
        }
    }
}

fn fmt_intlist(f: &mut fmt::Formatter<'_>, items: &[i64]) -> fmt::Result {
    for (i, c) in items.iter().enumerate() {
        if i > 0 {
            write!(f, ", ")?;
        }
        write!(f, "{c}")?;
    }
    Ok(())
}

fn poly_to_expr(coeffs: &[i64]) -> Expr {
    // Highest degree first, matching the canonical "x^3 + 5*x + 1" layout.
    // Negative coefficients become subtracted terms, except in the lead.
    fn term(c: i64, degree: usize) -> Expr {
        let var_part = match degree {
            0 => None,
            1 => Some(Expr::Var(1)),
            _ => Some(Expr::Pow(Box::new(Expr::Var(1)), degree as u32)),
        };
        match (c, var_part) {
            (c, None) => Expr::Const(c),
            (1, Some(v)) => v,
            (c, Some(v)) => Expr::Mul(Box::new(Expr::Const(c)), Box::new(v)),
        }
    }
    let mut acc: Option<Expr> = None;
    for (i, &c) in coeffs.iter().enumerate().rev() {
        if c == 0 {
            continue;
        }
        acc = Some(match acc {
            None => term(c, i),
            Some(lead) if c < 0 && c != i64::MIN => {
                Expr::Sub(Box::new(lead), Box::new(term(-c, i)))
            }
            Some(lead) => Expr::Add(Box::new(lead), Box::new(term(c, i))),
        });
    }
    acc.unwrap_or(Expr::Const(0))
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Precedence levels: additive 0, multiplicative 1, power base 2.
        fn go(e: &Expr, f: &mut fmt::Formatter<'_>, level: u8) -> fmt::Result {
            let prec = match e {
                Expr::Add(..) | Expr::Sub(..) => 0,
                Expr::Mul(..) => 1,
                _ => 2,
            };
            let parens = prec < level;
            if parens {
                write!(f, "(")?;
            }
            match e {
                Expr::Var(1) => write!(f, "x")?,
                Expr::Var(i) => write!(f, "x{i}")?,
                Expr::Const(c) => write!(f, "{c}")?,
                Expr::Add(a, b) => {
                    go(a, f, 0)?;
                    write!(f, " + ")?;
                    go(b, f, 1)?;
                }
                Expr::Sub(a, b) => {
                    go(a, f, 0)?;
                    write!(f, " - ")?;
                    go(b, f, 1)?;
                }
                Expr::Mul(a, b) => {
                    go(a, f, 1)?;
                    write!(f, "*")?;
                    go(b, f, 2)?;
                }
                Expr::Pow(a, e) => {
                    go(a, f, 2)?;
                    write!(f, "^{e}")?;
                }
                Expr::And(a, b) | Expr::Or(a, b) | Expr::Xor(a, b) => {
                    let name = match e {
                        Expr::And(..) => "and",
                        Expr::Or(..) => "or",
                        _ => "xor",
                    };
                    write!(f, "{name}(")?;
                    go(a, f, 0)?;
                    write!(f, ", ")?;
                    go(b, f, 0)?;
                    write!(f, ")")?;
                }
                Expr::Not(a) => {
                    write!(f, "not(")?;
                    go(a, f, 0)?;
                    write!(f, ")")?;
                }
            }
            if parens {
                write!(f, ")")?;
            }
            Ok(())
        }
        go(self, f, 0)
    }
}

impl fmt::Display for FunctionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FunctionSpec::Poly(coeffs) => write!(f, "{}", poly_to_expr(coeffs)),
            FunctionSpec::BSeries(b) => {
                write!(f, "bseries(")?;
                fmt_intlist(f, b)?;
                write!(f, ")")
            }
            FunctionSpec::ScaledSeries { shift, inner } => {
                write!(f, "scaled(n={shift}, f={inner})")
            }
            FunctionSpec::PerturbedMonomial { ell, r, u } => {
                write!(f, "perturb(ell={ell}, r={r}, u={u})")
            }
            FunctionSpec::ClosedFormErgodic(v) => write!(f, "closed_ergodic({v})"),
            FunctionSpec::ErgodicMahler2(c) => {
                write!(f, "mahler2(")?;
                fmt_intlist(f, c)?;
                write!(f, ")")
            }
            FunctionSpec::Expr(e) => write!(f, "{e}"),
            FunctionSpec::Compose(a, b) => write!(f, "compose({a}, {b})"),
            FunctionSpec::Iterate(a, n) => write!(f, "iterate({a}, {n})"),
            FunctionSpec::Tuple(parts) => {
                write!(f, "[")?;
                for (i, part) in parts.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{part}")?;
                }
                write!(f, "]")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poly_prints_canonically() {
        assert_eq!(FunctionSpec::Poly(vec![1, 5, 0, 1]).to_string(), "x^3 + 5*x + 1");
        assert_eq!(FunctionSpec::Poly(vec![3, 5]).to_string(), "5*x + 3");
        assert_eq!(FunctionSpec::Poly(vec![0]).to_string(), "0");
        assert_eq!(FunctionSpec::Poly(vec![0, 0, 1]).to_string(), "x^2");
        assert_eq!(FunctionSpec::Poly(vec![0, -2, 1]).to_string(), "x^2 - 2*x");
    }

    #[test]
    fn expr_as_poly_expands() {
        // (x+1)^2 = x^2 + 2x + 1
        let e = Expr::Pow(
            Box::new(Expr::Add(Box::new(Expr::Var(1)), Box::new(Expr::Const(1)))),
            2,
        );
        assert_eq!(e.as_poly(), Some(vec![1, 2, 1]));
    }

    #[test]
    fn bitops_block_poly_form() {
        let e = Expr::Not(Box::new(Expr::Var(1)));
        assert_eq!(e.as_poly(), None);
        assert!(e.uses_bitops());
    }

    #[test]
    fn arity_and_co_arity() {
        let two_var = FunctionSpec::Expr(Expr::Add(
            Box::new(Expr::Var(1)),
            Box::new(Expr::Var(2)),
        ));
        assert_eq!(two_var.arity(), 2);
        assert_eq!(two_var.co_arity(), 1);

        let tuple = FunctionSpec::Tuple(vec![two_var.clone(), FunctionSpec::Poly(vec![0, 1])]);
        assert_eq!(tuple.arity(), 2);
        assert_eq!(tuple.co_arity(), 2);
    }

    #[test]
    fn series_class_membership() {
        assert!(FunctionSpec::Poly(vec![1, 2]).is_series_class());
        assert!(FunctionSpec::BSeries(vec![0, 1, 2]).is_series_class());
        assert!(!FunctionSpec::Expr(Expr::Not(Box::new(Expr::Var(1)))).is_series_class());
        let scaled = FunctionSpec::ScaledSeries {
            shift: 1,
            inner: Box::new(FunctionSpec::BSeries(vec![0, 0, 1])),
        };
        assert!(!scaled.is_series_class());
        assert_eq!(scaled.series_shift(), Some(1));
    }
}
