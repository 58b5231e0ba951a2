//! Exact arithmetic on p-adic integers truncated to a working precision.
//!
//! A [`PadicInt`] is a residue modulo p^K together with its [`PadicContext`]
//! (the prime p and the precision K). Every operation stays at the stated
//! precision; nothing silently extends it. The valuation of the zero residue
//! is reported as K, meaning "at least K".

use std::fmt;
use std::sync::Arc;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

#[derive(Debug, PartialEq, Eq)]
struct CtxInner {
    p: u64,
    precision: u32,
    modulus: BigUint,
}

/// A prime p together with a working precision K (number of base-p digits).
#[derive(Clone, Debug)]
pub struct PadicContext {
    inner: Arc<CtxInner>,
}

impl PartialEq for PadicContext {
    fn eq(&self, other: &Self) -> bool {
        self.inner.p == other.inner.p && self.inner.precision == other.inner.precision
    }
}

impl Eq for PadicContext {}

impl PadicContext {
    /// Builds a context, verifying that `p` is prime and `precision >= 1`.
    pub fn new(p: u64, precision: u32) -> Result<Self> {
        if !is_prime_u64(p) {
            return Err(Error::NotPrime(p));
        }
        if precision == 0 {
            return Err(Error::Precision {
                requested: 0,
                available: 0,
            });
        }
        let modulus = BigUint::from(p).pow(precision);
        Ok(Self {
            inner: Arc::new(CtxInner {
                p,
                precision,
                modulus,
            }),
        })
    }

    pub fn p(&self) -> u64 {
        self.inner.p
    }

    pub fn precision(&self) -> u32 {
        self.inner.precision
    }

    /// p^K, the modulus of the residue ring this context models.
    pub fn modulus(&self) -> &BigUint {
        &self.inner.modulus
    }

    /// Same prime at a different precision.
    pub fn with_precision(&self, precision: u32) -> Result<Self> {
        if precision == 0 {
            return Err(Error::Precision {
                requested: 0,
                available: self.precision(),
            });
        }
        Ok(Self {
            inner: Arc::new(CtxInner {
                p: self.p(),
                precision,
                modulus: BigUint::from(self.p()).pow(precision),
            }),
        })
    }

    /// Reduces an arbitrary integer into `[0, p^K)`.
    pub fn int(&self, value: impl Into<BigInt>) -> PadicInt {
        let value: BigInt = value.into();
        let modulus = BigInt::from(self.modulus().clone());
        let mut r = value % &modulus;
        if r.is_negative() {
            r += &modulus;
        }
        PadicInt {
            ctx: self.clone(),
            residue: r.to_biguint().expect("non-negative after reduction"),
        }
    }

    /// Wraps a residue already known to lie in `[0, p^K)`.
    pub fn int_from_residue(&self, residue: BigUint) -> PadicInt {
        debug_assert!(&residue < self.modulus());
        PadicInt {
            ctx: self.clone(),
            residue: residue % self.modulus(),
        }
    }

    pub fn zero(&self) -> PadicInt {
        self.int_from_residue(BigUint::zero())
    }

    pub fn one(&self) -> PadicInt {
        self.int(1)
    }
}

impl fmt::Display for PadicContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Z/{}^{}", self.p(), self.precision())
    }
}

/// A p-adic integer known to precision K: a residue in `[0, p^K)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PadicInt {
    ctx: PadicContext,
    residue: BigUint,
}

impl PadicInt {
    pub fn context(&self) -> &PadicContext {
        &self.ctx
    }

    pub fn residue(&self) -> &BigUint {
        &self.residue
    }

    pub fn is_zero(&self) -> bool {
        self.residue.is_zero()
    }

    /// The residue modulo p^j for `1 <= j <= K`.
    pub fn residue_at(&self, j: u32) -> Result<BigUint> {
        self.check_level(j)?;
        Ok(&self.residue % BigUint::from(self.ctx.p()).pow(j))
    }

    /// Reduction to a lower precision `1 <= j <= K`.
    pub fn reduce(&self, j: u32) -> Result<PadicInt> {
        let residue = self.residue_at(j)?;
        Ok(self.ctx.with_precision(j)?.int_from_residue(residue))
    }

    fn check_level(&self, j: u32) -> Result<()> {
        if j == 0 || j > self.ctx.precision() {
            return Err(Error::Precision {
                requested: j,
                available: self.ctx.precision(),
            });
        }
        Ok(())
    }

    /// The K base-p digits, least significant first.
    pub fn digits(&self) -> Vec<u64> {
        let p = BigUint::from(self.ctx.p());
        let mut digits = Vec::with_capacity(self.ctx.precision() as usize);
        let mut rest = self.residue.clone();
        for _ in 0..self.ctx.precision() {
            let (q, r) = rest.div_rem(&p);
            digits.push(r.to_u64().expect("digit fits u64"));
            rest = q;
        }
        digits
    }

    /// Largest v <= K with p^v dividing the residue; K for the zero residue
    /// (finite precision cannot see past p^K).
    pub fn valuation(&self) -> u32 {
        valuation_in(&self.residue, self.ctx.p(), self.ctx.precision())
    }

    fn check_ctx(&self, other: &PadicInt) -> Result<()> {
        if self.ctx != other.ctx {
            return Err(Error::ContextMismatch {
                p_left: self.ctx.p(),
                prec_left: self.ctx.precision(),
                p_right: other.ctx.p(),
                prec_right: other.ctx.precision(),
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &PadicInt) -> Result<PadicInt> {
        self.check_ctx(other)?;
        let sum = (&self.residue + &other.residue) % self.ctx.modulus();
        Ok(self.ctx.int_from_residue(sum))
    }

    pub fn sub(&self, other: &PadicInt) -> Result<PadicInt> {
        self.check_ctx(other)?;
        let diff = (self.ctx.modulus() + &self.residue - &other.residue) % self.ctx.modulus();
        Ok(self.ctx.int_from_residue(diff))
    }

    pub fn mul(&self, other: &PadicInt) -> Result<PadicInt> {
        self.check_ctx(other)?;
        let prod = (&self.residue * &other.residue) % self.ctx.modulus();
        Ok(self.ctx.int_from_residue(prod))
    }

    pub fn pow(&self, exponent: u64) -> PadicInt {
        let result = self.residue.modpow(&BigUint::from(exponent), self.ctx.modulus());
        self.ctx.int_from_residue(result)
    }

    /// Multiplicative inverse of a unit (valuation 0) modulo p^K.
    pub fn inverse_unit(&self) -> Result<PadicInt> {
        let v = self.valuation();
        if v != 0 {
            return Err(Error::NotAUnit { valuation: v });
        }
        let inv = invert_unit(&self.residue, self.ctx.modulus())
            .expect("valuation 0 implies invertibility mod p^K");
        Ok(self.ctx.int_from_residue(inv))
    }

    /// Exact division by p^t, landing at precision K - t.
    pub fn exact_div_p(&self, t: u32) -> Result<PadicInt> {
        if t >= self.ctx.precision() {
            return Err(Error::Precision {
                requested: t,
                available: self.ctx.precision(),
            });
        }
        if t == 0 {
            return Ok(self.clone());
        }
        let v = self.valuation();
        if v < t {
            return Err(Error::InexactDivision {
                valuation: v,
                needed: t,
            });
        }
        let quotient = &self.residue / BigUint::from(self.ctx.p()).pow(t);
        let target = self.ctx.with_precision(self.ctx.precision() - t)?;
        Ok(target.int_from_residue(quotient % target.modulus()))
    }
}

impl fmt::Display for PadicInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} (mod {}^{})",
            self.residue,
            self.ctx.p(),
            self.ctx.precision()
        )
    }
}

pub(crate) fn valuation_in(residue: &BigUint, p: u64, precision: u32) -> u32 {
    if residue.is_zero() {
        return precision;
    }
    let p = BigUint::from(p);
    let mut v = 0;
    let mut rest = residue.clone();
    loop {
        let (q, r) = rest.div_rem(&p);
        if !r.is_zero() {
            return v;
        }
        v += 1;
        if v == precision {
            return v;
        }
        rest = q;
    }
}

/// Inverse of `a` modulo `m` when gcd(a, m) = 1.
pub(crate) fn invert_unit(a: &BigUint, m: &BigUint) -> Option<BigUint> {
    let a = BigInt::from(a.clone());
    let m_signed = BigInt::from(m.clone());
    let ext = a.extended_gcd(&m_signed);
    if !ext.gcd.is_one() {
        return None;
    }
    let mut x = ext.x % &m_signed;
    if x.is_negative() {
        x += &m_signed;
    }
    x.to_biguint()
}

/// v_p(i!) by Legendre's formula, the sum of floor(i / p^t) over t >= 1.
pub fn val_factorial(i: u64, p: u64) -> u64 {
    let mut total = 0;
    let mut q = i / p;
    while q > 0 {
        total += q;
        q /= p;
    }
    total
}

/// Smallest index i with v_p(i!) >= precision. Every falling-factorial term
/// of index >= i vanishes modulo p^precision, so series evaluation may stop
/// there.
pub fn truncation_index(p: u64, precision: u32) -> u64 {
    let target = precision as u64;
    let mut i = 0;
    while val_factorial(i, p) < target {
        i += 1;
    }
    i
}

/// p^k as a u64 state count, rejected when it exceeds `limit`.
pub(crate) fn checked_states(p: u64, k: u32, limit: u64) -> Result<u64> {
    let mut acc: u128 = 1;
    for _ in 0..k {
        acc = acc.saturating_mul(p as u128);
        if acc > limit as u128 {
            return Err(Error::ResourceLimit {
                needed: acc.min(u64::MAX as u128) as u64,
                limit,
            });
        }
    }
    Ok(acc as u64)
}

/// Deterministic Miller-Rabin, valid for the full u64 range.
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &q in &[2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == q {
            return true;
        }
        if n % q == 0 {
            return false;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for &a in &[2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = mod_pow_u64(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 0..s - 1 {
            x = mul_mod_u64(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

pub(crate) fn mul_mod_u64(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub(crate) fn mod_pow_u64(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod_u64(acc, base, m);
        }
        base = mul_mod_u64(base, base, m);
        exp >>= 1;
    }
    acc
}
