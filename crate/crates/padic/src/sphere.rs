//! Dynamics on p-adic spheres: residue models, invariance, single-cycle
//! checks, and the analytic ergodicity criterion driven by the fixed-point
//! congruences and the multiplicative order of the derivative modulo p^2.
//!
//! The sphere of radius p^-r around y decomposes into p - 1 balls
//! y + p^r s + p^(r+1) Z_p, s = 1..p-1; a single ball when p = 2. Its
//! residue model at level k >= r+1 has (p-1) * p^(k-r-1) points, indexed
//! here by the (s, S) coordinates.

use std::time::Instant;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive};

use crate::context::{checked_states, mul_mod_u64, PadicContext};
use crate::error::{Error, Result};
use crate::func::{derivative_at, evaluate, eval_u64_scalar, FunctionSpec, SmallRing};
use crate::verdict::{CriterionTrace, SphereVerdict, Thresholds, Verdict, VerdictStatus};

/// The sphere of radius p^-r around a center, r >= 1.
#[derive(Clone, Debug)]
pub struct Sphere {
    p: u64,
    center: BigInt,
    radius_exp: u32,
}

impl Sphere {
    pub fn new(p: u64, center: impl Into<BigInt>, radius_exp: u32) -> Result<Self> {
        if radius_exp == 0 {
            return Err(Error::LevelTooSmall {
                k: radius_exp,
                min: 1,
            });
        }
        Ok(Sphere {
            p,
            center: center.into(),
            radius_exp,
        })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn radius_exp(&self) -> u32 {
        self.radius_exp
    }

    pub fn center(&self) -> &BigInt {
        &self.center
    }

    fn center_mod(&self, modulus: u64) -> u64 {
        let m = BigInt::from(modulus);
        let mut r = &self.center % &m;
        if r.is_negative() {
            r += &m;
        }
        r.to_u64().expect("reduced residue fits u64")
    }

    /// The sphere modulo p^k, k >= r+1: residues y + p^r s + p^(r+1) S in
    /// (s, S)-major order, s = 1..p-1, S = 0..p^(k-r-1).
    pub fn residues(&self, k: u32, max_states: u64) -> Result<Vec<u64>> {
        let r = self.radius_exp;
        if k < r + 1 {
            return Err(Error::LevelTooSmall { k, min: r + 1 });
        }
        let modulus = checked_states(self.p, k, u64::MAX)?;
        let ball = checked_states(self.p, k - r - 1, max_states)?;
        let count = (self.p - 1)
            .checked_mul(ball)
            .filter(|c| *c <= max_states)
            .ok_or(Error::ResourceLimit {
                needed: u64::MAX,
                limit: max_states,
            })?;
        let y = self.center_mod(modulus);
        let p_r = checked_states(self.p, r, u64::MAX)?;
        let p_r1 = p_r * self.p;
        let mut out = Vec::with_capacity(count as usize);
        for s in 1..self.p {
            for big_s in 0..ball {
                let offset = (mul_mod_u64(p_r, s, modulus) + mul_mod_u64(p_r1, big_s, modulus))
                    % modulus;
                out.push((y + offset) % modulus);
            }
        }
        Ok(out)
    }

    /// Membership in the sphere modulo p^k: the difference from the center
    /// has valuation exactly r.
    fn contains_mod(&self, z: u64, modulus: u64) -> bool {
        let y = self.center_mod(modulus);
        let mut d = (z + modulus - y) % modulus;
        if d == 0 {
            return false; // valuation at least k > r
        }
        let mut v = 0;
        while d % self.p == 0 {
            d /= self.p;
            v += 1;
        }
        v == self.radius_exp
    }
}

/// Whether f maps the sphere's residue model at level k into itself. The
/// witness also reports the center congruence f(y) = y mod p^r, which
/// invariance forces.
pub fn is_sphere_invariant(
    f: &FunctionSpec,
    sphere: &Sphere,
    k: u32,
    max_states: u64,
) -> Result<Verdict> {
    let started = Instant::now();
    let p = sphere.p();
    let residues = sphere.residues(k, max_states)?;
    let ring = SmallRing::new(p, k)?;
    let modulus = checked_states(p, k, u64::MAX)?;

    let y = sphere.center_mod(modulus);
    let fy = eval_u64_scalar(f, &ring, y)?;
    let p_r = checked_states(p, sphere.radius_exp(), u64::MAX)?;
    let center_congruence = (fy + modulus - y) % modulus % p_r == 0;

    for &z in &residues {
        let image = eval_u64_scalar(f, &ring, z)?;
        if !sphere.contains_mod(image, modulus) {
            return Ok(Verdict::finish(
                "sphere_invariant",
                p,
                vec![k],
                VerdictStatus::Fails,
                Some(serde_json::json!({
                    "residue": z,
                    "image": image,
                    "center_congruence": center_congruence,
                })),
                started,
            ));
        }
    }
    Ok(Verdict::finish(
        "sphere_invariant",
        p,
        vec![k],
        VerdictStatus::Holds,
        Some(serde_json::json!({ "center_congruence": center_congruence })),
        started,
    ))
}

/// Whether f restricted to the sphere's residue model at level k is a
/// permutation with a single cycle of full length (p-1) * p^(k-r-1).
/// Requires invariance at level k.
pub fn sphere_single_cycle(
    f: &FunctionSpec,
    sphere: &Sphere,
    k: u32,
    max_states: u64,
) -> Result<Verdict> {
    let started = Instant::now();
    let invariant = is_sphere_invariant(f, sphere, k, max_states)?;
    if !invariant.is_holds() {
        let residue = invariant
            .witness
            .as_ref()
            .and_then(|w| w["residue"].as_u64())
            .unwrap_or(0);
        return Err(Error::SphereNotInvariant { level: k, residue });
    }
    let p = sphere.p();
    let residues = sphere.residues(k, max_states)?;
    let size = residues.len() as u64;
    let ring = SmallRing::new(p, k)?;
    let modulus = checked_states(p, k, u64::MAX)?;

    // Index a sphere residue by its (s, S) coordinates.
    let y = sphere.center_mod(modulus);
    let p_r = checked_states(p, sphere.radius_exp(), u64::MAX)?;
    let ball = size / (p - 1);
    let position = |z: u64| -> u64 {
        let d = (z + modulus - y) % modulus / p_r;
        let s = d % p;
        let big_s = d / p;
        (s - 1) * ball + big_s
    };

    // Permutation check on the restriction.
    let mut seen = vec![false; size as usize];
    for &z in &residues {
        let idx = position(eval_u64_scalar(f, &ring, z)?);
        if seen[idx as usize] {
            return Ok(Verdict::finish(
                "sphere_single_cycle",
                p,
                vec![k],
                VerdictStatus::Fails,
                Some(serde_json::json!({ "not_injective_at": z })),
                started,
            ));
        }
        seen[idx as usize] = true;
    }

    // Orbit walk from the first residue.
    let start = residues[0];
    let mut cursor = start;
    let mut steps = 0u64;
    loop {
        cursor = eval_u64_scalar(f, &ring, cursor)?;
        steps += 1;
        if cursor == start || steps >= size {
            break;
        }
    }
    let holds = cursor == start && steps == size;
    let witness = (!holds).then(|| {
        serde_json::json!({
            "cycle_length": steps,
            "expected": size,
        })
    });
    Ok(Verdict::finish(
        "sphere_single_cycle",
        p,
        vec![k],
        if holds {
            VerdictStatus::Holds
        } else {
            VerdictStatus::Fails
        },
        witness,
        started,
    ))
}

/// Single-cycle behaviour at every level r+1..=k_max: the finite evidence
/// for ergodicity on the sphere.
pub fn sphere_ergodic_bruteforce(
    f: &FunctionSpec,
    sphere: &Sphere,
    k_max: u32,
    max_states: u64,
) -> Result<Verdict> {
    let started = Instant::now();
    let p = sphere.p();
    let first = sphere.radius_exp() + 1;
    if k_max < first {
        return Err(Error::LevelTooSmall {
            k: k_max,
            min: first,
        });
    }
    for k in first..=k_max {
        let invariant = is_sphere_invariant(f, sphere, k, max_states)?;
        if !invariant.is_holds() {
            return Ok(Verdict::finish(
                "sphere_ergodic_bruteforce",
                p,
                (first..=k).collect(),
                VerdictStatus::Fails,
                Some(serde_json::json!({ "failed_level": k, "invariant": false, "detail": invariant.witness })),
                started,
            ));
        }
        let single = sphere_single_cycle(f, sphere, k, max_states)?;
        if !single.is_holds() {
            return Ok(Verdict::finish(
                "sphere_ergodic_bruteforce",
                p,
                (first..=k).collect(),
                VerdictStatus::Fails,
                Some(serde_json::json!({ "failed_level": k, "invariant": true, "detail": single.witness })),
                started,
            ));
        }
    }
    Ok(Verdict::finish(
        "sphere_ergodic_bruteforce",
        p,
        (first..=k_max).collect(),
        VerdictStatus::Holds,
        None,
        started,
    ))
}

/// Least e >= 1 with g^e = 1 mod modulus; requires gcd(g, modulus) = 1 and
/// modulus >= 2.
pub fn multiplicative_order(g: u64, modulus: u64) -> Result<u64> {
    if modulus < 2 {
        return Err(Error::NotApplicable("modulus must be at least 2".into()));
    }
    let g = g % modulus;
    if gcd(g, modulus) != 1 {
        return Err(Error::NotAUnit { valuation: 0 });
    }
    let mut acc = g;
    let mut order = 1u64;
    while acc != 1 {
        acc = mul_mod_u64(acc, g, modulus);
        order += 1;
    }
    Ok(order)
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Whether g generates the group of units modulo p^2, i.e. has order
/// p(p-1).
pub fn is_primitive_mod_p2(g: u64, p: u64) -> Result<bool> {
    let modulus = p
        .checked_mul(p)
        .ok_or(Error::NotApplicable("p^2 overflows".into()))?;
    if g % p == 0 {
        return Ok(false);
    }
    Ok(multiplicative_order(g, modulus)? == p * (p - 1))
}

fn criterion_thresholds(p: u64, shift: u32) -> u32 {
    let base = if p > 3 { 1 } else { 2 };
    if shift > 0 {
        base.max(shift + 3)
    } else {
        base
    }
}

/// Analytic sphere-ergodicity criterion for series-class functions (and
/// scaled series with known shift).
///
/// For odd p: f(y) = y mod p^(r+1) and f'(y) primitive modulo p^2.
/// For p = 2: f(y) = y mod 2^(r+1), f(y) != y mod 2^(r+2), and
/// f'(y) = 1 mod 4.
///
/// Applicable for r >= 1 when p > 3 and r >= 2 when p <= 3 (for scaled
/// series additionally r >= shift + 3); below the threshold the caller
/// should fall back to the exhaustive check. At p = 3, r = 2 the verdict is
/// flagged advisory in the witness: that case sits outside the general
/// argument and is independently confirmed by enumeration in the test
/// suite.
pub fn sphere_ergodic_criterion(f: &FunctionSpec, sphere: &Sphere) -> Result<SphereVerdict> {
    let started = Instant::now();
    let p = sphere.p();
    let r = sphere.radius_exp();
    let shift = f.series_shift().ok_or_else(|| Error::NotSeriesClass {
        op: "sphere_ergodic_criterion",
        found: f.to_string(),
    })?;
    let r_min = criterion_thresholds(p, shift);
    if r < r_min {
        return Err(Error::NotApplicable(format!(
            "analytic sphere criterion needs r >= {r_min} (got r = {r})"
        )));
    }

    let ctx = PadicContext::new(p, r + 2)?;
    let y = ctx.int(sphere.center().clone());
    let fy = evaluate(f, &y)?;
    let deviation = fy.sub(&y)?;
    let dev_val = deviation.valuation();
    let center_congruence = dev_val > r;

    let fprime = derivative_at(f, &y)?;
    let fprime_p2 = fprime
        .residue_at(2.min(r + 2))
        .expect("precision r+2 >= 2")
        .to_u64()
        .expect("residue below p^2 fits u64");
    let p2 = p * p;
    let (order, derivative_ok) = if p == 2 {
        let order = if fprime_p2 % 2 == 1 {
            multiplicative_order(fprime_p2, 4)?
        } else {
            0
        };
        (order, fprime_p2 % 4 == 1)
    } else if fprime_p2 % p == 0 {
        (0, false)
    } else {
        let order = multiplicative_order(fprime_p2, p2)?;
        (order, order == p * (p - 1))
    };

    let strict_at_next = p != 2 || dev_val == r + 1;
    let holds = center_congruence && derivative_ok && strict_at_next;

    let advisory = p == 3 && r == 2;
    let witness = serde_json::json!({
        "center_congruence_r_plus_1": center_congruence,
        "strict_deviation_at_r_plus_1": if p == 2 { serde_json::json!(dev_val == r + 1) } else { serde_json::Value::Null },
        "derivative_condition": derivative_ok,
        "deviation_valuation": dev_val,
        "advisory": advisory,
    });
    let trace = CriterionTrace {
        f_at_y_mod: (
            r + 2,
            fy.residue()
                .to_u64()
                .unwrap_or(u64::MAX),
        ),
        fprime_mod_p2: fprime_p2,
        order,
        primitive: derivative_ok,
        thresholds: Thresholds { r_min },
    };
    Ok(SphereVerdict {
        verdict: Verdict::finish(
            "sphere_ergodic_criterion",
            p,
            vec![r + 1, r + 2],
            if holds {
                VerdictStatus::Holds
            } else {
                VerdictStatus::Fails
            },
            Some(witness),
            started,
        ),
        trace: Some(trace),
    })
}

/// The two-layer cycle conditions behind sphere ergodicity, checked
/// separately:
///
/// 1. f permutes the p-1 ball representatives y + p^r s cyclically at
///    level r+1 (vacuous single element when p = 2);
/// 2. the (p-1)-th iterate of f acts as a single p^t-cycle on each ball's
///    residues at level r+t+1.
///
/// The witness reports condition 2 per ball so the "some s iff all s"
/// equivalence can be observed rather than assumed.
pub fn sphere_decomposition_conditions(
    f: &FunctionSpec,
    sphere: &Sphere,
    t: u32,
    max_states: u64,
) -> Result<Verdict> {
    let started = Instant::now();
    if t == 0 {
        return Err(Error::LevelTooSmall { k: t, min: 1 });
    }
    let p = sphere.p();
    let r = sphere.radius_exp();
    let level = r + t + 1;
    let invariant = is_sphere_invariant(f, sphere, level, max_states)?;
    if !invariant.is_holds() {
        let residue = invariant
            .witness
            .as_ref()
            .and_then(|w| w["residue"].as_u64())
            .unwrap_or(0);
        return Err(Error::SphereNotInvariant { level, residue });
    }

    // Condition 1 at level r+1: s -> s' must be a single (p-1)-cycle on
    // {1..p-1}.
    let ring_r1 = SmallRing::new(p, r + 1)?;
    let modulus_r1 = checked_states(p, r + 1, u64::MAX)?;
    let y1 = sphere.center_mod(modulus_r1);
    let p_r = checked_states(p, r, u64::MAX)?;
    let mut s_map = vec![0u64; p as usize]; // index by s, entry s'
    let mut condition1 = true;
    for s in 1..p {
        let z = (y1 + mul_mod_u64(p_r, s, modulus_r1)) % modulus_r1;
        let image = eval_u64_scalar(f, &ring_r1, z)?;
        let d = (image + modulus_r1 - y1) % modulus_r1;
        if d % p_r != 0 || (d / p_r) % p == 0 || d / p_r >= p {
            condition1 = false;
            break;
        }
        s_map[s as usize] = d / p_r;
    }
    if condition1 && p > 2 {
        // walk the s-cycle from s = 1
        let mut cursor = 1u64;
        let mut steps = 0u64;
        loop {
            cursor = s_map[cursor as usize];
            steps += 1;
            if cursor == 1 || steps >= p {
                break;
            }
        }
        condition1 = cursor == 1 && steps == p - 1;
    }

    // Condition 2 at level r+t+1 for each s: f^(p-1) is a single
    // p^t-cycle on the ball y + p^r s + p^(r+1) Z.
    let ring = SmallRing::new(p, level)?;
    let modulus = checked_states(p, level, u64::MAX)?;
    let y = sphere.center_mod(modulus);
    let p_r_full = checked_states(p, r, u64::MAX)?;
    let p_r1_full = p_r_full * p;
    let ball = checked_states(p, t, max_states)?;
    let iterate = |z: u64| -> Result<u64> {
        let mut acc = z;
        for _ in 0..p - 1 {
            acc = eval_u64_scalar(f, &ring, acc)?;
        }
        Ok(acc)
    };
    let mut condition2 = Vec::with_capacity(p as usize - 1);
    for s in 1..p {
        let base = (y + mul_mod_u64(p_r_full, s, modulus)) % modulus;
        let start = base;
        let mut cursor = start;
        let mut steps = 0u64;
        let single = loop {
            cursor = iterate(cursor)?;
            // stay within the ball: difference from base divisible by p^(r+1)
            if (cursor + modulus - base) % modulus % p_r1_full != 0 {
                break false;
            }
            steps += 1;
            if cursor == start {
                break steps == ball;
            }
            if steps > ball {
                break false;
            }
        };
        condition2.push(single);
    }
    let all2 = condition2.iter().all(|b| *b);
    let any2 = condition2.iter().any(|b| *b);
    let holds = condition1 && all2;
    let witness = serde_json::json!({
        "condition1_representative_cycle": condition1,
        "condition2_per_ball": condition2,
        "condition2_some_all_agree": all2 == any2,
    });
    Ok(Verdict::finish(
        "sphere_decomposition_conditions",
        p,
        vec![r + 1, level],
        if holds {
            VerdictStatus::Holds
        } else {
            VerdictStatus::Fails
        },
        Some(witness),
        started,
    ))
}

/// Ergodicity on all sufficiently small spheres around a fixed point. For
/// odd p: f(y) = y at the working precision and f'(y) primitive modulo
/// p^2. For p = 2 no such function exists: the sphere conditions force
/// f(y) != y at radius-dependent depth, which a fixed center cannot
/// satisfy for every small radius.
pub fn all_small_spheres_verdict(f: &FunctionSpec, y: &crate::context::PadicInt) -> Result<Verdict> {
    let started = Instant::now();
    let p = y.context().p();
    if p == 2 {
        return Ok(Verdict::finish(
            "all_small_spheres",
            p,
            vec![],
            VerdictStatus::Fails,
            Some(serde_json::json!({
                "reason": "at p = 2 the sphere conditions require f(y) = y mod 2^(r+1) but f(y) != y mod 2^(r+2); no single map satisfies this for all r",
            })),
            started,
        ));
    }
    if y.context().precision() < 2 {
        return Err(Error::Precision {
            requested: 2,
            available: y.context().precision(),
        });
    }
    let fy = evaluate(f, y)?;
    let fixed = &fy == y;
    let fprime = derivative_at(f, y)?;
    let fprime_p2 = fprime
        .residue_at(2)?
        .to_u64()
        .expect("residue below p^2 fits u64");
    let primitive = if fprime_p2 % p == 0 {
        false
    } else {
        multiplicative_order(fprime_p2, p * p)? == p * (p - 1)
    };
    let holds = fixed && primitive;
    Ok(Verdict::finish(
        "all_small_spheres",
        p,
        vec![y.context().precision()],
        if holds {
            VerdictStatus::Holds
        } else {
            VerdictStatus::Fails
        },
        Some(serde_json::json!({
            "fixed_point_at_precision": fixed,
            "fprime_mod_p2": fprime_p2,
            "primitive": primitive,
        })),
        started,
    ))
}

/// Ergodicity of x -> x^ell + p^(r+1) u(x) on the sphere of radius p^-r
/// around 1, for r > 1: holds iff ell generates the units modulo p^2,
/// independent of the perturbation u.
pub fn perturbed_monomial_verdict(ell: u64, u: &FunctionSpec, r: u32, p: u64) -> Result<Verdict> {
    let started = Instant::now();
    if r <= 1 {
        return Err(Error::NotApplicable(
            "perturbed-monomial criterion needs r > 1".into(),
        ));
    }
    let _ = u; // the criterion does not depend on the perturbation
    let primitive = is_primitive_mod_p2(ell, p)?;
    let order = if ell % p == 0 {
        0
    } else {
        multiplicative_order(ell, p * p)?
    };
    Ok(Verdict::finish(
        "perturbed_monomial",
        p,
        vec![r + 1],
        if primitive {
            VerdictStatus::Holds
        } else {
            VerdictStatus::Fails
        },
        Some(serde_json::json!({
            "ell": ell,
            "order": order,
            "group_order": p * (p - 1),
        })),
        started,
    ))
}
