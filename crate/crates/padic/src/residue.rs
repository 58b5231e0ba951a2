//! Induced maps on (Z/p^k Z)^n and the decision procedures: bijectivity,
//! transitivity, balancedness, measure preservation, and ergodicity — by
//! exhaustive sweep and by the finite criteria, cross-validated.
//!
//! All-levels statements (measure preservation, ergodicity) are reported as
//! holds-with-levels-checked: the verdict lists the finite evidence. For
//! falling-factorial series functions a single critical level (p^3 when
//! p <= 3, p^2 otherwise) genuinely decides ergodicity on Z_p; that is the
//! fast route.

use std::time::Instant;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::context::{checked_states, invert_unit, valuation_in, PadicContext};
use crate::error::{Error, Result};
use crate::func::{eval_u64, evaluate, FunctionSpec, SmallRing};
use crate::verdict::{Verdict, VerdictStatus};

/// Default cap on materialized or streamed state spaces (entries).
pub const DEFAULT_STATE_LIMIT: u64 = 1 << 22;

/// Critical level whose transitivity decides ergodicity on Z_p for
/// falling-factorial series functions: 3 for p in {2, 3}, 2 otherwise.
pub fn critical_level(p: u64) -> u32 {
    if p <= 3 {
        3
    } else {
        2
    }
}

fn domain_states(p: u64, k: u32, arity: u32, limit: u64) -> Result<(u64, u64)> {
    let per_coord = checked_states(p, k, limit)?;
    let mut total: u64 = 1;
    for _ in 0..arity {
        total = total
            .checked_mul(per_coord)
            .filter(|t| *t <= limit)
            .ok_or(Error::ResourceLimit {
                needed: u64::MAX,
                limit,
            })?;
    }
    Ok((per_coord, total))
}

fn decode(mut index: u64, per_coord: u64, arity: u32) -> Vec<u64> {
    let mut coords = Vec::with_capacity(arity as usize);
    for _ in 0..arity {
        coords.push(index % per_coord);
        index /= per_coord;
    }
    coords
}

fn encode(coords: &[u64], per_coord: u64) -> u64 {
    coords
        .iter()
        .rev()
        .fold(0u64, |acc, c| acc * per_coord + c)
}

/// The map f mod p^k materialized as a table over the encoded domain
/// [0, p^(k*arity)).
#[derive(Clone, Debug)]
pub struct InducedMap {
    pub p: u64,
    pub k: u32,
    pub arity: u32,
    pub co_arity: u32,
    per_coord: u64,
    table: Vec<u64>,
}

impl InducedMap {
    /// Evaluates f over the whole domain. The induced map only exists for
    /// compatible f; every constructor is compatible by construction
    /// except scaled series, for which the congruence-preservation check
    /// runs first (univariate case) so a bad assertion cannot produce a
    /// misleading table.
    pub fn build(f: &FunctionSpec, p: u64, k: u32, max_states: u64) -> Result<Self> {
        Self::build_with_arity(f, p, k, f.arity(), max_states)
    }

    /// Domain dimension matching the co-arity, for the permutation-style
    /// checks (cycles, transitivity, bijectivity).
    fn build_square(f: &FunctionSpec, p: u64, k: u32, max_states: u64) -> Result<Self> {
        let n = f.arity().max(f.co_arity());
        if f.co_arity() != n {
            return Err(Error::Arity {
                expected: n as usize,
                got: f.co_arity() as usize,
            });
        }
        Self::build_with_arity(f, p, k, n, max_states)
    }

    /// Same, with an explicit domain dimension (for maps such as
    /// projections that do not reference every input variable).
    pub fn build_with_arity(
        f: &FunctionSpec,
        p: u64,
        k: u32,
        arity: u32,
        max_states: u64,
    ) -> Result<Self> {
        if arity < f.arity() {
            return Err(Error::Arity {
                expected: f.arity() as usize,
                got: arity as usize,
            });
        }
        if !f.compatible_by_construction() && arity == 1 && f.co_arity() == 1 {
            let check = crate::func::compatibility_check(f, p, k, max_states)?;
            if !check.is_holds() {
                return Err(Error::NotApplicable(format!(
                    "map does not preserve congruences at level {k}: {:?}",
                    check.witness
                )));
            }
        }
        let (per_coord, total) = domain_states(p, k, arity, max_states)?;
        let ring = SmallRing::new(p, k)?;
        let co_arity = f.co_arity();
        let mut table = Vec::with_capacity(total as usize);
        let mut coords = vec![0u64; arity as usize];
        for _ in 0..total {
            let outs = eval_u64(f, &ring, &coords)?;
            table.push(encode(&outs, per_coord));
            for slot in coords.iter_mut() {
                *slot += 1;
                if *slot < per_coord {
                    break;
                }
                *slot = 0;
            }
        }
        Ok(InducedMap {
            p,
            k,
            arity,
            co_arity,
            per_coord,
            table,
        })
    }

    pub fn domain_size(&self) -> u64 {
        self.table.len() as u64
    }

    pub fn get(&self, index: u64) -> u64 {
        self.table[index as usize]
    }

    pub fn table(&self) -> &[u64] {
        &self.table
    }

    pub fn decode(&self, index: u64) -> Vec<u64> {
        decode(index, self.per_coord, self.arity)
    }
}

struct Bitmap {
    words: Vec<u64>,
}

impl Bitmap {
    fn new(size: u64) -> Self {
        Bitmap {
            words: vec![0u64; size.div_ceil(64) as usize],
        }
    }

    fn insert(&mut self, bit: u64) -> bool {
        let (word, mask) = ((bit / 64) as usize, 1u64 << (bit % 64));
        let fresh = self.words[word] & mask == 0;
        self.words[word] |= mask;
        fresh
    }

    fn contains(&self, bit: u64) -> bool {
        self.words[(bit / 64) as usize] & (1u64 << (bit % 64)) != 0
    }
}

/// One cycle of a permutation: its length and minimal element.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cycle {
    pub length: u64,
    pub representative: u64,
}

/// Cycle decomposition of the induced permutation on Z/p^k Z.
#[derive(Clone, Debug)]
pub struct CycleStructure {
    pub k: u32,
    pub cycles: Vec<Cycle>,
}

impl CycleStructure {
    pub fn total(&self) -> u64 {
        self.cycles.iter().map(|c| c.length).sum()
    }

    pub fn cycle_count(&self) -> usize {
        self.cycles.len()
    }

    /// CSV rows aggregated per distinct cycle length, ascending:
    /// `k,cycle_length,representative,count` where the representative is
    /// the minimal one among cycles of that length.
    pub fn to_csv(&self) -> String {
        let mut by_length: Vec<(u64, u64, u64)> = Vec::new();
        for cycle in &self.cycles {
            match by_length.iter_mut().find(|(l, _, _)| *l == cycle.length) {
                Some((_, rep, count)) => {
                    *rep = (*rep).min(cycle.representative);
                    *count += 1;
                }
                None => by_length.push((cycle.length, cycle.representative, 1)),
            }
        }
        by_length.sort_unstable();
        let mut out = String::from("k,cycle_length,representative,count\n");
        for (length, rep, count) in by_length {
            out.push_str(&format!("{},{},{},{}\n", self.k, length, rep, count));
        }
        out
    }
}

fn first_collision(map: &InducedMap) -> Option<(u64, u64, u64)> {
    let size = map.domain_size();
    let mut seen_at: Vec<u64> = vec![u64::MAX; size as usize];
    for x in 0..size {
        let v = map.get(x);
        if seen_at[v as usize] != u64::MAX {
            return Some((seen_at[v as usize], x, v));
        }
        seen_at[v as usize] = x;
    }
    None
}

/// Whether f mod p^k permutes the residues, with a colliding pair as the
/// witness on failure.
pub fn is_bijective_mod(f: &FunctionSpec, p: u64, k: u32, max_states: u64) -> Result<Verdict> {
    is_bijective_mod_n(f, f.arity().max(f.co_arity()), p, k, max_states)
}

/// Bijectivity of f viewed as a self-map of (Z/p^k)^n for an explicit
/// domain dimension n (needed for maps that ignore some inputs).
pub fn is_bijective_mod_n(
    f: &FunctionSpec,
    n: u32,
    p: u64,
    k: u32,
    max_states: u64,
) -> Result<Verdict> {
    let started = Instant::now();
    if f.co_arity() != n {
        return Err(Error::Arity {
            expected: n as usize,
            got: f.co_arity() as usize,
        });
    }
    let map = InducedMap::build_with_arity(f, p, k, n, max_states)?;
    let status = match first_collision(&map) {
        None => (VerdictStatus::Holds, None),
        Some((x1, x2, v)) => (
            VerdictStatus::Fails,
            Some(serde_json::json!({
                "collision": { "x1": map.decode(x1), "x2": map.decode(x2), "value": map.decode(v) },
            })),
        ),
    };
    Ok(Verdict::finish(
        "bijective",
        p,
        vec![k],
        status.0,
        status.1,
        started,
    ))
}

/// Complete cycle decomposition of f mod p^k. Requires a bijective map.
pub fn cycle_structure(f: &FunctionSpec, p: u64, k: u32, max_states: u64) -> Result<CycleStructure> {
    let map = InducedMap::build_square(f, p, k, max_states)?;
    cycle_structure_of(&map)
}

fn cycle_structure_of(map: &InducedMap) -> Result<CycleStructure> {
    if first_collision(map).is_some() {
        return Err(Error::NotBijective { level: map.k });
    }
    let size = map.domain_size();
    let mut visited = Bitmap::new(size);
    let mut cycles = Vec::new();
    for start in 0..size {
        if visited.contains(start) {
            continue;
        }
        let mut length = 0u64;
        let mut cursor = start;
        loop {
            visited.insert(cursor);
            length += 1;
            cursor = map.get(cursor);
            if cursor == start {
                break;
            }
        }
        cycles.push(Cycle {
            length,
            representative: start,
        });
    }
    Ok(CycleStructure { k: map.k, cycles })
}

/// Whether f mod p^k is a permutation with a single cycle.
pub fn is_transitive_mod(f: &FunctionSpec, p: u64, k: u32, max_states: u64) -> Result<Verdict> {
    let started = Instant::now();
    let map = InducedMap::build_square(f, p, k, max_states)?;
    Ok(transitivity_verdict(&map, started))
}

fn transitivity_verdict(map: &InducedMap, started: Instant) -> Verdict {
    if let Some((x1, x2, v)) = first_collision(map) {
        return Verdict::finish(
            "transitive",
            map.p,
            vec![map.k],
            VerdictStatus::Fails,
            Some(serde_json::json!({
                "not_bijective": { "x1": map.decode(x1), "x2": map.decode(x2), "value": map.decode(v) },
            })),
            started,
        );
    }
    let cycles = cycle_structure_of(map).expect("bijectivity just verified");
    if cycles.cycle_count() == 1 {
        Verdict::finish(
            "transitive",
            map.p,
            vec![map.k],
            VerdictStatus::Holds,
            None,
            started,
        )
    } else {
        let lengths: Vec<u64> = cycles.cycles.iter().map(|c| c.length).take(8).collect();
        Verdict::finish(
            "transitive",
            map.p,
            vec![map.k],
            VerdictStatus::Fails,
            Some(serde_json::json!({
                "cycles": cycles.cycle_count(),
                "lengths": lengths,
            })),
            started,
        )
    }
}

/// Bijectivity at every level k <= k_max; the finite evidence for the
/// measure-preservation criterion.
pub fn measure_preserving_verdict(
    f: &FunctionSpec,
    p: u64,
    k_max: u32,
    max_states: u64,
) -> Result<Verdict> {
    let started = Instant::now();
    for k in 1..=k_max {
        let v = is_bijective_mod(f, p, k, max_states)?;
        if !v.is_holds() {
            return Ok(Verdict::finish(
                "measure_preserving",
                p,
                (1..=k).collect(),
                VerdictStatus::Fails,
                Some(serde_json::json!({ "failed_level": k, "detail": v.witness })),
                started,
            ));
        }
    }
    Ok(Verdict::finish(
        "measure_preserving",
        p,
        (1..=k_max).collect(),
        VerdictStatus::Holds,
        None,
        started,
    ))
}

/// Transitivity at every level k <= k_max; the finite evidence for the
/// ergodicity criterion. The witness carries the first failing level and
/// its cycle count.
pub fn ergodic_verdict_bruteforce(
    f: &FunctionSpec,
    p: u64,
    k_max: u32,
    max_states: u64,
) -> Result<Verdict> {
    let started = Instant::now();
    for k in 1..=k_max {
        let v = is_transitive_mod(f, p, k, max_states)?;
        if !v.is_holds() {
            return Ok(Verdict::finish(
                "ergodic_bruteforce",
                p,
                (1..=k).collect(),
                VerdictStatus::Fails,
                Some(serde_json::json!({ "failed_level": k, "detail": v.witness })),
                started,
            ));
        }
    }
    Ok(Verdict::finish(
        "ergodic_bruteforce",
        p,
        (1..=k_max).collect(),
        VerdictStatus::Holds,
        None,
        started,
    ))
}

/// Single-level ergodicity decision for falling-factorial series functions:
/// transitivity at the critical modulus decides ergodicity on Z_p.
pub fn ergodic_verdict_fast(f: &FunctionSpec, p: u64, max_states: u64) -> Result<Verdict> {
    let started = Instant::now();
    if !f.is_series_class() {
        return Err(Error::NotSeriesClass {
            op: "ergodic_verdict_fast",
            found: f.to_string(),
        });
    }
    let k = critical_level(p);
    let inner = is_transitive_mod(f, p, k, max_states)?;
    Ok(Verdict::finish(
        "ergodic_fast",
        p,
        vec![k],
        inner.status,
        inner.witness,
        started,
    ))
}

/// Closed-form transitivity test for x -> beta*x + alpha mod p^k.
///
/// For k >= 2: alpha not divisible by p, and beta = 1 mod p for odd p
/// (mod 4 for p = 2). At k = 1 the exact single-level conditions apply:
/// alpha nonzero and beta = 1 mod p for odd p; alpha and beta both odd for
/// p = 2.
pub fn affine_transitivity(alpha: u64, beta: u64, p: u64, k: u32) -> Verdict {
    let started = Instant::now();
    let alpha_ok = alpha % p != 0;
    let holds = if k >= 2 {
        let beta_ok = if p == 2 {
            beta % 4 == 1
        } else {
            beta % p == 1
        };
        alpha_ok && beta_ok
    } else if p == 2 {
        alpha % 2 == 1 && beta % 2 == 1
    } else {
        alpha_ok && beta % p == 1
    };
    let witness = (!holds).then(|| {
        serde_json::json!({
            "alpha_mod_p": alpha % p,
            "beta_mod": if p == 2 { beta % 4 } else { beta % p },
        })
    });
    Verdict::finish(
        "affine_transitivity",
        p,
        vec![k],
        if holds {
            VerdictStatus::Holds
        } else {
            VerdictStatus::Fails
        },
        witness,
        started,
    )
}

/// Fiber-size census of F: (Z/p^k)^n -> (Z/p^k)^m. Holds iff every fiber
/// has exactly p^(k(n-m)) elements. Streams over the domain; no table is
/// materialized.
pub fn is_balanced_mod(
    f: &FunctionSpec,
    n: u32,
    m: u32,
    p: u64,
    k: u32,
    max_states: u64,
) -> Result<Verdict> {
    let started = Instant::now();
    if m == 0 || n < m || f.co_arity() != m || f.arity() > n {
        return Err(Error::Arity {
            expected: m as usize,
            got: f.co_arity() as usize,
        });
    }
    let (per_coord, domain) = domain_states(p, k, n, max_states)?;
    let (_, image) = domain_states(p, k, m, max_states)?;
    let ring = SmallRing::new(p, k)?;
    let mut counts = vec![0u64; image as usize];
    let mut coords = vec![0u64; n as usize];
    for _ in 0..domain {
        let outs = eval_u64(f, &ring, &coords)?;
        counts[encode(&outs, per_coord) as usize] += 1;
        for slot in coords.iter_mut() {
            *slot += 1;
            if *slot < per_coord {
                break;
            }
            *slot = 0;
        }
    }
    let expected = domain / image;
    let offender = counts.iter().position(|c| *c != expected);
    match offender {
        None => Ok(Verdict::finish(
            "balanced",
            p,
            vec![k],
            VerdictStatus::Holds,
            Some(serde_json::json!({ "fiber_size": expected })),
            started,
        )),
        Some(idx) => {
            let other = counts
                .iter()
                .position(|c| *c == expected)
                .unwrap_or((idx + 1) % counts.len());
            Ok(Verdict::finish(
                "balanced",
                p,
                vec![k],
                VerdictStatus::Fails,
                Some(serde_json::json!({
                    "value": decode(idx as u64, per_coord, m),
                    "fiber_size": counts[idx],
                    "expected": expected,
                    "other_value": decode(other as u64, per_coord, m),
                    "other_fiber_size": counts[other],
                })),
                started,
            ))
        }
    }
}

/// Balancedness at every level k <= k_max: the finite evidence for
/// multivariate measure preservation.
pub fn multivariate_mp_verdict(
    f: &FunctionSpec,
    n: u32,
    m: u32,
    p: u64,
    k_max: u32,
    max_states: u64,
) -> Result<Verdict> {
    let started = Instant::now();
    for k in 1..=k_max {
        let v = is_balanced_mod(f, n, m, p, k, max_states)?;
        if !v.is_holds() {
            return Ok(Verdict::finish(
                "multivariate_measure_preserving",
                p,
                (1..=k).collect(),
                VerdictStatus::Fails,
                Some(serde_json::json!({ "failed_level": k, "detail": v.witness })),
                started,
            ));
        }
    }
    Ok(Verdict::finish(
        "multivariate_measure_preserving",
        p,
        (1..=k_max).collect(),
        VerdictStatus::Holds,
        None,
        started,
    ))
}

/// The full preimage of the coset b + p^s (Z/p^k)^m under F mod p^k,
/// verified to be exactly p^(s(n-m)) pairwise disjoint cosets
/// a_j + p^s (Z/p^k)^n. Returns the representatives a_j, each coordinate
/// in [0, p^s).
#[allow(clippy::too_many_arguments)]
pub fn preimage_ball_decomposition(
    f: &FunctionSpec,
    n: u32,
    m: u32,
    p: u64,
    b: &[u64],
    s: u32,
    k: u32,
    max_states: u64,
) -> Result<Vec<Vec<u64>>> {
    if s == 0 || s > k {
        return Err(Error::LevelTooSmall { k: s, min: 1 });
    }
    if b.len() != m as usize {
        return Err(Error::Arity {
            expected: m as usize,
            got: b.len(),
        });
    }
    for j in 1..=k {
        let v = is_balanced_mod(f, n, m, p, j, max_states)?;
        if !v.is_holds() {
            return Err(Error::NotApplicable(format!(
                "map is not balanced modulo {p}^{j}"
            )));
        }
    }
    let (per_coord, domain) = domain_states(p, k, n, max_states)?;
    let modulus_s = checked_states(p, s, max_states)?;
    let target: Vec<u64> = b.iter().map(|c| c % modulus_s).collect();
    let ring = SmallRing::new(p, k)?;

    let mut groups: Vec<(Vec<u64>, u64)> = Vec::new();
    let mut total = 0u64;
    let mut coords = vec![0u64; n as usize];
    for _ in 0..domain {
        let outs = eval_u64(f, &ring, &coords)?;
        if outs.iter().zip(&target).all(|(o, t)| o % modulus_s == *t) {
            total += 1;
            let rep: Vec<u64> = coords.iter().map(|c| c % modulus_s).collect();
            match groups.iter_mut().find(|(g, _)| *g == rep) {
                Some((_, count)) => *count += 1,
                None => groups.push((rep, 1)),
            }
        }
        for slot in coords.iter_mut() {
            *slot += 1;
            if *slot < per_coord {
                break;
            }
            *slot = 0;
        }
    }

    let expected_cosets = checked_states(p, s * (n - m), max_states)?;
    let coset_size = checked_states(p, (k - s) * n, max_states)?;
    let shape_ok = groups.len() as u64 == expected_cosets
        && groups.iter().all(|(_, count)| *count == coset_size)
        && total == expected_cosets * coset_size;
    if !shape_ok {
        return Err(Error::NotApplicable(format!(
            "preimage is not a union of {expected_cosets} full cosets (found {} groups over {total} points)",
            groups.len()
        )));
    }
    let mut reps: Vec<Vec<u64>> = groups.into_iter().map(|(rep, _)| rep).collect();
    reps.sort_unstable();
    Ok(reps)
}

/// Ergodicity test for a polynomial over Q_p given by rational coefficient
/// pairs (numerator, denominator), low degree first.
///
/// With d the degree and k* = floor(log_p d) + 3, the polynomial is
/// integer-valued, compatible, and ergodic on Z_p iff it takes p-integral
/// values at 0..p^k* - 1 and the induced map at level k* is compatible and
/// transitive. The witness records every sub-check.
pub fn qp_polynomial_ergodic(coeffs: &[(i64, i64)], p: u64, max_states: u64) -> Result<Verdict> {
    let started = Instant::now();
    for (idx, (_, den)) in coeffs.iter().enumerate() {
        if *den == 0 {
            return Err(Error::ZeroDenominator { index: idx });
        }
    }
    let degree = coeffs
        .iter()
        .rposition(|(num, _)| *num != 0)
        .unwrap_or(0);
    if degree < 1 {
        return Err(Error::NotApplicable(
            "polynomial degree must be at least 1".into(),
        ));
    }

    // k* = floor(log_p degree) + 3
    let mut log = 0u32;
    let mut power = p;
    while power <= degree as u64 {
        log += 1;
        power *= p;
    }
    let level = log + 3;
    let states = checked_states(p, level, max_states)?;
    let modulus = BigInt::from(p).pow(level);

    // Common denominator D; the polynomial is sum of (a_i * D / b_i) x^i / D.
    let denom = coeffs
        .iter()
        .fold(BigInt::one(), |acc, (_, den)| acc.lcm(&BigInt::from(*den).abs()));
    let scaled: Vec<BigInt> = coeffs
        .iter()
        .map(|(num, den)| BigInt::from(*num) * (&denom / BigInt::from(*den)))
        .collect();
    let denom_val = padic_valuation_bigint(&denom, p).expect("lcm of nonzero is nonzero");
    let denom_unit = &denom / BigInt::from(p).pow(denom_val as u32);
    let denom_unit_inv = invert_unit(
        &denom_unit.magnitude().clone(),
        &modulus.magnitude().clone(),
    )
    .map(BigInt::from)
    .map(|inv| if denom_unit.is_negative() { &modulus - inv } else { inv })
    .expect("unit part of denominator is invertible");

    let mut table: Vec<u64> = Vec::with_capacity(states as usize);
    for x in 0..states {
        let mut numerator = BigInt::zero();
        for c in scaled.iter().rev() {
            numerator = numerator * BigInt::from(x) + c;
        }
        // p-integrality: v_p(numerator) >= v_p(D)
        match padic_valuation_bigint(&numerator, p) {
            Some(v) if v < denom_val => {
                return Ok(Verdict::finish(
                    "qp_polynomial_ergodic",
                    p,
                    vec![level],
                    VerdictStatus::Fails,
                    Some(serde_json::json!({
                        "integral": false,
                        "point": x,
                        "value_valuation": v as i64 - denom_val as i64,
                    })),
                    started,
                ));
            }
            _ => {}
        }
        let reduced = &numerator / BigInt::from(p).pow(denom_val as u32);
        let residue = ((reduced * &denom_unit_inv) % &modulus + &modulus) % &modulus;
        table.push(residue.to_u64().expect("residue below p^k* fits u64"));
    }

    // Compatibility of the induced map at every level j < k*.
    let mut compat_witness = None;
    'compat: for j in 1..level {
        let m_j = checked_states(p, j, max_states)?;
        for x in 0..states {
            let y = x % m_j;
            if table[x as usize] % m_j != table[y as usize] % m_j {
                compat_witness = Some(serde_json::json!({ "level": j, "x": x, "y": y }));
                break 'compat;
            }
        }
    }

    // Bijectivity, then single cycle, on the table.
    let mut seen_at: Vec<u64> = vec![u64::MAX; states as usize];
    let mut collision = None;
    for x in 0..states {
        let v = table[x as usize];
        if seen_at[v as usize] != u64::MAX {
            collision = Some(serde_json::json!({
                "x1": seen_at[v as usize], "x2": x, "value": v,
            }));
            break;
        }
        seen_at[v as usize] = x;
    }
    let transitive = if collision.is_none() {
        let mut steps = 0u64;
        let mut cursor = table[0];
        while cursor != 0 && steps < states {
            cursor = table[cursor as usize];
            steps += 1;
        }
        steps + 1 == states
    } else {
        false
    };

    let holds = compat_witness.is_none() && collision.is_none() && transitive;
    let witness = serde_json::json!({
        "integral": true,
        "compatible": compat_witness.is_none(),
        "compat_witness": compat_witness,
        "bijective": collision.is_none(),
        "collision": collision,
        "transitive": transitive,
    });
    Ok(Verdict::finish(
        "qp_polynomial_ergodic",
        p,
        vec![level],
        if holds {
            VerdictStatus::Holds
        } else {
            VerdictStatus::Fails
        },
        Some(witness),
        started,
    ))
}

fn padic_valuation_bigint(value: &BigInt, p: u64) -> Option<u64> {
    if value.is_zero() {
        return None;
    }
    let p = BigInt::from(p);
    let mut v = 0;
    let mut rest = value.clone();
    while (&rest % &p).is_zero() {
        v += 1;
        rest /= &p;
    }
    Some(v)
}

/// Distance preservation on sampled pairs: for x != y modulo p^K the
/// valuation of f(x) - f(y) must equal that of x - y. Requires the map to
/// be measure preserving through the levels checked (up to K).
pub fn isometry_check(
    f: &FunctionSpec,
    p: u64,
    precision: u32,
    sample_count: u32,
    seed: u64,
    max_states: u64,
) -> Result<Verdict> {
    let started = Instant::now();
    let mp = measure_preserving_verdict(f, p, precision, max_states)?;
    if !mp.is_holds() {
        return Err(Error::NotApplicable(format!(
            "isometry check requires measure preservation; failed: {:?}",
            mp.witness
        )));
    }
    let ctx = PadicContext::new(p, precision)?;
    let mut rng = SplitMix::new(seed);
    let mut draw = || {
        let mut residue = BigUint::zero();
        for _ in 0..precision {
            residue = residue * BigUint::from(p) + BigUint::from(rng.next_below(p));
        }
        ctx.int_from_residue(residue % ctx.modulus())
    };
    let mut checked = 0u32;
    while checked < sample_count {
        let x = draw();
        let y = draw();
        if x == y {
            continue;
        }
        checked += 1;
        let input_val = x.sub(&y)?.valuation();
        let output_val = evaluate(f, &x)?.sub(&evaluate(f, &y)?)?.valuation();
        if input_val != output_val {
            return Ok(Verdict::finish(
                "isometry",
                p,
                vec![precision],
                VerdictStatus::Fails,
                Some(serde_json::json!({
                    "x": x.residue().to_string(),
                    "y": y.residue().to_string(),
                    "input_valuation": input_val,
                    "output_valuation": output_val,
                })),
                started,
            ));
        }
    }
    Ok(Verdict::finish(
        "isometry",
        p,
        vec![precision],
        VerdictStatus::Holds,
        Some(serde_json::json!({ "pairs": sample_count })),
        started,
    ))
}

/// Advisory 2-adic ergodicity pattern on Mahler coefficients: for i >= 2
/// the coefficient a_i must be divisible by 2^(floor(log2(i+1)) + 1). The
/// constant and linear coefficients are reported raw (the displayed series
/// form would force a_0 = 1, but e.g. 5x + 3 is ergodic with a_0 = 3, so
/// they are not part of the tested pattern). The authoritative decision,
/// included in the witness, is the critical-level verdict.
pub fn check_ergodic_mahler_2adic(
    f: &FunctionSpec,
    precision: u32,
    count: usize,
    max_states: u64,
) -> Result<Verdict> {
    let started = Instant::now();
    let ctx = PadicContext::new(2, precision)?;
    let coeffs = crate::func::mahler_coefficients(f, &ctx, count.max(2))?;
    let mut violations = Vec::new();
    let mut unverifiable = Vec::new();
    for (i, a) in coeffs.iter().enumerate().skip(2) {
        let required = (i as u64 + 1).ilog2() + 1;
        if required > precision {
            unverifiable.push(i);
            continue;
        }
        if valuation_in(a, 2, precision) < required {
            violations.push(serde_json::json!({
                "index": i,
                "coefficient": a.to_string(),
                "required_power": required,
            }));
        }
    }
    let oracle = if f.is_series_class() {
        Some(ergodic_verdict_fast(f, 2, max_states)?.status)
    } else {
        None
    };
    let a0 = &coeffs[0];
    let a1 = &coeffs[1];
    let status = if !violations.is_empty() {
        VerdictStatus::Fails
    } else if !unverifiable.is_empty() {
        VerdictStatus::Inconclusive
    } else {
        VerdictStatus::Holds
    };
    let witness = serde_json::json!({
        "a0": a0.to_string(),
        "a0_odd": a0.bit(0),
        "a1": a1.to_string(),
        "a1_mod_4": (a1 % BigUint::from(4u32)).to_u64(),
        "violations": violations,
        "unverifiable_indices": unverifiable,
        "oracle_critical_level": oracle.map(|s| serde_json::to_value(s).unwrap()),
        "advisory": true,
    });
    Ok(Verdict::finish(
        "ergodic_mahler_pattern",
        2,
        vec![precision],
        status,
        Some(witness),
        started,
    ))
}

/// splitmix64; fixed seeds make the sampled checks reproducible.
struct SplitMix {
    state: u64,
}

impl SplitMix {
    fn new(seed: u64) -> Self {
        SplitMix { state: seed }
    }

    fn next(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    fn next_below(&mut self, bound: u64) -> u64 {
        self.next() % bound
    }
}
