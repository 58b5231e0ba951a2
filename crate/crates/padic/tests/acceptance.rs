//! Acceptance suite: one test per criterion, each printing a PASS/FAIL
//! line (visible with `cargo test -p padic --test acceptance -- --nocapture`).
//!
//! Every criterion pins its levels, corpus sizes, and seeds here; nothing
//! is deferred to later calibration.

use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use padic::prng::{audit_equidistribution, audit_period, Generator, GeneratorConfig, OutputPolicy};
use padic::residue::{
    affine_transitivity, check_ergodic_mahler_2adic, ergodic_verdict_bruteforce,
    ergodic_verdict_fast, is_balanced_mod, is_bijective_mod_n, is_transitive_mod, isometry_check,
    preimage_ball_decomposition, qp_polynomial_ergodic, DEFAULT_STATE_LIMIT,
};
use padic::sphere::{perturbed_monomial_verdict, sphere_ergodic_bruteforce, sphere_ergodic_criterion, Sphere};
use padic::{
    binomial_at, derivative_at_quotient, evaluate, mahler_coefficients, parse, FunctionSpec,
    PadicContext,
};

const LIMIT: u64 = DEFAULT_STATE_LIMIT;

fn report(number: u32, name: &str, failures: &[String]) {
    let ok = failures.is_empty();
    println!(
        "ACCEPTANCE {number:02} {name}: {}",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(
        ok,
        "criterion {number} ({name}): {} failure(s), first: {}",
        failures.len(),
        failures.first().map(String::as_str).unwrap_or("")
    );
}

fn poly(coeffs: Vec<i64>) -> FunctionSpec {
    FunctionSpec::Poly(coeffs)
}

#[test]
fn a01_affine_criterion_matches_enumeration_exhaustively() {
    let mut failures = Vec::new();
    for p in [2u64, 3, 5] {
        for alpha in 0..p * p {
            for beta in 0..p * p {
                let f = poly(vec![alpha as i64, beta as i64]);
                for k in 1..=4u32 {
                    let criterion = affine_transitivity(alpha, beta, p, k).is_holds();
                    let oracle = is_transitive_mod(&f, p, k, LIMIT).unwrap().is_holds();
                    if criterion != oracle {
                        failures.push(format!(
                            "p={p} alpha={alpha} beta={beta} k={k}: criterion {criterion} vs oracle {oracle}"
                        ));
                    }
                }
            }
        }
    }
    report(1, "affine transitivity criterion vs enumeration", &failures);
}

fn max_level_with_states(p: u64, cap: u64) -> u32 {
    let mut k = 0;
    let mut states = 1u64;
    while states.saturating_mul(p) <= cap {
        states *= p;
        k += 1;
    }
    k
}

#[test]
fn a02_critical_level_decides_ergodicity_for_random_polynomials() {
    let mut failures = Vec::new();
    for p in [2u64, 3, 5, 7] {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5ec0_0000 + p);
        let k_max = max_level_with_states(p, 1 << 18);
        let coeff_bound = p.pow(4) as i64;
        for case in 0..200 {
            let coeffs: Vec<i64> = (0..6).map(|_| rng.gen_range(0..coeff_bound)).collect();
            let f = poly(coeffs.clone());
            let fast = ergodic_verdict_fast(&f, p, LIMIT).unwrap().is_holds();
            let mut all_levels = true;
            for k in 1..=k_max {
                if !is_transitive_mod(&f, p, k, LIMIT).unwrap().is_holds() {
                    all_levels = false;
                    break;
                }
            }
            if fast != all_levels {
                failures.push(format!(
                    "p={p} case={case} coeffs={coeffs:?}: fast {fast} vs levels<=p^{k_max} {all_levels}"
                ));
            }
        }
    }
    report(
        2,
        "critical-level verdict vs transitivity at every level",
        &failures,
    );
}

/// Seeded corpus of series-class functions around a small center, with
/// controlled fixed-point behaviour: families of random polynomials,
/// perturbed monomials, near-identity affine maps, centered adjustments at
/// exact congruence depth, and b-series.
fn sphere_corpus(p: u64, r: u32, count: usize, seed: u64) -> Vec<(FunctionSpec, i64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeff_bound = p.pow(4) as i64;
    let mut corpus = Vec::with_capacity(count);
    while corpus.len() < count {
        let family = corpus.len() % 5;
        let entry = match family {
            0 => {
                let coeffs: Vec<i64> = (0..=rng.gen_range(1..=4))
                    .map(|_| rng.gen_range(0..coeff_bound))
                    .collect();
                (poly(coeffs), rng.gen_range(0..4) as i64)
            }
            1 => {
                let ell = rng.gen_range(1..=(p * p + 3));
                let u: Vec<i64> = (0..=rng.gen_range(0..=2))
                    .map(|_| rng.gen_range(0..(p * p) as i64))
                    .collect();
                (
                    FunctionSpec::PerturbedMonomial {
                        ell,
                        r,
                        u: Box::new(poly(u)),
                    },
                    1,
                )
            }
            2 => {
                let slope = 1 + p as i64 * rng.gen_range(0..p as i64 * 2);
                let offset = p.pow(r + 1) as i64 * rng.gen_range(0..6);
                (poly(vec![offset, slope]), 0)
            }
            3 => {
                // force f(y) = y + p^j * d with j in {r+1, r+2}
                let y = rng.gen_range(0..3) as i64;
                let g: Vec<i64> = (0..=rng.gen_range(1..=3))
                    .map(|_| rng.gen_range(0..coeff_bound))
                    .collect();
                let g_at_y: i64 = g.iter().rev().fold(0, |acc, c| acc * y + c);
                let j = r + 1 + rng.gen_range(0..2);
                let d = rng.gen_range(0..4) as i64;
                let mut coeffs = g;
                coeffs[0] += y - g_at_y + p.pow(j) as i64 * d;
                (poly(coeffs), y)
            }
            _ => {
                let b: Vec<i64> = (0..rng.gen_range(2..=5))
                    .map(|_| rng.gen_range(0..coeff_bound))
                    .collect();
                (FunctionSpec::BSeries(b), rng.gen_range(0..3) as i64)
            }
        };
        corpus.push(entry);
    }
    corpus
}

#[test]
fn a03_analytic_sphere_criterion_matches_bruteforce() {
    let mut failures = Vec::new();
    for (p, r) in [(5u64, 2u32), (3, 3), (2, 2), (2, 3)] {
        let corpus = sphere_corpus(p, r, 50, 0x3000 + p * 16 + r as u64);
        let mut fixed_cases = 0usize;
        let mut moving_cases = 0usize;
        for (idx, (f, y)) in corpus.iter().enumerate() {
            let sphere = Sphere::new(p, *y, r).unwrap();
            let criterion = match sphere_ergodic_criterion(f, &sphere) {
                Ok(v) => v,
                Err(e) => {
                    failures.push(format!("(p={p},r={r}) case {idx}: criterion error {e}"));
                    continue;
                }
            };
            let ctx = PadicContext::new(p, r + 1).unwrap();
            let fy = evaluate(f, &ctx.int(*y)).unwrap();
            if fy == ctx.int(*y) {
                fixed_cases += 1;
            } else {
                moving_cases += 1;
            }
            let brute = sphere_ergodic_bruteforce(f, &sphere, r + 4, LIMIT).unwrap();
            if criterion.is_holds() != brute.is_holds() {
                failures.push(format!(
                    "(p={p},r={r}) case {idx} f={f} y={y}: criterion {} vs brute {}",
                    criterion.is_holds(),
                    brute.is_holds()
                ));
            }
        }
        if fixed_cases == 0 || moving_cases == 0 {
            failures.push(format!(
                "(p={p},r={r}): corpus must contain fixed and non-fixed cases (got {fixed_cases}/{moving_cases})"
            ));
        }
    }
    report(3, "analytic sphere criterion vs exhaustive sweep", &failures);
}

#[test]
fn a04_perturbed_monomial_criterion_matches_bruteforce() {
    let mut failures = Vec::new();
    let perturbations = ["0", "1", "x + 1"];
    let mut run = |p: u64, ells: &[u64]| {
        for &ell in ells {
            for u_src in perturbations {
                let u = parse(u_src).unwrap();
                let r = 2u32;
                let verdict = perturbed_monomial_verdict(ell, &u, r, p).unwrap();
                let f = FunctionSpec::PerturbedMonomial {
                    ell,
                    r,
                    u: Box::new(u),
                };
                let sphere = Sphere::new(p, 1, r).unwrap();
                let brute = sphere_ergodic_bruteforce(&f, &sphere, 6, LIMIT).unwrap();
                if verdict.is_holds() != brute.is_holds() {
                    failures.push(format!(
                        "p={p} ell={ell} u={u_src}: order criterion {} vs brute {}",
                        verdict.is_holds(),
                        brute.is_holds()
                    ));
                }
            }
        }
    };
    run(5, &[2, 3, 7, 8, 12, 23]);
    run(3, &[2, 5]);
    report(
        4,
        "perturbed-monomial order criterion vs sphere sweep",
        &failures,
    );
}

#[test]
fn a05_balancedness_census_on_fixed_multivariate_family() {
    // 20 compatible maps with n = 2; designated balanced/non-balanced
    let balanced_m1 = ["[x1 + x2]", "[x1]", "[x2]", "[x1 + x2 + 1]", "[x1 + 5*x2]", "[x1^3 + x2]"];
    let balanced_m2 = [
        "[x1, x2]",
        "[x2, x1]",
        "[x1 + x2, x2]",
        "[x1, x1 + x2]",
        "[x1 + 1, x2 + 1]",
        "[x2 + 1, x1]",
    ];
    let unbalanced_m1 = ["[x1*x2]", "[x1*x2 + x1]", "[x1*x2 + 2]"];
    let unbalanced_m2 = [
        "[x1, x1]",
        "[x1*x2, x2]",
        "[x1 + x2, x1 + x2]",
        "[x1*x2, x1 + x2]",
        "[x1*x2, x2 + 1]",
    ];
    assert_eq!(
        balanced_m1.len() + balanced_m2.len() + unbalanced_m1.len() + unbalanced_m2.len(),
        20
    );

    let mut failures = Vec::new();
    for p in [2u64, 3] {
        for k in 1..=2u32 {
            for (group, m, expect) in [
                (&balanced_m1[..], 1u32, true),
                (&balanced_m2[..], 2, true),
                (&unbalanced_m1[..], 1, false),
                (&unbalanced_m2[..], 2, false),
            ] {
                for src in group {
                    let f = parse(src).unwrap();
                    let v = is_balanced_mod(&f, 2, m, p, k, LIMIT).unwrap();
                    if v.is_holds() != expect {
                        failures.push(format!("p={p} k={k} {src}: balanced={} expected {expect}", v.is_holds()));
                    }
                    if expect {
                        let w = v.witness.clone().unwrap();
                        let fiber = w["fiber_size"].as_u64().unwrap();
                        if fiber != p.pow(k * (2 - m)) {
                            failures.push(format!("p={p} k={k} {src}: fiber {fiber}"));
                        }
                    }
                    // when n = m, balancedness must coincide with bijectivity
                    if m == 2 {
                        let bij = is_bijective_mod_n(&f, 2, p, k, LIMIT).unwrap().is_holds();
                        if bij != v.is_holds() {
                            failures.push(format!(
                                "p={p} k={k} {src}: balanced {} vs bijective {bij}",
                                v.is_holds()
                            ));
                        }
                    }
                }
            }
        }
    }
    report(5, "multivariate balancedness census", &failures);
}

#[test]
fn a06_preimage_decomposes_into_exact_cosets() {
    let mut failures = Vec::new();
    let f = parse("[x1 + x2]").unwrap();
    for p in [2u64, 3] {
        for k in 1..=3u32 {
            for s in 1..=k {
                let p_s = p.pow(s);
                let p_k = p.pow(k);
                for b in 0..p_k {
                    let reps = match preimage_ball_decomposition(&f, 2, 1, p, &[b], s, k, LIMIT) {
                        Ok(reps) => reps,
                        Err(e) => {
                            failures.push(format!("p={p} k={k} s={s} b={b}: {e}"));
                            continue;
                        }
                    };
                    if reps.len() as u64 != p_s {
                        failures.push(format!("p={p} k={k} s={s} b={b}: {} cosets", reps.len()));
                        continue;
                    }
                    let mut sorted = reps.clone();
                    sorted.dedup();
                    if sorted.len() != reps.len() {
                        failures.push(format!("p={p} k={k} s={s} b={b}: cosets not disjoint"));
                    }
                    // union must equal the enumerated preimage
                    for x in 0..p_k {
                        for y in 0..p_k {
                            let in_preimage = (x + y) % p_s == b % p_s;
                            let in_cosets = reps.contains(&vec![x % p_s, y % p_s]);
                            if in_preimage != in_cosets {
                                failures.push(format!(
                                    "p={p} k={k} s={s} b={b}: point ({x},{y}) preimage {in_preimage} vs cosets {in_cosets}"
                                ));
                            }
                        }
                    }
                }
            }
        }
    }
    report(6, "preimage decomposition into p^s(n-m) cosets", &failures);
}

#[test]
fn a07_measure_preserving_maps_are_isometries() {
    let mut failures = Vec::new();
    let corpus = ["x+1", "5*x+3", "x + 2*x^2", "mahler2(3, 1)", "xor(x, 5)"];
    for (idx, src) in corpus.iter().enumerate() {
        let f = parse(src).unwrap();
        match isometry_check(&f, 2, 12, 500, 0x150_0000 + idx as u64, LIMIT) {
            Ok(v) if v.is_holds() => {}
            Ok(v) => failures.push(format!("{src}: violation {:?}", v.witness)),
            Err(e) => failures.push(format!("{src}: {e}")),
        }
    }
    report(7, "valuation preservation on 500 sampled pairs", &failures);
}

#[test]
fn a08_full_period_generator_audits() {
    let mut failures = Vec::new();
    let f = parse("5*x+3").unwrap();
    let period = audit_period(&f, 16, LIMIT).unwrap();
    if !period.is_holds() {
        failures.push(format!("period audit: {:?}", period.witness));
    } else if period.witness.as_ref().unwrap()["period"] != 65536 {
        failures.push("period is not exactly 65536".into());
    }
    for j in 1..=8u32 {
        let eq = audit_equidistribution(&f, 16, j, LIMIT).unwrap();
        if !eq.is_holds() {
            failures.push(format!("equidistribution j={j}: {:?}", eq.witness));
        } else if eq.witness.as_ref().unwrap()["count_each"] != (1u64 << (16 - j)) {
            failures.push(format!("equidistribution j={j}: wrong count"));
        }
    }
    match Generator::new(
        GeneratorConfig {
            f: parse("3*x+1").unwrap(),
            width: 8,
            policy: OutputPolicy::FullWord,
            seed: 0,
        },
        LIMIT,
    ) {
        Err(padic::Error::ConfigRejected(_)) => {}
        other => failures.push(format!("3x+1 must be refused, got {other:?}")),
    }
    report(8, "generator period, equidistribution, and gate", &failures);
}

#[test]
fn a09_mahler_round_trip_and_derivative_on_random_polynomials() {
    let mut failures = Vec::new();
    let precision = 6u32;
    for p in [2u64, 3, 5] {
        let ctx = PadicContext::new(p, precision).unwrap();
        let span = p.pow(precision);
        // C(x, i) table once per prime
        let max_count = 7usize;
        let binomials: Vec<Vec<u64>> = (0..span)
            .map(|x| {
                (0..max_count as u64)
                    .map(|i| {
                        binomial_at(&ctx.int(x as i64), i)
                            .unwrap()
                            .residue()
                            .to_u64()
                            .unwrap()
                    })
                    .collect()
            })
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(0x9000 + p);
        for case in 0..100 {
            let degree = rng.gen_range(0..=5usize);
            let coeffs: Vec<i64> = (0..=degree).map(|_| rng.gen_range(-10_000..10_000)).collect();
            let f = poly(coeffs.clone());
            let count = degree + 1;
            let a: Vec<u64> = mahler_coefficients(&f, &ctx, count)
                .unwrap()
                .iter()
                .map(|c| c.to_u64().unwrap())
                .collect();
            for x in 0..span {
                let direct = evaluate(&f, &ctx.int(x as i64))
                    .unwrap()
                    .residue()
                    .to_u64()
                    .unwrap();
                let mut acc: u128 = 0;
                for (i, ai) in a.iter().enumerate() {
                    acc += *ai as u128 * binomials[x as usize][i] as u128;
                }
                if (acc % span as u128) as u64 != direct {
                    failures.push(format!("p={p} case={case} x={x}: Mahler re-evaluation mismatch"));
                    break;
                }
            }
            // derivative: quotient route vs independently computed symbolic
            let y = ctx.int(rng.gen_range(0..span as i64));
            let quotient = derivative_at_quotient(&f, &y).unwrap();
            let mut symbolic = ctx.zero();
            for (i, c) in coeffs.iter().enumerate().skip(1).rev() {
                let term = ctx.int(*c * i as i64);
                symbolic = symbolic.mul(&y).unwrap().add(&term).unwrap();
            }
            if quotient != symbolic {
                failures.push(format!("p={p} case={case}: derivative mismatch at {y:?}"));
            }
        }
    }
    report(9, "Mahler round-trip and derivative agreement", &failures);
}

#[test]
fn a10_closed_form_constructor_is_ergodic() {
    let mut failures = Vec::new();
    for p in [2u64, 3, 5] {
        let k_max = max_level_with_states(p, 1 << 16);
        let mut rng = ChaCha8Rng::seed_from_u64(0xc105_ed00 + p);
        let coeff_bound = p.pow(4) as i64;
        for case in 0..50 {
            let v: Vec<i64> = (0..=rng.gen_range(0..=4usize))
                .map(|_| rng.gen_range(-coeff_bound..coeff_bound))
                .collect();
            let f = FunctionSpec::ClosedFormErgodic(Box::new(poly(v.clone())));
            if !ergodic_verdict_fast(&f, p, LIMIT).unwrap().is_holds() {
                failures.push(format!("p={p} case={case} v={v:?}: fast verdict failed"));
                continue;
            }
            let brute = ergodic_verdict_bruteforce(&f, p, k_max, LIMIT).unwrap();
            if !brute.is_holds() {
                failures.push(format!(
                    "p={p} case={case} v={v:?}: brute force failed at {:?}",
                    brute.witness
                ));
            }
        }
    }
    report(10, "closed-form constructor always ergodic", &failures);
}

#[test]
fn a11_rational_polynomial_ergodicity_cases() {
    let mut failures = Vec::new();

    let half_pochhammer = qp_polynomial_ergodic(&[(0, 1), (-1, 2), (1, 2)], 2, LIMIT).unwrap();
    if half_pochhammer.is_holds() {
        failures.push("(x^2 - x)/2 must fail".into());
    } else {
        let w = half_pochhammer.witness.unwrap();
        if w["integral"] != true || w["bijective"] != false {
            failures.push(format!("(x^2 - x)/2: unexpected witness {w}"));
        }
    }

    let shift = qp_polynomial_ergodic(&[(1, 1), (1, 1)], 2, LIMIT).unwrap();
    if !shift.is_holds() {
        failures.push("x + 1 must hold".into());
    }

    let halving = qp_polynomial_ergodic(&[(0, 1), (1, 2)], 2, LIMIT).unwrap();
    if halving.is_holds() {
        failures.push("x/2 must fail".into());
    } else {
        let w = halving.witness.unwrap();
        if w["integral"] != false || w["point"] != 1 {
            failures.push(format!("x/2: expected integrality witness at 1, got {w}"));
        }
    }

    report(11, "rational polynomial ergodicity", &failures);
}

#[test]
fn a12_mahler_pattern_discrepancy_is_documented() {
    // the executable note lives in tests/mahler_note.rs; this asserts the
    // same resolution facts as part of the gate
    let mut failures = Vec::new();
    let f = parse("5*x+3").unwrap();
    if !is_transitive_mod(&f, 2, 3, LIMIT).unwrap().is_holds() {
        failures.push("5x+3 must be a single cycle mod 8".into());
    }
    let v = check_ergodic_mahler_2adic(&f, 8, 8, LIMIT).unwrap();
    let w = v.witness.clone().unwrap();
    if w["a0"] != "3" {
        failures.push(format!("a0 must be 3, got {}", w["a0"]));
    }
    if !v.is_holds() {
        failures.push("i >= 2 divisibility pattern must hold for 5x+3".into());
    }
    if w["oracle_critical_level"] != "holds" {
        failures.push("authoritative verdict must be holds".into());
    }
    report(12, "Mahler constant-term discrepancy note", &failures);
}
