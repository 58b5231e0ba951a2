//! CLI binding for the padic library. Every subcommand is a thin wrapper:
//! parse flags, call library operations, serialize the verdicts.
//!
//! Exit codes: 0 all requested checks hold; 1 some check fails (or a
//! generator config is refused); 2 usage, parse, or evaluation errors;
//! 3 a fast criterion disagrees with the exhaustive oracle, which is a
//! library bug rather than a user error.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use padic::prng::{audit_equidistribution, audit_period, Generator, GeneratorConfig, OutputPolicy};
use padic::residue::{
    affine_transitivity, critical_level, cycle_structure, ergodic_verdict_bruteforce,
    ergodic_verdict_fast, measure_preserving_verdict, multivariate_mp_verdict,
    DEFAULT_STATE_LIMIT,
};
use padic::sphere::{sphere_ergodic_bruteforce, sphere_ergodic_criterion, Sphere};
use padic::{evaluate_multi, parse, FunctionSpec, PadicContext, Verdict};

#[derive(Parser)]
#[command(name = "padic", version, about = "Analysis of compatible p-adic maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum CheckMode {
    Ergodic,
    Mp,
    Balanced,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a function at a point; prints the value and its digits
    Eval {
        #[arg(long = "fn")]
        func: String,
        #[arg(long)]
        p: u64,
        #[arg(long)]
        prec: u32,
        /// Evaluation point; comma-separated integers for multivariate maps
        #[arg(long, allow_hyphen_values = true)]
        at: String,
    },
    /// Decide ergodicity, measure preservation, or balancedness up to a level
    Check {
        #[arg(long = "fn")]
        func: String,
        #[arg(long)]
        p: u64,
        #[arg(long, value_enum)]
        mode: CheckMode,
        #[arg(long)]
        kmax: u32,
        /// Also run the single-level criterion (ergodic mode only); a
        /// disagreement with the oracle exits 3
        #[arg(long)]
        fast: bool,
        /// Domain dimension for balanced mode (default: inferred)
        #[arg(long)]
        arity: Option<u32>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cycle decomposition of the induced permutation, as CSV
    Cycles {
        #[arg(long = "fn")]
        func: String,
        #[arg(long)]
        p: u64,
        #[arg(long)]
        k: u32,
        /// Write the CSV here instead of stdout
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Sphere invariance and ergodicity checks
    Sphere {
        #[arg(long = "fn")]
        func: String,
        #[arg(long)]
        p: u64,
        #[arg(long, allow_negative_numbers = true)]
        center: i64,
        #[arg(long)]
        r: u32,
        /// Exhaustive sweep limit (default r+4)
        #[arg(long)]
        kmax: Option<u32>,
        /// Also run the analytic criterion; a non-advisory disagreement
        /// with the sweep exits 3
        #[arg(long)]
        analytic: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Stream generator bytes, or audit period and equidistribution
    Gen {
        #[arg(long = "fn")]
        func: String,
        #[arg(long)]
        width: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        count: u64,
        /// full | high:J | low:J
        #[arg(long, default_value = "full")]
        policy: String,
        #[arg(long)]
        audit: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Serialize)]
struct RunReport {
    command: String,
    config: serde_json::Value,
    verdicts: Vec<serde_json::Value>,
    elapsed_ms: f64,
}

enum Outcome {
    AllHold,
    SomeFail,
    Mismatch,
}

fn state_limit() -> u64 {
    std::env::var("PADIC_STATE_LIMIT")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(DEFAULT_STATE_LIMIT)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command_echo: Vec<String> = std::env::args().collect();
    match run(cli.command, command_echo.join(" ")) {
        Ok(Outcome::AllHold) => ExitCode::from(0),
        Ok(Outcome::SomeFail) => ExitCode::from(1),
        Ok(Outcome::Mismatch) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command, echo: String) -> padic::Result<Outcome> {
    let limit = state_limit();
    match command {
        Command::Eval { func, p, prec, at } => cmd_eval(&func, p, prec, &at),
        Command::Check {
            func,
            p,
            mode,
            kmax,
            fast,
            arity,
            out,
        } => cmd_check(&func, p, mode, kmax, fast, arity, out, limit, echo),
        Command::Cycles { func, p, k, csv } => cmd_cycles(&func, p, k, csv, limit),
        Command::Sphere {
            func,
            p,
            center,
            r,
            kmax,
            analytic,
            out,
        } => cmd_sphere(&func, p, center, r, kmax, analytic, out, limit, echo),
        Command::Gen {
            func,
            width,
            seed,
            count,
            policy,
            audit,
            out,
        } => cmd_gen(&func, width, seed, count, &policy, audit, out, limit, echo),
    }
}

fn cmd_eval(func: &str, p: u64, prec: u32, at: &str) -> padic::Result<Outcome> {
    let f = parse(func)?;
    let ctx = PadicContext::new(p, prec)?;
    let points: Vec<i64> = at
        .split(',')
        .map(|s| {
            s.trim().parse::<i64>().map_err(|_| padic::Error::Parse {
                pos: 0,
                msg: format!("invalid evaluation point '{s}'"),
            })
        })
        .collect::<padic::Result<_>>()?;
    let args: Vec<_> = points.iter().map(|v| ctx.int(*v)).collect();
    let outputs = evaluate_multi(&f, &args)?;
    for value in outputs {
        println!("{}", value.residue());
        println!("digits: {:?}", value.digits());
    }
    Ok(Outcome::AllHold)
}

fn emit_report(report: &RunReport, out: Option<PathBuf>) -> padic::Result<()> {
    let text = serde_json::to_string_pretty(report).expect("report serializes");
    match out {
        Some(path) => std::fs::write(path, text).map_err(io_error)?,
        None => println!("{text}"),
    }
    Ok(())
}

fn io_error(e: std::io::Error) -> padic::Error {
    padic::Error::NotApplicable(format!("io error: {e}"))
}

fn verdict_json(v: &Verdict) -> serde_json::Value {
    serde_json::to_value(v).expect("verdict serializes")
}

#[allow(clippy::too_many_arguments)]
fn cmd_check(
    func: &str,
    p: u64,
    mode: CheckMode,
    kmax: u32,
    fast: bool,
    arity: Option<u32>,
    out: Option<PathBuf>,
    limit: u64,
    echo: String,
) -> padic::Result<Outcome> {
    let started = Instant::now();
    let f = parse(func)?;
    if fast && mode != CheckMode::Ergodic {
        return Err(padic::Error::NotApplicable(
            "--fast applies to the ergodic mode only".into(),
        ));
    }
    let mut verdicts: Vec<Verdict> = Vec::new();
    match mode {
        CheckMode::Ergodic => {
            let oracle = ergodic_verdict_bruteforce(&f, p, kmax, limit)?;
            verdicts.push(oracle);
            if fast {
                verdicts.push(ergodic_verdict_fast(&f, p, limit)?);
                if let Some([alpha, beta]) = affine_coeffs(&f) {
                    verdicts.push(affine_transitivity(alpha, beta, p, critical_level(p)));
                }
            }
        }
        CheckMode::Mp => {
            verdicts.push(measure_preserving_verdict(&f, p, kmax, limit)?);
        }
        CheckMode::Balanced => {
            let m = f.co_arity();
            let n = arity.unwrap_or_else(|| f.arity().max(m));
            verdicts.push(multivariate_mp_verdict(&f, n, m, p, kmax, limit)?);
        }
    }
    let all_hold = verdicts.iter().all(|v| v.is_holds());
    let mismatch = verdicts.iter().any(|v| v.is_holds()) && !verdicts.iter().all(|v| v.is_holds());
    let report = RunReport {
        command: echo,
        config: serde_json::json!({
            "fn": f.to_string(),
            "p": p,
            "kmax": kmax,
            "mode": format!("{mode:?}").to_lowercase(),
            "fast": fast,
        }),
        verdicts: verdicts.iter().map(verdict_json).collect(),
        elapsed_ms: started.elapsed().as_secs_f64() * 1e3,
    };
    emit_report(&report, out)?;
    Ok(if mismatch {
        Outcome::Mismatch
    } else if all_hold {
        Outcome::AllHold
    } else {
        Outcome::SomeFail
    })
}

fn affine_coeffs(f: &FunctionSpec) -> Option<[u64; 2]> {
    let coeffs = f.as_poly()?;
    if coeffs.len() > 2 || coeffs.iter().any(|c| *c < 0) {
        return None;
    }
    Some([
        coeffs.first().copied().unwrap_or(0) as u64,
        coeffs.get(1).copied().unwrap_or(0) as u64,
    ])
}

fn cmd_cycles(
    func: &str,
    p: u64,
    k: u32,
    csv: Option<PathBuf>,
    limit: u64,
) -> padic::Result<Outcome> {
    let f = parse(func)?;
    let structure = cycle_structure(&f, p, k, limit)?;
    let text = structure.to_csv();
    match csv {
        Some(path) => std::fs::write(path, text).map_err(io_error)?,
        None => print!("{text}"),
    }
    Ok(Outcome::AllHold)
}

#[allow(clippy::too_many_arguments)]
fn cmd_sphere(
    func: &str,
    p: u64,
    center: i64,
    r: u32,
    kmax: Option<u32>,
    analytic: bool,
    out: Option<PathBuf>,
    limit: u64,
    echo: String,
) -> padic::Result<Outcome> {
    let started = Instant::now();
    let f = parse(func)?;
    let sphere = Sphere::new(p, center, r)?;
    let kmax = kmax.unwrap_or(r + 4);
    let brute = sphere_ergodic_bruteforce(&f, &sphere, kmax, limit)?;
    let mut verdicts = vec![verdict_json(&brute)];
    let mut mismatch = false;
    let mut all_hold = brute.is_holds();
    if analytic {
        match sphere_ergodic_criterion(&f, &sphere) {
            Ok(v) => {
                let advisory = v
                    .verdict
                    .witness
                    .as_ref()
                    .map(|w| w["advisory"] == true)
                    .unwrap_or(false);
                if v.is_holds() != brute.is_holds() && !advisory {
                    mismatch = true;
                }
                all_hold = all_hold && v.is_holds();
                verdicts.push(serde_json::to_value(&v).expect("verdict serializes"));
            }
            Err(padic::Error::NotApplicable(reason)) => {
                verdicts.push(serde_json::json!({
                    "check": "sphere_ergodic_criterion",
                    "status": "inconclusive",
                    "not_applicable": reason,
                }));
            }
            Err(e) => return Err(e),
        }
    }
    let report = RunReport {
        command: echo,
        config: serde_json::json!({
            "fn": f.to_string(),
            "p": p,
            "center": center,
            "r": r,
            "kmax": kmax,
            "analytic": analytic,
        }),
        verdicts,
        elapsed_ms: started.elapsed().as_secs_f64() * 1e3,
    };
    emit_report(&report, out)?;
    Ok(if mismatch {
        Outcome::Mismatch
    } else if all_hold {
        Outcome::AllHold
    } else {
        Outcome::SomeFail
    })
}

fn parse_policy(text: &str, width: u32) -> padic::Result<OutputPolicy> {
    let bad = |msg: String| padic::Error::ConfigRejected(msg);
    if text == "full" {
        return Ok(OutputPolicy::FullWord);
    }
    let (kind, bits) = text
        .split_once(':')
        .ok_or_else(|| bad(format!("policy '{text}' is not full, high:J, or low:J")))?;
    let j: u32 = bits
        .parse()
        .map_err(|_| bad(format!("policy width '{bits}' is not a number")))?;
    if j == 0 || j > width {
        return Err(bad(format!("policy width {j} out of range 1..={width}")));
    }
    match kind {
        "high" => Ok(OutputPolicy::HighBits(j)),
        "low" => Ok(OutputPolicy::LowBits(j)),
        other => Err(bad(format!("unknown policy '{other}'"))),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_gen(
    func: &str,
    width: u32,
    seed: u64,
    count: u64,
    policy: &str,
    audit: bool,
    out: Option<PathBuf>,
    limit: u64,
    echo: String,
) -> padic::Result<Outcome> {
    let started = Instant::now();
    let f = parse(func)?;
    let policy = parse_policy(policy, width.max(1))?;
    let config = GeneratorConfig {
        f: f.clone(),
        width,
        policy,
        seed,
    };
    match config.validate(limit) {
        Err(padic::Error::ConfigRejected(reason)) => {
            eprintln!("refused at validation: {reason}");
            return Ok(Outcome::SomeFail);
        }
        other => other?,
    }
    if audit {
        let mut verdicts = vec![verdict_json(&audit_period(&f, width, limit)?)];
        for j in 1..=width.min(8) {
            verdicts.push(verdict_json(&audit_equidistribution(&f, width, j, limit)?));
        }
        let all_hold = verdicts
            .iter()
            .all(|v| v["status"] == "holds");
        let report = RunReport {
            command: echo,
            config: serde_json::json!({
                "fn": f.to_string(),
                "width": width,
                "seed": seed,
            }),
            verdicts,
            elapsed_ms: started.elapsed().as_secs_f64() * 1e3,
        };
        emit_report(&report, out)?;
        return Ok(if all_hold {
            Outcome::AllHold
        } else {
            Outcome::SomeFail
        });
    }
    let mut generator = Generator::new(config, limit)?;
    let bytes = generator.stream_bytes(count)?;
    if generator.has_wrapped() {
        eprintln!("warning: stream is longer than the full period 2^{width}; output repeats");
    }
    match out {
        Some(path) => std::fs::write(path, bytes).map_err(io_error)?,
        None => {
            std::io::stdout().write_all(&bytes).map_err(io_error)?;
        }
    }
    Ok(Outcome::AllHold)
}
