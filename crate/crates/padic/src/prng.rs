//! Full-period word generators from ergodic 2-adic maps.
//!
//! A transitive map modulo 2^K visits every K-bit state exactly once per
//! period, so the state stream has period exactly 2^K and exact
//! equidistribution at every width j <= K. Configs are gated on the
//! critical-level transitivity test (mod 8) before streaming; the audits
//! verify the period and the equidistribution exhaustively.
//!
//! Low bits of a compatible map cycle with period 2^j at width j, so the
//! high-bits policy is the better statistical choice; full-word output is
//! the default.

use std::time::Instant;

use crate::context::checked_states;
use crate::error::{Error, Result};
use crate::func::{eval_u64_scalar, FunctionSpec, SmallRing};
use crate::residue::is_transitive_mod;
use crate::verdict::{Verdict, VerdictStatus};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputPolicy {
    FullWord,
    HighBits(u32),
    LowBits(u32),
}

impl OutputPolicy {
    fn bits(&self, width: u32) -> u32 {
        match self {
            OutputPolicy::FullWord => width,
            OutputPolicy::HighBits(j) | OutputPolicy::LowBits(j) => *j,
        }
    }
}

#[derive(Clone, Debug)]
pub struct GeneratorConfig {
    pub f: FunctionSpec,
    /// State width in bits, 1..=63.
    pub width: u32,
    pub policy: OutputPolicy,
    pub seed: u64,
}

impl GeneratorConfig {
    pub fn output_bits(&self) -> u32 {
        self.policy.bits(self.width)
    }

    pub fn output_bytes(&self) -> usize {
        self.output_bits().div_ceil(8) as usize
    }

    /// Checks the structural invariants and the ergodicity gate: the map
    /// must be transitive modulo 8, the critical level at p = 2.
    pub fn validate(&self, max_states: u64) -> Result<()> {
        if self.width == 0 || self.width > 63 {
            return Err(Error::ConfigRejected(format!(
                "width {} out of range 1..=63",
                self.width
            )));
        }
        let j = self.output_bits();
        if j == 0 || j > self.width {
            return Err(Error::ConfigRejected(format!(
                "output width {j} out of range 1..={}",
                self.width
            )));
        }
        if self.seed >> self.width != 0 {
            return Err(Error::ConfigRejected(format!(
                "seed {} outside [0, 2^{})",
                self.seed, self.width
            )));
        }
        if self.f.arity() != 1 || self.f.co_arity() != 1 {
            return Err(Error::ConfigRejected("state map must be univariate".into()));
        }
        let gate = is_transitive_mod(&self.f, 2, 3, max_states)?;
        if !gate.is_holds() {
            return Err(Error::ConfigRejected(
                "map is not transitive modulo 8, stream would not have full period".into(),
            ));
        }
        Ok(())
    }
}

/// A validated generator; construction runs the config gate, so a live
/// generator always streams a full-period orbit.
#[derive(Clone, Debug)]
pub struct Generator {
    config: GeneratorConfig,
    ring: SmallRing,
    current: u64,
    emitted: u64,
}

impl Generator {
    pub fn new(config: GeneratorConfig, max_states: u64) -> Result<Self> {
        config.validate(max_states)?;
        let ring = SmallRing::new(2, config.width)?;
        let current = config.seed;
        Ok(Generator {
            config,
            ring,
            current,
            emitted: 0,
        })
    }

    pub fn config(&self) -> &GeneratorConfig {
        &self.config
    }

    pub fn state(&self) -> u64 {
        self.current
    }

    pub fn emitted(&self) -> u64 {
        self.emitted
    }

    /// True once more than 2^width words have been emitted: the full-period
    /// orbit has wrapped and the stream repeats from here.
    pub fn has_wrapped(&self) -> bool {
        self.emitted > 1u64 << self.config.width
    }

    /// Advances the state and returns the output word under the policy.
    pub fn next_word(&mut self) -> Result<u64> {
        self.current = eval_u64_scalar(&self.config.f, &self.ring, self.current)?;
        self.emitted += 1;
        let width = self.config.width;
        Ok(match self.config.policy {
            OutputPolicy::FullWord => self.current,
            OutputPolicy::HighBits(j) => self.current >> (width - j),
            OutputPolicy::LowBits(j) => self.current & ((1u64 << j) - 1),
        })
    }

    /// n_words outputs serialized little-endian, each padded to whole
    /// bytes.
    pub fn stream_bytes(&mut self, n_words: u64) -> Result<Vec<u8>> {
        let bytes_per_word = self.config.output_bytes();
        let mut out = Vec::with_capacity(n_words as usize * bytes_per_word);
        for _ in 0..n_words {
            let word = self.next_word()?;
            out.extend_from_slice(&word.to_le_bytes()[..bytes_per_word]);
        }
        Ok(out)
    }
}

/// Walks the orbit of 0 and confirms the first return happens at step
/// exactly 2^width.
pub fn audit_period(f: &FunctionSpec, width: u32, max_states: u64) -> Result<Verdict> {
    let started = Instant::now();
    let states = checked_states(2, width, max_states)?;
    let ring = SmallRing::new(2, width)?;
    let period = walk_period(f, &ring, states)?;
    let (status, witness) = match period {
        Some(t) if t == states => (
            VerdictStatus::Holds,
            Some(serde_json::json!({ "period": t })),
        ),
        Some(t) => (
            VerdictStatus::Fails,
            Some(serde_json::json!({ "period": t, "expected": states })),
        ),
        None => (
            VerdictStatus::Fails,
            Some(serde_json::json!({
                "period": serde_json::Value::Null,
                "expected": states,
                "note": "orbit did not return to the seed within 2^width steps",
            })),
        ),
    };
    Ok(Verdict::finish(
        "prng_period",
        2,
        vec![width],
        status,
        witness,
        started,
    ))
}

fn walk_period(f: &FunctionSpec, ring: &SmallRing, states: u64) -> Result<Option<u64>> {
    let seed = 0u64;
    let mut cursor = seed;
    for step in 1..=states {
        cursor = eval_u64_scalar(f, ring, cursor)?;
        if cursor == seed {
            return Ok(Some(step));
        }
    }
    Ok(None)
}

/// Walks one full period and counts the 2^j low-bit patterns; each must
/// occur exactly 2^(width - j) times. Reports the defective period when
/// the orbit is not full.
pub fn audit_equidistribution(
    f: &FunctionSpec,
    width: u32,
    j: u32,
    max_states: u64,
) -> Result<Verdict> {
    let started = Instant::now();
    if j == 0 || j > width {
        return Err(Error::Precision {
            requested: j,
            available: width,
        });
    }
    let states = checked_states(2, width, max_states)?;
    let ring = SmallRing::new(2, width)?;
    let mask = (1u64 << j) - 1;
    let mut counts = vec![0u64; 1 << j];
    let seed = 0u64;
    let mut cursor = seed;
    let mut period = None;
    for step in 1..=states {
        counts[(cursor & mask) as usize] += 1;
        cursor = eval_u64_scalar(f, &ring, cursor)?;
        if cursor == seed {
            period = Some(step);
            break;
        }
    }
    if period != Some(states) {
        return Ok(Verdict::finish(
            "prng_equidistribution",
            2,
            vec![width, j],
            VerdictStatus::Fails,
            Some(serde_json::json!({ "period": period, "expected_period": states })),
            started,
        ));
    }
    let expected = states >> j;
    let offender = counts.iter().position(|c| *c != expected);
    let (status, witness) = match offender {
        None => (
            VerdictStatus::Holds,
            Some(serde_json::json!({ "patterns": 1u64 << j, "count_each": expected })),
        ),
        Some(pattern) => (
            VerdictStatus::Fails,
            Some(serde_json::json!({
                "pattern": pattern,
                "count": counts[pattern],
                "expected": expected,
            })),
        ),
    };
    Ok(Verdict::finish(
        "prng_equidistribution",
        2,
        vec![width, j],
        status,
        witness,
        started,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::func::parse;
    use crate::residue::DEFAULT_STATE_LIMIT;

    const LIMIT: u64 = DEFAULT_STATE_LIMIT;

    fn config(src: &str, width: u32, policy: OutputPolicy, seed: u64) -> GeneratorConfig {
        GeneratorConfig {
            f: parse(src).unwrap(),
            width,
            policy,
            seed,
        }
    }

    #[test]
    fn stream_examples() {
        let mut g = Generator::new(config("5*x+3", 2, OutputPolicy::FullWord, 0), LIMIT).unwrap();
        let words: Vec<u64> = (0..5).map(|_| g.next_word().unwrap()).collect();
        assert_eq!(words, vec![3, 2, 1, 0, 3]);

        let mut counter =
            Generator::new(config("x+1", 3, OutputPolicy::FullWord, 5), LIMIT).unwrap();
        let words: Vec<u64> = (0..4).map(|_| counter.next_word().unwrap()).collect();
        assert_eq!(words, vec![6, 7, 0, 1]);

        let mut low = Generator::new(config("5*x+3", 2, OutputPolicy::LowBits(1), 0), LIMIT).unwrap();
        let words: Vec<u64> = (0..4).map(|_| low.next_word().unwrap()).collect();
        assert_eq!(words, vec![1, 0, 1, 0]);
    }

    #[test]
    fn byte_serialization() {
        let mut g = Generator::new(config("x+1", 8, OutputPolicy::FullWord, 0), LIMIT).unwrap();
        assert_eq!(g.stream_bytes(3).unwrap(), vec![0x01, 0x02, 0x03]);

        let mut h = Generator::new(config("5*x+3", 8, OutputPolicy::FullWord, 0), LIMIT).unwrap();
        assert_eq!(h.stream_bytes(2).unwrap(), vec![0x03, 0x12]);

        let mut empty = Generator::new(config("x+1", 8, OutputPolicy::FullWord, 0), LIMIT).unwrap();
        assert_eq!(empty.stream_bytes(0).unwrap(), Vec::<u8>::new());

        let mut wide = Generator::new(config("x+1", 16, OutputPolicy::FullWord, 255), LIMIT).unwrap();
        assert_eq!(wide.stream_bytes(2).unwrap(), vec![0x00, 0x01, 0x01, 0x01]);
    }

    #[test]
    fn validation_gate() {
        // 3x+1 is not transitive mod 8
        assert!(matches!(
            Generator::new(config("3*x+1", 8, OutputPolicy::FullWord, 0), LIMIT),
            Err(Error::ConfigRejected(_))
        ));
        assert!(matches!(
            Generator::new(config("x+1", 0, OutputPolicy::FullWord, 0), LIMIT),
            Err(Error::ConfigRejected(_))
        ));
        assert!(matches!(
            Generator::new(config("x+1", 4, OutputPolicy::HighBits(5), 0), LIMIT),
            Err(Error::ConfigRejected(_))
        ));
        assert!(matches!(
            Generator::new(config("x+1", 4, OutputPolicy::FullWord, 16), LIMIT),
            Err(Error::ConfigRejected(_))
        ));
    }

    #[test]
    fn period_examples() {
        assert!(audit_period(&parse("5*x+3").unwrap(), 16, LIMIT).unwrap().is_holds());
        assert!(audit_period(&parse("x+1").unwrap(), 8, LIMIT).unwrap().is_holds());

        let v = audit_period(&parse("3*x+1").unwrap(), 4, LIMIT).unwrap();
        assert_eq!(v.status, VerdictStatus::Fails);
        assert!(v.witness.unwrap()["period"].as_u64().unwrap() < 16);
    }

    #[test]
    fn equidistribution_examples() {
        let v = audit_equidistribution(&parse("5*x+3").unwrap(), 10, 3, LIMIT).unwrap();
        assert!(v.is_holds());
        assert_eq!(v.witness.unwrap()["count_each"], 128);

        assert!(audit_equidistribution(&parse("x+1").unwrap(), 4, 4, LIMIT)
            .unwrap()
            .is_holds());

        let w = audit_equidistribution(&parse("x+2").unwrap(), 4, 1, LIMIT).unwrap();
        assert_eq!(w.status, VerdictStatus::Fails);
    }

    #[test]
    fn high_bits_policy() {
        let mut g = Generator::new(config("5*x+3", 4, OutputPolicy::HighBits(2), 0), LIMIT).unwrap();
        // states: 3, 18 mod 16 = 2, 13, 68 mod 16 = 4 -> high 2 bits: 0, 0, 3, 1
        let words: Vec<u64> = (0..4).map(|_| g.next_word().unwrap()).collect();
        assert_eq!(words, vec![0, 0, 3, 1]);
    }

    #[test]
    fn determinism() {
        let mk = || Generator::new(config("mahler2(3, 1)", 12, OutputPolicy::FullWord, 7), LIMIT);
        let mut a = mk().unwrap();
        let mut b = mk().unwrap();
        assert_eq!(a.stream_bytes(64).unwrap(), b.stream_bytes(64).unwrap());
    }
}
