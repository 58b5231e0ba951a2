//! Outcome of a criterion check, with witnessing data and the JSON shape
//! shared by the library and the CLI reports.

use std::time::Instant;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VerdictStatus {
    Holds,
    Fails,
    Inconclusive,
}

/// Result of one check: which levels were examined, whether the property
/// holds, and structured evidence on failure (counterexample residue, cycle
/// count, criterion values).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Verdict {
    pub check: String,
    pub p: u64,
    pub levels: Vec<u32>,
    pub status: VerdictStatus,
    pub witness: Option<serde_json::Value>,
    pub elapsed_ms: f64,
}

impl Verdict {
    pub fn is_holds(&self) -> bool {
        self.status == VerdictStatus::Holds
    }

    pub(crate) fn finish(
        check: &str,
        p: u64,
        levels: Vec<u32>,
        status: VerdictStatus,
        witness: Option<serde_json::Value>,
        started: Instant,
    ) -> Self {
        Verdict {
            check: check.to_string(),
            p,
            levels,
            status,
            witness,
            elapsed_ms: started.elapsed().as_secs_f64() * 1e3,
        }
    }
}

/// Applicability thresholds of the analytic sphere criterion.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Thresholds {
    pub r_min: u32,
}

/// Trace of the analytic sphere-ergodicity criterion: the value of f at the
/// center, the derivative there, and its multiplicative order modulo p^2.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CriterionTrace {
    /// (level, residue): f(y) modulo p^level.
    pub f_at_y_mod: (u32, u64),
    pub fprime_mod_p2: u64,
    /// Multiplicative order of f'(y) modulo p^2; 0 when f'(y) is not a unit.
    pub order: u64,
    /// For odd p: f'(y) generates the units modulo p^2. For p = 2: the
    /// congruence f'(y) = 1 mod 4 holds.
    pub primitive: bool,
    pub thresholds: Thresholds,
}

/// Verdict of a sphere check; the trace is present whenever the analytic
/// path ran.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SphereVerdict {
    #[serde(flatten)]
    pub verdict: Verdict,
    #[serde(flatten)]
    pub trace: Option<CriterionTrace>,
}

impl SphereVerdict {
    pub fn is_holds(&self) -> bool {
        self.verdict.is_holds()
    }
}
