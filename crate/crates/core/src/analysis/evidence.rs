use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Condition a finite-horizon check speaks to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ConditionId {
    S,
    US,
    AS,
    UAS,
    #[serde(rename = "UNSTABLE")]
    Unstable,
    A1,
    A2,
    A3,
    A4,
    C1,
    C2,
    C3,
}

impl fmt::Display for ConditionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ConditionId::S => "S",
            ConditionId::US => "US",
            ConditionId::AS => "AS",
            ConditionId::UAS => "UAS",
            ConditionId::Unstable => "UNSTABLE",
            ConditionId::A1 => "A1",
            ConditionId::A2 => "A2",
            ConditionId::A3 => "A3",
            ConditionId::A4 => "A4",
            ConditionId::C1 => "C1",
            ConditionId::C2 => "C2",
            ConditionId::C3 => "C3",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Supported,
    Refuted,
    Inconclusive,
}

/// One finite-horizon verdict with the numbers behind it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceEntry {
    pub id: ConditionId,
    pub verdict: Verdict,
    pub horizon: [f64; 2],
    pub quantities: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub note: Option<String>,
}

impl EvidenceEntry {
    pub fn new(id: ConditionId, verdict: Verdict, horizon: [f64; 2]) -> Self {
        Self {
            id,
            verdict,
            horizon,
            quantities: BTreeMap::new(),
            note: None,
        }
    }

    pub fn with(mut self, name: &str, value: f64) -> Self {
        self.quantities.insert(name.to_string(), value);
        self
    }

    pub fn note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    pub fn is_supported(&self) -> bool {
        self.verdict == Verdict::Supported
    }

    pub fn quantity(&self, name: &str) -> Option<f64> {
        self.quantities.get(name).copied()
    }
}

/// Entries keyed by condition, so assembly order does not matter.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EvidenceReport {
    pub norm: String,
    pub horizon: [f64; 2],
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub strongest: Option<ConditionId>,
    pub entries: BTreeMap<ConditionId, EvidenceEntry>,
    pub disclaimer: String,
}

pub const DISCLAIMER: &str =
    "finite-horizon numerical evidence on sampled data; not a proof of the asymptotic conditions";

impl EvidenceReport {
    pub fn new(norm: &str, horizon: [f64; 2]) -> Self {
        Self {
            norm: norm.to_string(),
            horizon,
            strongest: None,
            entries: BTreeMap::new(),
            disclaimer: DISCLAIMER.to_string(),
        }
    }

    pub fn insert(&mut self, entry: EvidenceEntry) {
        self.entries.insert(entry.id, entry);
    }

    pub fn get(&self, id: ConditionId) -> Option<&EvidenceEntry> {
        self.entries.get(&id)
    }

    pub fn verdict(&self, id: ConditionId) -> Option<Verdict> {
        self.get(id).map(|e| e.verdict)
    }

    pub fn all_supported(&self) -> bool {
        self.entries.values().all(EvidenceEntry::is_supported)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Thresholds of the finite-horizon heuristics.
#[derive(Debug, Clone, PartialEq)]
pub struct Heuristics {
    /// Quadrature tolerance for the integrals behind every check.
    pub tol: f64,
    /// Convergence: the second-half increment must be at most `max(tail_abs, tail_rel * I(T))`.
    pub tail_rel: f64,
    pub tail_abs: f64,
    /// Divergence to -inf: `J(T) <= doubling * J(mid) < 0`.
    pub doubling: f64,
    /// Disturbance ratio ceiling at the end of the horizon.
    pub ratio_max: f64,
    /// Fraction of the horizon (at its end) sampled for sign checks.
    pub tail_window: f64,
    /// Geometric grid density for ratio checks.
    pub per_decade: usize,
    /// Uniform grid intervals for sampled checks over the whole horizon.
    pub grid_intervals: usize,
    /// A1 is checked on at least `[t0, t0 + a1_min_horizon]`.
    pub a1_min_horizon: f64,
    /// Sign tolerance: `mu <= sign_slack` counts as non-positive.
    pub sign_slack: f64,
}

impl Default for Heuristics {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            tail_rel: 0.01,
            tail_abs: 1e-6,
            doubling: 2.0,
            ratio_max: 0.05,
            tail_window: 0.2,
            per_decade: 64,
            grid_intervals: 256,
            a1_min_horizon: 1e4,
            sign_slack: 1e-12,
        }
    }
}

impl Heuristics {
    /// Doubling test for `J -> -inf` given the running integral at the
    /// midpoint and the end of the horizon.
    pub fn divergence_verdict(&self, j_mid: f64, j_end: f64) -> Verdict {
        let slack = 1e-9 * j_end.abs();
        if self.doubling * j_mid < 0.0 && j_end <= self.doubling * j_mid + slack {
            Verdict::Supported
        } else if j_end - j_mid >= 0.0 {
            Verdict::Refuted
        } else {
            Verdict::Inconclusive
        }
    }

    /// Cauchy-tail test for a convergent non-negative integral.
    pub fn tail_converges(&self, i_mid: f64, i_end: f64) -> bool {
        i_end - i_mid <= self.tail_abs.max(self.tail_rel * i_end)
    }

    /// Uniform grid of `grid_intervals + 1` points on `[a, b]`.
    pub fn uniform_grid(&self, a: f64, b: f64) -> Vec<f64> {
        uniform(a, b, self.grid_intervals)
    }

    /// Geometric grid on `[lo, hi]` with `per_decade` points per decade
    /// (uniform when `lo <= 0`).
    pub fn geometric_grid(&self, lo: f64, hi: f64) -> Vec<f64> {
        if lo <= 0.0 || hi <= lo {
            return uniform(lo, hi, self.per_decade.max(1));
        }
        let decades = (hi / lo).log10();
        let count = ((self.per_decade as f64 * decades).ceil() as usize).max(1);
        let ratio = (hi / lo).powf(1.0 / count as f64);
        let mut g: Vec<f64> = (0..=count).map(|i| lo * ratio.powi(i as i32)).collect();
        g[count] = hi;
        g
    }
}

pub(crate) fn uniform(a: f64, b: f64, intervals: usize) -> Vec<f64> {
    let mut g: Vec<f64> = (0..=intervals)
        .map(|i| a + (b - a) * i as f64 / intervals as f64)
        .collect();
    g[intervals] = b;
    g
}
