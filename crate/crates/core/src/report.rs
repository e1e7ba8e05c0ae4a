//! Verification reports shared by the model modules.

use serde::Serialize;

use crate::prob::{self, Backend, Prob};
use crate::quantum::{Outcome, SettingSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Si,
    NoSignalling,
    LcWitness,
    KernelNorm,
    Recovery,
}

/// Where the worst deviation of a check was found.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct WorstCase {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub settings: Option<Vec<SettingSpec>>,
    /// Second settings tuple for checks that compare two points.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alt_settings: Option<Vec<SettingSpec>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outcomes: Option<Vec<Outcome>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wing: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub check: CheckKind,
    pub pass: bool,
    pub max_deviation: f64,
    /// Backend-native text of `max_deviation` (`"n/d"` when exact).
    pub max_deviation_exact: String,
    pub worst_case: WorstCase,
    pub tolerance: f64,
    pub backend: Backend,
    pub points_checked: usize,
    /// Grid points skipped because the conditioning label had zero mass there.
    #[serde(skip_serializing_if = "is_zero")]
    pub null_points: usize,
    /// Range of the single-wing conditionals seen by a no-signalling check.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub marginal_range: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

fn is_zero(v: &usize) -> bool {
    *v == 0
}

impl CheckReport {
    pub fn to_json_value(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("reports always serialize")
    }
}

/// Running maximum of a deviation together with where it occurred.
pub(crate) struct WorstTracker<P: Prob> {
    max: P,
    at: WorstCase,
    points: usize,
    null_points: usize,
}

impl<P: Prob> WorstTracker<P> {
    pub fn new() -> Self {
        WorstTracker {
            max: P::zero(),
            at: WorstCase::default(),
            points: 0,
            null_points: 0,
        }
    }

    /// Records a deviation; ties keep the first location seen.
    pub fn observe(&mut self, deviation: P, at: impl FnOnce() -> WorstCase) {
        self.points += 1;
        let deviation = deviation.abs();
        if self.points == 1 || deviation > self.max {
            self.at = at();
            self.max = prob::max_of(self.max.clone(), deviation);
        }
    }

    pub fn skip(&mut self) {
        self.null_points += 1;
    }

    pub fn finish(self, check: CheckKind) -> CheckReport {
        let tol = P::tolerance();
        CheckReport {
            check,
            pass: self.max <= tol,
            max_deviation: self.max.to_f64(),
            max_deviation_exact: self.max.encode(),
            worst_case: self.at,
            tolerance: tol.to_f64(),
            backend: P::BACKEND,
            points_checked: self.points,
            null_points: self.null_points,
            marginal_range: None,
            note: None,
        }
    }
}

/// Local-causality witness at one `(λ, settings, outcomes)` point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WitnessReport {
    pub check: CheckKind,
    /// `true` when the factorized product and the joint differ beyond tolerance.
    pub pass: bool,
    pub violated: bool,
    pub product: f64,
    pub joint: f64,
    pub product_exact: String,
    pub joint_exact: String,
    pub max_deviation: f64,
    pub worst_case: WorstCase,
    pub tolerance: f64,
    pub backend: Backend,
}
