//! Trial-indexed Monte-Carlo results with deterministic serialization.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::Result;

/// One named quantity compared against a tolerance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub seed: u64,
    pub values: BTreeMap<String, f64>,
}

impl TrialRecord {
    pub fn new(trial: u64, seed: u64) -> Self {
        Self { trial, seed, values: BTreeMap::new() }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.values.insert(key.to_string(), value);
        self
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.values.get(key).copied()
    }
}

/// Maps keep sorted keys, so the JSON form is byte-stable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub master_seed: u64,
    pub config: BTreeMap<String, Value>,
    pub trials: Vec<TrialRecord>,
    pub summary: BTreeMap<String, Value>,
    pub checks: Vec<CheckOutcome>,
}

impl ExperimentReport {
    pub fn new(experiment: &str, master_seed: u64) -> Self {
        Self {
            experiment: experiment.to_string(),
            master_seed,
            config: BTreeMap::new(),
            trials: Vec::new(),
            summary: BTreeMap::new(),
            checks: Vec::new(),
        }
    }

    pub fn config(mut self, key: &str, value: impl Serialize) -> Self {
        self.config.insert(key.to_string(), serde_json::to_value(value).unwrap_or(Value::Null));
        self
    }

    pub fn set_summary(&mut self, key: &str, value: impl Serialize) {
        self.summary.insert(key.to_string(), serde_json::to_value(value).unwrap_or(Value::Null));
    }

    pub fn summary_f64(&self, key: &str) -> Option<f64> {
        self.summary.get(key).and_then(Value::as_f64)
    }

    /// Records `value <= tolerance` as a check.
    pub fn check_le(&mut self, name: &str, value: f64, tolerance: f64) -> bool {
        let passed = value <= tolerance;
        self.checks.push(CheckOutcome { name: name.to_string(), value, tolerance, passed, note: None });
        passed
    }

    pub fn check_flag(&mut self, name: &str, passed: bool, note: &str) -> bool {
        self.checks.push(CheckOutcome {
            name: name.to_string(),
            value: if passed { 0.0 } else { 1.0 },
            tolerance: 0.0,
            passed,
            note: Some(note.to_string()),
        });
        passed
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// Column of a per-trial value in trial order.
    pub fn column(&self, key: &str) -> Vec<f64> {
        self.trials.iter().filter_map(|t| t.get(key)).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Standard error of the mean (sample standard deviation over `sqrt(len)`).
pub fn std_error(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let mu = mean(xs);
    let var = xs.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (n - 1) as f64;
    (var / n as f64).sqrt()
}

pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len() / 2;
    if v.len() % 2 == 1 {
        v[k]
    } else {
        0.5 * (v[k - 1] + v[k])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_is_stable_and_round_trips() {
        let mut r = ExperimentReport::new("demo", 7).config("n", 12).config("atom", "rademacher");
        r.trials.push(TrialRecord::new(0, 99).with("s_n", 0.25).with("a", 1.0));
        r.set_summary("mean", 0.25);
        r.check_le("bound", 0.1, 0.2);
        let a = r.to_json().unwrap();
        assert_eq!(a, r.clone().to_json().unwrap());
        let back: ExperimentReport = serde_json::from_str(&a).unwrap();
        assert_eq!(back, r);
        assert!(a.find("\"atom\"").unwrap() < a.find("\"n\"").unwrap());
        assert!(r.passed());
    }

    #[test]
    fn statistics() {
        assert_eq!(mean(&[1.0, 2.0, 3.0]), 2.0);
        assert_eq!(median(&[3.0, 1.0, 2.0, 10.0]), 2.5);
        assert!((std_error(&[1.0, 3.0]) - 1.0).abs() < 1e-15);
        assert_eq!(std_error(&[5.0]), 0.0);
    }
}
