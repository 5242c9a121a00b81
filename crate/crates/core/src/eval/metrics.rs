use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::record::Outcome;

use super::EvalError;

/// Counts with exam failure as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub fn new(tp: u64, fp: u64, fn_: u64, tn: u64) -> Self {
        Self { tp, fp, fn_, tn }
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (Outcome, Outcome)>) -> Self {
        let mut cm = Self::default();
        for (predicted, actual) in pairs {
            cm.record(predicted, actual);
        }
        cm
    }

    pub fn record(&mut self, predicted: Outcome, actual: Outcome) {
        match (predicted, actual) {
            (Outcome::Fail, Outcome::Fail) => self.tp += 1,
            (Outcome::Fail, Outcome::Pass) => self.fp += 1,
            (Outcome::Pass, Outcome::Fail) => self.fn_ += 1,
            (Outcome::Pass, Outcome::Pass) => self.tn += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// Actual failures.
    pub fn positives(&self) -> u64 {
        self.tp + self.fn_
    }

    pub fn negatives(&self) -> u64 {
        self.tn + self.fp
    }
}

impl std::ops::Add for ConfusionMatrix {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self::new(self.tp + o.tp, self.fp + o.fp, self.fn_ + o.fn_, self.tn + o.tn)
    }
}

impl std::iter::Sum for ConfusionMatrix {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::default(), |a, b| a + b)
    }
}

/// Builds the matrix from per-student predictions and true outcomes, which
/// must cover the same students.
pub fn confusion(
    predicted: &BTreeMap<String, Outcome>,
    actual: &BTreeMap<String, Outcome>,
) -> Result<ConfusionMatrix, EvalError> {
    if let Some(id) = predicted
        .keys()
        .find(|k| !actual.contains_key(*k))
        .or_else(|| actual.keys().find(|k| !predicted.contains_key(*k)))
    {
        return Err(EvalError::IdMismatch(id.clone()));
    }
    Ok(ConfusionMatrix::from_pairs(
        predicted.iter().map(|(id, p)| (*p, actual[id])),
    ))
}

/// Derived scores; `None` marks a zero denominator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: Option<f64>,
    pub sensitivity: Option<f64>,
    pub precision: Option<f64>,
    pub specificity: Option<f64>,
    pub f_beta: Option<f64>,
    pub beta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricName {
    Accuracy,
    Sensitivity,
    Precision,
    Specificity,
    FBeta,
}

impl MetricName {
    pub const ALL: [MetricName; 5] = [
        MetricName::Accuracy,
        MetricName::Sensitivity,
        MetricName::Precision,
        MetricName::Specificity,
        MetricName::FBeta,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MetricName::Accuracy => "accuracy",
            MetricName::Sensitivity => "sensitivity",
            MetricName::Precision => "precision",
            MetricName::Specificity => "specificity",
            MetricName::FBeta => "f_beta",
        }
    }
}

impl fmt::Display for MetricName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MetricName {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| EvalError::UnknownMetric(s.to_string()))
    }
}

impl Metrics {
    pub fn get(&self, name: MetricName) -> Option<f64> {
        match name {
            MetricName::Accuracy => self.accuracy,
            MetricName::Sensitivity => self.sensitivity,
            MetricName::Precision => self.precision,
            MetricName::Specificity => self.specificity,
            MetricName::FBeta => self.f_beta,
        }
    }
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Weighted harmonic combination of sensitivity and precision; `beta > 1`
/// favours sensitivity.
pub fn f_beta(sensitivity: f64, precision: f64, beta: f64) -> Option<f64> {
    let b2 = beta * beta;
    let den = b2 * precision + sensitivity;
    (den > 0.0).then(|| (1.0 + b2) * sensitivity * precision / den)
}

pub fn metrics(cm: &ConfusionMatrix, beta: f64) -> Result<Metrics, EvalError> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(EvalError::InvalidBeta(beta));
    }
    if cm.total() == 0 {
        return Err(EvalError::EmptyMatrix);
    }
    let sensitivity = ratio(cm.tp, cm.tp + cm.fn_);
    let precision = ratio(cm.tp, cm.tp + cm.fp);
    Ok(Metrics {
        accuracy: ratio(cm.tp + cm.tn, cm.total()),
        sensitivity,
        precision,
        specificity: ratio(cm.tn, cm.tn + cm.fp),
        f_beta: sensitivity
            .zip(precision)
            .and_then(|(s, p)| f_beta(s, p, beta)),
        beta,
    })
}

/// Metrics of one model in one week.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub week: u32,
    pub model: String,
    pub metrics: Metrics,
}
