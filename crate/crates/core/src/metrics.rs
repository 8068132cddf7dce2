//! Binary confusion counts and the quality measures derived from them.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::similarity::kappa_counts;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

impl Confusion {
    pub fn new(tp: u64, fp: u64, tn: u64, fn_: u64) -> Self {
        Confusion { tp, fp, tn, fn_ }
    }

    pub fn from_predictions(pred: &[bool], truth: &[bool]) -> Result<Self> {
        if pred.len() != truth.len() {
            return Err(Error::DimensionMismatch {
                expected: truth.len(),
                found: pred.len(),
            });
        }
        let mut c = Confusion::default();
        for (&p, &t) in pred.iter().zip(truth) {
            match (p, t) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, false) => c.tn += 1,
                (false, true) => c.fn_ += 1,
            }
        }
        Ok(c)
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    /// Fraction of coincident bits. NaN for an empty matrix.
    pub fn accuracy(&self) -> f64 {
        (self.tp + self.tn) as f64 / self.total() as f64
    }

    /// Cohen's kappa of prediction vs. truth. When chance agreement is 1 the
    /// result is 1 for identical raters and 0 otherwise.
    pub fn kappa(&self) -> f64 {
        let n = self.total();
        if n == 0 {
            return f64::NAN;
        }
        kappa_counts(n, self.tp + self.fp, self.tp + self.fn_, self.tp)
    }

    /// `TP / FP`, `+inf` when there are no false positives.
    pub fn tp_fp_ratio(&self) -> f64 {
        if self.fp == 0 {
            f64::INFINITY
        } else {
            self.tp as f64 / self.fp as f64
        }
    }

    pub fn quality(&self, q: QualityMetric) -> f64 {
        match q {
            QualityMetric::Accuracy => self.accuracy(),
            QualityMetric::Kappa => self.kappa(),
        }
    }
}

/// Statistic compared between the prediction and truth vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QualityMetric {
    Accuracy,
    #[default]
    Kappa,
}

impl QualityMetric {
    pub fn name(self) -> &'static str {
        match self {
            QualityMetric::Accuracy => "accuracy",
            QualityMetric::Kappa => "kappa",
        }
    }
}

impl FromStr for QualityMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "accuracy" | "acc" => Ok(QualityMetric::Accuracy),
            "kappa" => Ok(QualityMetric::Kappa),
            other => Err(Error::Config(format!("unknown quality metric {other:?}"))),
        }
    }
}

impl fmt::Display for QualityMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Formats a ratio the way result tables show it: one decimal, `inf` for
/// infinity.
pub fn format_ratio(r: f64) -> String {
    if r.is_infinite() {
        "inf".to_string()
    } else {
        format!("{r:.1}")
    }
}
