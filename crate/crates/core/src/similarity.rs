//! Similarity of incidence vectors and aggregation over a training set.
//!
//! All values come from exact integer popcounts followed by a single division.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::predicates::IncidenceVector;

/// Coincidence index `H(x AND y) / H(x)`, or 0 when `H(x) = 0`.
///
/// Not symmetric: the denominator is the weight of `x`.
pub fn coincidence(x: &IncidenceVector, y: &IncidenceVector) -> Result<f64> {
    let both = x.and_weight(y)?;
    Ok(coincidence_from(both, x.weight()))
}

#[inline]
fn coincidence_from(both: u32, hx: u32) -> f64 {
    if hx == 0 {
        0.0
    } else {
        f64::from(both) / f64::from(hx)
    }
}

/// Cohen's kappa of two binary raters given by the bits of `x` and `y`.
///
/// When the chance agreement is 1 (both vectors constant) the formula is 0/0;
/// the result is then 1 for equal vectors and 0 otherwise.
pub fn kappa_bits(x: &IncidenceVector, y: &IncidenceVector) -> Result<f64> {
    let both = x.and_weight(y)?;
    if x.is_empty() {
        return Err(Error::Config("kappa of zero-length vectors".into()));
    }
    Ok(kappa_counts(
        x.len() as u64,
        u64::from(x.weight()),
        u64::from(y.weight()),
        u64::from(both),
    ))
}

/// Kappa from `s` positions, the two weights and the overlap.
pub(crate) fn kappa_counts(s: u64, hx: u64, hy: u64, both: u64) -> f64 {
    let agree = s + 2 * both - hx - hy;
    let chance = (s - hx) * (s - hy) + hx * hy;
    let total = s * s;
    if chance == total {
        return if agree == s { 1.0 } else { 0.0 };
    }
    // (accu - pe) / (1 - pe) with both scaled by s²
    (agree as f64 * s as f64 - chance as f64) / (total - chance) as f64
}

/// Cosine similarity of 0/1 vectors, 0 if either weight is 0.
pub fn cosine(x: &IncidenceVector, y: &IncidenceVector) -> Result<f64> {
    let both = x.and_weight(y)?;
    let (hx, hy) = (x.weight(), y.weight());
    if hx == 0 || hy == 0 {
        return Ok(0.0);
    }
    Ok(f64::from(both) / (f64::from(hx) * f64::from(hy)).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SimilarityFn {
    #[default]
    Coincidence,
    KappaBits,
    Cosine,
}

impl SimilarityFn {
    pub fn eval(self, x: &IncidenceVector, y: &IncidenceVector) -> Result<f64> {
        match self {
            SimilarityFn::Coincidence => coincidence(x, y),
            SimilarityFn::KappaBits => kappa_bits(x, y),
            SimilarityFn::Cosine => cosine(x, y),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SimilarityFn::Coincidence => "coincidence",
            SimilarityFn::KappaBits => "kappa",
            SimilarityFn::Cosine => "cosine",
        }
    }
}

impl FromStr for SimilarityFn {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "coincidence" => Ok(SimilarityFn::Coincidence),
            "kappa" | "kappa_bits" => Ok(SimilarityFn::KappaBits),
            "cosine" => Ok(SimilarityFn::Cosine),
            other => Err(Error::Config(format!("unknown similarity {other:?}"))),
        }
    }
}

impl fmt::Display for SimilarityFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// `z_max` or `z_min`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Aggregator {
    #[default]
    Max,
    Min,
}

impl Aggregator {
    pub fn name(self) -> &'static str {
        match self {
            Aggregator::Max => "max",
            Aggregator::Min => "min",
        }
    }

    #[inline]
    fn improves(self, candidate: f64, incumbent: f64) -> bool {
        match self {
            Aggregator::Max => candidate > incumbent,
            Aggregator::Min => candidate < incumbent,
        }
    }
}

impl FromStr for Aggregator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "max" | "z_max" => Ok(Aggregator::Max),
            "min" | "z_min" => Ok(Aggregator::Min),
            other => Err(Error::Config(format!("unknown aggregator {other:?}"))),
        }
    }
}

impl fmt::Display for Aggregator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Aggregate score of `x` against a training set, with the position in `T`
/// of the first training vector attaining it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SetScore {
    pub score: f64,
    pub winner: usize,
}

/// `s(x, T)`: max (or min) of `f(x, y)` over `y in T`. Ties go to the first
/// attaining `y` in `T` order.
pub fn s_to_set(
    x: &IncidenceVector,
    train: &[IncidenceVector],
    f: SimilarityFn,
    agg: Aggregator,
) -> Result<SetScore> {
    let (first, rest) = train.split_first().ok_or(Error::EmptyTrainingSet)?;
    let mut best = SetScore {
        score: f.eval(x, first)?,
        winner: 0,
    };
    for (k, y) in rest.iter().enumerate() {
        let s = f.eval(x, y)?;
        if agg.improves(s, best.score) {
            best = SetScore {
                score: s,
                winner: k + 1,
            };
        }
    }
    Ok(best)
}

/// Indicator of similarity to negative objects on the complemented bits:
/// `max_y H(!x AND !y) / H(!x)`, 0 when `H(!x) = 0`.
pub fn s2_to_set(x: &IncidenceVector, train_negative: &[IncidenceVector]) -> Result<f64> {
    if train_negative.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let s = x.len() as u32;
    let not_x = s - x.weight();
    let mut best = 0.0f64;
    for y in train_negative {
        let both = x.and_weight(y)?;
        let neither = s + both - x.weight() - y.weight();
        best = best.max(coincidence_from(neither, not_x));
    }
    Ok(best)
}
