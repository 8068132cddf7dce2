//! Digitizing scores with a cutoff, and choosing that cutoff.
//!
//! Three strategies are provided: the naive cutoff from class averages, an
//! exhaustive equidistant grid, and a coarse grid followed by an adaptive-step
//! walk. The latter two maximize a [`QualityMetric`] of the predictions against
//! the truth vector; they are written against the [`Objective`] trait so the
//! same search can be run on any `cutoff -> quality` function.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::metrics::{Confusion, QualityMetric};

/// Scores `s(x, T)` of the classified objects and their true states.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVector {
    scores: Vec<f64>,
    truth: Vec<bool>,
}

impl ScoreVector {
    pub fn new(scores: Vec<f64>, truth: Vec<bool>) -> Result<Self> {
        if scores.len() != truth.len() {
            return Err(Error::DimensionMismatch {
                expected: truth.len(),
                found: scores.len(),
            });
        }
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(Error::Invariant("non-finite score".into()));
        }
        Ok(ScoreVector { scores, truth })
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn truth(&self) -> &[bool] {
        &self.truth
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    fn require_both_classes(&self) -> Result<()> {
        let pos = self.truth.iter().filter(|&&t| t).count();
        if pos == 0 || pos == self.truth.len() {
            return Err(Error::SingleClassTruth);
        }
        Ok(())
    }
}

/// `F(x, T, C) = [s(x, T) >= C]` for every object.
pub fn predict(scores: &ScoreVector, c: f64) -> Vec<bool> {
    scores.scores.iter().map(|&s| s >= c).collect()
}

/// Accuracy or kappa of `pred` against `truth`.
pub fn quality(pred: &[bool], truth: &[bool], q: QualityMetric) -> Result<f64> {
    if truth.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(Confusion::from_predictions(pred, truth)?.quality(q))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NaiveMode {
    /// `(Av¹ - Av⁰) / 2`
    #[default]
    HalfDifference,
    /// `(Av¹ + Av⁰) / 2`
    Midpoint,
}

/// The naive cutoff `(av1 - av0) / 2`. Callers with `av1 < av0` are expected to
/// invert predictions first.
pub fn naive_cutoff(av1: f64, av0: f64) -> f64 {
    naive_cutoff_with(av1, av0, NaiveMode::HalfDifference)
}

pub fn naive_cutoff_with(av1: f64, av0: f64, mode: NaiveMode) -> f64 {
    match mode {
        NaiveMode::HalfDifference => (av1 - av0) / 2.0,
        NaiveMode::Midpoint => (av1 + av0) / 2.0,
    }
}

/// A quality function of the cutoff.
pub trait Objective {
    fn eval(&mut self, c: f64) -> f64;
}

impl<F: FnMut(f64) -> f64> Objective for F {
    fn eval(&mut self, c: f64) -> f64 {
        self(c)
    }
}

/// `C -> Q(F(C), S)` for a fixed score vector, evaluated in `O(log m)` from
/// per-class sorted scores.
#[derive(Debug, Clone)]
pub struct CutoffObjective {
    pos: Vec<f64>,
    neg: Vec<f64>,
    metric: QualityMetric,
    inverted: bool,
}

impl CutoffObjective {
    /// With `inverted`, an object is predicted positive iff `score < C`.
    pub fn new(scores: &ScoreVector, metric: QualityMetric, inverted: bool) -> Self {
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        for (&s, &t) in scores.scores.iter().zip(&scores.truth) {
            if t {
                pos.push(s);
            } else {
                neg.push(s);
            }
        }
        pos.sort_by(f64::total_cmp);
        neg.sort_by(f64::total_cmp);
        CutoffObjective {
            pos,
            neg,
            metric,
            inverted,
        }
    }

    pub fn confusion(&self, c: f64) -> Confusion {
        let at_least = |v: &[f64]| (v.len() - v.partition_point(|&s| s < c)) as u64;
        let (p, n) = (self.pos.len() as u64, self.neg.len() as u64);
        let (mut tp, mut fp) = (at_least(&self.pos), at_least(&self.neg));
        if self.inverted {
            tp = p - tp;
            fp = n - fp;
        }
        Confusion::new(tp, fp, n - fp, p - tp)
    }
}

impl Objective for CutoffObjective {
    fn eval(&mut self, c: f64) -> f64 {
        self.confusion(c).quality(self.metric)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CutoffResult {
    pub c_opt: f64,
    pub q_opt: f64,
    /// Every in-range `(C, Q)` pair evaluated, in evaluation order.
    pub curve: Vec<(f64, f64)>,
    /// Number of objective evaluations, including any outside `[0, 1]`.
    pub evaluations: usize,
}

/// Maximizes `obj` over `{0, 1/(n-1), ..., 1}`; ties go to the smallest `C`.
pub fn grid_search<O: Objective + ?Sized>(obj: &mut O, n_grid: usize) -> Result<CutoffResult> {
    if n_grid < 2 {
        return Err(Error::Config(format!(
            "grid needs at least 2 points, got {n_grid}"
        )));
    }
    let step = 1.0 / (n_grid - 1) as f64;
    let mut curve = Vec::with_capacity(n_grid);
    let (mut c_opt, mut q_opt) = (0.0, f64::NEG_INFINITY);
    for k in 0..n_grid {
        let c = if k == n_grid - 1 {
            1.0
        } else {
            k as f64 * step
        };
        let q = obj.eval(c);
        if q > q_opt {
            (c_opt, q_opt) = (c, q);
        }
        curve.push((c, q));
    }
    Ok(CutoffResult {
        c_opt,
        q_opt,
        curve,
        evaluations: n_grid,
    })
}

/// Exhaustive equidistant grid over `[0, 1]`.
pub fn grid_cutoff(scores: &ScoreVector, q: QualityMetric, n_grid: usize) -> Result<CutoffResult> {
    scores.require_both_classes()?;
    grid_search(&mut CutoffObjective::new(scores, q, false), n_grid)
}

/// How out-of-range conditions steer the adaptive walk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WalkGuard {
    /// Turn back when the trial cutoff leaves `[0, 1]`.
    #[default]
    Position,
    /// Turn on `Q < 0` / `Q > 1`, applied before the slope rules.
    QualityValue,
}

/// Which point the adaptive walk reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WalkReport {
    /// Best in-range point seen, coarse grid included.
    #[default]
    Best,
    /// The final iterate.
    Last,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineOptions {
    pub n_steps: usize,
    pub epsilon: f64,
    pub max_iterations: usize,
    pub guard: WalkGuard,
    pub report: WalkReport,
}

impl Default for RefineOptions {
    fn default() -> Self {
        RefineOptions {
            n_steps: 10,
            epsilon: 1e-6,
            max_iterations: 10_000,
            guard: WalkGuard::Position,
            report: WalkReport::Best,
        }
    }
}

impl RefineOptions {
    pub fn new(n_steps: usize, epsilon: f64) -> Self {
        RefineOptions {
            n_steps,
            epsilon,
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_steps < 1 {
            return Err(Error::Config("n_steps must be at least 1".into()));
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return Err(Error::Config(format!(
                "epsilon must be > 0, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }
}

/// Coarse grid of `n_steps` cell centres `(k - 1/2) / n_steps`, then an
/// adaptive-step walk started at the left edge of the best cell.
///
/// The walk grows its step by 1.5 while `Q` does not decrease and reverses
/// with half the step when it does. It stops once successive `Q` values differ
/// by less than `epsilon`, or after `max_iterations` steps.
pub fn refine_search<O: Objective + ?Sized>(
    obj: &mut O,
    opts: &RefineOptions,
) -> Result<CutoffResult> {
    opts.validate()?;
    let n = opts.n_steps;
    let mut curve = Vec::new();
    let mut evaluations = 0;
    let mut best = (0.0, f64::NEG_INFINITY);
    let mut probe = |t: f64, curve: &mut Vec<(f64, f64)>, best: &mut (f64, f64)| {
        let q = obj.eval(t);
        evaluations += 1;
        if (0.0..=1.0).contains(&t) {
            curve.push((t, q));
            if q > best.1 {
                *best = (t, q);
            }
        }
        q
    };

    for k in 0..n {
        let c = (k as f64 + 0.5) / n as f64;
        probe(c, &mut curve, &mut best);
    }
    let c_coarse = best.0;
    let half = 1.0 / (2 * n) as f64;
    let t_a = (c_coarse - half).max(0.0);
    let t_b = (c_coarse + half).min(1.0);
    let mut sw = (t_b - t_a) / 100.0;

    let mut q_prev = probe(t_a, &mut curve, &mut best);
    let mut t_cur = t_a + sw;
    let mut q_cur = probe(t_cur, &mut curve, &mut best);
    for _ in 0..opts.max_iterations {
        if (q_cur - q_prev).abs() < opts.epsilon {
            break;
        }
        match opts.guard {
            WalkGuard::Position => {
                if t_cur < 0.0 {
                    sw = sw.abs() * 2.0;
                } else if t_cur > 1.0 {
                    sw = -sw.abs() * 2.0;
                } else if q_cur >= q_prev {
                    sw *= 1.5;
                } else {
                    sw = -sw / 2.0;
                }
            }
            WalkGuard::QualityValue => {
                if q_cur < 0.0 {
                    sw = sw.abs() * 2.0;
                }
                if q_cur > 1.0 {
                    sw = -sw.abs() * 2.0;
                }
                if q_cur >= q_prev {
                    sw *= 1.5;
                } else {
                    sw = -sw / 2.0;
                }
            }
        }
        q_prev = q_cur;
        t_cur += sw;
        q_cur = probe(t_cur, &mut curve, &mut best);
    }

    let (c_opt, q_opt) = match opts.report {
        WalkReport::Best => best,
        WalkReport::Last => (t_cur, q_cur),
    };
    Ok(CutoffResult {
        c_opt,
        q_opt,
        curve,
        evaluations,
    })
}

pub fn refined_cutoff(
    scores: &ScoreVector,
    q: QualityMetric,
    n_steps: usize,
    epsilon: f64,
) -> Result<CutoffResult> {
    scores.require_both_classes()?;
    refine_search(
        &mut CutoffObjective::new(scores, q, false),
        &RefineOptions::new(n_steps, epsilon),
    )
}

/// Cutoff selection strategy with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum CutoffStrategy {
    Naive(NaiveMode),
    Grid { n_grid: usize },
    Refined(RefineOptions),
    Fixed(f64),
}

impl Default for CutoffStrategy {
    fn default() -> Self {
        CutoffStrategy::Grid { n_grid: 101 }
    }
}

impl CutoffStrategy {
    pub fn name(&self) -> &'static str {
        match self {
            CutoffStrategy::Naive(NaiveMode::HalfDifference) => "naive",
            CutoffStrategy::Naive(NaiveMode::Midpoint) => "midpoint",
            CutoffStrategy::Grid { .. } => "grid",
            CutoffStrategy::Refined(_) => "refined",
            CutoffStrategy::Fixed(_) => "fixed",
        }
    }
}

impl fmt::Display for CutoffStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CutoffStrategy {
    type Err = Error;

    /// Strategy name with default parameters.
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "naive" => Ok(CutoffStrategy::Naive(NaiveMode::HalfDifference)),
            "midpoint" => Ok(CutoffStrategy::Naive(NaiveMode::Midpoint)),
            "grid" => Ok(CutoffStrategy::default()),
            "refined" => Ok(CutoffStrategy::Refined(RefineOptions::default())),
            other => match other.parse::<f64>() {
                Ok(c) => Ok(CutoffStrategy::Fixed(c)),
                Err(_) => Err(Error::Config(format!("unknown cutoff strategy {other:?}"))),
            },
        }
    }
}
