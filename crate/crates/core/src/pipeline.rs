//! End-to-end runs: scale, draw a training set of positives, score every other
//! object against it, choose a cutoff and predict. Also exact identification
//! by excess-set containment.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::io::Write;
use std::time::{Duration, Instant};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::cutoff::{
    grid_search, naive_cutoff_with, refine_search, CutoffObjective, CutoffResult, CutoffStrategy,
    ScoreVector,
};
use crate::error::{Error, Result};
use crate::ingest::Dataset;
use crate::metrics::{format_ratio, Confusion, QualityMetric};
use crate::predicates::{encode_dataset, IncidenceVector, PredicateConfig};
use crate::scale::{apply_scaling, fit_scaling, ScalingParams};
use crate::similarity::{s_to_set, Aggregator, SetScore, SimilarityFn};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Percentage of positive objects drawn into the training set, in (0, 100].
    pub p: f64,
    pub seed: u64,
    pub predicate: PredicateConfig,
    pub similarity: SimilarityFn,
    pub agg: Aggregator,
    pub cutoff: CutoffStrategy,
    pub q_metric: QualityMetric,
}

impl RunConfig {
    pub fn new(predicate: PredicateConfig) -> Self {
        RunConfig {
            p: 2.0,
            seed: 1,
            predicate,
            similarity: SimilarityFn::default(),
            agg: Aggregator::default(),
            cutoff: CutoffStrategy::default(),
            q_metric: QualityMetric::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > 0.0 && self.p <= 100.0) {
            return Err(Error::Config(format!(
                "p must be in (0, 100], got {}",
                self.p
            )));
        }
        if let CutoffStrategy::Fixed(c) = self.cutoff {
            if !(0.0..=1.0).contains(&c) {
                return Err(Error::Config(format!(
                    "fixed cutoff must be in [0, 1], got {c}"
                )));
            }
        }
        Ok(())
    }
}

/// Uniform integer in `[0, bound)` by rejection on the top of the `u64` range.
fn below(rng: &mut ChaCha8Rng, bound: u64) -> u64 {
    let zone = u64::MAX - u64::MAX % bound;
    loop {
        let v = rng.next_u64();
        if v < zone {
            return v % bound;
        }
    }
}

/// Fisher-Yates from the back, one `below` draw per position.
pub(crate) fn shuffle<T>(rng: &mut ChaCha8Rng, v: &mut [T]) {
    for i in (1..v.len()).rev() {
        let j = below(rng, i as u64 + 1) as usize;
        v.swap(i, j);
    }
}

/// Draws `ceil(|D¹| p / 100)` positive rows without repetition.
///
/// Positives are listed in dataset order and shuffled with a Fisher-Yates pass
/// driven by ChaCha8 seeded from `seed`; the first `k` are taken. The result
/// is returned in ascending row order, which is also the `T` order used for
/// tie-breaking between training objects.
pub fn select_training(d: &Dataset, p: f64, seed: u64) -> Result<Vec<usize>> {
    if !(p > 0.0 && p <= 100.0) {
        return Err(Error::Config(format!("p must be in (0, 100], got {p}")));
    }
    let mut pos: Vec<usize> = (0..d.m()).filter(|&i| d.labels()[i]).collect();
    if pos.is_empty() {
        return Err(Error::NoPositives);
    }
    let k = training_size(pos.len(), p);
    shuffle(&mut ChaCha8Rng::seed_from_u64(seed), &mut pos);
    pos.truncate(k);
    pos.sort_unstable();
    Ok(pos)
}

/// `ceil(n p / 100)`, computed so that exact products such as `50 * 20 / 100`
/// do not round up through floating-point noise.
pub fn training_size(n: usize, p: f64) -> usize {
    let raw = n as f64 * p / 100.0;
    let near = raw.round();
    let k = if (raw - near).abs() < 1e-9 {
        near
    } else {
        raw.ceil()
    };
    (k as usize).clamp(1, n)
}

/// Aggregate scores of `queries` against `train`, in query order.
pub fn score_all(
    queries: &[&IncidenceVector],
    train: &[IncidenceVector],
    f: SimilarityFn,
    agg: Aggregator,
) -> Result<Vec<SetScore>> {
    queries
        .par_iter()
        .map(|x| s_to_set(x, train, f, agg))
        .collect()
}

/// Everything needed to classify new objects.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub scaling: ScalingParams,
    pub predicate: PredicateConfig,
    pub similarity: SimilarityFn,
    pub agg: Aggregator,
    pub q_metric: QualityMetric,
    pub column_names: Vec<String>,
    pub train_ids: Vec<u64>,
    pub train_vectors: Vec<IncidenceVector>,
    pub cutoff: f64,
    /// Predictions are `score < cutoff` instead of `score >= cutoff`.
    pub inverted: bool,
    pub av0: f64,
    pub av1: f64,
}

impl TrainedModel {
    pub fn n(&self) -> usize {
        self.scaling.n()
    }

    pub fn predict_one(&self, score: f64) -> bool {
        (score >= self.cutoff) != self.inverted
    }
}

/// A trained model plus the data produced while fitting it.
#[derive(Debug, Clone)]
pub struct Training {
    pub model: TrainedModel,
    /// Rows of `T`, ascending.
    pub train_rows: Vec<usize>,
    /// Search trace of the cutoff optimizer, if one ran.
    pub search: Option<CutoffResult>,
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

pub fn train(d: &Dataset, cfg: &RunConfig) -> Result<Training> {
    cfg.validate()?;
    if d.m() == 0 {
        return Err(Error::EmptyDataset);
    }
    let predicate = cfg.predicate.clone().validated()?;
    let scaling = fit_scaling(d)?;
    let scaled = apply_scaling(d, &scaling)?;
    let vectors = encode_dataset(&scaled, &predicate)?;

    let train_rows = select_training(d, cfg.p, cfg.seed)?;
    let train_vectors: Vec<IncidenceVector> =
        train_rows.iter().map(|&i| vectors[i].clone()).collect();
    let in_train: HashSet<usize> = train_rows.iter().copied().collect();
    let rest: Vec<usize> = (0..d.m()).filter(|i| !in_train.contains(i)).collect();

    let queries: Vec<&IncidenceVector> = rest.iter().map(|&i| &vectors[i]).collect();
    let scores = score_all(&queries, &train_vectors, cfg.similarity, cfg.agg)?;
    let truth: Vec<bool> = rest.iter().map(|&i| d.labels()[i]).collect();
    let sv = ScoreVector::new(scores.iter().map(|s| s.score).collect(), truth)?;

    let av0 = mean(
        sv.scores()
            .iter()
            .zip(sv.truth())
            .filter(|p| !p.1)
            .map(|p| *p.0),
    );
    let rest_has_positives = sv.truth().iter().any(|&t| t);
    let av1 = if rest_has_positives {
        mean(
            sv.scores()
                .iter()
                .zip(sv.truth())
                .filter(|p| *p.1)
                .map(|p| *p.0),
        )
    } else {
        // T = D¹: fall back to the training objects' own scores so the
        // naive cutoff stays defined.
        let own: Vec<&IncidenceVector> = train_vectors.iter().collect();
        mean(
            score_all(&own, &train_vectors, cfg.similarity, cfg.agg)?
                .iter()
                .map(|s| s.score),
        )
    };
    let inverted = rest_has_positives && av1 < av0;
    if inverted {
        log::warn!(
            "average score of positives ({av1:.4}) is below that of negatives ({av0:.4}); \
             predictions are inverted, which indicates an insufficient training set"
        );
    }

    let (cutoff, search) = match &cfg.cutoff {
        CutoffStrategy::Naive(mode) => {
            let (hi, lo) = if inverted { (av0, av1) } else { (av1, av0) };
            (naive_cutoff_with(hi, lo, *mode), None)
        }
        CutoffStrategy::Fixed(c) => (*c, None),
        CutoffStrategy::Grid { n_grid } => {
            require_both_classes(&sv)?;
            let r = grid_search(
                &mut CutoffObjective::new(&sv, cfg.q_metric, inverted),
                *n_grid,
            )?;
            (r.c_opt, Some(r))
        }
        CutoffStrategy::Refined(opts) => {
            require_both_classes(&sv)?;
            let r = refine_search(&mut CutoffObjective::new(&sv, cfg.q_metric, inverted), opts)?;
            (r.c_opt, Some(r))
        }
    };

    let model = TrainedModel {
        scaling,
        predicate,
        similarity: cfg.similarity,
        agg: cfg.agg,
        q_metric: cfg.q_metric,
        column_names: d.column_names().to_vec(),
        train_ids: train_rows.iter().map(|&i| d.ids()[i]).collect(),
        train_vectors,
        cutoff,
        inverted,
        av0,
        av1,
    };
    Ok(Training {
        model,
        train_rows,
        search,
    })
}

fn require_both_classes(sv: &ScoreVector) -> Result<()> {
    let pos = sv.truth().iter().filter(|&&t| t).count();
    if pos == 0 || pos == sv.len() {
        Err(Error::SingleClassTruth)
    } else {
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub id: u64,
    pub score: f64,
    /// Id of the training object attaining the score.
    pub winner: u64,
    pub prediction: bool,
    pub truth: bool,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub rows: Vec<ReportRow>,
    pub confusion: Confusion,
    pub accuracy: f64,
    pub kappa: f64,
    pub tp_fp_ratio: f64,
    pub av0: f64,
    pub av1: f64,
    /// `av1 / av0`.
    pub q_avg_ratio: f64,
    pub cutoff: f64,
    pub inverted: bool,
    /// Wall-clock scoring time; excluded from equality.
    pub timing: Duration,
}

impl PartialEq for RunReport {
    fn eq(&self, o: &Self) -> bool {
        let same = |a: f64, b: f64| a.to_bits() == b.to_bits();
        self.rows == o.rows
            && self.confusion == o.confusion
            && same(self.accuracy, o.accuracy)
            && same(self.kappa, o.kappa)
            && same(self.tp_fp_ratio, o.tp_fp_ratio)
            && same(self.av0, o.av0)
            && same(self.av1, o.av1)
            && same(self.q_avg_ratio, o.q_avg_ratio)
            && same(self.cutoff, o.cutoff)
            && self.inverted == o.inverted
    }
}

impl RunReport {
    pub fn truth(&self) -> Vec<bool> {
        self.rows.iter().map(|r| r.truth).collect()
    }

    pub fn score_vector(&self) -> Result<ScoreVector> {
        ScoreVector::new(self.rows.iter().map(|r| r.score).collect(), self.truth())
    }

    pub fn objects_per_second(&self) -> f64 {
        self.rows.len() as f64 / self.timing.as_secs_f64().max(1e-9)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "id,score,winner,prediction,truth")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{}",
                r.id,
                r.score,
                r.winner,
                u8::from(r.prediction),
                u8::from(r.truth)
            )?;
        }
        Ok(())
    }

    /// Human-readable summary in the layout of the result tables.
    pub fn summary(&self) -> String {
        let c = &self.confusion;
        let mut s = String::new();
        let _ = writeln!(s, "TP & FP & TN & FN & Accuracy & Kappa & TP/FP & Q_avg");
        let _ = writeln!(
            s,
            "{} & {} & {} & {} & {:.3} & {:.3} & {} & {:.2}",
            c.tp,
            c.fp,
            c.tn,
            c.fn_,
            self.accuracy,
            self.kappa,
            format_ratio(self.tp_fp_ratio),
            self.q_avg_ratio
        );
        let _ = writeln!(
            s,
            "cutoff {:.6}{}  av0 {:.6}  av1 {:.6}",
            self.cutoff,
            if self.inverted { " (inverted)" } else { "" },
            self.av0,
            self.av1
        );
        s
    }
}

/// Classifies every object of `d` that is not a training object of `model`.
pub fn evaluate(d: &Dataset, model: &TrainedModel) -> Result<RunReport> {
    if d.n() != model.n() {
        return Err(Error::DimensionMismatch {
            expected: model.n(),
            found: d.n(),
        });
    }
    let start = Instant::now();
    let scaled = apply_scaling(d, &model.scaling)?;
    let vectors = encode_dataset(&scaled, &model.predicate)?;
    let train: HashSet<u64> = model.train_ids.iter().copied().collect();
    let rest: Vec<usize> = (0..d.m())
        .filter(|&i| !train.contains(&d.ids()[i]))
        .collect();
    let queries: Vec<&IncidenceVector> = rest.iter().map(|&i| &vectors[i]).collect();
    let scores = score_all(&queries, &model.train_vectors, model.similarity, model.agg)?;
    let timing = start.elapsed();

    let rows: Vec<ReportRow> = rest
        .iter()
        .zip(&scores)
        .map(|(&i, s)| ReportRow {
            id: d.ids()[i],
            score: s.score,
            winner: model.train_ids[s.winner],
            prediction: model.predict_one(s.score),
            truth: d.labels()[i],
        })
        .collect();
    let pred: Vec<bool> = rows.iter().map(|r| r.prediction).collect();
    let truth: Vec<bool> = rows.iter().map(|r| r.truth).collect();
    let confusion = Confusion::from_predictions(&pred, &truth)?;
    let av0 = mean(rows.iter().filter(|r| !r.truth).map(|r| r.score));
    let av1 = mean(rows.iter().filter(|r| r.truth).map(|r| r.score));
    Ok(RunReport {
        rows,
        confusion,
        accuracy: confusion.accuracy(),
        kappa: confusion.kappa(),
        tp_fp_ratio: confusion.tp_fp_ratio(),
        av0,
        av1,
        q_avg_ratio: av1 / av0,
        cutoff: model.cutoff,
        inverted: model.inverted,
        timing,
    })
}

/// Train on `d`, then evaluate on the same dataset.
pub fn run(d: &Dataset, cfg: &RunConfig) -> Result<(Training, RunReport)> {
    let t = train(d, cfg)?;
    let report = evaluate(d, &t.model)?;
    Ok((t, report))
}

/// For each query: the position of the first reference whose excess set
/// contains the query's, or `None`. Queries without excesses never match.
pub fn identify_vectors(
    reference: &[IncidenceVector],
    queries: &[IncidenceVector],
) -> Result<Vec<Option<usize>>> {
    queries
        .par_iter()
        .map(|x| {
            if x.weight() == 0 {
                return Ok(None);
            }
            for (k, y) in reference.iter().enumerate() {
                if x.is_subset_of(y)? {
                    return Ok(Some(k));
                }
            }
            Ok(None)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Identification {
    pub id: u64,
    pub positive: bool,
    pub witness: Option<u64>,
}

/// Exact identification: every object outside `D¹` is flagged iff all its
/// excesses are excesses of some positive object.
pub fn identify(d: &Dataset, predicate: &PredicateConfig) -> Result<Vec<Identification>> {
    if d.positives() == 0 {
        return Err(Error::NoPositives);
    }
    let (_, scaled) = crate::scale::autoscale(d)?;
    let vectors = encode_dataset(&scaled, &predicate.clone().validated()?)?;
    let (pos, neg): (Vec<usize>, Vec<usize>) = (0..d.m()).partition(|&i| d.labels()[i]);
    let reference: Vec<IncidenceVector> = pos.iter().map(|&i| vectors[i].clone()).collect();
    let queries: Vec<IncidenceVector> = neg.iter().map(|&i| vectors[i].clone()).collect();
    let hits = identify_vectors(&reference, &queries)?;
    Ok(neg
        .iter()
        .zip(hits)
        .map(|(&i, hit)| Identification {
            id: d.ids()[i],
            positive: hit.is_some(),
            witness: hit.map(|k| d.ids()[pos[k]]),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labelled(m: usize, every: usize) -> Dataset {
        let rows: Vec<Vec<f64>> = (0..m).map(|i| vec![i as f64, (i * 7 % 5) as f64]).collect();
        let labels: Vec<bool> = (0..m).map(|i| i % every == 0).collect();
        Dataset::from_rows(&rows, &labels).unwrap()
    }

    #[test]
    fn training_size_rounds_up() {
        assert_eq!(training_size(410, 2.0), 9);
        assert_eq!(training_size(50, 20.0), 10);
        assert_eq!(training_size(50, 30.0), 15);
        assert_eq!(training_size(500, 2.0), 10);
        assert_eq!(training_size(7, 100.0), 7);
        assert_eq!(training_size(3, 0.001), 1);
    }

    #[test]
    fn selection_is_deterministic_and_positive() {
        let d = labelled(200, 4);
        let a = select_training(&d, 30.0, 7).unwrap();
        assert_eq!(a, select_training(&d, 30.0, 7).unwrap());
        assert_eq!(a.len(), 15);
        assert!(a.iter().all(|&i| d.labels()[i]));
        assert!(a.windows(2).all(|w| w[0] < w[1]));
        assert_ne!(a, select_training(&d, 30.0, 8).unwrap());
        let all = select_training(&d, 100.0, 3).unwrap();
        assert_eq!(all.len(), d.positives());
    }

    #[test]
    fn selection_errors() {
        let d = labelled(10, 1).with_labels(vec![false; 10]).unwrap();
        assert!(matches!(
            select_training(&d, 10.0, 1),
            Err(Error::NoPositives)
        ));
        assert!(matches!(
            select_training(&labelled(10, 2), 0.0, 1),
            Err(Error::Config(_))
        ));
        assert!(select_training(&labelled(10, 2), 100.5, 1).is_err());
    }

    #[test]
    fn below_is_in_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for b in [1u64, 2, 3, 7, 1000, u64::MAX] {
            for _ in 0..100 {
                assert!(below(&mut rng, b) < b);
            }
        }
    }

    #[test]
    fn duplicate_of_positive_is_identified() {
        let rows = vec![
            vec![5.0, 0.0, 0.0],
            vec![5.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0],
        ];
        let d = Dataset::from_rows(&rows, &[true, false, false, false]).unwrap();
        let ids = identify(&d, &PredicateConfig::t_excess(0.5).unwrap()).unwrap();
        assert_eq!(ids.len(), 3);
        assert_eq!(ids[0].witness, Some(0));
        assert!(ids[0].positive);
        // all-zero rows have no excesses
        assert!(!ids[1].positive && !ids[2].positive);
    }

    #[test]
    fn naive_strategy_with_all_positives_in_training() {
        let d = labelled(40, 4);
        let mut cfg = RunConfig::new(PredicateConfig::abs_t_excess(0.5).unwrap());
        cfg.p = 100.0;
        cfg.cutoff = CutoffStrategy::Naive(Default::default());
        let t = train(&d, &cfg).unwrap();
        assert!(t.model.cutoff.is_finite());
        cfg.cutoff = CutoffStrategy::default();
        assert!(matches!(train(&d, &cfg), Err(Error::SingleClassTruth)));
    }

    #[test]
    fn fixed_cutoff_is_validated() {
        let mut cfg = RunConfig::new(PredicateConfig::t_excess(0.5).unwrap());
        cfg.cutoff = CutoffStrategy::Fixed(1.5);
        assert!(cfg.validate().is_err());
    }
}
