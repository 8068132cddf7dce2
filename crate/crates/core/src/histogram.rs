//! Which training objects act as prototypes for the positives they attract.

use std::collections::BTreeMap;
use std::io::Write;

use crate::error::{Error, Result};
use crate::pipeline::RunReport;

#[derive(Debug, Clone, PartialEq)]
pub struct HistogramRow {
    pub id: u64,
    pub n: usize,
    /// `n / total`.
    pub h: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrototypeHistogram {
    /// Training objects with `n > 0`, by `n` descending then id ascending.
    pub rows: Vec<HistogramRow>,
    /// Number of positive objects outside the training set.
    pub total: usize,
    /// Gini coefficient of `n(y)` over all training objects, zeros included.
    pub gini: f64,
}

/// Counts, for each training object `y`, the classified positives whose
/// aggregate score is attained at `y`.
///
/// `winners` and `truth` run over the classified objects; `train_ids` lists
/// all of `T` so that training objects attracting nothing enter the Gini
/// coefficient as zeros.
pub fn prototype_histogram(
    winners: &[u64],
    truth: &[bool],
    train_ids: &[u64],
) -> Result<PrototypeHistogram> {
    if winners.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            found: winners.len(),
        });
    }
    let mut counts: BTreeMap<u64, usize> = train_ids.iter().map(|&id| (id, 0)).collect();
    let mut total = 0;
    for (&w, _) in winners.iter().zip(truth).filter(|p| *p.1) {
        *counts.entry(w).or_insert(0) += 1;
        total += 1;
    }
    if total == 0 {
        return Err(Error::NoPositivesOutsideTraining);
    }
    let all: Vec<f64> = counts.values().map(|&n| n as f64).collect();
    let gini = gini(&all)?;
    let mut rows: Vec<HistogramRow> = counts
        .into_iter()
        .filter(|&(_, n)| n > 0)
        .map(|(id, n)| HistogramRow {
            id,
            n,
            h: n as f64 / total as f64,
        })
        .collect();
    rows.sort_by(|a, b| b.n.cmp(&a.n).then(a.id.cmp(&b.id)));
    Ok(PrototypeHistogram { rows, total, gini })
}

pub fn from_report(report: &RunReport, train_ids: &[u64]) -> Result<PrototypeHistogram> {
    let winners: Vec<u64> = report.rows.iter().map(|r| r.winner).collect();
    prototype_histogram(&winners, &report.truth(), train_ids)
}

/// One table line: `id & H% & n`.
pub fn format_row(row: &HistogramRow) -> String {
    format!("{} & {:.2} & {}", row.id, 100.0 * row.h, row.n)
}

impl PrototypeHistogram {
    pub fn write_table<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "id & H(y) [%] & n(y)")?;
        for r in &self.rows {
            writeln!(w, "{}", format_row(r))?;
        }
        writeln!(w, "total {}  gini {:.4}", self.total, self.gini)
    }
}

/// Gini coefficient `sum_ij |y_i - y_j| / (2 n sum_i y_i)`, via the sorted
/// form `sum_i (2i - n - 1) y_(i) / (n sum y)` with 1-based ranks.
pub fn gini(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::Config(
            "gini needs finite non-negative values".into(),
        ));
    }
    let sum: f64 = values.iter().sum();
    if sum == 0.0 {
        return Err(Error::AllZero);
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let weighted: f64 = v
        .iter()
        .enumerate()
        .map(|(i, y)| (2.0 * (i as f64 + 1.0) - n - 1.0) * y)
        .sum();
    Ok(weighted / (n * sum))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute(v: &[f64]) -> f64 {
        let mut acc = 0.0;
        for a in v {
            for b in v {
                acc += (a - b).abs();
            }
        }
        acc / (2.0 * v.len() as f64 * v.iter().sum::<f64>())
    }

    #[test]
    fn gini_examples() {
        assert_eq!(gini(&[3.0, 3.0, 3.0]).unwrap(), 0.0);
        assert_eq!(gini(&[0.0, 1.0]).unwrap(), 0.5);
        let v = [1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        assert!((gini(&v).unwrap() - brute(&v)).abs() < 1e-12);
        assert!(matches!(gini(&[0.0, 0.0]), Err(Error::AllZero)));
        assert!(gini(&[]).is_err());
    }

    #[test]
    fn single_training_object_takes_everything() {
        let h = prototype_histogram(&[7, 7, 7], &[true, true, false], &[7]).unwrap();
        assert_eq!(
            h.rows,
            vec![HistogramRow {
                id: 7,
                n: 2,
                h: 1.0
            }]
        );
        assert_eq!(h.total, 2);
    }

    #[test]
    fn rows_sorted_and_zero_rows_dropped() {
        let winners = [4, 2, 4, 9, 2, 9];
        let truth = [true, true, true, true, true, false];
        let h = prototype_histogram(&winners, &truth, &[2, 4, 9, 11]).unwrap();
        let order: Vec<(u64, usize)> = h.rows.iter().map(|r| (r.id, r.n)).collect();
        assert_eq!(order, vec![(2, 2), (4, 2), (9, 1)]);
        assert!((h.gini - brute(&[2.0, 2.0, 1.0, 0.0])).abs() < 1e-12);
    }

    #[test]
    fn no_positive_errors() {
        assert!(matches!(
            prototype_histogram(&[1], &[false], &[1]),
            Err(Error::NoPositivesOutsideTraining)
        ));
    }

    #[test]
    fn table_row_format() {
        let row = HistogramRow {
            id: 3762,
            n: 223,
            h: 223.0 / 410.0,
        };
        assert_eq!(format_row(&row), "3762 & 54.39 & 223");
    }

    proptest! {
        #[test]
        fn gini_matches_brute_force(v in prop::collection::vec(0.0f64..100.0, 1..40)) {
            prop_assume!(v.iter().sum::<f64>() > 0.0);
            prop_assert!((gini(&v).unwrap() - brute(&v)).abs() < 1e-12);
        }

        #[test]
        fn gini_scale_and_permutation_invariant(
            v in prop::collection::vec(0.0f64..100.0, 1..40),
            c in 0.01f64..1000.0,
            rot in 0usize..40,
        ) {
            prop_assume!(v.iter().sum::<f64>() > 0.0);
            let g = gini(&v).unwrap();
            let scaled: Vec<f64> = v.iter().map(|x| x * c).collect();
            prop_assert!((gini(&scaled).unwrap() - g).abs() < 1e-12);
            let mut r = v.clone();
            r.rotate_left(rot % v.len());
            prop_assert!((gini(&r).unwrap() - g).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&g));
        }

        #[test]
        fn counts_sum_to_positives(
            pairs in prop::collection::vec((0u64..6, any::<bool>()), 1..80),
        ) {
            prop_assume!(pairs.iter().any(|p| p.1));
            let (w, t): (Vec<u64>, Vec<bool>) = pairs.into_iter().unzip();
            let h = prototype_histogram(&w, &t, &[0, 1, 2, 3, 4, 5]).unwrap();
            let sum: usize = h.rows.iter().map(|r| r.n).sum();
            prop_assert_eq!(sum, t.iter().filter(|&&x| x).count());
            prop_assert_eq!(sum, h.total);
        }
    }
}
