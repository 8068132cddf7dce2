//! Column elimination by where positive objects peak.
//!
//! For each positive row the set of columns attaining `max_j |x_ij|` is
//! recorded (all ties). A column survives if at least `sharpness` positive
//! rows peak there.

use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ingest::{project, Dataset};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReductionPlan {
    pub kept_columns: Vec<usize>,
    pub num_occu: Vec<usize>,
    pub sharpness: usize,
}

impl ReductionPlan {
    pub fn n(&self) -> usize {
        self.num_occu.len()
    }

    /// Percentage of columns dropped.
    pub fn omitted_percent(&self) -> f64 {
        if self.n() == 0 {
            return 0.0;
        }
        100.0 * (self.n() - self.kept_columns.len()) as f64 / self.n() as f64
    }

    /// Same counts, different threshold.
    pub fn with_sharpness(&self, sharpness: usize) -> ReductionPlan {
        ReductionPlan {
            kept_columns: kept(&self.num_occu, sharpness),
            num_occu: self.num_occu.clone(),
            sharpness,
        }
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "column,num_occu,kept")?;
        let mut k = self.kept_columns.iter().peekable();
        for (j, c) in self.num_occu.iter().enumerate() {
            let keep = k.next_if(|&&x| x == j).is_some();
            writeln!(w, "{j},{c},{}", u8::from(keep))?;
        }
        Ok(())
    }
}

fn kept(num_occu: &[usize], sharpness: usize) -> Vec<usize> {
    (0..num_occu.len())
        .filter(|&j| num_occu[j] >= sharpness)
        .collect()
}

/// Columns of `row` where `|x|` attains its maximum.
pub fn max_indices(row: &[f64]) -> Vec<usize> {
    let m = row.iter().fold(f64::NEG_INFINITY, |a, x| a.max(x.abs()));
    (0..row.len()).filter(|&j| row[j].abs() == m).collect()
}

/// Columns that do not look z-scored: `|mean| > 1e-6` or a standard deviation
/// that is neither 0 nor 1 (within `1e-6`).
pub fn unscaled_columns(d: &Dataset) -> Vec<usize> {
    let m = d.m() as f64;
    if d.m() == 0 {
        return Vec::new();
    }
    (0..d.n())
        .filter(|&j| {
            let mean = d.rows().map(|r| r[j]).sum::<f64>() / m;
            let var = d.rows().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / m;
            let sd = var.sqrt();
            mean.abs() > 1e-6 || (sd.abs() > 1e-6 && (sd - 1.0).abs() > 1e-6)
        })
        .collect()
}

pub fn plan_reduction(d: &Dataset, sharpness: usize) -> Result<ReductionPlan> {
    let pos: Vec<usize> = (0..d.m()).filter(|&i| d.labels()[i]).collect();
    if pos.is_empty() {
        return Err(Error::NoPositives);
    }
    let bad = unscaled_columns(d);
    if !bad.is_empty() {
        log::warn!(
            "{} of {} columns do not look auto-scaled (first: {}); reduction expects scaled input",
            bad.len(),
            d.n(),
            bad[0]
        );
    }
    let num_occu = pos
        .par_iter()
        .fold(
            || vec![0usize; d.n()],
            |mut acc, &i| {
                for j in max_indices(d.row(i)) {
                    acc[j] += 1;
                }
                acc
            },
        )
        .reduce(
            || vec![0usize; d.n()],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    Ok(ReductionPlan {
        kept_columns: kept(&num_occu, sharpness),
        num_occu,
        sharpness,
    })
}

pub fn apply_reduction(d: &Dataset, plan: &ReductionPlan) -> Result<Dataset> {
    if plan.n() != d.n() {
        return Err(Error::DimensionMismatch {
            expected: plan.n(),
            found: d.n(),
        });
    }
    Ok(project(d, &plan.kept_columns))
}
