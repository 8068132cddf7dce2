//! Column-wise z-score scaling with a zero-variance guard.

use std::io::Write;

use crate::error::{Error, Result};
use crate::ingest::Dataset;

/// Per-column mean and population standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingParams {
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
}

impl ScalingParams {
    pub fn n(&self) -> usize {
        self.mu.len()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "column,mu,sigma")?;
        for (j, (mu, sigma)) in self.mu.iter().zip(&self.sigma).enumerate() {
            writeln!(w, "{j},{mu},{sigma}")?;
        }
        Ok(())
    }

    /// Parses the `column,mu,sigma` table written by [`ScalingParams::write_csv`].
    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut mu = Vec::new();
        let mut sigma = Vec::new();
        for (k, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || (k == 0 && line.starts_with("column")) {
                continue;
            }
            let bad = |msg: &str| Error::Parse {
                row: k + 1,
                col: 0,
                msg: msg.to_string(),
            };
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 3 {
                return Err(bad("expected column,mu,sigma"));
            }
            let j: usize = f[0].trim().parse().map_err(|_| bad("bad column index"))?;
            if j != mu.len() {
                return Err(bad("columns must be listed in order"));
            }
            let m: f64 = f[1].trim().parse().map_err(|_| bad("bad mu"))?;
            let s: f64 = f[2].trim().parse().map_err(|_| bad("bad sigma"))?;
            if !m.is_finite() || !s.is_finite() || s < 0.0 {
                return Err(bad("mu must be finite and sigma finite and non-negative"));
            }
            mu.push(m);
            sigma.push(s);
        }
        Ok(ScalingParams { mu, sigma })
    }
}

/// Fits column means and population (divide by `m`) standard deviations.
///
/// Sums run sequentially in row order so the result does not depend on how
/// the caller parallelizes anything else.
pub fn fit_scaling(d: &Dataset) -> Result<ScalingParams> {
    let (m, n) = (d.m(), d.n());
    if m == 0 {
        return Err(Error::EmptyDataset);
    }
    let mut mu = vec![0.0; n];
    for row in d.rows() {
        for (acc, v) in mu.iter_mut().zip(row) {
            *acc += v;
        }
    }
    for acc in &mut mu {
        *acc /= m as f64;
    }
    let mut var = vec![0.0; n];
    for row in d.rows() {
        for ((acc, v), mean) in var.iter_mut().zip(row).zip(&mu) {
            let dev = v - mean;
            *acc += dev * dev;
        }
    }
    let sigma = var.into_iter().map(|s| (s / m as f64).sqrt()).collect();
    Ok(ScalingParams { mu, sigma })
}

pub fn apply_scaling(d: &Dataset, s: &ScalingParams) -> Result<Dataset> {
    if s.n() != d.n() || s.sigma.len() != d.n() {
        return Err(Error::DimensionMismatch {
            expected: s.n(),
            found: d.n(),
        });
    }
    let mut values = Vec::with_capacity(d.values().len());
    for row in d.rows() {
        values.extend(
            row.iter()
                .zip(&s.mu)
                .zip(&s.sigma)
                .map(
                    |((&x, &mu), &sigma)| {
                        if sigma == 0.0 {
                            0.0
                        } else {
                            (x - mu) / sigma
                        }
                    },
                ),
        );
    }
    Ok(d.with_values(values))
}

/// `apply_scaling(d, fit_scaling(d))`, returning both.
pub fn autoscale(d: &Dataset) -> Result<(ScalingParams, Dataset)> {
    let params = fit_scaling(d)?;
    let scaled = apply_scaling(d, &params)?;
    Ok((params, scaled))
}
