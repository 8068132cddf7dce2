//! Parameter sweeps over threshold, training percentage and seed.
//!
//! Every cell is one train-and-evaluate run. Results go to CSV files in an
//! output directory; wall-clock timestamps are confined to `manifest.txt` so
//! all other files are byte-identical across repeated runs.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use crate::error::{Error, Result};
use crate::ingest::Dataset;
use crate::pipeline::{run, RunConfig, RunReport, Training};
use crate::predicates::PredicateConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub run: RunConfig,
    /// Thresholds to sweep; empty means the threshold in `run`.
    pub t_values: Vec<f64>,
    /// Training percentages; empty means `run.p`.
    pub p_values: Vec<f64>,
    /// Seeds; empty means `run.seed`.
    pub seeds: Vec<u64>,
    pub out_dir: PathBuf,
}

/// `start, start + step, ..., stop` (inclusive, up to rounding).
pub fn t_range(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if step.is_nan() || step <= 0.0 || !start.is_finite() || !stop.is_finite() || stop < start {
        return Err(Error::Config(format!(
            "invalid range {start}..{stop} step {step}"
        )));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    // round to 12 significant decimals so 0.1 + 2 * 0.1 prints as 0.3
    Ok((0..count)
        .map(|k| ((start + k as f64 * step) * 1e12).round() / 1e12)
        .collect())
}

fn with_threshold(p: &PredicateConfig, t: f64) -> Result<PredicateConfig> {
    match p {
        PredicateConfig::TExcess { .. } => PredicateConfig::t_excess(t),
        PredicateConfig::AbsTExcess { .. } => PredicateConfig::abs_t_excess(t),
        PredicateConfig::RefExcess { .. } => {
            Err(Error::Config("ref_excess has no threshold to sweep".into()))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub index: usize,
    pub t: Option<f64>,
    pub p: f64,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct CellResult {
    pub cell: Cell,
    pub train_size: usize,
    pub report: RunReport,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub results: Vec<CellResult>,
    pub failures: Vec<(Cell, String)>,
}

impl ExperimentSpec {
    pub fn cells(&self) -> Vec<Cell> {
        let ts: Vec<Option<f64>> = if self.t_values.is_empty() {
            vec![self.run.predicate.threshold()]
        } else {
            self.t_values.iter().copied().map(Some).collect()
        };
        let ps = if self.p_values.is_empty() {
            vec![self.run.p]
        } else {
            self.p_values.clone()
        };
        let seeds = if self.seeds.is_empty() {
            vec![self.run.seed]
        } else {
            self.seeds.clone()
        };
        let mut cells = Vec::new();
        for &t in &ts {
            for &p in &ps {
                for &seed in &seeds {
                    cells.push(Cell {
                        index: cells.len(),
                        t,
                        p,
                        seed,
                    });
                }
            }
        }
        cells
    }

    pub fn config_for(&self, cell: &Cell) -> Result<RunConfig> {
        let mut cfg = self.run.clone();
        cfg.p = cell.p;
        cfg.seed = cell.seed;
        if let (Some(t), false) = (cell.t, self.t_values.is_empty()) {
            cfg.predicate = with_threshold(&cfg.predicate, t)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

fn fmt_t(t: Option<f64>) -> String {
    t.map_or_else(|| "-".to_string(), |t| t.to_string())
}

/// Median with the mean of the two middle values for even counts.
pub fn median(v: &[f64]) -> f64 {
    let mut s: Vec<f64> = v.to_vec();
    s.sort_by(f64::total_cmp);
    let k = s.len();
    if k == 0 {
        f64::NAN
    } else if k % 2 == 1 {
        s[k / 2]
    } else {
        (s[k / 2 - 1] + s[k / 2]) / 2.0
    }
}

/// Objects of a report, positives first, each group in dataset order.
pub fn score_curve(report: &RunReport) -> String {
    let mut s = String::from("rank,id,score,truth\n");
    let ordered = report
        .rows
        .iter()
        .filter(|r| r.truth)
        .chain(report.rows.iter().filter(|r| !r.truth));
    for (k, r) in ordered.enumerate() {
        let _ = writeln!(s, "{k},{},{},{}", r.id, r.score, u8::from(r.truth));
    }
    s
}

pub fn cutoff_curve(points: &[(f64, f64)]) -> String {
    let mut s = String::from("C,Q\n");
    for (c, q) in points {
        let _ = writeln!(s, "{c},{q}");
    }
    s
}

fn run_cell(
    d: &Dataset,
    spec: &ExperimentSpec,
    cell: &Cell,
    cells_dir: &Path,
) -> Result<CellResult> {
    let cfg = spec.config_for(cell)?;
    let (training, report): (Training, RunReport) = run(d, &cfg)?;
    let stem = format!("cell_{:04}", cell.index);
    let mut buf = Vec::new();
    report
        .write_csv(&mut buf)
        .map_err(|e| Error::io(cells_dir, e))?;
    write(
        &cells_dir.join(format!("{stem}_report.csv")),
        &String::from_utf8_lossy(&buf),
    )?;
    write(
        &cells_dir.join(format!("{stem}_scores.csv")),
        &score_curve(&report),
    )?;
    if let Some(search) = &training.search {
        write(
            &cells_dir.join(format!("{stem}_cutoff.csv")),
            &cutoff_curve(&search.curve),
        )?;
    }
    Ok(CellResult {
        cell: cell.clone(),
        train_size: training.train_rows.len(),
        report,
    })
}

/// Runs every cell, continuing past failures, and writes the result files.
pub fn run_experiment(d: &Dataset, spec: &ExperimentSpec) -> Result<ExperimentOutcome> {
    let cells = spec.cells();
    if cells.is_empty() {
        return Err(Error::Config("sweep has no cells".into()));
    }
    let cells_dir = spec.out_dir.join("cells");
    fs::create_dir_all(&cells_dir).map_err(|e| Error::io(&cells_dir, e))?;
    let started = unix_now();

    let mut results = Vec::new();
    let mut failures = Vec::new();
    for cell in &cells {
        match run_cell(d, spec, cell, &cells_dir) {
            Ok(r) => results.push(r),
            Err(e) => {
                log::error!(
                    "cell {} (t={}, p={}, seed={}): {e}",
                    cell.index,
                    fmt_t(cell.t),
                    cell.p,
                    cell.seed
                );
                failures.push((cell.clone(), e.to_string()));
            }
        }
    }

    write(&spec.out_dir.join("summary.csv"), &summary_csv(&results))?;
    write(&spec.out_dir.join("seeds.csv"), &seed_summary_csv(&results))?;
    write(&spec.out_dir.join("t_curves.csv"), &t_curves_csv(&results))?;

    let mut manifest = String::new();
    let _ = writeln!(manifest, "started_unix = {started}");
    let _ = writeln!(manifest, "finished_unix = {}", unix_now());
    let _ = writeln!(manifest, "cells = {}", cells.len());
    let _ = writeln!(manifest, "succeeded = {}", results.len());
    let _ = writeln!(manifest, "failed = {}", failures.len());
    for (c, e) in &failures {
        let _ = writeln!(
            manifest,
            "failure cell={} t={} p={} seed={}: {e}",
            c.index,
            fmt_t(c.t),
            c.p,
            c.seed
        );
    }
    write(&spec.out_dir.join("manifest.txt"), &manifest)?;
    Ok(ExperimentOutcome { results, failures })
}

pub fn summary_csv(results: &[CellResult]) -> String {
    let mut s = String::from(
        "cell,t,p,seed,train_size,tp,fp,tn,fn,accuracy,kappa,tp_fp,av0,av1,q_avg,cutoff,inverted\n",
    );
    for r in results {
        let (c, rep) = (&r.cell, &r.report);
        let k = &rep.confusion;
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            c.index,
            fmt_t(c.t),
            c.p,
            c.seed,
            r.train_size,
            k.tp,
            k.fp,
            k.tn,
            k.fn_,
            rep.accuracy,
            rep.kappa,
            rep.tp_fp_ratio,
            rep.av0,
            rep.av1,
            rep.q_avg_ratio,
            rep.cutoff,
            u8::from(rep.inverted)
        );
    }
    s
}

/// Min / median / max of kappa over seeds, per `(t, p)`.
pub fn seed_summary_csv(results: &[CellResult]) -> String {
    let mut s = String::from("t,p,runs,kappa_min,kappa_median,kappa_max,accuracy_median\n");
    type Group<'a> = ((Option<f64>, f64), Vec<&'a CellResult>);
    let mut groups: Vec<Group> = Vec::new();
    for r in results {
        let key = (r.cell.t, r.cell.p);
        match groups.iter_mut().find(|g| g.0 == key) {
            Some(g) => g.1.push(r),
            None => groups.push((key, vec![r])),
        }
    }
    for ((t, p), rs) in groups {
        let kappas: Vec<f64> = rs.iter().map(|r| r.report.kappa).collect();
        let accs: Vec<f64> = rs.iter().map(|r| r.report.accuracy).collect();
        let min = kappas.iter().copied().fold(f64::INFINITY, f64::min);
        let max = kappas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let _ = writeln!(
            s,
            "{},{p},{},{min},{},{max},{}",
            fmt_t(t),
            rs.len(),
            median(&kappas),
            median(&accs)
        );
    }
    s
}

/// Kappa, quotient of averages and TP/FP against the threshold.
pub fn t_curves_csv(results: &[CellResult]) -> String {
    let mut s = String::from("t,p,seed,kappa,q_avg,tp_fp\n");
    for r in results {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            fmt_t(r.cell.t),
            r.cell.p,
            r.cell.seed,
            r.report.kappa,
            r.report.q_avg_ratio,
            r.report.tp_fp_ratio
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        let t = t_range(0.1, 1.0, 0.1).unwrap();
        assert_eq!(t.len(), 10);
        assert_eq!(t[2], 0.3);
        assert_eq!(t[9], 1.0);
        assert_eq!(t_range(0.5, 0.5, 0.1).unwrap(), vec![0.5]);
        assert!(t_range(1.0, 0.5, 0.1).is_err());
        assert!(t_range(0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn medians() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(median(&[]).is_nan());
    }

    #[test]
    fn cell_grid() {
        let spec = ExperimentSpec {
            run: RunConfig::new(PredicateConfig::t_excess(0.5).unwrap()),
            t_values: vec![0.1, 0.2],
            p_values: vec![],
            seeds: vec![1, 2, 3],
            out_dir: PathBuf::new(),
        };
        let cells = spec.cells();
        assert_eq!(cells.len(), 6);
        assert_eq!(
            cells[4],
            Cell {
                index: 4,
                t: Some(0.2),
                p: 2.0,
                seed: 2
            }
        );
        assert_eq!(
            spec.config_for(&cells[4]).unwrap().predicate,
            PredicateConfig::t_excess(0.2).unwrap()
        );
        let r = ExperimentSpec {
            run: RunConfig::new(PredicateConfig::ref_excess(vec![0.0], vec![1.0]).unwrap()),
            ..spec
        };
        assert!(r.config_for(&r.cells()[0]).is_err());
    }
}
