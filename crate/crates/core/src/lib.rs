//! Binary classification of measurement vectors by threshold excesses.
//!
//! Rows are z-scored per column and turned into bit vectors, one bit per
//! column, set where the scaled value exceeds a threshold. An object is scored
//! by the best coincidence index `|I(x) ∩ I(y)| / |I(x)|` against a training
//! set of positive objects, and the score is digitized with a cutoff chosen
//! to maximize accuracy or Cohen's kappa.
//!
//! ```
//! use excess::{run, Dataset, PredicateConfig, RunConfig};
//!
//! let rows: Vec<Vec<f64>> = (0..40)
//!     .map(|i| if i % 4 == 0 { vec![3.0, 0.1, 2.5] } else { vec![0.0, (i % 3) as f64 * 0.1, 0.0] })
//!     .collect();
//! let labels: Vec<bool> = (0..40).map(|i| i % 4 == 0).collect();
//! let d = Dataset::from_rows(&rows, &labels).unwrap();
//!
//! let mut cfg = RunConfig::new(PredicateConfig::t_excess(0.5).unwrap());
//! cfg.p = 20.0;
//! let (_, report) = run(&d, &cfg).unwrap();
//! assert_eq!(report.kappa, 1.0);
//! ```

pub mod cutoff;
pub mod dimreduce;
pub mod error;
pub mod experiment;
pub mod histogram;
pub mod ingest;
pub mod metrics;
pub mod model_io;
pub mod pipeline;
pub mod plot;
pub mod predicates;
pub mod prologgen;
pub mod scale;
pub mod similarity;
pub mod synth;

pub use cutoff::{CutoffResult, CutoffStrategy, RefineOptions, ScoreVector};
pub use error::{Error, ErrorClass, Result};
pub use ingest::{ColumnRef, ColumnSelection, Dataset};
pub use metrics::{Confusion, QualityMetric};
pub use pipeline::{evaluate, identify, run, train, RunConfig, RunReport, TrainedModel};
pub use predicates::{IncidenceVector, PredicateConfig, PredicateKind};
pub use scale::ScalingParams;
pub use similarity::{Aggregator, SimilarityFn};
