mod config;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use excess::cutoff::{CutoffStrategy, RefineOptions};
use excess::experiment::{cutoff_curve, run_experiment, t_range, ExperimentSpec};
use excess::ingest::{detect_delimiter, parse_csv};
use excess::pipeline::{evaluate, identify, run, train, RunConfig};
use excess::predicates::{encode_dataset, PredicateConfig, PredicateKind};
use excess::scale::autoscale;
use excess::synth::{generate, SyntheticSpec};
use excess::{
    dimreduce, histogram, model_io, plot, prologgen, Aggregator, ColumnRef, ColumnSelection,
    Dataset, Error, ErrorClass, QualityMetric, Result, SimilarityFn,
};

use config::FileConfig;

#[derive(Parser)]
#[command(
    name = "excess",
    version,
    about = "Threshold bit-pattern classification of measurement data"
)]
struct Cli {
    /// Worker threads (default: logical cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for every random choice.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// `key = value` file supplying defaults for flags not given.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Args, Clone)]
struct InputArgs {
    /// CSV file with one object per row.
    #[arg(long)]
    input: PathBuf,
    /// Label column, by header name or 0-based index.
    #[arg(long)]
    label: Option<ColumnRef>,
    /// Id column; defaults to a column headed `id`, else row numbers.
    #[arg(long)]
    id: Option<ColumnRef>,
    /// Measurement columns to use: `all`, `a..b` or `i,j,k` (0-based).
    #[arg(long)]
    columns: Option<String>,
}

#[derive(Args, Clone, Default)]
struct PredicateArgs {
    /// t, abs or ref.
    #[arg(long)]
    predicate: Option<String>,
    /// Threshold for t and abs predicates.
    #[arg(long)]
    t: Option<f64>,
    /// CSV of lo,hi per column for the ref predicate.
    #[arg(long)]
    ref_ranges: Option<PathBuf>,
}

#[derive(Args, Clone, Default)]
struct RunArgs {
    #[command(flatten)]
    predicate: PredicateArgs,
    /// Percentage of positives used for training.
    #[arg(long)]
    p: Option<f64>,
    /// coincidence, kappa or cosine.
    #[arg(long)]
    similarity: Option<String>,
    /// max or min over the training set.
    #[arg(long)]
    agg: Option<String>,
    /// naive, midpoint, grid, refined, or a fixed value in [0, 1].
    #[arg(long)]
    cutoff: Option<String>,
    /// accuracy or kappa.
    #[arg(long)]
    q: Option<String>,
    /// Grid points for the grid cutoff.
    #[arg(long)]
    grid: Option<usize>,
    /// Coarse steps for the refined cutoff.
    #[arg(long)]
    n_steps: Option<usize>,
    /// Stopping tolerance for the refined cutoff.
    #[arg(long)]
    epsilon: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Load a dataset and print its shape.
    IngestCheck {
        #[command(flatten)]
        input: InputArgs,
    },
    /// Auto-scale columns and write the scaled data and parameters.
    Scale {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        params_out: Option<PathBuf>,
    },
    /// Drop columns where too few positives peak.
    Reduce {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        reduce_sharpness: Option<usize>,
        /// Reduced, scaled dataset.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        plan_out: Option<PathBuf>,
    },
    /// Fit a model and save it.
    Train {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        model_out: PathBuf,
        /// Cutoff search curve as C,Q.
        #[arg(long)]
        curve_out: Option<PathBuf>,
    },
    /// Score and classify objects with a saved model.
    Predict {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        model: PathBuf,
        /// Per-object CSV; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Classify with a saved model and report agreement with the labels.
    Evaluate {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        report_out: Option<PathBuf>,
    },
    /// Flag negatives whose excesses are all excesses of some positive.
    Identify {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        predicate: PredicateArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the implication system for one query object as a Prolog program.
    PrologGen {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        predicate: PredicateArgs,
        #[arg(long)]
        query_id: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train, classify, and tabulate which training objects attract the positives.
    Histogram {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Run a grid of thresholds, training percentages and seeds.
    Sweep {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        run: RunArgs,
        /// start:stop:step, inclusive.
        #[arg(long)]
        t_range: Option<String>,
        /// Comma-separated training percentages.
        #[arg(long)]
        p_list: Option<String>,
        /// Comma-separated seeds or an inclusive range a..b.
        #[arg(long)]
        seeds: Option<String>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Generate a planted-defect dataset.
    GenSynthetic {
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        defect_rate: Option<f64>,
        #[arg(long)]
        archetypes: Option<usize>,
        #[arg(long)]
        archetype_size: Option<usize>,
        #[arg(long)]
        magnitude: Option<f64>,
        #[arg(long)]
        noise_sigma: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render a two-column curve CSV as SVG and gnuplot data.
    Plot {
        #[arg(long)]
        curve: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        gnuplot_out: Option<PathBuf>,
        #[arg(long, default_value = "")]
        title: String,
        #[arg(long, default_value = "C")]
        xlabel: String,
        #[arg(long, default_value = "Q")]
        ylabel: String,
    },
}

struct Ctx {
    cfg: FileConfig,
    seed: u64,
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn write_with(path: &Path, f: impl FnOnce(&mut Vec<u8>) -> io::Result<()>) -> Result<()> {
    let mut buf = Vec::new();
    f(&mut buf).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    fs::write(path, buf).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn out_or_stdout(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => write_file(p, text),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Error::Io {
                path: PathBuf::from("<stdout>"),
                source: e,
            }),
    }
}

impl Ctx {
    fn load(&self, a: &InputArgs) -> Result<Dataset> {
        let label: ColumnRef =
            self.cfg
                .get(a.label.clone(), "label", ColumnRef::Name("label".into()))?;
        let text = fs::read_to_string(&a.input).map_err(|e| Error::Io {
            path: a.input.clone(),
            source: e,
        })?;
        let id = match self.cfg.opt(a.id.clone(), "id")? {
            Some(id) => Some(id),
            None if has_id_header(&text) => Some(ColumnRef::Name("id".into())),
            None => None,
        };
        let d = parse_csv(&text, &label, id.as_ref())?;
        let sel: ColumnSelection = self
            .cfg
            .get(a.columns.clone(), "columns", "all".to_string())?
            .parse()?;
        excess::ingest::select_columns(&d, &sel)
    }

    fn predicate(&self, a: &PredicateArgs) -> Result<PredicateConfig> {
        let kind: PredicateKind = self
            .cfg
            .get(a.predicate.clone(), "predicate", "abs".to_string())?
            .parse()?;
        match kind {
            PredicateKind::TExcess => PredicateConfig::t_excess(self.cfg.get(a.t, "t", 0.5)?),
            PredicateKind::AbsTExcess => {
                PredicateConfig::abs_t_excess(self.cfg.get(a.t, "t", 0.5)?)
            }
            PredicateKind::RefExcess => {
                let path: PathBuf = self
                    .cfg
                    .opt(a.ref_ranges.clone(), "ref-ranges")?
                    .ok_or_else(|| Error::Config("ref predicate needs --ref-ranges".into()))?;
                let text = fs::read_to_string(&path).map_err(|e| Error::Io { path, source: e })?;
                PredicateConfig::parse_ref_ranges(&text)
            }
        }
    }

    fn run_config(&self, a: &RunArgs) -> Result<RunConfig> {
        let mut rc = RunConfig::new(self.predicate(&a.predicate)?);
        rc.seed = self.seed;
        rc.p = self.cfg.get(a.p, "p", rc.p)?;
        rc.similarity = self
            .cfg
            .get(a.similarity.clone(), "similarity", "coincidence".into())?
            .parse::<SimilarityFn>()?;
        rc.agg = self
            .cfg
            .get(a.agg.clone(), "agg", "max".into())?
            .parse::<Aggregator>()?;
        rc.q_metric = self
            .cfg
            .get(a.q.clone(), "q", "kappa".into())?
            .parse::<QualityMetric>()?;
        let strategy = self
            .cfg
            .get(a.cutoff.clone(), "cutoff", "grid".to_string())?;
        rc.cutoff = match strategy.parse::<CutoffStrategy>()? {
            CutoffStrategy::Grid { .. } => CutoffStrategy::Grid {
                n_grid: self.cfg.get(a.grid, "grid", 101)?,
            },
            CutoffStrategy::Refined(_) => CutoffStrategy::Refined(RefineOptions::new(
                self.cfg.get(a.n_steps, "n-steps", 10)?,
                self.cfg.get(a.epsilon, "epsilon", 1e-6)?,
            )),
            other => other,
        };
        rc.validate()?;
        Ok(rc)
    }
}

fn has_id_header(text: &str) -> bool {
    let delim = detect_delimiter(text) as char;
    text.lines()
        .find(|l| !l.trim().is_empty())
        .is_some_and(|l| l.split(delim).any(|c| c.trim() == "id"))
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|x| {
            x.parse()
                .map_err(|_| Error::Config(format!("bad {what} {x:?}")))
        })
        .collect()
}

fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("bad seed range {s:?}")))?;
        let b: u64 = b
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("bad seed range {s:?}")))?;
        if b < a {
            return Err(Error::Config(format!("empty seed range {s:?}")));
        }
        return Ok((a..=b).collect());
    }
    parse_list(s, "seed")
}

fn execute(cli: Cli) -> Result<()> {
    let cfg = FileConfig::load(cli.config.as_deref())?;
    let threads: Option<usize> = cfg.opt(cli.threads, "threads")?;
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    let seed = cfg.get(cli.seed, "seed", 1)?;
    let ctx = Ctx { cfg, seed };

    match cli.cmd {
        Command::IngestCheck { input } => {
            let d = ctx.load(&input)?;
            println!(
                "objects {}  columns {}  positives {}  negatives {}",
                d.m(),
                d.n(),
                d.positives(),
                d.m() - d.positives()
            );
        }
        Command::Scale {
            input,
            out,
            params_out,
        } => {
            let d = ctx.load(&input)?;
            let (params, scaled) = autoscale(&d)?;
            scaled.save_csv(&out)?;
            if let Some(p) = params_out {
                write_with(&p, |w| params.write_csv(w))?;
            }
        }
        Command::Reduce {
            input,
            reduce_sharpness,
            out,
            plan_out,
        } => {
            let d = ctx.load(&input)?;
            let sharpness = ctx.cfg.get(reduce_sharpness, "reduce-sharpness", 1)?;
            let (_, scaled) = autoscale(&d)?;
            let plan = dimreduce::plan_reduction(&scaled, sharpness)?;
            let reduced = dimreduce::apply_reduction(&scaled, &plan)?;
            if reduced.n() == 0 {
                log::warn!("sharpness {sharpness} removes every column");
            }
            reduced.save_csv(&out)?;
            if let Some(p) = plan_out {
                write_with(&p, |w| plan.write_csv(w))?;
            }
            println!(
                "kept {} of {} columns, omitted {:.1}%",
                plan.kept_columns.len(),
                plan.n(),
                plan.omitted_percent()
            );
        }
        Command::Train {
            input,
            run: ra,
            model_out,
            curve_out,
        } => {
            let d = ctx.load(&input)?;
            let rc = ctx.run_config(&ra)?;
            let t = train(&d, &rc)?;
            model_io::save(&t.model, &model_out)?;
            if let (Some(p), Some(search)) = (curve_out, &t.search) {
                write_file(&p, &cutoff_curve(&search.curve))?;
            }
            println!(
                "trained on {} objects, cutoff {:.6}{}, av0 {:.6}, av1 {:.6}",
                t.train_rows.len(),
                t.model.cutoff,
                if t.model.inverted { " (inverted)" } else { "" },
                t.model.av0,
                t.model.av1
            );
        }
        Command::Predict { input, model, out } => {
            let d = ctx.load(&input)?;
            let m = model_io::load(&model)?;
            let report = evaluate(&d, &m)?;
            let mut s = String::from("id,score,winner,prediction\n");
            for r in &report.rows {
                s.push_str(&format!(
                    "{},{},{},{}\n",
                    r.id,
                    r.score,
                    r.winner,
                    u8::from(r.prediction)
                ));
            }
            out_or_stdout(out.as_deref(), &s)?;
            log::info!("{:.0} objects/s", report.objects_per_second());
        }
        Command::Evaluate {
            input,
            model,
            report_out,
        } => {
            let d = ctx.load(&input)?;
            let m = model_io::load(&model)?;
            let report = evaluate(&d, &m)?;
            print!("{}", report.summary());
            if let Some(p) = report_out {
                write_with(&p, |w| report.write_csv(w))?;
            }
        }
        Command::Identify {
            input,
            predicate,
            out,
        } => {
            let d = ctx.load(&input)?;
            let ids = identify(&d, &ctx.predicate(&predicate)?)?;
            let mut s = String::from("id,positive,witness\n");
            for x in &ids {
                let w = x.witness.map_or_else(String::new, |w| w.to_string());
                s.push_str(&format!("{},{},{w}\n", x.id, u8::from(x.positive)));
            }
            out_or_stdout(out.as_deref(), &s)?;
        }
        Command::PrologGen {
            input,
            predicate,
            query_id,
            out,
        } => {
            let d = ctx.load(&input)?;
            let q = d
                .ids()
                .iter()
                .position(|&id| id == query_id)
                .ok_or_else(|| Error::Config(format!("no object with id {query_id}")))?;
            let (_, scaled) = autoscale(&d)?;
            let vectors = encode_dataset(&scaled, &ctx.predicate(&predicate)?)?;
            let positives: Vec<_> = (0..d.m())
                .filter(|&i| d.labels()[i] && i != q)
                .map(|i| vectors[i].clone())
                .collect();
            let sys = prologgen::build_system(&positives, &vectors[q])?;
            write_file(&out, &prologgen::emit_prolog(&sys))?;
            match prologgen::solve(&sys) {
                Some(k) => println!("query {query_id}: positive (rule {})", k + 1),
                None => println!("query {query_id}: not identified"),
            }
        }
        Command::Histogram { input, run: ra } => {
            let d = ctx.load(&input)?;
            let rc = ctx.run_config(&ra)?;
            let (t, report) = run(&d, &rc)?;
            let h = histogram::from_report(&report, &t.model.train_ids)?;
            let mut buf = Vec::new();
            h.write_table(&mut buf).map_err(|e| Error::Io {
                path: PathBuf::from("<stdout>"),
                source: e,
            })?;
            out_or_stdout(None, &String::from_utf8_lossy(&buf))?;
        }
        Command::Sweep {
            input,
            run: ra,
            t_range: tr,
            p_list,
            seeds,
            out_dir,
        } => {
            let d = ctx.load(&input)?;
            let rc = ctx.run_config(&ra)?;
            let t_values = match ctx.cfg.opt(tr, "t-range")? {
                None => Vec::new(),
                Some(s) => {
                    let parts: Vec<f64> = s
                        .split(':')
                        .map(|x: &str| {
                            x.trim()
                                .parse()
                                .map_err(|_| Error::Config(format!("bad t-range {s:?}")))
                        })
                        .collect::<Result<_>>()?;
                    match parts[..] {
                        [a, b, c] => t_range(a, b, c)?,
                        _ => {
                            return Err(Error::Config(format!(
                                "t-range must be start:stop:step, got {s:?}"
                            )))
                        }
                    }
                }
            };
            let p_values = ctx
                .cfg
                .opt(p_list, "p-list")?
                .map_or(Ok(Vec::new()), |s: String| parse_list(&s, "p"))?;
            let seeds = ctx
                .cfg
                .opt(seeds, "seeds")?
                .map_or(Ok(Vec::new()), |s: String| parse_seeds(&s))?;
            let spec = ExperimentSpec {
                run: rc,
                t_values,
                p_values,
                seeds,
                out_dir,
            };
            let outcome = run_experiment(&d, &spec)?;
            print!(
                "{}",
                fs::read_to_string(spec.out_dir.join("seeds.csv")).unwrap_or_default()
            );
            if let Some((cell, msg)) = outcome.failures.first() {
                return Err(Error::PartialFailure {
                    failed: outcome.failures.len(),
                    total: outcome.failures.len() + outcome.results.len(),
                    first: format!("cell {}: {msg}", cell.index),
                });
            }
        }
        Command::GenSynthetic {
            m,
            n,
            defect_rate,
            archetypes,
            archetype_size,
            magnitude,
            noise_sigma,
            out,
        } => {
            let m = ctx.cfg.get(m, "m", 10_000)?;
            let n = ctx.cfg.get(n, "n", 900)?;
            let base = SyntheticSpec::new(
                m,
                n,
                ctx.cfg.get(defect_rate, "defect-rate", 0.05)?,
                ctx.cfg.get(archetypes, "archetypes", 2)?,
                ctx.seed,
            );
            let spec = SyntheticSpec {
                archetype_size: ctx.cfg.get(
                    archetype_size,
                    "archetype-size",
                    base.archetype_size,
                )?,
                magnitude: ctx.cfg.get(magnitude, "magnitude", base.magnitude)?,
                noise_sigma: ctx.cfg.get(noise_sigma, "noise-sigma", base.noise_sigma)?,
                ..base
            };
            let s = generate(&spec)?;
            s.data.save_csv(&out)?;
            println!(
                "wrote {} objects ({} positive) x {} columns",
                s.data.m(),
                s.data.positives(),
                s.data.n()
            );
        }
        Command::Plot {
            curve,
            out,
            gnuplot_out,
            title,
            xlabel,
            ylabel,
        } => {
            let text = fs::read_to_string(&curve).map_err(|e| Error::Io {
                path: curve.clone(),
                source: e,
            })?;
            let pts = plot::parse_curve(&text)?;
            write_file(&out, &plot::render_svg(&pts, &title, &xlabel, &ylabel)?)?;
            if let Some(p) = gnuplot_out {
                write_file(&p, &plot::to_gnuplot(&pts)?)?;
            }
        }
    }
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e.class() {
        ErrorClass::Data => 1,
        ErrorClass::Config => 2,
        ErrorClass::Internal => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
