//! Plain-text model files.
//!
//! ```text
//! excess-model 1
//! predicate = abs_t_excess
//! t = 0.5
//! similarity = coincidence
//! aggregator = max
//! quality = kappa
//! cutoff = 0.53
//! inverted = 0
//! av0 = 0.21
//! av1 = 0.93
//! [columns]
//! <one name per line>
//! [scaling]
//! column,mu,sigma
//! ...
//! [ref]            (ref_excess only)
//! lo,hi
//! ...
//! [train]
//! id,bits
//! <id>,<hex words>
//! ```
//!
//! Floats are written in shortest round-trip form, so a saved model reloads
//! bit-identically.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::pipeline::TrainedModel;
use crate::predicates::{IncidenceVector, PredicateConfig, PredicateKind};
use crate::scale::ScalingParams;

const MAGIC: &str = "excess-model";
const VERSION: u32 = 1;

pub fn to_text(m: &TrainedModel) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{MAGIC} {VERSION}");
    let _ = writeln!(s, "predicate = {}", m.predicate.kind().name());
    if let Some(t) = m.predicate.threshold() {
        let _ = writeln!(s, "t = {t}");
    }
    let _ = writeln!(s, "similarity = {}", m.similarity);
    let _ = writeln!(s, "aggregator = {}", m.agg);
    let _ = writeln!(s, "quality = {}", m.q_metric);
    let _ = writeln!(s, "cutoff = {}", m.cutoff);
    let _ = writeln!(s, "inverted = {}", u8::from(m.inverted));
    let _ = writeln!(s, "av0 = {}", m.av0);
    let _ = writeln!(s, "av1 = {}", m.av1);
    s.push_str("[columns]\n");
    for c in &m.column_names {
        let _ = writeln!(s, "{c}");
    }
    s.push_str("[scaling]\n");
    let mut buf = Vec::new();
    m.scaling
        .write_csv(&mut buf)
        .expect("writing to a Vec cannot fail");
    s.push_str(&String::from_utf8_lossy(&buf));
    if let PredicateConfig::RefExcess { lo, hi } = &m.predicate {
        s.push_str("[ref]\nlo,hi\n");
        for (l, h) in lo.iter().zip(hi) {
            let _ = writeln!(s, "{l},{h}");
        }
    }
    s.push_str("[train]\nid,bits\n");
    for (id, v) in m.train_ids.iter().zip(&m.train_vectors) {
        let _ = writeln!(s, "{id},{}", v.to_hex());
    }
    s
}

fn fmt_err(msg: impl Into<String>) -> Error {
    Error::ModelFormat(msg.into())
}

pub fn from_text(text: &str) -> Result<TrainedModel> {
    let mut lines = text.lines();
    let head = lines.next().ok_or_else(|| fmt_err("empty file"))?;
    match head.split_whitespace().collect::<Vec<_>>()[..] {
        [MAGIC, v] if v == VERSION.to_string() => {}
        [MAGIC, v] => return Err(fmt_err(format!("unsupported format version {v}"))),
        _ => return Err(fmt_err("missing header line")),
    }

    let mut keys: HashMap<String, String> = HashMap::new();
    let mut sections: HashMap<String, Vec<String>> = HashMap::new();
    let mut current: Option<String> = None;
    for line in lines {
        let t = line.trim();
        if let Some(name) = t.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            if sections.contains_key(name) {
                return Err(fmt_err(format!("duplicate section [{name}]")));
            }
            sections.insert(name.to_string(), Vec::new());
            current = Some(name.to_string());
            continue;
        }
        match &current {
            Some(sec) => sections
                .get_mut(sec)
                .expect("section exists")
                .push(line.to_string()),
            None if t.is_empty() => {}
            None => {
                let (k, v) = t
                    .split_once('=')
                    .ok_or_else(|| fmt_err(format!("bad line {t:?}")))?;
                keys.insert(k.trim().to_string(), v.trim().to_string());
            }
        }
    }
    let key = |k: &str| {
        keys.get(k)
            .ok_or_else(|| fmt_err(format!("missing key {k}")))
    };
    let float = |k: &str| -> Result<f64> {
        key(k)?
            .parse()
            .map_err(|_| fmt_err(format!("bad number for {k}")))
    };
    let section = |k: &str| {
        sections
            .get(k)
            .ok_or_else(|| fmt_err(format!("missing section [{k}]")))
    };

    let column_names: Vec<String> = section("columns")?.clone();
    let scaling = ScalingParams::parse_csv(&section("scaling")?.join("\n"))?;
    if scaling.n() != column_names.len() {
        return Err(fmt_err("scaling and column counts differ"));
    }
    let n = scaling.n();

    let kind: PredicateKind = key("predicate")?.parse()?;
    let predicate = match kind {
        PredicateKind::TExcess => PredicateConfig::t_excess(float("t")?)?,
        PredicateKind::AbsTExcess => PredicateConfig::abs_t_excess(float("t")?)?,
        PredicateKind::RefExcess => {
            let mut rows = section("ref")?.iter().filter(|l| !l.trim().is_empty());
            if rows.next().map(|h| h.trim()) != Some("lo,hi") {
                return Err(fmt_err("[ref] must start with lo,hi"));
            }
            PredicateConfig::parse_ref_ranges(&rows.cloned().collect::<Vec<_>>().join("\n"))?
        }
    };

    let mut train_ids = Vec::new();
    let mut train_vectors = Vec::new();
    for line in section("train")?
        .iter()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
    {
        let (id, hex) = line
            .split_once(',')
            .ok_or_else(|| fmt_err(format!("bad train line {line:?}")))?;
        train_ids.push(
            id.trim()
                .parse()
                .map_err(|_| fmt_err(format!("bad id {id:?}")))?,
        );
        train_vectors.push(IncidenceVector::from_hex(hex.trim(), n)?);
    }
    if train_ids.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let flag = key("inverted")?;
    let inverted = match flag.as_str() {
        "0" => false,
        "1" => true,
        _ => return Err(fmt_err(format!("inverted must be 0 or 1, got {flag:?}"))),
    };
    Ok(TrainedModel {
        scaling,
        predicate,
        similarity: key("similarity")?.parse()?,
        agg: key("aggregator")?.parse()?,
        q_metric: key("quality")?.parse()?,
        column_names,
        train_ids,
        train_vectors,
        cutoff: float("cutoff")?,
        inverted,
        av0: float("av0")?,
        av1: float("av1")?,
    })
}

pub fn save(m: &TrainedModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, to_text(m)).map_err(|e| Error::io(path, e))
}

pub fn load(path: impl AsRef<Path>) -> Result<TrainedModel> {
    let path = path.as_ref();
    from_text(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::QualityMetric;
    use crate::similarity::{Aggregator, SimilarityFn};

    fn model(predicate: PredicateConfig) -> TrainedModel {
        TrainedModel {
            scaling: ScalingParams {
                mu: vec![0.1, 1.0 / 3.0, -2.0],
                sigma: vec![1.0, 0.0, 0.7],
            },
            predicate,
            similarity: SimilarityFn::KappaBits,
            agg: Aggregator::Min,
            q_metric: QualityMetric::Accuracy,
            column_names: vec!["a".into(), "b c".into(), "d,e".into()],
            train_ids: vec![4, 17],
            train_vectors: vec![
                IncidenceVector::from_indices(3, &[0, 2]).unwrap(),
                IncidenceVector::from_indices(3, &[]).unwrap(),
            ],
            cutoff: 0.1 + 0.2,
            inverted: true,
            av0: 0.123456789012345,
            av1: 0.05,
        }
    }

    #[test]
    fn round_trip() {
        for p in [
            PredicateConfig::abs_t_excess(0.5).unwrap(),
            PredicateConfig::t_excess(1e-3).unwrap(),
            PredicateConfig::ref_excess(vec![-1.0, -2.5, 0.0], vec![1.0, 2.5, 0.1]).unwrap(),
        ] {
            let m = model(p);
            assert_eq!(from_text(&to_text(&m)).unwrap(), m);
        }
    }

    #[test]
    fn rejects_bad_files() {
        let good = to_text(&model(PredicateConfig::t_excess(0.5).unwrap()));
        assert!(from_text("").is_err());
        assert!(from_text(&good.replace("excess-model 1", "excess-model 2")).is_err());
        assert!(from_text(&good.replace("cutoff = ", "cutoff = x")).is_err());
        assert!(from_text(&good.replace("inverted = 1", "inverted = yes")).is_err());
        assert!(from_text(&good.replace("[scaling]", "[scal]")).is_err());
        let truncated: String = good
            .lines()
            .take_while(|l| *l != "[train]")
            .map(|l| format!("{l}\n"))
            .collect();
        assert!(from_text(&truncated).is_err());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.txt");
        let m = model(PredicateConfig::t_excess(0.5).unwrap());
        save(&m, &path).unwrap();
        assert_eq!(load(&path).unwrap(), m);
        assert!(matches!(
            load(dir.path().join("missing")),
            Err(Error::Io { .. })
        ));
    }
}
