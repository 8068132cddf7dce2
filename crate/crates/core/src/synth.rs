//! Planted-defect test data.
//!
//! Negatives are standard-normal rows. Each positive carries one archetype:
//! a fixed set of columns pushed to `magnitude`, plus `noise_sigma` Gaussian
//! noise on every column. Archetype column sets are disjoint.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::ingest::Dataset;
use crate::pipeline::shuffle;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub m: usize,
    pub n: usize,
    /// Fraction of positive rows, in (0, 1).
    pub defect_rate: f64,
    pub archetypes: usize,
    /// Columns per archetype.
    pub archetype_size: usize,
    pub magnitude: f64,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn new(m: usize, n: usize, defect_rate: f64, archetypes: usize, seed: u64) -> Self {
        SyntheticSpec {
            m,
            n,
            defect_rate,
            archetypes,
            archetype_size: (n / 10).max(1),
            magnitude: 3.0,
            noise_sigma: 0.6,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.m == 0 || self.n == 0 {
            return bad("m and n must be positive".into());
        }
        if !(self.defect_rate > 0.0 && self.defect_rate < 1.0) {
            return bad(format!(
                "defect_rate must be in (0, 1), got {}",
                self.defect_rate
            ));
        }
        if self.archetypes == 0 || self.archetype_size == 0 {
            return bad("need at least one archetype with at least one column".into());
        }
        if self.archetypes * self.archetype_size > self.n {
            return bad(format!(
                "{} archetypes of {} columns do not fit into {} columns",
                self.archetypes, self.archetype_size, self.n
            ));
        }
        if !(self.magnitude.is_finite() && self.noise_sigma.is_finite() && self.noise_sigma >= 0.0)
        {
            return bad("magnitude and noise_sigma must be finite, noise_sigma >= 0".into());
        }
        Ok(())
    }

    pub fn positives(&self) -> usize {
        (self.m as f64 * self.defect_rate).floor() as usize
    }
}

/// Generated data with its ground truth.
#[derive(Debug, Clone)]
pub struct Synthetic {
    pub data: Dataset,
    /// Ascending column indices per archetype.
    pub archetype_columns: Vec<Vec<usize>>,
    /// Archetype of each row, `None` for negatives.
    pub row_archetype: Vec<Option<usize>>,
}

fn shuffled(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    let mut v: Vec<usize> = (0..n).collect();
    shuffle(rng, &mut v);
    v
}

pub fn generate(spec: &SyntheticSpec) -> Result<Synthetic> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut positive_rows = shuffled(&mut rng, spec.m);
    positive_rows.truncate(spec.positives());
    positive_rows.sort_unstable();
    let mut row_archetype = vec![None; spec.m];
    for (k, &i) in positive_rows.iter().enumerate() {
        row_archetype[i] = Some(k % spec.archetypes);
    }

    let cols = shuffled(&mut rng, spec.n);
    let archetype_columns: Vec<Vec<usize>> = (0..spec.archetypes)
        .map(|a| {
            let mut c = cols[a * spec.archetype_size..(a + 1) * spec.archetype_size].to_vec();
            c.sort_unstable();
            c
        })
        .collect();
    let mut planted = vec![vec![false; spec.n]; spec.archetypes];
    for (a, cs) in archetype_columns.iter().enumerate() {
        for &j in cs {
            planted[a][j] = true;
        }
    }

    let mut values = Vec::with_capacity(spec.m * spec.n);
    for arch in &row_archetype {
        match arch {
            None => values.extend((0..spec.n).map(|_| rng.sample::<f64, _>(StandardNormal))),
            Some(a) => values.extend((0..spec.n).map(|j| {
                let z: f64 = rng.sample(StandardNormal);
                let base = if planted[*a][j] { spec.magnitude } else { 0.0 };
                base + spec.noise_sigma * z
            })),
        }
    }
    let labels = row_archetype.iter().map(Option::is_some).collect();
    let data = Dataset::new(
        values,
        spec.n,
        labels,
        (0..spec.m as u64).collect(),
        Vec::new(),
    )?;
    Ok(Synthetic {
        data,
        archetype_columns,
        row_archetype,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn positive_count_is_floor() {
        let s = generate(&SyntheticSpec::new(1000, 40, 0.05, 2, 3)).unwrap();
        assert_eq!(s.data.positives(), 50);
        let s = generate(&SyntheticSpec::new(999, 40, 0.05, 2, 3)).unwrap();
        assert_eq!(s.data.positives(), 49);
    }

    #[test]
    fn deterministic_under_seed() {
        let spec = SyntheticSpec::new(200, 30, 0.1, 3, 9);
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        assert_eq!(a.data, b.data);
        let c = generate(&SyntheticSpec { seed: 10, ..spec }).unwrap();
        assert_ne!(a.data, c.data);
    }

    #[test]
    fn archetypes_are_disjoint_and_planted() {
        let spec = SyntheticSpec {
            noise_sigma: 0.0,
            ..SyntheticSpec::new(100, 50, 0.2, 3, 1)
        };
        let s = generate(&spec).unwrap();
        let mut all: Vec<usize> = s.archetype_columns.concat();
        all.sort_unstable();
        all.dedup();
        assert_eq!(all.len(), 15);
        for (i, a) in s.row_archetype.iter().enumerate() {
            if let Some(a) = a {
                for j in 0..50 {
                    let want = if s.archetype_columns[*a].contains(&j) {
                        3.0
                    } else {
                        0.0
                    };
                    assert_eq!(s.data.value(i, j), want);
                }
            }
        }
    }

    #[test]
    fn invalid_specs() {
        assert!(generate(&SyntheticSpec::new(100, 10, 0.0, 1, 1)).is_err());
        assert!(generate(&SyntheticSpec::new(100, 10, 1.0, 1, 1)).is_err());
        assert!(generate(&SyntheticSpec::new(100, 10, 0.1, 11, 1)).is_err());
        assert!(generate(&SyntheticSpec::new(100, 10, 0.1, 0, 1)).is_err());
    }
}
