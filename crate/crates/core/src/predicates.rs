//! Predicate families and packed incidence vectors.
//!
//! Every scaled row is turned into a bit vector with one predicate per column:
//! bit `i` is set when coordinate `i` is an *excess* under the configured
//! family. Bits are packed 64 per word (bit `i` lives in bit `i % 64` of word
//! `i / 64`) and the Hamming weight is computed once on construction.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ingest::Dataset;

const WORD: usize = 64;

fn words_for(len: usize) -> usize {
    len.div_ceil(WORD)
}

/// Packed 0/1 vector of predicate outcomes with cached Hamming weight.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct IncidenceVector {
    words: Vec<u64>,
    len: usize,
    weight: u32,
}

impl IncidenceVector {
    pub fn zeros(len: usize) -> Self {
        IncidenceVector {
            words: vec![0; words_for(len)],
            len,
            weight: 0,
        }
    }

    /// Builds from packed words; bits at positions `>= len` must be clear.
    pub fn from_words(words: Vec<u64>, len: usize) -> Result<Self> {
        if words.len() != words_for(len) {
            return Err(Error::DimensionMismatch {
                expected: words_for(len),
                found: words.len(),
            });
        }
        if let Some(&last) = words.last() {
            let used = len - (words.len() - 1) * WORD;
            if used < WORD && last >> used != 0 {
                return Err(Error::Invariant("bits set beyond vector length".into()));
            }
        }
        let weight = words.iter().map(|w| w.count_ones()).sum();
        Ok(IncidenceVector { words, len, weight })
    }

    pub fn from_bits<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let mut words: Vec<u64> = Vec::new();
        let mut len = 0;
        for b in bits {
            if len % WORD == 0 {
                words.push(0);
            }
            if b {
                words[len / WORD] |= 1 << (len % WORD);
            }
            len += 1;
        }
        let weight = words.iter().map(|w| w.count_ones()).sum();
        IncidenceVector { words, len, weight }
    }

    /// Vector of length `len` with the given positions set.
    pub fn from_indices(len: usize, set: &[usize]) -> Result<Self> {
        let mut words = vec![0u64; words_for(len)];
        for &i in set {
            if i >= len {
                return Err(Error::IndexOutOfRange { index: i, n: len });
            }
            words[i / WORD] |= 1 << (i % WORD);
        }
        IncidenceVector::from_words(words, len)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Hamming weight `H(v)`.
    pub fn weight(&self) -> u32 {
        self.weight
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit {i} out of range {}", self.len);
        self.words[i / WORD] >> (i % WORD) & 1 == 1
    }

    /// Set positions in ascending order.
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(k, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(k * WORD + b)
            })
        })
    }

    pub fn to_bools(&self) -> Vec<bool> {
        (0..self.len).map(|i| self.get(i)).collect()
    }

    fn check_len(&self, other: &IncidenceVector) -> Result<()> {
        if self.len != other.len {
            return Err(Error::DimensionMismatch {
                expected: self.len,
                found: other.len,
            });
        }
        Ok(())
    }

    /// `H(self AND other)`.
    pub fn and_weight(&self, other: &IncidenceVector) -> Result<u32> {
        self.check_len(other)?;
        Ok(self.and_weight_unchecked(other))
    }

    #[inline]
    pub(crate) fn and_weight_unchecked(&self, other: &IncidenceVector) -> u32 {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones())
            .sum()
    }

    /// `I(self) ⊆ I(other)`.
    pub fn is_subset_of(&self, other: &IncidenceVector) -> Result<bool> {
        self.check_len(other)?;
        Ok(self
            .words
            .iter()
            .zip(&other.words)
            .all(|(a, b)| a & !b == 0))
    }

    /// Bitwise complement within the vector length.
    pub fn complement(&self) -> IncidenceVector {
        let mut words: Vec<u64> = self.words.iter().map(|w| !w).collect();
        let tail = self.len % WORD;
        if tail != 0 {
            if let Some(last) = words.last_mut() {
                *last &= (1u64 << tail) - 1;
            }
        }
        IncidenceVector {
            words,
            len: self.len,
            weight: self.len as u32 - self.weight,
        }
    }

    /// Little-endian byte image of the packed words, hex encoded.
    pub fn to_hex(&self) -> String {
        let bytes: Vec<u8> = self.words.iter().flat_map(|w| w.to_le_bytes()).collect();
        hex::encode(bytes)
    }

    pub fn from_hex(s: &str, len: usize) -> Result<Self> {
        let bytes =
            hex::decode(s.trim()).map_err(|e| Error::ModelFormat(format!("bad hex row: {e}")))?;
        if bytes.len() != words_for(len) * 8 {
            return Err(Error::ModelFormat(format!(
                "hex row has {} bytes, expected {}",
                bytes.len(),
                words_for(len) * 8
            )));
        }
        let words = bytes
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        IncidenceVector::from_words(words, len)
    }
}

impl fmt::Debug for IncidenceVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let bits: String = (0..self.len)
            .map(|i| if self.get(i) { '1' } else { '0' })
            .collect();
        write!(f, "IncidenceVector({bits}, H={})", self.weight)
    }
}

/// Anything that maps a scaled row to an incidence vector.
///
/// [`PredicateConfig`] covers the per-coordinate families; other predicate
/// sets (half-spaces and the like) can implement this and reuse the rest of
/// the pipeline.
pub trait PredicateFamily: Sync {
    fn encode_row(&self, row: &[f64]) -> Result<IncidenceVector>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PredicateKind {
    /// `x_i - t > 0`
    TExcess,
    /// `|x_i| - t > 0`
    AbsTExcess,
    /// `x_i < lo_i` or `x_i > hi_i`
    RefExcess,
}

impl PredicateKind {
    pub fn name(self) -> &'static str {
        match self {
            PredicateKind::TExcess => "t_excess",
            PredicateKind::AbsTExcess => "abs_t_excess",
            PredicateKind::RefExcess => "ref_excess",
        }
    }
}

impl FromStr for PredicateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "t" | "t_excess" | "t-excess" => Ok(PredicateKind::TExcess),
            "abs" | "abs_t_excess" | "abs-t-excess" => Ok(PredicateKind::AbsTExcess),
            "ref" | "ref_excess" | "ref-excess" => Ok(PredicateKind::RefExcess),
            other => Err(Error::Config(format!("unknown predicate kind {other:?}"))),
        }
    }
}

impl fmt::Display for PredicateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PredicateConfig {
    TExcess { t: f64 },
    AbsTExcess { t: f64 },
    RefExcess { lo: Vec<f64>, hi: Vec<f64> },
}

impl PredicateConfig {
    pub fn t_excess(t: f64) -> Result<Self> {
        Self::TExcess { t }.validated()
    }

    pub fn abs_t_excess(t: f64) -> Result<Self> {
        Self::AbsTExcess { t }.validated()
    }

    pub fn ref_excess(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        Self::RefExcess { lo, hi }.validated()
    }

    pub fn kind(&self) -> PredicateKind {
        match self {
            PredicateConfig::TExcess { .. } => PredicateKind::TExcess,
            PredicateConfig::AbsTExcess { .. } => PredicateKind::AbsTExcess,
            PredicateConfig::RefExcess { .. } => PredicateKind::RefExcess,
        }
    }

    /// Threshold `t` for the two t-families.
    pub fn threshold(&self) -> Option<f64> {
        match self {
            PredicateConfig::TExcess { t } | PredicateConfig::AbsTExcess { t } => Some(*t),
            PredicateConfig::RefExcess { .. } => None,
        }
    }

    pub fn validated(self) -> Result<Self> {
        match &self {
            PredicateConfig::TExcess { t } | PredicateConfig::AbsTExcess { t } => {
                if !(t.is_finite() && *t > 0.0) {
                    return Err(Error::Config(format!(
                        "threshold t must be finite and > 0, got {t}"
                    )));
                }
            }
            PredicateConfig::RefExcess { lo, hi } => {
                if lo.len() != hi.len() {
                    return Err(Error::DimensionMismatch {
                        expected: lo.len(),
                        found: hi.len(),
                    });
                }
                if let Some(j) =
                    (0..lo.len()).find(|&j| lo[j] > hi[j] || lo[j].is_nan() || hi[j].is_nan())
                {
                    return Err(Error::Config(format!(
                        "reference range {j} has lo {} > hi {}",
                        lo[j], hi[j]
                    )));
                }
            }
        }
        Ok(self)
    }

    /// Loads reference ranges from a `lo,hi` CSV (one line per column,
    /// optional header).
    pub fn parse_ref_ranges(text: &str) -> Result<Self> {
        let mut lo = Vec::new();
        let mut hi = Vec::new();
        for (k, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            let parsed = match f.as_slice() {
                [a, b] => a.parse::<f64>().ok().zip(b.parse::<f64>().ok()),
                _ => None,
            };
            match parsed {
                Some((a, b)) => {
                    lo.push(a);
                    hi.push(b);
                }
                None if k == 0 => continue,
                None => {
                    return Err(Error::Parse {
                        row: k + 1,
                        col: 0,
                        msg: "expected lo,hi".into(),
                    })
                }
            }
        }
        Self::ref_excess(lo, hi)
    }
}

impl PredicateFamily for PredicateConfig {
    fn encode_row(&self, row: &[f64]) -> Result<IncidenceVector> {
        encode(row, self)
    }
}

/// Encodes one scaled row. Inequalities are strict.
pub fn encode(row: &[f64], cfg: &PredicateConfig) -> Result<IncidenceVector> {
    let n = row.len();
    let mut words = vec![0u64; words_for(n)];
    let mut set = |i: usize| words[i / WORD] |= 1 << (i % WORD);
    match cfg {
        PredicateConfig::TExcess { t } => {
            for (i, &x) in row.iter().enumerate() {
                if x - t > 0.0 {
                    set(i);
                }
            }
        }
        PredicateConfig::AbsTExcess { t } => {
            for (i, &x) in row.iter().enumerate() {
                if x.abs() - t > 0.0 {
                    set(i);
                }
            }
        }
        PredicateConfig::RefExcess { lo, hi } => {
            if lo.len() != n || hi.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: lo.len(),
                    found: n,
                });
            }
            for (i, &x) in row.iter().enumerate() {
                if x < lo[i] || x > hi[i] {
                    set(i);
                }
            }
        }
    }
    let weight = words.iter().map(|w| w.count_ones()).sum();
    Ok(IncidenceVector {
        words,
        len: n,
        weight,
    })
}

/// Row-parallel batch encoding; output order follows the dataset.
pub fn encode_dataset<P: PredicateFamily + ?Sized>(
    d: &Dataset,
    cfg: &P,
) -> Result<Vec<IncidenceVector>> {
    (0..d.m())
        .into_par_iter()
        .map(|i| cfg.encode_row(d.row(i)))
        .collect()
}
