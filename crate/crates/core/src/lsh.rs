//! Random-hyperplane LSH tokens, sign binarization and distance functions.
//!
//! A hasher holds `num_bands * bits_per_band` unit hyperplanes drawn from a
//! ChaCha stream seeded by `seed`. Each band turns an embedding into an
//! `r`-bit sign pattern; the pair (band, pattern) is a token. Two vectors at
//! angle `theta` agree on one bit with probability `1 - theta / pi`, so a band
//! collides with probability `(1 - theta / pi)^r`.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Embedding;

/// Upper bound on the total number of hyperplanes.
pub const MAX_HYPERPLANES: usize = 4096;
/// A band pattern is stored in a `u64`.
pub const MAX_BITS_PER_BAND: usize = 64;

pub const DEFAULT_NUM_BANDS: usize = 32;
pub const DEFAULT_BITS_PER_BAND: usize = 8;

/// Parameters that fully determine a hasher.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HasherConfig {
    pub dim: usize,
    pub num_bands: usize,
    pub bits_per_band: usize,
    pub seed: u64,
}

impl HasherConfig {
    pub fn new(dim: usize, num_bands: usize, bits_per_band: usize, seed: u64) -> Self {
        HasherConfig {
            dim,
            num_bands,
            bits_per_band,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::Config("dim must be at least 1".into()));
        }
        if self.num_bands == 0 {
            return Err(Error::Config("num_bands must be at least 1".into()));
        }
        if self.bits_per_band == 0 {
            return Err(Error::Config("bits_per_band must be at least 1".into()));
        }
        if self.bits_per_band > MAX_BITS_PER_BAND {
            return Err(Error::Config(format!(
                "bits_per_band {} exceeds {MAX_BITS_PER_BAND}",
                self.bits_per_band
            )));
        }
        match self.num_bands.checked_mul(self.bits_per_band) {
            Some(n) if n <= MAX_HYPERPLANES => Ok(()),
            _ => Err(Error::Config(format!(
                "num_bands * bits_per_band must not exceed {MAX_HYPERPLANES}"
            ))),
        }
    }

    pub fn num_hyperplanes(&self) -> usize {
        self.num_bands * self.bits_per_band
    }
}

/// One LSH key: a band index and the sign pattern observed in that band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Token {
    pub band: u32,
    pub pattern: u64,
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "b{}:{:x}", self.band, self.pattern)
    }
}

impl FromStr for Token {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidInput(format!("not a token: {s:?}"));
        let rest = s.strip_prefix('b').ok_or_else(bad)?;
        let (band, pattern) = rest.split_once(':').ok_or_else(bad)?;
        if band.is_empty() || !band.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        if pattern.is_empty() || !pattern.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f')) {
            return Err(bad());
        }
        Ok(Token {
            band: band.parse().map_err(|_| bad())?,
            pattern: u64::from_str_radix(pattern, 16).map_err(|_| bad())?,
        })
    }
}

/// Seeded bank of unit hyperplanes grouped into bands.
#[derive(Debug, Clone)]
pub struct LshHasher {
    config: HasherConfig,
    // row-major: hyperplane (band * r + bit) occupies dim consecutive values
    hyperplanes: Vec<f64>,
}

impl LshHasher {
    /// Builds the hyperplane bank. Identical configs yield bit-identical banks.
    pub fn new(config: HasherConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut hyperplanes = Vec::with_capacity(config.num_hyperplanes() * config.dim);
        for _ in 0..config.num_hyperplanes() {
            let start = hyperplanes.len();
            loop {
                hyperplanes.truncate(start);
                let mut norm_sq = 0.0;
                for _ in 0..config.dim {
                    let v: f64 = StandardNormal.sample(&mut rng);
                    norm_sq += v * v;
                    hyperplanes.push(v);
                }
                if norm_sq > 0.0 {
                    let norm = norm_sq.sqrt();
                    hyperplanes[start..].iter_mut().for_each(|v| *v /= norm);
                    break;
                }
            }
        }
        Ok(LshHasher { config, hyperplanes })
    }

    pub fn config(&self) -> &HasherConfig {
        &self.config
    }

    pub fn dim(&self) -> usize {
        self.config.dim
    }

    pub fn num_bands(&self) -> usize {
        self.config.num_bands
    }

    pub fn bits_per_band(&self) -> usize {
        self.config.bits_per_band
    }

    pub fn hyperplane(&self, band: usize, bit: usize) -> &[f64] {
        let d = self.config.dim;
        let i = band * self.config.bits_per_band + bit;
        &self.hyperplanes[i * d..(i + 1) * d]
    }

    /// One token per band, ordered by band. Bit `i` of a pattern is set iff
    /// the projection onto hyperplane `i` of the band is `>= 0`.
    pub fn tokens(&self, embedding: &Embedding) -> Result<Vec<Token>> {
        Ok(self
            .patterns(embedding.as_slice())?
            .into_iter()
            .enumerate()
            .map(|(band, pattern)| Token {
                band: band as u32,
                pattern,
            })
            .collect())
    }

    /// Band patterns indexed by band.
    pub fn patterns(&self, values: &[f32]) -> Result<Vec<u64>> {
        if values.len() != self.config.dim {
            return Err(Error::DimensionMismatch {
                id: "<embedding>".into(),
                expected: self.config.dim,
                found: values.len(),
            });
        }
        let d = self.config.dim;
        let r = self.config.bits_per_band;
        let mut out = Vec::with_capacity(self.config.num_bands);
        for band in self.hyperplanes.chunks_exact(d * r) {
            let mut pattern = 0u64;
            for (bit, plane) in band.chunks_exact(d).enumerate() {
                let dot: f64 = plane.iter().zip(values).map(|(p, v)| p * f64::from(*v)).sum();
                if dot >= 0.0 {
                    pattern |= 1 << bit;
                }
            }
            out.push(pattern);
        }
        Ok(out)
    }
}

/// Shorthand for [`LshHasher::new`].
pub fn make_hasher(dim: usize, num_bands: usize, bits_per_band: usize, seed: u64) -> Result<LshHasher> {
    LshHasher::new(HasherConfig::new(dim, num_bands, bits_per_band, seed))
}

/// Fixed-length bit string.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryCode {
    len: usize,
    words: Vec<u64>,
}

impl BinaryCode {
    pub fn from_bits(bits: &[bool]) -> Self {
        let mut words = vec![0u64; bits.len().div_ceil(64)];
        for (i, &b) in bits.iter().enumerate() {
            if b {
                words[i / 64] |= 1 << (i % 64);
            }
        }
        BinaryCode {
            len: bits.len(),
            words,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn bit(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn bits(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(|i| self.bit(i))
    }

    pub fn complement(&self) -> Self {
        let mut words: Vec<u64> = self.words.iter().map(|w| !w).collect();
        if !self.len.is_multiple_of(64) {
            if let Some(last) = words.last_mut() {
                *last &= (1u64 << (self.len % 64)) - 1;
            }
        }
        BinaryCode { len: self.len, words }
    }

    pub(crate) fn hamming_unchecked(&self, other: &BinaryCode) -> u32 {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones())
            .sum()
    }
}

/// Bit `i` is set iff `values[i] > 0`.
pub fn binarize(embedding: &Embedding) -> BinaryCode {
    binarize_slice(embedding.as_slice())
}

pub(crate) fn binarize_slice(values: &[f32]) -> BinaryCode {
    let mut words = vec![0u64; values.len().div_ceil(64)];
    for (i, v) in values.iter().enumerate() {
        if *v > 0.0 {
            words[i / 64] |= 1 << (i % 64);
        }
    }
    BinaryCode {
        len: values.len(),
        words,
    }
}

pub fn hamming_distance(a: &BinaryCode, b: &BinaryCode) -> Result<u32> {
    if a.len != b.len {
        return Err(Error::InvalidInput(format!(
            "binary code lengths differ: {} vs {}",
            a.len, b.len
        )));
    }
    Ok(a.hamming_unchecked(b))
}

/// `1 - cos(a, b)`, computed in double precision.
pub fn cosine_distance(a: &Embedding, b: &Embedding) -> Result<f64> {
    cosine_distance_slices(a.as_slice(), b.as_slice())
}

pub(crate) fn cosine_distance_slices(a: &[f32], b: &[f32]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::InvalidInput(format!(
            "embedding dimensions differ: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let (mut dot, mut na, mut nb) = (0.0f64, 0.0f64, 0.0f64);
    for (x, y) in a.iter().zip(b) {
        let (x, y) = (f64::from(*x), f64::from(*y));
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Err(Error::InvalidInput("cosine distance of a zero vector".into()));
    }
    Ok((1.0 - dot / (na.sqrt() * nb.sqrt())).clamp(0.0, 2.0))
}
