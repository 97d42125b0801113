//! Reversible token <-> vector transform.
//!
//! A token is serialized to UTF-16 code units, zero-padded to `l_max` digits
//! and read as a base-2^16 integer `N`. Each residue `N mod m_i` becomes a
//! phase `2π r_i / m_i` on the unit circle, stored as a `(sin, cos)` pair.
//! Decoding reads the phases back with `atan2`, rounds them to residues and
//! rebuilds `N` with the Chinese Remainder Theorem.
//!
//! Round trips are exact as long as the basis capacity exceeds `2^(16 l_max)`
//! and every pair's phase error stays below `π / m_i`.

mod io;

pub use io::{read_binary, read_json, write_binary, write_json, VectorIoError, VECTOR_MAGIC};

use std::f64::consts::{PI, TAU};

use num_bigint::BigUint;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

use crate::modular_math::{self, generate_basis, MathError, ModulusBasis};

/// Digit base of the token integer.
pub const BASE: u32 = 1 << 16;
pub const DEFAULT_L_MAX: usize = 24;
pub const DEFAULT_DIM: usize = 512;
pub const DEFAULT_MIN_MODULUS: u64 = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CodecError {
    #[error("token is empty")]
    EmptyToken,
    #[error("token has {len} UTF-16 units, limit is {l_max}")]
    TokenTooLong { len: usize, l_max: usize },
    #[error("token contains U+0000, which is reserved for padding")]
    ContainsNull,
    #[error("integer does not decode to valid text: {0}")]
    InvalidCodePoint(String),
    #[error("integer needs more than {l_max} base-65536 digits")]
    IntegerOutOfRange { l_max: usize },
    #[error("phase of pair {index} is undefined (sin = cos = 0 or non-finite)")]
    DegeneratePhase { index: usize },
    #[error("expected a {expected}-dimensional embedding, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error(transparent)]
    Math(#[from] MathError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    #[default]
    Nfc,
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CodecConfig {
    l_max: usize,
    basis: ModulusBasis,
    normalization: Normalization,
}

impl Default for CodecConfig {
    fn default() -> Self {
        Self::with_dim(DEFAULT_DIM, DEFAULT_L_MAX, DEFAULT_MIN_MODULUS)
    }
}

impl CodecConfig {
    pub fn new(basis: ModulusBasis, l_max: usize, normalization: Normalization) -> Self {
        assert!(l_max >= 1, "l_max must be at least 1");
        Self {
            l_max,
            basis,
            normalization,
        }
    }

    /// Config whose basis is the first `dim / 2` primes `>= min_modulus`.
    pub fn with_dim(dim: usize, l_max: usize, min_modulus: u64) -> Self {
        assert!(dim >= 2 && dim.is_multiple_of(2), "dimension must be even and positive");
        Self::new(
            generate_basis(dim / 2, min_modulus),
            l_max,
            Normalization::default(),
        )
    }

    pub fn with_normalization(mut self, normalization: Normalization) -> Self {
        self.normalization = normalization;
        self
    }

    pub fn l_max(&self) -> usize {
        self.l_max
    }

    pub fn basis(&self) -> &ModulusBasis {
        &self.basis
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    /// `B^l_max`, one past the largest token integer.
    pub fn integer_bound(&self) -> BigUint {
        BigUint::from(1u32) << (16 * self.l_max)
    }

    /// Whether every legal token integer is below the basis capacity.
    pub fn is_reversible(&self) -> bool {
        self.basis.capacity() > &self.integer_bound()
    }

    pub fn normalize(&self, token: &str) -> String {
        match self.normalization {
            Normalization::Nfc => token.nfc().collect(),
            Normalization::None => token.to_owned(),
        }
    }
}

/// Integer form of a token, `N = Σ u_j B^(l_max - j)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenInteger {
    pub value: BigUint,
    /// Number of UTF-16 units before padding.
    pub source_length: usize,
}

/// `[sin_1, cos_1, sin_2, cos_2, ...]`, one pair per modulus.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicEmbedding(Vec<f64>);

impl HarmonicEmbedding {
    pub fn from_components(components: Vec<f64>) -> Self {
        Self(components)
    }

    pub fn components(&self) -> &[f64] {
        &self.0
    }

    pub fn into_components(self) -> Vec<f64> {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.0.chunks_exact(2).map(|p| (p[0], p[1]))
    }
}

/// Result of [`decode`]. `capacity_exceeded` marks a basis too small to
/// distinguish every token, in which case the text corresponds to `N mod M`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decoded {
    pub token: String,
    pub capacity_exceeded: bool,
}

pub fn token_to_integer(token: &str, config: &CodecConfig) -> Result<TokenInteger, CodecError> {
    let normalized = config.normalize(token);
    if normalized.is_empty() {
        return Err(CodecError::EmptyToken);
    }
    let units: Vec<u16> = normalized.encode_utf16().collect();
    if units.contains(&0) {
        return Err(CodecError::ContainsNull);
    }
    if units.len() > config.l_max {
        return Err(CodecError::TokenTooLong {
            len: units.len(),
            l_max: config.l_max,
        });
    }
    let mut bytes = Vec::with_capacity(2 * config.l_max);
    for unit in &units {
        bytes.extend_from_slice(&unit.to_be_bytes());
    }
    bytes.resize(2 * config.l_max, 0);
    Ok(TokenInteger {
        value: BigUint::from_bytes_be(&bytes),
        source_length: units.len(),
    })
}

/// Inverse of [`token_to_integer`] on its image.
pub fn integer_to_token(n: &BigUint, config: &CodecConfig) -> Result<String, CodecError> {
    if n.is_zero() {
        return Err(CodecError::EmptyToken);
    }
    let width = 2 * config.l_max;
    let raw = n.to_bytes_be();
    if raw.len() > width {
        return Err(CodecError::IntegerOutOfRange {
            l_max: config.l_max,
        });
    }
    let mut bytes = vec![0u8; width - raw.len()];
    bytes.extend_from_slice(&raw);

    let mut units: Vec<u16> = bytes
        .chunks_exact(2)
        .map(|b| u16::from_be_bytes([b[0], b[1]]))
        .collect();
    while units.last() == Some(&0) {
        units.pop();
    }
    if let Some(pos) = units.iter().position(|&u| u == 0) {
        return Err(CodecError::InvalidCodePoint(format!(
            "padding digit inside token at position {pos}"
        )));
    }
    String::from_utf16(&units).map_err(|e| CodecError::InvalidCodePoint(e.to_string()))
}

/// Projects residues onto the unit circle, one `(sin, cos)` pair per modulus.
pub fn project(residues: &[u64], basis: &ModulusBasis) -> HarmonicEmbedding {
    let mut out = Vec::with_capacity(2 * residues.len());
    for (&r, &m) in residues.iter().zip(basis.moduli()) {
        let theta = TAU * r as f64 / m as f64;
        let (s, c) = theta.sin_cos();
        out.push(s);
        out.push(c);
    }
    HarmonicEmbedding(out)
}

pub fn encode_integer(n: &BigUint, basis: &ModulusBasis) -> HarmonicEmbedding {
    project(&modular_math::residues(n, basis), basis)
}

pub fn encode(token: &str, config: &CodecConfig) -> Result<HarmonicEmbedding, CodecError> {
    let n = token_to_integer(token, config)?;
    Ok(encode_integer(&n.value, &config.basis))
}

/// Reads a residue back from one `(sin, cos)` pair.
///
/// Negative `atan2` angles are shifted into `[0, 2π)` before scaling; the
/// scaled phase is rounded half away from zero and reduced mod `modulus`.
pub fn recover_residue(sin_val: f64, cos_val: f64, modulus: u64) -> Option<u64> {
    if (sin_val == 0.0 && cos_val == 0.0) || !sin_val.is_finite() || !cos_val.is_finite() {
        return None;
    }
    let mut angle = sin_val.atan2(cos_val);
    if angle < 0.0 {
        angle += TAU;
    }
    let scaled = (angle / TAU * modulus as f64).round() as u64;
    Some(scaled % modulus)
}

pub fn decode_integer(
    embedding: &HarmonicEmbedding,
    basis: &ModulusBasis,
) -> Result<BigUint, CodecError> {
    if embedding.dim() != basis.dim() {
        return Err(CodecError::DimensionMismatch {
            expected: basis.dim(),
            actual: embedding.dim(),
        });
    }
    let residues = embedding
        .pairs()
        .zip(basis.moduli())
        .enumerate()
        .map(|(index, ((s, c), &m))| {
            recover_residue(s, c, m).ok_or(CodecError::DegeneratePhase { index })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(modular_math::crt_reconstruct(&residues, basis)?)
}

pub fn decode(embedding: &HarmonicEmbedding, config: &CodecConfig) -> Result<Decoded, CodecError> {
    let n = decode_integer(embedding, &config.basis)?;
    Ok(Decoded {
        token: integer_to_token(&n, config)?,
        capacity_exceeded: !config.is_reversible(),
    })
}

/// Largest per-component noise amplitude `a` for which any perturbation in
/// `[-a, a]^2` moves every pair's phase by less than half a step of the
/// largest modulus, so decoding stays exact.
///
/// A perturbation of length `δ` turns a unit vector by at most `asin(δ)`,
/// and the worst case is `δ = √2 a`.
pub fn exact_noise_bound(basis: &ModulusBasis) -> f64 {
    (PI / basis.largest_modulus() as f64).sin() / 2f64.sqrt()
}

/// Splits an over-long token into consecutive pieces of at most `l_max`
/// UTF-16 units without separating surrogate pairs.
pub fn chunk_token(token: &str, l_max: usize) -> Vec<String> {
    let mut chunks = Vec::new();
    let mut current = String::new();
    let mut units = 0;
    for ch in token.chars() {
        let w = ch.len_utf16();
        if units + w > l_max && !current.is_empty() {
            chunks.push(std::mem::take(&mut current));
            units = 0;
        }
        current.push(ch);
        units += w;
    }
    if !current.is_empty() {
        chunks.push(current);
    }
    chunks
}
