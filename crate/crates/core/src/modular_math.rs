//! Modular arithmetic over arbitrary-precision integers.
//!
//! A [`ModulusBasis`] is an ordered set of pairwise-coprime moduli together
//! with the constants needed to rebuild an integer from its residues via the
//! Chinese Remainder Theorem. The basis is immutable once built.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Current version of the serialized basis format.
pub const BASIS_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MathError {
    #[error("{a} has no inverse modulo {m} (gcd = {gcd})")]
    NotInvertible { a: u64, m: u64, gcd: u64 },
    #[error("residue {residue} at position {index} is not below modulus {modulus}")]
    ResidueOutOfRange {
        index: usize,
        residue: u64,
        modulus: u64,
    },
    #[error("expected {expected} residues, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("invalid basis: {0}")]
    InvalidBasis(String),
}

/// Ordered, pairwise-coprime moduli with precomputed CRT constants.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModulusBasis {
    moduli: Vec<u64>,
    min_modulus: u64,
    capacity: BigUint,
    /// `M_i * y_i` for each modulus, where `M_i = M / m_i` and `y_i = M_i^-1 mod m_i`.
    crt_weights: Vec<BigUint>,
}

/// On-disk form of a basis. Derived constants are recomputed on load.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct BasisFile {
    pub version: u32,
    pub k: usize,
    pub min_modulus: u64,
    pub moduli: Vec<u64>,
}

impl ModulusBasis {
    /// Builds a basis from explicit moduli, validating ordering and coprimality.
    pub fn from_moduli(moduli: Vec<u64>, min_modulus: u64) -> Result<Self, MathError> {
        if moduli.is_empty() {
            return Err(MathError::InvalidBasis("no moduli".into()));
        }
        if let Some(&m) = moduli.iter().find(|&&m| m < 2) {
            return Err(MathError::InvalidBasis(format!("modulus {m} is below 2")));
        }
        if let Some(w) = moduli.windows(2).find(|w| w[0] >= w[1]) {
            return Err(MathError::InvalidBasis(format!(
                "moduli not strictly increasing at {} >= {}",
                w[0], w[1]
            )));
        }
        for (i, &a) in moduli.iter().enumerate() {
            for &b in &moduli[i + 1..] {
                if a.gcd(&b) != 1 {
                    return Err(MathError::InvalidBasis(format!(
                        "moduli {a} and {b} are not coprime"
                    )));
                }
            }
        }

        let capacity = moduli
            .iter()
            .fold(BigUint::one(), |acc, &m| acc * BigUint::from(m));
        let crt_weights = moduli
            .iter()
            .map(|&m| {
                let partial = &capacity / BigUint::from(m);
                let partial_mod = (&partial % m).to_u64().expect("reduced below a u64 modulus");
                modular_inverse(partial_mod, m).map(|y| partial * BigUint::from(y))
            })
            .collect::<Result<Vec<_>, _>>()?;

        Ok(Self {
            moduli,
            min_modulus,
            capacity,
            crt_weights,
        })
    }

    pub fn moduli(&self) -> &[u64] {
        &self.moduli
    }

    /// Number of moduli `k`.
    pub fn len(&self) -> usize {
        self.moduli.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moduli.is_empty()
    }

    /// Embedding dimension `2k`.
    pub fn dim(&self) -> usize {
        2 * self.moduli.len()
    }

    pub fn min_modulus(&self) -> u64 {
        self.min_modulus
    }

    /// Product of all moduli; integers in `[0, capacity)` are uniquely represented.
    pub fn capacity(&self) -> &BigUint {
        &self.capacity
    }

    pub fn crt_weights(&self) -> &[BigUint] {
        &self.crt_weights
    }

    pub fn largest_modulus(&self) -> u64 {
        *self.moduli.last().expect("basis is never empty")
    }

    pub fn smallest_modulus(&self) -> u64 {
        self.moduli[0]
    }

    pub fn to_file(&self) -> BasisFile {
        BasisFile {
            version: BASIS_FORMAT_VERSION,
            k: self.moduli.len(),
            min_modulus: self.min_modulus,
            moduli: self.moduli.clone(),
        }
    }

    pub fn from_file(file: BasisFile) -> Result<Self, MathError> {
        if file.version != BASIS_FORMAT_VERSION {
            return Err(MathError::InvalidBasis(format!(
                "unsupported basis version {}",
                file.version
            )));
        }
        if file.k != file.moduli.len() {
            return Err(MathError::InvalidBasis(format!(
                "k = {} but {} moduli listed",
                file.k,
                file.moduli.len()
            )));
        }
        if let Some(&m) = file.moduli.iter().find(|&&m| m < file.min_modulus) {
            return Err(MathError::InvalidBasis(format!(
                "modulus {m} is below min_modulus {}",
                file.min_modulus
            )));
        }
        Self::from_moduli(file.moduli, file.min_modulus)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("basis file always serializes")
    }

    pub fn from_json(json: &str) -> Result<Self, MathError> {
        let file: BasisFile =
            serde_json::from_str(json).map_err(|e| MathError::InvalidBasis(e.to_string()))?;
        Self::from_file(file)
    }
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut d = 3;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// The first `k` primes `>= min_modulus`, ascending.
///
/// Panics if `k == 0` or `min_modulus < 2`.
pub fn generate_basis(k: usize, min_modulus: u64) -> ModulusBasis {
    assert!(k >= 1, "basis needs at least one modulus");
    assert!(min_modulus >= 2, "min_modulus must be at least 2");
    let moduli: Vec<u64> = (min_modulus..).filter(|&n| is_prime(n)).take(k).collect();
    ModulusBasis::from_moduli(moduli, min_modulus).expect("distinct primes are pairwise coprime")
}

/// `[n mod m_1, ..., n mod m_k]`.
pub fn residues(n: &BigUint, basis: &ModulusBasis) -> Vec<u64> {
    // Horner over the 32-bit limbs, most significant first.
    let limbs = n.to_u32_digits();
    basis
        .moduli
        .iter()
        .map(|&m| {
            let m = m as u128;
            limbs
                .iter()
                .rev()
                .fold(0u128, |acc, &limb| ((acc << 32) | limb as u128) % m) as u64
        })
        .collect()
}

/// Multiplicative inverse of `a` modulo `m` by the extended Euclidean algorithm.
pub fn modular_inverse(a: u64, m: u64) -> Result<u64, MathError> {
    assert!(m >= 2, "modulus must be at least 2");
    let (mut old_r, mut r) = ((a % m) as i128, m as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    if old_r != 1 {
        return Err(MathError::NotInvertible {
            a,
            m,
            gcd: old_r as u64,
        });
    }
    Ok(old_s.rem_euclid(m as i128) as u64)
}

/// The unique `n` in `[0, M)` with `n mod m_i = residues[i]` for every `i`.
pub fn crt_reconstruct(residues: &[u64], basis: &ModulusBasis) -> Result<BigUint, MathError> {
    if residues.len() != basis.len() {
        return Err(MathError::LengthMismatch {
            expected: basis.len(),
            actual: residues.len(),
        });
    }
    let mut acc = BigUint::zero();
    for (index, ((&r, &m), weight)) in residues
        .iter()
        .zip(&basis.moduli)
        .zip(&basis.crt_weights)
        .enumerate()
    {
        if r >= m {
            return Err(MathError::ResidueOutOfRange {
                index,
                residue: r,
                modulus: m,
            });
        }
        if r != 0 {
            acc += weight * r;
        }
    }
    Ok(acc % &basis.capacity)
}
