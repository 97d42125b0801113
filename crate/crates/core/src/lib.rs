//! Deterministic, training-free text embeddings built on harmonic token
//! projection.
//!
//! Every token maps to a base-2^16 integer whose residues modulo a set of
//! coprime moduli are placed on the unit circle as `(sin, cos)` pairs. The
//! map is invertible through the Chinese Remainder Theorem. Sentence vectors
//! are weighted means of token vectors, compared by cosine similarity.
//!
//! ```
//! use htp::codec::{decode, encode, CodecConfig};
//!
//! let config = CodecConfig::default(); // D = 512, l_max = 24
//! let v = encode("harmonic", &config).unwrap();
//! assert_eq!(v.dim(), 512);
//! assert_eq!(decode(&v, &config).unwrap().token, "harmonic");
//! ```

pub mod cli;
pub mod codec;
pub mod eval;
pub mod lexicon;
pub mod modular_math;
pub mod pooling;

pub use num_bigint::BigUint;
