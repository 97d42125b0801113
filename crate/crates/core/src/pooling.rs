//! Sentence vectors: weighted mean of token embeddings, L2-normalized.

use thiserror::Error;

use crate::codec::{self, chunk_token, CodecConfig, CodecError, HarmonicEmbedding};
use crate::lexicon::{self, LexiconError, SchemeKind, TokenizerConfig, WeightingScheme};

#[derive(Debug, Error)]
pub enum PoolingError {
    #[error("sentence has no tokens to pool")]
    EmptySentence,
    #[error("{embeddings} embeddings but {weights} weights")]
    LengthMismatch { embeddings: usize, weights: usize },
    #[error("weights sum to zero")]
    ZeroWeightSum,
    #[error("weight {0} is negative or not finite")]
    InvalidWeight(f64),
    #[error("vector is zero and cannot be normalized")]
    ZeroVector,
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("token {token:?}: {source}")]
    Codec { token: String, source: CodecError },
    #[error(transparent)]
    Lexicon(#[from] LexiconError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SentenceVector {
    components: Vec<f64>,
    normalized: bool,
}

impl SentenceVector {
    /// Wraps raw components; `normalized` is false.
    pub fn new(components: Vec<f64>) -> Self {
        Self {
            components,
            normalized: false,
        }
    }

    pub fn components(&self) -> &[f64] {
        &self.components
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn norm(&self) -> f64 {
        dot(&self.components, &self.components).sqrt()
    }

    /// Components narrowed to `f32` for compact storage.
    pub fn to_f32(&self) -> Vec<f32> {
        self.components.iter().map(|&x| x as f32).collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `Σ w_i v_i / Σ w_i`, then scaled to unit length.
pub fn pool(embeddings: &[HarmonicEmbedding], weights: &[f64]) -> Result<SentenceVector, PoolingError> {
    if embeddings.is_empty() {
        return Err(PoolingError::EmptySentence);
    }
    if embeddings.len() != weights.len() {
        return Err(PoolingError::LengthMismatch {
            embeddings: embeddings.len(),
            weights: weights.len(),
        });
    }
    if let Some(&w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
        return Err(PoolingError::InvalidWeight(w));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(PoolingError::ZeroWeightSum);
    }

    let dim = embeddings[0].dim();
    let mut mean = vec![0.0f64; dim];
    for (e, &w) in embeddings.iter().zip(weights) {
        if e.dim() != dim {
            return Err(PoolingError::DimensionMismatch(dim, e.dim()));
        }
        if w == 0.0 {
            continue;
        }
        for (acc, &x) in mean.iter_mut().zip(e.components()) {
            *acc += w * x;
        }
    }
    for x in &mut mean {
        *x /= total;
    }

    let norm = dot(&mean, &mean).sqrt();
    if norm.is_nan() || norm <= f64::EPSILON {
        return Err(PoolingError::ZeroVector);
    }
    for x in &mut mean {
        *x /= norm;
    }
    Ok(SentenceVector {
        components: mean,
        normalized: true,
    })
}

/// Cosine of the angle between `x` and `y`, clamped to `[-1, 1]`.
pub fn cosine_similarity(x: &SentenceVector, y: &SentenceVector) -> Result<f64, PoolingError> {
    if x.dim() != y.dim() {
        return Err(PoolingError::DimensionMismatch(x.dim(), y.dim()));
    }
    let (nx, ny) = (x.norm(), y.norm());
    if nx == 0.0 || ny == 0.0 {
        return Err(PoolingError::ZeroVector);
    }
    Ok((dot(&x.components, &y.components) / (nx * ny)).clamp(-1.0, 1.0))
}

/// Tokens of `sentence` as the pipeline sees them, with over-long tokens
/// split into `l_max`-sized pieces when `chunk_long_tokens` is set.
pub fn prepare_tokens(
    sentence: &str,
    tokenizer: &TokenizerConfig,
    codec: &CodecConfig,
    chunk_long_tokens: bool,
) -> Vec<String> {
    let tokens = lexicon::tokenize(sentence, tokenizer);
    if !chunk_long_tokens {
        return tokens;
    }
    tokens
        .into_iter()
        .flat_map(|t| {
            if t.encode_utf16().count() > codec.l_max() {
                chunk_token(&t, codec.l_max())
            } else {
                vec![t]
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedSentence {
    pub vector: SentenceVector,
    /// Stopword removal left nothing, so all tokens were pooled uniformly.
    pub fallback: bool,
}

/// Embeds an already tokenized sentence under `scheme`.
pub fn embed_tokens(
    tokens: &[String],
    scheme: &WeightingScheme,
    codec: &CodecConfig,
) -> Result<EmbeddedSentence, PoolingError> {
    if tokens.is_empty() {
        return Err(PoolingError::EmptySentence);
    }
    let (kept, fallback) = match (scheme.kind(), scheme.stopwords()) {
        (SchemeKind::StopwordRemoval, Some(stop)) => {
            let kept = lexicon::filter_stopwords(tokens, stop);
            if kept.is_empty() {
                (tokens.to_vec(), true)
            } else {
                (kept, false)
            }
        }
        _ => (tokens.to_vec(), false),
    };
    let embeddings = kept
        .iter()
        .map(|t| {
            codec::encode(t, codec).map_err(|source| PoolingError::Codec {
                token: t.clone(),
                source,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let weights = scheme.weights(&kept)?;
    Ok(EmbeddedSentence {
        vector: pool(&embeddings, &weights)?,
        fallback,
    })
}

/// Tokenize, filter, encode, weight and pool one sentence.
pub fn embed_sentence(
    sentence: &str,
    scheme: &WeightingScheme,
    codec: &CodecConfig,
    tokenizer: &TokenizerConfig,
) -> Result<EmbeddedSentence, PoolingError> {
    embed_tokens(&prepare_tokens(sentence, tokenizer, codec, false), scheme, codec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::encode;
    use crate::lexicon::{build_frequency_table, english_stopwords, tokenize};
    use proptest::prelude::*;
    use std::sync::Arc;

    fn cfg() -> CodecConfig {
        CodecConfig::with_dim(64, 24, 3)
    }

    fn close(a: &SentenceVector, b: &SentenceVector, tol: f64) -> bool {
        a.components()
            .iter()
            .zip(b.components())
            .all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn single_token_is_scaled_embedding() {
        let c = cfg();
        let e = encode("guitar", &c).unwrap();
        let v = pool(std::slice::from_ref(&e), &[3.7]).unwrap();
        assert!(v.is_normalized());
        let k = (c.dim() / 2) as f64;
        for (x, y) in v.components().iter().zip(e.components()) {
            assert!((x - y / k.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn identical_embeddings_and_zero_weights() {
        let c = cfg();
        let a = encode("man", &c).unwrap();
        let b = encode("plays", &c).unwrap();
        let single = pool(std::slice::from_ref(&a), &[1.0]).unwrap();
        assert!(close(&pool(&[a.clone(), a.clone()], &[1.0, 3.0]).unwrap(), &single, 1e-12));
        assert!(close(&pool(&[a, b], &[1.0, 0.0]).unwrap(), &single, 1e-12));
    }

    #[test]
    fn pool_errors() {
        let c = cfg();
        let a = encode("a", &c).unwrap();
        assert!(matches!(pool(&[], &[]), Err(PoolingError::EmptySentence)));
        assert!(matches!(pool(std::slice::from_ref(&a), &[0.0]), Err(PoolingError::ZeroWeightSum)));
        assert!(matches!(pool(std::slice::from_ref(&a), &[1.0, 2.0]), Err(PoolingError::LengthMismatch { .. })));
        assert!(matches!(pool(std::slice::from_ref(&a), &[-1.0]), Err(PoolingError::InvalidWeight(_))));
        let neg = HarmonicEmbedding::from_components(a.components().iter().map(|x| -x).collect());
        assert!(matches!(pool(&[a, neg], &[1.0, 1.0]), Err(PoolingError::ZeroVector)));
    }

    #[test]
    fn cosine_examples() {
        let v = SentenceVector::new(vec![0.6, 0.8]);
        let neg = SentenceVector::new(vec![-0.6, -0.8]);
        let orth = SentenceVector::new(vec![-0.8, 0.6]);
        assert_eq!(cosine_similarity(&v, &v).unwrap(), 1.0);
        assert_eq!(cosine_similarity(&v, &neg).unwrap(), -1.0);
        assert!(cosine_similarity(&v, &orth).unwrap().abs() < 1e-15);
        assert!(matches!(
            cosine_similarity(&v, &SentenceVector::new(vec![1.0])),
            Err(PoolingError::DimensionMismatch(2, 1))
        ));
        assert!(matches!(
            cosine_similarity(&v, &SentenceVector::new(vec![0.0, 0.0])),
            Err(PoolingError::ZeroVector)
        ));
    }

    #[test]
    fn embed_sentence_examples() {
        let c = cfg();
        let tok = TokenizerConfig::default();
        let uni = WeightingScheme::uniform();
        let one = embed_sentence("Guitar", &uni, &c, &tok).unwrap();
        let expected = pool(&[encode("guitar", &c).unwrap()], &[1.0]).unwrap();
        assert_eq!(one.vector, expected);
        let rep = embed_sentence("guitar guitar guitar", &uni, &c, &tok).unwrap();
        assert!(close(&rep.vector, &one.vector, 1e-12));
        let again = embed_sentence("Guitar", &uni, &c, &tok).unwrap();
        let bits = |v: &SentenceVector| v.components().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&one.vector), bits(&again.vector));
        assert!(matches!(
            embed_sentence("...", &uni, &c, &tok),
            Err(PoolingError::EmptySentence)
        ));
    }

    #[test]
    fn stopword_scheme_and_fallback() {
        let c = cfg();
        let tok = TokenizerConfig::default();
        let scheme = WeightingScheme::stopword_removal(Arc::new(english_stopwords()));
        let with = embed_sentence("the man is playing the guitar", &scheme, &c, &tok).unwrap();
        let content = embed_sentence("man playing guitar", &WeightingScheme::uniform(), &c, &tok).unwrap();
        assert!(!with.fallback);
        assert!(close(&with.vector, &content.vector, 1e-12));

        let all_stop = embed_sentence("it is the", &scheme, &c, &tok).unwrap();
        assert!(all_stop.fallback);
        let uniform = embed_sentence("it is the", &WeightingScheme::uniform(), &c, &tok).unwrap();
        assert_eq!(all_stop.vector, uniform.vector);
    }

    #[test]
    fn weighted_schemes_differ_from_uniform() {
        let c = cfg();
        let tok = TokenizerConfig::default();
        let corpus: Vec<Vec<String>> = ["the cat sat", "the dog ran", "a cat ran"]
            .iter()
            .map(|s| tokenize(s, &tok))
            .collect();
        let table = Arc::new(build_frequency_table(&corpus));
        let s = "the cat sat";
        let uni = embed_sentence(s, &WeightingScheme::uniform(), &c, &tok).unwrap();
        let itf = embed_sentence(s, &WeightingScheme::itf(table.clone()), &c, &tok).unwrap();
        let tfidf = embed_sentence(s, &WeightingScheme::tfidf(table), &c, &tok).unwrap();
        assert!(!close(&uni.vector, &itf.vector, 1e-6));
        assert!(!close(&uni.vector, &tfidf.vector, 1e-6));
        assert!((itf.vector.norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn long_tokens_error_or_chunk() {
        let c = CodecConfig::with_dim(64, 4, 3);
        let tok = TokenizerConfig::default();
        assert!(matches!(
            embed_sentence("abcdefgh", &WeightingScheme::uniform(), &c, &tok),
            Err(PoolingError::Codec { .. })
        ));
        assert_eq!(prepare_tokens("abcdefgh ab", &tok, &c, true), vec!["abcd", "efgh", "ab"]);
    }

    proptest! {
        #[test]
        fn cauchy_schwarz(a in proptest::collection::vec(-1.0f64..1.0, 8), b in proptest::collection::vec(-1.0f64..1.0, 8)) {
            let (x, y) = (SentenceVector::new(a), SentenceVector::new(b));
            prop_assume!(x.norm() > 1e-6 && y.norm() > 1e-6);
            prop_assert!(dot(x.components(), y.components()).abs() <= x.norm() * y.norm() * (1.0 + 1e-12));
            let s = cosine_similarity(&x, &y).unwrap();
            prop_assert!((-1.0..=1.0).contains(&s));
            prop_assert_eq!(s, cosine_similarity(&y, &x).unwrap());
        }
    }
}
