//! STS evaluation harness: scores sentence pairs by cosine similarity and
//! correlates the scores with human judgments.

mod correlation;
mod dataset;

pub use correlation::{fractional_ranks, pearson, spearman, CorrelationError};
pub use dataset::{load_sts_tsv, parse_sts_tsv, ColumnMap, LoadedDataset, StsRecord};

use std::collections::HashSet;
use std::fmt::Write as _;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::codec::{CodecConfig, Normalization};
use crate::lexicon::{
    build_frequency_table, english_stopwords, FrequencyTable, SchemeKind, Splitter,
    TokenizerConfig, WeightingScheme,
};
use crate::pooling::{self, cosine_similarity, PoolingError};

/// Where document frequencies come from. Recorded in every report.
pub const FREQUENCY_SCOPE: &str = "evaluation_split";

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("file not found: {0}")]
    FileNotFound(String),
    #[error("no valid rows ({skipped} rows skipped)")]
    NoValidRows { skipped: usize },
    #[error("need at least 2 records, got {0}")]
    TooFewRecords(usize),
    #[error("dimension {0} must be even and at least 4")]
    InvalidDimension(usize),
    #[error("pair {pair}: {source}")]
    Pooling { pair: usize, source: PoolingError },
    #[error(transparent)]
    Correlation(#[from] CorrelationError),
    #[error("thread pool: {0}")]
    ThreadPool(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Everything besides the codec that affects the scores of a run.
#[derive(Debug, Clone)]
pub struct EvalSettings {
    pub scheme: SchemeKind,
    /// Used by [`SchemeKind::StopwordRemoval`]; defaults to the built-in English list.
    pub stopwords: Arc<HashSet<String>>,
    pub tokenizer: TokenizerConfig,
    pub chunk_long_tokens: bool,
    pub threads: usize,
}

impl Default for EvalSettings {
    fn default() -> Self {
        Self {
            scheme: SchemeKind::Tfidf,
            stopwords: Arc::new(english_stopwords()),
            tokenizer: TokenizerConfig::default(),
            chunk_long_tokens: false,
            threads: 1,
        }
    }
}

impl EvalSettings {
    pub fn with_scheme(mut self, scheme: SchemeKind) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = threads;
        self
    }
}

#[derive(Serialize)]
struct FingerprintInput<'a> {
    dim: usize,
    l_max: usize,
    min_modulus: u64,
    moduli: &'a [u64],
    normalization: Normalization,
    scheme: SchemeKind,
    lowercase: bool,
    splitter: Splitter,
    stopwords_sha256: Option<String>,
    chunk_long_tokens: bool,
    frequency_scope: &'static str,
}

/// SHA-256 over the sorted, newline-joined entries of a stopword set.
pub fn stopwords_digest(stopwords: &HashSet<String>) -> String {
    let mut words: Vec<&str> = stopwords.iter().map(String::as_str).collect();
    words.sort_unstable();
    hex::encode(Sha256::digest(words.join("\n").as_bytes()))
}

/// Stable 16-hex-digit hash of every setting that can change a score.
/// Thread count is excluded: it never changes results.
pub fn config_fingerprint(codec: &CodecConfig, settings: &EvalSettings) -> String {
    let input = FingerprintInput {
        dim: codec.dim(),
        l_max: codec.l_max(),
        min_modulus: codec.basis().min_modulus(),
        moduli: codec.basis().moduli(),
        normalization: codec.normalization(),
        scheme: settings.scheme,
        lowercase: settings.tokenizer.lowercase,
        splitter: settings.tokenizer.splitter,
        stopwords_sha256: (settings.scheme == SchemeKind::StopwordRemoval)
            .then(|| stopwords_digest(&settings.stopwords)),
        chunk_long_tokens: settings.chunk_long_tokens,
        frequency_scope: FREQUENCY_SCOPE,
    };
    let json = serde_json::to_string(&input).expect("fingerprint input serializes");
    hex::encode(&Sha256::digest(json.as_bytes())[..8])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config_fingerprint: String,
    pub scheme: SchemeKind,
    #[serde(rename = "D")]
    pub dim: usize,
    #[serde(rename = "rho")]
    pub spearman_rho: f64,
    #[serde(rename = "r")]
    pub pearson_r: f64,
    pub n_pairs: usize,
    #[serde(rename = "latency_ms")]
    pub mean_latency_ms_per_pair: f64,
    /// Pairs where stopword removal emptied a sentence and uniform pooling was used.
    pub flagged_pairs: Vec<usize>,
    pub l_max: usize,
    pub threads: usize,
    pub frequency_scope: String,
    /// Predicted similarity per pair, in input order.
    #[serde(skip)]
    pub scores: Vec<f64>,
}

/// Builds the weighting scheme for `settings`, counting frequencies over
/// both sentences of every record.
pub fn build_scheme(
    records: &[StsRecord],
    codec: &CodecConfig,
    settings: &EvalSettings,
) -> WeightingScheme {
    let table = || -> Arc<FrequencyTable> {
        let corpus: Vec<Vec<String>> = records
            .iter()
            .flat_map(|r| [&r.sentence_a, &r.sentence_b])
            .map(|s| {
                pooling::prepare_tokens(s, &settings.tokenizer, codec, settings.chunk_long_tokens)
            })
            .collect();
        Arc::new(build_frequency_table(&corpus))
    };
    match settings.scheme {
        SchemeKind::Uniform => WeightingScheme::uniform(),
        SchemeKind::Itf => WeightingScheme::itf(table()),
        SchemeKind::Tfidf => WeightingScheme::tfidf(table()),
        SchemeKind::StopwordRemoval => WeightingScheme::stopword_removal(settings.stopwords.clone()),
    }
}

fn score_pair(
    index: usize,
    record: &StsRecord,
    scheme: &WeightingScheme,
    codec: &CodecConfig,
    settings: &EvalSettings,
) -> Result<(f64, bool), EvalError> {
    let embed = |s: &str| {
        let tokens =
            pooling::prepare_tokens(s, &settings.tokenizer, codec, settings.chunk_long_tokens);
        pooling::embed_tokens(&tokens, scheme, codec)
    };
    let wrap = |source| EvalError::Pooling {
        pair: index,
        source,
    };
    let a = embed(&record.sentence_a).map_err(wrap)?;
    let b = embed(&record.sentence_b).map_err(wrap)?;
    let sim = cosine_similarity(&a.vector, &b.vector).map_err(wrap)?;
    Ok((sim, a.fallback || b.fallback))
}

/// Scores every record and correlates the scores with the gold labels.
///
/// Latency covers the embed-and-score loop only.
pub fn run_eval(
    records: &[StsRecord],
    codec: &CodecConfig,
    settings: &EvalSettings,
) -> Result<EvalReport, EvalError> {
    if records.len() < 2 {
        return Err(EvalError::TooFewRecords(records.len()));
    }
    let scheme = build_scheme(records, codec, settings);
    let threads = settings.threads.max(1);

    let score_all = || -> Result<Vec<(f64, bool)>, EvalError> {
        if threads == 1 {
            records
                .iter()
                .enumerate()
                .map(|(i, r)| score_pair(i, r, &scheme, codec, settings))
                .collect()
        } else {
            records
                .par_iter()
                .enumerate()
                .map(|(i, r)| score_pair(i, r, &scheme, codec, settings))
                .collect()
        }
    };

    let start = Instant::now();
    let scored = if threads == 1 {
        score_all()?
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| EvalError::ThreadPool(e.to_string()))?
            .install(score_all)?
    };
    let elapsed = start.elapsed();

    let scores: Vec<f64> = scored.iter().map(|s| s.0).collect();
    let flagged_pairs = scored
        .iter()
        .enumerate()
        .filter_map(|(i, s)| s.1.then_some(i))
        .collect();
    let gold: Vec<f64> = records.iter().map(|r| r.gold_score).collect();

    Ok(EvalReport {
        config_fingerprint: config_fingerprint(codec, settings),
        scheme: settings.scheme,
        dim: codec.dim(),
        spearman_rho: spearman(&scores, &gold)?,
        pearson_r: pearson(&scores, &gold)?,
        n_pairs: records.len(),
        mean_latency_ms_per_pair: elapsed.as_secs_f64() * 1e3 / records.len() as f64,
        flagged_pairs,
        l_max: codec.l_max(),
        threads,
        frequency_scope: FREQUENCY_SCOPE.to_owned(),
        scores,
    })
}

/// One [`run_eval`] per dimension, each with a basis of `D / 2` moduli.
pub fn dimension_sweep(
    records: &[StsRecord],
    settings: &EvalSettings,
    dims: &[usize],
    l_max: usize,
    min_modulus: u64,
    normalization: Normalization,
) -> Result<Vec<EvalReport>, EvalError> {
    if let Some(&d) = dims.iter().find(|&&d| d < 4 || d % 2 != 0) {
        return Err(EvalError::InvalidDimension(d));
    }
    dims.iter()
        .map(|&d| {
            let codec = CodecConfig::with_dim(d, l_max, min_modulus).with_normalization(normalization);
            run_eval(records, &codec, settings)
        })
        .collect()
}

/// Plain-text table with one row per report.
pub fn format_table(reports: &[EvalReport]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>6}  {:<16}  {:>8}  {:>8}  {:>12}  {:>7}  fingerprint",
        "D", "scheme", "rho", "r", "ms/pair", "flagged"
    );
    for r in reports {
        let _ = writeln!(
            out,
            "{:>6}  {:<16}  {:>8.4}  {:>8.4}  {:>12.4}  {:>7}  {}",
            r.dim,
            r.scheme.to_string(),
            r.spearman_rho,
            r.pearson_r,
            r.mean_latency_ms_per_pair,
            r.flagged_pairs.len(),
            r.config_fingerprint
        );
    }
    out
}
