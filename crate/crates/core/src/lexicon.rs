//! Tokenization, corpus frequency tables and lexical weights.

use std::collections::{HashMap, HashSet};
use std::io::{self, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Built-in English stopword list.
pub const ENGLISH_STOPWORDS: &str = include_str!("../data/stopwords_en.txt");

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("{0} weighting needs a frequency table")]
    MissingTable(SchemeKind),
    #[error("stopword weighting needs a stopword list")]
    MissingStopwords,
    #[error("frequency table is empty (no documents)")]
    EmptyCorpus,
    #[error("reading stopword file {path}: {source}")]
    StopwordFile { path: String, source: io::Error },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Splitter {
    /// Split on every non-alphanumeric character.
    #[default]
    UnicodeWords,
    Whitespace,
    /// The whole input is a single token.
    Pretokenized,
}

impl std::str::FromStr for Splitter {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "unicode_words" | "words" => Ok(Splitter::UnicodeWords),
            "whitespace" => Ok(Splitter::Whitespace),
            "pretokenized" => Ok(Splitter::Pretokenized),
            other => Err(format!(
                "unknown splitter {other:?} (expected unicode_words, whitespace or pretokenized)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizerConfig {
    pub lowercase: bool,
    pub splitter: Splitter,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        Self {
            lowercase: true,
            splitter: Splitter::UnicodeWords,
        }
    }
}

pub fn tokenize(sentence: &str, config: &TokenizerConfig) -> Vec<String> {
    let text = if config.lowercase {
        sentence.to_lowercase()
    } else {
        sentence.to_owned()
    };
    match config.splitter {
        Splitter::UnicodeWords => text
            .split(|c: char| !c.is_alphanumeric())
            .filter(|s| !s.is_empty())
            .map(str::to_owned)
            .collect(),
        Splitter::Whitespace => text.split_whitespace().map(str::to_owned).collect(),
        Splitter::Pretokenized if text.is_empty() => Vec::new(),
        Splitter::Pretokenized => vec![text],
    }
}

/// Corpus statistics: total occurrences and document frequency per token.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FrequencyTable {
    counts: HashMap<String, u64>,
    doc_freq: HashMap<String, u64>,
    num_docs: u64,
}

impl FrequencyTable {
    pub fn count(&self, token: &str) -> u64 {
        self.counts.get(token).copied().unwrap_or(0)
    }

    pub fn doc_freq(&self, token: &str) -> u64 {
        self.doc_freq.get(token).copied().unwrap_or(0)
    }

    pub fn num_docs(&self) -> u64 {
        self.num_docs
    }

    pub fn vocabulary_size(&self) -> usize {
        self.counts.len()
    }

    /// Writes `token\tcount\tdoc_freq` rows, most frequent first.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> io::Result<()> {
        let mut rows: Vec<_> = self.counts.iter().collect();
        rows.sort_by(|a, b| b.1.cmp(a.1).then_with(|| a.0.cmp(b.0)));
        writeln!(out, "token\tcount\tdoc_freq")?;
        for (token, count) in rows {
            writeln!(out, "{token}\t{count}\t{}", self.doc_freq(token))?;
        }
        Ok(())
    }
}

pub fn build_frequency_table<S: AsRef<str>>(corpus: &[Vec<S>]) -> FrequencyTable {
    let mut table = FrequencyTable {
        num_docs: corpus.len() as u64,
        ..Default::default()
    };
    for doc in corpus {
        let mut seen = HashSet::new();
        for token in doc {
            let token = token.as_ref();
            *table.counts.entry(token.to_owned()).or_default() += 1;
            if seen.insert(token) {
                *table.doc_freq.entry(token.to_owned()).or_default() += 1;
            }
        }
    }
    table
}

/// `1 / ln(1 + f)`; unseen tokens are treated as `f = 1`.
pub fn itf_weight(token: &str, table: &FrequencyTable) -> f64 {
    itf_from_count(table.count(token))
}

fn itf_from_count(count: u64) -> f64 {
    1.0 / (count.max(1) as f64).ln_1p()
}

/// Smoothed TF-IDF per token position: `tf · (ln((1 + N) / (1 + df)) + 1)`,
/// with `tf` counted within `tokens`.
pub fn tfidf_weights<S: AsRef<str>>(
    tokens: &[S],
    table: &FrequencyTable,
) -> Result<Vec<f64>, LexiconError> {
    if table.num_docs == 0 {
        return Err(LexiconError::EmptyCorpus);
    }
    let mut tf: HashMap<&str, u64> = HashMap::new();
    for t in tokens {
        *tf.entry(t.as_ref()).or_default() += 1;
    }
    let n = table.num_docs as f64;
    Ok(tokens
        .iter()
        .map(|t| {
            let t = t.as_ref();
            let idf = ((1.0 + n) / (1.0 + table.doc_freq(t) as f64)).ln() + 1.0;
            tf[t] as f64 * idf
        })
        .collect())
}

pub fn filter_stopwords<S: AsRef<str> + Clone>(tokens: &[S], stopwords: &HashSet<String>) -> Vec<S> {
    tokens
        .iter()
        .filter(|t| !stopwords.contains(t.as_ref()))
        .cloned()
        .collect()
}

/// Parses a stopword list: one token per line, `#` starts a comment line.
pub fn parse_stopwords(text: &str) -> HashSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect()
}

pub fn english_stopwords() -> HashSet<String> {
    parse_stopwords(ENGLISH_STOPWORDS)
}

pub fn load_stopwords(path: &Path) -> Result<HashSet<String>, LexiconError> {
    std::fs::read_to_string(path)
        .map(|s| parse_stopwords(&s))
        .map_err(|source| LexiconError::StopwordFile {
            path: path.display().to_string(),
            source,
        })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    Uniform,
    Itf,
    Tfidf,
    #[serde(alias = "stopword")]
    StopwordRemoval,
}

impl std::fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SchemeKind::Uniform => "uniform",
            SchemeKind::Itf => "itf",
            SchemeKind::Tfidf => "tfidf",
            SchemeKind::StopwordRemoval => "stopword_removal",
        })
    }
}

impl std::str::FromStr for SchemeKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "uniform" | "mean" => Ok(SchemeKind::Uniform),
            "itf" => Ok(SchemeKind::Itf),
            "tfidf" | "tf_idf" => Ok(SchemeKind::Tfidf),
            "stopword" | "stopwords" | "stopword_removal" => Ok(SchemeKind::StopwordRemoval),
            other => Err(format!(
                "unknown scheme {other:?} (expected uniform, itf, tfidf or stopword)"
            )),
        }
    }
}

impl SchemeKind {
    pub fn needs_table(self) -> bool {
        matches!(self, SchemeKind::Itf | SchemeKind::Tfidf)
    }
}

/// A lexical weighting policy and the data it depends on.
#[derive(Debug, Clone)]
pub struct WeightingScheme {
    kind: SchemeKind,
    table: Option<Arc<FrequencyTable>>,
    stopwords: Option<Arc<HashSet<String>>>,
}

impl WeightingScheme {
    pub fn new(
        kind: SchemeKind,
        table: Option<Arc<FrequencyTable>>,
        stopwords: Option<Arc<HashSet<String>>>,
    ) -> Result<Self, LexiconError> {
        if kind.needs_table() && table.is_none() {
            return Err(LexiconError::MissingTable(kind));
        }
        if kind == SchemeKind::StopwordRemoval && stopwords.is_none() {
            return Err(LexiconError::MissingStopwords);
        }
        Ok(Self {
            kind,
            table,
            stopwords,
        })
    }

    pub fn uniform() -> Self {
        Self {
            kind: SchemeKind::Uniform,
            table: None,
            stopwords: None,
        }
    }

    pub fn itf(table: Arc<FrequencyTable>) -> Self {
        Self {
            kind: SchemeKind::Itf,
            table: Some(table),
            stopwords: None,
        }
    }

    pub fn tfidf(table: Arc<FrequencyTable>) -> Self {
        Self {
            kind: SchemeKind::Tfidf,
            table: Some(table),
            stopwords: None,
        }
    }

    pub fn stopword_removal(stopwords: Arc<HashSet<String>>) -> Self {
        Self {
            kind: SchemeKind::StopwordRemoval,
            table: None,
            stopwords: Some(stopwords),
        }
    }

    pub fn kind(&self) -> SchemeKind {
        self.kind
    }

    pub fn table(&self) -> Option<&FrequencyTable> {
        self.table.as_deref()
    }

    pub fn stopwords(&self) -> Option<&HashSet<String>> {
        self.stopwords.as_deref()
    }

    /// One weight per token. Stopword filtering is not applied here.
    pub fn weights<S: AsRef<str>>(&self, tokens: &[S]) -> Result<Vec<f64>, LexiconError> {
        match self.kind {
            SchemeKind::Uniform | SchemeKind::StopwordRemoval => Ok(vec![1.0; tokens.len()]),
            SchemeKind::Itf => {
                let table = self.table.as_deref().expect("checked at construction");
                Ok(tokens.iter().map(|t| itf_weight(t.as_ref(), table)).collect())
            }
            SchemeKind::Tfidf => {
                tfidf_weights(tokens, self.table.as_deref().expect("checked at construction"))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn words(s: &[&str]) -> Vec<String> {
        s.iter().map(|w| w.to_string()).collect()
    }

    #[test]
    fn tokenize_examples() {
        let cfg = TokenizerConfig::default();
        assert_eq!(
            tokenize("A man is playing a guitar.", &cfg),
            words(&["a", "man", "is", "playing", "a", "guitar"])
        );
        assert!(tokenize("", &cfg).is_empty());
        let pre = TokenizerConfig {
            splitter: Splitter::Pretokenized,
            ..cfg
        };
        assert_eq!(tokenize("hello", &pre), words(&["hello"]));
        assert!(tokenize("", &pre).is_empty());
    }

    #[test]
    fn tokenize_non_latin_and_case() {
        let cfg = TokenizerConfig::default();
        assert_eq!(tokenize("Der Mann spielt Gitarre!", &cfg), words(&["der", "mann", "spielt", "gitarre"]));
        assert_eq!(tokenize("don't–stop", &cfg), words(&["don", "t", "stop"]));
        let keep = TokenizerConfig {
            lowercase: false,
            splitter: Splitter::Whitespace,
        };
        assert_eq!(tokenize(" Hello,  World ", &keep), words(&["Hello,", "World"]));
    }

    #[test]
    fn frequency_table_examples() {
        let t = build_frequency_table(&[words(&["a", "b"]), words(&["a"])]);
        assert_eq!((t.count("a"), t.count("b")), (2, 1));
        assert_eq!((t.doc_freq("a"), t.doc_freq("b")), (2, 1));
        assert_eq!(t.num_docs(), 2);

        let empty = build_frequency_table::<String>(&[]);
        assert_eq!(empty.num_docs(), 0);
        assert_eq!(empty.vocabulary_size(), 0);

        let t = build_frequency_table(&[words(&["x", "x", "x"])]);
        assert_eq!((t.count("x"), t.doc_freq("x")), (3, 1));
    }

    #[test]
    fn itf_examples() {
        assert_abs_diff_eq!(1.0 / (std::f64::consts::E - 1.0).ln_1p(), 1.0, epsilon = 1e-15);
        let t = build_frequency_table(&[words(&["once"])]);
        assert_abs_diff_eq!(itf_weight("once", &t), 1.0 / 2f64.ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(itf_weight("never", &t), std::f64::consts::LOG2_E, epsilon = 1e-15);
    }

    #[test]
    fn itf_strictly_decreasing() {
        let mut prev = f64::INFINITY;
        for f in 1..=1_000_000u64 {
            let w = itf_from_count(f);
            assert!(w < prev, "f = {f}");
            prev = w;
        }
    }

    #[test]
    fn tfidf_examples() {
        let corpus = [words(&["common", "rare"]), words(&["common"]), words(&["common"])];
        let t = build_frequency_table(&corpus);
        let w = tfidf_weights(&["common"], &t).unwrap();
        assert_abs_diff_eq!(w[0], 1.0, epsilon = 1e-15);
        let w = tfidf_weights(&["rare"], &t).unwrap();
        assert_abs_diff_eq!(w[0], 2f64.ln() + 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(w[0], 1.6931, epsilon = 1e-4);
        let w = tfidf_weights(&["common", "common"], &t).unwrap();
        assert_eq!(w, vec![2.0, 2.0]);
        assert!(matches!(
            tfidf_weights(&["x"], &FrequencyTable::default()),
            Err(LexiconError::EmptyCorpus)
        ));
    }

    #[test]
    fn stopword_examples() {
        let stop: HashSet<String> = ["a", "is"].iter().map(|s| s.to_string()).collect();
        assert_eq!(
            filter_stopwords(&words(&["a", "man", "is", "playing"]), &stop),
            words(&["man", "playing"])
        );
        assert!(filter_stopwords::<String>(&[], &stop).is_empty());
        let the: HashSet<String> = ["the".to_string()].into();
        assert!(filter_stopwords(&words(&["the", "the"]), &the).is_empty());
    }

    #[test]
    fn stopword_parsing() {
        let s = parse_stopwords("# header\nThe\n\n  a  \n#skip\nof\n");
        assert_eq!(s, ["the", "a", "of"].iter().map(|x| x.to_string()).collect());
        let en = english_stopwords();
        assert!(en.len() >= 150);
        for w in ["the", "a", "is", "and", "of"] {
            assert!(en.contains(w));
        }
        assert!(!en.contains("guitar"));
    }

    #[test]
    fn scheme_construction_checks() {
        assert!(matches!(
            WeightingScheme::new(SchemeKind::Itf, None, None),
            Err(LexiconError::MissingTable(SchemeKind::Itf))
        ));
        assert!(matches!(
            WeightingScheme::new(SchemeKind::Tfidf, None, None),
            Err(LexiconError::MissingTable(_))
        ));
        assert!(matches!(
            WeightingScheme::new(SchemeKind::StopwordRemoval, None, None),
            Err(LexiconError::MissingStopwords)
        ));
        assert!(WeightingScheme::new(SchemeKind::Uniform, None, None).is_ok());
    }

    #[test]
    fn tsv_export() {
        let t = build_frequency_table(&[words(&["b", "a"]), words(&["a"])]);
        let mut out = Vec::new();
        t.write_tsv(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "token\tcount\tdoc_freq\na\t2\t2\nb\t1\t1\n");
    }

    proptest! {
        #[test]
        fn whitespace_tokenize_idempotent(s in "\\PC{0,40}") {
            let cfg = TokenizerConfig { lowercase: true, splitter: Splitter::Whitespace };
            let once = tokenize(&s, &cfg);
            prop_assert_eq!(tokenize(&once.join(" "), &cfg), once);
        }

        #[test]
        fn frequency_table_permutation_invariant(
            corpus in proptest::collection::vec(proptest::collection::vec("[a-e]", 0..6), 0..8),
            seed in any::<u64>(),
        ) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut shuffled = corpus.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            prop_assert_eq!(build_frequency_table(&corpus), build_frequency_table(&shuffled));
        }

        #[test]
        fn filter_output_is_subsequence(tokens in proptest::collection::vec("[a-d]", 0..12)) {
            let stop: HashSet<String> = ["a".to_string(), "c".to_string()].into();
            let kept = filter_stopwords(&tokens, &stop);
            let mut it = tokens.iter();
            for k in &kept {
                prop_assert!(it.any(|t| t == k));
            }
        }
    }
}
