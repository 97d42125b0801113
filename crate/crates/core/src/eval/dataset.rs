//! STS-style TSV ingestion.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::EvalError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StsRecord {
    pub sentence_a: String,
    pub sentence_b: String,
    /// Human similarity judgment in `[0, 5]`.
    pub gold_score: f64,
}

/// Zero-based column indices of a TSV file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnMap {
    pub sentence_a: usize,
    pub sentence_b: usize,
    pub score: usize,
}

impl ColumnMap {
    /// Layout of the SemEval STS benchmark distribution:
    /// genre, file, year, id, score, sentence1, sentence2.
    pub const SEMEVAL: ColumnMap = ColumnMap {
        sentence_a: 5,
        sentence_b: 6,
        score: 4,
    };

    /// `sentence1 \t sentence2 \t score`.
    pub const SIMPLE: ColumnMap = ColumnMap {
        sentence_a: 0,
        sentence_b: 1,
        score: 2,
    };
}

impl Default for ColumnMap {
    fn default() -> Self {
        Self::SEMEVAL
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LoadedDataset {
    pub records: Vec<StsRecord>,
    /// 1-based line numbers of rows with missing columns or unparsable scores.
    pub malformed_rows: Vec<usize>,
    /// 1-based line numbers of rows whose score falls outside `[0, 5]`.
    pub out_of_range_rows: Vec<usize>,
}

impl LoadedDataset {
    pub fn skipped(&self) -> usize {
        self.malformed_rows.len() + self.out_of_range_rows.len()
    }
}

pub fn parse_sts_tsv(text: &str, columns: ColumnMap) -> LoadedDataset {
    let mut out = LoadedDataset::default();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let get = |idx: usize| fields.get(idx).map(|s| s.trim());
        let (Some(a), Some(b), Some(score)) = (
            get(columns.sentence_a),
            get(columns.sentence_b),
            get(columns.score),
        ) else {
            out.malformed_rows.push(line_no);
            continue;
        };
        let Ok(score) = score.parse::<f64>() else {
            out.malformed_rows.push(line_no);
            continue;
        };
        if !(0.0..=5.0).contains(&score) {
            out.out_of_range_rows.push(line_no);
            continue;
        }
        out.records.push(StsRecord {
            sentence_a: a.to_owned(),
            sentence_b: b.to_owned(),
            gold_score: score,
        });
    }
    out
}

pub fn load_sts_tsv(path: &Path, columns: ColumnMap) -> Result<LoadedDataset, EvalError> {
    let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => EvalError::FileNotFound(path.display().to_string()),
        _ => EvalError::Io(e),
    })?;
    let loaded = parse_sts_tsv(&text, columns);
    if loaded.records.is_empty() {
        return Err(EvalError::NoValidRows {
            skipped: loaded.skipped(),
        });
    }
    Ok(loaded)
}
