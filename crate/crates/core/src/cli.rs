//! `htp` command-line front end.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on data errors. The config
//! fingerprint goes to standard error on every run (and into the JSON
//! output with `--json`), so binary vectors can be piped on standard output.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::codec::{self, CodecConfig, HarmonicEmbedding, Normalization, VECTOR_MAGIC};
use crate::eval::{self, ColumnMap, EvalSettings, StsRecord};
use crate::lexicon::{self, english_stopwords, SchemeKind, Splitter, TokenizerConfig};
use crate::pooling::{self, cosine_similarity};

/// Serializable run configuration, loadable with `--config`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub dim: usize,
    pub l_max: usize,
    pub min_modulus: u64,
    pub scheme: SchemeKind,
    pub lowercase: bool,
    pub splitter: Splitter,
    pub stopwords: Option<PathBuf>,
    pub normalization: Normalization,
    pub chunk_long_tokens: bool,
    pub threads: usize,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dim: codec::DEFAULT_DIM,
            l_max: codec::DEFAULT_L_MAX,
            min_modulus: codec::DEFAULT_MIN_MODULUS,
            scheme: SchemeKind::Tfidf,
            lowercase: true,
            splitter: Splitter::UnicodeWords,
            stopwords: None,
            normalization: Normalization::Nfc,
            chunk_long_tokens: false,
            threads: 1,
            input: None,
            output: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.dim < 4 || !self.dim.is_multiple_of(2) {
            return Err(format!("--dim must be even and at least 4, got {}", self.dim));
        }
        if self.l_max == 0 {
            return Err("--lmax must be at least 1".into());
        }
        if self.min_modulus < 2 {
            return Err("--min-modulus must be at least 2".into());
        }
        if self.threads == 0 {
            return Err("--threads must be at least 1".into());
        }
        Ok(())
    }

    pub fn codec(&self) -> CodecConfig {
        CodecConfig::with_dim(self.dim, self.l_max, self.min_modulus)
            .with_normalization(self.normalization)
    }

    pub fn tokenizer(&self) -> TokenizerConfig {
        TokenizerConfig {
            lowercase: self.lowercase,
            splitter: self.splitter,
        }
    }

    pub fn eval_settings(&self) -> anyhow::Result<EvalSettings> {
        let stopwords = match &self.stopwords {
            Some(path) => lexicon::load_stopwords(path)?,
            None => english_stopwords(),
        };
        Ok(EvalSettings {
            scheme: self.scheme,
            stopwords: Arc::new(stopwords),
            tokenizer: self.tokenizer(),
            chunk_long_tokens: self.chunk_long_tokens,
            threads: self.threads,
        })
    }
}

#[derive(Parser, Debug)]
#[command(name = "htp", version, about = "Reversible harmonic token embeddings and STS evaluation")]
struct Cli {
    #[command(flatten)]
    opts: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct GlobalOpts {
    /// Machine-readable JSON output.
    #[arg(long, global = true)]
    json: bool,
    /// Load a RunConfig JSON file; explicit flags override it.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Embedding dimension D (even, >= 4).
    #[arg(long, global = true)]
    dim: Option<usize>,
    /// Maximum token length in UTF-16 units.
    #[arg(long, global = true)]
    lmax: Option<usize>,
    #[arg(long, global = true)]
    min_modulus: Option<u64>,
    /// Skip NFC normalization before encoding.
    #[arg(long, global = true)]
    no_nfc: bool,
    /// uniform, itf, tfidf or stopword.
    #[arg(long, global = true)]
    scheme: Option<SchemeKind>,
    #[arg(long, global = true)]
    no_lowercase: bool,
    /// unicode_words, whitespace or pretokenized.
    #[arg(long, global = true)]
    splitter: Option<Splitter>,
    /// Stopword list (one token per line, '#' comments).
    #[arg(long, global = true, value_name = "FILE")]
    stopwords: Option<PathBuf>,
    /// Split over-long tokens into l_max-sized pieces instead of failing.
    #[arg(long, global = true)]
    chunk_long_tokens: bool,
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Encode one token to a vector (binary on stdout unless --out or --json).
    Encode {
        #[arg(long)]
        token: String,
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Decode a binary or JSON vector file ('-' for stdin) back to its token.
    Decode {
        #[arg(long, value_name = "FILE")]
        vector_file: PathBuf,
    },
    /// Cosine similarity of two sentences, or of each tab-separated pair in --file.
    Sim {
        sentences: Vec<String>,
        #[arg(long, value_name = "FILE")]
        file: Option<PathBuf>,
    },
    /// Evaluate against an STS TSV file.
    Eval {
        #[command(flatten)]
        data: DataArgs,
        /// Write per-pair predicted scores, one per line.
        #[arg(long, value_name = "FILE")]
        scores: Option<PathBuf>,
    },
    /// Evaluate at several dimensions.
    Sweep {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, value_delimiter = ',', default_value = "4,8,16,32,64,128,256,512,1024")]
        dims: Vec<usize>,
    },
    /// Print the modulus basis for a dimension.
    Basis {
        /// Write the basis JSON to this file.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct DataArgs {
    #[arg(long, value_name = "FILE")]
    input: Option<PathBuf>,
    /// Three columns: sentence1, sentence2, score.
    #[arg(long, conflicts_with = "columns")]
    simple: bool,
    /// Zero-based column indices as s1,s2,score (default 5,6,4).
    #[arg(long, value_name = "S1,S2,SCORE", value_parser = parse_columns)]
    columns: Option<ColumnMap>,
    /// Write the JSON report to this file.
    #[arg(long, value_name = "FILE")]
    report: Option<PathBuf>,
}

impl DataArgs {
    fn column_map(&self) -> ColumnMap {
        match (&self.columns, self.simple) {
            (Some(c), _) => *c,
            (None, true) => ColumnMap::SIMPLE,
            (None, false) => ColumnMap::SEMEVAL,
        }
    }
}

fn parse_columns(s: &str) -> Result<ColumnMap, String> {
    let c: Vec<usize> = s
        .split(',')
        .map(|v| v.trim().parse().map_err(|_| format!("not a column index: {v:?}")))
        .collect::<Result<_, _>>()?;
    match c[..] {
        [a, b, score] => Ok(ColumnMap {
            sentence_a: a,
            sentence_b: b,
            score,
        }),
        _ => Err(format!("expected three indices, got {}", c.len())),
    }
}

enum Failure {
    Usage(String),
    Data(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Data(e)
    }
}

fn resolve_config(opts: &GlobalOpts) -> Result<RunConfig, Failure> {
    let mut cfg = match &opts.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            serde_json::from_str(&text)
                .map_err(|e| Failure::Usage(format!("invalid config {}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    if let Some(d) = opts.dim {
        cfg.dim = d;
    }
    if let Some(l) = opts.lmax {
        cfg.l_max = l;
    }
    if let Some(m) = opts.min_modulus {
        cfg.min_modulus = m;
    }
    if opts.no_nfc {
        cfg.normalization = Normalization::None;
    }
    if let Some(s) = opts.scheme {
        cfg.scheme = s;
    }
    if opts.no_lowercase {
        cfg.lowercase = false;
    }
    if let Some(s) = opts.splitter {
        cfg.splitter = s;
    }
    if let Some(p) = &opts.stopwords {
        cfg.stopwords = Some(p.clone());
    }
    if opts.chunk_long_tokens {
        cfg.chunk_long_tokens = true;
    }
    if let Some(t) = opts.threads {
        cfg.threads = t;
    }
    cfg.validate().map_err(Failure::Usage)?;
    Ok(cfg)
}

fn read_input(path: &Path) -> anyhow::Result<Vec<u8>> {
    let mut buf = Vec::new();
    if path.as_os_str() == "-" {
        io::stdin().read_to_end(&mut buf)?;
    } else {
        File::open(path)
            .with_context(|| format!("opening {}", path.display()))?
            .read_to_end(&mut buf)?;
    }
    Ok(buf)
}

fn parse_vector(bytes: &[u8]) -> anyhow::Result<HarmonicEmbedding> {
    if bytes.starts_with(&VECTOR_MAGIC) {
        Ok(codec::read_binary(bytes)?)
    } else {
        Ok(codec::read_json(bytes)?)
    }
}

fn write_report(path: &Path, value: &serde_json::Value) -> anyhow::Result<()> {
    let mut f = BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    );
    serde_json::to_writer_pretty(&mut f, value)?;
    writeln!(f)?;
    Ok(())
}

fn load_records(cfg: &RunConfig, data: &DataArgs) -> Result<(Vec<StsRecord>, usize), Failure> {
    let Some(path) = data.input.as_ref().or(cfg.input.as_ref()) else {
        return Err(Failure::Usage("--input is required".into()));
    };
    let loaded = eval::load_sts_tsv(path, data.column_map()).map_err(anyhow::Error::from)?;
    let skipped = loaded.skipped();
    Ok((loaded.records, skipped))
}

fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Failure> {
    let cfg = resolve_config(&cli.opts)?;
    let json_out = cli.opts.json;
    let codec = cfg.codec();
    let settings = cfg.eval_settings()?;
    let fingerprint = eval::config_fingerprint(&codec, &settings);
    let io_err = |e: io::Error| Failure::Data(e.into());
    writeln!(err, "config fingerprint: {fingerprint}").map_err(io_err)?;

    match cli.command {
        Command::Encode { token, out: path } => {
            let v = codec::encode(&token, &codec).context("encoding token")?;
            match (path, json_out) {
                (Some(p), false) => {
                    let f = File::create(&p).with_context(|| format!("creating {}", p.display()))?;
                    codec::write_binary(&v, BufWriter::new(f)).map_err(io_err)?;
                }
                (Some(p), true) => {
                    let f = File::create(&p).with_context(|| format!("creating {}", p.display()))?;
                    codec::write_json(&v, BufWriter::new(f)).context("writing vector")?;
                }
                (None, true) => {
                    codec::write_json(&v, &mut *out).context("writing vector")?;
                    writeln!(out).map_err(io_err)?;
                }
                (None, false) => codec::write_binary(&v, &mut *out).map_err(io_err)?,
            }
        }
        Command::Decode { vector_file } => {
            let v = parse_vector(&read_input(&vector_file)?)?;
            let decoded = codec::decode(&v, &codec).context("decoding vector")?;
            if decoded.capacity_exceeded {
                writeln!(err, "warning: basis capacity does not cover l_max; token recovered modulo M")
                    .map_err(io_err)?;
            }
            if json_out {
                let value = json!({
                    "token": decoded.token,
                    "capacity_exceeded": decoded.capacity_exceeded,
                    "config_fingerprint": fingerprint,
                });
                writeln!(out, "{value}").map_err(io_err)?;
            } else {
                writeln!(out, "{}", decoded.token).map_err(io_err)?;
            }
        }
        Command::Sim { sentences, file } => {
            let pairs: Vec<(String, String)> = match (file, sentences.len()) {
                (Some(path), 0) => {
                    let text = String::from_utf8(read_input(&path)?).context("input is not UTF-8")?;
                    text.lines()
                        .filter(|l| !l.trim().is_empty())
                        .enumerate()
                        .map(|(i, l)| {
                            let mut cols = l.split('\t');
                            match (cols.next(), cols.next()) {
                                (Some(a), Some(b)) => Ok((a.to_owned(), b.to_owned())),
                                _ => bail!("line {}: expected two tab-separated sentences", i + 1),
                            }
                        })
                        .collect::<anyhow::Result<_>>()?
                }
                (None, 2) => vec![(sentences[0].clone(), sentences[1].clone())],
                _ => {
                    return Err(Failure::Usage(
                        "sim needs exactly two sentences or --file".into(),
                    ))
                }
            };
            let records: Vec<StsRecord> = pairs
                .into_iter()
                .map(|(a, b)| StsRecord {
                    sentence_a: a,
                    sentence_b: b,
                    gold_score: 0.0,
                })
                .collect();
            let scheme = eval::build_scheme(&records, &codec, &settings);
            let mut scores = Vec::with_capacity(records.len());
            for (i, r) in records.iter().enumerate() {
                let embed = |s: &str| {
                    let tokens = pooling::prepare_tokens(
                        s,
                        &settings.tokenizer,
                        &codec,
                        settings.chunk_long_tokens,
                    );
                    pooling::embed_tokens(&tokens, &scheme, &codec)
                };
                let a = embed(&r.sentence_a).with_context(|| format!("pair {}", i + 1))?;
                let b = embed(&r.sentence_b).with_context(|| format!("pair {}", i + 1))?;
                scores.push(cosine_similarity(&a.vector, &b.vector).context("similarity")?);
            }
            if json_out {
                let value = json!({ "config_fingerprint": fingerprint, "scores": scores });
                writeln!(out, "{value}").map_err(io_err)?;
            } else {
                for s in scores {
                    writeln!(out, "{s:.6}").map_err(io_err)?;
                }
            }
        }
        Command::Eval { data, scores } => {
            let (records, skipped) = load_records(&cfg, &data)?;
            if skipped > 0 {
                writeln!(err, "skipped {skipped} malformed or out-of-range rows").map_err(io_err)?;
            }
            let report = eval::run_eval(&records, &codec, &settings).map_err(anyhow::Error::from)?;
            let value = serde_json::to_value(&report).context("serializing report")?;
            if let Some(p) = data.report.as_ref().or(cfg.output.as_ref()) {
                write_report(p, &value)?;
            }
            if let Some(p) = scores {
                let mut f = BufWriter::new(
                    File::create(&p).with_context(|| format!("creating {}", p.display()))?,
                );
                for s in &report.scores {
                    writeln!(f, "{s:.17}").map_err(io_err)?;
                }
            }
            if json_out {
                writeln!(out, "{value}").map_err(io_err)?;
            } else {
                write!(out, "{}", eval::format_table(std::slice::from_ref(&report)))
                    .map_err(io_err)?;
                writeln!(out, "pairs: {}  skipped rows: {skipped}", report.n_pairs).map_err(io_err)?;
            }
        }
        Command::Sweep { data, dims } => {
            if let Some(&d) = dims.iter().find(|&&d| d < 4 || d % 2 != 0) {
                return Err(Failure::Usage(format!("dimension {d} must be even and at least 4")));
            }
            let (records, _) = load_records(&cfg, &data)?;
            let reports = eval::dimension_sweep(
                &records,
                &settings,
                &dims,
                cfg.l_max,
                cfg.min_modulus,
                cfg.normalization,
            )
            .map_err(anyhow::Error::from)?;
            let value = serde_json::to_value(&reports).context("serializing reports")?;
            if let Some(p) = data.report.as_ref().or(cfg.output.as_ref()) {
                write_report(p, &value)?;
            }
            if json_out {
                writeln!(out, "{value}").map_err(io_err)?;
            } else {
                write!(out, "{}", eval::format_table(&reports)).map_err(io_err)?;
            }
        }
        Command::Basis { out: path } => {
            let basis = codec.basis();
            if let Some(p) = path {
                std::fs::write(&p, basis.to_json())
                    .with_context(|| format!("writing {}", p.display()))?;
            }
            if json_out {
                let value = json!({
                    "basis": basis.to_file(),
                    "capacity": basis.capacity().to_string(),
                    "capacity_bits": basis.capacity().bits(),
                    "reversible": codec.is_reversible(),
                    "config_fingerprint": fingerprint,
                });
                writeln!(out, "{value}").map_err(io_err)?;
            } else {
                let moduli: Vec<String> = basis.moduli().iter().map(u64::to_string).collect();
                writeln!(out, "moduli: {}", moduli.join(" ")).map_err(io_err)?;
                writeln!(out, "capacity: {}", basis.capacity()).map_err(io_err)?;
                writeln!(
                    out,
                    "capacity bits: {}  token bits: {}  reversible: {}",
                    basis.capacity().bits(),
                    16 * cfg.l_max,
                    codec.is_reversible()
                )
                .map_err(io_err)?;
            }
        }
    }
    out.flush().map_err(io_err)?;
    Ok(())
}

/// Parses `argv` and runs one subcommand against the given streams.
pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = if code == 0 {
                write!(out, "{e}")
            } else {
                write!(err, "{e}")
            };
            return code;
        }
    };
    match run(cli, out, err) {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            1
        }
        Err(Failure::Data(e)) => {
            let _ = writeln!(err, "error: {e:#}");
            2
        }
    }
}

pub fn main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = io::stdout();
    let stderr = io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}
