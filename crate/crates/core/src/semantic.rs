//! Semantic-similarity metrics over abstract embeddings.
//!
//! Encoders are consumed behind [`EmbeddingProvider`]; this crate never runs a
//! transformer. Token vectors are unit-normalized at ingestion so the greedy
//! matching scores are cosines bounded by `[-1, 1]`. The bundled
//! [`FixtureProvider`] serves pre-recorded vectors from a fixture file and
//! refuses unknown texts, so desk-scale runs cannot silently fabricate
//! semantics.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SemanticError {
    #[error("token list and vector list differ in length ({tokens} vs {vectors})")]
    LengthMismatch { tokens: usize, vectors: usize },
    #[error("embedding dimensions differ ({left} vs {right})")]
    DimensionMismatch { left: usize, right: usize },
    #[error("embeddings must have dimension >= 1")]
    EmptyDimension,
    #[error("cannot score an empty token list")]
    EmptyTokenList,
    #[error("zero-norm vector cannot be normalized or compared")]
    ZeroNorm,
    #[error("non-finite entry in embedding vector")]
    NonFinite,
    #[error("no embedding recorded for text: {0:?}")]
    UnknownText(String),
    #[error("fixture line {line}: {message}")]
    MalformedFixture { line: usize, message: String },
    #[error("fixture record for {text:?} has dim {record} but fixture dim is {fixture}")]
    FixtureDimMismatch {
        text: String,
        record: usize,
        fixture: usize,
    },
    #[error("duplicate fixture record for text: {0:?}")]
    DuplicateFixtureText(String),
    #[error("I/O: {0}")]
    Io(#[from] std::io::Error),
}

/// Per-token contextual embeddings for one text, unit-normalized at
/// construction so dot products are cosines.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenEmbeddings {
    tokens: Vec<String>,
    vectors: Vec<Vec<f64>>,
}

impl TokenEmbeddings {
    pub fn new(tokens: Vec<String>, vectors: Vec<Vec<f64>>) -> Result<Self, SemanticError> {
        if tokens.len() != vectors.len() {
            return Err(SemanticError::LengthMismatch {
                tokens: tokens.len(),
                vectors: vectors.len(),
            });
        }
        let dim = vectors.first().map(Vec::len).unwrap_or(0);
        if !vectors.is_empty() && dim == 0 {
            return Err(SemanticError::EmptyDimension);
        }
        let mut normalized = Vec::with_capacity(vectors.len());
        for v in vectors {
            if v.len() != dim {
                return Err(SemanticError::DimensionMismatch {
                    left: dim,
                    right: v.len(),
                });
            }
            normalized.push(unit_normalize(v)?);
        }
        Ok(Self {
            tokens,
            vectors: normalized,
        })
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn dim(&self) -> usize {
        self.vectors.first().map(Vec::len).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

/// A whole-sentence embedding. Kept unnormalized; [`sentence_cosine`]
/// normalizes on the fly.
#[derive(Debug, Clone, PartialEq)]
pub struct SentenceEmbedding {
    vector: Vec<f64>,
    source_text: String,
}

impl SentenceEmbedding {
    pub fn new(vector: Vec<f64>, source_text: impl Into<String>) -> Result<Self, SemanticError> {
        if vector.is_empty() {
            return Err(SemanticError::EmptyDimension);
        }
        if vector.iter().any(|x| !x.is_finite()) {
            return Err(SemanticError::NonFinite);
        }
        Ok(Self {
            vector,
            source_text: source_text.into(),
        })
    }

    pub fn vector(&self) -> &[f64] {
        &self.vector
    }

    pub fn source_text(&self) -> &str {
        &self.source_text
    }

    pub fn dim(&self) -> usize {
        self.vector.len()
    }
}

fn unit_normalize(v: Vec<f64>) -> Result<Vec<f64>, SemanticError> {
    if v.iter().any(|x| !x.is_finite()) {
        return Err(SemanticError::NonFinite);
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(SemanticError::ZeroNorm);
    }
    Ok(v.into_iter().map(|x| x / norm).collect())
}

/// Greedy token-matching precision/recall/F1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BertScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Greedy token matching over unit vectors: recall averages, over reference
/// tokens, the best dot product against candidate tokens; precision is the
/// mirror over candidate tokens; F1 is their harmonic mean, guarded to 0 when
/// P + R = 0.
pub fn bertscore(
    candidate: &TokenEmbeddings,
    reference: &TokenEmbeddings,
) -> Result<BertScore, SemanticError> {
    if candidate.is_empty() || reference.is_empty() {
        return Err(SemanticError::EmptyTokenList);
    }
    if candidate.dim() != reference.dim() {
        return Err(SemanticError::DimensionMismatch {
            left: candidate.dim(),
            right: reference.dim(),
        });
    }
    let best_against = |v: &[f64], others: &[Vec<f64>]| {
        others
            .iter()
            .map(|o| dot(v, o))
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let recall = reference
        .vectors()
        .iter()
        .map(|r| best_against(r, candidate.vectors()))
        .sum::<f64>()
        / reference.vectors().len() as f64;
    let precision = candidate
        .vectors()
        .iter()
        .map(|c| best_against(c, reference.vectors()))
        .sum::<f64>()
        / candidate.vectors().len() as f64;
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(BertScore {
        precision,
        recall,
        f1,
    })
}

/// Cosine similarity between two sentence embeddings.
pub fn sentence_cosine(a: &SentenceEmbedding, b: &SentenceEmbedding) -> Result<f64, SemanticError> {
    if a.dim() != b.dim() {
        return Err(SemanticError::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    let na = dot(a.vector(), a.vector()).sqrt();
    let nb = dot(b.vector(), b.vector()).sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(SemanticError::ZeroNorm);
    }
    Ok(dot(a.vector(), b.vector()) / (na * nb))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Source of token and sentence embeddings. Implementations must be
/// deterministic for a fixed input and identify their model via
/// [`version`](EmbeddingProvider::version).
pub trait EmbeddingProvider {
    fn token_embed(&self, text: &str) -> Result<TokenEmbeddings, SemanticError>;
    fn sentence_embed(&self, text: &str) -> Result<SentenceEmbedding, SemanticError>;
    fn version(&self) -> &str;
    /// Whether the provider tolerates concurrent queries. The harness
    /// serializes scoring unless this returns true.
    fn concurrency_safe(&self) -> bool {
        false
    }
}

/// One fixture record: every field an offline run needs to reproduce a
/// provider's output for one text.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmbeddingFixtureRecord {
    pub text: String,
    pub token_list: Vec<String>,
    pub token_vectors: Vec<Vec<f64>>,
    pub sentence_vector: Vec<f64>,
    pub dim: usize,
    pub provider_version: String,
}

/// Serves embeddings recorded in a fixture file and errors on any text the
/// fixture does not contain.
#[derive(Debug, Clone)]
pub struct FixtureProvider {
    records: HashMap<String, EmbeddingFixtureRecord>,
    dim: usize,
    version: String,
}

impl FixtureProvider {
    /// Loads a line-delimited fixture (one JSON record per line).
    pub fn load(path: impl AsRef<Path>) -> Result<Self, SemanticError> {
        let file = File::open(path)?;
        let mut records = Vec::new();
        for (idx, line) in BufReader::new(file).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let record: EmbeddingFixtureRecord =
                serde_json::from_str(&line).map_err(|e| SemanticError::MalformedFixture {
                    line: idx + 1,
                    message: e.to_string(),
                })?;
            records.push(record);
        }
        Self::from_records(records)
    }

    pub fn from_records(records: Vec<EmbeddingFixtureRecord>) -> Result<Self, SemanticError> {
        let mut map = HashMap::new();
        let mut dim = 0usize;
        let mut version = String::new();
        for record in records {
            if dim == 0 {
                dim = record.dim;
                version = record.provider_version.clone();
            } else if record.dim != dim {
                return Err(SemanticError::FixtureDimMismatch {
                    text: record.text.clone(),
                    record: record.dim,
                    fixture: dim,
                });
            }
            let sentence_ok = record.sentence_vector.len() == record.dim;
            let tokens_ok = record.token_vectors.iter().all(|v| v.len() == record.dim);
            if !sentence_ok || !tokens_ok {
                return Err(SemanticError::FixtureDimMismatch {
                    text: record.text.clone(),
                    record: record
                        .sentence_vector
                        .len()
                        .max(record.token_vectors.first().map(Vec::len).unwrap_or(0)),
                    fixture: record.dim,
                });
            }
            if let Some(previous) = map.insert(record.text.clone(), record) {
                return Err(SemanticError::DuplicateFixtureText(previous.text));
            }
        }
        Ok(Self {
            records: map,
            dim,
            version,
        })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn record(&self, text: &str) -> Result<&EmbeddingFixtureRecord, SemanticError> {
        self.records
            .get(text)
            .ok_or_else(|| SemanticError::UnknownText(text.to_string()))
    }
}

impl EmbeddingProvider for FixtureProvider {
    fn token_embed(&self, text: &str) -> Result<TokenEmbeddings, SemanticError> {
        let record = self.record(text)?;
        TokenEmbeddings::new(record.token_list.clone(), record.token_vectors.clone())
    }

    fn sentence_embed(&self, text: &str) -> Result<SentenceEmbedding, SemanticError> {
        let record = self.record(text)?;
        SentenceEmbedding::new(record.sentence_vector.clone(), text)
    }

    fn version(&self) -> &str {
        &self.version
    }

    fn concurrency_safe(&self) -> bool {
        true
    }
}

/// Loads a [`FixtureProvider`]; named to mirror the loading entry points of
/// the other file-backed resources.
pub fn load_embedding_fixture(path: impl AsRef<Path>) -> Result<FixtureProvider, SemanticError> {
    FixtureProvider::load(path)
}
