//! Priming-codebook induction pipeline.
//!
//! Three LLM-orchestrated stages wrapped around a clustering core:
//!
//! 1. [`extract_basic_factors`] pulls concrete factors (with verbatim
//!    evidence) out of sampled responses.
//! 2. [`select_codebook_dimension`] embeds the factor labels, sweeps k and
//!    trim settings, and picks the clustering with the best trimmed
//!    silhouette (ties broken toward larger k, then smaller trim).
//! 3. [`induce_codebook`] names each cluster, and [`assign_priming_vector`]
//!    scores responses against the finished codebook.
//!
//! All LLM traffic goes through [`LlmClient`]; with a [`ReplayClient`] and a
//! fixed seed the whole pipeline is bit-deterministic.

mod cluster;
mod llm;
pub mod prompts;

pub use cluster::{kmeans, silhouette, trimmed_silhouette, KMeansResult, SilhouetteResult};
pub use llm::{
    prompt_hash, read_transcript, write_transcript, CommandClient, LlmClient, RecordingClient,
    ReplayClient, ScriptedClient, TranscriptRecord,
};

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::{sample_turns_covering_subjects, Corpus};
use crate::semantic::{EmbeddingProvider, SemanticError};

#[derive(Debug, Error)]
pub enum CodebookError {
    #[error("k must be at least 2, got {0}")]
    KTooSmall(usize),
    #[error("cannot form {k} clusters from {points} points")]
    FewerPointsThanClusters { points: usize, k: usize },
    #[error("points have inconsistent dimensions")]
    InconsistentDimensions,
    #[error("silhouette needs at least 2 populated clusters")]
    SingleCluster,
    #[error("sweep sets must be non-empty")]
    EmptySweep,
    #[error("trim fraction must lie in [0, 0.5), got {0}")]
    InvalidTau(f64),
    #[error("no responses to extract factors from")]
    NoResponses,
    #[error("no factors parsed from any response")]
    ZeroFactors,
    #[error("no recorded reply for prompt {prompt_hash} (user text {user_text:?})")]
    NoRecordedReply {
        prompt_hash: String,
        user_text: String,
    },
    #[error("unparseable reply after retry: {0}")]
    UnparseableReply(String),
    #[error("priming vector has {got} entries, codebook expects {expected}")]
    VectorLengthMismatch { expected: usize, got: usize },
    #[error("priming vector entry {value} at index {index} is outside [-1, 1]")]
    VectorEntryOutOfRange { index: usize, value: f64 },
    #[error("vector belongs to codebook {got}, expected {expected}")]
    CodebookMismatch { expected: String, got: String },
    #[error("LLM client failure: {0}")]
    ClientFailure(String),
    #[error("transcript line {line}: {message}")]
    TranscriptFormat { line: usize, message: String },
    #[error(transparent)]
    Embedding(#[from] SemanticError),
    #[error("I/O: {0}")]
    Io(#[from] std::io::Error),
}

/// A concrete factor extracted from one response, with the exact expressions
/// that evidence it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasicFactor {
    pub label: String,
    pub evidence: Vec<String>,
    pub source_turn_id: String,
    /// Whether every evidence string is a verbatim substring of the source
    /// response. Violations are flagged, not dropped.
    pub evidence_verified: bool,
}

/// A named codebook dimension with its polarity schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrimingFactor {
    pub name: String,
    pub explanation: String,
    /// Describes what +1 and -1 mean for this factor.
    pub polarity_schema: String,
}

/// Provenance of an induced codebook.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodebookProvenance {
    /// Hash over the factor pool the codebook was induced from.
    pub corpus_hash: String,
    pub seed: u64,
    pub k: usize,
    pub tau: f64,
    /// Trimmed silhouette of the chosen clustering.
    pub silhouette: f64,
}

/// An ordered list of uniquely named priming factors; the vector space for
/// [`PrimingVector`]s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrimingCodebook {
    factors: Vec<PrimingFactor>,
    provenance: CodebookProvenance,
    id: String,
}

impl PrimingCodebook {
    pub fn new(
        factors: Vec<PrimingFactor>,
        provenance: CodebookProvenance,
    ) -> Result<Self, CodebookError> {
        let mut seen = std::collections::BTreeSet::new();
        for factor in &factors {
            if !seen.insert(factor.name.clone()) {
                return Err(CodebookError::UnparseableReply(format!(
                    "duplicate factor name {:?} in codebook",
                    factor.name
                )));
            }
        }
        let id = codebook_id(&factors, &provenance);
        Ok(Self {
            factors,
            provenance,
            id,
        })
    }

    pub fn factors(&self) -> &[PrimingFactor] {
        &self.factors
    }

    /// Codebook dimension.
    pub fn k(&self) -> usize {
        self.factors.len()
    }

    pub fn provenance(&self) -> &CodebookProvenance {
        &self.provenance
    }

    /// Stable content id; priming vectors carry it.
    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("codebook serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, CodebookError> {
        let book: Self =
            serde_json::from_str(text).map_err(|e| CodebookError::TranscriptFormat {
                line: 0,
                message: format!("codebook parse: {e}"),
            })?;
        // Re-derive the id so tampered files cannot smuggle stale ids.
        PrimingCodebook::new(book.factors, book.provenance)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), CodebookError> {
        fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, CodebookError> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

fn codebook_id(factors: &[PrimingFactor], provenance: &CodebookProvenance) -> String {
    let mut hasher = Sha256::new();
    for factor in factors {
        hasher.update(factor.name.as_bytes());
        hasher.update([0x1f]);
    }
    hasher.update(provenance.corpus_hash.as_bytes());
    hasher.update(provenance.seed.to_le_bytes());
    let digest = hasher.finalize();
    let mut hex = String::with_capacity(16);
    for byte in &digest[..8] {
        let _ = write!(hex, "{byte:02x}");
    }
    hex
}

/// Activation vector aligned to a codebook: entries in `[-1, 1]`, length
/// equal to the codebook dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrimingVector {
    pub values: Vec<f64>,
    pub codebook_id: String,
}

impl PrimingVector {
    /// Validates length and range against a codebook.
    pub fn validate(&self, codebook: &PrimingCodebook) -> Result<(), CodebookError> {
        if self.codebook_id != codebook.id() {
            return Err(CodebookError::CodebookMismatch {
                expected: codebook.id().to_string(),
                got: self.codebook_id.clone(),
            });
        }
        if self.values.len() != codebook.k() {
            return Err(CodebookError::VectorLengthMismatch {
                expected: codebook.k(),
                got: self.values.len(),
            });
        }
        for (index, &value) in self.values.iter().enumerate() {
            if !(-1.0..=1.0).contains(&value) {
                return Err(CodebookError::VectorEntryOutOfRange { index, value });
            }
        }
        Ok(())
    }
}

/// Per-turn sidecar record pairing a turn with its priming vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorSidecarRecord {
    pub turn_id: String,
    pub codebook_id: String,
    pub values: Vec<f64>,
}

pub fn write_vector_sidecar(
    path: impl AsRef<Path>,
    records: &[VectorSidecarRecord],
) -> Result<(), CodebookError> {
    let mut out = String::new();
    for record in records {
        out.push_str(&serde_json::to_string(record).expect("sidecar serializes"));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_vector_sidecar(
    path: impl AsRef<Path>,
) -> Result<Vec<VectorSidecarRecord>, CodebookError> {
    let file = File::open(path)?;
    let mut records = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(
            serde_json::from_str(&line).map_err(|e| CodebookError::TranscriptFormat {
                line: idx + 1,
                message: e.to_string(),
            })?,
        );
    }
    Ok(records)
}

/// Stage 1: one extraction prompt per response. Malformed replies are retried
/// once, then skipped with a logged diagnostic. Evidence strings are checked
/// for verbatim presence in the source response and flagged when absent.
pub fn extract_basic_factors(
    responses: &[(String, String)],
    client: &dyn LlmClient,
) -> Result<Vec<BasicFactor>, CodebookError> {
    if responses.is_empty() {
        return Err(CodebookError::NoResponses);
    }
    let mut factors = Vec::new();
    for (turn_id, text) in responses {
        let mut parsed = None;
        for attempt in 0..2 {
            let reply = client.complete(prompts::FACTOR_EXTRACTION_SYSTEM_PROMPT, text)?;
            match parse_factor_reply(&reply) {
                Ok(pairs) => {
                    parsed = Some(pairs);
                    break;
                }
                Err(message) if attempt == 0 => {
                    log::warn!("turn {turn_id}: malformed factor reply ({message}); retrying");
                }
                Err(message) => {
                    log::warn!(
                        "turn {turn_id}: malformed factor reply after retry ({message}); skipping"
                    );
                }
            }
        }
        let Some(pairs) = parsed else { continue };
        for (label, evidence) in pairs {
            let evidence_verified = evidence.iter().all(|e| text.contains(e.as_str()));
            if !evidence_verified {
                log::warn!(
                    "turn {turn_id}: factor {label:?} has evidence not found verbatim in the response"
                );
            }
            factors.push(BasicFactor {
                label,
                evidence,
                source_turn_id: turn_id.clone(),
                evidence_verified,
            });
        }
    }
    if factors.is_empty() {
        return Err(CodebookError::ZeroFactors);
    }
    Ok(factors)
}

fn parse_factor_reply(reply: &str) -> Result<Vec<(String, Vec<String>)>, String> {
    let json = extract_json_object(reply).ok_or("no JSON object found")?;
    let map: serde_json::Map<String, serde_json::Value> =
        serde_json::from_str(json).map_err(|e| e.to_string())?;
    let mut out = Vec::new();
    for (label, value) in map {
        let evidence = match value {
            serde_json::Value::Array(items) => items
                .into_iter()
                .map(|v| match v {
                    serde_json::Value::String(s) => Ok(s),
                    other => Err(format!("evidence entry is not a string: {other}")),
                })
                .collect::<Result<Vec<String>, String>>()?,
            serde_json::Value::String(s) => vec![s],
            other => return Err(format!("factor value is not a list: {other}")),
        };
        if evidence.is_empty() {
            return Err(format!("factor {label:?} has no evidence"));
        }
        out.push((label, evidence));
    }
    if out.is_empty() {
        return Err("reply object is empty".to_string());
    }
    Ok(out)
}

fn extract_json_object(text: &str) -> Option<&str> {
    let start = text.find('{')?;
    let end = text.rfind('}')?;
    (end > start).then(|| &text[start..=end])
}

fn extract_json_array(text: &str) -> Option<&str> {
    let start = text.find('[')?;
    let end = text.rfind(']')?;
    (end > start).then(|| &text[start..=end])
}

/// Factor pool clustered at one k: assignments parallel the factor list.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorClusters {
    pub k: usize,
    pub assignments: Vec<usize>,
    pub factors: Vec<BasicFactor>,
    /// Factor-label embeddings, parallel to `factors`.
    pub points: Vec<Vec<f64>>,
}

impl FactorClusters {
    /// Members of each cluster, in cluster-index order.
    pub fn members(&self) -> Vec<Vec<&BasicFactor>> {
        let mut out = vec![Vec::new(); self.k];
        for (factor, &cluster) in self.factors.iter().zip(&self.assignments) {
            out[cluster].push(factor);
        }
        out
    }
}

/// Embeds each factor label with the provider's sentence encoder and runs
/// seeded k-means over the embeddings.
pub fn cluster_factors(
    factors: &[BasicFactor],
    embedder: &dyn EmbeddingProvider,
    k: usize,
    seed: u64,
) -> Result<FactorClusters, CodebookError> {
    if k < 2 {
        return Err(CodebookError::KTooSmall(k));
    }
    if factors.len() < k {
        return Err(CodebookError::FewerPointsThanClusters {
            points: factors.len(),
            k,
        });
    }
    let mut points = Vec::with_capacity(factors.len());
    for factor in factors {
        points.push(embedder.sentence_embed(&factor.label)?.vector().to_vec());
    }
    let result = kmeans(&points, k, seed)?;
    Ok(FactorClusters {
        k,
        assignments: result.assignments,
        factors: factors.to_vec(),
        points,
    })
}

/// One row of the (k, tau) sweep table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub k: usize,
    pub tau: f64,
    pub score: f64,
}

/// Outcome of the dimension sweep: the winning (k, tau), the full score
/// table, and the winning clustering ready for induction.
#[derive(Debug, Clone)]
pub struct DimensionSelection {
    pub k_star: usize,
    pub tau_star: f64,
    pub score_star: f64,
    pub table: Vec<SweepEntry>,
    pub clusters: FactorClusters,
}

/// Clusters the factor pool at every k, scores every (k, tau) with the
/// trimmed silhouette, and returns the argmax. Ties prefer larger k, then
/// smaller tau.
pub fn select_codebook_dimension(
    factors: &[BasicFactor],
    embedder: &dyn EmbeddingProvider,
    ks: &[usize],
    taus: &[f64],
    seed: u64,
) -> Result<DimensionSelection, CodebookError> {
    if ks.is_empty() || taus.is_empty() {
        return Err(CodebookError::EmptySweep);
    }
    let mut ks: Vec<usize> = ks.to_vec();
    ks.sort_unstable();
    ks.dedup();
    if let Some(&bad) = taus.iter().find(|t| !(0.0..0.5).contains(*t)) {
        return Err(CodebookError::InvalidTau(bad));
    }
    let mut taus: Vec<f64> = taus.to_vec();
    taus.sort_by(f64::total_cmp);
    taus.dedup();

    let mut table = Vec::new();
    let mut clusterings: BTreeMap<usize, FactorClusters> = BTreeMap::new();
    let mut best: Option<(usize, f64, f64)> = None;
    for &k in &ks {
        let clusters = cluster_factors(factors, embedder, k, seed)?;
        let sil = silhouette(&clusters.points, &clusters.assignments)?;
        for &tau in &taus {
            let score = trimmed_silhouette(&sil.per_point, tau);
            table.push(SweepEntry { k, tau, score });
            let wins = match best {
                None => true,
                Some((bk, btau, bscore)) => {
                    score > bscore || (score == bscore && (k > bk || (k == bk && tau < btau)))
                }
            };
            if wins {
                best = Some((k, tau, score));
            }
        }
        clusterings.insert(k, clusters);
    }
    let (k_star, tau_star, score_star) = best.expect("non-empty sweep");
    let clusters = clusterings.remove(&k_star).expect("winning k clustered");
    Ok(DimensionSelection {
        k_star,
        tau_star,
        score_star,
        table,
        clusters,
    })
}

/// Stage 2: one summary prompt per cluster, threading the accumulated name
/// history so the model avoids repeats. A duplicated name triggers one
/// re-prompt, then suffix disambiguation.
pub fn induce_codebook(
    clusters: &FactorClusters,
    client: &dyn LlmClient,
    history: &[String],
    provenance: CodebookProvenance,
) -> Result<PrimingCodebook, CodebookError> {
    let mut names: Vec<String> = history.to_vec();
    let mut factors = Vec::with_capacity(clusters.k);
    for (cluster_idx, members) in clusters.members().iter().enumerate() {
        if members.is_empty() {
            continue;
        }
        let mut accepted: Option<PrimingFactor> = None;
        let mut last_error = String::new();
        for attempt in 0..2 {
            let user_text = prompts::render_cluster_user_text(members, &names);
            let reply = client.complete(prompts::CODEBOOK_SUMMARY_SYSTEM_PROMPT, &user_text)?;
            match parse_codebook_reply(&reply) {
                Ok(mut factor) => {
                    if names.iter().any(|n| n == &factor.name) {
                        if attempt == 0 {
                            log::warn!(
                                "cluster {cluster_idx}: duplicate factor name {:?}; re-prompting",
                                factor.name
                            );
                            continue;
                        }
                        let disambiguated = disambiguate(&factor.name, &names);
                        log::warn!(
                            "cluster {cluster_idx}: duplicate {:?} persisted; renamed to {:?}",
                            factor.name,
                            disambiguated
                        );
                        factor.name = disambiguated;
                    }
                    accepted = Some(factor);
                    break;
                }
                Err(message) => {
                    last_error = message;
                    if attempt == 0 {
                        log::warn!(
                            "cluster {cluster_idx}: malformed summary reply ({last_error}); retrying"
                        );
                    }
                }
            }
        }
        let factor = accepted.ok_or_else(|| {
            CodebookError::UnparseableReply(format!("cluster {cluster_idx}: {last_error}"))
        })?;
        names.push(factor.name.clone());
        factors.push(factor);
    }
    PrimingCodebook::new(factors, provenance)
}

fn disambiguate(name: &str, taken: &[String]) -> String {
    let mut counter = 2usize;
    loop {
        let candidate = format!("{name} ({counter})");
        if !taken.iter().any(|n| n == &candidate) {
            return candidate;
        }
        counter += 1;
    }
}

fn parse_codebook_reply(reply: &str) -> Result<PrimingFactor, String> {
    #[derive(Deserialize)]
    struct Reply {
        #[serde(rename = "Priming factor")]
        name: String,
        #[serde(rename = "Explanation")]
        explanation: String,
        #[serde(rename = "Value")]
        value: String,
    }
    let json = extract_json_object(reply).ok_or("no JSON object found")?;
    let parsed: Reply = serde_json::from_str(json).map_err(|e| e.to_string())?;
    if parsed.name.trim().is_empty() {
        return Err("factor name is empty".to_string());
    }
    let schema = parsed.value;
    if !(schema.contains('1') && schema.contains("-1")) {
        return Err(format!(
            "polarity schema does not describe both poles: {schema:?}"
        ));
    }
    Ok(PrimingFactor {
        name: parsed.name.trim().to_string(),
        explanation: parsed.explanation,
        polarity_schema: schema,
    })
}

/// Stage 3: prompts for an activation vector and validates it. Out-of-range
/// entries are clamped with a logged diagnostic; a length mismatch is retried
/// once and then fails.
pub fn assign_priming_vector(
    response_text: &str,
    codebook: &PrimingCodebook,
    client: &dyn LlmClient,
) -> Result<PrimingVector, CodebookError> {
    let user_text = prompts::render_vector_user_text(codebook, response_text);
    let mut last_error: Option<CodebookError> = None;
    for attempt in 0..2 {
        let reply = client.complete(prompts::VECTOR_ASSIGNMENT_SYSTEM_PROMPT, &user_text)?;
        let values = match parse_vector_reply(&reply) {
            Ok(values) => values,
            Err(message) => {
                if attempt == 0 {
                    log::warn!("malformed vector reply ({message}); retrying");
                    last_error = Some(CodebookError::UnparseableReply(message));
                    continue;
                }
                return Err(CodebookError::UnparseableReply(message));
            }
        };
        if values.len() != codebook.k() {
            let err = CodebookError::VectorLengthMismatch {
                expected: codebook.k(),
                got: values.len(),
            };
            if attempt == 0 {
                log::warn!("{err}; retrying");
                last_error = Some(err);
                continue;
            }
            return Err(err);
        }
        let clamped: Vec<f64> = values
            .iter()
            .enumerate()
            .map(|(index, &value)| {
                if !(-1.0..=1.0).contains(&value) {
                    log::warn!("vector entry {value} at index {index} outside [-1, 1]; clamped");
                    value.clamp(-1.0, 1.0)
                } else {
                    value
                }
            })
            .collect();
        return Ok(PrimingVector {
            values: clamped,
            codebook_id: codebook.id().to_string(),
        });
    }
    Err(last_error
        .unwrap_or_else(|| CodebookError::UnparseableReply("vector assignment failed".to_string())))
}

fn parse_vector_reply(reply: &str) -> Result<Vec<f64>, String> {
    let json = extract_json_array(reply).ok_or("no JSON array found")?;
    let values: Vec<f64> = serde_json::from_str(json).map_err(|e| e.to_string())?;
    if values.is_empty() {
        return Err("vector is empty".to_string());
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err("vector contains non-finite entries".to_string());
    }
    Ok(values)
}

/// Parameters for the end-to-end induction pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineParams {
    /// How many responses to sample (subject-covering round robin).
    pub sample_size: usize,
    pub ks: Vec<usize>,
    pub taus: Vec<f64>,
    pub seed: u64,
}

/// Everything the pipeline produced, including the sweep table for reporting.
#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub codebook: PrimingCodebook,
    pub table: Vec<SweepEntry>,
    pub factors: Vec<BasicFactor>,
    pub sampled: usize,
}

fn response_pool_hash(responses: &[(String, String)]) -> String {
    let mut hasher = Sha256::new();
    for (turn_id, text) in responses {
        hasher.update(turn_id.as_bytes());
        hasher.update([0x1f]);
        hasher.update(text.as_bytes());
        hasher.update([0x1e]);
    }
    let digest = hasher.finalize();
    let mut hex = String::with_capacity(16);
    for byte in &digest[..8] {
        let _ = write!(hex, "{byte:02x}");
    }
    hex
}

/// Runs sample -> extract -> sweep -> induce as one deterministic unit. The
/// same entry point backs recorded live runs and their replays, so both see
/// identical prompt sequences.
pub fn run_codebook_pipeline(
    corpus: &Corpus,
    embedder: &dyn EmbeddingProvider,
    client: &dyn LlmClient,
    params: &PipelineParams,
) -> Result<PipelineOutcome, CodebookError> {
    let responses = sample_turns_covering_subjects(corpus, params.sample_size, params.seed);
    if responses.is_empty() {
        return Err(CodebookError::NoResponses);
    }
    let corpus_hash = response_pool_hash(&responses);
    let factors = extract_basic_factors(&responses, client)?;
    let selection =
        select_codebook_dimension(&factors, embedder, &params.ks, &params.taus, params.seed)?;
    let provenance = CodebookProvenance {
        corpus_hash,
        seed: params.seed,
        k: selection.k_star,
        tau: selection.tau_star,
        silhouette: selection.score_star,
    };
    let codebook = induce_codebook(&selection.clusters, client, &[], provenance)?;
    Ok(PipelineOutcome {
        codebook,
        table: selection.table,
        factors,
        sampled: responses.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semantic::{EmbeddingFixtureRecord, FixtureProvider};

    fn factor(label: &str, evidence: &[&str], turn: &str) -> BasicFactor {
        BasicFactor {
            label: label.to_string(),
            evidence: evidence.iter().map(|s| s.to_string()).collect(),
            source_turn_id: turn.to_string(),
            evidence_verified: true,
        }
    }

    fn provenance() -> CodebookProvenance {
        CodebookProvenance {
            corpus_hash: "test".into(),
            seed: 0,
            k: 2,
            tau: 0.0,
            silhouette: 0.5,
        }
    }

    fn label_fixture(labels: &[(&str, [f64; 2])]) -> FixtureProvider {
        let records = labels
            .iter()
            .map(|(label, v)| EmbeddingFixtureRecord {
                text: label.to_string(),
                token_list: vec![label.to_string()],
                token_vectors: vec![v.to_vec()],
                sentence_vector: v.to_vec(),
                dim: 2,
                provider_version: "label-fixture".into(),
            })
            .collect();
        FixtureProvider::from_records(records).unwrap()
    }

    #[test]
    fn extract_parses_wellformed_replies() {
        let client = ScriptedClient::new([
            r#"{"felt pressure": ["so much pressure"], "joy": ["really happy"]}"#,
            r#"{"fatigue": ["legs were heavy"]}"#,
        ]);
        let responses = vec![
            (
                "t1".to_string(),
                "there was so much pressure but I am really happy".to_string(),
            ),
            ("t2".to_string(), "my legs were heavy".to_string()),
        ];
        let factors = extract_basic_factors(&responses, &client).unwrap();
        assert_eq!(factors.len(), 3);
        assert!(factors.iter().all(|f| f.evidence_verified));
    }

    #[test]
    fn extract_retries_then_skips_malformed() {
        let client = ScriptedClient::new([
            "not json at all",
            "still { broken",
            r#"{"ok factor": ["fine"]}"#,
        ]);
        let responses = vec![
            ("bad".to_string(), "whatever".to_string()),
            ("good".to_string(), "fine".to_string()),
        ];
        let factors = extract_basic_factors(&responses, &client).unwrap();
        assert_eq!(factors.len(), 1);
        assert_eq!(factors[0].source_turn_id, "good");
    }

    #[test]
    fn extract_flags_unverifiable_evidence() {
        let client = ScriptedClient::new([r#"{"claim": ["phrase not present"]}"#]);
        let responses = vec![("t".to_string(), "actual response text".to_string())];
        let factors = extract_basic_factors(&responses, &client).unwrap();
        assert!(!factors[0].evidence_verified);
    }

    #[test]
    fn extract_zero_factors_is_an_error() {
        let client = ScriptedClient::new(["junk", "junk"]);
        let responses = vec![("t".to_string(), "text".to_string())];
        assert!(matches!(
            extract_basic_factors(&responses, &client),
            Err(CodebookError::ZeroFactors)
        ));
    }

    #[test]
    fn cluster_factors_groups_tight_labels() {
        let provider = label_fixture(&[
            ("anxious", [1.0, 0.0]),
            ("nervous", [0.99, 0.1]),
            ("joyful", [0.0, 1.0]),
            ("delighted", [0.1, 0.99]),
        ]);
        let factors = vec![
            factor("anxious", &[], "t1"),
            factor("nervous", &[], "t2"),
            factor("joyful", &[], "t3"),
            factor("delighted", &[], "t4"),
        ];
        let clusters = cluster_factors(&factors, &provider, 2, 5).unwrap();
        assert_eq!(clusters.assignments[0], clusters.assignments[1]);
        assert_eq!(clusters.assignments[2], clusters.assignments[3]);
        assert_ne!(clusters.assignments[0], clusters.assignments[2]);
    }

    #[test]
    fn cluster_rejects_k_one_and_k_over_pool() {
        let provider = label_fixture(&[("a", [1.0, 0.0]), ("b", [0.0, 1.0])]);
        let factors = vec![factor("a", &[], "t"), factor("b", &[], "t")];
        assert!(matches!(
            cluster_factors(&factors, &provider, 1, 0),
            Err(CodebookError::KTooSmall(1))
        ));
        assert!(matches!(
            cluster_factors(&factors, &provider, 3, 0),
            Err(CodebookError::FewerPointsThanClusters { .. })
        ));
    }

    #[test]
    fn sweep_rejects_out_of_range_tau() {
        let provider = label_fixture(&[("a", [1.0, 0.0]), ("b", [0.0, 1.0])]);
        let factors = vec![factor("a", &[], "t"), factor("b", &[], "t")];
        assert!(matches!(
            select_codebook_dimension(&factors, &provider, &[2], &[0.5], 0),
            Err(CodebookError::InvalidTau(_))
        ));
        assert!(matches!(
            select_codebook_dimension(&factors, &provider, &[2], &[], 0),
            Err(CodebookError::EmptySweep)
        ));
    }

    #[test]
    fn sweep_single_candidate_is_trivial() {
        let provider = label_fixture(&[
            ("a", [1.0, 0.0]),
            ("b", [0.9, 0.1]),
            ("c", [0.0, 1.0]),
            ("d", [0.1, 0.9]),
        ]);
        let factors = vec![
            factor("a", &[], "t"),
            factor("b", &[], "t"),
            factor("c", &[], "t"),
            factor("d", &[], "t"),
        ];
        let selection = select_codebook_dimension(&factors, &provider, &[2], &[0.0], 3).unwrap();
        assert_eq!((selection.k_star, selection.tau_star), (2, 0.0));
        assert_eq!(selection.table.len(), 1);
    }

    #[test]
    fn induce_builds_codebook_and_threads_history() {
        let provider = label_fixture(&[
            ("anxious", [1.0, 0.0]),
            ("nervous", [0.99, 0.1]),
            ("joyful", [0.0, 1.0]),
            ("delighted", [0.1, 0.99]),
        ]);
        let factors = vec![
            factor("anxious", &["felt anxious"], "t1"),
            factor("nervous", &["so nervous"], "t2"),
            factor("joyful", &["pure joy"], "t3"),
            factor("delighted", &["delighted with it"], "t4"),
        ];
        let clusters = cluster_factors(&factors, &provider, 2, 5).unwrap();
        let client = ScriptedClient::new([
            r#"{"Priming factor": "Perceived Pressure", "Explanation": "pressure state", "Value": "1 represents high pressure, -1 represents low pressure"}"#,
            r#"{"Priming factor": "Affect", "Explanation": "emotional tone", "Value": "1 represents positive affect, -1 represents negative affect"}"#,
        ]);
        let book = induce_codebook(&clusters, &client, &[], provenance()).unwrap();
        assert_eq!(book.k(), 2);
        let names: Vec<&str> = book.factors().iter().map(|f| f.name.as_str()).collect();
        assert!(names.contains(&"Perceived Pressure") && names.contains(&"Affect"));
    }

    #[test]
    fn induce_reprompts_then_suffixes_duplicates() {
        let provider = label_fixture(&[
            ("anxious", [1.0, 0.0]),
            ("nervous", [0.99, 0.1]),
            ("joyful", [0.0, 1.0]),
            ("delighted", [0.1, 0.99]),
        ]);
        let factors = vec![
            factor("anxious", &[], "t1"),
            factor("nervous", &[], "t2"),
            factor("joyful", &[], "t3"),
            factor("delighted", &[], "t4"),
        ];
        let clusters = cluster_factors(&factors, &provider, 2, 5).unwrap();
        let dup = r#"{"Priming factor": "Affect", "Explanation": "x", "Value": "1 vs -1"}"#;
        let client = ScriptedClient::new([dup, dup, dup]);
        let book = induce_codebook(&clusters, &client, &[], provenance()).unwrap();
        let names: Vec<&str> = book.factors().iter().map(|f| f.name.as_str()).collect();
        assert_eq!(names, ["Affect", "Affect (2)"]);
    }

    fn two_factor_codebook() -> PrimingCodebook {
        PrimingCodebook::new(
            vec![
                PrimingFactor {
                    name: "Affect".into(),
                    explanation: "emotional tone".into(),
                    polarity_schema: "1 positive, -1 negative".into(),
                },
                PrimingFactor {
                    name: "Confidence".into(),
                    explanation: "self-belief".into(),
                    polarity_schema: "1 assured, -1 doubtful".into(),
                },
            ],
            provenance(),
        )
        .unwrap()
    }

    #[test]
    fn assign_accepts_wellformed_vector() {
        let book = two_factor_codebook();
        let client = ScriptedClient::new(["[0.5, -0.25]"]);
        let v = assign_priming_vector("text", &book, &client).unwrap();
        assert_eq!(v.values, vec![0.5, -0.25]);
        v.validate(&book).unwrap();
    }

    #[test]
    fn assign_clamps_out_of_range() {
        let book = two_factor_codebook();
        let client = ScriptedClient::new(["[1.5, -0.5]"]);
        let v = assign_priming_vector("text", &book, &client).unwrap();
        assert_eq!(v.values, vec![1.0, -0.5]);
    }

    #[test]
    fn assign_retries_length_mismatch_then_errors() {
        let book = two_factor_codebook();
        let client = ScriptedClient::new(["[0.5]", "[0.5]"]);
        assert!(matches!(
            assign_priming_vector("text", &book, &client),
            Err(CodebookError::VectorLengthMismatch {
                expected: 2,
                got: 1
            })
        ));
        // A good reply on the retry succeeds.
        let client = ScriptedClient::new(["[0.5]", "[0.5, 0.5]"]);
        assert!(assign_priming_vector("text", &book, &client).is_ok());
    }

    #[test]
    fn vector_validation_enforces_shape() {
        let book = two_factor_codebook();
        let bad_len = PrimingVector {
            values: vec![0.1],
            codebook_id: book.id().to_string(),
        };
        assert!(matches!(
            bad_len.validate(&book),
            Err(CodebookError::VectorLengthMismatch { .. })
        ));
        let bad_book = PrimingVector {
            values: vec![0.1, 0.2],
            codebook_id: "other".into(),
        };
        assert!(matches!(
            bad_book.validate(&book),
            Err(CodebookError::CodebookMismatch { .. })
        ));
    }

    #[test]
    fn codebook_json_roundtrip_preserves_id() {
        let book = two_factor_codebook();
        let back = PrimingCodebook::from_json(&book.to_json()).unwrap();
        assert_eq!(back, book);
        assert_eq!(back.id(), book.id());
    }

    #[test]
    fn vector_reply_with_surrounding_prose_parses() {
        let values = parse_vector_reply("Sure! Here it is: [0.1, -0.2, 0] (done)").unwrap();
        assert_eq!(values, vec![0.1, -0.2, 0.0]);
    }
}
