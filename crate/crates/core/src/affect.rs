//! Emotion-consistency scoring over a valence/arousal/dominance lexicon.
//!
//! Texts are tokenized with the shared lexical tokenizer, lemmatized with a
//! rule-based English lemmatizer, and matched against a lexicon whose raw
//! scores are min-max normalized per dimension across the whole lexicon.
//! The composite score compares per-dimension mean profiles and penalizes
//! coverage disparity:
//!
//! `S = 1 - (1/4) * sum_k |mean_k(R) - mean_k(C)| - beta * |rho_R - rho_C|`
//!
//! with `k` ranging over the three dimensions and `beta = 0.8` by default.
//! The 1/4 factor over a three-term sum is intentional and kept as-is.
//! Per-dimension valence/arousal scores use the single-dimension analog
//! without the 1/4 factor.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::lexical::tokenize;

/// Coverage-disparity penalty weight.
pub const DEFAULT_AFFECT_BETA: f64 = 0.8;

/// The three lexicon dimensions, in storage order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VadDimension {
    Valence = 0,
    Arousal = 1,
    Dominance = 2,
}

#[derive(Debug, Error)]
pub enum AffectError {
    #[error("lexicon file has no usable entries")]
    EmptyLexicon,
    #[error("lexicon line {line}: {message}")]
    MalformedRow { line: usize, message: String },
    #[error("lexicon dimension {dimension} is constant; min-max normalization undefined")]
    DegenerateDimension { dimension: &'static str },
    #[error("profiles come from different lexicons ({left} vs {right})")]
    MismatchedLexicon { left: String, right: String },
    #[error("I/O: {0}")]
    Io(#[from] std::io::Error),
}

/// An emotion lexicon with per-dimension min-max normalization constants
/// computed across all entries. Immutable after load.
#[derive(Debug, Clone)]
pub struct VadLexicon {
    entries: HashMap<String, [f64; 3]>,
    mins: [f64; 3],
    maxs: [f64; 3],
    id: String,
}

impl VadLexicon {
    /// Builds a lexicon from raw `(term, valence, arousal, dominance)` rows.
    pub fn from_entries<I, S>(rows: I) -> Result<Self, AffectError>
    where
        I: IntoIterator<Item = (S, f64, f64, f64)>,
        S: Into<String>,
    {
        let mut entries = HashMap::new();
        let mut mins = [f64::INFINITY; 3];
        let mut maxs = [f64::NEG_INFINITY; 3];
        for (term, v, a, d) in rows {
            let raw = [v, a, d];
            for k in 0..3 {
                mins[k] = mins[k].min(raw[k]);
                maxs[k] = maxs[k].max(raw[k]);
            }
            entries.insert(term.into(), raw);
        }
        if entries.is_empty() {
            return Err(AffectError::EmptyLexicon);
        }
        for (k, name) in ["valence", "arousal", "dominance"].iter().enumerate() {
            let spans = mins[k].partial_cmp(&maxs[k]) == Some(std::cmp::Ordering::Less);
            if !spans {
                return Err(AffectError::DegenerateDimension { dimension: name });
            }
        }
        let id = lexicon_id(&entries);
        Ok(Self {
            entries,
            mins,
            maxs,
            id,
        })
    }

    /// Min-max normalized scores for a term, or None when absent.
    pub fn normalized(&self, term: &str) -> Option<[f64; 3]> {
        self.entries.get(term).map(|raw| {
            let mut out = [0.0; 3];
            for k in 0..3 {
                out[k] = (raw[k] - self.mins[k]) / (self.maxs[k] - self.mins[k]);
            }
            out
        })
    }

    pub fn contains(&self, term: &str) -> bool {
        self.entries.contains_key(term)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Content hash identifying this lexicon; profiles carry it so scores are
    /// never computed across mismatched lexicons.
    pub fn id(&self) -> &str {
        &self.id
    }
}

fn lexicon_id(entries: &HashMap<String, [f64; 3]>) -> String {
    let mut terms: Vec<&String> = entries.keys().collect();
    terms.sort();
    let mut hasher = Sha256::new();
    for term in terms {
        hasher.update(term.as_bytes());
        for value in &entries[term] {
            hasher.update(value.to_le_bytes());
        }
    }
    let digest = hasher.finalize();
    let mut hex = String::with_capacity(16);
    for byte in &digest[..8] {
        let _ = write!(hex, "{byte:02x}");
    }
    hex
}

/// Loads a delimited `(term, V, A, D)` lexicon file. Tab-separated when tabs
/// are present, comma-separated otherwise; an optional header row is skipped
/// when its numeric columns fail to parse.
pub fn load_vad_lexicon(path: impl AsRef<Path>) -> Result<VadLexicon, AffectError> {
    let content = fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for (idx, line) in content.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = if line.contains('\t') {
            line.split('\t').collect()
        } else {
            line.split(',').collect()
        };
        if fields.len() < 4 {
            return Err(AffectError::MalformedRow {
                line: idx + 1,
                message: format!("expected 4 columns, found {}", fields.len()),
            });
        }
        let parsed: Result<Vec<f64>, _> = fields[1..4]
            .iter()
            .map(|f| f.trim().parse::<f64>())
            .collect();
        match parsed {
            Ok(values) => rows.push((
                fields[0].trim().to_lowercase(),
                values[0],
                values[1],
                values[2],
            )),
            Err(e) if idx == 0 => {
                // Header row.
                log::debug!("skipping lexicon header: {e}");
            }
            Err(e) => {
                return Err(AffectError::MalformedRow {
                    line: idx + 1,
                    message: e.to_string(),
                });
            }
        }
    }
    VadLexicon::from_entries(rows)
}

/// Maps a surface token to a lookup lemma.
pub trait Lemmatizer {
    fn lemma(&self, token: &str) -> String;
}

/// Rule-based English lemmatizer covering plural, -ed, and -ing suffixes.
/// Deliberately conservative: short tokens and unknown shapes pass through
/// unchanged.
#[derive(Debug, Clone, Copy, Default)]
pub struct RuleLemmatizer;

impl Lemmatizer for RuleLemmatizer {
    fn lemma(&self, token: &str) -> String {
        let t = token;
        let n = t.len();
        if n > 4 && t.ends_with("ies") {
            return format!("{}y", &t[..n - 3]);
        }
        if n > 4 && t.ends_with("sses") {
            return t[..n - 2].to_string();
        }
        if n > 5 && t.ends_with("ing") {
            return undouble(&t[..n - 3]);
        }
        if n > 4 && t.ends_with("ied") {
            return format!("{}y", &t[..n - 3]);
        }
        if n > 4 && t.ends_with("ed") && !t.ends_with("eed") {
            return undouble(&t[..n - 2]);
        }
        if n > 3
            && t.ends_with('s')
            && !t.ends_with("ss")
            && !t.ends_with("us")
            && !t.ends_with("is")
        {
            return t[..n - 1].to_string();
        }
        t.to_string()
    }
}

fn undouble(stem: &str) -> String {
    let bytes = stem.as_bytes();
    let n = bytes.len();
    if n >= 2 && bytes[n - 1] == bytes[n - 2] && bytes[n - 1].is_ascii_alphabetic() {
        let c = bytes[n - 1] as char;
        if !"aeiou".contains(c) && c != 's' {
            return stem[..n - 1].to_string();
        }
    }
    stem.to_string()
}

/// Per-text affect summary: normalized per-dimension means over matched
/// tokens, lexicon coverage, and the lexicon identity it was computed under.
#[derive(Debug, Clone, PartialEq)]
pub struct AffectProfile {
    means: [Option<f64>; 3],
    coverage: f64,
    matched_count: usize,
    token_count: usize,
    lexicon_id: String,
}

impl AffectProfile {
    pub fn mean(&self, dim: VadDimension) -> Option<f64> {
        self.means[dim as usize]
    }

    /// Fraction of tokens matched in the lexicon; 0 for an empty text.
    pub fn coverage(&self) -> f64 {
        self.coverage
    }

    pub fn matched_count(&self) -> usize {
        self.matched_count
    }

    pub fn token_count(&self) -> usize {
        self.token_count
    }

    pub fn lexicon_id(&self) -> &str {
        &self.lexicon_id
    }
}

/// Tokenizes, lemmatizes, and looks up a text against the lexicon. Lookup
/// tries the surface token first and falls back to its lemma. Each token
/// occurrence contributes once to the means.
pub fn affect_profile(
    text: &str,
    lexicon: &VadLexicon,
    lemmatizer: &dyn Lemmatizer,
) -> AffectProfile {
    let tokens = tokenize(text);
    let mut sums = [0.0f64; 3];
    let mut matched = 0usize;
    for token in tokens.tokens() {
        let scores = lexicon
            .normalized(token)
            .or_else(|| lexicon.normalized(&lemmatizer.lemma(token)));
        if let Some(values) = scores {
            for k in 0..3 {
                sums[k] += values[k];
            }
            matched += 1;
        }
    }
    let token_count = tokens.len();
    let coverage = if token_count == 0 {
        0.0
    } else {
        matched as f64 / token_count as f64
    };
    let means = if matched > 0 {
        [
            Some(sums[0] / matched as f64),
            Some(sums[1] / matched as f64),
            Some(sums[2] / matched as f64),
        ]
    } else {
        [None; 3]
    };
    AffectProfile {
        means,
        coverage,
        matched_count: matched,
        token_count,
        lexicon_id: lexicon.id().to_string(),
    }
}

fn mean_gap(a: Option<f64>, b: Option<f64>) -> f64 {
    // Absent means enter the difference as 0 so the formula stays total.
    (a.unwrap_or(0.0) - b.unwrap_or(0.0)).abs()
}

/// Composite emotion-consistency score. Symmetric in its arguments; at most 1,
/// with equality iff all present means and the coverages match.
pub fn emotion_consistency(
    reference: &AffectProfile,
    candidate: &AffectProfile,
    beta: f64,
) -> Result<f64, AffectError> {
    check_same_lexicon(reference, candidate)?;
    let gap_sum: f64 = (0..3)
        .map(|k| mean_gap(reference.means[k], candidate.means[k]))
        .sum();
    Ok(1.0 - 0.25 * gap_sum - beta * (reference.coverage - candidate.coverage).abs())
}

/// Single-dimension analog of the composite score.
pub fn dimension_consistency(
    reference: &AffectProfile,
    candidate: &AffectProfile,
    dim: VadDimension,
    beta: f64,
) -> Result<f64, AffectError> {
    check_same_lexicon(reference, candidate)?;
    let gap = mean_gap(reference.means[dim as usize], candidate.means[dim as usize]);
    Ok(1.0 - gap - beta * (reference.coverage - candidate.coverage).abs())
}

fn check_same_lexicon(a: &AffectProfile, b: &AffectProfile) -> Result<(), AffectError> {
    if a.lexicon_id != b.lexicon_id {
        return Err(AffectError::MismatchedLexicon {
            left: a.lexicon_id.clone(),
            right: b.lexicon_id.clone(),
        });
    }
    Ok(())
}

/// The per-dimension scores reported as the emotion-consistency columns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValenceArousal {
    pub valence: f64,
    pub arousal: f64,
}

/// Convenience wrapper: profiles both texts and scores the valence and
/// arousal dimensions.
pub fn valence_arousal_scores(
    reference_text: &str,
    candidate_text: &str,
    lexicon: &VadLexicon,
    beta: f64,
) -> ValenceArousal {
    let lemmatizer = RuleLemmatizer;
    let r = affect_profile(reference_text, lexicon, &lemmatizer);
    let c = affect_profile(candidate_text, lexicon, &lemmatizer);
    // Same lexicon by construction.
    ValenceArousal {
        valence: dimension_consistency(&r, &c, VadDimension::Valence, beta).expect("same lexicon"),
        arousal: dimension_consistency(&r, &c, VadDimension::Arousal, beta).expect("same lexicon"),
    }
}
