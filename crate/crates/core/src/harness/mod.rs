//! Evaluation runner: scores prediction sets against a corpus split across
//! all six metrics, aggregates per-model tables and rankings, and tallies
//! judge records and user-study ballots.
//!
//! `evaluate` is a pure function of its inputs: per-sample scoring order is
//! fixed (models sorted by name, turns sorted by id), so reruns are
//! bit-identical. Scoring parallelizes across samples only when the embedding
//! provider declares itself concurrency-safe.

mod config;
mod judge;
mod report;

pub use config::RunConfig;
pub use judge::{
    judge_top1, load_ballots, load_judge_records, selection_rates, Ballot, JudgeRecord,
    JudgeSummary, SelectionSummary,
};
pub use report::{
    aggregates_from_rows, emit_report, format_table, read_per_sample_csv, ReportFormat,
};

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::affect::{self, AffectError, VadLexicon};
use crate::corpus::{Corpus, SplitManifest};
use crate::lexical::{self, LexicalError};
use crate::semantic::{self, EmbeddingProvider, SemanticError};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("split has no test turns")]
    EmptyTestSplit,
    #[error("no prediction covers any test turn")]
    NoScoredPredictions,
    #[error("report contains no models")]
    EmptyModelList,
    #[error("ranking needs at least 2 models, got {0}")]
    NotEnoughModels(usize),
    #[error("test turn {0} is missing from the corpus")]
    MissingTurn(String),
    #[error("prediction file line {line}: {message}")]
    MalformedPrediction { line: usize, message: String },
    #[error("judge record {sample_id} from {judge_name}: {message}")]
    InvalidRanking {
        sample_id: String,
        judge_name: String,
        message: String,
    },
    #[error("no records to tally")]
    NoRecords,
    #[error(transparent)]
    Lexical(#[from] LexicalError),
    #[error(transparent)]
    Semantic(#[from] SemanticError),
    #[error(transparent)]
    Affect(#[from] AffectError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("I/O: {0}")]
    Io(#[from] std::io::Error),
}

/// One model's predictions keyed by turn id, plus free-form provenance
/// (prompt, temperature, and the like).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionSet {
    pub model_name: String,
    pub predictions: BTreeMap<String, String>,
    #[serde(default)]
    pub provenance: BTreeMap<String, String>,
}

/// One line of a prediction file.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct PredictionRecord {
    turn_id: String,
    model_name: String,
    prediction: String,
}

/// Loads a line-delimited prediction file, grouping records by model.
pub fn load_predictions(path: impl AsRef<Path>) -> Result<Vec<PredictionSet>, HarnessError> {
    let file = File::open(path)?;
    let mut sets: BTreeMap<String, PredictionSet> = BTreeMap::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: PredictionRecord =
            serde_json::from_str(&line).map_err(|e| HarnessError::MalformedPrediction {
                line: idx + 1,
                message: e.to_string(),
            })?;
        sets.entry(record.model_name.clone())
            .or_insert_with(|| PredictionSet {
                model_name: record.model_name.clone(),
                predictions: BTreeMap::new(),
                provenance: BTreeMap::new(),
            })
            .predictions
            .insert(record.turn_id, record.prediction);
    }
    Ok(sets.into_values().collect())
}

/// The six per-sample scores. BLEU and ROUGE are fractions here; report
/// layers convert the lexical pair to percentages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleScores {
    pub bleu4: f64,
    pub rouge_l: f64,
    pub bertscore_f1: f64,
    pub sentence_cos: f64,
    pub valence: f64,
    pub arousal: f64,
}

impl SampleScores {
    pub const METRIC_NAMES: [&'static str; 6] = [
        "bleu4",
        "rouge_l",
        "bertscore_f1",
        "sentence_cos",
        "valence",
        "arousal",
    ];

    pub fn get(&self, metric: &str) -> Option<f64> {
        match metric {
            "bleu4" => Some(self.bleu4),
            "rouge_l" => Some(self.rouge_l),
            "bertscore_f1" => Some(self.bertscore_f1),
            "sentence_cos" => Some(self.sentence_cos),
            "valence" => Some(self.valence),
            "arousal" => Some(self.arousal),
            _ => None,
        }
    }

    fn zero() -> Self {
        Self {
            bleu4: 0.0,
            rouge_l: 0.0,
            bertscore_f1: 0.0,
            sentence_cos: 0.0,
            valence: 0.0,
            arousal: 0.0,
        }
    }
}

/// Arithmetic mean over scores in iteration order. Shared by the evaluator
/// and the report re-ingestion path so round trips reproduce aggregates
/// exactly.
pub(crate) fn mean_scores<'a>(scores: impl Iterator<Item = &'a SampleScores>) -> SampleScores {
    let mut sum = SampleScores::zero();
    let mut count = 0usize;
    for s in scores {
        sum.bleu4 += s.bleu4;
        sum.rouge_l += s.rouge_l;
        sum.bertscore_f1 += s.bertscore_f1;
        sum.sentence_cos += s.sentence_cos;
        sum.valence += s.valence;
        sum.arousal += s.arousal;
        count += 1;
    }
    if count == 0 {
        return SampleScores::zero();
    }
    let n = count as f64;
    SampleScores {
        bleu4: sum.bleu4 / n,
        rouge_l: sum.rouge_l / n,
        bertscore_f1: sum.bertscore_f1 / n,
        sentence_cos: sum.sentence_cos / n,
        valence: sum.valence / n,
        arousal: sum.arousal / n,
    }
}

/// One scored (model, turn) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerSampleRow {
    pub model: String,
    pub turn_id: String,
    pub scores: SampleScores,
}

/// Per-model aggregate block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelAggregate {
    /// Per-sample means of the six metrics.
    pub means: SampleScores,
    /// Corpus-level BLEU-4 (statistics pooled before smoothing). Reported
    /// alongside the per-sample mean because the two conventions differ.
    pub corpus_bleu4: f64,
    pub scored: usize,
    pub missing: usize,
}

/// Full evaluation output: per-sample scores, per-model aggregates, rankings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub models: Vec<String>,
    pub per_sample: Vec<PerSampleRow>,
    pub aggregates: BTreeMap<String, ModelAggregate>,
    /// metric name -> model -> rank (1 = best; ties share the mean position).
    pub ranks: BTreeMap<String, BTreeMap<String, f64>>,
    pub average_rank: BTreeMap<String, f64>,
    pub warnings: Vec<String>,
}

/// Scoring knobs; defaults match the reported configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub rouge_beta: f64,
    pub affect_beta: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            rouge_beta: lexical::DEFAULT_ROUGE_BETA,
            affect_beta: affect::DEFAULT_AFFECT_BETA,
        }
    }
}

fn score_pair<P: EmbeddingProvider + ?Sized>(
    reference: &str,
    prediction: &str,
    provider: &P,
    lexicon: &VadLexicon,
    config: &EvalConfig,
) -> Result<SampleScores, HarnessError> {
    let ref_tokens = lexical::tokenize(reference);
    let pred_tokens = lexical::tokenize(prediction);
    let bleu = lexical::bleu4(&pred_tokens, std::slice::from_ref(&ref_tokens))?;
    let rouge = lexical::rouge_l(&pred_tokens, &ref_tokens, config.rouge_beta);
    let bert = semantic::bertscore(
        &provider.token_embed(prediction)?,
        &provider.token_embed(reference)?,
    )?;
    let cos = semantic::sentence_cosine(
        &provider.sentence_embed(prediction)?,
        &provider.sentence_embed(reference)?,
    )?;
    let va = affect::valence_arousal_scores(reference, prediction, lexicon, config.affect_beta);
    Ok(SampleScores {
        bleu4: bleu.bleu4,
        rouge_l: rouge.f,
        bertscore_f1: bert.f1,
        sentence_cos: cos,
        valence: va.valence,
        arousal: va.arousal,
    })
}

/// Scores every prediction set against the split's test turns across all six
/// metrics. Missing (or empty) predictions are tracked and excluded from the
/// means with a coverage warning rather than scored as zero.
pub fn evaluate<P: EmbeddingProvider + Sync + ?Sized>(
    corpus: &Corpus,
    split: &SplitManifest,
    predictions: &[PredictionSet],
    provider: &P,
    lexicon: &VadLexicon,
    config: &EvalConfig,
) -> Result<MetricReport, HarnessError> {
    if split.test_ids.is_empty() {
        return Err(HarnessError::EmptyTestSplit);
    }
    let test_ids: Vec<&String> = split.test_ids.iter().collect();
    for id in &test_ids {
        if corpus.turn(id).is_none() {
            return Err(HarnessError::MissingTurn((*id).clone()));
        }
    }
    let mut sets: Vec<&PredictionSet> = predictions.iter().collect();
    sets.sort_by(|a, b| a.model_name.cmp(&b.model_name));

    let mut warnings = Vec::new();
    let mut per_sample = Vec::new();
    let mut aggregates = BTreeMap::new();
    let mut models = Vec::new();
    for set in sets {
        let model = set.model_name.clone();
        models.push(model.clone());
        let tasks: Vec<(&String, &str)> = test_ids
            .iter()
            .filter_map(|id| {
                let text = set.predictions.get(id.as_str()).map(String::as_str)?;
                (!text.is_empty()).then_some((*id, text))
            })
            .collect();
        let missing = test_ids.len() - tasks.len();
        let score_one = |(id, text): &(&String, &str)| -> Result<PerSampleRow, HarnessError> {
            let reference = &corpus.turn(id).expect("checked above").response_text;
            Ok(PerSampleRow {
                model: model.clone(),
                turn_id: (*id).clone(),
                scores: score_pair(reference, text, provider, lexicon, config)?,
            })
        };
        let rows: Vec<PerSampleRow> = if provider.concurrency_safe() {
            tasks
                .par_iter()
                .map(score_one)
                .collect::<Result<Vec<_>, _>>()?
        } else {
            tasks.iter().map(score_one).collect::<Result<Vec<_>, _>>()?
        };
        if missing > 0 {
            warnings.push(format!(
                "model {model}: {missing} of {} test turns have no prediction; excluded from means",
                test_ids.len()
            ));
        }
        let means = mean_scores(rows.iter().map(|r| &r.scores));
        let mut acc = lexical::BleuAccumulator::new();
        for (id, text) in &tasks {
            let reference = lexical::tokenize(&corpus.turn(id).expect("checked").response_text);
            acc.observe(&lexical::tokenize(text), std::slice::from_ref(&reference))?;
        }
        aggregates.insert(
            model.clone(),
            ModelAggregate {
                means,
                corpus_bleu4: acc.score().bleu4,
                scored: rows.len(),
                missing,
            },
        );
        per_sample.extend(rows);
    }
    if aggregates.values().all(|a| a.scored == 0) {
        return Err(HarnessError::NoScoredPredictions);
    }
    let ranks = rank_table(&aggregates);
    let average_rank = average_of_ranks(&ranks);
    Ok(MetricReport {
        models,
        per_sample,
        aggregates,
        ranks,
        average_rank,
        warnings,
    })
}

fn rank_table(
    aggregates: &BTreeMap<String, ModelAggregate>,
) -> BTreeMap<String, BTreeMap<String, f64>> {
    let mut ranks = BTreeMap::new();
    for metric in SampleScores::METRIC_NAMES {
        let values: Vec<(&String, f64)> = aggregates
            .iter()
            .map(|(model, agg)| (model, agg.means.get(metric).expect("known metric")))
            .collect();
        ranks.insert(metric.to_string(), rank_descending(&values));
    }
    ranks
}

/// Ranks models by value, higher being better; exact ties share the mean of
/// the positions they span.
fn rank_descending(values: &[(&String, f64)]) -> BTreeMap<String, f64> {
    let mut sorted: Vec<(&String, f64)> = values.to_vec();
    sorted.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(b.0)));
    let mut out = BTreeMap::new();
    let mut idx = 0;
    while idx < sorted.len() {
        let mut end = idx + 1;
        while end < sorted.len() && sorted[end].1 == sorted[idx].1 {
            end += 1;
        }
        // Positions idx+1 ..= end share the mean rank.
        let mean_rank = (idx + 1 + end) as f64 / 2.0;
        for entry in &sorted[idx..end] {
            out.insert(entry.0.clone(), mean_rank);
        }
        idx = end;
    }
    out
}

fn average_of_ranks(ranks: &BTreeMap<String, BTreeMap<String, f64>>) -> BTreeMap<String, f64> {
    let mut sums: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for per_model in ranks.values() {
        for (model, rank) in per_model {
            let entry = sums.entry(model.clone()).or_insert((0.0, 0));
            entry.0 += rank;
            entry.1 += 1;
        }
    }
    sums.into_iter()
        .map(|(model, (sum, count))| (model, sum / count as f64))
        .collect()
}

/// Per-metric ranking averaged across the six metrics (1 = best everywhere).
/// Requires at least two models.
pub fn average_rank(report: &MetricReport) -> Result<BTreeMap<String, f64>, HarnessError> {
    if report.models.len() < 2 {
        return Err(HarnessError::NotEnoughModels(report.models.len()));
    }
    Ok(average_of_ranks(&report.ranks))
}
