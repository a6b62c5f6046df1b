//! Report emission and re-ingestion.
//!
//! Three formats: a fixed-width text table grouped by dimension (lexical
//! overlap as percentages, the rest raw), delimited per-sample and aggregate
//! CSV files, and a single JSON document. The per-sample CSV round-trips:
//! floats are written in shortest-roundtrip form and re-aggregation uses the
//! same mean routine as the evaluator, so re-ingested aggregates are
//! bit-identical.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{mean_scores, HarnessError, MetricReport, PerSampleRow, SampleScores};

/// Output encodings for [`emit_report`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    /// Fixed-width table mirroring the dimension-grouped result tables.
    TableText,
    /// CSV: one per-sample file, one aggregate file.
    Delimited,
    /// Full report as one JSON document.
    Document,
}

#[derive(Debug, Serialize, Deserialize)]
struct PerSampleCsvRow {
    model: String,
    turn_id: String,
    bleu4: f64,
    rouge_l: f64,
    bertscore_f1: f64,
    sentence_cos: f64,
    valence: f64,
    arousal: f64,
}

impl From<&PerSampleRow> for PerSampleCsvRow {
    fn from(row: &PerSampleRow) -> Self {
        Self {
            model: row.model.clone(),
            turn_id: row.turn_id.clone(),
            bleu4: row.scores.bleu4,
            rouge_l: row.scores.rouge_l,
            bertscore_f1: row.scores.bertscore_f1,
            sentence_cos: row.scores.sentence_cos,
            valence: row.scores.valence,
            arousal: row.scores.arousal,
        }
    }
}

#[derive(Debug, Serialize)]
struct AggregateCsvRow<'a> {
    model: &'a str,
    scored: usize,
    missing: usize,
    bleu4_mean: f64,
    rouge_l_mean: f64,
    bertscore_f1_mean: f64,
    sentence_cos_mean: f64,
    valence_mean: f64,
    arousal_mean: f64,
    bleu4_corpus: f64,
    average_rank: f64,
}

/// Writes the report in the requested formats; returns the created paths.
pub fn emit_report(
    report: &MetricReport,
    formats: &[ReportFormat],
    out_dir: impl AsRef<Path>,
) -> Result<Vec<PathBuf>, HarnessError> {
    if report.models.is_empty() {
        return Err(HarnessError::EmptyModelList);
    }
    let out_dir = out_dir.as_ref();
    fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    for format in formats {
        match format {
            ReportFormat::Delimited => {
                let per_sample = out_dir.join("per_sample.csv");
                let mut writer = csv::Writer::from_path(&per_sample)?;
                for row in &report.per_sample {
                    writer.serialize(PerSampleCsvRow::from(row))?;
                }
                writer.flush()?;
                written.push(per_sample);

                let aggregate = out_dir.join("aggregate.csv");
                let mut writer = csv::Writer::from_path(&aggregate)?;
                for (model, agg) in &report.aggregates {
                    writer.serialize(AggregateCsvRow {
                        model,
                        scored: agg.scored,
                        missing: agg.missing,
                        bleu4_mean: agg.means.bleu4,
                        rouge_l_mean: agg.means.rouge_l,
                        bertscore_f1_mean: agg.means.bertscore_f1,
                        sentence_cos_mean: agg.means.sentence_cos,
                        valence_mean: agg.means.valence,
                        arousal_mean: agg.means.arousal,
                        bleu4_corpus: agg.corpus_bleu4,
                        average_rank: report.average_rank.get(model).copied().unwrap_or(f64::NAN),
                    })?;
                }
                writer.flush()?;
                written.push(aggregate);
            }
            ReportFormat::TableText => {
                let path = out_dir.join("report.txt");
                fs::write(&path, render_table(report))?;
                written.push(path);
            }
            ReportFormat::Document => {
                let path = out_dir.join("report.json");
                fs::write(
                    &path,
                    serde_json::to_string_pretty(report).expect("report serializes"),
                )?;
                written.push(path);
            }
        }
    }
    Ok(written)
}

/// Renders the dimension-grouped aggregate table as fixed-width text.
pub fn format_table(report: &MetricReport) -> String {
    render_table(report)
}

fn render_table(report: &MetricReport) -> String {
    let mut out = String::new();
    let name_width = report
        .models
        .iter()
        .map(String::len)
        .max()
        .unwrap_or(5)
        .max(5);
    let _ = writeln!(
        out,
        "{:name_width$} | {:^26} | {:^27} | {:^19} |",
        "", "Lexical Overlap /%", "Semantic Similarity", "Emotion Consistency",
    );
    let _ = writeln!(
        out,
        "{:name_width$} | {:>8} {:>8} {:>8} | {:>13} {:>13} | {:>9} {:>9} | {:>8}",
        "Model",
        "BLEU-4",
        "BLEU-4c",
        "ROUGE-L",
        "BERTScore-F1",
        "Sentence-cos",
        "Valence",
        "Arousal",
        "AvgRank",
    );
    let total_width = name_width + 26 + 27 + 19 + 8 + 14;
    let _ = writeln!(out, "{}", "-".repeat(total_width));
    for model in &report.models {
        let agg = &report.aggregates[model];
        let rank = report
            .average_rank
            .get(model)
            .map(|r| format!("{r:>8.2}"))
            .unwrap_or_else(|| format!("{:>8}", "-"));
        let _ = writeln!(
            out,
            "{:name_width$} | {:>8.3} {:>8.3} {:>8.3} | {:>13.4} {:>13.4} | {:>9.5} {:>9.5} | {rank}",
            model,
            agg.means.bleu4 * 100.0,
            agg.corpus_bleu4 * 100.0,
            agg.means.rouge_l * 100.0,
            agg.means.bertscore_f1,
            agg.means.sentence_cos,
            agg.means.valence,
            agg.means.arousal,
        );
    }
    if report.aggregates.values().any(|a| a.missing > 0) {
        let _ = writeln!(out);
        for (model, agg) in &report.aggregates {
            if agg.missing > 0 {
                let _ = writeln!(
                    out,
                    "note: {model} missing {} of {} predictions",
                    agg.missing,
                    agg.scored + agg.missing
                );
            }
        }
    }
    out
}

/// Reads a per-sample CSV back into rows, preserving file order.
pub fn read_per_sample_csv(path: impl AsRef<Path>) -> Result<Vec<PerSampleRow>, HarnessError> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for record in reader.deserialize() {
        let row: PerSampleCsvRow = record?;
        rows.push(PerSampleRow {
            model: row.model,
            turn_id: row.turn_id,
            scores: SampleScores {
                bleu4: row.bleu4,
                rouge_l: row.rouge_l,
                bertscore_f1: row.bertscore_f1,
                sentence_cos: row.sentence_cos,
                valence: row.valence,
                arousal: row.arousal,
            },
        });
    }
    Ok(rows)
}

/// Recomputes per-model means (and sample counts) from per-sample rows using
/// the evaluator's mean routine.
pub fn aggregates_from_rows(rows: &[PerSampleRow]) -> BTreeMap<String, (SampleScores, usize)> {
    let mut grouped: BTreeMap<String, Vec<&SampleScores>> = BTreeMap::new();
    for row in rows {
        grouped
            .entry(row.model.clone())
            .or_default()
            .push(&row.scores);
    }
    grouped
        .into_iter()
        .map(|(model, scores)| {
            let count = scores.len();
            (model, (mean_scores(scores.into_iter()), count))
        })
        .collect()
}
