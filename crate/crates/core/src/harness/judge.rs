//! Judge-ranking and user-study tallies.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::HarnessError;

/// One judged item: a full ranking of the evaluated models, best first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeRecord {
    pub sample_id: String,
    pub ranking: Vec<String>,
    pub judge_name: String,
}

/// Loads line-delimited judge records.
pub fn load_judge_records(path: impl AsRef<Path>) -> Result<Vec<JudgeRecord>, HarnessError> {
    read_jsonl(path)
}

/// Top-1 tallies per judge plus the cross-judge average per model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeSummary {
    pub models: Vec<String>,
    /// judge -> model -> fraction of that judge's records won.
    pub per_judge: BTreeMap<String, BTreeMap<String, f64>>,
    pub average: BTreeMap<String, f64>,
    pub records_per_judge: BTreeMap<String, usize>,
}

/// Fraction of records in which each model was ranked first, per judge.
/// Every ranking must be a permutation of the same model set; fractions for
/// one judge sum to one.
pub fn judge_top1(records: &[JudgeRecord]) -> Result<JudgeSummary, HarnessError> {
    if records.is_empty() {
        return Err(HarnessError::NoRecords);
    }
    let model_set: BTreeSet<String> = records[0].ranking.iter().cloned().collect();
    if model_set.len() != records[0].ranking.len() {
        return Err(invalid(&records[0], "ranking repeats a model"));
    }
    for record in records {
        let set: BTreeSet<String> = record.ranking.iter().cloned().collect();
        if set.len() != record.ranking.len() {
            return Err(invalid(record, "ranking repeats a model"));
        }
        if set != model_set {
            return Err(invalid(
                record,
                "ranking is not a permutation of the evaluated model set",
            ));
        }
    }
    let mut wins: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
    let mut totals: BTreeMap<String, usize> = BTreeMap::new();
    for record in records {
        *totals.entry(record.judge_name.clone()).or_insert(0) += 1;
        *wins
            .entry(record.judge_name.clone())
            .or_default()
            .entry(record.ranking[0].clone())
            .or_insert(0) += 1;
    }
    let mut per_judge = BTreeMap::new();
    for (judge, total) in &totals {
        let mut rates = BTreeMap::new();
        for model in &model_set {
            let count = wins[judge].get(model).copied().unwrap_or(0);
            rates.insert(model.clone(), count as f64 / *total as f64);
        }
        per_judge.insert(judge.clone(), rates);
    }
    let judge_count = per_judge.len() as f64;
    let mut average = BTreeMap::new();
    for model in &model_set {
        let sum: f64 = per_judge.values().map(|rates| rates[model]).sum();
        average.insert(model.clone(), sum / judge_count);
    }
    Ok(JudgeSummary {
        models: model_set.into_iter().collect(),
        per_judge,
        average,
        records_per_judge: totals,
    })
}

fn invalid(record: &JudgeRecord, message: &str) -> HarnessError {
    HarnessError::InvalidRanking {
        sample_id: record.sample_id.clone(),
        judge_name: record.judge_name.clone(),
        message: message.to_string(),
    }
}

/// One user-study ballot: a participant group picked one model's output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ballot {
    pub group: String,
    pub chosen_model: String,
}

pub fn load_ballots(path: impl AsRef<Path>) -> Result<Vec<Ballot>, HarnessError> {
    read_jsonl(path)
}

/// Per-group selection rates and their cross-group mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionSummary {
    pub models: Vec<String>,
    /// group -> model -> chosen count / group ballot count.
    pub per_group: BTreeMap<String, BTreeMap<String, f64>>,
    /// Unweighted mean over groups, the "Average" column convention.
    pub average: BTreeMap<String, f64>,
    pub ballots_per_group: BTreeMap<String, usize>,
}

pub fn selection_rates(ballots: &[Ballot]) -> Result<SelectionSummary, HarnessError> {
    if ballots.is_empty() {
        return Err(HarnessError::NoRecords);
    }
    let models: BTreeSet<String> = ballots.iter().map(|b| b.chosen_model.clone()).collect();
    let mut counts: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
    let mut totals: BTreeMap<String, usize> = BTreeMap::new();
    for ballot in ballots {
        *totals.entry(ballot.group.clone()).or_insert(0) += 1;
        *counts
            .entry(ballot.group.clone())
            .or_default()
            .entry(ballot.chosen_model.clone())
            .or_insert(0) += 1;
    }
    let mut per_group = BTreeMap::new();
    for (group, total) in &totals {
        let mut rates = BTreeMap::new();
        for model in &models {
            let count = counts[group].get(model).copied().unwrap_or(0);
            rates.insert(model.clone(), count as f64 / *total as f64);
        }
        per_group.insert(group.clone(), rates);
    }
    let group_count = per_group.len() as f64;
    let mut average = BTreeMap::new();
    for model in &models {
        let sum: f64 = per_group.values().map(|rates| rates[model]).sum();
        average.insert(model.clone(), sum / group_count);
    }
    Ok(SelectionSummary {
        models: models.into_iter().collect(),
        per_group,
        average,
        ballots_per_group: totals,
    })
}

fn read_jsonl<T: serde::de::DeserializeOwned>(
    path: impl AsRef<Path>,
) -> Result<Vec<T>, HarnessError> {
    let file = File::open(path)?;
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line).map_err(|e| HarnessError::MalformedPrediction {
                line: idx + 1,
                message: e.to_string(),
            })?,
        );
    }
    Ok(out)
}
