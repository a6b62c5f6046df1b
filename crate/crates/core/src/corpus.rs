//! Dialogue data model, manifest ingestion, and evaluation-protocol splits.
//!
//! A corpus is an ordered list of conversational turns (one question/response
//! pair each) loaded from a line-delimited manifest. Four split protocols are
//! supported; the two with dedicated algorithms are subject-dependent (turns
//! partitioned randomly, every test subject anchored by at least one training
//! turn) and subject-independent (disjoint subject sets, continents with two
//! or more subjects represented on both sides). Cross-scenario and
//! scalability runs substitute a different manifest and reuse the
//! subject-dependent partition.
//!
//! All randomness flows through ChaCha8 seeded from the caller's 64-bit seed,
//! with one stream per pipeline stage, so a `(corpus, seed)` pair always
//! reproduces the same manifest.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs::{self, File};
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("duplicate turn_id: {0}")]
    DuplicateTurnId(String),
    #[error("corpus has no scorable turns")]
    NoScorableTurns,
    #[error("protocol requires at least {needed} subjects, corpus has {found}")]
    NotEnoughSubjects { needed: usize, found: usize },
    #[error("subject {0} has a single turn and strict mode is on")]
    SingleTurnSubject(String),
    #[error("split ratio must have positive parts, got {0}:{1}")]
    InvalidRatio(u32, u32),
    #[error("malformed split manifest: {0}")]
    MalformedManifest(String),
    #[error("I/O: {0}")]
    Io(#[from] std::io::Error),
}

/// Continent tag used for balance checks in the subject-independent protocol.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
pub enum Continent {
    NorthAmerica,
    SouthAmerica,
    Europe,
    Asia,
    Africa,
    Oceania,
    #[default]
    Unknown,
}

/// One question/response pair: the unit of prediction and scoring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConversationTurn {
    pub turn_id: String,
    pub dialogue_id: String,
    pub subject_id: String,
    #[serde(default)]
    pub subject_continent: Continent,
    /// Interlocutor utterance preceding the response.
    pub question_text: String,
    /// The subject's response; empty means the turn is not scorable.
    pub response_text: String,
    /// Optional pointer to the non-verbal context clip.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub video_ref: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration_s: Option<f64>,
}

impl ConversationTurn {
    pub fn is_scorable(&self) -> bool {
        !self.response_text.is_empty()
    }
}

/// An immutable, ordered collection of turns with unique ids.
#[derive(Debug, Clone)]
pub struct Corpus {
    name: String,
    turns: Vec<ConversationTurn>,
    by_id: HashMap<String, usize>,
}

impl Corpus {
    pub fn new(name: impl Into<String>, turns: Vec<ConversationTurn>) -> Result<Self, CorpusError> {
        let mut by_id = HashMap::with_capacity(turns.len());
        for (idx, turn) in turns.iter().enumerate() {
            if by_id.insert(turn.turn_id.clone(), idx).is_some() {
                return Err(CorpusError::DuplicateTurnId(turn.turn_id.clone()));
            }
        }
        Ok(Self {
            name: name.into(),
            turns,
            by_id,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn turns(&self) -> &[ConversationTurn] {
        &self.turns
    }

    pub fn len(&self) -> usize {
        self.turns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.turns.is_empty()
    }

    pub fn turn(&self, turn_id: &str) -> Option<&ConversationTurn> {
        self.by_id.get(turn_id).map(|&idx| &self.turns[idx])
    }

    /// Distinct subject ids, sorted.
    pub fn subjects(&self) -> BTreeSet<String> {
        self.turns.iter().map(|t| t.subject_id.clone()).collect()
    }

    pub fn scorable_turns(&self) -> impl Iterator<Item = &ConversationTurn> {
        self.turns.iter().filter(|t| t.is_scorable())
    }
}

/// Supported manifest encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ManifestFormat {
    /// One JSON object per line, fields as in [`ConversationTurn`]; unknown
    /// fields are ignored.
    Jsonl,
}

/// A non-fatal problem encountered while loading a manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadIssue {
    /// 1-based line number; 0 for file-level issues.
    pub line: usize,
    pub message: String,
}

/// Result of [`load_corpus`]: the corpus built from all well-formed records
/// plus per-line issues for everything else.
#[derive(Debug, Clone)]
pub struct CorpusLoad {
    pub corpus: Corpus,
    pub issues: Vec<LoadIssue>,
}

/// Loads a corpus manifest. Malformed records are skipped and reported with
/// their line numbers; duplicate turn ids abort the load.
pub fn load_corpus(
    path: impl AsRef<Path>,
    format: ManifestFormat,
) -> Result<CorpusLoad, CorpusError> {
    let ManifestFormat::Jsonl = format;
    let path = path.as_ref();
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "corpus".to_string());
    let file = File::open(path)?;
    let mut turns = Vec::new();
    let mut issues = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<ConversationTurn>(&line) {
            Ok(turn) => {
                if let Some(d) = turn.duration_s {
                    if d < 0.0 {
                        issues.push(LoadIssue {
                            line: idx + 1,
                            message: format!("negative duration_s {d} for turn {}", turn.turn_id),
                        });
                        continue;
                    }
                }
                if !seen.insert(turn.turn_id.clone()) {
                    return Err(CorpusError::DuplicateTurnId(turn.turn_id));
                }
                turns.push(turn);
            }
            Err(e) => issues.push(LoadIssue {
                line: idx + 1,
                message: e.to_string(),
            }),
        }
    }
    if turns.is_empty() {
        issues.push(LoadIssue {
            line: 0,
            message: "manifest contains no usable records".to_string(),
        });
        log::warn!("loaded empty corpus from {}", path.display());
    }
    Ok(CorpusLoad {
        corpus: Corpus::new(name, turns)?,
        issues,
    })
}

/// Target train:test proportions, e.g. 4:1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitRatio {
    pub train: u32,
    pub test: u32,
}

impl SplitRatio {
    pub const FOUR_TO_ONE: SplitRatio = SplitRatio { train: 4, test: 1 };

    pub fn new(train: u32, test: u32) -> Result<Self, CorpusError> {
        if train == 0 || test == 0 {
            return Err(CorpusError::InvalidRatio(train, test));
        }
        Ok(Self { train, test })
    }

    /// Fraction of items that should land in the test side.
    pub fn test_share(&self) -> f64 {
        self.test as f64 / (self.train + self.test) as f64
    }

    /// Target train/test quotient (4.0 for 4:1).
    pub fn quotient(&self) -> f64 {
        self.train as f64 / self.test as f64
    }
}

impl std::str::FromStr for SplitRatio {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let parse = |p: &str| {
            p.trim()
                .parse::<u32>()
                .map_err(|e| CorpusError::MalformedManifest(format!("bad ratio {s:?}: {e}")))
        };
        match parts.as_slice() {
            [a, b] => SplitRatio::new(parse(a)?, parse(b)?),
            _ => Err(CorpusError::MalformedManifest(format!(
                "ratio must look like 4:1, got {s:?}"
            ))),
        }
    }
}

impl std::fmt::Display for SplitRatio {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.train, self.test)
    }
}

/// The four evaluation protocols.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Protocol {
    SubjectDependent,
    SubjectIndependent,
    CrossScenario,
    Scalability,
}

impl Protocol {
    pub fn as_str(&self) -> &'static str {
        match self {
            Protocol::SubjectDependent => "subject-dependent",
            Protocol::SubjectIndependent => "subject-independent",
            Protocol::CrossScenario => "cross-scenario",
            Protocol::Scalability => "scalability",
        }
    }
}

/// A train/test assignment of turn ids under one protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub protocol: Protocol,
    pub seed: u64,
    pub ratio: SplitRatio,
    pub train_ids: BTreeSet<String>,
    pub test_ids: BTreeSet<String>,
    /// Subject-independent only: whether every continent with two or more
    /// subjects ended up represented on both sides.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub balance: Option<bool>,
}

impl SplitManifest {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, CorpusError> {
        serde_json::from_str(text).map_err(|e| CorpusError::MalformedManifest(e.to_string()))
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), CorpusError> {
        fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self, CorpusError> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

/// A generated manifest plus any warnings produced along the way.
#[derive(Debug, Clone)]
pub struct SplitOutcome {
    pub manifest: SplitManifest,
    pub warnings: Vec<String>,
}

/// ChaCha8 generator for one pipeline stage: `seed` selects the run, the
/// stream index keeps stages statistically independent. This pairing is the
/// fixed, documented source of all split randomness.
fn stage_rng(seed: u64, stage: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stage);
    rng
}

fn scorable_by_subject(corpus: &Corpus) -> BTreeMap<String, Vec<String>> {
    let mut groups: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for turn in corpus.scorable_turns() {
        groups
            .entry(turn.subject_id.clone())
            .or_default()
            .push(turn.turn_id.clone());
    }
    groups
}

/// Random turn-level partition at the requested ratio in which every subject
/// keeps at least one training turn, so every subject appearing in the test
/// side is anchored in train. Single-turn subjects go to train with a warning
/// unless `strict` is set.
pub fn make_subject_dependent_split(
    corpus: &Corpus,
    seed: u64,
    ratio: SplitRatio,
    strict: bool,
) -> Result<SplitOutcome, CorpusError> {
    split_turns_at_ratio(corpus, Protocol::SubjectDependent, seed, ratio, strict)
}

fn split_turns_at_ratio(
    corpus: &Corpus,
    protocol: Protocol,
    seed: u64,
    ratio: SplitRatio,
    strict: bool,
) -> Result<SplitOutcome, CorpusError> {
    let groups = scorable_by_subject(corpus);
    if groups.is_empty() {
        return Err(CorpusError::NoScorableTurns);
    }
    let mut warnings = Vec::new();
    let total: usize = groups.values().map(Vec::len).sum();
    let mut rng = stage_rng(seed, 0);
    let mut train: BTreeSet<String> = BTreeSet::new();
    let mut pool: Vec<String> = Vec::new();
    for (subject, mut turn_ids) in groups {
        if turn_ids.len() == 1 {
            if strict {
                return Err(CorpusError::SingleTurnSubject(subject));
            }
            warnings.push(format!(
                "subject {subject} has a single turn; assigned to train"
            ));
        }
        turn_ids.shuffle(&mut rng);
        // The first turn anchors the subject in train.
        train.insert(turn_ids[0].clone());
        pool.extend(turn_ids.into_iter().skip(1));
    }
    let mut rng = stage_rng(seed, 1);
    pool.shuffle(&mut rng);
    let target_test = ((total as f64) * ratio.test_share()).round() as usize;
    let target_test = target_test.min(pool.len());
    let mut test = BTreeSet::new();
    for id in pool.drain(..) {
        if test.len() < target_test {
            test.insert(id);
        } else {
            train.insert(id);
        }
    }
    Ok(SplitOutcome {
        manifest: SplitManifest {
            protocol,
            seed,
            ratio,
            train_ids: train,
            test_ids: test,
            balance: None,
        },
        warnings,
    })
}

struct SubjectInfo {
    id: String,
    turn_ids: Vec<String>,
}

/// Partitions subjects into disjoint train/test groups targeting the ratio by
/// turn count. Continents are processed round-robin, each continent's
/// subjects largest-turn-count first; the first two subjects of a continent
/// land on opposite sides so every continent with two or more subjects is
/// represented in both groups, and every later subject goes to whichever side
/// is further from its turn-count target.
pub fn make_subject_independent_split(
    corpus: &Corpus,
    seed: u64,
    ratio: SplitRatio,
) -> Result<SplitOutcome, CorpusError> {
    let groups = scorable_by_subject(corpus);
    if groups.len() < 2 {
        return Err(CorpusError::NotEnoughSubjects {
            needed: 2,
            found: groups.len(),
        });
    }
    let continent_of: HashMap<String, Continent> = corpus
        .scorable_turns()
        .map(|t| (t.subject_id.clone(), t.subject_continent))
        .collect();
    let mut by_continent: BTreeMap<Continent, Vec<SubjectInfo>> = BTreeMap::new();
    for (id, turn_ids) in groups {
        let continent = continent_of.get(&id).copied().unwrap_or_default();
        by_continent
            .entry(continent)
            .or_default()
            .push(SubjectInfo { id, turn_ids });
    }
    let mut rng = stage_rng(seed, 0);
    for subjects in by_continent.values_mut() {
        // Seeded shuffle then stable sort: equal turn counts are ordered
        // randomly but reproducibly.
        subjects.shuffle(&mut rng);
        subjects.sort_by_key(|s| std::cmp::Reverse(s.turn_ids.len()));
    }
    let total: usize = by_continent
        .values()
        .flat_map(|s| s.iter().map(|x| x.turn_ids.len()))
        .sum();
    let test_target = total as f64 * ratio.test_share();
    let train_target = total as f64 - test_target;
    let mut train_turns = 0.0f64;
    let mut test_turns = 0.0f64;
    // (continent, subject index, assigned-to-test)
    let mut placements: Vec<(Continent, usize, bool)> = Vec::new();
    let mut sides_seen: BTreeMap<Continent, (bool, bool)> = BTreeMap::new();
    let max_rounds = by_continent.values().map(Vec::len).max().unwrap_or(0);
    for round in 0..max_rounds {
        for (continent, subjects) in &by_continent {
            let Some(subject) = subjects.get(round) else {
                continue;
            };
            let seen = sides_seen.entry(*continent).or_insert((false, false));
            let to_test = if round == 1 && seen.0 != seen.1 {
                // Force the side this continent has not touched yet.
                !seen.1
            } else {
                (test_target - test_turns) > (train_target - train_turns)
            };
            if to_test {
                test_turns += subject.turn_ids.len() as f64;
                seen.1 = true;
            } else {
                train_turns += subject.turn_ids.len() as f64;
                seen.0 = true;
            }
            placements.push((*continent, round, to_test));
        }
    }
    // A side can end up empty when no continent has two subjects (the forced
    // opposite-side rule never fires). Both sides must be non-empty, so move
    // the smallest subject from the crowded side.
    for empty_side_is_test in [true, false] {
        if placements.iter().any(|&(_, _, t)| t == empty_side_is_test) {
            continue;
        }
        if let Some(pos) = placements
            .iter()
            .enumerate()
            .filter(|(_, &(_, _, t))| t != empty_side_is_test)
            .min_by_key(|(_, &(c, i, _))| {
                let s = &by_continent[&c][i];
                (s.turn_ids.len(), s.id.clone())
            })
            .map(|(pos, _)| pos)
        {
            placements[pos].2 = empty_side_is_test;
        }
    }
    let mut train_ids: BTreeSet<String> = BTreeSet::new();
    let mut test_ids: BTreeSet<String> = BTreeSet::new();
    let mut sides_seen: BTreeMap<Continent, (bool, bool)> = BTreeMap::new();
    for &(continent, idx, to_test) in &placements {
        let subject = &by_continent[&continent][idx];
        let seen = sides_seen.entry(continent).or_insert((false, false));
        if to_test {
            test_ids.extend(subject.turn_ids.iter().cloned());
            seen.1 = true;
        } else {
            train_ids.extend(subject.turn_ids.iter().cloned());
            seen.0 = true;
        }
    }
    let mut warnings = Vec::new();
    let mut balanced = true;
    for (continent, subjects) in &by_continent {
        if subjects.len() >= 2 {
            let (in_train, in_test) = sides_seen[continent];
            if !(in_train && in_test) {
                balanced = false;
                warnings.push(format!(
                    "continent {continent:?} has {} subjects but is missing from one side",
                    subjects.len()
                ));
            }
        }
    }
    Ok(SplitOutcome {
        manifest: SplitManifest {
            protocol: Protocol::SubjectIndependent,
            seed,
            ratio,
            train_ids,
            test_ids,
            balance: Some(balanced),
        },
        warnings,
    })
}

/// Dispatches on protocol. Cross-scenario and scalability runs are dataset
/// substitutions, so they reuse the subject-dependent partition on whatever
/// corpus they are given.
pub fn make_protocol_split(
    corpus: &Corpus,
    protocol: Protocol,
    seed: u64,
    ratio: SplitRatio,
    strict: bool,
) -> Result<SplitOutcome, CorpusError> {
    match protocol {
        Protocol::SubjectIndependent => make_subject_independent_split(corpus, seed, ratio),
        Protocol::SubjectDependent | Protocol::CrossScenario | Protocol::Scalability => {
            split_turns_at_ratio(corpus, protocol, seed, ratio, strict)
        }
    }
}

/// One named validity check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Outcome of [`validate_split`]: every check, pass or fail, is an entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<ValidationCheck>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed_checks(&self) -> Vec<&ValidationCheck> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }
}

/// Relative tolerance on the train/test quotient; a 4:1 target cannot always
/// be hit exactly at subject granularity.
pub const RATIO_RELATIVE_TOLERANCE: f64 = 0.10;

/// Checks disjointness, id validity, scorable coverage, ratio tolerance, and
/// protocol-specific constraints. Failures are report entries, never errors.
pub fn validate_split(manifest: &SplitManifest, corpus: &Corpus) -> ValidationReport {
    let mut checks = Vec::new();
    let overlap: Vec<&String> = manifest
        .train_ids
        .intersection(&manifest.test_ids)
        .collect();
    checks.push(ValidationCheck {
        name: "disjoint-train-test".into(),
        passed: overlap.is_empty(),
        detail: if overlap.is_empty() {
            "train and test ids are disjoint".into()
        } else {
            format!(
                "{} ids appear on both sides (e.g. {})",
                overlap.len(),
                overlap[0]
            )
        },
    });

    let unknown: Vec<&String> = manifest
        .train_ids
        .union(&manifest.test_ids)
        .filter(|id| corpus.turn(id).is_none())
        .collect();
    checks.push(ValidationCheck {
        name: "ids-in-corpus".into(),
        passed: unknown.is_empty(),
        detail: if unknown.is_empty() {
            "every split id exists in the corpus".into()
        } else {
            format!(
                "{} ids missing from corpus (e.g. {})",
                unknown.len(),
                unknown[0]
            )
        },
    });

    let scorable: BTreeSet<String> = corpus.scorable_turns().map(|t| t.turn_id.clone()).collect();
    let assigned: BTreeSet<String> = manifest
        .train_ids
        .union(&manifest.test_ids)
        .cloned()
        .collect();
    let missing: Vec<&String> = scorable.difference(&assigned).collect();
    checks.push(ValidationCheck {
        name: "scorable-coverage".into(),
        passed: missing.is_empty(),
        detail: if missing.is_empty() {
            "every scorable turn is assigned".into()
        } else {
            format!(
                "{} scorable turns unassigned (e.g. {})",
                missing.len(),
                missing[0]
            )
        },
    });

    let target = manifest.ratio.quotient();
    let (ratio_ok, ratio_detail) = if manifest.test_ids.is_empty() {
        (false, "test side is empty".to_string())
    } else {
        let q = manifest.train_ids.len() as f64 / manifest.test_ids.len() as f64;
        (
            (q - target).abs() <= RATIO_RELATIVE_TOLERANCE * target,
            format!(
                "train/test = {}/{} = {q:.3}, target {target:.3} +/- {:.0}%",
                manifest.train_ids.len(),
                manifest.test_ids.len(),
                RATIO_RELATIVE_TOLERANCE * 100.0
            ),
        )
    };
    checks.push(ValidationCheck {
        name: "ratio-within-tolerance".into(),
        passed: ratio_ok,
        detail: ratio_detail,
    });

    let subject_of = |id: &String| corpus.turn(id).map(|t| t.subject_id.clone());
    let train_subjects: BTreeSet<String> =
        manifest.train_ids.iter().filter_map(subject_of).collect();
    let test_subjects: BTreeSet<String> = manifest.test_ids.iter().filter_map(subject_of).collect();

    match manifest.protocol {
        Protocol::SubjectDependent | Protocol::CrossScenario | Protocol::Scalability => {
            let unanchored: Vec<&String> = test_subjects.difference(&train_subjects).collect();
            checks.push(ValidationCheck {
                name: "test-subjects-anchored-in-train".into(),
                passed: unanchored.is_empty(),
                detail: if unanchored.is_empty() {
                    "every test subject has a training turn".into()
                } else {
                    format!(
                        "{} test subjects lack training turns (e.g. {})",
                        unanchored.len(),
                        unanchored[0]
                    )
                },
            });
        }
        Protocol::SubjectIndependent => {
            let shared: Vec<&String> = train_subjects.intersection(&test_subjects).collect();
            checks.push(ValidationCheck {
                name: "disjoint-subject-sets".into(),
                passed: shared.is_empty(),
                detail: if shared.is_empty() {
                    "train and test subject sets are disjoint".into()
                } else {
                    format!("{} subjects shared (e.g. {})", shared.len(), shared[0])
                },
            });
            if manifest.balance == Some(true) {
                let mut continent_subjects: BTreeMap<Continent, BTreeSet<String>> = BTreeMap::new();
                for turn in corpus.scorable_turns() {
                    continent_subjects
                        .entry(turn.subject_continent)
                        .or_default()
                        .insert(turn.subject_id.clone());
                }
                let mut unbalanced = Vec::new();
                for (continent, subjects) in &continent_subjects {
                    if subjects.len() < 2 {
                        continue;
                    }
                    let on_train = subjects.iter().any(|s| train_subjects.contains(s));
                    let on_test = subjects.iter().any(|s| test_subjects.contains(s));
                    if !(on_train && on_test) {
                        unbalanced.push(format!("{continent:?}"));
                    }
                }
                checks.push(ValidationCheck {
                    name: "continent-balance".into(),
                    passed: unbalanced.is_empty(),
                    detail: if unbalanced.is_empty() {
                        "every continent with >= 2 subjects sits on both sides".into()
                    } else {
                        format!("unbalanced continents: {}", unbalanced.join(", "))
                    },
                });
            }
        }
    }

    ValidationReport { checks }
}

/// Samples up to `n` scorable turns round-robin over subjects (each subject's
/// turns in seeded-shuffled order), so every subject is covered before any is
/// repeated. Returns `(turn_id, response_text)` pairs.
pub fn sample_turns_covering_subjects(
    corpus: &Corpus,
    n: usize,
    seed: u64,
) -> Vec<(String, String)> {
    let mut groups: Vec<(String, Vec<&ConversationTurn>)> = BTreeMap::into_iter(
        corpus
            .scorable_turns()
            .fold(BTreeMap::new(), |mut acc, turn| {
                acc.entry(turn.subject_id.clone())
                    .or_insert_with(Vec::new)
                    .push(turn);
                acc
            }),
    )
    .collect();
    let mut rng = stage_rng(seed, 2);
    for (_, turns) in groups.iter_mut() {
        turns.shuffle(&mut rng);
    }
    let mut out = Vec::new();
    let max_len = groups.iter().map(|(_, t)| t.len()).max().unwrap_or(0);
    'outer: for round in 0..max_len {
        for (_, turns) in &groups {
            if let Some(turn) = turns.get(round) {
                out.push((turn.turn_id.clone(), turn.response_text.clone()));
                if out.len() == n {
                    break 'outer;
                }
            }
        }
    }
    out
}
