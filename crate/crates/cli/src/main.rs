//! `dyadeval`: command-line runner for the evaluation toolkit.
//!
//! Exit codes: 0 on success, 1 on validation failures (bad manifests, failed
//! split checks, malformed records), 2 on I/O failures.

use std::collections::BTreeSet;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use dyadeval_core::affect::load_vad_lexicon;
use dyadeval_core::codebook::{
    self, write_vector_sidecar, CommandClient, LlmClient, PipelineParams, RecordingClient,
    ReplayClient, VectorSidecarRecord,
};
use dyadeval_core::corpus::{
    load_corpus, make_protocol_split, validate_split, Corpus, ManifestFormat, Protocol,
    SplitManifest, SplitRatio,
};
use dyadeval_core::harness::{
    self, emit_report, format_table, judge_top1, load_ballots, load_judge_records,
    load_predictions, selection_rates, ReportFormat, RunConfig,
};
use dyadeval_core::semantic::{load_embedding_fixture, FixtureProvider};

#[derive(Parser)]
#[command(
    name = "dyadeval",
    version,
    about = "Benchmark evaluation toolkit for next-utterance prediction in dyadic dialogue"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ProtocolArg {
    SubjectDependent,
    SubjectIndependent,
    CrossScenario,
    Scalability,
}

impl From<ProtocolArg> for Protocol {
    fn from(value: ProtocolArg) -> Self {
        match value {
            ProtocolArg::SubjectDependent => Protocol::SubjectDependent,
            ProtocolArg::SubjectIndependent => Protocol::SubjectIndependent,
            ProtocolArg::CrossScenario => Protocol::CrossScenario,
            ProtocolArg::Scalability => Protocol::Scalability,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Table,
    Csv,
    Json,
    All,
}

/// How a subcommand talks to the LLM: replay a transcript, or run live
/// through an external command and record the exchange.
#[derive(Args, Debug)]
struct ClientArgs {
    /// Replay transcript (line-delimited JSON records).
    #[arg(long, conflicts_with = "live_cmd")]
    transcript: Option<PathBuf>,
    /// Live mode: program that reads {"system_prompt", "user_text"} JSON on
    /// stdin and prints the reply on stdout.
    #[arg(long, requires = "record")]
    live_cmd: Option<PathBuf>,
    /// Extra arguments passed to the live command.
    #[arg(long, requires = "live_cmd")]
    live_arg: Vec<String>,
    /// Where to write the transcript recorded from a live run.
    #[arg(long)]
    record: Option<PathBuf>,
}

enum Client {
    Replay(ReplayClient),
    Recording(RecordingClient<CommandClient>),
}

impl Client {
    fn as_llm(&self) -> &dyn LlmClient {
        match self {
            Client::Replay(c) => c,
            Client::Recording(c) => c,
        }
    }

    fn finish(self, record: Option<&PathBuf>) -> Result<()> {
        if let (Client::Recording(recorder), Some(path)) = (self, record) {
            recorder
                .write_transcript(path)
                .with_context(|| format!("writing transcript to {}", path.display()))?;
            println!("recorded transcript: {}", path.display());
        }
        Ok(())
    }
}

impl ClientArgs {
    fn build(&self) -> Result<Client> {
        match (&self.transcript, &self.live_cmd) {
            (Some(path), None) => Ok(Client::Replay(
                ReplayClient::load(path)
                    .with_context(|| format!("loading transcript {}", path.display()))?,
            )),
            (None, Some(program)) => Ok(Client::Recording(RecordingClient::new(
                CommandClient::new(program, self.live_arg.clone()),
            ))),
            (None, None) => bail!("either --transcript (replay) or --live-cmd (live) is required"),
            (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate (or validate) an evaluation-protocol split manifest.
    Split {
        /// Corpus manifest (one JSON turn per line).
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, value_enum)]
        protocol: ProtocolArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Target train:test ratio.
        #[arg(long, default_value = "4:1")]
        ratio: String,
        /// Where to write the split manifest (generation mode).
        #[arg(long, required_unless_present = "validate")]
        out: Option<PathBuf>,
        /// Error on single-turn subjects instead of warning.
        #[arg(long)]
        strict: bool,
        /// Validate an existing manifest instead of generating one.
        #[arg(long)]
        validate: Option<PathBuf>,
    },
    /// Run the priming-codebook induction pipeline.
    Codebook {
        #[arg(long)]
        corpus: PathBuf,
        /// Embedding fixture serving factor-label embeddings.
        #[arg(long)]
        fixtures: PathBuf,
        /// How many responses to sample (subject-covering round robin).
        #[arg(long, default_value_t = 200)]
        sample_size: usize,
        /// Cluster counts to sweep, comma separated.
        #[arg(long, default_value = "10,15,20", value_delimiter = ',')]
        ks: Vec<usize>,
        /// Trim fractions to sweep, comma separated.
        #[arg(long, default_value = "0,0.05,0.1", value_delimiter = ',')]
        taus: Vec<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Where to write the codebook JSON.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        client: ClientArgs,
    },
    /// Assign a priming vector to every scorable turn under a codebook.
    AssignVectors {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        codebook: PathBuf,
        /// Where to write the per-turn vector sidecar (JSON lines).
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        client: ClientArgs,
    },
    /// Score prediction files against a split across all six metrics.
    Evaluate {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        split: PathBuf,
        /// Prediction files (repeatable); line-delimited
        /// {turn_id, model_name, prediction} records.
        #[arg(long, required = true)]
        predictions: Vec<PathBuf>,
        /// VAD lexicon (term, valence, arousal, dominance).
        #[arg(long)]
        lexicon: Option<PathBuf>,
        /// Embedding fixture covering every reference and prediction text.
        #[arg(long)]
        fixtures: Option<PathBuf>,
        /// Run config TOML; flags override its paths.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, value_enum, default_value = "all")]
        format: FormatArg,
    },
    /// Tally LLM-judge rankings into top-1 rates.
    Judge {
        /// Line-delimited {sample_id, ranking, judge_name} records.
        #[arg(long)]
        records: PathBuf,
        /// Optional JSON summary output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tally user-study ballots into per-group selection rates.
    UserStudy {
        /// Line-delimited {group, chosen_model} ballots.
        #[arg(long)]
        ballots: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-aggregate an emitted per-sample CSV.
    Report {
        #[arg(long)]
        per_sample: PathBuf,
        /// Optional directory for the re-aggregated CSV.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(err) = run(cli.command) {
        eprintln!("error: {err:#}");
        std::process::exit(exit_code(&err));
    }
}

fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return 2;
        }
    }
    1
}

fn load_corpus_reporting(path: &PathBuf) -> Result<Corpus> {
    let load = load_corpus(path, ManifestFormat::Jsonl)
        .with_context(|| format!("loading corpus {}", path.display()))?;
    for issue in &load.issues {
        if issue.line == 0 {
            log::warn!("{}: {}", path.display(), issue.message);
        } else {
            log::warn!("{}:{}: {}", path.display(), issue.line, issue.message);
        }
    }
    Ok(load.corpus)
}

fn print_validation(report: &dyadeval_core::corpus::ValidationReport) {
    for check in &report.checks {
        let status = if check.passed { "pass" } else { "FAIL" };
        println!("  [{status}] {}: {}", check.name, check.detail);
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Split {
            corpus,
            protocol,
            seed,
            ratio,
            out,
            strict,
            validate,
        } => {
            let corpus = load_corpus_reporting(&corpus)?;
            if let Some(manifest_path) = validate {
                let manifest = SplitManifest::read(&manifest_path)
                    .with_context(|| format!("reading manifest {}", manifest_path.display()))?;
                let report = validate_split(&manifest, &corpus);
                println!("validating {}:", manifest_path.display());
                print_validation(&report);
                if !report.passed() {
                    bail!("split manifest failed validation");
                }
                return Ok(());
            }
            let ratio: SplitRatio = ratio.parse()?;
            let outcome = make_protocol_split(&corpus, protocol.into(), seed, ratio, strict)?;
            for warning in &outcome.warnings {
                log::warn!("{warning}");
            }
            let out = out.expect("clap enforces --out in generation mode");
            outcome.manifest.write(&out)?;
            println!(
                "wrote {} ({} train / {} test, protocol {})",
                out.display(),
                outcome.manifest.train_ids.len(),
                outcome.manifest.test_ids.len(),
                outcome.manifest.protocol.as_str()
            );
            let report = validate_split(&outcome.manifest, &corpus);
            print_validation(&report);
            if !report.passed() {
                bail!("generated manifest failed validation (file kept for inspection)");
            }
            Ok(())
        }
        Command::Codebook {
            corpus,
            fixtures,
            sample_size,
            ks,
            taus,
            seed,
            out,
            client,
        } => {
            let corpus = load_corpus_reporting(&corpus)?;
            let provider = load_embedding_fixture(&fixtures)
                .with_context(|| format!("loading embedding fixture {}", fixtures.display()))?;
            let llm = client.build()?;
            let params = PipelineParams {
                sample_size,
                ks,
                taus,
                seed,
            };
            let outcome =
                codebook::run_codebook_pipeline(&corpus, &provider, llm.as_llm(), &params)?;
            println!(
                "sampled {} responses, extracted {} factors",
                outcome.sampled,
                outcome.factors.len()
            );
            println!("sweep (k, tau -> trimmed silhouette):");
            for entry in &outcome.table {
                println!(
                    "  k={:<3} tau={:<5} score={:.6}",
                    entry.k, entry.tau, entry.score
                );
            }
            let prov = outcome.codebook.provenance();
            println!(
                "selected k={} tau={} (silhouette {:.6})",
                prov.k, prov.tau, prov.silhouette
            );
            outcome.codebook.write(&out)?;
            println!(
                "wrote codebook {} ({} factors, id {})",
                out.display(),
                outcome.codebook.k(),
                outcome.codebook.id()
            );
            llm.finish(client.record.as_ref())
        }
        Command::AssignVectors {
            corpus,
            codebook: codebook_path,
            out,
            client,
        } => {
            let corpus = load_corpus_reporting(&corpus)?;
            let book = codebook::PrimingCodebook::read(&codebook_path)
                .with_context(|| format!("reading codebook {}", codebook_path.display()))?;
            let llm = client.build()?;
            let mut records = Vec::new();
            for turn in corpus.scorable_turns() {
                let vector =
                    codebook::assign_priming_vector(&turn.response_text, &book, llm.as_llm())
                        .with_context(|| format!("assigning vector for turn {}", turn.turn_id))?;
                records.push(VectorSidecarRecord {
                    turn_id: turn.turn_id.clone(),
                    codebook_id: vector.codebook_id,
                    values: vector.values,
                });
            }
            write_vector_sidecar(&out, &records)?;
            println!(
                "wrote {} vectors ({} dims each) to {}",
                records.len(),
                book.k(),
                out.display()
            );
            llm.finish(client.record.as_ref())
        }
        Command::Evaluate {
            corpus,
            split,
            predictions,
            lexicon,
            fixtures,
            config,
            out_dir,
            format,
        } => {
            let run_config = match &config {
                Some(path) => RunConfig::load(path)
                    .with_context(|| format!("loading config {}", path.display()))?,
                None => RunConfig::default(),
            };
            let lexicon_path = lexicon
                .or(run_config.lexicon_path.clone())
                .ok_or_else(|| anyhow::anyhow!("--lexicon (or config lexicon_path) required"))?;
            let fixture_path = fixtures
                .or(run_config.embedding_fixture_path.clone())
                .ok_or_else(|| {
                    anyhow::anyhow!("--fixtures (or config embedding_fixture_path) required")
                })?;
            let corpus = load_corpus_reporting(&corpus)?;
            let manifest = SplitManifest::read(&split)
                .with_context(|| format!("reading split {}", split.display()))?;
            let lexicon = load_vad_lexicon(&lexicon_path)
                .with_context(|| format!("loading lexicon {}", lexicon_path.display()))?;
            let provider: FixtureProvider = load_embedding_fixture(&fixture_path)
                .with_context(|| format!("loading fixture {}", fixture_path.display()))?;
            let mut sets = Vec::new();
            for path in &predictions {
                sets.extend(
                    load_predictions(path)
                        .with_context(|| format!("loading predictions {}", path.display()))?,
                );
            }
            let names: BTreeSet<&str> = sets.iter().map(|s| s.model_name.as_str()).collect();
            if names.len() != sets.len() {
                bail!("the same model appears in multiple prediction files");
            }
            let report = harness::evaluate(
                &corpus,
                &manifest,
                &sets,
                &provider,
                &lexicon,
                &run_config.eval_config(),
            )?;
            for warning in &report.warnings {
                log::warn!("{warning}");
            }
            let formats: Vec<ReportFormat> = match format {
                FormatArg::Table => vec![ReportFormat::TableText],
                FormatArg::Csv => vec![ReportFormat::Delimited],
                FormatArg::Json => vec![ReportFormat::Document],
                FormatArg::All => vec![
                    ReportFormat::TableText,
                    ReportFormat::Delimited,
                    ReportFormat::Document,
                ],
            };
            let files = emit_report(&report, &formats, &out_dir)?;
            print!("{}", format_table(&report));
            for file in files {
                println!("wrote {}", file.display());
            }
            Ok(())
        }
        Command::Judge { records, out } => {
            let records = load_judge_records(&records)?;
            let summary = judge_top1(&records)?;
            println!("top-1 rates ({} records):", records.len());
            for (judge, rates) in &summary.per_judge {
                println!(
                    "  judge {judge} ({} records):",
                    summary.records_per_judge[judge]
                );
                for (model, rate) in rates {
                    println!("    {model:<20} {:>7.2}%", rate * 100.0);
                }
            }
            println!("  average:");
            for (model, rate) in &summary.average {
                println!("    {model:<20} {:>7.2}%", rate * 100.0);
            }
            if let Some(path) = out {
                std::fs::write(&path, serde_json::to_string_pretty(&summary)?)?;
                println!("wrote {}", path.display());
            }
            Ok(())
        }
        Command::UserStudy { ballots, out } => {
            let ballots = load_ballots(&ballots)?;
            let summary = selection_rates(&ballots)?;
            println!("selection rates ({} ballots):", ballots.len());
            for (group, rates) in &summary.per_group {
                println!(
                    "  group {group} ({} ballots):",
                    summary.ballots_per_group[group]
                );
                for (model, rate) in rates {
                    println!("    {model:<20} {:>7.2}%", rate * 100.0);
                }
            }
            println!("  average:");
            for (model, rate) in &summary.average {
                println!("    {model:<20} {:>7.2}%", rate * 100.0);
            }
            if let Some(path) = out {
                std::fs::write(&path, serde_json::to_string_pretty(&summary)?)?;
                println!("wrote {}", path.display());
            }
            Ok(())
        }
        Command::Report {
            per_sample,
            out_dir,
        } => {
            let rows = harness::read_per_sample_csv(&per_sample)?;
            if rows.is_empty() {
                bail!("per-sample file contains no rows");
            }
            let aggregates = harness::aggregates_from_rows(&rows);
            println!(
                "{:<20} {:>8} {:>9} {:>9} {:>13} {:>13} {:>9} {:>9}",
                "model",
                "samples",
                "BLEU-4/%",
                "ROUGE-L/%",
                "BERTScore-F1",
                "Sentence-cos",
                "Valence",
                "Arousal"
            );
            for (model, (means, count)) in &aggregates {
                println!(
                    "{model:<20} {count:>8} {:>9.3} {:>9.3} {:>13.4} {:>13.4} {:>9.5} {:>9.5}",
                    means.bleu4 * 100.0,
                    means.rouge_l * 100.0,
                    means.bertscore_f1,
                    means.sentence_cos,
                    means.valence,
                    means.arousal,
                );
            }
            if let Some(dir) = out_dir {
                std::fs::create_dir_all(&dir)?;
                let path = dir.join("reaggregated.csv");
                let mut writer = String::from(
                    "model,samples,bleu4_mean,rouge_l_mean,bertscore_f1_mean,sentence_cos_mean,valence_mean,arousal_mean\n",
                );
                for (model, (means, count)) in &aggregates {
                    writer.push_str(&format!(
                        "{model},{count},{},{},{},{},{},{}\n",
                        means.bleu4,
                        means.rouge_l,
                        means.bertscore_f1,
                        means.sentence_cos,
                        means.valence,
                        means.arousal,
                    ));
                }
                std::fs::write(&path, writer)?;
                println!("wrote {}", path.display());
            }
            Ok(())
        }
    }
}
