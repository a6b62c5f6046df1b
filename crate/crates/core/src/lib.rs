//! Evaluation toolkit for next-utterance prediction in dyadic dialogue.
//!
//! The crate ingests dialogue corpora and model predictions, scores them along
//! three dimensions (lexical overlap, semantic similarity, emotion
//! consistency), builds priming codebooks through an LLM-orchestrated
//! clustering pipeline, generates and validates evaluation-protocol splits,
//! and aggregates everything into per-model reports.
//!
//! Modules map onto the subsystems:
//!
//! - [`corpus`] — dialogue data model, manifest ingestion, split protocols
//! - [`lexical`] — BLEU-4, ROUGE-L, and word error rate
//! - [`semantic`] — greedy token-matching P/R/F1 and sentence cosine over
//!   abstract embeddings served by an [`semantic::EmbeddingProvider`]
//! - [`affect`] — VAD-lexicon emotion-consistency scoring
//! - [`codebook`] — factor extraction, k-means + silhouette model selection,
//!   codebook induction, priming-vector assignment
//! - [`schedule`] — EMA-based adaptive loss weighting
//! - [`harness`] — evaluation runner, rankings, judge/user-study tallies,
//!   report emission

pub mod affect;
pub mod codebook;
pub mod corpus;
pub mod harness;
pub mod lexical;
pub mod schedule;
pub mod semantic;

pub use affect::{AffectProfile, VadLexicon};
pub use codebook::{BasicFactor, LlmClient, PrimingCodebook, PrimingFactor, PrimingVector};
pub use corpus::{ConversationTurn, Corpus, Protocol, SplitManifest, SplitRatio};
pub use harness::{JudgeRecord, MetricReport, PredictionSet};
pub use lexical::TokenSequence;
pub use schedule::AdaptiveWeightState;
pub use semantic::{EmbeddingProvider, SentenceEmbedding, TokenEmbeddings};
