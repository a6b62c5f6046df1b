//! Shared test support: deterministic synthetic fixtures and the independent
//! brute-force oracles the acceptance criteria compare against.

pub mod oracles;

use dyadeval_core::corpus::{Continent, ConversationTurn, Corpus};
use dyadeval_core::semantic::{EmbeddingFixtureRecord, FixtureProvider};
use dyadeval_core::VadLexicon;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Deterministic per-text RNG: same (text, seed) always yields the same
/// vectors, so identical texts share identical embeddings across fixtures.
fn text_rng(text: &str, seed: u64) -> ChaCha8Rng {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(text.as_bytes());
    let digest = hasher.finalize();
    let mut key = [0u8; 8];
    key.copy_from_slice(&digest[..8]);
    ChaCha8Rng::seed_from_u64(u64::from_le_bytes(key))
}

fn random_vector(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        if v.iter().map(|x| x * x).sum::<f64>() > 1e-6 {
            return v;
        }
    }
}

/// Builds a fixture provider with hash-derived vectors for every text. The
/// provider still refuses texts outside this set.
pub fn synthetic_fixture(texts: &[&str], dim: usize, seed: u64) -> FixtureProvider {
    let records: Vec<EmbeddingFixtureRecord> = texts
        .iter()
        .map(|text| {
            let mut rng = text_rng(text, seed);
            let tokens: Vec<String> = text.split_whitespace().map(String::from).collect();
            let token_vectors: Vec<Vec<f64>> = tokens
                .iter()
                .map(|_| random_vector(&mut rng, dim))
                .collect();
            EmbeddingFixtureRecord {
                text: text.to_string(),
                token_list: tokens,
                token_vectors,
                sentence_vector: random_vector(&mut rng, dim),
                dim,
                provider_version: "synthetic-test".to_string(),
            }
        })
        .collect();
    FixtureProvider::from_records(records).expect("synthetic fixture is well-formed")
}

/// Small spanning lexicon used wherever affect scores need to be non-trivial.
pub fn toy_lexicon() -> VadLexicon {
    VadLexicon::from_entries(vec![
        ("happy", 0.95, 0.70, 0.60),
        ("glad", 0.85, 0.50, 0.55),
        ("proud", 0.90, 0.60, 0.80),
        ("calm", 0.70, 0.05, 0.65),
        ("tough", 0.35, 0.75, 0.50),
        ("tired", 0.20, 0.25, 0.30),
        ("nervous", 0.15, 0.90, 0.20),
        ("pressure", 0.25, 0.95, 0.35),
        ("fun", 0.90, 0.65, 0.50),
        ("hard", 0.30, 0.70, 0.45),
        ("loss", 0.05, 0.55, 0.15),
        ("win", 1.00, 0.80, 0.90),
        ("steady", 0.60, 0.10, 0.70),
        ("upset", 0.10, 0.85, 0.25),
    ])
    .expect("toy lexicon is valid")
}

pub fn turn(id: &str, subject: &str, continent: Continent, response: &str) -> ConversationTurn {
    ConversationTurn {
        turn_id: id.to_string(),
        dialogue_id: format!("d-{subject}"),
        subject_id: subject.to_string(),
        subject_continent: continent,
        question_text: format!("question before {id}"),
        response_text: response.to_string(),
        video_ref: None,
        duration_s: Some(10.0),
    }
}

/// Synthetic corpus: `subjects` subjects cycling over five continents, each
/// with a seeded 3..=8 turns of generic multi-token responses.
pub fn synthetic_corpus(subjects: usize, seed: u64) -> Corpus {
    let continents = [
        Continent::NorthAmerica,
        Continent::Europe,
        Continent::Asia,
        Continent::Africa,
        Continent::Oceania,
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut turns = Vec::new();
    for s in 0..subjects {
        let n_turns = rng.random_range(3..=8);
        for t in 0..n_turns {
            turns.push(turn(
                &format!("s{s:03}-t{t}"),
                &format!("subj{s:03}"),
                continents[s % continents.len()],
                &format!("response {t} from subject {s} with enough tokens to score"),
            ));
        }
    }
    Corpus::new("synthetic", turns).expect("unique ids")
}
