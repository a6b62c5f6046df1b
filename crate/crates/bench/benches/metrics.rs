//! Hot-path benchmarks: lexical scoring, greedy token matching, affect
//! profiles, and the clustering/silhouette core.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use dyadeval_core::affect::{self, RuleLemmatizer};
use dyadeval_core::codebook::{kmeans, silhouette, trimmed_silhouette};
use dyadeval_core::lexical::{self, TokenSequence};
use dyadeval_core::semantic::{bertscore, TokenEmbeddings};
use dyadeval_core::VadLexicon;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sentence(rng: &mut ChaCha8Rng, vocab: &[&str], len: usize) -> TokenSequence {
    TokenSequence::from_tokens(
        (0..len)
            .map(|_| vocab[rng.random_range(0..vocab.len())].to_string())
            .collect::<Vec<_>>(),
    )
}

fn bench_lexical(c: &mut Criterion) {
    let vocab = [
        "the", "match", "was", "tough", "but", "i", "stayed", "calm", "and", "happy", "we",
        "played", "well", "under", "pressure", "today", "serve", "felt", "strong", "again",
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let pairs: Vec<(TokenSequence, TokenSequence)> = (0..64)
        .map(|_| {
            let cand_len = rng.random_range(8..40);
            let ref_len = rng.random_range(8..40);
            (
                sentence(&mut rng, &vocab, cand_len),
                sentence(&mut rng, &vocab, ref_len),
            )
        })
        .collect();

    c.bench_function("bleu4_sentence_64_pairs", |b| {
        b.iter(|| {
            for (cand, reference) in &pairs {
                black_box(lexical::bleu4(cand, std::slice::from_ref(reference)).unwrap());
            }
        })
    });
    c.bench_function("rouge_l_64_pairs", |b| {
        b.iter(|| {
            for (cand, reference) in &pairs {
                black_box(lexical::rouge_l(cand, reference, 1.0));
            }
        })
    });
    c.bench_function("wer_64_pairs", |b| {
        b.iter(|| {
            for (cand, reference) in &pairs {
                black_box(lexical::wer(reference, cand).unwrap());
            }
        })
    });
}

fn bench_bertscore(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let make = |rng: &mut ChaCha8Rng, tokens: usize, dim: usize| {
        let vectors: Vec<Vec<f64>> = (0..tokens)
            .map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let names = (0..tokens).map(|i| format!("t{i}")).collect();
        TokenEmbeddings::new(names, vectors).unwrap()
    };
    let cand = make(&mut rng, 32, 64);
    let reference = make(&mut rng, 40, 64);
    c.bench_function("bertscore_32x40_dim64", |b| {
        b.iter(|| black_box(bertscore(&cand, &reference).unwrap()))
    });
}

fn bench_affect(c: &mut Criterion) {
    let rows: Vec<(String, f64, f64, f64)> = (0..20_000)
        .map(|i| {
            (
                format!("word{i}"),
                (i % 100) as f64 / 99.0,
                ((i * 7) % 100) as f64 / 99.0,
                ((i * 13) % 100) as f64 / 99.0,
            )
        })
        .collect();
    let lexicon = VadLexicon::from_entries(rows).unwrap();
    let text: String = (0..60)
        .map(|i| format!("word{}", i * 311 % 25_000))
        .collect::<Vec<_>>()
        .join(" ");
    let lemmatizer = RuleLemmatizer;
    c.bench_function("affect_profile_60_tokens_20k_lexicon", |b| {
        b.iter(|| black_box(affect::affect_profile(&text, &lexicon, &lemmatizer)))
    });
}

fn bench_clustering(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let points: Vec<Vec<f64>> = (0..200)
        .map(|i| {
            let blob = i % 20;
            let mut v = vec![0.0f64; 16];
            v[blob % 16] = 8.0;
            for x in v.iter_mut() {
                *x += rng.random_range(-0.2..0.2);
            }
            v
        })
        .collect();
    c.bench_function("kmeans_200x16_k20", |b| {
        b.iter(|| black_box(kmeans(&points, 20, 7).unwrap()))
    });
    let assignments = kmeans(&points, 20, 7).unwrap().assignments;
    c.bench_function("silhouette_200x16", |b| {
        b.iter(|| {
            let s = silhouette(&points, &assignments).unwrap();
            black_box(trimmed_silhouette(&s.per_point, 0.05))
        })
    });
}

criterion_group!(
    benches,
    bench_lexical,
    bench_bertscore,
    bench_affect,
    bench_clustering
);
criterion_main!(benches);
