//! Lexical-overlap metrics: BLEU-4, ROUGE-L, and word error rate.
//!
//! All three operate on [`TokenSequence`]s produced by [`tokenize`], the fixed
//! tokenizer this crate uses everywhere surface forms are compared (the affect
//! module reuses it and adds lemmatization on top). Scores are fractions in
//! `[0, 1]`; report layers multiply by 100 where percentages are conventional.

use std::collections::HashMap;

use thiserror::Error;

/// Highest n-gram order BLEU-4 aggregates.
pub const BLEU_MAX_ORDER: usize = 4;

/// Version tag for the fixed tokenizer; run configs carry it so score files
/// are traceable to the preprocessing that produced them.
pub const TOKENIZER_VERSION: &str = "ws-lower-keep-apostrophe-v1";

/// Default recall/precision trade-off for the ROUGE-L F-measure (F1).
pub const DEFAULT_ROUGE_BETA: f64 = 1.0;

#[derive(Debug, Error)]
pub enum LexicalError {
    #[error("BLEU requires at least one reference")]
    NoReferences,
    #[error("WER requires a non-empty reference")]
    EmptyReference,
}

/// A tokenized utterance plus the text it came from.
///
/// Instances built through [`tokenize`] satisfy the invariant that `tokens`
/// is exactly the tokenizer's output for `source_text`; [`from_tokens`]
/// synthesizes a whitespace-joined source for pre-tokenized input.
///
/// [`from_tokens`]: TokenSequence::from_tokens
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSequence {
    tokens: Vec<String>,
    source_text: String,
}

impl TokenSequence {
    /// Wraps pre-tokenized input. Empty tokens are not allowed.
    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let tokens: Vec<String> = tokens.into_iter().map(Into::into).collect();
        assert!(
            tokens.iter().all(|t| !t.is_empty()),
            "token sequences must not contain empty tokens"
        );
        let source_text = tokens.join(" ");
        Self {
            tokens,
            source_text,
        }
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn source_text(&self) -> &str {
        &self.source_text
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// The fixed tokenizer: lowercase, split on whitespace, strip leading and
/// trailing punctuation per token. Apostrophes and hyphens are never stripped,
/// so contractions (`it's`) and clipped forms (`doin'`) survive intact.
/// U+2019 is normalized to an ASCII apostrophe first. Tokens that strip to
/// nothing are dropped.
pub fn tokenize(text: &str) -> TokenSequence {
    let mut tokens = Vec::new();
    for raw in text.split_whitespace() {
        let lowered: String = raw
            .chars()
            .map(|c| if c == '\u{2019}' { '\'' } else { c })
            .flat_map(char::to_lowercase)
            .collect();
        let trimmed = lowered.trim_matches(|c: char| !c.is_alphanumeric() && c != '\'' && c != '-');
        if !trimmed.is_empty() {
            tokens.push(trimmed.to_string());
        }
    }
    TokenSequence {
        tokens,
        source_text: text.to_string(),
    }
}

/// BLEU-4 output: the composite score, the four modified precisions, and the
/// brevity penalty that multiplied them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BleuScore {
    /// Composite score in `[0, 1]`.
    pub bleu4: f64,
    /// Modified n-gram precisions p_1..p_4 after smoothing.
    pub precisions: [f64; BLEU_MAX_ORDER],
    /// Brevity penalty in `(0, 1]` (0 for an empty candidate).
    pub brevity_penalty: f64,
}

impl BleuScore {
    fn zero() -> Self {
        Self {
            bleu4: 0.0,
            precisions: [0.0; BLEU_MAX_ORDER],
            brevity_penalty: 0.0,
        }
    }
}

/// Accumulates clipped n-gram statistics over one or more candidate/reference
/// pairs, so sentence-level and corpus-level BLEU share a single code path:
/// sentence BLEU is an accumulator with exactly one observation.
///
/// Smoothing is applied at scoring time: for orders n >= 2 whose clipped count
/// is zero, one is added to both numerator and denominator. The variant is
/// fixed here so scores are reproducible; order 1 is never smoothed, so a
/// candidate sharing no unigram with its references scores 0.
#[derive(Debug, Clone, Default)]
pub struct BleuAccumulator {
    clipped: [u64; BLEU_MAX_ORDER],
    totals: [u64; BLEU_MAX_ORDER],
    candidate_len: u64,
    effective_ref_len: u64,
    observations: u64,
}

impl BleuAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    /// Folds one candidate/reference-set pair into the statistics.
    pub fn observe(
        &mut self,
        candidate: &TokenSequence,
        references: &[TokenSequence],
    ) -> Result<(), LexicalError> {
        if references.is_empty() {
            return Err(LexicalError::NoReferences);
        }
        let closest = closest_reference_len(candidate.len(), references);
        self.candidate_len += candidate.len() as u64;
        self.effective_ref_len += closest as u64;
        for n in 1..=BLEU_MAX_ORDER {
            let cand_counts = ngram_counts(candidate.tokens(), n);
            let total: u64 = cand_counts.values().sum();
            let mut clipped = 0u64;
            for (gram, count) in &cand_counts {
                let max_ref = references
                    .iter()
                    .map(|r| count_occurrences(r.tokens(), gram))
                    .max()
                    .unwrap_or(0);
                clipped += (*count).min(max_ref);
            }
            self.clipped[n - 1] += clipped;
            self.totals[n - 1] += total;
        }
        self.observations += 1;
        Ok(())
    }

    /// Scores the accumulated statistics. With zero observations every field
    /// is zero.
    pub fn score(&self) -> BleuScore {
        if self.observations == 0 || self.candidate_len == 0 {
            let mut score = BleuScore::zero();
            if self.observations > 0 {
                // Empty candidates: report the epsilon-guarded brevity
                // penalty rather than erroring; the score stays 0.
                score.brevity_penalty = (1.0 - self.effective_ref_len as f64 / f64::EPSILON).exp();
            }
            return score;
        }
        let mut precisions = [0.0; BLEU_MAX_ORDER];
        for n in 1..=BLEU_MAX_ORDER {
            let mut num = self.clipped[n - 1] as f64;
            let mut den = self.totals[n - 1] as f64;
            if n >= 2 && self.clipped[n - 1] == 0 {
                num += 1.0;
                den += 1.0;
            }
            precisions[n - 1] = if den > 0.0 { num / den } else { 0.0 };
        }
        let bp = if self.candidate_len > self.effective_ref_len {
            1.0
        } else {
            (1.0 - self.effective_ref_len as f64 / self.candidate_len as f64).exp()
        };
        let bleu4 = if precisions.iter().any(|&p| p <= 0.0) {
            0.0
        } else {
            let log_sum: f64 = precisions.iter().map(|p| p.ln()).sum();
            bp * (log_sum / BLEU_MAX_ORDER as f64).exp()
        };
        BleuScore {
            bleu4,
            precisions,
            brevity_penalty: bp,
        }
    }
}

/// Sentence-level BLEU-4 with clipped counts, closest-length brevity penalty,
/// uniform quarter weights, and add-one smoothing for zero-count orders >= 2.
pub fn bleu4(
    candidate: &TokenSequence,
    references: &[TokenSequence],
) -> Result<BleuScore, LexicalError> {
    let mut acc = BleuAccumulator::new();
    acc.observe(candidate, references)?;
    Ok(acc.score())
}

/// Corpus-level BLEU-4: statistics pooled across pairs before smoothing,
/// brevity penalty from summed lengths.
pub fn corpus_bleu4<'a, I>(pairs: I) -> Result<BleuScore, LexicalError>
where
    I: IntoIterator<Item = (&'a TokenSequence, &'a [TokenSequence])>,
{
    let mut acc = BleuAccumulator::new();
    for (candidate, references) in pairs {
        acc.observe(candidate, references)?;
    }
    Ok(acc.score())
}

fn closest_reference_len(candidate_len: usize, references: &[TokenSequence]) -> usize {
    references
        .iter()
        .map(|r| r.len())
        .min_by_key(|&len| {
            let diff = len.abs_diff(candidate_len);
            (diff, len) // ties go to the shorter reference
        })
        .unwrap_or(0)
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], u64> {
    let mut counts: HashMap<&[String], u64> = HashMap::new();
    if tokens.len() >= n {
        for window in tokens.windows(n) {
            *counts.entry(window).or_insert(0) += 1;
        }
    }
    counts
}

fn count_occurrences(tokens: &[String], gram: &[String]) -> u64 {
    if tokens.len() < gram.len() {
        return 0;
    }
    tokens.windows(gram.len()).filter(|w| *w == gram).count() as u64
}

/// ROUGE-L output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RougeLScore {
    /// F-measure per the beta-weighted formula; F1 at beta = 1.
    pub f: f64,
    /// LCS length over reference length.
    pub recall: f64,
    /// LCS length over candidate length.
    pub precision: f64,
    /// Longest-common-subsequence length.
    pub lcs_len: usize,
}

/// ROUGE-L via longest common subsequence. An empty candidate or reference
/// scores 0 on every component.
pub fn rouge_l(candidate: &TokenSequence, reference: &TokenSequence, beta: f64) -> RougeLScore {
    assert!(beta > 0.0, "ROUGE-L beta must be positive");
    if candidate.is_empty() || reference.is_empty() {
        return RougeLScore {
            f: 0.0,
            recall: 0.0,
            precision: 0.0,
            lcs_len: 0,
        };
    }
    let lcs = lcs_length(candidate.tokens(), reference.tokens());
    let recall = lcs as f64 / reference.len() as f64;
    let precision = lcs as f64 / candidate.len() as f64;
    let denom = recall + beta * beta * precision;
    let f = if denom > 0.0 {
        (1.0 + beta * beta) * recall * precision / denom
    } else {
        0.0
    };
    RougeLScore {
        f,
        recall,
        precision,
        lcs_len: lcs,
    }
}

fn lcs_length(a: &[String], b: &[String]) -> usize {
    // Two-row dynamic program over prefix pairs.
    let mut prev = vec![0usize; b.len() + 1];
    let mut curr = vec![0usize; b.len() + 1];
    for ai in a {
        for (j, bj) in b.iter().enumerate() {
            curr[j + 1] = if ai == bj {
                prev[j] + 1
            } else {
                prev[j + 1].max(curr[j])
            };
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[b.len()]
}

/// Word-error-rate alignment counts from a minimal-cost edit alignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WerBreakdown {
    pub substitutions: usize,
    pub deletions: usize,
    pub insertions: usize,
    /// Reference length N.
    pub reference_len: usize,
}

impl WerBreakdown {
    /// (S + D + I) / N as a fraction; may exceed 1.
    pub fn wer(&self) -> f64 {
        (self.substitutions + self.deletions + self.insertions) as f64 / self.reference_len as f64
    }

    pub fn wer_percent(&self) -> f64 {
        self.wer() * 100.0
    }

    pub fn edit_distance(&self) -> usize {
        self.substitutions + self.deletions + self.insertions
    }
}

/// Minimal-cost Levenshtein alignment with unit costs. Among equal-cost
/// alignments the backtrace prefers match/substitution, then deletion, then
/// insertion, so the S/D/I decomposition is deterministic.
pub fn wer(
    reference: &TokenSequence,
    hypothesis: &TokenSequence,
) -> Result<WerBreakdown, LexicalError> {
    if reference.is_empty() {
        return Err(LexicalError::EmptyReference);
    }
    let r = reference.tokens();
    let h = hypothesis.tokens();
    let n = r.len();
    let m = h.len();
    let mut dist = vec![vec![0usize; m + 1]; n + 1];
    for (i, row) in dist.iter_mut().enumerate() {
        row[0] = i;
    }
    for (j, cell) in dist[0].iter_mut().enumerate() {
        *cell = j;
    }
    for i in 1..=n {
        for j in 1..=m {
            let sub_cost = usize::from(r[i - 1] != h[j - 1]);
            dist[i][j] = (dist[i - 1][j - 1] + sub_cost)
                .min(dist[i - 1][j] + 1)
                .min(dist[i][j - 1] + 1);
        }
    }
    let (mut i, mut j) = (n, m);
    let (mut subs, mut dels, mut ins) = (0usize, 0usize, 0usize);
    while i > 0 || j > 0 {
        if i > 0 && j > 0 && dist[i][j] == dist[i - 1][j - 1] + usize::from(r[i - 1] != h[j - 1]) {
            if r[i - 1] != h[j - 1] {
                subs += 1;
            }
            i -= 1;
            j -= 1;
        } else if i > 0 && dist[i][j] == dist[i - 1][j] + 1 {
            dels += 1;
            i -= 1;
        } else {
            ins += 1;
            j -= 1;
        }
    }
    Ok(WerBreakdown {
        substitutions: subs,
        deletions: dels,
        insertions: ins,
        reference_len: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn seq(text: &str) -> TokenSequence {
        tokenize(text)
    }

    #[test]
    fn tokenizer_strips_outer_punctuation() {
        assert_eq!(tokenize("It's hot, man.").tokens(), ["it's", "hot", "man"]);
    }

    #[test]
    fn tokenizer_keeps_trailing_apostrophe() {
        assert_eq!(tokenize("How you doin'?").tokens(), ["how", "you", "doin'"]);
    }

    #[test]
    fn tokenizer_empty_text() {
        assert!(tokenize("").is_empty());
        assert!(tokenize("  \t \n").is_empty());
    }

    #[test]
    fn tokenizer_normalizes_curly_apostrophe_and_hyphens() {
        assert_eq!(
            tokenize("tie\u{2019}s broken -- re-match!").tokens(),
            ["tie's", "broken", "--", "re-match"]
        );
    }

    #[test]
    fn bleu_identity_is_one() {
        let s = seq("the quick brown fox jumps");
        let score = bleu4(&s, std::slice::from_ref(&s)).unwrap();
        assert!((score.bleu4 - 1.0).abs() < 1e-12);
        assert_eq!(score.brevity_penalty, 1.0);
    }

    #[test]
    fn bleu_short_candidate_hand_value() {
        // p1 = p2 = 1, p3/p4 smoothed to 1 (no such n-grams), BP = exp(1 - 6/2).
        let cand = seq("the cat");
        let reference = seq("the cat sat on the mat");
        let score = bleu4(&cand, &[reference]).unwrap();
        assert!((score.bleu4 - (-2.0f64).exp()).abs() < 1e-12);
        assert!((score.brevity_penalty - (-2.0f64).exp()).abs() < 1e-12);
        assert_eq!(score.precisions, [1.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn bleu_empty_candidate_scores_zero() {
        let cand = TokenSequence::from_tokens(Vec::<String>::new());
        let reference = seq("some reference text here");
        let score = bleu4(&cand, &[reference]).unwrap();
        assert_eq!(score.bleu4, 0.0);
        assert!(score.brevity_penalty < 1e-100);
    }

    #[test]
    fn bleu_no_references_errors() {
        let cand = seq("hello world");
        assert!(matches!(bleu4(&cand, &[]), Err(LexicalError::NoReferences)));
    }

    #[test]
    fn bleu_closest_reference_prefers_shorter_on_tie() {
        // Candidate length 3; references of length 2 and 4 tie, so r* = 2 and
        // the candidate is longer than r*, giving BP = 1.
        let cand = seq("a b c");
        let refs = vec![seq("a b"), seq("a b c d")];
        let score = bleu4(&cand, &refs).unwrap();
        assert_eq!(score.brevity_penalty, 1.0);
    }

    #[test]
    fn corpus_bleu_pools_statistics() {
        let c1 = seq("the cat sat on the mat");
        let c2 = seq("a dog barked loudly outside");
        let r1 = vec![seq("the cat sat on the mat")];
        let r2 = vec![seq("a dog barked loudly outside")];
        let pooled = corpus_bleu4([(&c1, r1.as_slice()), (&c2, r2.as_slice())]).unwrap();
        assert!((pooled.bleu4 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rouge_identity_is_one() {
        let s = seq("one two three");
        let score = rouge_l(&s, &s, DEFAULT_ROUGE_BETA);
        assert!((score.f - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rouge_hand_case_six_sevenths() {
        let c = TokenSequence::from_tokens(["the", "cat", "sat"]);
        let r = TokenSequence::from_tokens(["the", "cat", "sat", "down"]);
        let score = rouge_l(&c, &r, 1.0);
        assert_eq!(score.lcs_len, 3);
        assert_eq!(score.recall, 0.75);
        assert_eq!(score.precision, 1.0);
        assert_eq!(score.f, 6.0 / 7.0);
    }

    #[test]
    fn rouge_disjoint_is_zero() {
        let c = seq("alpha beta");
        let r = seq("gamma delta");
        assert_eq!(rouge_l(&c, &r, 1.0).f, 0.0);
    }

    #[test]
    fn rouge_empty_inputs_are_zero() {
        let empty = TokenSequence::from_tokens(Vec::<String>::new());
        let s = seq("something here");
        assert_eq!(rouge_l(&empty, &s, 1.0).f, 0.0);
        assert_eq!(rouge_l(&s, &empty, 1.0).f, 0.0);
    }

    #[test]
    fn wer_identity_is_zero() {
        let s = seq("hello there world");
        let b = wer(&s, &s).unwrap();
        assert_eq!(b.edit_distance(), 0);
        assert_eq!(b.wer(), 0.0);
    }

    #[test]
    fn wer_single_insertion() {
        let r = TokenSequence::from_tokens(["hello", "world"]);
        let h = TokenSequence::from_tokens(["hello", "there", "world"]);
        let b = wer(&r, &h).unwrap();
        assert_eq!((b.substitutions, b.deletions, b.insertions), (0, 0, 1));
        assert_eq!(b.wer_percent(), 50.0);
    }

    #[test]
    fn wer_empty_hypothesis_is_all_deletions() {
        let r = seq("a b c d");
        let h = TokenSequence::from_tokens(Vec::<String>::new());
        let b = wer(&r, &h).unwrap();
        assert_eq!(b.deletions, 4);
        assert_eq!(b.wer_percent(), 100.0);
    }

    #[test]
    fn wer_empty_reference_errors() {
        let r = TokenSequence::from_tokens(Vec::<String>::new());
        let h = seq("anything");
        assert!(matches!(wer(&r, &h), Err(LexicalError::EmptyReference)));
    }

    fn token_seq_strategy(max_len: usize) -> impl Strategy<Value = TokenSequence> {
        prop::collection::vec(prop::sample::select(vec!["a", "b", "c"]), 0..=max_len)
            .prop_map(TokenSequence::from_tokens)
    }

    proptest! {
        #[test]
        fn bleu_in_unit_interval(c in token_seq_strategy(8), r in token_seq_strategy(8)) {
            let score = bleu4(&c, &[r]).unwrap();
            prop_assert!((0.0..=1.0).contains(&score.bleu4));
        }

        #[test]
        fn rouge_f_is_harmonic_mean_at_beta_one(c in token_seq_strategy(8), r in token_seq_strategy(8)) {
            let s = rouge_l(&c, &r, 1.0);
            let expected = if s.recall + s.precision > 0.0 {
                2.0 * s.recall * s.precision / (s.recall + s.precision)
            } else {
                0.0
            };
            prop_assert!((s.f - expected).abs() < 1e-12);
        }

        #[test]
        fn lcs_monotone_under_shared_append(c in token_seq_strategy(6), r in token_seq_strategy(6)) {
            let base = rouge_l(&c, &r, 1.0).lcs_len;
            let mut ct: Vec<String> = c.tokens().to_vec();
            let mut rt: Vec<String> = r.tokens().to_vec();
            ct.push("z".to_string());
            rt.push("z".to_string());
            let grown = rouge_l(
                &TokenSequence::from_tokens(ct),
                &TokenSequence::from_tokens(rt),
                1.0,
            )
            .lcs_len;
            prop_assert!(grown >= base);
        }

        #[test]
        fn wer_components_sum_to_distance(c in token_seq_strategy(8), r in token_seq_strategy(8)) {
            prop_assume!(!r.is_empty());
            let b = wer(&r, &c).unwrap();
            // Distance is bounded by the length of the longer sequence.
            prop_assert!(b.edit_distance() <= r.len().max(c.len()));
        }
    }
}
