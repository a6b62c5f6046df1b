//! Independent brute-force oracles.
//!
//! Each one re-derives its metric from the defining formulas with a different
//! algorithmic route than the library (position-scan n-gram counting,
//! subsequence enumeration for LCS, memoized recursion for edit distance,
//! explicit double loops for greedy matching and silhouettes). They stay free
//! of the implementation paths they check.

use std::collections::HashMap;

/// BLEU-4 by direct formula application: unique n-grams found by position
/// scanning, clipped against the per-reference maximum, add-one smoothing on
/// zero-count orders >= 2, brevity penalty against the closest-length
/// reference (ties to the shorter).
pub fn bleu4_oracle(candidate: &[String], references: &[Vec<String>]) -> f64 {
    assert!(!references.is_empty());
    let c_len = candidate.len();
    let r_star = references
        .iter()
        .map(|r| r.len())
        .min_by_key(|&len| (len.abs_diff(c_len), len))
        .unwrap();
    let mut log_sum = 0.0f64;
    for n in 1..=4usize {
        let total = if c_len >= n { c_len - n + 1 } else { 0 };
        let mut clipped = 0usize;
        let mut seen: Vec<&[String]> = Vec::new();
        for i in 0..total {
            let gram = &candidate[i..i + n];
            if seen.contains(&gram) {
                continue;
            }
            seen.push(gram);
            let count_c = (0..total).filter(|&j| &candidate[j..j + n] == gram).count();
            let max_r = references
                .iter()
                .map(|r| {
                    if r.len() < n {
                        0
                    } else {
                        (0..=r.len() - n).filter(|&j| &r[j..j + n] == gram).count()
                    }
                })
                .max()
                .unwrap();
            clipped += count_c.min(max_r);
        }
        let (num, den) = if n >= 2 && clipped == 0 {
            (clipped + 1, total + 1)
        } else {
            (clipped, total)
        };
        if num == 0 || den == 0 {
            return 0.0;
        }
        log_sum += (num as f64 / den as f64).ln();
    }
    let bp = if c_len > r_star {
        1.0
    } else {
        (1.0 - r_star as f64 / c_len as f64).exp()
    };
    bp * (log_sum / 4.0).exp()
}

fn is_subsequence(needle: &[&String], haystack: &[String]) -> bool {
    let mut it = haystack.iter();
    needle.iter().all(|n| it.any(|h| h == *n))
}

/// LCS length by enumerating every subsequence of the shorter side and
/// testing membership in the longer.
pub fn lcs_oracle(a: &[String], b: &[String]) -> usize {
    let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let n = short.len();
    assert!(n <= 16, "subsequence enumeration oracle caps at length 16");
    let mut best = 0usize;
    for mask in 0u32..(1u32 << n) {
        let count = mask.count_ones() as usize;
        if count <= best {
            continue;
        }
        let sub: Vec<&String> = (0..n)
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| &short[i])
            .collect();
        if is_subsequence(&sub, long) {
            best = count;
        }
    }
    best
}

/// ROUGE-L F from the oracle LCS.
pub fn rouge_f_oracle(candidate: &[String], reference: &[String], beta: f64) -> f64 {
    if candidate.is_empty() || reference.is_empty() {
        return 0.0;
    }
    let lcs = lcs_oracle(candidate, reference) as f64;
    let recall = lcs / reference.len() as f64;
    let precision = lcs / candidate.len() as f64;
    let denom = recall + beta * beta * precision;
    if denom > 0.0 {
        (1.0 + beta * beta) * recall * precision / denom
    } else {
        0.0
    }
}

/// Edit distance from the recursive definition with memoization.
pub fn edit_distance_oracle(reference: &[String], hypothesis: &[String]) -> usize {
    fn go(
        r: &[String],
        h: &[String],
        i: usize,
        j: usize,
        memo: &mut HashMap<(usize, usize), usize>,
    ) -> usize {
        if i == 0 {
            return j;
        }
        if j == 0 {
            return i;
        }
        if let Some(&d) = memo.get(&(i, j)) {
            return d;
        }
        let sub = go(r, h, i - 1, j - 1, memo) + usize::from(r[i - 1] != h[j - 1]);
        let del = go(r, h, i - 1, j, memo) + 1;
        let ins = go(r, h, i, j - 1, memo) + 1;
        let d = sub.min(del).min(ins);
        memo.insert((i, j), d);
        d
    }
    let mut memo = HashMap::new();
    go(
        reference,
        hypothesis,
        reference.len(),
        hypothesis.len(),
        &mut memo,
    )
}

/// Greedy-matching P/R/F1 by exhaustive pairwise dot products over raw
/// (already normalized) vectors.
pub fn bertscore_oracle(candidate: &[Vec<f64>], reference: &[Vec<f64>]) -> (f64, f64, f64) {
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let mut recall_sum = 0.0;
    for r in reference {
        let mut best = f64::NEG_INFINITY;
        for c in candidate {
            let d = dot(r, c);
            if d > best {
                best = d;
            }
        }
        recall_sum += best;
    }
    let mut precision_sum = 0.0;
    for c in candidate {
        let mut best = f64::NEG_INFINITY;
        for r in reference {
            let d = dot(c, r);
            if d > best {
                best = d;
            }
        }
        precision_sum += best;
    }
    let recall = recall_sum / reference.len() as f64;
    let precision = precision_sum / candidate.len() as f64;
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    (precision, recall, f1)
}

/// Per-point silhouettes by explicit a/b enumeration.
pub fn silhouette_oracle(points: &[Vec<f64>], assignments: &[usize]) -> Vec<f64> {
    let distance = |a: &[f64], b: &[f64]| {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    };
    let k = assignments.iter().copied().max().unwrap() + 1;
    let mut out = Vec::with_capacity(points.len());
    for i in 0..points.len() {
        let own = assignments[i];
        let own_size = assignments.iter().filter(|&&a| a == own).count();
        if own_size == 1 {
            out.push(0.0);
            continue;
        }
        let mut a_sum = 0.0;
        for j in 0..points.len() {
            if j != i && assignments[j] == own {
                a_sum += distance(&points[i], &points[j]);
            }
        }
        let a = a_sum / (own_size - 1) as f64;
        let mut b = f64::INFINITY;
        for cluster in 0..k {
            if cluster == own {
                continue;
            }
            let size = assignments.iter().filter(|&&x| x == cluster).count();
            if size == 0 {
                continue;
            }
            let mut sum = 0.0;
            for j in 0..points.len() {
                if assignments[j] == cluster {
                    sum += distance(&points[i], &points[j]);
                }
            }
            b = b.min(sum / size as f64);
        }
        let denom = a.max(b);
        out.push(if denom > 0.0 { (b - a) / denom } else { 0.0 });
    }
    out
}
