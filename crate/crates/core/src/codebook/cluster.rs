//! k-means clustering and silhouette evaluation.
//!
//! Plain Lloyd iterations over Euclidean distance with k-means++ seeding from
//! a ChaCha8 generator, so a `(points, k, seed)` triple always reproduces the
//! same assignment. Empty clusters are re-seeded from the point currently
//! farthest from its centroid.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::CodebookError;

const MAX_ITERATIONS: usize = 300;

/// Outcome of one k-means run.
#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    /// Cluster index per point, parallel to the input.
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    /// Within-cluster sum of squared distances.
    pub inertia: f64,
    pub iterations: usize,
    /// Inertia after each Lloyd iteration; non-increasing.
    pub inertia_trace: Vec<f64>,
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    squared_distance(a, b).sqrt()
}

pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64) -> Result<KMeansResult, CodebookError> {
    if k < 2 {
        return Err(CodebookError::KTooSmall(k));
    }
    if points.len() < k {
        return Err(CodebookError::FewerPointsThanClusters {
            points: points.len(),
            k,
        });
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(CodebookError::InconsistentDimensions);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = plus_plus_seeding(points, k, &mut rng);
    let mut assignments = vec![0usize; points.len()];
    let mut inertia_trace = Vec::new();
    let mut iterations = 0;
    for _ in 0..MAX_ITERATIONS {
        iterations += 1;
        let new_assignments: Vec<usize> = points
            .iter()
            .map(|p| nearest_centroid(p, &centroids))
            .collect();
        let mut counts = vec![0usize; k];
        for &a in &new_assignments {
            counts[a] += 1;
        }
        let mut assignments_now = new_assignments;
        // Re-seed each empty cluster from the point farthest from its
        // centroid, lowest index winning ties.
        for cluster in 0..k {
            if counts[cluster] > 0 {
                continue;
            }
            let farthest = points
                .iter()
                .enumerate()
                .filter(|(i, _)| counts[assignments_now[*i]] > 1)
                .max_by(|(i, p), (j, q)| {
                    let dp = squared_distance(p, &centroids[assignments_now[*i]]);
                    let dq = squared_distance(q, &centroids[assignments_now[*j]]);
                    dp.partial_cmp(&dq)
                        .unwrap_or(std::cmp::Ordering::Equal)
                        .then(j.cmp(i))
                })
                .map(|(i, _)| i);
            if let Some(idx) = farthest {
                counts[assignments_now[idx]] -= 1;
                assignments_now[idx] = cluster;
                counts[cluster] = 1;
                centroids[cluster] = points[idx].clone();
            }
        }
        let mut sums = vec![vec![0.0f64; dim]; k];
        for (point, &a) in points.iter().zip(&assignments_now) {
            for (s, x) in sums[a].iter_mut().zip(point) {
                *s += x;
            }
        }
        for cluster in 0..k {
            if counts[cluster] > 0 {
                centroids[cluster] = sums[cluster]
                    .iter()
                    .map(|s| s / counts[cluster] as f64)
                    .collect();
            }
        }
        let inertia: f64 = points
            .iter()
            .zip(&assignments_now)
            .map(|(p, &a)| squared_distance(p, &centroids[a]))
            .sum();
        inertia_trace.push(inertia);
        let converged = assignments_now == assignments && iterations > 1;
        assignments = assignments_now;
        if converged {
            break;
        }
    }
    let inertia = *inertia_trace.last().unwrap_or(&0.0);
    Ok(KMeansResult {
        assignments,
        centroids,
        inertia,
        iterations,
        inertia_trace,
    })
}

fn nearest_centroid(point: &[f64], centroids: &[Vec<f64>]) -> usize {
    let mut best = 0usize;
    let mut best_dist = f64::INFINITY;
    for (idx, c) in centroids.iter().enumerate() {
        let d = squared_distance(point, c);
        if d < best_dist {
            best_dist = d;
            best = idx;
        }
    }
    best
}

fn plus_plus_seeding(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut centroids = Vec::with_capacity(k);
    centroids.push(points[rng.random_range(0..points.len())].clone());
    let mut dist2: Vec<f64> = points
        .iter()
        .map(|p| squared_distance(p, &centroids[0]))
        .collect();
    while centroids.len() < k {
        let total: f64 = dist2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = points.len() - 1;
            for (idx, &d) in dist2.iter().enumerate() {
                target -= d;
                if target <= 0.0 {
                    chosen = idx;
                    break;
                }
            }
            chosen
        } else {
            // All remaining mass is zero (duplicate points); fall back to a
            // uniform draw.
            rng.random_range(0..points.len())
        };
        centroids.push(points[next].clone());
        for (idx, p) in points.iter().enumerate() {
            let d = squared_distance(p, centroids.last().unwrap());
            if d < dist2[idx] {
                dist2[idx] = d;
            }
        }
    }
    centroids
}

/// Per-point silhouettes and their mean.
#[derive(Debug, Clone, PartialEq)]
pub struct SilhouetteResult {
    pub per_point: Vec<f64>,
    /// Mean silhouette (SC).
    pub mean: f64,
}

/// Silhouette over Euclidean distances: for each point, `a` is the mean
/// distance to its own cluster (excluding itself), `b` the smallest mean
/// distance to any other cluster, and `s = (b - a) / max(a, b)` guarded to 0
/// when both are 0. Points in singleton clusters score 0.
pub fn silhouette(
    points: &[Vec<f64>],
    assignments: &[usize],
) -> Result<SilhouetteResult, CodebookError> {
    if points.len() != assignments.len() {
        return Err(CodebookError::InconsistentDimensions);
    }
    let k = assignments.iter().copied().max().map_or(0, |m| m + 1);
    let mut counts = vec![0usize; k];
    for &a in assignments {
        counts[a] += 1;
    }
    let populated = counts.iter().filter(|&&c| c > 0).count();
    if populated < 2 {
        return Err(CodebookError::SingleCluster);
    }
    let n = points.len();
    let mut per_point = Vec::with_capacity(n);
    for i in 0..n {
        let own = assignments[i];
        if counts[own] == 1 {
            per_point.push(0.0);
            continue;
        }
        let mut sums = vec![0.0f64; k];
        for j in 0..n {
            if i == j {
                continue;
            }
            sums[assignments[j]] += euclidean(&points[i], &points[j]);
        }
        let a = sums[own] / (counts[own] - 1) as f64;
        let b = (0..k)
            .filter(|&c| c != own && counts[c] > 0)
            .map(|c| sums[c] / counts[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        per_point.push(if denom > 0.0 { (b - a) / denom } else { 0.0 });
    }
    let mean = per_point.iter().sum::<f64>() / per_point.len() as f64;
    Ok(SilhouetteResult { per_point, mean })
}

/// Mean silhouette after dropping the lowest `floor(tau * n)` per-point
/// scores. `tau = 0` reproduces the plain mean exactly.
///
/// # Panics
///
/// Panics when `tau` is outside `[0, 0.5)`.
pub fn trimmed_silhouette(per_point: &[f64], tau: f64) -> f64 {
    assert!(
        (0.0..0.5).contains(&tau),
        "trim fraction must lie in [0, 0.5), got {tau}"
    );
    if per_point.is_empty() {
        return 0.0;
    }
    let drop = (tau * per_point.len() as f64).floor() as usize;
    if drop == 0 {
        return per_point.iter().sum::<f64>() / per_point.len() as f64;
    }
    let mut sorted = per_point.to_vec();
    sorted.sort_by(f64::total_cmp);
    let kept = &sorted[drop..];
    kept.iter().sum::<f64>() / kept.len() as f64
}
