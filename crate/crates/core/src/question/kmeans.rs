//! Lloyd's k-means with seeded k-means++ initialization.
//!
//! Deterministic for a fixed (points, k, seed): initialization draws from a
//! seeded ChaCha stream and all ties break toward the lowest index. Empty
//! clusters are repaired by reseeding them with the point farthest from its
//! assigned centroid.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const MAX_ITERATIONS: usize = 100;
pub const CONVERGENCE_TOLERANCE: f64 = 1e-4;

/// Clustering result plus the per-cluster representative selection.
#[derive(Debug, Clone)]
pub struct ClusterSelection {
    pub k: usize,
    /// Cluster id per input point.
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    /// Per cluster, the input index of its minimum-distance member.
    pub selected_indices: Vec<usize>,
    /// Within-cluster sum of squared distances after each iteration.
    pub sse_trace: Vec<f64>,
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest_centroid(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = 0;
    let mut best_d = squared_distance(point, &centroids[0]);
    for (i, c) in centroids.iter().enumerate().skip(1) {
        let d = squared_distance(point, c);
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    (best, best_d)
}

/// k-means++ seeding: first centroid uniform, subsequent centroids sampled
/// proportionally to squared distance from the nearest chosen centroid.
fn init_centroids(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut centroids: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut chosen = vec![false; points.len()];

    let first = rng.random_range(0..points.len());
    centroids.push(points[first].clone());
    chosen[first] = true;

    let mut dist2: Vec<f64> = points
        .iter()
        .map(|p| squared_distance(p, &centroids[0]))
        .collect();

    while centroids.len() < k {
        let total: f64 = dist2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = None;
            for (i, &d) in dist2.iter().enumerate() {
                if d <= 0.0 {
                    continue;
                }
                target -= d;
                if target <= 0.0 {
                    pick = Some(i);
                    break;
                }
            }
            pick.unwrap_or_else(|| {
                dist2
                    .iter()
                    .rposition(|&d| d > 0.0)
                    .expect("total > 0 implies a positive entry")
            })
        } else {
            // all remaining points coincide with chosen centroids
            chosen.iter().position(|&c| !c).unwrap_or(0)
        };
        chosen[next] = true;
        centroids.push(points[next].clone());
        for (i, p) in points.iter().enumerate() {
            let d = squared_distance(p, centroids.last().unwrap());
            if d < dist2[i] {
                dist2[i] = d;
            }
        }
    }
    centroids
}

/// Move the in-cluster point farthest from its centroid into each empty
/// cluster (lowest empty cluster id first; donor clusters must keep at
/// least one member).
fn repair_empty_clusters(
    points: &[Vec<f64>],
    assignments: &mut [usize],
    centroids: &[Vec<f64>],
    counts: &mut [usize],
) {
    for empty in 0..centroids.len() {
        if counts[empty] > 0 {
            continue;
        }
        let mut farthest: Option<(usize, f64)> = None;
        for (i, point) in points.iter().enumerate() {
            let cluster = assignments[i];
            if counts[cluster] < 2 {
                continue;
            }
            let d = squared_distance(point, &centroids[cluster]);
            let better = match farthest {
                None => true,
                Some((_, best)) => d > best,
            };
            if better {
                farthest = Some((i, d));
            }
        }
        if let Some((i, _)) = farthest {
            counts[assignments[i]] -= 1;
            assignments[i] = empty;
            counts[empty] += 1;
        }
    }
}

fn compute_centroids(
    points: &[Vec<f64>],
    assignments: &[usize],
    k: usize,
    dim: usize,
) -> Vec<Vec<f64>> {
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (point, &cluster) in points.iter().zip(assignments) {
        counts[cluster] += 1;
        for (s, x) in sums[cluster].iter_mut().zip(point) {
            *s += x;
        }
    }
    for (sum, &count) in sums.iter_mut().zip(&counts) {
        if count > 0 {
            for s in sum.iter_mut() {
                *s /= count as f64;
            }
        }
    }
    sums
}

/// Cluster `points` into `k` groups and select each cluster's
/// minimum-distance member (ties toward the lowest input index).
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64) -> Result<ClusterSelection> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be >= 1".into()));
    }
    if k > points.len() {
        return Err(Error::InvalidArgument(format!(
            "k = {k} exceeds number of points ({})",
            points.len()
        )));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::InvalidArgument("points have mixed dimensions".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = init_centroids(points, k, &mut rng);
    let mut assignments = vec![0usize; points.len()];
    let mut sse_trace = Vec::new();

    for _iteration in 0..MAX_ITERATIONS {
        let mut counts = vec![0usize; k];
        for (i, point) in points.iter().enumerate() {
            let (cluster, _) = nearest_centroid(point, &centroids);
            assignments[i] = cluster;
            counts[cluster] += 1;
        }
        repair_empty_clusters(points, &mut assignments, &centroids, &mut counts);

        let next = compute_centroids(points, &assignments, k, dim);

        let sse: f64 = points
            .iter()
            .zip(&assignments)
            .map(|(p, &c)| squared_distance(p, &next[c]))
            .sum();
        if let Some(&prev) = sse_trace.last() {
            debug_assert!(
                sse <= prev + 1e-9,
                "SSE increased from {prev} to {sse}"
            );
        }
        sse_trace.push(sse);

        let displacement = centroids
            .iter()
            .zip(&next)
            .map(|(a, b)| squared_distance(a, b).sqrt())
            .fold(0.0f64, f64::max);
        centroids = next;
        if displacement < CONVERGENCE_TOLERANCE {
            break;
        }
    }

    let mut selected_indices = Vec::with_capacity(k);
    for cluster in 0..k {
        let mut best: Option<(usize, f64)> = None;
        for (i, point) in points.iter().enumerate() {
            if assignments[i] != cluster {
                continue;
            }
            let d = squared_distance(point, &centroids[cluster]);
            let better = match best {
                None => true,
                Some((_, best_d)) => d < best_d,
            };
            if better {
                best = Some((i, d));
            }
        }
        let (index, _) = best.ok_or_else(|| {
            Error::InvalidArgument(format!("cluster {cluster} is empty after repair"))
        })?;
        selected_indices.push(index);
    }

    Ok(ClusterSelection {
        k,
        assignments,
        centroids,
        selected_indices,
        sse_trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k1_centroid_is_mean() {
        let points = vec![vec![0.0, 0.0], vec![2.0, 4.0], vec![4.0, 2.0]];
        let result = kmeans(&points, 1, 7).unwrap();
        assert_eq!(result.centroids[0], vec![2.0, 2.0]);
        assert_eq!(result.assignments, vec![0, 0, 0]);
    }

    #[test]
    fn corner_points_split_left_right() {
        let points = vec![
            vec![0.0, 0.0],
            vec![0.0, 1.0],
            vec![10.0, 0.0],
            vec![10.0, 1.0],
        ];
        let result = kmeans(&points, 2, 42).unwrap();
        assert_eq!(result.assignments[0], result.assignments[1]);
        assert_eq!(result.assignments[2], result.assignments[3]);
        assert_ne!(result.assignments[0], result.assignments[2]);
        let mut centroids = result.centroids.clone();
        centroids.sort_by(|a, b| a[0].partial_cmp(&b[0]).unwrap());
        assert_eq!(centroids[0], vec![0.0, 0.5]);
        assert_eq!(centroids[1], vec![10.0, 0.5]);
        // exhaustive minimum SSE for this instance is 4 * 0.5^2
        let sse = result.sse_trace.last().unwrap();
        assert!((sse - 1.0).abs() < 1e-12);
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let points: Vec<Vec<f64>> = (0..12)
            .map(|i| vec![(i % 4) as f64, (i / 4) as f64 * 3.0])
            .collect();
        let a = kmeans(&points, 3, 99).unwrap();
        let b = kmeans(&points, 3, 99).unwrap();
        assert_eq!(a.assignments, b.assignments);
        assert_eq!(a.centroids, b.centroids);
        assert_eq!(a.selected_indices, b.selected_indices);
    }

    #[test]
    fn invalid_k_rejected() {
        let points = vec![vec![0.0], vec![1.0]];
        assert!(kmeans(&points, 0, 1).is_err());
        assert!(kmeans(&points, 3, 1).is_err());
    }

    #[test]
    fn duplicate_points_still_fill_clusters() {
        let points = vec![vec![1.0, 1.0]; 5];
        let result = kmeans(&points, 2, 5).unwrap();
        let mut counts = [0usize; 2];
        for &a in &result.assignments {
            counts[a] += 1;
        }
        assert!(counts[0] > 0 && counts[1] > 0);
        assert_eq!(result.selected_indices.len(), 2);
    }

    #[test]
    fn sse_trace_non_increasing() {
        let points: Vec<Vec<f64>> = (0..20)
            .map(|i| vec![(i as f64 * 7.3) % 5.0, (i as f64 * 3.1) % 4.0])
            .collect();
        for seed in 0..10 {
            let result = kmeans(&points, 4, seed).unwrap();
            for pair in result.sse_trace.windows(2) {
                assert!(pair[1] <= pair[0] + 1e-9, "trace increased: {:?}", result.sse_trace);
            }
        }
    }
}
