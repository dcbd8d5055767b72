//! Deterministic two-cluster k-means over one-dimensional data.
//!
//! Lloyd iteration starts from `(min, max)`. One-dimensional 2-means always
//! has an optimal solution that is a threshold split of the sorted values,
//! which is found exactly with prefix sums; when Lloyd settles on a
//! different partition (a local optimum, or the upper side of a tie) it is
//! re-seeded from the optimal split, which is a Lloyd fixed point.

use serde::{Deserialize, Serialize};

use crate::par::{self, Execution};

/// Relative tolerance under which two within-cluster sums of squares are
/// treated as tied. Ties go to the lower threshold.
pub const SSE_TIE_TOLERANCE: f64 = 1e-9;

const CHUNK: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansResult {
    /// Cluster index (0 or 1) per input value, in input order.
    pub assignments: Vec<u8>,
    /// Ascending centroids.
    pub centroids: [f64; 2],
    pub iterations: u32,
    pub converged: bool,
}

impl KMeansResult {
    pub fn cluster_sizes(&self) -> [usize; 2] {
        let ones = self.assignments.iter().filter(|&&a| a == 1).count();
        [self.assignments.len() - ones, ones]
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum KMeansError {
    #[error("k-means input is empty")]
    Empty,
    #[error("k-means tolerance must be positive and finite, got {0}")]
    Tolerance(f64),
    #[error("k-means max_iter must be positive")]
    MaxIter,
    #[error("k-means input contains a non-finite value at index {0}")]
    NonFinite(usize),
}

pub fn kmeans_two(values: &[f64], tol: f64, max_iter: u32) -> Result<KMeansResult, KMeansError> {
    kmeans_two_with(values, tol, max_iter, Execution::default())
}

pub fn kmeans_two_with(
    values: &[f64],
    tol: f64,
    max_iter: u32,
    exec: Execution,
) -> Result<KMeansResult, KMeansError> {
    if values.is_empty() {
        return Err(KMeansError::Empty);
    }
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(KMeansError::Tolerance(tol));
    }
    if max_iter == 0 {
        return Err(KMeansError::MaxIter);
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(KMeansError::NonFinite(i));
    }

    let (min, max) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    if min == max {
        return Ok(KMeansResult {
            assignments: vec![0; values.len()],
            centroids: [min, max],
            iterations: 1,
            converged: true,
        });
    }

    let (mut centroids, mut iterations, mut converged) = lloyd(values, [min, max], tol, max_iter, exec);

    let (threshold, optimal_means) = optimal_threshold_split(values);
    let lower_size = count_lower(values, centroids, exec);
    if lower_size != threshold {
        let (c, it, conv) = lloyd(values, optimal_means, tol, max_iter, exec);
        centroids = c;
        iterations += it;
        converged = conv;
    }

    let assignments = assign(values, centroids, exec);
    Ok(KMeansResult {
        assignments,
        centroids,
        iterations,
        converged,
    })
}

fn nearest(v: f64, c: [f64; 2]) -> u8 {
    if (v - c[0]).abs() <= (v - c[1]).abs() {
        0
    } else {
        1
    }
}

fn assign(values: &[f64], c: [f64; 2], exec: Execution) -> Vec<u8> {
    if exec.is_parallel() && values.len() > CHUNK {
        par::map(exec, values, |&v| nearest(v, c))
    } else {
        values.iter().map(|&v| nearest(v, c)).collect()
    }
}

fn count_lower(values: &[f64], c: [f64; 2], exec: Execution) -> usize {
    let chunks: Vec<&[f64]> = values.chunks(CHUNK).collect();
    par::map(exec, &chunks, |chunk| {
        chunk.iter().filter(|&&v| nearest(v, c) == 0).count()
    })
    .into_iter()
    .sum()
}

/// Per-cluster (count, sum) with a fixed chunk-wise summation order, so
/// sequential and parallel runs produce bit-identical centroids.
fn cluster_sums(values: &[f64], c: [f64; 2], exec: Execution) -> [(usize, f64); 2] {
    let chunks: Vec<&[f64]> = values.chunks(CHUNK).collect();
    let partials = par::map(exec, &chunks, |chunk| {
        let mut acc = [(0usize, 0.0f64); 2];
        for &v in chunk.iter() {
            let k = nearest(v, c) as usize;
            acc[k].0 += 1;
            acc[k].1 += v;
        }
        acc
    });
    partials.into_iter().fold([(0, 0.0); 2], |mut acc, p| {
        for k in 0..2 {
            acc[k].0 += p[k].0;
            acc[k].1 += p[k].1;
        }
        acc
    })
}

fn lloyd(values: &[f64], init: [f64; 2], tol: f64, max_iter: u32, exec: Execution) -> ([f64; 2], u32, bool) {
    let mut centroids = init;
    for iter in 1..=max_iter {
        let sums = cluster_sums(values, centroids, exec);
        let mut next = centroids;
        for k in 0..2 {
            if sums[k].0 > 0 {
                next[k] = sums[k].1 / sums[k].0 as f64;
            }
        }
        let moved = (next[0] - centroids[0]).abs().max((next[1] - centroids[1]).abs());
        centroids = next;
        if centroids[0] > centroids[1] {
            centroids.swap(0, 1);
        }
        if moved < tol {
            return (centroids, iter, true);
        }
    }
    (centroids, max_iter, false)
}

/// Optimal 2-means threshold split of `values`.
///
/// Returns the size of the lower cluster and the two cluster means. Splits
/// are only placed between distinct values.
pub fn optimal_threshold_split(values: &[f64]) -> (usize, [f64; 2]) {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let shift = sorted.iter().sum::<f64>() / n as f64;

    let mut prefix = Vec::with_capacity(n + 1);
    let mut prefix_sq = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    prefix_sq.push(0.0);
    for &v in &sorted {
        let x = v - shift;
        prefix.push(prefix.last().unwrap() + x);
        prefix_sq.push(prefix_sq.last().unwrap() + x * x);
    }
    let sse = |lo: usize, hi: usize| {
        let m = (hi - lo) as f64;
        let s = prefix[hi] - prefix[lo];
        ((prefix_sq[hi] - prefix_sq[lo]) - s * s / m).max(0.0)
    };

    let mut best: Option<(usize, f64)> = None;
    for k in 1..n {
        if sorted[k - 1] == sorted[k] {
            continue;
        }
        let total = sse(0, k) + sse(k, n);
        let better = match best {
            None => true,
            Some((_, b)) => total < b - SSE_TIE_TOLERANCE * b.abs(),
        };
        if better {
            best = Some((k, total));
        }
    }
    let k = best.map_or(n, |(k, _)| k);
    let mean = |lo: usize, hi: usize| {
        if hi > lo {
            (prefix[hi] - prefix[lo]) / (hi - lo) as f64 + shift
        } else {
            f64::NAN
        }
    };
    let m0 = mean(0, k);
    let m1 = if k < n { mean(k, n) } else { m0 };
    (k, [m0, m1])
}
