//! Fuzzy topological representation: per-point (rho, sigma) calibration of
//! membership strengths and the probabilistic t-conorm union.

use super::knn::KnnGraph;

const SIGMA_TOLERANCE: f64 = 1e-5;
const MIN_SIGMA: f64 = 1e-10;

/// Directed membership strengths for one point: `exp(-max(0, d - rho) / sigma)`
/// with sigma solved so the strengths sum to log2(k).
pub fn membership_strengths(dists: &[f64]) -> Vec<f64> {
    if dists.is_empty() {
        return Vec::new();
    }
    let rho = dists[0];
    let target = (dists.len() as f64).log2();
    let strength_sum = |sigma: f64| -> f64 {
        dists
            .iter()
            .map(|&d| (-(d - rho).max(0.0) / sigma).exp())
            .sum()
    };
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    let mut grow = 0;
    while strength_sum(hi) < target && grow < 100 {
        hi *= 2.0;
        grow += 1;
    }
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        let sum = strength_sum(mid.max(MIN_SIGMA));
        if (sum - target).abs() < SIGMA_TOLERANCE {
            lo = mid;
            break;
        }
        if sum > target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let sigma = (0.5 * (lo + hi)).max(MIN_SIGMA);
    dists
        .iter()
        .map(|&d| (-(d - rho).max(0.0) / sigma).exp())
        .collect()
}

/// Probabilistic t-conorm `a + b - a*b` used to symmetrize directed
/// strengths.
pub fn t_conorm(a: f64, b: f64) -> f64 {
    a + b - a * b
}

/// Symmetric fuzzy graph: undirected weighted edges with i < j and
/// weights in (0, 1].
#[derive(Debug, Clone)]
pub struct FuzzyGraph {
    pub n: usize,
    pub edges: Vec<(u32, u32, f64)>,
}

/// Calibrate per-point strengths and take the fuzzy union.
pub fn fuzzy_union(graph: &KnnGraph) -> FuzzyGraph {
    let n = graph.neighbors.len();
    let mut directed: std::collections::HashMap<(u32, u32), f64> = std::collections::HashMap::new();
    for (i, nbrs) in graph.neighbors.iter().enumerate() {
        let dists: Vec<f64> = nbrs.iter().map(|n| n.dist).collect();
        let strengths = membership_strengths(&dists);
        for (nb, s) in nbrs.iter().zip(strengths) {
            directed.insert((i as u32, nb.index), s);
        }
    }
    let mut edges = Vec::new();
    for (&(i, j), &a) in &directed {
        if i > j {
            continue;
        }
        let b = directed.get(&(j, i)).copied().unwrap_or(0.0);
        let w = if i == j { a } else { t_conorm(a, b) };
        if w > 0.0 {
            edges.push((i, j, w));
        }
    }
    // Edges where only j -> i exists.
    for (&(j, i), &b) in &directed {
        if j <= i || directed.contains_key(&(i, j)) {
            continue;
        }
        let w = t_conorm(0.0, b);
        if w > 0.0 {
            edges.push((i, j, w));
        }
    }
    edges.sort_by_key(|e| (e.0, e.1));
    FuzzyGraph { n, edges }
}
