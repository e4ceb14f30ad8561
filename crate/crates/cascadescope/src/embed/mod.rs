//! UMAP dimensionality reduction to 2-D: Hellinger distances on TF-IDF
//! rows, a k-NN graph (exact or NN-descent), fuzzy union, and
//! negative-sampling SGD.

pub mod fuzzy;
pub mod knn;
pub mod optimize;

use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::vectorize::SparseMatrix;
pub use fuzzy::{fuzzy_union, t_conorm, FuzzyGraph};
pub use knn::{exact_knn, nn_descent, KnnGraph, Neighbor};
pub use optimize::{cross_entropy, fit_curve_params};

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("vector lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("negative entry at position {0}")]
    NegativeEntry(usize),
    #[error("need at least {need} rows, got {got}")]
    TooFewRows { need: usize, got: usize },
    #[error("k = {k} must be below the number of points {n}")]
    KTooLarge { k: usize, n: usize },
    #[error("labels ({labels}) must match rows ({rows})")]
    LabelMismatch { labels: usize, rows: usize },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Hellinger distance `(1/sqrt(2)) * ||sqrt(P) - sqrt(Q)||_2` between
/// nonnegative vectors.
pub fn hellinger(p: &[f64], q: &[f64]) -> Result<f64, EmbedError> {
    if p.len() != q.len() {
        return Err(EmbedError::LengthMismatch(p.len(), q.len()));
    }
    let mut sum = 0.0;
    for (i, (&a, &b)) in p.iter().zip(q).enumerate() {
        if a < 0.0 || b < 0.0 {
            return Err(EmbedError::NegativeEntry(i));
        }
        let d = a.sqrt() - b.sqrt();
        sum += d * d;
    }
    Ok((sum / 2.0).sqrt())
}

/// Precomputed square roots of sparse rows for pairwise Hellinger. The
/// distance walks the merged columns and accumulates `(sqrt(p) - sqrt(q))^2`
/// exactly as the dense formula does, so sparse and dense evaluation agree
/// to the last bit (skipped columns contribute an exact 0.0 term).
pub struct HellingerRows {
    sqrt_rows: Vec<Vec<(u32, f64)>>,
}

impl HellingerRows {
    pub fn new(matrix: &SparseMatrix) -> Result<Self, EmbedError> {
        let mut sqrt_rows = Vec::with_capacity(matrix.n_rows);
        for row in matrix.rows() {
            let mut sq = Vec::with_capacity(row.len());
            for &(c, w) in row {
                if w < 0.0 {
                    return Err(EmbedError::NegativeEntry(c as usize));
                }
                sq.push((c, w.sqrt()));
            }
            sqrt_rows.push(sq);
        }
        Ok(Self { sqrt_rows })
    }

    pub fn dist(&self, i: usize, j: usize) -> f64 {
        let (ra, rb) = (&self.sqrt_rows[i], &self.sqrt_rows[j]);
        let (mut a, mut b) = (0usize, 0usize);
        let mut sum = 0.0;
        while a < ra.len() || b < rb.len() {
            let d = match (ra.get(a), rb.get(b)) {
                (Some(&(ca, sa)), Some(&(cb, sb))) => match ca.cmp(&cb) {
                    std::cmp::Ordering::Less => {
                        a += 1;
                        sa
                    }
                    std::cmp::Ordering::Greater => {
                        b += 1;
                        -sb
                    }
                    std::cmp::Ordering::Equal => {
                        a += 1;
                        b += 1;
                        sa - sb
                    }
                },
                (Some(&(_, sa)), None) => {
                    a += 1;
                    sa
                }
                (None, Some(&(_, sb))) => {
                    b += 1;
                    -sb
                }
                (None, None) => break,
            };
            sum += d * d;
        }
        (sum / 2.0).sqrt()
    }
}

fn euclidean_sparse(ra: &[(u32, f64)], rb: &[(u32, f64)]) -> f64 {
    let (mut a, mut b) = (0usize, 0usize);
    let mut sum = 0.0;
    while a < ra.len() || b < rb.len() {
        match (ra.get(a), rb.get(b)) {
            (Some(&(ca, wa)), Some(&(cb, wb))) => match ca.cmp(&cb) {
                std::cmp::Ordering::Less => {
                    sum += wa * wa;
                    a += 1;
                }
                std::cmp::Ordering::Greater => {
                    sum += wb * wb;
                    b += 1;
                }
                std::cmp::Ordering::Equal => {
                    sum += (wa - wb) * (wa - wb);
                    a += 1;
                    b += 1;
                }
            },
            (Some(&(_, wa)), None) => {
                sum += wa * wa;
                a += 1;
            }
            (None, Some(&(_, wb))) => {
                sum += wb * wb;
                b += 1;
            }
            (None, None) => break,
        }
    }
    sum.sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Metric {
    Hellinger,
    Euclidean,
}

/// Threshold below which k-NN is exact brute force; above it NN-descent.
pub const DEFAULT_EXACT_THRESHOLD: usize = 20_000;

/// Build the k-NN graph under the chosen metric. Exact below
/// `exact_threshold`, NN-descent above it; deterministic for a given seed.
pub fn knn_graph(
    rows: &SparseMatrix,
    k: usize,
    metric: Metric,
    exact_threshold: usize,
    seed: u64,
    parallel: bool,
) -> Result<KnnGraph, EmbedError> {
    let n = rows.n_rows;
    if k >= n {
        return Err(EmbedError::KTooLarge { k, n });
    }
    match metric {
        Metric::Hellinger => {
            let prepared = HellingerRows::new(rows)?;
            let dist = |i: usize, j: usize| prepared.dist(i, j);
            if n <= exact_threshold {
                Ok(exact_knn(n, k, dist, parallel))
            } else {
                Ok(nn_descent(n, k, dist, seed, 15))
            }
        }
        Metric::Euclidean => {
            let dist = |i: usize, j: usize| euclidean_sparse(rows.row(i), rows.row(j));
            if n <= exact_threshold {
                Ok(exact_knn(n, k, dist, parallel))
            } else {
                Ok(nn_descent(n, k, dist, seed, 15))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UmapParams {
    pub n_neighbors: usize,
    pub min_dist: f64,
    pub spread: f64,
    /// Defaults to 200 at or below the exact threshold, 500 above it.
    pub epochs: Option<usize>,
    pub learning_rate: f64,
    pub negative_samples: usize,
    pub metric: Metric,
    pub exact_threshold: usize,
    pub seed: u64,
    /// Record the full-pair cross entropy every this many epochs.
    pub checkpoint_every: Option<usize>,
}

impl UmapParams {
    pub fn new(seed: u64) -> Self {
        Self {
            n_neighbors: 15,
            min_dist: 0.1,
            spread: 1.0,
            epochs: None,
            learning_rate: 1.0,
            negative_samples: 5,
            metric: Metric::Hellinger,
            exact_threshold: DEFAULT_EXACT_THRESHOLD,
            seed,
            checkpoint_every: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Embedding {
    pub coords: Vec<[f64; 2]>,
    pub params: UmapParams,
    /// (epoch, cross entropy) pairs when checkpointing was requested.
    pub checkpoints: Vec<(usize, f64)>,
}

/// Fit a 2-D embedding: k-NN graph, fuzzy union, kernel fit from min_dist,
/// then negative-sampling SGD from a seeded random initialization.
pub fn fit_umap(rows: &SparseMatrix, params: &UmapParams) -> Result<Embedding, EmbedError> {
    let n = rows.n_rows;
    if n < 10 {
        return Err(EmbedError::TooFewRows { need: 10, got: n });
    }
    let mut k = params.n_neighbors;
    if k >= n {
        k = n - 1;
        log::warn!(
            "n_neighbors {} clamped to {k} for {n} rows",
            params.n_neighbors
        );
    }
    let graph = knn_graph(
        rows,
        k,
        params.metric,
        params.exact_threshold,
        params.seed,
        true,
    )?;
    if graph
        .neighbors
        .iter()
        .all(|nbrs| nbrs.iter().all(|nb| nb.dist == 0.0))
    {
        log::warn!("all pairwise distances are zero; embedding will collapse");
    }
    let fuzzy = fuzzy_union(&graph);
    let (a, b) = fit_curve_params(params.min_dist, params.spread);
    let epochs = params.epochs.unwrap_or(if n <= params.exact_threshold {
        200
    } else {
        500
    });
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut coords: Vec<[f64; 2]> = (0..n)
        .map(|_| {
            [
                20.0 * rng.gen::<f64>() - 10.0,
                20.0 * rng.gen::<f64>() - 10.0,
            ]
        })
        .collect();
    let cfg = optimize::SgdConfig {
        epochs,
        learning_rate: params.learning_rate,
        negative_samples: params.negative_samples,
        a,
        b,
        seed: params.seed.wrapping_add(1),
        checkpoint_every: params.checkpoint_every,
    };
    let checkpoints = optimize::optimize_layout(&fuzzy, &mut coords, &cfg);
    Ok(Embedding {
        coords,
        params: params.clone(),
        checkpoints,
    })
}

/// Write the embedding as `x,y,label` CSV plus an SVG scatter with one
/// color per label, and echo the parameters into a sidecar JSON.
pub fn export_scatter(
    embedding: &Embedding,
    labels: &[String],
    csv_path: &Path,
    svg_path: &Path,
) -> Result<(), EmbedError> {
    if labels.len() != embedding.coords.len() {
        return Err(EmbedError::LabelMismatch {
            labels: labels.len(),
            rows: embedding.coords.len(),
        });
    }
    let io_err = |path: &Path| {
        let p = path.display().to_string();
        move |source: std::io::Error| EmbedError::Io {
            path: p.clone(),
            source,
        }
    };
    let mut csv = String::from("x,y,label\n");
    for (p, label) in embedding.coords.iter().zip(labels) {
        csv.push_str(&format!("{:.6},{:.6},{label}\n", p[0], p[1]));
    }
    std::fs::write(csv_path, csv).map_err(io_err(csv_path))?;
    crate::plot::scatter_svg(&embedding.coords, labels, svg_path).map_err(io_err(svg_path))?;
    let sidecar = csv_path.with_extension("params.json");
    let params = serde_json::to_string_pretty(&embedding.params).expect("params serialize");
    std::fs::write(&sidecar, params).map_err(io_err(&sidecar))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vectorize::WeightKind;
    use proptest::prelude::*;

    fn dense_to_sparse(rows: &[Vec<f64>]) -> SparseMatrix {
        let n_cols = rows.first().map_or(0, Vec::len);
        let sparse_rows: Vec<Vec<(u32, f64)>> = rows
            .iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .filter(|&(_, &v)| v != 0.0)
                    .map(|(c, &v)| (c as u32, v))
                    .collect()
            })
            .collect();
        SparseMatrix::from_rows(n_cols, WeightKind::TfIdf, sparse_rows)
    }

    #[test]
    fn hellinger_analytic_cases() {
        assert_eq!(hellinger(&[0.3, 0.7], &[0.3, 0.7]).unwrap(), 0.0);
        assert!((hellinger(&[1.0, 0.0], &[0.0, 1.0]).unwrap() - 1.0).abs() < 1e-15);
        let d = hellinger(&[0.5, 0.5], &[1.0, 0.0]).unwrap();
        assert!((d - 0.5412).abs() < 1e-4);
        let expected = ((0.5f64.sqrt() - 1.0).powi(2) + 0.5).sqrt() / 2.0f64.sqrt();
        assert!((d - expected).abs() < 1e-12);
    }

    #[test]
    fn hellinger_errors() {
        assert!(matches!(
            hellinger(&[1.0], &[1.0, 2.0]),
            Err(EmbedError::LengthMismatch(1, 2))
        ));
        assert!(matches!(
            hellinger(&[-0.1, 1.0], &[0.5, 0.5]),
            Err(EmbedError::NegativeEntry(0))
        ));
    }

    #[test]
    fn sparse_hellinger_matches_dense() {
        let dense = vec![
            vec![0.5, 0.0, 0.25, 0.0],
            vec![0.0, 0.3, 0.25, 0.1],
            vec![0.1, 0.1, 0.0, 0.0],
        ];
        let sparse = dense_to_sparse(&dense);
        let prepared = HellingerRows::new(&sparse).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expected = hellinger(&dense[i], &dense[j]).unwrap();
                assert!((prepared.dist(i, j) - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn knn_exact_euclidean_line() {
        let rows = dense_to_sparse(&[vec![0.0], vec![1.0], vec![3.0]]);
        let g = knn_graph(&rows, 1, Metric::Euclidean, 100, 0, false).unwrap();
        assert_eq!(g.neighbors[0][0].index, 1);
        assert_eq!(g.neighbors[1][0].index, 0);
        assert_eq!(g.neighbors[2][0].index, 1);
        assert!(matches!(
            knn_graph(&rows, 3, Metric::Euclidean, 100, 0, false),
            Err(EmbedError::KTooLarge { .. })
        ));
    }

    fn cluster_fixture(per_cluster: usize, seed: u64) -> (SparseMatrix, Vec<String>) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for c in 0..3 {
            for _ in 0..per_cluster {
                let center = 4.0 + 3.0 * c as f64;
                let row: Vec<f64> = (0..10)
                    .map(|d| {
                        let base = if d % 3 == c { center } else { 1.0 };
                        (base + 0.3 * rng.gen::<f64>()).max(0.0)
                    })
                    .collect();
                rows.push(row);
                labels.push(c.to_string());
            }
        }
        (dense_to_sparse(&rows), labels)
    }

    #[test]
    fn identical_rows_collapse() {
        let rows = dense_to_sparse(&vec![vec![0.4, 0.6]; 10]);
        let params = UmapParams::new(3);
        let emb = fit_umap(&rows, &params).unwrap();
        for i in 0..10 {
            for j in i + 1..10 {
                let dx = emb.coords[i][0] - emb.coords[j][0];
                let dy = emb.coords[i][1] - emb.coords[j][1];
                assert!(
                    (dx * dx + dy * dy).sqrt() <= params.min_dist * 10.0,
                    "points {i},{j} too far"
                );
            }
        }
    }

    #[test]
    fn sgd_descends_the_cross_entropy() {
        // Negative-sampling SGD follows a stochastic surrogate of the
        // checkpointed objective, so the trace descends to a noisy plateau:
        // substantial net descent, never rebounding near the start.
        let (rows, _) = cluster_fixture(100, 5);
        let mut params = UmapParams::new(11);
        params.checkpoint_every = Some(10);
        let emb = fit_umap(&rows, &params).unwrap();
        let ces: Vec<f64> = emb.checkpoints.iter().map(|&(_, ce)| ce).collect();
        assert!(ces.len() >= 3);
        let initial = ces[0];
        let last = *ces.last().unwrap();
        assert!(last < 0.7 * initial, "no net descent: {initial} -> {last}");
        for &ce in &ces[1..] {
            assert!(ce <= 0.9 * initial, "objective rebounded toward the start");
        }
    }

    #[test]
    fn clusters_stay_separated() {
        let (rows, labels) = cluster_fixture(30, 5);
        let mut params = UmapParams::new(11);
        params.epochs = Some(150);
        let emb = fit_umap(&rows, &params).unwrap();
        // Mean intra-cluster distance must undercut mean inter-cluster
        // distance by a wide margin.
        let mut intra = (0.0, 0usize);
        let mut inter = (0.0, 0usize);
        for i in 0..labels.len() {
            for j in i + 1..labels.len() {
                let dx = emb.coords[i][0] - emb.coords[j][0];
                let dy = emb.coords[i][1] - emb.coords[j][1];
                let d = (dx * dx + dy * dy).sqrt();
                if labels[i] == labels[j] {
                    intra = (intra.0 + d, intra.1 + 1);
                } else {
                    inter = (inter.0 + d, inter.1 + 1);
                }
            }
        }
        let intra_mean = intra.0 / intra.1 as f64;
        let inter_mean = inter.0 / inter.1 as f64;
        assert!(
            intra_mean * 2.0 < inter_mean,
            "intra {intra_mean:.3} vs inter {inter_mean:.3}"
        );
    }

    #[test]
    fn export_scatter_writes_rows_and_colors() {
        let dir = tempfile::tempdir().unwrap();
        let emb = Embedding {
            coords: vec![[0.0, 0.0], [1.0, 1.0], [2.0, 0.5]],
            params: UmapParams::new(1),
            checkpoints: Vec::new(),
        };
        let labels = vec!["0".to_string(), "1".to_string(), "0".to_string()];
        let csv_path = dir.path().join("emb.csv");
        let svg_path = dir.path().join("emb.svg");
        export_scatter(&emb, &labels, &csv_path, &svg_path).unwrap();
        let csv = std::fs::read_to_string(&csv_path).unwrap();
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.starts_with("x,y,label"));
        let svg = std::fs::read_to_string(&svg_path).unwrap();
        assert!(svg.contains("<svg"));
        let bad = export_scatter(&emb, &labels[..2], &csv_path, &svg_path);
        assert!(matches!(bad, Err(EmbedError::LabelMismatch { .. })));
    }

    proptest! {
        #[test]
        fn hellinger_is_a_metric_on_simplex_points(
            raw_p in proptest::collection::vec(1e-6..1.0f64, 4),
            raw_q in proptest::collection::vec(1e-6..1.0f64, 4),
            raw_r in proptest::collection::vec(1e-6..1.0f64, 4),
        ) {
            let norm = |v: &[f64]| -> Vec<f64> {
                let s: f64 = v.iter().sum();
                v.iter().map(|x| x / s).collect()
            };
            let (p, q, r) = (norm(&raw_p), norm(&raw_q), norm(&raw_r));
            let dpq = hellinger(&p, &q).unwrap();
            let dqp = hellinger(&q, &p).unwrap();
            prop_assert!((dpq - dqp).abs() < 1e-12);
            prop_assert!((0.0..=1.0 + 1e-12).contains(&dpq));
            prop_assert!(hellinger(&p, &p).unwrap() == 0.0);
            let dpr = hellinger(&p, &r).unwrap();
            let drq = hellinger(&r, &q).unwrap();
            prop_assert!(dpq <= dpr + drq + 1e-12);
        }
    }
}
