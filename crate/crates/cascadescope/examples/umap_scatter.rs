//! UMAP embedding of three well-separated clusters: Hellinger k-NN graph,
//! fuzzy union, SGD layout, and SVG export.
//!
//! Writes into a temp directory and prints the paths.
//!
//! ```bash
//! cargo run --example umap_scatter
//! ```

use cascadescope::embed::{export_scatter, fit_umap, hellinger, Metric, UmapParams};
use cascadescope::vectorize::{SparseMatrix, WeightKind};
use rand::Rng;
use rand::SeedableRng;

fn main() {
    println!(
        "hellinger((0.5, 0.5), (1, 0)) = {:.5}",
        hellinger(&[0.5, 0.5], &[1.0, 0.0]).unwrap()
    );

    // Three nonnegative 10-dim Gaussian blobs, 100 points each.
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
    let mut rows: Vec<Vec<(u32, f64)>> = Vec::new();
    let mut labels = Vec::new();
    for cluster in 0..3u32 {
        for _ in 0..100 {
            let row: Vec<(u32, f64)> = (0..10)
                .map(|d| {
                    let center = if d % 3 == cluster as usize { 8.0 } else { 1.0 };
                    (d as u32, (center + rng.gen::<f64>()).max(0.0))
                })
                .collect();
            rows.push(row);
            labels.push(cluster.to_string());
        }
    }
    let matrix = SparseMatrix::from_rows(10, WeightKind::TfIdf, rows);

    let mut params = UmapParams::new(17);
    params.metric = Metric::Hellinger;
    params.checkpoint_every = Some(20);
    let embedding = fit_umap(&matrix, &params).unwrap();

    println!("\ncross-entropy checkpoints (should trend down):");
    for (epoch, ce) in &embedding.checkpoints {
        println!("  epoch {epoch:>4}: {ce:>10.2}");
    }

    let dir = std::env::temp_dir().join("cascadescope-examples");
    std::fs::create_dir_all(&dir).unwrap();
    let csv = dir.join("umap_scatter.csv");
    let svg = dir.join("umap_scatter.svg");
    export_scatter(&embedding, &labels, &csv, &svg).unwrap();
    println!("\nwrote {} and {}", csv.display(), svg.display());
}
