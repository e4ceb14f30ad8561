//! The topic-count sweep: train one model per K and pick the one with the
//! highest mean C_v coherence. Three ground-truth topics with disjoint
//! 24-word vocabularies, so each model's top-20 term lists only cohere when
//! K matches the truth.
//!
//! ```bash
//! cargo run --example topic_sweep
//! ```

use cascadescope::textprep::Document;
use cascadescope::topics::{sweep_topic_counts, LdaHyperparams};
use cascadescope::vectorize::{build_vocab, count_matrix};
use rand::Rng;
use rand::SeedableRng;

fn main() {
    let themes = ["care", "count", "policy"];
    let pools: Vec<Vec<String>> = themes
        .iter()
        .map(|theme| (0..24).map(|i| format!("{theme}{i:02}")).collect())
        .collect();

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
    let docs: Vec<Document> = (0..360)
        .map(|i| {
            let pool = &pools[i % 3];
            Document {
                tweet_id: i.to_string(),
                minute: 0,
                tokens: (0..14)
                    .map(|_| pool[rng.gen_range(0..pool.len())].clone())
                    .collect(),
            }
        })
        .collect();

    let vocab = build_vocab(&docs, 200, (1, 1)).unwrap();
    let counts = count_matrix(&docs, &vocab);
    let base = LdaHyperparams {
        iterations: 50,
        ..LdaHyperparams::new(2, 3)
    };

    let sweep =
        sweep_topic_counts(&counts, &vocab, &docs, &[1, 2, 3, 5, 8], &base, 110, true).unwrap();
    println!("{:>3} {:>10}", "K", "mean C_v");
    for entry in &sweep.entries {
        match (&entry.mean_cv, &entry.error) {
            (Some(cv), _) => println!("{:>3} {:>10.4}", entry.k, cv),
            (None, Some(e)) => println!("{:>3} failed: {e}", entry.k),
            (None, None) => println!("{:>3} undefined", entry.k),
        }
    }
    println!("\nselected K = {:?} (true K = 3)", sweep.selected);
}
