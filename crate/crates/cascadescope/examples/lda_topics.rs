//! Collapsed-Gibbs LDA on a two-topic synthetic corpus with disjoint
//! vocabularies: the trainer should recover both topics cleanly.
//!
//! ```bash
//! cargo run --example lda_topics
//! ```

use cascadescope::textprep::Document;
use cascadescope::topics::{
    assign_topic, infer_theta, train_lda, LdaHyperparams, DEFAULT_UNIFORM_TOL,
};
use cascadescope::vectorize::{build_vocab, count_matrix};
use rand::Rng;
use rand::SeedableRng;

const HEALTH: [&str; 8] = [
    "mask",
    "icu",
    "nurse",
    "ventilator",
    "hospital",
    "doctor",
    "bed",
    "ppe",
];
const POLICY: [&str; 8] = [
    "briefing", "order", "mandate", "governor", "senate", "bill", "press", "vote",
];

fn main() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
    let docs: Vec<Document> = (0..400)
        .map(|i| {
            let pool: &[&str] = if i % 2 == 0 { &HEALTH } else { &POLICY };
            Document {
                tweet_id: i.to_string(),
                minute: 0,
                tokens: (0..20)
                    .map(|_| pool[rng.gen_range(0..pool.len())].to_string())
                    .collect(),
            }
        })
        .collect();

    let vocab = build_vocab(&docs, 100, (1, 1)).unwrap();
    let counts = count_matrix(&docs, &vocab);
    let model = train_lda(&counts, &vocab, &LdaHyperparams::new(2, 7)).unwrap();

    for (k, terms) in model.top_terms.iter().enumerate() {
        println!("topic {k}: {}", terms[..8.min(terms.len())].join(", "));
    }
    for stats in &model.pass_stats {
        println!(
            "pass {}: mean theta delta {:.5}, max row-sum error {:.1e}",
            stats.pass,
            stats.mean_theta_delta,
            stats.max_phi_row_err.max(stats.max_theta_row_err)
        );
    }

    // Held-out inference: a document of purely health words.
    let unseen: Vec<(u32, u32)> = ["mask", "icu", "nurse"]
        .iter()
        .filter_map(|w| vocab.col(w).map(|c| (c, 2)))
        .collect();
    let (theta, undefined) = infer_theta(&model, &unseen);
    println!("\nheld-out health doc: theta {theta:?} (undefined: {undefined})");
    println!("assigned: {}", assign_topic(&theta, DEFAULT_UNIFORM_TOL));

    let (empty_theta, undefined) = infer_theta(&model, &[]);
    println!(
        "empty doc: theta {empty_theta:?} -> {} (undefined: {undefined})",
        assign_topic(&empty_theta, DEFAULT_UNIFORM_TOL)
    );
}
