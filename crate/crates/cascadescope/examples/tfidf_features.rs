//! Vocabulary construction, TF-IDF weighting, and top-feature ranking,
//! including the bigram mode used for user descriptions.
//!
//! ```bash
//! cargo run --example tfidf_features
//! ```

use cascadescope::ingest::{filter_records, parse_archive_reader, FilterMode, Strictness};
use cascadescope::synth::{generate_archive, SynthConfig};
use cascadescope::textprep::{preprocess_corpus, StopwordList};
use cascadescope::vectorize::{build_vocab, count_matrix, tfidf, top_features};

fn main() {
    let cfg = SynthConfig {
        n_tweets: 3_000,
        ..SynthConfig::default()
    };
    let parsed =
        parse_archive_reader(generate_archive(&cfg).as_bytes(), Strictness::Lenient).unwrap();
    let originals = filter_records(parsed.records, FilterMode::OriginalsOnly);
    let docs = preprocess_corpus(&originals, &StopwordList::default_english());

    let vocab = build_vocab(&docs, 2_000, (1, 1)).unwrap();
    let counts = count_matrix(&docs, &vocab);
    let weights = tfidf(&counts, &vocab).unwrap();
    println!(
        "matrix: {} docs x {} features, {} non-zeros ({} after TF-IDF)",
        counts.n_rows,
        counts.n_cols,
        counts.nnz(),
        weights.nnz()
    );

    println!("\ntop 15 unigrams by summed TF-IDF:");
    for (term, score) in top_features(&weights, &vocab, 15) {
        println!("  {term:<12} {score:>9.3}");
    }

    // Bigrams give more interpretable phrases.
    let bigram_vocab = build_vocab(&docs, 2_000, (2, 2)).unwrap();
    let bigram_weights = tfidf(&count_matrix(&docs, &bigram_vocab), &bigram_vocab).unwrap();
    println!("\ntop 10 bigrams:");
    for (term, score) in top_features(&bigram_weights, &bigram_vocab, 10) {
        println!("  {term:<24} {score:>9.3}");
    }
}
