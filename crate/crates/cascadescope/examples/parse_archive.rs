//! Parse a tweet archive, split originals from retweets, and print corpus
//! statistics.
//!
//! ```bash
//! cargo run --example parse_archive
//! ```

use cascadescope::ingest::{
    corpus_stats, filter_records, parse_archive_reader, FilterMode, Strictness,
};
use cascadescope::synth::{generate_archive, SynthConfig};

fn main() {
    let cfg = SynthConfig {
        n_tweets: 2_000,
        ..SynthConfig::default()
    };
    let archive = generate_archive(&cfg);

    let parsed = parse_archive_reader(archive.as_bytes(), Strictness::Lenient).unwrap();
    println!(
        "lines {}  parsed {}  skipped {}  quarantined {}",
        parsed.report.lines, parsed.report.parsed, parsed.report.skipped, parsed.report.quarantined
    );

    let stats = corpus_stats(&parsed.records).unwrap();
    println!(
        "total {}  originals {}  retweets {}  ({:.2}% originals)",
        stats.total_tweets,
        stats.non_retweets,
        stats.retweets,
        100.0 * stats.pct_non_retweets
    );
    println!(
        "window {} .. {}  ({} minutes)",
        stats.time_start, stats.time_end, stats.total_minutes
    );

    let originals = filter_records(parsed.records, FilterMode::OriginalsOnly);
    println!("records after originals-only filter: {}", originals.len());
    let sample = &originals[0];
    println!("first original: [{}] {:?}", sample.created_at, sample.text);
}
