//! Keyword pattern matching, per-minute bucketing, and weighted
//! moving-average smoothing over a synthetic corpus.
//!
//! ```bash
//! cargo run --example keyword_trends
//! ```

use cascadescope::ingest::{filter_records, parse_archive_reader, FilterMode, Strictness};
use cascadescope::synth::{generate_archive, SynthConfig};
use cascadescope::trends::{
    bucket_counts, match_corpus, per_minute_rate, round3, weighted_moving_average, PatternSet,
};

fn main() {
    let cfg = SynthConfig {
        n_tweets: 4_000,
        ..SynthConfig::default()
    };
    let parsed =
        parse_archive_reader(generate_archive(&cfg).as_bytes(), Strictness::Lenient).unwrap();
    let originals = filter_records(parsed.records, FilterMode::OriginalsOnly);

    let patterns = PatternSet::defaults();
    println!("patterns: {:?}\n", patterns.labels());

    let matched = match_corpus(&originals, &patterns);
    let series = bucket_counts(&matched, &patterns.labels()).unwrap();

    println!("{:<14} {:>7} {:>9}", "label", "total", "per-min");
    for (label, s) in &series {
        let rate = per_minute_rate(s.total() as u64, s.len() as u64).unwrap();
        println!("{label:<14} {:>7} {:>9.3}", s.total(), round3(rate));
    }

    // The synthetic corpus triples mask chatter mid-window; smoothing makes
    // the step obvious.
    let mask = &series["mask"];
    let smoothed = weighted_moving_average(mask, 10).unwrap();
    println!("\nmask counts by minute (raw -> smoothed):");
    for i in (0..mask.len()).step_by(9) {
        println!(
            "  {}  {:>4}  ->  {:>7.2}",
            mask.minute_utc(i).format("%H:%M"),
            mask.values[i],
            smoothed.values[i]
        );
    }
}
