//! Time-to-retweet statistics: median, mean, and the log-scale histogram of
//! retweet delays.
//!
//! ```bash
//! cargo run --example retweet_timing
//! ```

use cascadescope::cascade::{collect_events, retweet_stats};
use cascadescope::ingest::{parse_archive_reader, Strictness};
use cascadescope::synth::{generate_archive, SynthConfig};

fn main() {
    let cfg = SynthConfig {
        n_tweets: 8_000,
        ..SynthConfig::default()
    };
    let parsed =
        parse_archive_reader(generate_archive(&cfg).as_bytes(), Strictness::Lenient).unwrap();

    let (events, quarantined) = collect_events(&parsed.records);
    println!(
        "{} retweet events ({quarantined} quarantined for negative deltas)",
        events.len()
    );

    let stats = retweet_stats(&events).unwrap();
    println!(
        "median {:.2} h   mean {:.2} h",
        stats.median_s / 3600.0,
        stats.mean_s / 3600.0
    );

    println!("\nlog10(seconds) histogram (0.5-decade stride shown):");
    let max = stats.log_hist.counts.values().copied().max().unwrap_or(1) as f64;
    for (bin, count) in &stats.log_hist.counts {
        if bin % 5 != 0 {
            continue;
        }
        let lo = *bin as f64 * stats.log_hist.bin_width;
        let bar = "#".repeat((50.0 * *count as f64 / max).ceil() as usize);
        println!("  10^{lo:>4.1} s  {count:>5}  {bar}");
    }
}
