//! Deterministic synthetic tweet-archive generator used by the examples,
//! the integration tests, and anyone who wants a runnable corpus without
//! real data. Output is newline-delimited JSON in the archive format and is
//! byte-identical for a given configuration.

use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::ingest::format_twitter_time;

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub n_tweets: usize,
    pub seed: u64,
    pub start: DateTime<Utc>,
    pub span_minutes: i64,
    /// Fraction of records that are retweets of earlier originals.
    pub retweet_fraction: f64,
    /// Minute (relative to start) after which mask-related chatter triples;
    /// gives changepoint detection something to find.
    pub step_minute: Option<i64>,
    /// Malformed lines injected to exercise lenient parsing.
    pub malformed_lines: usize,
    /// Retweets whose source timestamp is later than the retweet itself;
    /// these must be quarantined at ingest.
    pub negative_deltas: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_tweets: 10_000,
            seed: 42,
            start: Utc.with_ymd_and_hms(2020, 3, 24, 21, 0, 0).unwrap(),
            span_minutes: 90,
            retweet_fraction: 0.30,
            step_minute: Some(45),
            malformed_lines: 3,
            negative_deltas: 2,
        }
    }
}

const FILLER: [&str; 24] = [
    "people",
    "think",
    "really",
    "going",
    "need",
    "right",
    "still",
    "news",
    "world",
    "today",
    "great",
    "trump",
    "china",
    "deaths",
    "cases",
    "lockdown",
    "quarantine",
    "workers",
    "supplies",
    "stay",
    "home",
    "watch",
    "thanks",
    "update",
];

const KEYWORD_PHRASES: [&str; 14] = [
    "masks running low",
    "hospital beds full",
    "icu capacity stretched",
    "nurses need help",
    "doctors working hard",
    "ventilators on order",
    "tested positive yesterday",
    "serious condition reported",
    "exposure risk rising",
    "dry cough again",
    "fever and chills",
    "more hospital staff",
    "masks for nurses",
    "beds in hallways",
];

const MASK_PHRASES: [&str; 4] = [
    "wear a mask",
    "masks sold out",
    "mask mandate soon",
    "homemade mask patterns",
];

const URLS: [&str; 4] = [
    "https://t.co/ab12cd",
    "https://t.co/ef34gh",
    "http://example.org/brief",
    "https://t.co/xy99zz",
];

const MENTIONS: [&str; 4] = ["@WHO", "@CDCgov", "@Reuters", "@nycHealthy"];

const HASHTAGS: [&str; 4] = ["#covid19", "#coronavirus", "#StayHome", "#ppe"];

const NON_LATIN: [&str; 3] = ["مرحبا", "你好", "здоровье"];

const DESCRIPTIONS: [&str; 5] = [
    "",
    "news junkie and parent",
    "RN in the ICU",
    "official account of nothing",
    "politics, sports, memes",
];

const LANGS: [&str; 5] = ["en", "en", "en", "und", "es"];

fn tweet_text(rng: &mut ChaCha8Rng, mask_boost: bool) -> String {
    let mut parts: Vec<String> = Vec::new();
    let n_tokens = rng.gen_range(4..10);
    for _ in 0..n_tokens {
        let roll: f64 = rng.gen();
        let mask_cut = if mask_boost { 0.30 } else { 0.10 };
        if roll < mask_cut {
            parts.push(MASK_PHRASES[rng.gen_range(0..MASK_PHRASES.len())].to_string());
        } else if roll < mask_cut + 0.20 {
            parts.push(KEYWORD_PHRASES[rng.gen_range(0..KEYWORD_PHRASES.len())].to_string());
        } else if roll < mask_cut + 0.25 {
            parts.push(URLS[rng.gen_range(0..URLS.len())].to_string());
        } else if roll < mask_cut + 0.30 {
            parts.push(MENTIONS[rng.gen_range(0..MENTIONS.len())].to_string());
        } else if roll < mask_cut + 0.35 {
            parts.push(HASHTAGS[rng.gen_range(0..HASHTAGS.len())].to_string());
        } else if roll < mask_cut + 0.38 {
            parts.push(format!("{}", rng.gen_range(1..2000)));
        } else if roll < mask_cut + 0.41 {
            parts.push(NON_LATIN[rng.gen_range(0..NON_LATIN.len())].to_string());
        } else {
            parts.push(FILLER[rng.gen_range(0..FILLER.len())].to_string());
        }
    }
    parts.join(" ")
}

fn zipf_user(rng: &mut ChaCha8Rng, pool: usize) -> String {
    let u: f64 = rng.gen();
    format!("u{:04}", (pool as f64 * u.powf(2.2)) as usize)
}

struct Original {
    author_id: String,
    created_at: DateTime<Utc>,
    text: String,
}

/// Generate a full archive as one string of newline-delimited JSON records.
pub fn generate_archive(cfg: &SynthConfig) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let span_seconds = cfg.span_minutes * 60;
    let n_retweets = (cfg.n_tweets as f64 * cfg.retweet_fraction) as usize;
    let n_originals = cfg.n_tweets - n_retweets;

    // Originals arrive uniformly over the window, sorted by time.
    let mut offsets: Vec<i64> = (0..n_originals)
        .map(|_| rng.gen_range(0..span_seconds))
        .collect();
    offsets.sort_unstable();
    let mut originals = Vec::with_capacity(n_originals);
    for &off in &offsets {
        let created_at = cfg.start + Duration::seconds(off);
        let minute = off / 60;
        let mask_boost = cfg.step_minute.is_some_and(|m| minute >= m);
        originals.push(Original {
            author_id: zipf_user(&mut rng, 400),
            created_at,
            text: tweet_text(&mut rng, mask_boost),
        });
    }

    let mut records: Vec<(DateTime<Utc>, serde_json::Value)> = Vec::with_capacity(cfg.n_tweets);
    for (i, o) in originals.iter().enumerate() {
        let value = json!({
            "created_at": format_twitter_time(&o.created_at),
            "id_str": format!("{}", 100_000 + i),
            "text": o.text,
            "user": {
                "id_str": o.author_id,
                "description": DESCRIPTIONS[rng.gen_range(0..DESCRIPTIONS.len())],
            },
            "lang": LANGS[rng.gen_range(0..LANGS.len())],
        });
        records.push((o.created_at, value));
    }

    for i in 0..n_retweets {
        let o = &originals[rng.gen_range(0..originals.len())];
        // Log-normal-ish delay: median ~30 minutes with a heavy tail that
        // covers the benchmark time points from seconds to a week.
        let z: f64 = {
            let (u1, u2): (f64, f64) = (rng.gen::<f64>().max(1e-12), rng.gen());
            (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
        };
        let negative = i < cfg.negative_deltas;
        let delta_s = (7.5 + 2.2 * z).exp().clamp(1.0, 1_500_000.0) as i64;
        let retweet_at = if negative {
            o.created_at - Duration::seconds(60)
        } else {
            o.created_at + Duration::seconds(delta_s)
        };
        let retweeter = zipf_user(&mut rng, 400);
        let value = json!({
            "created_at": format_twitter_time(&retweet_at),
            "id_str": format!("{}", 500_000 + i),
            "text": format!("RT @{}: {}", o.author_id, o.text),
            "user": {
                "id_str": retweeter,
                "description": DESCRIPTIONS[rng.gen_range(0..DESCRIPTIONS.len())],
            },
            "lang": LANGS[rng.gen_range(0..LANGS.len())],
            "retweeted_status": {
                "created_at": format_twitter_time(&o.created_at),
                "text": o.text,
                "user": {"id_str": o.author_id},
            },
        });
        records.push((retweet_at, value));
    }

    records.sort_by_key(|(t, v)| (*t, v["id_str"].as_str().unwrap_or("").to_string()));
    let mut lines: Vec<String> = records.into_iter().map(|(_, v)| v.to_string()).collect();
    for i in 0..cfg.malformed_lines {
        let pos = (i + 1) * lines.len() / (cfg.malformed_lines + 1);
        lines.insert(pos.min(lines.len()), format!("not json at all {i}"));
    }
    let mut out = lines.join("\n");
    out.push('\n');
    out
}

/// Write the archive to a file.
pub fn write_archive(cfg: &SynthConfig, path: &std::path::Path) -> std::io::Result<()> {
    std::fs::write(path, generate_archive(cfg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{parse_archive_reader, Strictness};

    #[test]
    fn generation_is_byte_deterministic() {
        let cfg = SynthConfig {
            n_tweets: 200,
            ..SynthConfig::default()
        };
        assert_eq!(generate_archive(&cfg), generate_archive(&cfg));
        let other = SynthConfig { seed: 43, ..cfg };
        assert_ne!(generate_archive(&cfg), generate_archive(&other));
    }

    #[test]
    fn archive_parses_with_expected_counts() {
        let cfg = SynthConfig {
            n_tweets: 500,
            ..SynthConfig::default()
        };
        let text = generate_archive(&cfg);
        let parsed = parse_archive_reader(text.as_bytes(), Strictness::Lenient).unwrap();
        assert_eq!(parsed.report.lines, 500 + 3);
        assert_eq!(parsed.report.skipped, 3);
        assert_eq!(parsed.report.quarantined, 2);
        assert_eq!(parsed.report.parsed, 498);
        let retweets = parsed.records.iter().filter(|r| r.is_retweet()).count();
        assert_eq!(retweets, 150 - 2);
    }

    #[test]
    fn retweet_deltas_cover_benchmark_range() {
        let cfg = SynthConfig {
            n_tweets: 3000,
            ..SynthConfig::default()
        };
        let text = generate_archive(&cfg);
        let parsed = parse_archive_reader(text.as_bytes(), Strictness::Lenient).unwrap();
        let (events, _) = crate::cascade::collect_events(&parsed.records);
        let fast = events.iter().filter(|e| e.delta_seconds < 60.0).count();
        let slow = events.iter().filter(|e| e.delta_seconds > 86_400.0).count();
        assert!(fast > 0, "need sub-minute retweets");
        assert!(slow > 0, "need multi-day retweets");
    }
}
