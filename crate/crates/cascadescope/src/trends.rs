//! Keyword pattern extraction and per-minute time series with weighted
//! moving-average smoothing.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use chrono::{DateTime, TimeZone, Utc};
use regex::Regex;
use thiserror::Error;

use crate::ingest::TweetRecord;
use crate::textprep::normalize;

#[derive(Debug, Error)]
pub enum TrendsError {
    #[error("cannot read pattern file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid pattern file: {0}")]
    PatternFile(String),
    #[error("pattern {label:?} does not compile: {source}")]
    BadPattern {
        label: String,
        #[source]
        source: regex::Error,
    },
    #[error("empty time window")]
    EmptyWindow,
    #[error("per-minute rate over zero minutes")]
    ZeroMinutes,
    #[error("smoothing window must be at least 1")]
    ZeroWindow,
}

/// The thirteen default labels with their patterns. Plain labels match as
/// substrings of the normalized text; the compound labels and the `vent`
/// prefix are explicit choices and can be overridden via a pattern file.
pub const DEFAULT_PATTERNS: [(&str, &str); 13] = [
    ("bed", "bed"),
    ("hospital", "hospital"),
    ("mask", "mask"),
    ("icu", "icu"),
    ("help", "help"),
    ("nurse", "nurse"),
    ("doctors", "doctors"),
    ("vent", "vent"),
    ("test_pos", r"test(ed)?\s+positive"),
    ("serious_cond", r"serious\s+condition"),
    ("exposure", "exposure"),
    ("cough", "cough"),
    ("fever", "fever"),
];

/// Compiled, labeled regular expressions, ordered by label.
#[derive(Debug, Clone)]
pub struct PatternSet {
    patterns: Vec<(String, Regex)>,
}

impl PatternSet {
    /// The thirteen default keyword patterns.
    pub fn defaults() -> Self {
        Self::from_pairs(
            DEFAULT_PATTERNS
                .iter()
                .map(|(l, p)| (l.to_string(), p.to_string())),
        )
        .expect("default patterns compile")
    }

    /// Build from `label = "regex"` pairs; all patterns compile at load time.
    pub fn from_pairs<I: IntoIterator<Item = (String, String)>>(
        pairs: I,
    ) -> Result<Self, TrendsError> {
        let mut patterns = Vec::new();
        for (label, pattern) in pairs {
            let regex = Regex::new(&pattern).map_err(|source| TrendsError::BadPattern {
                label: label.clone(),
                source,
            })?;
            patterns.push((label, regex));
        }
        patterns.sort_by(|a, b| a.0.cmp(&b.0));
        Ok(Self { patterns })
    }

    /// Parse a TOML pattern file of `label = "regex"` lines.
    pub fn from_toml_str(text: &str) -> Result<Self, TrendsError> {
        let table: toml::Table = text
            .parse()
            .map_err(|e| TrendsError::PatternFile(format!("{e}")))?;
        let mut pairs = Vec::new();
        for (label, value) in table {
            let pattern = value.as_str().ok_or_else(|| {
                TrendsError::PatternFile(format!("{label}: value must be a string"))
            })?;
            pairs.push((label, pattern.to_string()));
        }
        Self::from_pairs(pairs)
    }

    pub fn from_file(path: &Path) -> Result<Self, TrendsError> {
        let text = std::fs::read_to_string(path).map_err(|source| TrendsError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn labels(&self) -> Vec<String> {
        self.patterns.iter().map(|(l, _)| l.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    /// Labels whose pattern matches anywhere in the (normalized) text. A
    /// tweet may carry several labels; match never fails.
    pub fn match_text(&self, text: &str) -> BTreeSet<String> {
        self.patterns
            .iter()
            .filter(|(_, re)| re.is_match(text))
            .map(|(l, _)| l.clone())
            .collect()
    }
}

/// A record reduced to its minute bucket and matched labels.
#[derive(Debug, Clone)]
pub struct MatchedRecord {
    pub minute: i64,
    pub labels: BTreeSet<String>,
}

/// Normalize each record's text and match it against the pattern set.
/// Matching runs on normalized, pre-stem text.
pub fn match_corpus(records: &[TweetRecord], patterns: &PatternSet) -> Vec<MatchedRecord> {
    records
        .iter()
        .map(|r| MatchedRecord {
            minute: r.minute_bucket(),
            labels: patterns.match_text(&normalize(&r.text)),
        })
        .collect()
}

/// Data-parallel variant of [`match_corpus`]; record order (and therefore
/// every downstream series) is identical to the sequential path.
pub fn match_corpus_parallel(records: &[TweetRecord], patterns: &PatternSet) -> Vec<MatchedRecord> {
    use rayon::prelude::*;
    records
        .par_iter()
        .map(|r| MatchedRecord {
            minute: r.minute_bucket(),
            labels: patterns.match_text(&normalize(&r.text)),
        })
        .collect()
}

/// A contiguous per-minute series; gaps are explicit zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub name: String,
    pub t0_minute: i64,
    pub values: Vec<f64>,
}

impl TimeSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// UTC timestamp of the start of minute `i`.
    pub fn minute_utc(&self, i: usize) -> DateTime<Utc> {
        Utc.timestamp_opt((self.t0_minute + i as i64) * 60, 0)
            .unwrap()
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// Count matching tweets per minute for every label. The series span the
/// full window of the input records, so trailing and leading zero minutes
/// are explicit.
pub fn bucket_counts(
    matched: &[MatchedRecord],
    labels: &[String],
) -> Result<BTreeMap<String, TimeSeries>, TrendsError> {
    let t0 = matched
        .iter()
        .map(|m| m.minute)
        .min()
        .ok_or(TrendsError::EmptyWindow)?;
    let t1 = matched.iter().map(|m| m.minute).max().expect("non-empty");
    let len = (t1 - t0 + 1) as usize;
    let mut out: BTreeMap<String, TimeSeries> = labels
        .iter()
        .map(|l| {
            (
                l.clone(),
                TimeSeries {
                    name: l.clone(),
                    t0_minute: t0,
                    values: vec![0.0; len],
                },
            )
        })
        .collect();
    for m in matched {
        let idx = (m.minute - t0) as usize;
        for label in &m.labels {
            if let Some(series) = out.get_mut(label) {
                series.values[idx] += 1.0;
            }
        }
    }
    Ok(out)
}

/// Average tweets per minute. Presentation rounds to three decimals; the
/// raw quotient is returned.
pub fn per_minute_rate(total: u64, minutes: u64) -> Result<f64, TrendsError> {
    if minutes == 0 {
        return Err(TrendsError::ZeroMinutes);
    }
    Ok(total as f64 / minutes as f64)
}

/// Round to the three decimals used in reports.
pub fn round3(x: f64) -> f64 {
    (x * 1000.0).round() / 1000.0
}

/// Linearly-weighted moving average with recent-heavier weights. At index t
/// the window holds the last `min(window, t+1)` samples; the newest sample
/// gets the largest weight. Weights are truncated (recomputed for the
/// shorter window) at the series start, so constants are preserved
/// everywhere. A window longer than the series is clamped with a warning.
pub fn weighted_moving_average(
    series: &TimeSeries,
    window: usize,
) -> Result<TimeSeries, TrendsError> {
    if window == 0 {
        return Err(TrendsError::ZeroWindow);
    }
    let n = series.values.len();
    let mut w = window;
    if w > n && n > 0 {
        log::warn!("smoothing window {window} exceeds series length {n}; clamping");
        w = n;
    }
    let mut values = Vec::with_capacity(n);
    for t in 0..n {
        let wt = w.min(t + 1);
        let mut num = 0.0;
        for i in 0..wt {
            num += (wt - i) as f64 * series.values[t - i];
        }
        let den = (wt * (wt + 1) / 2) as f64;
        values.push(num / den);
    }
    Ok(TimeSeries {
        name: series.name.clone(),
        t0_minute: series.t0_minute,
        values,
    })
}
