//! Newline-delimited tweet archive parsing, retweet classification, and
//! corpus statistics.

use std::io::BufRead;
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Datetime layout used by tweet archives, e.g. `Tue Mar 24 21:17:27 +0000 2020`.
pub const TWITTER_TIME_FORMAT: &str = "%a %b %d %H:%M:%S %z %Y";

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read archive {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("empty corpus")]
    EmptyCorpus,
}

/// Parse an archive timestamp; offsets are normalized to UTC.
pub fn parse_twitter_time(s: &str) -> Result<DateTime<Utc>, String> {
    DateTime::parse_from_str(s, TWITTER_TIME_FORMAT)
        .map(|dt| dt.with_timezone(&Utc))
        .map_err(|e| format!("bad created_at {s:?}: {e}"))
}

/// Render a timestamp in the archive format (always `+0000`).
pub fn format_twitter_time(dt: &DateTime<Utc>) -> String {
    dt.format(TWITTER_TIME_FORMAT).to_string()
}

/// Retweet metadata carried on a retweet record; presence of this block is
/// the ground truth for "is a retweet".
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetweetSource {
    pub source_author_id: String,
    pub source_created_at: DateTime<Utc>,
    pub source_text: String,
}

/// One parsed tweet.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TweetRecord {
    pub tweet_id: String,
    pub created_at: DateTime<Utc>,
    pub text: String,
    pub author_id: String,
    #[serde(default)]
    pub author_description: String,
    pub lang: String,
    #[serde(default)]
    pub retweet_source: Option<RetweetSource>,
}

impl TweetRecord {
    pub fn is_retweet(&self) -> bool {
        self.retweet_source.is_some()
    }

    /// UTC minute index (minutes since the Unix epoch, floored).
    pub fn minute_bucket(&self) -> i64 {
        self.created_at.timestamp().div_euclid(60)
    }
}

/// Three-way classification used by the filter partition property.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordClass {
    Original,
    SourcedRetweet,
    PrefixOnlyRetweet,
}

pub fn classify(record: &TweetRecord) -> RecordClass {
    if record.retweet_source.is_some() {
        RecordClass::SourcedRetweet
    } else if record.text.starts_with("RT @") {
        RecordClass::PrefixOnlyRetweet
    } else {
        RecordClass::Original
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strictness {
    Strict,
    Lenient,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterMode {
    OriginalsOnly,
    RetweetsOnly,
    All,
}

/// Line-count summary of one parse run.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseReport {
    pub lines: u64,
    pub parsed: u64,
    pub skipped: u64,
    pub quarantined: u64,
}

/// Parse result: the record stream in file order, quarantined records
/// (retweets whose source timestamp is later than the retweet itself), and
/// the report.
#[derive(Debug, Clone)]
pub struct ParsedArchive {
    pub records: Vec<TweetRecord>,
    pub quarantined: Vec<TweetRecord>,
    pub report: ParseReport,
}

#[derive(Deserialize)]
struct RawUser {
    id_str: Option<String>,
    description: Option<String>,
}

#[derive(Deserialize)]
struct RawRetweetedStatus {
    created_at: Option<String>,
    text: Option<String>,
    full_text: Option<String>,
    user: Option<RawUser>,
}

#[derive(Deserialize)]
struct RawTweet {
    created_at: Option<String>,
    id_str: Option<String>,
    text: Option<String>,
    full_text: Option<String>,
    user: Option<RawUser>,
    lang: Option<String>,
    retweeted_status: Option<RawRetweetedStatus>,
}

fn record_from_line(line: &str) -> Result<TweetRecord, String> {
    let raw: RawTweet = serde_json::from_str(line).map_err(|e| format!("invalid json: {e}"))?;
    let created_at = parse_twitter_time(&raw.created_at.ok_or("missing created_at")?)?;
    // full_text is preferred over text to avoid 140-character truncation.
    let text = raw
        .full_text
        .or(raw.text)
        .ok_or("missing text and full_text")?;
    let user = raw.user.ok_or("missing user")?;
    let author_id = user.id_str.ok_or("missing user.id_str")?;
    let retweet_source = match raw.retweeted_status {
        None => None,
        Some(rs) => {
            let source_created_at =
                parse_twitter_time(&rs.created_at.ok_or("missing retweeted_status.created_at")?)?;
            let source_author_id = rs
                .user
                .ok_or("missing retweeted_status.user")?
                .id_str
                .ok_or("missing retweeted_status.user.id_str")?;
            Some(RetweetSource {
                source_author_id,
                source_created_at,
                source_text: rs.full_text.or(rs.text).unwrap_or_default(),
            })
        }
    };
    Ok(TweetRecord {
        tweet_id: raw.id_str.unwrap_or_default(),
        created_at,
        text,
        author_id,
        author_description: user.description.unwrap_or_default(),
        lang: raw.lang.unwrap_or_else(|| "und".to_string()),
        retweet_source,
    })
}

/// Parse an archive from any line source. Parsing is pure: the same bytes
/// yield the same record stream and report.
pub fn parse_archive_reader<R: BufRead>(
    reader: R,
    strictness: Strictness,
) -> Result<ParsedArchive, IngestError> {
    let mut out = ParsedArchive {
        records: Vec::new(),
        quarantined: Vec::new(),
        report: ParseReport::default(),
    };
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|source| IngestError::Io {
            path: format!("<line {line_no}>"),
            source,
        })?;
        out.report.lines += 1;
        match record_from_line(&line) {
            Ok(record) => {
                let violates_order = record
                    .retweet_source
                    .as_ref()
                    .is_some_and(|rs| rs.source_created_at > record.created_at);
                if violates_order {
                    out.report.quarantined += 1;
                    out.quarantined.push(record);
                } else {
                    out.report.parsed += 1;
                    out.records.push(record);
                }
            }
            Err(reason) => match strictness {
                Strictness::Strict => {
                    return Err(IngestError::Malformed {
                        line: line_no,
                        reason,
                    })
                }
                Strictness::Lenient => {
                    log::debug!("skipping line {line_no}: {reason}");
                    out.report.skipped += 1;
                }
            },
        }
    }
    Ok(out)
}

/// Parse a newline-delimited JSON tweet archive from disk.
pub fn parse_archive(path: &Path, strictness: Strictness) -> Result<ParsedArchive, IngestError> {
    let file = std::fs::File::open(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_archive_reader(std::io::BufReader::new(file), strictness)
}

/// Keep records matching `mode`. `OriginalsOnly` drops records carrying a
/// retweet block and, mirroring the original regex filter, records whose
/// text begins with `RT @`.
pub fn filter_records(mut records: Vec<TweetRecord>, mode: FilterMode) -> Vec<TweetRecord> {
    match mode {
        FilterMode::All => records,
        FilterMode::OriginalsOnly => {
            records.retain(|r| classify(r) == RecordClass::Original);
            records
        }
        FilterMode::RetweetsOnly => {
            records.retain(|r| r.retweet_source.is_some());
            records
        }
    }
}

/// Corpus-wide counts and time span.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub total_tweets: u64,
    pub non_retweets: u64,
    pub retweets: u64,
    pub pct_non_retweets: f64,
    pub time_start: DateTime<Utc>,
    pub time_end: DateTime<Utc>,
    pub total_minutes: u64,
}

pub fn corpus_stats(records: &[TweetRecord]) -> Result<CorpusStats, IngestError> {
    if records.is_empty() {
        return Err(IngestError::EmptyCorpus);
    }
    let retweets = records.iter().filter(|r| r.is_retweet()).count() as u64;
    let total = records.len() as u64;
    let time_start = records
        .iter()
        .map(|r| r.created_at)
        .min()
        .expect("non-empty");
    let time_end = records
        .iter()
        .map(|r| r.created_at)
        .max()
        .expect("non-empty");
    let span_seconds = (time_end - time_start).num_seconds();
    Ok(CorpusStats {
        total_tweets: total,
        non_retweets: total - retweets,
        retweets,
        pct_non_retweets: (total - retweets) as f64 / total as f64,
        time_start,
        time_end,
        total_minutes: span_seconds.div_euclid(60) as u64
            + u64::from(span_seconds.rem_euclid(60) != 0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn line(id: u32, created: &str, text: &str, rt: Option<(&str, &str)>) -> String {
        let mut v = serde_json::json!({
            "created_at": created,
            "id_str": id.to_string(),
            "text": text,
            "user": {"id_str": format!("u{id}"), "description": "d"},
            "lang": "en",
        });
        if let Some((rt_created, rt_user)) = rt {
            v["retweeted_status"] = serde_json::json!({
                "created_at": rt_created,
                "text": "original text",
                "user": {"id_str": rt_user},
            });
        }
        v.to_string()
    }

    #[test]
    fn timestamp_round_trips() {
        let s = "Tue Mar 24 21:17:27 +0000 2020";
        let dt = parse_twitter_time(s).unwrap();
        assert_eq!(format_twitter_time(&dt), s);
    }

    #[test]
    fn timestamps_normalize_to_utc() {
        let dt = parse_twitter_time("Tue Mar 24 21:17:27 +0500 2020").unwrap();
        assert_eq!(dt, Utc.with_ymd_and_hms(2020, 3, 24, 16, 17, 27).unwrap());
        assert_eq!(dt.timestamp().div_euclid(60) * 60, dt.timestamp() - 27);
    }

    #[test]
    fn retweeted_status_presence_maps_to_retweet_source() {
        let l = line(
            1,
            "Tue Mar 24 21:17:27 +0000 2020",
            "RT @x: hi",
            Some(("Tue Mar 24 20:00:00 +0000 2020", "ux")),
        );
        let archive = parse_archive_reader(l.as_bytes(), Strictness::Strict).unwrap();
        let r = &archive.records[0];
        let rs = r.retweet_source.as_ref().unwrap();
        assert_eq!(rs.source_author_id, "ux");
        assert_eq!(rs.source_text, "original text");
    }

    #[test]
    fn empty_file_gives_empty_stream() {
        let archive = parse_archive_reader("".as_bytes(), Strictness::Strict).unwrap();
        assert!(archive.records.is_empty());
        assert_eq!(
            archive.report,
            ParseReport {
                lines: 0,
                parsed: 0,
                skipped: 0,
                quarantined: 0
            }
        );
    }

    #[test]
    fn ten_line_fixture_with_three_retweets() {
        let mut lines = Vec::new();
        for i in 0..10u32 {
            let rt = if i % 4 == 1 {
                Some(("Tue Mar 24 20:00:00 +0000 2020", "src"))
            } else {
                None
            };
            lines.push(line(i, "Tue Mar 24 21:17:27 +0000 2020", "hello world", rt));
        }
        let archive =
            parse_archive_reader(lines.join("\n").as_bytes(), Strictness::Strict).unwrap();
        assert_eq!(archive.records.len(), 10);
        assert_eq!(archive.records.iter().filter(|r| r.is_retweet()).count(), 3);
    }

    #[test]
    fn lenient_skips_and_counts_malformed_lines() {
        let text = format!(
            "{}\nnot json\n{}",
            line(1, "Tue Mar 24 21:17:27 +0000 2020", "a", None),
            "{\"id_str\": \"2\"}"
        );
        let archive = parse_archive_reader(text.as_bytes(), Strictness::Lenient).unwrap();
        assert_eq!(
            archive.report,
            ParseReport {
                lines: 3,
                parsed: 1,
                skipped: 2,
                quarantined: 0
            }
        );
    }

    #[test]
    fn strict_mode_reports_line_number() {
        let text = format!(
            "{}\nnot json",
            line(1, "Tue Mar 24 21:17:27 +0000 2020", "a", None)
        );
        let err = parse_archive_reader(text.as_bytes(), Strictness::Strict).unwrap_err();
        match err {
            IngestError::Malformed { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn retweet_from_future_is_quarantined_not_dropped() {
        let l = line(
            1,
            "Tue Mar 24 21:17:27 +0000 2020",
            "RT @x: hi",
            Some(("Tue Mar 24 22:00:00 +0000 2020", "ux")),
        );
        let archive = parse_archive_reader(l.as_bytes(), Strictness::Lenient).unwrap();
        assert!(archive.records.is_empty());
        assert_eq!(archive.quarantined.len(), 1);
        assert_eq!(archive.report.quarantined, 1);
    }

    #[test]
    fn full_text_preferred_over_text() {
        let l = serde_json::json!({
            "created_at": "Tue Mar 24 21:17:27 +0000 2020",
            "id_str": "1",
            "text": "truncated…",
            "full_text": "the whole long text",
            "user": {"id_str": "u1"},
        })
        .to_string();
        let archive = parse_archive_reader(l.as_bytes(), Strictness::Strict).unwrap();
        assert_eq!(archive.records[0].text, "the whole long text");
        assert_eq!(archive.records[0].lang, "und");
        assert_eq!(archive.records[0].author_description, "");
    }

    fn fixture_records(n_orig: usize, n_rt: usize, prefix_rt: usize) -> Vec<TweetRecord> {
        let base = Utc.with_ymd_and_hms(2020, 3, 24, 14, 0, 0).unwrap();
        let mut recs = Vec::new();
        for i in 0..n_orig {
            recs.push(TweetRecord {
                tweet_id: format!("o{i}"),
                created_at: base + chrono::Duration::seconds(i as i64),
                text: "original".into(),
                author_id: "a".into(),
                author_description: String::new(),
                lang: "en".into(),
                retweet_source: None,
            });
        }
        for i in 0..n_rt {
            recs.push(TweetRecord {
                tweet_id: format!("r{i}"),
                created_at: base + chrono::Duration::seconds(100 + i as i64),
                text: "RT @a: original".into(),
                author_id: "b".into(),
                author_description: String::new(),
                lang: "en".into(),
                retweet_source: Some(RetweetSource {
                    source_author_id: "a".into(),
                    source_created_at: base,
                    source_text: "original".into(),
                }),
            });
        }
        for i in 0..prefix_rt {
            recs.push(TweetRecord {
                tweet_id: format!("p{i}"),
                created_at: base + chrono::Duration::seconds(200 + i as i64),
                text: "RT @someone: manual retweet".into(),
                author_id: "c".into(),
                author_description: String::new(),
                lang: "en".into(),
                retweet_source: None,
            });
        }
        recs
    }

    #[test]
    fn originals_only_excludes_rt_prefix_and_sourced_retweets() {
        let recs = fixture_records(8, 2, 1);
        assert_eq!(
            filter_records(recs.clone(), FilterMode::OriginalsOnly).len(),
            8
        );
        assert_eq!(
            filter_records(recs.clone(), FilterMode::RetweetsOnly).len(),
            2
        );
        assert_eq!(filter_records(recs, FilterMode::All).len(), 11);
    }

    #[test]
    fn classification_partitions_records() {
        let recs = fixture_records(5, 3, 2);
        let originals = recs
            .iter()
            .filter(|r| classify(r) == RecordClass::Original)
            .count();
        let sourced = recs
            .iter()
            .filter(|r| classify(r) == RecordClass::SourcedRetweet)
            .count();
        let prefix = recs
            .iter()
            .filter(|r| classify(r) == RecordClass::PrefixOnlyRetweet)
            .count();
        assert_eq!(originals + sourced + prefix, recs.len());
        assert_eq!((originals, sourced, prefix), (5, 3, 2));
    }

    #[test]
    fn corpus_stats_counts_and_span() {
        let base = Utc.with_ymd_and_hms(2020, 3, 24, 14, 0, 0).unwrap();
        let mut recs = fixture_records(1, 1, 0);
        recs[0].created_at = base;
        recs[1].created_at = Utc.with_ymd_and_hms(2020, 3, 24, 14, 43, 30).unwrap();
        let stats = corpus_stats(&recs).unwrap();
        assert_eq!(stats.total_tweets, 2);
        assert_eq!(stats.non_retweets, 1);
        assert_eq!(stats.retweets, 1);
        assert_eq!(stats.total_minutes, 44);
        assert!((stats.pct_non_retweets - 0.5).abs() < 1e-12);
    }

    #[test]
    fn corpus_stats_single_record_and_empty() {
        let recs = fixture_records(1, 0, 0);
        let stats = corpus_stats(&recs).unwrap();
        assert_eq!(stats.total_tweets, 1);
        assert_eq!(stats.pct_non_retweets, 1.0);
        assert_eq!(stats.total_minutes, 0);
        assert!(matches!(corpus_stats(&[]), Err(IngestError::EmptyCorpus)));
    }

    #[test]
    fn table_v_march_24_row_is_arithmetically_consistent() {
        // 3/24/2020: 132,658 total, 27,374 non-retweets, printed as 20.64%.
        let pct = 27374.0_f64 / 132658.0 * 100.0;
        assert!((pct - 20.64).abs() < 0.005);
        // 21:17:27 to 22:00:48 spans 2601 seconds, printed as 44 minutes.
        let start = parse_twitter_time("Tue Mar 24 21:17:27 +0000 2020").unwrap();
        let end = parse_twitter_time("Tue Mar 24 22:00:48 +0000 2020").unwrap();
        let span = (end - start).num_seconds();
        assert_eq!(
            span.div_euclid(60) + i64::from(span.rem_euclid(60) != 0),
            44
        );
    }

    #[test]
    fn parsing_is_pure() {
        let text = format!(
            "{}\n{}",
            line(1, "Tue Mar 24 21:17:27 +0000 2020", "a", None),
            line(2, "Tue Mar 24 21:18:00 +0000 2020", "b", None)
        );
        let a = parse_archive_reader(text.as_bytes(), Strictness::Lenient).unwrap();
        let b = parse_archive_reader(text.as_bytes(), Strictness::Lenient).unwrap();
        assert_eq!(a.records, b.records);
        assert_eq!(a.report, b.report);
    }
}
