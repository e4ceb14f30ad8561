//! Deterministic text normalization: lowercasing, URL/mention removal,
//! non-Latin stripping, digit removal, stopword filtering, and Porter
//! stemming, in a fixed rule order.

pub mod porter;

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::TweetRecord;

#[derive(Debug, Error)]
pub enum TextprepError {
    #[error("cannot read stopword file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Stopwords appended to the base list for this corpus.
pub const DEFAULT_EXTENSIONS: [&str; 4] = ["coronavirus", "covid19", "19", "covid"];

const BASE_STOPWORDS: &str = include_str!("../../data/stopwords_en.txt");

/// A base stopword list plus corpus-specific extensions. Matching happens on
/// raw (pre-stem) tokens.
#[derive(Debug, Clone)]
pub struct StopwordList {
    base: HashSet<String>,
    extensions: HashSet<String>,
}

impl StopwordList {
    /// The pinned 179-word English list with the default extensions.
    pub fn default_english() -> Self {
        Self {
            base: parse_word_lines(BASE_STOPWORDS),
            extensions: DEFAULT_EXTENSIONS.iter().map(|s| s.to_string()).collect(),
        }
    }

    /// Load a base list from a file (one word per line, `#` comments). The
    /// default extensions still apply.
    pub fn from_file(path: &Path) -> Result<Self, TextprepError> {
        let text = std::fs::read_to_string(path).map_err(|source| TextprepError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Ok(Self {
            base: parse_word_lines(&text),
            extensions: DEFAULT_EXTENSIONS.iter().map(|s| s.to_string()).collect(),
        })
    }

    /// Replace the extension set.
    pub fn with_extensions<I: IntoIterator<Item = String>>(mut self, extensions: I) -> Self {
        self.extensions = extensions.into_iter().collect();
        self
    }

    pub fn contains(&self, word: &str) -> bool {
        self.base.contains(word) || self.extensions.contains(word)
    }

    pub fn base_len(&self) -> usize {
        self.base.len()
    }

    pub fn extensions(&self) -> &HashSet<String> {
        &self.extensions
    }
}

fn parse_word_lines(text: &str) -> HashSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.to_string())
        .collect()
}

/// One preprocessed tweet: stemmed tokens plus a back-reference to the tweet
/// and its UTC minute bucket (minutes since the Unix epoch).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub tweet_id: String,
    pub minute: i64,
    pub tokens: Vec<String>,
}

impl Document {
    /// Documents that normalized to nothing are retained but flagged.
    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

fn is_kept_char(c: char) -> bool {
    if c.is_ascii_alphanumeric() || c == ' ' {
        return true;
    }
    // Latin-1 letters; digits survive until the dedicated digit rule.
    ('\u{00C0}'..='\u{00FF}').contains(&c) && c != '\u{00D7}' && c != '\u{00F7}'
}

/// Normalize raw tweet text. Fixed rule order: lowercase, drop URL tokens,
/// drop @-mention tokens, strip non-Latin characters, remove digits,
/// collapse whitespace. Character stripping can fuse fragments into a token
/// with an `http` prefix, so the token filter runs once more at the end;
/// this makes the function idempotent.
pub fn normalize(text: &str) -> String {
    let lowered = text.to_lowercase();
    let kept: Vec<&str> = lowered
        .split_whitespace()
        .filter(|t| !t.starts_with("http") && !t.starts_with('@'))
        .collect();
    let joined = kept.join(" ");
    let stripped: String = joined
        .chars()
        .filter(|&c| is_kept_char(c))
        .filter(|c| !c.is_ascii_digit())
        .collect();
    let tokens: Vec<&str> = stripped
        .split_whitespace()
        .filter(|t| !t.starts_with("http") && !t.starts_with('@'))
        .collect();
    tokens.join(" ")
}

/// Tokenize normalized text: whitespace split, stopword removal, minimum
/// length of three characters, then Porter stemming. Order preserved.
pub fn tokenize_stem(cleaned: &str, stopwords: &StopwordList) -> Vec<String> {
    cleaned
        .split_whitespace()
        .filter(|t| !stopwords.contains(t))
        .filter(|t| t.chars().count() >= 3)
        .map(porter::stem)
        .collect()
}

/// Run the full pipeline over records, producing one `Document` per record
/// in input order.
pub fn preprocess_corpus(records: &[TweetRecord], stopwords: &StopwordList) -> Vec<Document> {
    records
        .iter()
        .map(|r| Document {
            tweet_id: r.tweet_id.clone(),
            minute: r.minute_bucket(),
            tokens: tokenize_stem(&normalize(&r.text), stopwords),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn normalize_ordered_rules() {
        assert_eq!(
            normalize("Check https://t.co/xyz @WHO 19 cases!"),
            "check cases"
        );
        assert_eq!(normalize(""), "");
        assert_eq!(normalize("مرحبا hello 你好"), "hello");
    }

    #[test]
    fn normalize_keeps_hashtag_words_and_fused_contractions() {
        assert_eq!(normalize("#StayHome don't"), "stayhome dont");
        assert_eq!(normalize("café TIME"), "café time");
    }

    #[test]
    fn normalize_idempotent_on_resurrected_url_prefix() {
        // '#' stripping would otherwise resurrect an http-prefixed token.
        let once = normalize("#https leftover");
        assert_eq!(once, "leftover");
        assert_eq!(normalize(&once), once);
    }

    #[test]
    fn tokenize_stem_examples() {
        let sw = StopwordList::default_english();
        assert_eq!(
            tokenize_stem("hospitals doctors masks", &sw),
            vec!["hospit", "doctor", "mask"]
        );
        assert_eq!(
            tokenize_stem("covid coronavirus the a", &sw),
            Vec::<String>::new()
        );
        assert_eq!(
            tokenize_stem("ventilators ventilator", &sw),
            vec!["ventil", "ventil"]
        );
    }

    #[test]
    fn base_list_is_pinned() {
        let sw = StopwordList::default_english();
        assert_eq!(sw.base_len(), 179);
        for w in DEFAULT_EXTENSIONS {
            assert!(sw.contains(w), "{w} must be a stopword");
        }
        assert!(sw.contains("the"));
        assert!(!sw.contains("mask"));
    }

    #[test]
    fn preprocess_preserves_order_and_flags_empty() {
        use chrono::TimeZone;
        let sw = StopwordList::default_english();
        let base = chrono::Utc
            .with_ymd_and_hms(2020, 3, 24, 21, 17, 3)
            .unwrap();
        let mk = |id: &str, text: &str, secs: i64| TweetRecord {
            tweet_id: id.to_string(),
            created_at: base + chrono::Duration::seconds(secs),
            text: text.to_string(),
            author_id: "u1".to_string(),
            author_description: String::new(),
            lang: "en".to_string(),
            retweet_source: None,
        };
        let records = vec![
            mk("1", "masks needed at hospitals", 0),
            mk("2", "@only_mention 19", 30),
            mk("3", "ventilators", 90),
        ];
        let docs = preprocess_corpus(&records, &sw);
        assert_eq!(docs.len(), 3);
        assert_eq!(docs[0].tweet_id, "1");
        assert_eq!(docs[0].tokens, vec!["mask", "need", "hospit"]);
        assert!(docs[1].is_empty());
        assert_eq!(docs[2].minute - docs[0].minute, 1);
    }

    /// A second, independently structured pipeline: regex-style character
    /// classes and a different composition order for the same rule set.
    fn reference_pipeline(text: &str, sw: &StopwordList) -> Vec<String> {
        let mut kept_words: Vec<String> = Vec::new();
        for word in text.to_lowercase().split_whitespace() {
            if word.starts_with("http") || word.starts_with('@') {
                continue;
            }
            let filtered: String = word
                .chars()
                .filter(|c| {
                    c.is_ascii_lowercase()
                        || (('\u{00C0}'..='\u{00FF}').contains(c)
                            && *c != '\u{00D7}'
                            && *c != '\u{00F7}')
                })
                .collect();
            for piece in filtered.split_whitespace() {
                if !piece.starts_with("http") {
                    kept_words.push(piece.to_string());
                }
            }
        }
        kept_words
            .into_iter()
            .filter(|w| !sw.contains(w))
            .filter(|w| w.chars().count() >= 3)
            .map(|w| porter::stem(&w))
            .collect()
    }

    #[test]
    fn pipeline_matches_independent_reference_on_100_records() {
        use chrono::TimeZone;
        let sw = StopwordList::default_english();
        let base = chrono::Utc.with_ymd_and_hms(2020, 3, 24, 21, 0, 0).unwrap();
        let pieces = [
            "Masks running LOW",
            "https://t.co/abc",
            "@CDCgov",
            "#StayHome",
            "19 cases",
            "doctors and nurses",
            "مرحبا",
            "ventilators needed",
            "don't panic",
            "ICU beds",
        ];
        let records: Vec<TweetRecord> = (0..100)
            .map(|i| {
                let text: Vec<&str> = (0..(i % 7 + 1))
                    .map(|j| pieces[(i * 3 + j * 5) % pieces.len()])
                    .collect();
                TweetRecord {
                    tweet_id: i.to_string(),
                    created_at: base + chrono::Duration::seconds(i as i64 * 13),
                    text: text.join(" "),
                    author_id: "u".into(),
                    author_description: String::new(),
                    lang: "en".into(),
                    retweet_source: None,
                }
            })
            .collect();
        let docs = preprocess_corpus(&records, &sw);
        let mut ours: Vec<&String> = docs.iter().flat_map(|d| &d.tokens).collect();
        let reference: Vec<Vec<String>> = records
            .iter()
            .map(|r| reference_pipeline(&r.text, &sw))
            .collect();
        let mut theirs: Vec<&String> = reference.iter().flatten().collect();
        ours.sort();
        theirs.sort();
        assert_eq!(ours, theirs, "token multisets must agree");
        for (doc, expected) in docs.iter().zip(&reference) {
            assert_eq!(&doc.tokens, expected);
        }
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(s in "\\PC*") {
            let once = normalize(&s);
            prop_assert_eq!(normalize(&once), once);
        }

        #[test]
        fn tokens_satisfy_document_invariants(s in "\\PC*") {
            let sw = StopwordList::default_english();
            let cleaned = normalize(&s);
            for tok in tokenize_stem(&cleaned, &sw) {
                prop_assert!(!tok.is_empty());
                prop_assert!(!tok.contains(|c: char| c.is_ascii_digit()));
                prop_assert!(!tok.contains('@'));
                prop_assert!(!tok.contains("https"));
                prop_assert!(tok.chars().all(is_kept_char), "token {:?}", tok);
            }
        }

        #[test]
        fn normalized_tweets_drop_urls_and_mentions(
            words in proptest::collection::vec("[a-zA-Z]{1,8}", 0..6),
            with_url in proptest::bool::ANY,
            with_mention in proptest::bool::ANY,
        ) {
            let mut parts = words.clone();
            if with_url { parts.push("https://t.co/Ab1".to_string()); }
            if with_mention { parts.push("@Somebody".to_string()); }
            let cleaned = normalize(&parts.join(" "));
            prop_assert!(!cleaned.contains("http"));
            prop_assert!(!cleaned.contains('@'));
        }
    }
}
