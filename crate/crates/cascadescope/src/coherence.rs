//! C_v topic coherence: boolean sliding-window statistics, NPMI context
//! vectors, and cosine aggregation.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::textprep::Document;

pub const DEFAULT_WINDOW_WIDTH: usize = 110;
pub const DEFAULT_EPSILON: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum CoherenceError {
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("window width must be at least 1")]
    ZeroWidth,
}

/// Boolean sliding-window occurrence and co-occurrence counts. A document of
/// length L contributes `max(1, L - width + 1)` windows; occurrence is
/// boolean per window. Windows never span document boundaries.
#[derive(Debug, Clone)]
pub struct WindowStats {
    pub window_width: usize,
    pub n_windows: u64,
    occurrence: HashMap<String, u64>,
    co_occurrence: HashMap<(String, String), u64>,
    pub epsilon: f64,
}

impl WindowStats {
    /// Count windows over tokenized documents. When `tracked` is given only
    /// those terms are counted, which keeps pair counting affordable on
    /// large corpora; `None` tracks every term.
    pub fn from_documents(
        documents: &[Document],
        width: usize,
        tracked: Option<&HashSet<String>>,
    ) -> Result<Self, CoherenceError> {
        if width == 0 {
            return Err(CoherenceError::ZeroWidth);
        }
        if documents.is_empty() {
            return Err(CoherenceError::EmptyCorpus);
        }
        let mut stats = Self {
            window_width: width,
            n_windows: 0,
            occurrence: HashMap::new(),
            co_occurrence: HashMap::new(),
            epsilon: DEFAULT_EPSILON,
        };
        let mut present: Vec<&String> = Vec::new();
        for doc in documents {
            let tokens = &doc.tokens;
            let n_windows = tokens.len().saturating_sub(width - 1).max(1);
            for start in 0..n_windows {
                let end = (start + width).min(tokens.len());
                let mut seen: HashSet<&String> = HashSet::new();
                for tok in &tokens[start..end] {
                    if tracked.is_some_and(|t| !t.contains(tok)) {
                        continue;
                    }
                    seen.insert(tok);
                }
                present.clear();
                present.extend(seen.iter().copied());
                present.sort();
                for (i, a) in present.iter().enumerate() {
                    *stats.occurrence.entry((*a).clone()).or_insert(0) += 1;
                    for b in &present[i + 1..] {
                        *stats
                            .co_occurrence
                            .entry(((*a).clone(), (*b).clone()))
                            .or_insert(0) += 1;
                    }
                }
                stats.n_windows += 1;
            }
        }
        Ok(stats)
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn occurrence(&self, w: &str) -> u64 {
        self.occurrence.get(w).copied().unwrap_or(0)
    }

    /// Window count for the pair; by identity `co(w, w) = occ(w)`.
    pub fn co_occurrence(&self, a: &str, b: &str) -> u64 {
        if a == b {
            return self.occurrence(a);
        }
        let key = if a < b { (a, b) } else { (b, a) };
        self.co_occurrence
            .get(&(key.0.to_string(), key.1.to_string()))
            .copied()
            .unwrap_or(0)
    }

    pub fn p(&self, w: &str) -> f64 {
        self.occurrence(w) as f64 / self.n_windows as f64
    }

    pub fn p_joint(&self, a: &str, b: &str) -> f64 {
        self.co_occurrence(a, b) as f64 / self.n_windows as f64
    }
}

/// Normalized pointwise mutual information in [-1, 1]:
/// `ln((p12 + eps) / (p1 * p2)) / -ln(p12 + eps)`.
/// A word never seen in any window contributes a defined 0 with a warning.
pub fn npmi(w1: &str, w2: &str, stats: &WindowStats) -> f64 {
    if stats.occurrence(w1) == 0 || stats.occurrence(w2) == 0 {
        log::warn!("npmi over unseen word ({w1:?}, {w2:?}); contributing 0");
        return 0.0;
    }
    let p12 = stats.p_joint(w1, w2) + stats.epsilon;
    let denom = -(p12.ln());
    if denom == 0.0 {
        // p12 + eps rounded to exactly 1; the pair is in every window.
        return 1.0;
    }
    (p12 / (stats.p(w1) * stats.p(w2))).ln() / denom
}

/// Per-topic coherence scores plus the model mean; topics with no in-corpus
/// terms are undefined and excluded from the mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub per_topic: Vec<Option<f64>>,
    pub mean: Option<f64>,
}

fn cosine(u: &[f64], v: &[f64]) -> f64 {
    if u == v {
        return 1.0;
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu: f64 = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv: f64 = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return 0.0;
    }
    dot / (nu * nv)
}

/// C_v for one topic's ranked word set: NPMI context vectors against the
/// word set, each compared by cosine to their sum, averaged. Words absent
/// from the corpus are dropped with a warning.
pub fn c_v_topic(words: &[String], stats: &WindowStats) -> Option<f64> {
    let present: Vec<&String> = words.iter().filter(|w| stats.occurrence(w) > 0).collect();
    if present.len() < words.len() {
        log::warn!(
            "topic has {} word(s) absent from the corpus; scoring the rest",
            words.len() - present.len()
        );
    }
    if present.is_empty() {
        return None;
    }
    if present.len() == 1 {
        // cosine(v, v) of a single-word context vector.
        return Some(1.0);
    }
    let vectors: Vec<Vec<f64>> = present
        .iter()
        .map(|w| present.iter().map(|w2| npmi(w, w2, stats)).collect())
        .collect();
    let mut sum = vec![0.0; present.len()];
    for v in &vectors {
        for (s, x) in sum.iter_mut().zip(v) {
            *s += x;
        }
    }
    let mean: f64 = vectors.iter().map(|v| cosine(v, &sum)).sum::<f64>() / vectors.len() as f64;
    Some(mean)
}

/// Score every topic and take the arithmetic mean of the defined scores.
pub fn c_v(topics: &[Vec<String>], stats: &WindowStats) -> CvReport {
    let per_topic: Vec<Option<f64>> = topics.iter().map(|w| c_v_topic(w, stats)).collect();
    let defined: Vec<f64> = per_topic.iter().filter_map(|s| *s).collect();
    let mean = if defined.is_empty() {
        None
    } else {
        Some(defined.iter().sum::<f64>() / defined.len() as f64)
    };
    CvReport { per_topic, mean }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(tokens: &[&str]) -> Document {
        Document {
            tweet_id: "t".into(),
            minute: 0,
            tokens: tokens.iter().map(|s| s.to_string()).collect(),
        }
    }

    /// Four windows: {a,b}, {a,b}, {a}, {c}. p(a)=0.75, p(b)=0.5, p(ab)=0.5.
    fn four_window_fixture() -> WindowStats {
        let docs = vec![doc(&["a", "b"]), doc(&["a", "b"]), doc(&["a"]), doc(&["c"])];
        WindowStats::from_documents(&docs, DEFAULT_WINDOW_WIDTH, None).unwrap()
    }

    #[test]
    fn short_documents_contribute_one_window() {
        let stats = four_window_fixture();
        assert_eq!(stats.n_windows, 4);
        assert_eq!(stats.occurrence("a"), 3);
        assert_eq!(stats.occurrence("b"), 2);
        assert_eq!(stats.co_occurrence("a", "b"), 2);
        assert_eq!(stats.co_occurrence("b", "a"), 2);
    }

    #[test]
    fn sliding_windows_enumerated() {
        let docs = vec![doc(&["a", "b", "c"])];
        let stats = WindowStats::from_documents(&docs, 2, None).unwrap();
        assert_eq!(stats.n_windows, 2);
        assert_eq!(stats.occurrence("b"), 2);
        assert_eq!(stats.occurrence("a"), 1);
        assert_eq!(stats.co_occurrence("a", "b"), 1);
        assert_eq!(stats.co_occurrence("a", "c"), 0);
    }

    #[test]
    fn self_co_occurrence_identity() {
        let stats = four_window_fixture();
        assert_eq!(stats.co_occurrence("a", "a"), stats.occurrence("a"));
    }

    #[test]
    fn npmi_hand_arithmetic() {
        let stats = four_window_fixture();
        let got = npmi("a", "b", &stats);
        let expected = (0.5f64 / 0.375).ln() / -(0.5f64.ln());
        assert!((got - expected).abs() < 1e-9);
        assert!((got - 0.4150).abs() < 1e-4);
    }

    #[test]
    fn self_npmi_is_one_when_p_below_one() {
        let stats = four_window_fixture();
        assert!((npmi("a", "a", &stats) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn never_cooccurring_pair_approaches_minus_one() {
        let stats = four_window_fixture().with_epsilon(1e-300);
        assert!(npmi("a", "c", &stats) < -0.99);
    }

    #[test]
    fn unseen_word_contributes_zero() {
        let stats = four_window_fixture();
        assert_eq!(npmi("a", "zzz", &stats), 0.0);
    }

    #[test]
    fn cv_hand_computed_fixture() {
        let stats = four_window_fixture();
        let topics = vec![vec!["a".to_string(), "b".to_string()]];
        let report = c_v(&topics, &stats);
        let score = report.per_topic[0].unwrap();
        assert!((score - 0.9241).abs() < 0.001, "got {score}");
        assert_eq!(report.mean, report.per_topic[0]);
    }

    #[test]
    fn single_word_topic_scores_exactly_one() {
        let stats = four_window_fixture();
        assert_eq!(c_v_topic(&["a".to_string()], &stats), Some(1.0));
    }

    #[test]
    fn fully_cooccurring_set_scores_one() {
        let docs = vec![doc(&["x", "y"]), doc(&["x", "y"]), doc(&["z"])];
        let stats = WindowStats::from_documents(&docs, DEFAULT_WINDOW_WIDTH, None).unwrap();
        let score = c_v_topic(&["x".to_string(), "y".to_string()], &stats).unwrap();
        assert!((score - 1.0).abs() < 1e-6);
    }

    #[test]
    fn out_of_corpus_topic_is_undefined_and_excluded() {
        let stats = four_window_fixture();
        let topics = vec![
            vec!["zzz".to_string()],
            vec!["a".to_string(), "b".to_string()],
        ];
        let report = c_v(&topics, &stats);
        assert_eq!(report.per_topic[0], None);
        assert!(report.per_topic[1].is_some());
        assert_eq!(report.mean, report.per_topic[1]);
    }

    #[test]
    fn score_invariant_under_word_and_document_order() {
        let docs = vec![doc(&["a", "b"]), doc(&["a", "b"]), doc(&["a"]), doc(&["c"])];
        let mut reversed = docs.clone();
        reversed.reverse();
        let s1 = WindowStats::from_documents(&docs, 110, None).unwrap();
        let s2 = WindowStats::from_documents(&reversed, 110, None).unwrap();
        let t1 = c_v_topic(&["a".to_string(), "b".to_string()], &s1).unwrap();
        let t2 = c_v_topic(&["b".to_string(), "a".to_string()], &s2).unwrap();
        assert!((t1 - t2).abs() < 1e-12);
    }

    #[test]
    fn tracked_filter_matches_unfiltered_counts() {
        let docs = vec![doc(&["a", "b", "q"]), doc(&["a", "q"]), doc(&["b"])];
        let tracked: HashSet<String> = ["a", "b"].iter().map(|s| s.to_string()).collect();
        let full = WindowStats::from_documents(&docs, 110, None).unwrap();
        let part = WindowStats::from_documents(&docs, 110, Some(&tracked)).unwrap();
        assert_eq!(full.n_windows, part.n_windows);
        assert_eq!(full.occurrence("a"), part.occurrence("a"));
        assert_eq!(full.co_occurrence("a", "b"), part.co_occurrence("a", "b"));
        assert_eq!(part.occurrence("q"), 0);
    }

    #[test]
    fn topic_scores_stay_in_range() {
        let docs = vec![
            doc(&["a", "b", "c"]),
            doc(&["a", "c"]),
            doc(&["b", "d"]),
            doc(&["d", "e", "a"]),
            doc(&["e"]),
        ];
        let stats = WindowStats::from_documents(&docs, 2, None).unwrap();
        let words: Vec<String> = ["a", "b", "c", "d", "e"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let score = c_v_topic(&words, &stats).unwrap();
        assert!((-1.0..=1.0).contains(&score));
    }

    #[test]
    fn empty_corpus_is_an_error() {
        assert!(matches!(
            WindowStats::from_documents(&[], 110, None),
            Err(CoherenceError::EmptyCorpus)
        ));
    }
}
