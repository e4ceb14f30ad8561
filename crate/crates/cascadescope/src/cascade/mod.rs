//! Retweet-timing statistics and retweet-cascade directed graphs with
//! density/degree statistics and force-directed layout.

pub mod layout;

use std::collections::{BTreeMap, HashMap};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::TweetRecord;

#[derive(Debug, Error)]
pub enum CascadeError {
    #[error("record {0} has no retweet source")]
    MissingSource(String),
    #[error("record {tweet_id}: retweet predates its source by {seconds} s")]
    NegativeDelta { tweet_id: String, seconds: i64 },
    #[error("no retweet events")]
    NoEvents,
    #[error("empty graph")]
    EmptyGraph,
}

/// The nine benchmark time points (seconds) used for cascade graphs
/// G1..G9, from earthquake-speed retweets out to one week.
pub const BENCHMARK_TIME_POINTS: [f64; 9] = [
    19.0, 328.0, 591.0, 885.6, 3600.0, 10_000.0, 13_320.0, 86_400.0, 604_800.0,
];

/// Default number of sampled retweet events per cascade graph.
pub const DEFAULT_MAX_EDGES: usize = 700;

/// One retweet with its time-to-retweet: the retweet's creation time minus
/// the original tweet's creation time, in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetweetEvent {
    pub retweeter_id: String,
    pub original_author_id: String,
    pub original_created_at: DateTime<Utc>,
    pub retweet_created_at: DateTime<Utc>,
    pub delta_seconds: f64,
}

/// Compute `time_to_rt` for one retweet record. Negative deltas are
/// violations surfaced as errors so the caller can quarantine them.
pub fn time_to_retweet(record: &TweetRecord) -> Result<RetweetEvent, CascadeError> {
    let source = record
        .retweet_source
        .as_ref()
        .ok_or_else(|| CascadeError::MissingSource(record.tweet_id.clone()))?;
    let delta = (record.created_at - source.source_created_at).num_seconds();
    if delta < 0 {
        return Err(CascadeError::NegativeDelta {
            tweet_id: record.tweet_id.clone(),
            seconds: delta,
        });
    }
    Ok(RetweetEvent {
        retweeter_id: record.author_id.clone(),
        original_author_id: source.source_author_id.clone(),
        original_created_at: source.source_created_at,
        retweet_created_at: record.created_at,
        delta_seconds: delta as f64,
    })
}

/// Events for every retweet record; non-retweets are skipped, negative
/// deltas counted as quarantined.
pub fn collect_events(records: &[TweetRecord]) -> (Vec<RetweetEvent>, u64) {
    let mut events = Vec::new();
    let mut quarantined = 0;
    for record in records.iter().filter(|r| r.is_retweet()) {
        match time_to_retweet(record) {
            Ok(e) => events.push(e),
            Err(CascadeError::NegativeDelta { .. }) => quarantined += 1,
            Err(_) => unreachable!("filtered on retweet_source"),
        }
    }
    (events, quarantined)
}

/// Fixed-width histogram over bin indices (index = floor(value / width)).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_width: f64,
    pub counts: BTreeMap<i64, u64>,
}

impl Histogram {
    fn build(values: impl Iterator<Item = f64>, bin_width: f64) -> Self {
        let mut counts = BTreeMap::new();
        for v in values {
            *counts.entry((v / bin_width).floor() as i64).or_insert(0) += 1;
        }
        Self { bin_width, counts }
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }
}

/// Default linear histogram bin width in seconds.
pub const LINEAR_BIN_SECONDS: f64 = 3600.0;
/// Log histogram bin width in decades.
pub const LOG_BIN_DECADES: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetweetStats {
    pub count: usize,
    pub median_s: f64,
    pub mean_s: f64,
    pub linear_hist: Histogram,
    /// Buckets of log10(max(delta, 1)) in 0.1-decade bins; zero deltas land
    /// in bin 0.
    pub log_hist: Histogram,
}

/// Median (lower-middle element for even counts), mean, and linear/log
/// histograms of time-to-retweet.
pub fn retweet_stats(events: &[RetweetEvent]) -> Result<RetweetStats, CascadeError> {
    if events.is_empty() {
        return Err(CascadeError::NoEvents);
    }
    let mut deltas: Vec<f64> = events.iter().map(|e| e.delta_seconds).collect();
    deltas.sort_by(f64::total_cmp);
    let median_s = deltas[(deltas.len() - 1) / 2];
    let mean_s = deltas.iter().sum::<f64>() / deltas.len() as f64;
    let linear_hist = Histogram::build(deltas.iter().copied(), LINEAR_BIN_SECONDS);
    let log_hist = Histogram::build(deltas.iter().map(|&d| d.max(1.0).log10()), LOG_BIN_DECADES);
    Ok(RetweetStats {
        count: deltas.len(),
        median_s,
        mean_s,
        linear_hist,
        log_hist,
    })
}

/// How events are chosen for a time point: the closest deltas to the time
/// point, or the most recent deltas at or below it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SelectionRule {
    Nearest,
    AtMost,
}

/// A collapsed directed edge original author -> retweeter. `delta_s` is the
/// smallest delta among collapsed parallel edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeEdge {
    pub source: u32,
    pub target: u32,
    pub delta_s: f64,
    pub multiplicity: u32,
}

/// Directed retweet cascade at one benchmark time point. Nodes are sorted
/// user ids; self-loops (authors retweeting themselves) are kept but
/// flagged and excluded from simple-graph statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeGraph {
    pub label: String,
    pub time_point_s: f64,
    pub nodes: Vec<String>,
    pub edges: Vec<CascadeEdge>,
    pub self_loops: u32,
}

impl CascadeGraph {
    pub fn node_id(&self, idx: u32) -> &str {
        &self.nodes[idx as usize]
    }

    /// Edges excluding self-loops (the collapsed simple digraph).
    pub fn simple_edges(&self) -> impl Iterator<Item = &CascadeEdge> {
        self.edges.iter().filter(|e| e.source != e.target)
    }
}

/// Build the cascade graph for one time point from at most `max_edges`
/// selected events. Deterministic: ties break on (delta, retweeter id,
/// author id), nodes are sorted, parallel edges collapse with multiplicity.
pub fn build_cascade(
    events: &[RetweetEvent],
    time_point_s: f64,
    max_edges: usize,
    rule: SelectionRule,
    label: &str,
) -> Result<CascadeGraph, CascadeError> {
    if events.is_empty() {
        return Err(CascadeError::NoEvents);
    }
    let mut chosen: Vec<&RetweetEvent> = match rule {
        SelectionRule::Nearest => {
            let mut sorted: Vec<&RetweetEvent> = events.iter().collect();
            sorted.sort_by(|a, b| {
                let da = (a.delta_seconds - time_point_s).abs();
                let db = (b.delta_seconds - time_point_s).abs();
                da.total_cmp(&db)
                    .then_with(|| a.delta_seconds.total_cmp(&b.delta_seconds))
                    .then_with(|| a.retweeter_id.cmp(&b.retweeter_id))
                    .then_with(|| a.original_author_id.cmp(&b.original_author_id))
            });
            sorted.truncate(max_edges);
            sorted
        }
        SelectionRule::AtMost => {
            let mut sorted: Vec<&RetweetEvent> = events
                .iter()
                .filter(|e| e.delta_seconds <= time_point_s)
                .collect();
            sorted.sort_by(|a, b| {
                b.delta_seconds
                    .total_cmp(&a.delta_seconds)
                    .then_with(|| a.retweeter_id.cmp(&b.retweeter_id))
                    .then_with(|| a.original_author_id.cmp(&b.original_author_id))
            });
            sorted.truncate(max_edges);
            sorted
        }
    };
    if chosen.len() < max_edges {
        log::warn!(
            "time point {time_point_s}: only {} events available for {max_edges} edges",
            chosen.len()
        );
    }
    // Resort by delta for stable edge collapsing order.
    chosen.sort_by(|a, b| {
        a.delta_seconds
            .total_cmp(&b.delta_seconds)
            .then_with(|| a.retweeter_id.cmp(&b.retweeter_id))
    });
    let mut node_ids: Vec<&str> = chosen
        .iter()
        .flat_map(|e| [e.original_author_id.as_str(), e.retweeter_id.as_str()])
        .collect();
    node_ids.sort_unstable();
    node_ids.dedup();
    let index: HashMap<&str, u32> = node_ids
        .iter()
        .enumerate()
        .map(|(i, &id)| (id, i as u32))
        .collect();
    let mut collapsed: BTreeMap<(u32, u32), (f64, u32)> = BTreeMap::new();
    for e in &chosen {
        let key = (
            index[e.original_author_id.as_str()],
            index[e.retweeter_id.as_str()],
        );
        let entry = collapsed.entry(key).or_insert((e.delta_seconds, 0));
        entry.0 = entry.0.min(e.delta_seconds);
        entry.1 += 1;
    }
    let edges: Vec<CascadeEdge> = collapsed
        .into_iter()
        .map(|((source, target), (delta_s, multiplicity))| CascadeEdge {
            source,
            target,
            delta_s,
            multiplicity,
        })
        .collect();
    let self_loops = edges.iter().filter(|e| e.source == e.target).count() as u32;
    Ok(CascadeGraph {
        label: label.to_string(),
        time_point_s,
        nodes: node_ids.into_iter().map(|s| s.to_string()).collect(),
        edges,
        self_loops,
    })
}

/// Node count, collapsed simple-edge count, directed density
/// `E / (N * (N - 1))`, and the top-3 users by total (in + out) degree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphStats {
    pub n_nodes: usize,
    pub n_edges: usize,
    pub density: f64,
    /// (total degree, user id) sorted descending, at most three entries.
    pub top_degrees: Vec<(u32, String)>,
}

pub fn graph_stats(g: &CascadeGraph) -> Result<GraphStats, CascadeError> {
    if g.nodes.is_empty() {
        return Err(CascadeError::EmptyGraph);
    }
    let n = g.nodes.len();
    let mut degree = vec![0u32; n];
    let mut n_edges = 0usize;
    for e in g.simple_edges() {
        degree[e.source as usize] += 1;
        degree[e.target as usize] += 1;
        n_edges += 1;
    }
    let density = if n > 1 {
        n_edges as f64 / (n as f64 * (n as f64 - 1.0))
    } else {
        0.0
    };
    let mut ranked: Vec<(u32, String)> = degree
        .into_iter()
        .enumerate()
        .map(|(i, d)| (d, g.nodes[i].clone()))
        .collect();
    ranked.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
    ranked.truncate(3);
    Ok(GraphStats {
        n_nodes: n,
        n_edges,
        density,
        top_degrees: ranked,
    })
}

/// The published per-graph reference constants: (label, ranking speed,
/// time point seconds, density, node count, top-3 degrees).
pub const REFERENCE_GRAPH_TABLE: [(&str, u32, f64, f64, u64, [u64; 3]); 9] = [
    ("G1", 1, 19.0, 0.000428, 1278, [11, 11, 9]),
    ("G2", 2, 328.0, 0.000449, 1248, [17, 8, 8]),
    ("G3", 3, 591.0, 0.000450, 1247, [13, 12, 9]),
    ("G4", 4, 885.6, 0.000460, 1234, [17, 10, 10]),
    ("G5", 5, 3600.0, 0.000567, 1110, [41, 27, 20]),
    ("G6", 6, 10_000.0, 0.000538, 1139, [18, 15, 15]),
    ("G7", 7, 13_320.0, 0.000540, 1138, [17, 17, 11]),
    ("G8", 8, 86_400.0, 0.000685, 1005, [63, 43, 26]),
    ("G9", 9, 604_800.0, 0.000598, 1067, [92, 9, 9]),
];
