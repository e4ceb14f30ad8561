//! LDA topic modeling by collapsed Gibbs sampling, the topic-count sweep
//! with coherence-based selection, per-document inference, and topic
//! assignment including the undefined "100" category.

use std::collections::HashSet;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coherence::{self, CvReport, WindowStats};
use crate::textprep::Document;
use crate::vectorize::{SparseMatrix, Vocabulary, WeightKind};

#[derive(Debug, Error)]
pub enum LdaError {
    #[error("empty count matrix")]
    EmptyMatrix,
    #[error("topic count must be at least 1")]
    ZeroTopics,
    #[error("{0} must be positive")]
    NonPositiveParam(&'static str),
    #[error("matrix must carry counts")]
    NotCounts,
    #[error("matrix has {matrix} columns but vocabulary has {vocab} terms")]
    ShapeMismatch { matrix: usize, vocab: usize },
    #[error("model i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("bad model file: {0}")]
    BadModelFile(String),
    #[error("coherence failed: {0}")]
    Coherence(#[from] coherence::CoherenceError),
}

/// Exact-uniform detection tolerance for the undefined topic label.
pub const DEFAULT_UNIFORM_TOL: f64 = 1e-9;

/// Number of ranked terms kept per topic.
pub const TOP_TERMS_PER_TOPIC: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaHyperparams {
    pub k: usize,
    /// Symmetric document-topic prior; defaults to 1/K.
    pub alpha: f64,
    /// Symmetric topic-word prior; defaults to 1/K.
    pub eta: f64,
    /// Gibbs sweeps per pass.
    pub iterations: usize,
    pub passes: usize,
    /// Recorded preset knob; 10,000 for sweeps, 50,000 for the final model.
    pub chunk_size: usize,
    /// Early stop when the mean per-document theta change between passes
    /// falls below this.
    pub gamma_threshold: f64,
    pub seed: u64,
}

impl LdaHyperparams {
    pub fn new(k: usize, seed: u64) -> Self {
        Self {
            k,
            alpha: 1.0 / k.max(1) as f64,
            eta: 1.0 / k.max(1) as f64,
            iterations: 100,
            passes: 2,
            chunk_size: 10_000,
            gamma_threshold: 0.001,
            seed,
        }
    }

    /// The final-model preset differs from the sweep preset only in
    /// chunk size.
    pub fn final_preset(k: usize, seed: u64) -> Self {
        Self {
            chunk_size: 50_000,
            ..Self::new(k, seed)
        }
    }

    fn validate(&self) -> Result<(), LdaError> {
        if self.k == 0 {
            return Err(LdaError::ZeroTopics);
        }
        if self.alpha <= 0.0 {
            return Err(LdaError::NonPositiveParam("alpha"));
        }
        if self.eta <= 0.0 {
            return Err(LdaError::NonPositiveParam("eta"));
        }
        if self.iterations == 0 {
            return Err(LdaError::NonPositiveParam("iterations"));
        }
        if self.passes == 0 {
            return Err(LdaError::NonPositiveParam("passes"));
        }
        Ok(())
    }
}

/// Per-pass training diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassStats {
    pub pass: usize,
    pub mean_theta_delta: f64,
    pub max_phi_row_err: f64,
    pub max_theta_row_err: f64,
}

/// A trained topic model: topic-word distribution phi (K x V, row-major),
/// document-topic distribution theta (N x K, row-major), ranked top terms,
/// and optional coherence scores.
#[derive(Debug, Clone)]
pub struct TopicModel {
    pub params: LdaHyperparams,
    pub vocab_size: usize,
    pub n_docs: usize,
    pub phi: Vec<f64>,
    pub theta: Vec<f64>,
    pub top_terms: Vec<Vec<String>>,
    pub coherence: Option<CvReport>,
    pub pass_stats: Vec<PassStats>,
    /// Documents with no in-vocabulary tokens; their theta is the uniform
    /// prior and is flagged undefined.
    pub empty_docs: Vec<u32>,
}

impl TopicModel {
    pub fn phi_row(&self, k: usize) -> &[f64] {
        &self.phi[k * self.vocab_size..(k + 1) * self.vocab_size]
    }

    pub fn theta_row(&self, d: usize) -> &[f64] {
        &self.theta[d * self.params.k..(d + 1) * self.params.k]
    }
}

struct GibbsState {
    k: usize,
    v: usize,
    docs: Vec<Vec<u32>>,
    z: Vec<Vec<u32>>,
    n_dk: Vec<u32>,
    n_kw: Vec<u32>,
    n_k: Vec<u32>,
}

impl GibbsState {
    fn new(counts: &SparseMatrix, k: usize, rng: &mut ChaCha8Rng) -> Self {
        let v = counts.n_cols;
        let docs: Vec<Vec<u32>> = counts
            .rows()
            .iter()
            .map(|row| {
                let mut tokens = Vec::new();
                for &(col, c) in row {
                    for _ in 0..c as usize {
                        tokens.push(col);
                    }
                }
                tokens
            })
            .collect();
        let mut state = Self {
            z: docs.iter().map(|d| vec![0u32; d.len()]).collect(),
            n_dk: vec![0; docs.len() * k],
            n_kw: vec![0; k * v],
            n_k: vec![0; k],
            docs,
            k,
            v,
        };
        for d in 0..state.docs.len() {
            for t in 0..state.docs[d].len() {
                let topic = rng.gen_range(0..k as u32);
                state.z[d][t] = topic;
                state.incr(d, state.docs[d][t], topic);
            }
        }
        state
    }

    fn incr(&mut self, d: usize, w: u32, topic: u32) {
        self.n_dk[d * self.k + topic as usize] += 1;
        self.n_kw[topic as usize * self.v + w as usize] += 1;
        self.n_k[topic as usize] += 1;
    }

    fn decr(&mut self, d: usize, w: u32, topic: u32) {
        self.n_dk[d * self.k + topic as usize] -= 1;
        self.n_kw[topic as usize * self.v + w as usize] -= 1;
        self.n_k[topic as usize] -= 1;
    }

    /// One full Gibbs sweep over every token.
    fn sweep(&mut self, alpha: f64, eta: f64, rng: &mut ChaCha8Rng, probs: &mut Vec<f64>) {
        let veta = self.v as f64 * eta;
        for d in 0..self.docs.len() {
            for t in 0..self.docs[d].len() {
                let w = self.docs[d][t];
                let old = self.z[d][t];
                self.decr(d, w, old);
                probs.clear();
                let mut total = 0.0;
                for topic in 0..self.k {
                    let p = (self.n_dk[d * self.k + topic] as f64 + alpha)
                        * (self.n_kw[topic * self.v + w as usize] as f64 + eta)
                        / (self.n_k[topic] as f64 + veta);
                    total += p;
                    probs.push(total);
                }
                let u = rng.gen::<f64>() * total;
                let new = probs.partition_point(|&cum| cum <= u).min(self.k - 1) as u32;
                self.z[d][t] = new;
                self.incr(d, w, new);
            }
        }
    }

    fn phi(&self, eta: f64) -> Vec<f64> {
        let veta = self.v as f64 * eta;
        let mut phi = vec![0.0; self.k * self.v];
        for topic in 0..self.k {
            let denom = self.n_k[topic] as f64 + veta;
            for w in 0..self.v {
                phi[topic * self.v + w] = (self.n_kw[topic * self.v + w] as f64 + eta) / denom;
            }
        }
        phi
    }

    fn theta(&self, alpha: f64) -> Vec<f64> {
        let kalpha = self.k as f64 * alpha;
        let mut theta = vec![0.0; self.docs.len() * self.k];
        for d in 0..self.docs.len() {
            let n_d = self.docs[d].len() as f64;
            for topic in 0..self.k {
                theta[d * self.k + topic] = if self.docs[d].is_empty() {
                    1.0 / self.k as f64
                } else {
                    (self.n_dk[d * self.k + topic] as f64 + alpha) / (n_d + kalpha)
                };
            }
        }
        theta
    }
}

fn max_row_sum_err(rows: &[f64], width: usize) -> f64 {
    rows.chunks(width)
        .map(|row| (row.iter().sum::<f64>() - 1.0).abs())
        .fold(0.0, f64::max)
}

/// Train by collapsed Gibbs sampling: `iterations` sweeps per pass, up to
/// `passes` passes, early-stopping when the mean absolute theta change
/// between passes drops below `gamma_threshold`. Deterministic for a given
/// seed.
pub fn train_lda(
    counts: &SparseMatrix,
    vocab: &Vocabulary,
    params: &LdaHyperparams,
) -> Result<TopicModel, LdaError> {
    params.validate()?;
    if counts.kind != WeightKind::Count {
        return Err(LdaError::NotCounts);
    }
    if counts.n_cols != vocab.len() {
        return Err(LdaError::ShapeMismatch {
            matrix: counts.n_cols,
            vocab: vocab.len(),
        });
    }
    if counts.n_rows == 0 || counts.nnz() == 0 {
        return Err(LdaError::EmptyMatrix);
    }
    if counts.n_cols < params.k {
        log::warn!(
            "vocabulary size {} below topic count {}; topics will be degenerate",
            counts.n_cols,
            params.k
        );
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut state = GibbsState::new(counts, params.k, &mut rng);
    let mut probs = Vec::with_capacity(params.k);
    let mut pass_stats = Vec::new();
    let mut prev_theta: Option<Vec<f64>> = None;
    for pass in 0..params.passes {
        for _ in 0..params.iterations {
            state.sweep(params.alpha, params.eta, &mut rng, &mut probs);
        }
        let theta = state.theta(params.alpha);
        let phi = state.phi(params.eta);
        let mean_delta = match &prev_theta {
            None => f64::INFINITY,
            Some(prev) => {
                theta
                    .iter()
                    .zip(prev)
                    .map(|(a, b)| (a - b).abs())
                    .sum::<f64>()
                    / theta.len() as f64
            }
        };
        pass_stats.push(PassStats {
            pass,
            mean_theta_delta: mean_delta,
            max_phi_row_err: max_row_sum_err(&phi, state.v),
            max_theta_row_err: max_row_sum_err(&theta, params.k),
        });
        prev_theta = Some(theta);
        if mean_delta < params.gamma_threshold {
            log::debug!("early stop after pass {pass}: mean theta delta {mean_delta:.2e}");
            break;
        }
    }
    let phi = state.phi(params.eta);
    let theta = prev_theta.expect("at least one pass");
    let empty_docs: Vec<u32> = state
        .docs
        .iter()
        .enumerate()
        .filter(|(_, d)| d.is_empty())
        .map(|(i, _)| i as u32)
        .collect();
    let top_terms = (0..params.k)
        .map(|topic| {
            let row = &phi[topic * state.v..(topic + 1) * state.v];
            let mut ranked: Vec<(usize, f64)> = row.iter().copied().enumerate().collect();
            ranked.sort_by(|a, b| {
                b.1.total_cmp(&a.1)
                    .then_with(|| vocab.term(a.0).cmp(vocab.term(b.0)))
            });
            ranked
                .into_iter()
                .take(TOP_TERMS_PER_TOPIC)
                .map(|(col, _)| vocab.term(col).to_string())
                .collect()
        })
        .collect();
    Ok(TopicModel {
        params: params.clone(),
        vocab_size: state.v,
        n_docs: counts.n_rows,
        phi,
        theta,
        top_terms,
        coherence: None,
        pass_stats,
        empty_docs,
    })
}

/// Posterior topic proportions for one document (count row over the model's
/// vocabulary) with phi held fixed, by deterministic fixed-point iteration.
/// Empty documents get the uniform vector, flagged undefined.
pub fn infer_theta(model: &TopicModel, doc: &[(u32, u32)]) -> (Vec<f64>, bool) {
    let k = model.params.k;
    let n: f64 = doc.iter().map(|&(_, c)| c as f64).sum();
    if n == 0.0 {
        return (vec![1.0 / k as f64; k], true);
    }
    let alpha = model.params.alpha;
    let mut theta = vec![1.0 / k as f64; k];
    let mut resp = vec![0.0; k];
    for _ in 0..100 {
        let mut acc = vec![0.0; k];
        for &(w, c) in doc {
            let mut denom = 0.0;
            for topic in 0..k {
                resp[topic] = model.phi[topic * model.vocab_size + w as usize] * theta[topic];
                denom += resp[topic];
            }
            if denom == 0.0 {
                continue;
            }
            for topic in 0..k {
                acc[topic] += c as f64 * resp[topic] / denom;
            }
        }
        let mut delta: f64 = 0.0;
        for topic in 0..k {
            let new = (acc[topic] + alpha) / (n + k as f64 * alpha);
            delta = delta.max((new - theta[topic]).abs());
            theta[topic] = new;
        }
        if delta < model.params.gamma_threshold {
            break;
        }
    }
    let total: f64 = theta.iter().sum();
    for t in &mut theta {
        *t /= total;
    }
    (theta, false)
}

/// Topic assignment label; `Undefined100` is the "100: N/A" category for
/// documents whose topic distribution is uniform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TopicLabel {
    Topic(usize),
    Undefined100,
}

impl TopicLabel {
    /// CSV rendering: the topic index, or "100" for the undefined category.
    pub fn as_csv(&self) -> String {
        match self {
            TopicLabel::Topic(i) => i.to_string(),
            TopicLabel::Undefined100 => "100".to_string(),
        }
    }
}

impl std::fmt::Display for TopicLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.as_csv())
    }
}

/// Argmax assignment with lowest-index tie-break; distributions whose
/// max-min spread is within `uniform_tol` are the undefined category.
pub fn assign_topic(theta: &[f64], uniform_tol: f64) -> TopicLabel {
    let max = theta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = theta.iter().copied().fold(f64::INFINITY, f64::min);
    if max - min <= uniform_tol {
        return TopicLabel::Undefined100;
    }
    let arg = theta
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
        .map(|(i, _)| i)
        .unwrap_or(0);
    TopicLabel::Topic(arg)
}

/// The default sweep grid: fifteen evenly spaced topic counts in [2, 30].
pub fn default_sweep_grid() -> Vec<usize> {
    (0..15).map(|i| 2 + 2 * i).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepEntry {
    pub k: usize,
    pub mean_cv: Option<f64>,
    pub per_topic: Vec<Option<f64>>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepResult {
    pub entries: Vec<SweepEntry>,
    /// K with the highest mean coherence; ties go to the smaller K.
    pub selected: Option<usize>,
}

/// Train one model per grid K, score each by mean C_v over its topics'
/// top-term sets, and select the argmax (ties go to the smaller K). Per-K
/// failures are recorded and the sweep continues. The models are
/// independent, so the parallel path gives identical results.
pub fn sweep_topic_counts(
    counts: &SparseMatrix,
    vocab: &Vocabulary,
    documents: &[Document],
    k_grid: &[usize],
    base: &LdaHyperparams,
    window_width: usize,
    parallel: bool,
) -> Result<SweepResult, LdaError> {
    let run_one = |&k: &usize| -> SweepEntry {
        let params = LdaHyperparams {
            k,
            alpha: 1.0 / k.max(1) as f64,
            eta: 1.0 / k.max(1) as f64,
            ..base.clone()
        };
        let outcome = train_lda(counts, vocab, &params).and_then(|model| {
            let tracked: HashSet<String> = model.top_terms.iter().flatten().cloned().collect();
            let stats = WindowStats::from_documents(documents, window_width, Some(&tracked))?;
            let report = coherence::c_v(&model.top_terms, &stats);
            Ok((report.mean, report.per_topic))
        });
        match outcome {
            Ok((mean_cv, per_topic)) => SweepEntry {
                k,
                mean_cv,
                per_topic,
                error: None,
            },
            Err(e) => {
                log::warn!("sweep K={k} failed: {e}");
                SweepEntry {
                    k,
                    mean_cv: None,
                    per_topic: Vec::new(),
                    error: Some(e.to_string()),
                }
            }
        }
    };
    let entries: Vec<SweepEntry> = if parallel {
        use rayon::prelude::*;
        k_grid.par_iter().map(run_one).collect()
    } else {
        k_grid.iter().map(run_one).collect()
    };
    let selected = entries
        .iter()
        .filter_map(|e| e.mean_cv.map(|cv| (e.k, cv)))
        .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)))
        .map(|(k, _)| k);
    Ok(SweepResult { entries, selected })
}

/// Versioned on-disk model representation.
#[derive(Debug, Serialize, Deserialize)]
pub struct ModelFile {
    pub version: u32,
    pub params: LdaHyperparams,
    pub vocab_sha256: String,
    pub vocab_size: usize,
    pub n_docs: usize,
    pub phi: Vec<f64>,
    pub top_terms: Vec<Vec<String>>,
    pub coherence: Option<CvReport>,
    pub empty_docs: Vec<u32>,
}

pub const MODEL_FILE_VERSION: u32 = 1;

pub fn save_model(model: &TopicModel, vocab_sha256: &str, path: &Path) -> Result<(), LdaError> {
    let file = ModelFile {
        version: MODEL_FILE_VERSION,
        params: model.params.clone(),
        vocab_sha256: vocab_sha256.to_string(),
        vocab_size: model.vocab_size,
        n_docs: model.n_docs,
        phi: model.phi.clone(),
        top_terms: model.top_terms.clone(),
        coherence: model.coherence.clone(),
        empty_docs: model.empty_docs.clone(),
    };
    let json = serde_json::to_string(&file).expect("model serializes");
    std::fs::write(path, json).map_err(|source| LdaError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_model(path: &Path) -> Result<ModelFile, LdaError> {
    let text = std::fs::read_to_string(path).map_err(|source| LdaError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let file: ModelFile =
        serde_json::from_str(&text).map_err(|e| LdaError::BadModelFile(e.to_string()))?;
    if file.version != MODEL_FILE_VERSION {
        return Err(LdaError::BadModelFile(format!(
            "unsupported version {}",
            file.version
        )));
    }
    Ok(file)
}
