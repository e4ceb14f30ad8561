//! Pipeline orchestration: stage runners that communicate only through
//! files, a run manifest with content digests, and the report assembler.
//! Every stage can be rerun or replaced independently.

pub mod cli;
pub mod manifest;
pub mod report;

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use chrono::{DateTime, TimeZone, Utc};
use sha2::Digest;
use thiserror::Error;

use crate::cascade::{self, SelectionRule};
use crate::changepoint::{self, StopRule};
use crate::coherence;
use crate::embed;
use crate::ingest::{self, FilterMode, Strictness, TweetRecord};
use crate::textprep::{self, Document, StopwordList};
use crate::topics::{self, LdaHyperparams, TopicLabel};
use crate::trends::{self, PatternSet, TimeSeries};
use crate::vectorize::{self, SparseMatrix, Vocabulary, WeightKind};

#[derive(Debug, Error)]
pub enum PipelineError {
    /// Bad invocation or configuration; exit code 2.
    #[error("{0}")]
    Usage(String),
    /// Stage execution failure; exit code 1.
    #[error("{0}")]
    Internal(String),
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Usage(_) => 2,
            PipelineError::Internal(_) => 1,
        }
    }
}

macro_rules! internal {
    ($($arg:tt)*) => { PipelineError::Internal(format!($($arg)*)) };
}

macro_rules! usage {
    ($($arg:tt)*) => { PipelineError::Usage(format!($($arg)*)) };
}

#[derive(Debug, Clone)]
pub struct StageContext {
    pub seed: u64,
    pub parallel: bool,
    pub manifest: Option<PathBuf>,
}

impl StageContext {
    /// Per-stage seed derived from the run seed and the stage name.
    pub fn stage_seed(&self, stage: &str) -> u64 {
        let mut hasher = sha2::Sha256::new();
        hasher.update(self.seed.to_le_bytes());
        hasher.update(stage.as_bytes());
        let digest = hasher.finalize();
        u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
    }
}

/// Files written by the running stage; removed if the stage fails.
#[derive(Default)]
pub struct OutputTracker {
    written: Vec<PathBuf>,
}

impl OutputTracker {
    pub fn write(&mut self, path: &Path, bytes: &[u8]) -> Result<(), PipelineError> {
        std::fs::write(path, bytes)
            .map_err(|e| internal!("cannot write {}: {e}", path.display()))?;
        self.written.push(path.to_path_buf());
        Ok(())
    }

    pub fn track(&mut self, path: &Path) {
        self.written.push(path.to_path_buf());
    }

    fn cleanup(&self) {
        for path in &self.written {
            let _ = std::fs::remove_file(path);
        }
    }
}

fn require_inputs(paths: &[&Path]) -> Result<(), PipelineError> {
    for path in paths {
        if !path.exists() {
            return Err(usage!("input file not found: {}", path.display()));
        }
    }
    Ok(())
}

fn run_stage<F>(
    ctx: &StageContext,
    stage: &str,
    inputs: Vec<PathBuf>,
    body: F,
) -> Result<(), PipelineError>
where
    F: FnOnce(&mut OutputTracker) -> Result<serde_json::Value, PipelineError>,
{
    let refs: Vec<&Path> = inputs.iter().map(PathBuf::as_path).collect();
    require_inputs(&refs)?;
    let started = Instant::now();
    let mut tracker = OutputTracker::default();
    match body(&mut tracker) {
        Ok(params) => {
            if let Some(manifest_path) = &ctx.manifest {
                let run = manifest::StageRun {
                    stage: stage.to_string(),
                    seed: ctx.stage_seed(stage),
                    params,
                    inputs: manifest::digest_paths(&inputs)?,
                    outputs: manifest::digest_paths(&tracker.written)?,
                };
                manifest::RunManifest::append_atomic(manifest_path, run)?;
                manifest::record_timing(manifest_path, stage, started.elapsed().as_millis());
            }
            Ok(())
        }
        Err(e) => {
            tracker.cleanup();
            Err(e)
        }
    }
}

// ---------------------------------------------------------------------------
// Shared file helpers
// ---------------------------------------------------------------------------

pub fn read_records(path: &Path) -> Result<Vec<TweetRecord>, PipelineError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| internal!("cannot read {}: {e}", path.display()))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| internal!("{} line {}: {e}", path.display(), i + 1))
        })
        .collect()
}

fn records_to_jsonl(records: &[TweetRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    out
}

pub fn read_docs(path: &Path) -> Result<Vec<Document>, PipelineError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| internal!("cannot read {}: {e}", path.display()))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| internal!("{} line {}: {e}", path.display(), i + 1))
        })
        .collect()
}

fn docs_to_jsonl(docs: &[Document]) -> String {
    let mut out = String::new();
    for d in docs {
        out.push_str(&serde_json::to_string(d).expect("document serializes"));
        out.push('\n');
    }
    out
}

fn minute_to_rfc3339(minute: i64) -> String {
    Utc.timestamp_opt(minute * 60, 0)
        .unwrap()
        .to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

fn series_csv(
    series: &BTreeMap<String, TimeSeries>,
    order: &[String],
    value_header: &str,
    integral: bool,
) -> String {
    let mut out = format!("minute_utc,label,{value_header}\n");
    for label in order {
        let Some(s) = series.get(label) else { continue };
        for (i, v) in s.values.iter().enumerate() {
            let rendered = if integral {
                format!("{}", *v as i64)
            } else {
                format!("{v:.6}")
            };
            out.push_str(&format!(
                "{},{label},{rendered}\n",
                minute_to_rfc3339(s.t0_minute + i as i64)
            ));
        }
    }
    out
}

/// Read one labeled series from a `minute_utc,label,value` CSV, filling
/// interior gaps with zeros.
pub fn read_series_csv(path: &Path, label: &str) -> Result<TimeSeries, PipelineError> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| internal!("cannot read {}: {e}", path.display()))?;
    let mut points: Vec<(i64, f64)> = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| internal!("{}: {e}", path.display()))?;
        if row.len() < 3 || &row[1] != label {
            continue;
        }
        let minute = DateTime::parse_from_rfc3339(&row[0])
            .map_err(|e| internal!("bad minute_utc {:?}: {e}", &row[0]))?
            .with_timezone(&Utc)
            .timestamp()
            .div_euclid(60);
        let value: f64 = row[2]
            .parse()
            .map_err(|e| internal!("bad value {:?}: {e}", &row[2]))?;
        points.push((minute, value));
    }
    if points.is_empty() {
        return Err(usage!("series {label:?} not found in {}", path.display()));
    }
    points.sort_by_key(|&(m, _)| m);
    let t0 = points[0].0;
    let len = (points.last().unwrap().0 - t0 + 1) as usize;
    let mut values = vec![0.0; len];
    for (m, v) in points {
        values[(m - t0) as usize] = v;
    }
    Ok(TimeSeries {
        name: label.to_string(),
        t0_minute: t0,
        values,
    })
}

// ---------------------------------------------------------------------------
// Stage: ingest
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct IngestArgs {
    pub input: PathBuf,
    pub out: PathBuf,
    pub report: Option<PathBuf>,
    pub quarantine: Option<PathBuf>,
    pub stats: Option<PathBuf>,
    pub filter: FilterMode,
    pub strictness: Strictness,
}

pub fn ingest_stage(ctx: &StageContext, args: &IngestArgs) -> Result<(), PipelineError> {
    run_stage(ctx, "ingest", vec![args.input.clone()], |tracker| {
        let parsed = ingest::parse_archive(&args.input, args.strictness)
            .map_err(|e| internal!("parse failed: {e}"))?;
        let records = ingest::filter_records(parsed.records, args.filter);
        tracker.write(&args.out, records_to_jsonl(&records).as_bytes())?;
        if let Some(report_path) = &args.report {
            let json = serde_json::to_string_pretty(&parsed.report).expect("report serializes");
            tracker.write(report_path, json.as_bytes())?;
        }
        if let Some(quarantine_path) = &args.quarantine {
            tracker.write(
                quarantine_path,
                records_to_jsonl(&parsed.quarantined).as_bytes(),
            )?;
        }
        if let Some(stats_path) = &args.stats {
            let stats = ingest::corpus_stats(&records)
                .map_err(|e| internal!("corpus stats failed: {e}"))?;
            let json = serde_json::to_string_pretty(&stats).expect("stats serialize");
            tracker.write(stats_path, json.as_bytes())?;
        }
        Ok(serde_json::json!({
            "filter": format!("{:?}", args.filter),
            "strictness": format!("{:?}", args.strictness),
            "lines": parsed.report.lines,
            "parsed": parsed.report.parsed,
            "skipped": parsed.report.skipped,
            "quarantined": parsed.report.quarantined,
            "kept": records.len(),
        }))
    })
}

// ---------------------------------------------------------------------------
// Stage: preprocess
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct PreprocessArgs {
    pub input: PathBuf,
    pub out: PathBuf,
    pub stopwords: Option<PathBuf>,
}

pub fn preprocess_stage(ctx: &StageContext, args: &PreprocessArgs) -> Result<(), PipelineError> {
    let mut inputs = vec![args.input.clone()];
    if let Some(sw) = &args.stopwords {
        inputs.push(sw.clone());
    }
    run_stage(ctx, "preprocess", inputs, |tracker| {
        let records = read_records(&args.input)?;
        let stopwords = match &args.stopwords {
            Some(path) => StopwordList::from_file(path).map_err(|e| usage!("{e}"))?,
            None => StopwordList::default_english(),
        };
        let docs = textprep::preprocess_corpus(&records, &stopwords);
        let empty = docs.iter().filter(|d| d.is_empty()).count();
        tracker.write(&args.out, docs_to_jsonl(&docs).as_bytes())?;
        Ok(serde_json::json!({
            "stopwords": args.stopwords.as_ref().map(|p| p.display().to_string()),
            "documents": docs.len(),
            "empty_documents": empty,
        }))
    })
}

// ---------------------------------------------------------------------------
// Stage: keywords
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct KeywordsArgs {
    pub input: PathBuf,
    pub patterns: Option<PathBuf>,
    pub out: PathBuf,
    pub smoothed: Option<PathBuf>,
    pub window: usize,
    pub rates: Option<PathBuf>,
}

pub fn keywords_stage(ctx: &StageContext, args: &KeywordsArgs) -> Result<(), PipelineError> {
    let mut inputs = vec![args.input.clone()];
    if let Some(p) = &args.patterns {
        inputs.push(p.clone());
    }
    run_stage(ctx, "keywords", inputs, |tracker| {
        let records = read_records(&args.input)?;
        let patterns = match &args.patterns {
            Some(path) => PatternSet::from_file(path).map_err(|e| usage!("{e}"))?,
            None => PatternSet::defaults(),
        };
        let matched = if ctx.parallel {
            trends::match_corpus_parallel(&records, &patterns)
        } else {
            trends::match_corpus(&records, &patterns)
        };
        let labels = patterns.labels();
        let series = trends::bucket_counts(&matched, &labels)
            .map_err(|e| internal!("bucketing failed: {e}"))?;
        tracker.write(
            &args.out,
            series_csv(&series, &labels, "count", true).as_bytes(),
        )?;
        if let Some(smoothed_path) = &args.smoothed {
            let mut smoothed = BTreeMap::new();
            for (label, s) in &series {
                let sm = trends::weighted_moving_average(s, args.window)
                    .map_err(|e| internal!("smoothing failed: {e}"))?;
                smoothed.insert(label.clone(), sm);
            }
            tracker.write(
                smoothed_path,
                series_csv(&smoothed, &labels, "value", false).as_bytes(),
            )?;
        }
        if let Some(rates_path) = &args.rates {
            let mut csv = String::from("label,total,minutes,rate\n");
            for label in &labels {
                let s = &series[label];
                let total = s.total() as u64;
                let minutes = s.len() as u64;
                let rate = trends::per_minute_rate(total, minutes)
                    .map_err(|e| internal!("rate failed: {e}"))?;
                csv.push_str(&format!("{label},{total},{minutes},{:.3}\n", rate));
            }
            tracker.write(rates_path, csv.as_bytes())?;
        }
        Ok(serde_json::json!({
            "patterns": args.patterns.as_ref().map(|p| p.display().to_string()),
            "labels": labels,
            "window": args.window,
            "records": records.len(),
        }))
    })
}

// ---------------------------------------------------------------------------
// Stage: vectorize
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct VectorizeArgs {
    pub docs: PathBuf,
    pub matrix_out: PathBuf,
    pub vocab_out: PathBuf,
    pub max_features: usize,
    pub ngram: (usize, usize),
    pub weighting: WeightKind,
    pub top: Option<usize>,
    pub top_out: Option<PathBuf>,
}

pub fn vectorize_stage(ctx: &StageContext, args: &VectorizeArgs) -> Result<(), PipelineError> {
    run_stage(ctx, "vectorize", vec![args.docs.clone()], |tracker| {
        let docs = read_docs(&args.docs)?;
        let vocab = vectorize::build_vocab(&docs, args.max_features, args.ngram)
            .map_err(|e| usage!("vocabulary failed: {e}"))?;
        let counts = vectorize::count_matrix(&docs, &vocab);
        let matrix = match args.weighting {
            WeightKind::Count => counts,
            WeightKind::TfIdf => {
                vectorize::tfidf(&counts, &vocab).map_err(|e| internal!("tfidf failed: {e}"))?
            }
        };
        vocab.save(&args.vocab_out).map_err(|e| internal!("{e}"))?;
        tracker.track(&args.vocab_out);
        matrix
            .save(&args.matrix_out)
            .map_err(|e| internal!("{e}"))?;
        tracker.track(&args.matrix_out);
        if let (Some(k), Some(top_out)) = (args.top, &args.top_out) {
            let scored = match args.weighting {
                WeightKind::TfIdf => vectorize::top_features(&matrix, &vocab, k),
                WeightKind::Count => {
                    let w = vectorize::tfidf(&matrix, &vocab)
                        .map_err(|e| internal!("tfidf failed: {e}"))?;
                    vectorize::top_features(&w, &vocab, k)
                }
            };
            let mut csv = String::from("term,score\n");
            for (term, score) in scored {
                csv.push_str(&format!("{term},{score:.6}\n"));
            }
            tracker.write(top_out, csv.as_bytes())?;
        }
        Ok(serde_json::json!({
            "max_features": args.max_features,
            "ngram": [args.ngram.0, args.ngram.1],
            "weighting": match args.weighting { WeightKind::Count => "count", WeightKind::TfIdf => "tfidf" },
            "n_docs": matrix.n_rows,
            "n_features": matrix.n_cols,
            "nnz": matrix.nnz(),
        }))
    })
}

// ---------------------------------------------------------------------------
// Stage: lda
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct LdaArgs {
    pub matrix: PathBuf,
    pub vocab: PathBuf,
    pub docs: Option<PathBuf>,
    pub k: usize,
    pub iterations: usize,
    pub passes: usize,
    pub chunk_size: usize,
    pub gamma_threshold: f64,
    pub alpha: Option<f64>,
    pub eta: Option<f64>,
    pub model_out: PathBuf,
    pub assignments: Option<PathBuf>,
    pub series: Option<PathBuf>,
    pub uniform_tol: f64,
}

fn load_matrix_and_vocab(
    matrix_path: &Path,
    vocab_path: &Path,
) -> Result<(SparseMatrix, Vocabulary), PipelineError> {
    let matrix = SparseMatrix::load(matrix_path).map_err(|e| internal!("{e}"))?;
    let vocab = Vocabulary::load(vocab_path).map_err(|e| internal!("{e}"))?;
    Ok((matrix, vocab))
}

fn assignments_rows(
    model: &topics::TopicModel,
    docs: &[Document],
    uniform_tol: f64,
) -> Result<Vec<(String, TopicLabel, f64, i64)>, PipelineError> {
    if docs.len() != model.n_docs {
        return Err(usage!(
            "documents file has {} rows but the model was trained on {}",
            docs.len(),
            model.n_docs
        ));
    }
    Ok(docs
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let theta = model.theta_row(i);
            let label = if model.empty_docs.binary_search(&(i as u32)).is_ok() {
                TopicLabel::Undefined100
            } else {
                topics::assign_topic(theta, uniform_tol)
            };
            let theta_max = theta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (d.tweet_id.clone(), label, theta_max, d.minute)
        })
        .collect())
}

pub fn lda_stage(ctx: &StageContext, args: &LdaArgs) -> Result<(), PipelineError> {
    let mut inputs = vec![args.matrix.clone(), args.vocab.clone()];
    if let Some(d) = &args.docs {
        inputs.push(d.clone());
    }
    run_stage(ctx, "lda", inputs, |tracker| {
        let (matrix, vocab) = load_matrix_and_vocab(&args.matrix, &args.vocab)?;
        let mut params = LdaHyperparams::new(args.k, ctx.stage_seed("lda"));
        params.iterations = args.iterations;
        params.passes = args.passes;
        params.chunk_size = args.chunk_size;
        params.gamma_threshold = args.gamma_threshold;
        if let Some(alpha) = args.alpha {
            params.alpha = alpha;
        }
        if let Some(eta) = args.eta {
            params.eta = eta;
        }
        let model = topics::train_lda(&matrix, &vocab, &params)
            .map_err(|e| internal!("training failed: {e}"))?;
        let vocab_sha = manifest::sha256_file(&args.vocab)?;
        topics::save_model(&model, &vocab_sha, &args.model_out).map_err(|e| internal!("{e}"))?;
        tracker.track(&args.model_out);

        if args.assignments.is_some() || args.series.is_some() {
            let docs_path = args
                .docs
                .as_ref()
                .ok_or_else(|| usage!("--docs is required for assignments or series output"))?;
            let docs = read_docs(docs_path)?;
            let rows = assignments_rows(&model, &docs, args.uniform_tol)?;
            if let Some(assignments_path) = &args.assignments {
                let mut csv = String::from("tweet_id,topic,theta_max\n");
                for (tweet_id, label, theta_max, _) in &rows {
                    csv.push_str(&format!("{tweet_id},{},{theta_max:.6}\n", label.as_csv()));
                }
                tracker.write(assignments_path, csv.as_bytes())?;
            }
            if let Some(series_path) = &args.series {
                let matched: Vec<trends::MatchedRecord> = rows
                    .iter()
                    .map(|(_, label, _, minute)| trends::MatchedRecord {
                        minute: *minute,
                        labels: std::iter::once(label.as_csv()).collect(),
                    })
                    .collect();
                let mut labels: Vec<String> = (0..args.k).map(|i| i.to_string()).collect();
                labels.push("100".to_string());
                let series = trends::bucket_counts(&matched, &labels)
                    .map_err(|e| internal!("series failed: {e}"))?;
                tracker.write(
                    series_path,
                    series_csv(&series, &labels, "count", true).as_bytes(),
                )?;
            }
        }
        Ok(serde_json::json!({
            "k": args.k,
            "alpha": params.alpha,
            "eta": params.eta,
            "iterations": params.iterations,
            "passes": params.passes,
            "chunk_size": params.chunk_size,
            "gamma_threshold": params.gamma_threshold,
            "uniform_tol": args.uniform_tol,
            "empty_docs": model.empty_docs.len(),
        }))
    })
}

// ---------------------------------------------------------------------------
// Stage: sweep
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct SweepArgs {
    pub matrix: PathBuf,
    pub vocab: PathBuf,
    pub docs: PathBuf,
    pub grid: Vec<usize>,
    pub iterations: usize,
    pub passes: usize,
    pub window_width: usize,
    pub out: PathBuf,
    pub best_model: Option<PathBuf>,
}

pub fn sweep_stage(ctx: &StageContext, args: &SweepArgs) -> Result<(), PipelineError> {
    run_stage(
        ctx,
        "sweep",
        vec![args.matrix.clone(), args.vocab.clone(), args.docs.clone()],
        |tracker| {
            let (matrix, vocab) = load_matrix_and_vocab(&args.matrix, &args.vocab)?;
            let docs: Vec<Document> = read_docs(&args.docs)?
                .into_iter()
                .filter(|d| !d.is_empty())
                .collect();
            let mut base = LdaHyperparams::new(2, ctx.stage_seed("sweep"));
            base.iterations = args.iterations;
            base.passes = args.passes;
            let sweep = topics::sweep_topic_counts(
                &matrix,
                &vocab,
                &docs,
                &args.grid,
                &base,
                args.window_width,
                ctx.parallel,
            )
            .map_err(|e| internal!("sweep failed: {e}"))?;
            let mut csv = String::from("k,mean_cv,selected\n");
            for entry in &sweep.entries {
                let mean = entry
                    .mean_cv
                    .map(|v| format!("{v:.6}"))
                    .unwrap_or_else(|| "NA".to_string());
                let selected = sweep.selected == Some(entry.k);
                csv.push_str(&format!("{},{},{}\n", entry.k, mean, selected));
            }
            tracker.write(&args.out, csv.as_bytes())?;
            if let (Some(best_path), Some(best_k)) = (&args.best_model, sweep.selected) {
                let mut params = LdaHyperparams::new(best_k, ctx.stage_seed("sweep"));
                params.iterations = args.iterations;
                params.passes = args.passes;
                let mut model = topics::train_lda(&matrix, &vocab, &params)
                    .map_err(|e| internal!("best-K training failed: {e}"))?;
                let entry = sweep.entries.iter().find(|e| e.k == best_k);
                if let Some(entry) = entry {
                    model.coherence = Some(coherence::CvReport {
                        per_topic: entry.per_topic.clone(),
                        mean: entry.mean_cv,
                    });
                }
                let vocab_sha = manifest::sha256_file(&args.vocab)?;
                topics::save_model(&model, &vocab_sha, best_path).map_err(|e| internal!("{e}"))?;
                tracker.track(best_path);
            }
            Ok(serde_json::json!({
                "grid": args.grid,
                "iterations": args.iterations,
                "passes": args.passes,
                "window_width": args.window_width,
                "selected": sweep.selected,
            }))
        },
    )
}

// ---------------------------------------------------------------------------
// Stage: coherence
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct CoherenceArgs {
    pub model: PathBuf,
    pub docs: PathBuf,
    pub window_width: usize,
    pub out: PathBuf,
}

pub fn coherence_stage(ctx: &StageContext, args: &CoherenceArgs) -> Result<(), PipelineError> {
    run_stage(
        ctx,
        "coherence",
        vec![args.model.clone(), args.docs.clone()],
        |tracker| {
            let model = topics::load_model(&args.model).map_err(|e| usage!("{e}"))?;
            let docs: Vec<Document> = read_docs(&args.docs)?
                .into_iter()
                .filter(|d| !d.is_empty())
                .collect();
            let tracked: std::collections::HashSet<String> =
                model.top_terms.iter().flatten().cloned().collect();
            let stats =
                coherence::WindowStats::from_documents(&docs, args.window_width, Some(&tracked))
                    .map_err(|e| internal!("window stats failed: {e}"))?;
            let report = coherence::c_v(&model.top_terms, &stats);
            let k = model.params.k;
            let mut csv = String::from("k,topic,score\n");
            for (topic, score) in report.per_topic.iter().enumerate() {
                let rendered = score
                    .map(|s| format!("{s:.6}"))
                    .unwrap_or_else(|| "NA".to_string());
                csv.push_str(&format!("{k},{topic},{rendered}\n"));
            }
            if let Some(mean) = report.mean {
                csv.push_str(&format!("{k},mean,{mean:.6}\n"));
            }
            tracker.write(&args.out, csv.as_bytes())?;
            Ok(serde_json::json!({
                "window_width": args.window_width,
                "k": k,
                "mean_cv": report.mean,
            }))
        },
    )
}

// ---------------------------------------------------------------------------
// Stage: umap
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct UmapArgs {
    pub matrix: PathBuf,
    pub labels: Option<PathBuf>,
    pub out: PathBuf,
    pub svg: PathBuf,
    pub n_neighbors: usize,
    pub min_dist: f64,
    pub epochs: Option<usize>,
    pub sample: Option<usize>,
    pub exact_threshold: usize,
    pub metric: embed::Metric,
}

fn read_assignment_labels(path: &Path) -> Result<Vec<String>, PipelineError> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| internal!("cannot read {}: {e}", path.display()))?;
    let mut labels = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| internal!("{}: {e}", path.display()))?;
        if row.len() >= 2 {
            labels.push(row[1].to_string());
        }
    }
    Ok(labels)
}

pub fn umap_stage(ctx: &StageContext, args: &UmapArgs) -> Result<(), PipelineError> {
    let mut inputs = vec![args.matrix.clone()];
    if let Some(l) = &args.labels {
        inputs.push(l.clone());
    }
    run_stage(ctx, "umap", inputs, |tracker| {
        let matrix = SparseMatrix::load(&args.matrix).map_err(|e| internal!("{e}"))?;
        let labels = match &args.labels {
            Some(path) => {
                let labels = read_assignment_labels(path)?;
                if labels.len() != matrix.n_rows {
                    return Err(usage!(
                        "labels file has {} rows but the matrix has {}",
                        labels.len(),
                        matrix.n_rows
                    ));
                }
                labels
            }
            None => vec!["0".to_string(); matrix.n_rows],
        };
        // Optional seeded subsample for large corpora.
        let (matrix, labels) = match args.sample {
            Some(sample) if sample < matrix.n_rows => {
                use rand::seq::SliceRandom;
                use rand::SeedableRng;
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(ctx.stage_seed("umap-sample"));
                let mut idx: Vec<usize> = (0..matrix.n_rows).collect();
                idx.shuffle(&mut rng);
                idx.truncate(sample);
                idx.sort_unstable();
                let rows: Vec<Vec<(u32, f64)>> =
                    idx.iter().map(|&i| matrix.row(i).to_vec()).collect();
                let sampled_labels: Vec<String> = idx.iter().map(|&i| labels[i].clone()).collect();
                (
                    SparseMatrix::from_rows(matrix.n_cols, matrix.kind, rows),
                    sampled_labels,
                )
            }
            _ => (matrix, labels),
        };
        let mut params = embed::UmapParams::new(ctx.stage_seed("umap"));
        params.n_neighbors = args.n_neighbors;
        params.min_dist = args.min_dist;
        params.epochs = args.epochs;
        params.exact_threshold = args.exact_threshold;
        params.metric = args.metric;
        let embedding = embed::fit_umap(&matrix, &params).map_err(|e| internal!("{e}"))?;
        embed::export_scatter(&embedding, &labels, &args.out, &args.svg)
            .map_err(|e| internal!("{e}"))?;
        tracker.track(&args.out);
        tracker.track(&args.svg);
        tracker.track(&args.out.with_extension("params.json"));
        Ok(serde_json::json!({
            "n_neighbors": params.n_neighbors,
            "min_dist": params.min_dist,
            "epochs": params.epochs,
            "metric": format!("{:?}", params.metric),
            "rows": matrix.n_rows,
            "sample": args.sample,
        }))
    })
}

// ---------------------------------------------------------------------------
// Stage: changepoint
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct ChangepointArgs {
    pub series: PathBuf,
    pub label: String,
    pub ewma_span: Option<usize>,
    pub n_bkps: Option<usize>,
    pub penalty: Option<f64>,
    pub out: PathBuf,
    pub svg: Option<PathBuf>,
    pub event: Option<DateTime<Utc>>,
}

pub fn changepoint_stage(ctx: &StageContext, args: &ChangepointArgs) -> Result<(), PipelineError> {
    run_stage(ctx, "changepoint", vec![args.series.clone()], |tracker| {
        let series = read_series_csv(&args.series, &args.label)?;
        let values = match args.ewma_span {
            Some(span) => changepoint::ewma(&series.values, span)
                .map_err(|e| internal!("ewma failed: {e}"))?,
            None => series.values.clone(),
        };
        let stop = match (args.n_bkps, args.penalty) {
            (_, Some(beta)) => StopRule::Penalty(beta),
            (Some(k), None) => StopRule::FixedBreakpoints(k),
            (None, None) => StopRule::FixedBreakpoints(10),
        };
        let result =
            changepoint::binseg(&values, stop).map_err(|e| usage!("segmentation failed: {e}"))?;
        let mut csv =
            String::from("series,breakpoint_minute_utc,segment_mean_before,segment_mean_after\n");
        let mut bounds = vec![0usize];
        bounds.extend_from_slice(&result.breakpoints);
        bounds.push(values.len());
        for w in 1..bounds.len() - 1 {
            let (a, b, c) = (bounds[w - 1], bounds[w], bounds[w + 1]);
            let before = values[a..b].iter().sum::<f64>() / (b - a) as f64;
            let after = values[b..c].iter().sum::<f64>() / (c - b) as f64;
            csv.push_str(&format!(
                "{},{},{before:.6},{after:.6}\n",
                args.label,
                minute_to_rfc3339(series.t0_minute + b as i64),
            ));
        }
        tracker.write(&args.out, csv.as_bytes())?;
        if let Some(svg_path) = &args.svg {
            crate::plot::series_svg(&values, &result.breakpoints, svg_path)
                .map_err(|e| internal!("plot failed: {e}"))?;
            tracker.track(svg_path);
        }
        let event_offset = args.event.map(|event| {
            let event_minute = event.timestamp().div_euclid(60);
            changepoint::event_alignment(&result, event_minute, series.t0_minute)
        });
        if let Some(offset) = &event_offset {
            match offset {
                Some(minutes) => println!("event offset: {minutes} minutes"),
                None => println!("event offset: no breakpoints detected"),
            }
        }
        Ok(serde_json::json!({
            "label": args.label,
            "ewma_span": args.ewma_span,
            "stop": format!("{stop:?}"),
            "breakpoints": result.breakpoints,
            "total_cost": result.total_cost,
            "event_offset_minutes": event_offset.flatten(),
        }))
    })
}

// ---------------------------------------------------------------------------
// Stage: retweets
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct RetweetsArgs {
    pub input: PathBuf,
    pub stats_out: PathBuf,
    pub hist: Option<PathBuf>,
    pub log_hist: Option<PathBuf>,
}

pub fn retweets_stage(ctx: &StageContext, args: &RetweetsArgs) -> Result<(), PipelineError> {
    run_stage(ctx, "retweets", vec![args.input.clone()], |tracker| {
        let records = read_records(&args.input)?;
        let (events, quarantined) = cascade::collect_events(&records);
        let stats = cascade::retweet_stats(&events).map_err(|e| usage!("{e}"))?;
        let json = serde_json::json!({
            "count": stats.count,
            "quarantined": quarantined,
            "median_s": stats.median_s,
            "mean_s": stats.mean_s,
            "median_h": stats.median_s / 3600.0,
            "mean_h": stats.mean_s / 3600.0,
        });
        tracker.write(
            &args.stats_out,
            serde_json::to_string_pretty(&json).unwrap().as_bytes(),
        )?;
        if let Some(hist_path) = &args.hist {
            let mut csv = String::from("bin_lo_s,count\n");
            for (bin, count) in &stats.linear_hist.counts {
                csv.push_str(&format!(
                    "{},{count}\n",
                    *bin as f64 * stats.linear_hist.bin_width
                ));
            }
            tracker.write(hist_path, csv.as_bytes())?;
        }
        if let Some(log_path) = &args.log_hist {
            let mut csv = String::from("log10_lo,count\n");
            for (bin, count) in &stats.log_hist.counts {
                csv.push_str(&format!(
                    "{:.1},{count}\n",
                    *bin as f64 * stats.log_hist.bin_width
                ));
            }
            tracker.write(log_path, csv.as_bytes())?;
        }
        Ok(serde_json::json!({
            "events": stats.count,
            "quarantined": quarantined,
            "median_s": stats.median_s,
            "mean_s": stats.mean_s,
        }))
    })
}

// ---------------------------------------------------------------------------
// Stage: cascade
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct CascadeArgs {
    pub input: PathBuf,
    pub time_points: Vec<f64>,
    pub max_edges: usize,
    pub rule: SelectionRule,
    pub out_dir: PathBuf,
    pub layout_sweeps: usize,
    pub layout: bool,
}

pub fn cascade_stage(ctx: &StageContext, args: &CascadeArgs) -> Result<(), PipelineError> {
    run_stage(ctx, "cascade", vec![args.input.clone()], |tracker| {
        std::fs::create_dir_all(&args.out_dir)
            .map_err(|e| internal!("cannot create {}: {e}", args.out_dir.display()))?;
        let records = read_records(&args.input)?;
        let (events, _) = cascade::collect_events(&records);
        if events.is_empty() {
            return Err(usage!("no retweet events in {}", args.input.display()));
        }
        let mut stats_csv =
            String::from("graph,ranking_speed,time_point_s,density,nodes,first,second,third\n");
        let build_one = |(idx, &tp): (usize, &f64)| -> Result<
            (String, cascade::CascadeGraph, cascade::GraphStats),
            PipelineError,
        > {
            let label = format!("G{}", idx + 1);
            let graph = cascade::build_cascade(&events, tp, args.max_edges, args.rule, &label)
                .map_err(|e| internal!("{label}: {e}"))?;
            let stats = cascade::graph_stats(&graph).map_err(|e| internal!("{label}: {e}"))?;
            Ok((label, graph, stats))
        };
        let built: Vec<(String, cascade::CascadeGraph, cascade::GraphStats)> = if ctx.parallel {
            use rayon::prelude::*;
            args.time_points
                .par_iter()
                .enumerate()
                .map(build_one)
                .collect::<Result<Vec<_>, _>>()?
        } else {
            args.time_points
                .iter()
                .enumerate()
                .map(build_one)
                .collect::<Result<Vec<_>, _>>()?
        };
        for (idx, (label, graph, stats)) in built.iter().enumerate() {
            let mut degrees = stats.top_degrees.iter().map(|(d, _)| *d);
            stats_csv.push_str(&format!(
                "{label},{},{},{:.6},{},{},{},{}\n",
                idx + 1,
                graph.time_point_s,
                stats.density,
                stats.n_nodes,
                degrees.next().unwrap_or(0),
                degrees.next().unwrap_or(0),
                degrees.next().unwrap_or(0),
            ));
            let mut edges_csv = String::from("source,target,delta_s,multiplicity\n");
            for e in &graph.edges {
                edges_csv.push_str(&format!(
                    "{},{},{},{}\n",
                    graph.node_id(e.source),
                    graph.node_id(e.target),
                    e.delta_s,
                    e.multiplicity
                ));
            }
            let edges_path = args.out_dir.join(format!("{label}_edges.csv"));
            tracker.write(&edges_path, edges_csv.as_bytes())?;
            if args.layout {
                let layout = cascade::layout::kamada_kawai_layout(
                    graph,
                    args.layout_sweeps,
                    ctx.stage_seed(&format!("cascade-{label}")),
                );
                let mut degree = vec![0u32; graph.nodes.len()];
                for e in graph.simple_edges() {
                    degree[e.source as usize] += 1;
                    degree[e.target as usize] += 1;
                }
                let edge_pairs: Vec<(u32, u32)> =
                    graph.edges.iter().map(|e| (e.source, e.target)).collect();
                let svg_path = args.out_dir.join(format!("{label}.svg"));
                crate::plot::graph_svg(&layout.positions, &edge_pairs, &degree, &svg_path)
                    .map_err(|e| internal!("plot failed: {e}"))?;
                tracker.track(&svg_path);
            }
        }
        let stats_path = args.out_dir.join("cascade_stats.csv");
        tracker.write(&stats_path, stats_csv.as_bytes())?;
        Ok(serde_json::json!({
            "time_points": args.time_points,
            "max_edges": args.max_edges,
            "rule": format!("{:?}", args.rule),
            "events": events.len(),
            "layout": args.layout,
        }))
    })
}

// ---------------------------------------------------------------------------
// Stage: report
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct ReportArgs {
    pub manifest: PathBuf,
    pub out: PathBuf,
}

pub fn report_stage(ctx: &StageContext, args: &ReportArgs) -> Result<(), PipelineError> {
    run_stage(ctx, "report", vec![args.manifest.clone()], |tracker| {
        let manifest = manifest::RunManifest::load(&args.manifest)?;
        if manifest.runs.is_empty() {
            return Err(usage!(
                "nothing to report: manifest has no completed stages"
            ));
        }
        let markdown = report::render(&manifest)?;
        tracker.write(&args.out, markdown.as_bytes())?;
        let mut stderr = std::io::stderr();
        let _ = writeln!(stderr, "report written to {}", args.out.display());
        Ok(serde_json::json!({
            "sections_from": manifest.runs.len(),
        }))
    })
}
