//! Subcommand definitions and config-file resolution. Flags override config
//! values, which override defaults. All randomness flows from one run seed
//! fanned out per stage.

use std::path::PathBuf;

use chrono::{DateTime, Utc};
use clap::{Parser, Subcommand};

use super::{
    cascade_stage, changepoint_stage, coherence_stage, ingest_stage, keywords_stage, lda_stage,
    preprocess_stage, report_stage, retweets_stage, sweep_stage, umap_stage, vectorize_stage,
    CascadeArgs, ChangepointArgs, CoherenceArgs, IngestArgs, KeywordsArgs, LdaArgs, PipelineError,
    PreprocessArgs, ReportArgs, RetweetsArgs, StageContext, SweepArgs, UmapArgs, VectorizeArgs,
};
use crate::cascade::{SelectionRule, BENCHMARK_TIME_POINTS, DEFAULT_MAX_EDGES};
use crate::embed::Metric;
use crate::ingest::{FilterMode, Strictness};
use crate::vectorize::WeightKind;

pub const DEFAULT_SEED: u64 = 42;

#[derive(Parser)]
#[command(
    name = "cascadescope",
    version,
    about = "Batch analytics over tweet archives: keyword trends, LDA topics, UMAP, changepoints, and retweet cascades"
)]
pub struct Cli {
    /// TOML config with per-stage sections; flags override file values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Run seed, fanned out deterministically per stage.
    #[arg(long, global = true, env = "CASCADESCOPE_SEED")]
    pub seed: Option<u64>,
    /// Manifest file; every stage appends its parameters and digests.
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,
    /// Enable documented intra-stage parallelism.
    #[arg(long, global = true)]
    pub parallel: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Parse a newline-delimited tweet archive into canonical records.
    Ingest {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Parse report JSON ({lines, parsed, skipped, quarantined}).
        #[arg(long)]
        report: Option<PathBuf>,
        /// Where to write quarantined records (negative retweet deltas).
        #[arg(long)]
        quarantine: Option<PathBuf>,
        /// Corpus statistics JSON.
        #[arg(long)]
        stats: Option<PathBuf>,
        /// originals | retweets | all
        #[arg(long)]
        filter: Option<String>,
        /// Abort on the first malformed line instead of skipping.
        #[arg(long)]
        strict: bool,
    },
    /// Normalize, tokenize, and stem records into documents.
    Preprocess {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Stopword file (one word per line, '#' comments).
        #[arg(long)]
        stopwords: Option<PathBuf>,
    },
    /// Match keyword patterns and emit per-minute count series.
    Keywords {
        #[arg(long)]
        input: PathBuf,
        /// Pattern file of `label = "regex"` lines.
        #[arg(long)]
        patterns: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Smoothed series output (weighted moving average).
        #[arg(long)]
        smoothed: Option<PathBuf>,
        /// Smoothing window in minutes.
        #[arg(long)]
        window: Option<usize>,
        /// Per-label rate summary CSV.
        #[arg(long)]
        rates: Option<PathBuf>,
    },
    /// Build the vocabulary and document-term matrix.
    Vectorize {
        #[arg(long)]
        docs: PathBuf,
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        vocab: PathBuf,
        #[arg(long)]
        max_features: Option<usize>,
        /// N-gram range "lo,hi" with 1 <= lo <= hi <= 2.
        #[arg(long)]
        ngram: Option<String>,
        /// count | tfidf
        #[arg(long)]
        weighting: Option<String>,
        /// Rank the top-k features by summed TF-IDF score.
        #[arg(long)]
        top: Option<usize>,
        #[arg(long)]
        top_out: Option<PathBuf>,
    },
    /// Train one LDA model by collapsed Gibbs sampling.
    Lda {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        vocab: PathBuf,
        /// Documents file; required for --assignments and --series.
        #[arg(long)]
        docs: Option<PathBuf>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(long)]
        passes: Option<usize>,
        #[arg(long)]
        chunk_size: Option<usize>,
        #[arg(long)]
        gamma_threshold: Option<f64>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        eta: Option<f64>,
        #[arg(long)]
        out: PathBuf,
        /// Per-document topic assignment CSV (tweet_id,topic,theta_max).
        #[arg(long)]
        assignments: Option<PathBuf>,
        /// Per-topic per-minute count series CSV.
        #[arg(long)]
        series: Option<PathBuf>,
        /// Spread below which a distribution counts as uniform ("100").
        #[arg(long)]
        uniform_tol: Option<f64>,
    },
    /// Train models over a topic-count grid and select by mean coherence.
    Sweep {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        vocab: PathBuf,
        #[arg(long)]
        docs: PathBuf,
        /// Comma-separated topic counts; default 2,4,..,30.
        #[arg(long)]
        grid: Option<String>,
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(long)]
        passes: Option<usize>,
        #[arg(long)]
        window_width: Option<usize>,
        #[arg(long)]
        out: PathBuf,
        /// Retrain and save the selected model here.
        #[arg(long)]
        best_model: Option<PathBuf>,
    },
    /// Score a trained model's topics with C_v coherence.
    Coherence {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        docs: PathBuf,
        #[arg(long)]
        window_width: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Embed matrix rows into 2-D with UMAP.
    Umap {
        #[arg(long)]
        matrix: PathBuf,
        /// Assignment CSV supplying one label per row.
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        svg: Option<PathBuf>,
        #[arg(long)]
        n_neighbors: Option<usize>,
        #[arg(long)]
        min_dist: Option<f64>,
        #[arg(long)]
        epochs: Option<usize>,
        /// Seeded random subsample size for large corpora.
        #[arg(long)]
        sample: Option<usize>,
        #[arg(long)]
        exact_threshold: Option<usize>,
        /// hellinger | euclidean
        #[arg(long)]
        metric: Option<String>,
    },
    /// Detect changepoints on one labeled series.
    Changepoint {
        #[arg(long)]
        series: PathBuf,
        #[arg(long)]
        label: String,
        #[arg(long)]
        ewma_span: Option<usize>,
        #[arg(long)]
        n_bkps: Option<usize>,
        /// Penalty beta; overrides --n-bkps when set.
        #[arg(long)]
        penalty: Option<f64>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        svg: Option<PathBuf>,
        /// Event timestamp (RFC 3339) to align against breakpoints.
        #[arg(long)]
        event: Option<String>,
    },
    /// Time-to-retweet statistics and histograms.
    Retweets {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        hist: Option<PathBuf>,
        #[arg(long)]
        log_hist: Option<PathBuf>,
    },
    /// Build retweet cascade graphs at benchmark time points.
    Cascade {
        #[arg(long)]
        input: PathBuf,
        /// Comma-separated time points in seconds.
        #[arg(long)]
        time_points: Option<String>,
        #[arg(long)]
        max_edges: Option<usize>,
        /// nearest | at_most
        #[arg(long)]
        rule: Option<String>,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long)]
        layout_sweeps: Option<usize>,
        /// Skip the Kamada-Kawai layout SVGs.
        #[arg(long)]
        no_layout: bool,
    },
    /// Assemble a Markdown report from a manifest.
    Report {
        /// Manifest to read; defaults to the global --manifest.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Per-stage TOML configuration.
struct ConfigFile {
    table: toml::Table,
}

impl ConfigFile {
    fn load(path: Option<&PathBuf>) -> Result<Self, PipelineError> {
        let table = match path {
            None => toml::Table::new(),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| {
                    PipelineError::Usage(format!("cannot read config {}: {e}", p.display()))
                })?;
                text.parse()
                    .map_err(|e| PipelineError::Usage(format!("bad config {}: {e}", p.display())))?
            }
        };
        Ok(Self { table })
    }

    fn get(&self, stage: &str, key: &str) -> Option<&toml::Value> {
        self.table.get(stage)?.as_table()?.get(key)
    }

    fn schema_err(stage: &str, key: &str, expected: &str) -> PipelineError {
        PipelineError::Usage(format!("config field {stage}.{key}: expected {expected}"))
    }

    fn usize(&self, stage: &str, key: &str) -> Result<Option<usize>, PipelineError> {
        match self.get(stage, key) {
            None => Ok(None),
            Some(v) => v
                .as_integer()
                .filter(|&i| i >= 0)
                .map(|i| Some(i as usize))
                .ok_or_else(|| Self::schema_err(stage, key, "a non-negative integer")),
        }
    }

    fn f64(&self, stage: &str, key: &str) -> Result<Option<f64>, PipelineError> {
        match self.get(stage, key) {
            None => Ok(None),
            Some(v) => v
                .as_float()
                .or_else(|| v.as_integer().map(|i| i as f64))
                .map(Some)
                .ok_or_else(|| Self::schema_err(stage, key, "a number")),
        }
    }

    fn string(&self, stage: &str, key: &str) -> Result<Option<String>, PipelineError> {
        match self.get(stage, key) {
            None => Ok(None),
            Some(v) => v
                .as_str()
                .map(|s| Some(s.to_string()))
                .ok_or_else(|| Self::schema_err(stage, key, "a string")),
        }
    }
}

fn parse_filter(s: &str) -> Result<FilterMode, PipelineError> {
    match s {
        "originals" | "originals_only" => Ok(FilterMode::OriginalsOnly),
        "retweets" | "retweets_only" => Ok(FilterMode::RetweetsOnly),
        "all" => Ok(FilterMode::All),
        other => Err(PipelineError::Usage(format!(
            "--filter must be originals|retweets|all, got {other:?}"
        ))),
    }
}

fn parse_weighting(s: &str) -> Result<WeightKind, PipelineError> {
    match s {
        "count" => Ok(WeightKind::Count),
        "tfidf" => Ok(WeightKind::TfIdf),
        other => Err(PipelineError::Usage(format!(
            "--weighting must be count|tfidf, got {other:?}"
        ))),
    }
}

fn parse_rule(s: &str) -> Result<SelectionRule, PipelineError> {
    match s {
        "nearest" => Ok(SelectionRule::Nearest),
        "at_most" => Ok(SelectionRule::AtMost),
        other => Err(PipelineError::Usage(format!(
            "--rule must be nearest|at_most, got {other:?}"
        ))),
    }
}

fn parse_metric(s: &str) -> Result<Metric, PipelineError> {
    match s {
        "hellinger" => Ok(Metric::Hellinger),
        "euclidean" => Ok(Metric::Euclidean),
        other => Err(PipelineError::Usage(format!(
            "--metric must be hellinger|euclidean, got {other:?}"
        ))),
    }
}

fn parse_ngram(s: &str) -> Result<(usize, usize), PipelineError> {
    let parts: Vec<&str> = s.split(',').collect();
    let bad = || PipelineError::Usage(format!("--ngram must look like \"1,2\", got {s:?}"));
    if parts.len() != 2 {
        return Err(bad());
    }
    let lo = parts[0].trim().parse().map_err(|_| bad())?;
    let hi = parts[1].trim().parse().map_err(|_| bad())?;
    Ok((lo, hi))
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>, PipelineError> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<T>()
                .map_err(|_| PipelineError::Usage(format!("bad {what} element {p:?}")))
        })
        .collect()
}

fn parse_event(s: &str) -> Result<DateTime<Utc>, PipelineError> {
    DateTime::parse_from_rfc3339(s)
        .map(|t| t.with_timezone(&Utc))
        .map_err(|e| PipelineError::Usage(format!("--event must be RFC 3339: {e}")))
}

pub fn execute(cli: Cli) -> Result<(), PipelineError> {
    let cfg = ConfigFile::load(cli.config.as_ref())?;
    let seed = match cli.seed {
        Some(seed) => seed,
        None => cfg
            .usize("run", "seed")?
            .map(|v| v as u64)
            .unwrap_or(DEFAULT_SEED),
    };
    let ctx = StageContext {
        seed,
        parallel: cli.parallel,
        manifest: cli.manifest.clone(),
    };
    match cli.command {
        Command::Ingest {
            input,
            out,
            report,
            quarantine,
            stats,
            filter,
            strict,
        } => {
            let filter = match filter.or(cfg.string("ingest", "filter")?) {
                Some(s) => parse_filter(&s)?,
                None => FilterMode::All,
            };
            let strictness = if strict {
                Strictness::Strict
            } else {
                Strictness::Lenient
            };
            ingest_stage(
                &ctx,
                &IngestArgs {
                    input,
                    out,
                    report,
                    quarantine,
                    stats,
                    filter,
                    strictness,
                },
            )
        }
        Command::Preprocess {
            input,
            out,
            stopwords,
        } => {
            let stopwords = match stopwords {
                Some(p) => Some(p),
                None => cfg.string("preprocess", "stopwords")?.map(PathBuf::from),
            };
            preprocess_stage(
                &ctx,
                &PreprocessArgs {
                    input,
                    out,
                    stopwords,
                },
            )
        }
        Command::Keywords {
            input,
            patterns,
            out,
            smoothed,
            window,
            rates,
        } => {
            let patterns = match patterns {
                Some(p) => Some(p),
                None => cfg.string("keywords", "patterns")?.map(PathBuf::from),
            };
            let window = window.or(cfg.usize("keywords", "window")?).unwrap_or(60);
            keywords_stage(
                &ctx,
                &KeywordsArgs {
                    input,
                    patterns,
                    out,
                    smoothed,
                    window,
                    rates,
                },
            )
        }
        Command::Vectorize {
            docs,
            matrix,
            vocab,
            max_features,
            ngram,
            weighting,
            top,
            top_out,
        } => {
            let max_features = max_features
                .or(cfg.usize("vectorize", "max_features")?)
                .unwrap_or(10_000);
            let ngram = match ngram.or(cfg.string("vectorize", "ngram")?) {
                Some(s) => parse_ngram(&s)?,
                None => (1, 1),
            };
            let weighting = match weighting.or(cfg.string("vectorize", "weighting")?) {
                Some(s) => parse_weighting(&s)?,
                None => WeightKind::Count,
            };
            vectorize_stage(
                &ctx,
                &VectorizeArgs {
                    docs,
                    matrix_out: matrix,
                    vocab_out: vocab,
                    max_features,
                    ngram,
                    weighting,
                    top,
                    top_out,
                },
            )
        }
        Command::Lda {
            matrix,
            vocab,
            docs,
            k,
            iterations,
            passes,
            chunk_size,
            gamma_threshold,
            alpha,
            eta,
            out,
            assignments,
            series,
            uniform_tol,
        } => {
            let args = LdaArgs {
                matrix,
                vocab,
                docs,
                k: k.or(cfg.usize("lda", "k")?).unwrap_or(20),
                iterations: iterations
                    .or(cfg.usize("lda", "iterations")?)
                    .unwrap_or(100),
                passes: passes.or(cfg.usize("lda", "passes")?).unwrap_or(2),
                chunk_size: chunk_size
                    .or(cfg.usize("lda", "chunk_size")?)
                    .unwrap_or(10_000),
                gamma_threshold: gamma_threshold
                    .or(cfg.f64("lda", "gamma_threshold")?)
                    .unwrap_or(0.001),
                alpha: alpha.or(cfg.f64("lda", "alpha")?),
                eta: eta.or(cfg.f64("lda", "eta")?),
                model_out: out,
                assignments,
                series,
                uniform_tol: uniform_tol
                    .or(cfg.f64("lda", "uniform_tol")?)
                    .unwrap_or(crate::topics::DEFAULT_UNIFORM_TOL),
            };
            lda_stage(&ctx, &args)
        }
        Command::Sweep {
            matrix,
            vocab,
            docs,
            grid,
            iterations,
            passes,
            window_width,
            out,
            best_model,
        } => {
            let grid = match grid.or(cfg.string("sweep", "grid")?) {
                Some(s) => parse_list::<usize>(&s, "grid")?,
                None => crate::topics::default_sweep_grid(),
            };
            sweep_stage(
                &ctx,
                &SweepArgs {
                    matrix,
                    vocab,
                    docs,
                    grid,
                    iterations: iterations
                        .or(cfg.usize("sweep", "iterations")?)
                        .unwrap_or(100),
                    passes: passes.or(cfg.usize("sweep", "passes")?).unwrap_or(2),
                    window_width: window_width
                        .or(cfg.usize("sweep", "window_width")?)
                        .unwrap_or(crate::coherence::DEFAULT_WINDOW_WIDTH),
                    out,
                    best_model,
                },
            )
        }
        Command::Coherence {
            model,
            docs,
            window_width,
            out,
        } => coherence_stage(
            &ctx,
            &CoherenceArgs {
                model,
                docs,
                window_width: window_width
                    .or(cfg.usize("coherence", "window_width")?)
                    .unwrap_or(crate::coherence::DEFAULT_WINDOW_WIDTH),
                out,
            },
        ),
        Command::Umap {
            matrix,
            labels,
            out,
            svg,
            n_neighbors,
            min_dist,
            epochs,
            sample,
            exact_threshold,
            metric,
        } => {
            let svg = svg.unwrap_or_else(|| out.with_extension("svg"));
            let metric = match metric.or(cfg.string("umap", "metric")?) {
                Some(s) => parse_metric(&s)?,
                None => Metric::Hellinger,
            };
            umap_stage(
                &ctx,
                &UmapArgs {
                    matrix,
                    labels,
                    out,
                    svg,
                    n_neighbors: n_neighbors
                        .or(cfg.usize("umap", "n_neighbors")?)
                        .unwrap_or(15),
                    min_dist: min_dist.or(cfg.f64("umap", "min_dist")?).unwrap_or(0.1),
                    epochs: epochs.or(cfg.usize("umap", "epochs")?),
                    sample: sample.or(cfg.usize("umap", "sample")?),
                    exact_threshold: exact_threshold
                        .or(cfg.usize("umap", "exact_threshold")?)
                        .unwrap_or(crate::embed::DEFAULT_EXACT_THRESHOLD),
                    metric,
                },
            )
        }
        Command::Changepoint {
            series,
            label,
            ewma_span,
            n_bkps,
            penalty,
            out,
            svg,
            event,
        } => {
            let event = match event.or(cfg.string("changepoint", "event")?) {
                Some(s) => Some(parse_event(&s)?),
                None => None,
            };
            changepoint_stage(
                &ctx,
                &ChangepointArgs {
                    series,
                    label,
                    ewma_span: ewma_span.or(cfg.usize("changepoint", "ewma_span")?),
                    n_bkps: n_bkps.or(cfg.usize("changepoint", "n_bkps")?),
                    penalty: penalty.or(cfg.f64("changepoint", "penalty")?),
                    out,
                    svg,
                    event,
                },
            )
        }
        Command::Retweets {
            input,
            out,
            hist,
            log_hist,
        } => retweets_stage(
            &ctx,
            &RetweetsArgs {
                input,
                stats_out: out,
                hist,
                log_hist,
            },
        ),
        Command::Cascade {
            input,
            time_points,
            max_edges,
            rule,
            out_dir,
            layout_sweeps,
            no_layout,
        } => {
            let time_points = match time_points.or(cfg.string("cascade", "time_points")?) {
                Some(s) => parse_list::<f64>(&s, "time_points")?,
                None => BENCHMARK_TIME_POINTS.to_vec(),
            };
            let rule = match rule.or(cfg.string("cascade", "rule")?) {
                Some(s) => parse_rule(&s)?,
                None => SelectionRule::Nearest,
            };
            cascade_stage(
                &ctx,
                &CascadeArgs {
                    input,
                    time_points,
                    max_edges: max_edges
                        .or(cfg.usize("cascade", "max_edges")?)
                        .unwrap_or(DEFAULT_MAX_EDGES),
                    rule,
                    out_dir,
                    layout_sweeps: layout_sweeps
                        .or(cfg.usize("cascade", "layout_sweeps")?)
                        .unwrap_or(crate::cascade::layout::DEFAULT_LAYOUT_SWEEPS),
                    layout: !no_layout,
                },
            )
        }
        Command::Report { input, out } => {
            let manifest = input
                .or_else(|| ctx.manifest.clone())
                .ok_or_else(|| PipelineError::Usage("report needs --input or --manifest".into()))?;
            report_stage(&ctx, &ReportArgs { manifest, out })
        }
    }
}

/// Parse arguments and run; returns the process exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap handles help/version with exit code 0 internally.
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
