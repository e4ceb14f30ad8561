//! Every stage as library calls, chained through files in a temp directory
//! with a manifest, exactly like the CLI does: ingest, preprocess, keywords,
//! vectorize, lda, sweep, coherence, umap, changepoint, retweets, cascade,
//! report.
//!
//! ```bash
//! cargo run --example full_pipeline
//! ```

use cascadescope::cascade::{SelectionRule, BENCHMARK_TIME_POINTS};
use cascadescope::embed::Metric;
use cascadescope::ingest::{FilterMode, Strictness};
use cascadescope::pipeline::{self, StageContext};
use cascadescope::synth::{write_archive, SynthConfig};
use cascadescope::vectorize::WeightKind;

fn main() {
    let dir = std::env::temp_dir().join("cascadescope-full-pipeline");
    std::fs::create_dir_all(&dir).unwrap();
    let p = |name: &str| dir.join(name);

    write_archive(
        &SynthConfig {
            n_tweets: 4_000,
            ..SynthConfig::default()
        },
        &p("archive.jsonl"),
    )
    .unwrap();

    let ctx = StageContext {
        seed: 7,
        parallel: true,
        manifest: Some(p("manifest.json")),
    };

    pipeline::ingest_stage(
        &ctx,
        &pipeline::IngestArgs {
            input: p("archive.jsonl"),
            out: p("records.jsonl"),
            report: Some(p("parse_report.json")),
            quarantine: Some(p("quarantined.jsonl")),
            stats: Some(p("stats.json")),
            filter: FilterMode::All,
            strictness: Strictness::Lenient,
        },
    )
    .unwrap();

    pipeline::ingest_stage(
        &ctx,
        &pipeline::IngestArgs {
            input: p("archive.jsonl"),
            out: p("originals.jsonl"),
            report: None,
            quarantine: None,
            stats: None,
            filter: FilterMode::OriginalsOnly,
            strictness: Strictness::Lenient,
        },
    )
    .unwrap();

    pipeline::preprocess_stage(
        &ctx,
        &pipeline::PreprocessArgs {
            input: p("originals.jsonl"),
            out: p("docs.jsonl"),
            stopwords: None,
        },
    )
    .unwrap();

    pipeline::keywords_stage(
        &ctx,
        &pipeline::KeywordsArgs {
            input: p("originals.jsonl"),
            patterns: None,
            out: p("keyword_counts.csv"),
            smoothed: Some(p("keyword_smoothed.csv")),
            window: 10,
            rates: Some(p("keyword_rates.csv")),
        },
    )
    .unwrap();

    pipeline::vectorize_stage(
        &ctx,
        &pipeline::VectorizeArgs {
            docs: p("docs.jsonl"),
            matrix_out: p("counts.mtx"),
            vocab_out: p("vocab.tsv"),
            max_features: 1_500,
            ngram: (1, 1),
            weighting: WeightKind::Count,
            top: None,
            top_out: None,
        },
    )
    .unwrap();

    pipeline::vectorize_stage(
        &ctx,
        &pipeline::VectorizeArgs {
            docs: p("docs.jsonl"),
            matrix_out: p("tfidf.mtx"),
            vocab_out: p("tfidf_vocab.tsv"),
            max_features: 1_500,
            ngram: (1, 1),
            weighting: WeightKind::TfIdf,
            top: Some(50),
            top_out: Some(p("top_features.csv")),
        },
    )
    .unwrap();

    pipeline::lda_stage(
        &ctx,
        &pipeline::LdaArgs {
            matrix: p("counts.mtx"),
            vocab: p("vocab.tsv"),
            docs: Some(p("docs.jsonl")),
            k: 5,
            iterations: 40,
            passes: 2,
            chunk_size: 10_000,
            gamma_threshold: 0.001,
            alpha: None,
            eta: None,
            model_out: p("model.json"),
            assignments: Some(p("assignments.csv")),
            series: Some(p("topic_series.csv")),
            uniform_tol: 1e-9,
        },
    )
    .unwrap();

    pipeline::sweep_stage(
        &ctx,
        &pipeline::SweepArgs {
            matrix: p("counts.mtx"),
            vocab: p("vocab.tsv"),
            docs: p("docs.jsonl"),
            grid: vec![2, 4, 6],
            iterations: 25,
            passes: 2,
            window_width: 110,
            out: p("sweep.csv"),
            best_model: Some(p("best_model.json")),
        },
    )
    .unwrap();

    pipeline::coherence_stage(
        &ctx,
        &pipeline::CoherenceArgs {
            model: p("model.json"),
            docs: p("docs.jsonl"),
            window_width: 110,
            out: p("coherence.csv"),
        },
    )
    .unwrap();

    pipeline::umap_stage(
        &ctx,
        &pipeline::UmapArgs {
            matrix: p("tfidf.mtx"),
            labels: Some(p("assignments.csv")),
            out: p("embedding.csv"),
            svg: p("embedding.svg"),
            n_neighbors: 15,
            min_dist: 0.1,
            epochs: Some(80),
            sample: Some(1_500),
            exact_threshold: 20_000,
            metric: Metric::Hellinger,
        },
    )
    .unwrap();

    pipeline::changepoint_stage(
        &ctx,
        &pipeline::ChangepointArgs {
            series: p("keyword_counts.csv"),
            label: "mask".to_string(),
            ewma_span: Some(5),
            n_bkps: Some(5),
            penalty: None,
            out: p("breakpoints.csv"),
            svg: Some(p("breakpoints.svg")),
            event: Some("2020-03-24T21:45:00Z".parse().unwrap()),
        },
    )
    .unwrap();

    pipeline::retweets_stage(
        &ctx,
        &pipeline::RetweetsArgs {
            input: p("records.jsonl"),
            stats_out: p("retweet_stats.json"),
            hist: Some(p("retweet_hist.csv")),
            log_hist: Some(p("retweet_log_hist.csv")),
        },
    )
    .unwrap();

    pipeline::cascade_stage(
        &ctx,
        &pipeline::CascadeArgs {
            input: p("records.jsonl"),
            time_points: BENCHMARK_TIME_POINTS.to_vec(),
            max_edges: 200,
            rule: SelectionRule::Nearest,
            out_dir: p("cascades"),
            layout_sweeps: 60,
            layout: true,
        },
    )
    .unwrap();

    pipeline::report_stage(
        &ctx,
        &pipeline::ReportArgs {
            manifest: p("manifest.json"),
            out: p("report.md"),
        },
    )
    .unwrap();

    println!("pipeline complete; outputs in {}", dir.display());
    println!("report: {}", p("report.md").display());
}
