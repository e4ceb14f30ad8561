//! # cascadescope
//!
//! Batch analytics for tweet archives. The library reproduces a five-stage
//! exploratory pipeline over newline-delimited tweet JSON:
//!
//! 1. keyword trend extraction with per-minute time series,
//! 2. LDA topic modeling with coherence-based model selection,
//! 3. TF-IDF vectorization and 2-D UMAP embedding (Hellinger metric),
//! 4. changepoint detection on topic time series,
//! 5. retweet-timing statistics and retweet-cascade network analysis.
//!
//! Every stage is usable as a plain library call; the `cascadescope` binary
//! is a thin subcommand wrapper around [`pipeline`]. The `examples/`
//! directory carries one runnable example per capability:
//!
//! ```text
//! cargo run --example parse_archive        # ingest + corpus stats
//! cargo run --example preprocess_text      # normalization + stemming
//! cargo run --example keyword_trends       # pattern matching + smoothing
//! cargo run --example tfidf_features       # vocabulary, TF-IDF, top terms
//! cargo run --example lda_topics           # collapsed Gibbs LDA
//! cargo run --example topic_sweep          # coherence-driven model selection
//! cargo run --example umap_scatter         # k-NN graph + SGD embedding
//! cargo run --example changepoint_step     # EWMA + binary segmentation
//! cargo run --example retweet_timing       # time-to-retweet statistics
//! cargo run --example cascade_networks     # cascade graphs + layout
//! cargo run --example full_pipeline        # all stages, manifest, report
//! ```

pub mod cascade;
pub mod changepoint;
pub mod coherence;
pub mod embed;
pub mod ingest;
pub mod pipeline;
pub mod plot;
pub mod synth;
pub mod textprep;
pub mod topics;
pub mod trends;
pub mod vectorize;

pub use ingest::{CorpusStats, ParseReport, TweetRecord};
pub use textprep::{Document, StopwordList};
pub use topics::{LdaHyperparams, TopicLabel, TopicModel};
pub use trends::{PatternSet, TimeSeries};
pub use vectorize::{SparseMatrix, Vocabulary};
