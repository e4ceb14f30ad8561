//! Vocabulary construction, sparse count matrices, TF-IDF weighting, and
//! top-feature ranking.
//!
//! The TF-IDF weight is `w[j,i] = tf[j,i] * ln(N / df_i)` where `tf[j,i]` is
//! the count of term i in document j divided by the document's total
//! in-vocabulary token count. Natural log, no df smoothing, no row
//! normalization: a term present in every document legitimately weighs zero.

use std::collections::{HashMap, HashSet};
use std::io::{BufRead, Write};
use std::path::Path;

use thiserror::Error;

use crate::textprep::Document;

#[derive(Debug, Error)]
pub enum VectorizeError {
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("invalid ngram range ({0}, {1}): need 1 <= lo <= hi <= 2")]
    BadNgramRange(usize, usize),
    #[error("matrix is not a count matrix")]
    NotCounts,
    #[error("matrix has {matrix} columns but vocabulary has {vocab} terms")]
    ShapeMismatch { matrix: usize, vocab: usize },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("bad matrix file: {0}")]
    BadMatrixFile(String),
    #[error("bad vocabulary file: {0}")]
    BadVocabFile(String),
}

/// Ordered n-gram vocabulary with document frequencies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, u32>,
    df: Vec<u32>,
    pub n_docs: usize,
    pub ngram: (usize, usize),
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn term(&self, col: usize) -> &str {
        &self.terms[col]
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn col(&self, term: &str) -> Option<u32> {
        self.index.get(term).copied()
    }

    pub fn df(&self, col: usize) -> u32 {
        self.df[col]
    }

    /// Persist as one term per line with the document frequency appended
    /// (tab separated); a comment header carries N and the n-gram range.
    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(
            w,
            "# n_docs={} ngram={},{}",
            self.n_docs, self.ngram.0, self.ngram.1
        )?;
        for (term, df) in self.terms.iter().zip(&self.df) {
            writeln!(w, "{term}\t{df}")?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<(), VectorizeError> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)
            .map_err(|source| VectorizeError::Io {
                path: path.display().to_string(),
                source,
            })?;
        std::fs::write(path, buf).map_err(|source| VectorizeError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn read_from<R: BufRead>(reader: R) -> Result<Self, VectorizeError> {
        let mut lines = reader.lines();
        let header = lines
            .next()
            .ok_or_else(|| VectorizeError::BadVocabFile("empty file".into()))?
            .map_err(|e| VectorizeError::BadVocabFile(e.to_string()))?;
        let header = header
            .strip_prefix("# ")
            .ok_or_else(|| VectorizeError::BadVocabFile("missing header".into()))?;
        let mut n_docs = None;
        let mut ngram = None;
        for part in header.split_whitespace() {
            if let Some(v) = part.strip_prefix("n_docs=") {
                n_docs = v.parse::<usize>().ok();
            } else if let Some(v) = part.strip_prefix("ngram=") {
                let mut it = v.split(',');
                let lo = it.next().and_then(|s| s.parse().ok());
                let hi = it.next().and_then(|s| s.parse().ok());
                if let (Some(lo), Some(hi)) = (lo, hi) {
                    ngram = Some((lo, hi));
                }
            }
        }
        let n_docs = n_docs.ok_or_else(|| VectorizeError::BadVocabFile("missing n_docs".into()))?;
        let ngram = ngram.ok_or_else(|| VectorizeError::BadVocabFile("missing ngram".into()))?;
        let mut terms = Vec::new();
        let mut df = Vec::new();
        for line in lines {
            let line = line.map_err(|e| VectorizeError::BadVocabFile(e.to_string()))?;
            if line.is_empty() {
                continue;
            }
            let (term, freq) = line
                .rsplit_once('\t')
                .ok_or_else(|| VectorizeError::BadVocabFile(format!("bad line {line:?}")))?;
            terms.push(term.to_string());
            df.push(
                freq.parse::<u32>()
                    .map_err(|e| VectorizeError::BadVocabFile(format!("bad df {freq:?}: {e}")))?,
            );
        }
        let index = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Ok(Self {
            terms,
            index,
            df,
            n_docs,
            ngram,
        })
    }

    pub fn load(path: &Path) -> Result<Self, VectorizeError> {
        let file = std::fs::File::open(path).map_err(|source| VectorizeError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::read_from(std::io::BufReader::new(file))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightKind {
    Count,
    TfIdf,
}

impl WeightKind {
    fn as_str(self) -> &'static str {
        match self {
            WeightKind::Count => "count",
            WeightKind::TfIdf => "tfidf",
        }
    }
}

/// Documents-by-features sparse matrix. Rows are column-sorted and carry no
/// explicit zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    pub n_rows: usize,
    pub n_cols: usize,
    pub kind: WeightKind,
    rows: Vec<Vec<(u32, f64)>>,
}

impl SparseMatrix {
    pub fn from_rows(n_cols: usize, kind: WeightKind, rows: Vec<Vec<(u32, f64)>>) -> Self {
        Self {
            n_rows: rows.len(),
            n_cols,
            kind,
            rows,
        }
    }

    pub fn row(&self, i: usize) -> &[(u32, f64)] {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[Vec<(u32, f64)>] {
        &self.rows
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// Text triplet persistence: header `n_rows n_cols nnz semantics`, then
    /// one `row col weight` line per entry.
    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(
            w,
            "{} {} {} {}",
            self.n_rows,
            self.n_cols,
            self.nnz(),
            self.kind.as_str()
        )?;
        for (r, row) in self.rows.iter().enumerate() {
            for (c, weight) in row {
                writeln!(w, "{r} {c} {weight}")?;
            }
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<(), VectorizeError> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)
            .map_err(|source| VectorizeError::Io {
                path: path.display().to_string(),
                source,
            })?;
        std::fs::write(path, buf).map_err(|source| VectorizeError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn read_from<R: BufRead>(reader: R) -> Result<Self, VectorizeError> {
        let mut lines = reader.lines();
        let header = lines
            .next()
            .ok_or_else(|| VectorizeError::BadMatrixFile("empty file".into()))?
            .map_err(|e| VectorizeError::BadMatrixFile(e.to_string()))?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        if parts.len() != 4 {
            return Err(VectorizeError::BadMatrixFile(format!(
                "bad header {header:?}"
            )));
        }
        let n_rows: usize = parts[0]
            .parse()
            .map_err(|_| VectorizeError::BadMatrixFile("bad n_rows".into()))?;
        let n_cols: usize = parts[1]
            .parse()
            .map_err(|_| VectorizeError::BadMatrixFile("bad n_cols".into()))?;
        let nnz: usize = parts[2]
            .parse()
            .map_err(|_| VectorizeError::BadMatrixFile("bad nnz".into()))?;
        let kind = match parts[3] {
            "count" => WeightKind::Count,
            "tfidf" => WeightKind::TfIdf,
            other => {
                return Err(VectorizeError::BadMatrixFile(format!(
                    "bad semantics {other:?}"
                )))
            }
        };
        let mut rows = vec![Vec::new(); n_rows];
        let mut seen = 0usize;
        for line in lines {
            let line = line.map_err(|e| VectorizeError::BadMatrixFile(e.to_string()))?;
            if line.is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let (r, c, w) = (it.next(), it.next(), it.next());
            let (Some(r), Some(c), Some(w)) = (r, c, w) else {
                return Err(VectorizeError::BadMatrixFile(format!("bad line {line:?}")));
            };
            let r: usize = r
                .parse()
                .map_err(|_| VectorizeError::BadMatrixFile("bad row".into()))?;
            let c: u32 = c
                .parse()
                .map_err(|_| VectorizeError::BadMatrixFile("bad col".into()))?;
            let w: f64 = w
                .parse()
                .map_err(|_| VectorizeError::BadMatrixFile("bad weight".into()))?;
            if r >= n_rows || c as usize >= n_cols {
                return Err(VectorizeError::BadMatrixFile(format!(
                    "entry out of bounds: {line}"
                )));
            }
            rows[r].push((c, w));
            seen += 1;
        }
        if seen != nnz {
            return Err(VectorizeError::BadMatrixFile(format!(
                "expected {nnz} entries, got {seen}"
            )));
        }
        for row in &mut rows {
            row.sort_by_key(|&(c, _)| c);
        }
        Ok(Self {
            n_rows,
            n_cols,
            kind,
            rows,
        })
    }

    pub fn load(path: &Path) -> Result<Self, VectorizeError> {
        let file = std::fs::File::open(path).map_err(|source| VectorizeError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::read_from(std::io::BufReader::new(file))
    }
}

/// Emit the n-grams of one token sequence for the given range.
fn ngrams(tokens: &[String], lo: usize, hi: usize) -> Vec<String> {
    let mut out = Vec::new();
    for n in lo..=hi {
        if tokens.len() < n {
            continue;
        }
        for window in tokens.windows(n) {
            out.push(window.join(" "));
        }
    }
    out
}

/// Build a vocabulary of the `max_features` most frequent n-grams by total
/// corpus count, ties broken lexicographically ascending. Terms are stored
/// in lexicographic order.
pub fn build_vocab(
    documents: &[Document],
    max_features: usize,
    ngram_range: (usize, usize),
) -> Result<Vocabulary, VectorizeError> {
    let (lo, hi) = ngram_range;
    if lo < 1 || lo > hi || hi > 2 {
        return Err(VectorizeError::BadNgramRange(lo, hi));
    }
    let mut counts: HashMap<String, u64> = HashMap::new();
    let mut df: HashMap<String, u32> = HashMap::new();
    for doc in documents {
        let grams = ngrams(&doc.tokens, lo, hi);
        let mut seen: HashSet<&String> = HashSet::new();
        for gram in &grams {
            *counts.entry(gram.clone()).or_insert(0) += 1;
            if seen.insert(gram) {
                *df.entry(gram.clone()).or_insert(0) += 1;
            }
        }
    }
    if counts.is_empty() {
        return Err(VectorizeError::EmptyCorpus);
    }
    let mut ranked: Vec<(String, u64)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(max_features);
    let mut terms: Vec<String> = ranked.into_iter().map(|(t, _)| t).collect();
    terms.sort();
    let df: Vec<u32> = terms.iter().map(|t| df[t]).collect();
    let index = terms
        .iter()
        .enumerate()
        .map(|(i, t)| (t.clone(), i as u32))
        .collect();
    Ok(Vocabulary {
        terms,
        index,
        df,
        n_docs: documents.len(),
        ngram: (lo, hi),
    })
}

/// Count in-vocabulary n-gram occurrences per document; out-of-vocabulary
/// tokens are ignored.
pub fn count_matrix(documents: &[Document], vocab: &Vocabulary) -> SparseMatrix {
    let rows: Vec<Vec<(u32, f64)>> = documents
        .iter()
        .map(|doc| {
            let mut counts: HashMap<u32, f64> = HashMap::new();
            for gram in ngrams(&doc.tokens, vocab.ngram.0, vocab.ngram.1) {
                if let Some(col) = vocab.col(&gram) {
                    *counts.entry(col).or_insert(0.0) += 1.0;
                }
            }
            let mut row: Vec<(u32, f64)> = counts.into_iter().collect();
            row.sort_by_key(|&(c, _)| c);
            row
        })
        .collect();
    SparseMatrix::from_rows(vocab.len(), WeightKind::Count, rows)
}

/// Reweight a count matrix to TF-IDF. Rows with no in-vocabulary tokens stay
/// empty, and zero weights (terms present in every document) are dropped to
/// keep the no-explicit-zeros invariant.
pub fn tfidf(counts: &SparseMatrix, vocab: &Vocabulary) -> Result<SparseMatrix, VectorizeError> {
    if counts.kind != WeightKind::Count {
        return Err(VectorizeError::NotCounts);
    }
    if counts.n_cols != vocab.len() {
        return Err(VectorizeError::ShapeMismatch {
            matrix: counts.n_cols,
            vocab: vocab.len(),
        });
    }
    let n = vocab.n_docs as f64;
    let rows: Vec<Vec<(u32, f64)>> = counts
        .rows
        .iter()
        .map(|row| {
            let total: f64 = row.iter().map(|&(_, c)| c).sum();
            if total == 0.0 {
                return Vec::new();
            }
            row.iter()
                .map(|&(col, c)| (col, (c / total) * (n / vocab.df(col as usize) as f64).ln()))
                .filter(|&(_, w)| w != 0.0)
                .collect()
        })
        .collect();
    Ok(SparseMatrix::from_rows(
        counts.n_cols,
        WeightKind::TfIdf,
        rows,
    ))
}

/// Rank terms by the sum of their TF-IDF weights over all rows, descending,
/// ties broken lexicographically. Requesting more than the vocabulary size
/// returns everything with a warning.
pub fn top_features(matrix: &SparseMatrix, vocab: &Vocabulary, k: usize) -> Vec<(String, f64)> {
    let mut scores = vec![0.0f64; matrix.n_cols];
    for row in &matrix.rows {
        for &(col, w) in row {
            scores[col as usize] += w;
        }
    }
    let mut ranked: Vec<(String, f64)> = scores
        .into_iter()
        .enumerate()
        .map(|(col, score)| (vocab.term(col).to_string(), score))
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    if k > ranked.len() {
        log::warn!(
            "requested top {k} features but vocabulary has {}",
            ranked.len()
        );
    }
    ranked.truncate(k);
    ranked
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn doc(tokens: &[&str]) -> Document {
        Document {
            tweet_id: "t".into(),
            minute: 0,
            tokens: tokens.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn vocab_top_k_by_corpus_count() {
        // 15 distinct unigrams with distinct counts; the 10 most frequent stay.
        let mut docs = Vec::new();
        for (i, name) in ('a'..='o').enumerate() {
            for _ in 0..=i {
                docs.push(doc(&[&name.to_string()]));
            }
        }
        let vocab = build_vocab(&docs, 10, (1, 1)).unwrap();
        assert_eq!(vocab.len(), 10);
        assert!(vocab.col("f").is_some(), "6th letter has count 6, kept");
        assert!(vocab.col("e").is_none(), "5th letter has count 5, dropped");
    }

    #[test]
    fn vocab_ties_break_lexicographically() {
        // Four terms with count 2, one with count 3, room for 3 features:
        // "z" wins on count, then "a" and "b" beat "c"/"d" on the tie.
        let docs = vec![
            doc(&["z", "a", "b", "c", "d"]),
            doc(&["z", "a", "b", "c", "d"]),
            doc(&["z"]),
        ];
        let vocab = build_vocab(&docs, 3, (1, 1)).unwrap();
        assert_eq!(
            vocab.terms(),
            &["a".to_string(), "b".to_string(), "z".to_string()]
        );
    }

    #[test]
    fn vocab_df_example() {
        let docs = vec![doc(&["a", "b"]), doc(&["b", "c"])];
        let vocab = build_vocab(&docs, 100, (1, 1)).unwrap();
        assert_eq!(
            vocab.terms(),
            &["a".to_string(), "b".to_string(), "c".to_string()]
        );
        assert_eq!(
            vocab
                .terms()
                .iter()
                .map(|t| vocab.df(vocab.col(t).unwrap() as usize))
                .collect::<Vec<_>>(),
            vec![1, 2, 1]
        );
        assert_eq!(vocab.n_docs, 2);
    }

    #[test]
    fn vocab_bigrams_by_adjacency() {
        let docs = vec![doc(&["icu", "bed"])];
        let vocab = build_vocab(&docs, 100, (2, 2)).unwrap();
        assert_eq!(vocab.terms(), &["icu bed".to_string()]);
        assert_eq!(vocab.df(0), 1);
        assert!(matches!(
            build_vocab(&docs, 10, (0, 1)),
            Err(VectorizeError::BadNgramRange(0, 1))
        ));
        assert!(matches!(
            build_vocab(&[], 10, (1, 1)),
            Err(VectorizeError::EmptyCorpus)
        ));
    }

    #[test]
    fn count_matrix_examples() {
        let docs = vec![doc(&["mask", "mask", "icu"]), doc(&["oov"]), doc(&["icu"])];
        let vocab = build_vocab(&docs[..1], 100, (1, 1)).unwrap();
        let m = count_matrix(&docs, &vocab);
        assert_eq!(m.n_rows, 3);
        let icu = vocab.col("icu").unwrap();
        let mask = vocab.col("mask").unwrap();
        assert_eq!(m.row(0), &[(icu, 1.0), (mask, 2.0)]);
        assert!(m.row(1).is_empty());
        assert_eq!(m.row(2), &[(icu, 1.0)]);
    }

    #[test]
    fn tfidf_term_in_every_document_weighs_zero() {
        let docs = vec![doc(&["a", "b"]), doc(&["a"]), doc(&["a", "c"])];
        let vocab = build_vocab(&docs, 100, (1, 1)).unwrap();
        let w = tfidf(&count_matrix(&docs, &vocab), &vocab).unwrap();
        let a = vocab.col("a").unwrap();
        for row in w.rows() {
            assert!(
                row.iter().all(|&(c, _)| c != a),
                "df == N term must be dropped"
            );
        }
    }

    #[test]
    fn tfidf_direct_evaluation() {
        // N=4, df(b)=2, count 3 of 6 tokens: w = 0.5 * ln 2.
        let docs = vec![
            doc(&["b", "b", "b", "a", "a", "a"]),
            doc(&["b", "a"]),
            doc(&["a"]),
            doc(&["a"]),
        ];
        let vocab = build_vocab(&docs, 100, (1, 1)).unwrap();
        let w = tfidf(&count_matrix(&docs, &vocab), &vocab).unwrap();
        let b = vocab.col("b").unwrap();
        let got = w.row(0).iter().find(|&&(c, _)| c == b).unwrap().1;
        assert!((got - 0.5 * 2.0f64.ln()).abs() < 1e-12);
        assert!((got - 0.34657).abs() < 1e-5);
    }

    #[test]
    fn top_features_hand_sum() {
        let docs = vec![doc(&["a"]), doc(&["a", "b"])];
        let vocab = build_vocab(&docs, 100, (1, 1)).unwrap();
        // Hand-built tfidf weights: rows {a: 0.2} and {a: 0.3, b: 0.4}.
        let w = SparseMatrix::from_rows(
            2,
            WeightKind::TfIdf,
            vec![vec![(0, 0.2)], vec![(0, 0.3), (1, 0.4)]],
        );
        let top = top_features(&w, &vocab, 2);
        assert_eq!(top[0].0, "a");
        assert!((top[0].1 - 0.5).abs() < 1e-12);
        assert_eq!(top[1].0, "b");
        assert!((top[1].1 - 0.4).abs() < 1e-12);
        // Requesting more than the vocabulary yields everything.
        assert_eq!(top_features(&w, &vocab, 10).len(), 2);
    }

    #[test]
    fn single_doc_top_features() {
        let docs = vec![doc(&["a"])];
        let vocab = build_vocab(&docs, 100, (1, 1)).unwrap();
        let w = SparseMatrix::from_rows(1, WeightKind::TfIdf, vec![vec![(0, 0.5)]]);
        let top = top_features(&w, &vocab, 1);
        assert_eq!(top, vec![("a".to_string(), 0.5)]);
    }

    #[test]
    fn matrix_round_trip() {
        let docs = vec![doc(&["a", "b", "b"]), doc(&["c"])];
        let vocab = build_vocab(&docs, 100, (1, 2)).unwrap();
        let m = tfidf(&count_matrix(&docs, &vocab), &vocab).unwrap();
        let mut buf = Vec::new();
        m.write_to(&mut buf).unwrap();
        let back = SparseMatrix::read_from(&buf[..]).unwrap();
        assert_eq!(m, back);

        let mut vbuf = Vec::new();
        vocab.write_to(&mut vbuf).unwrap();
        let vback = Vocabulary::read_from(&vbuf[..]).unwrap();
        assert_eq!(vocab, vback);
    }

    proptest! {
        #[test]
        fn tfidf_rows_never_gain_entries(
            token_ids in proptest::collection::vec(
                proptest::collection::vec(0usize..8, 0..12),
                1..20,
            ),
        ) {
            let names = ["a", "b", "c", "d", "e", "f", "g", "h"];
            let docs: Vec<Document> = token_ids
                .iter()
                .map(|ids| doc(&ids.iter().map(|&i| names[i]).collect::<Vec<_>>()))
                .collect();
            if docs.iter().all(|d| d.tokens.is_empty()) {
                return Ok(());
            }
            let vocab = build_vocab(&docs, 100, (1, 1)).unwrap();
            let counts = count_matrix(&docs, &vocab);
            let w = tfidf(&counts, &vocab).unwrap();
            for i in 0..counts.n_rows {
                prop_assert!(w.row(i).len() <= counts.row(i).len());
                prop_assert!(w.row(i).iter().all(|&(_, v)| v.is_finite() && v >= 0.0));
            }
        }

        #[test]
        fn tfidf_weight_decreases_with_df(df_lo in 1u32..10, extra in 1u32..10) {
            // Fixed tf, increasing df: weight strictly decreases.
            let n: f64 = 400.0;
            let tf = 0.5;
            let w_lo = tf * (n / df_lo as f64).ln();
            let w_hi = tf * (n / (df_lo + extra) as f64).ln();
            prop_assert!(w_hi < w_lo);
        }
    }
}
