//! Independent oracles for the acceptance suite. Everything here computes
//! expected values by a route separate from the library implementation:
//! dense brute force, exhaustive enumeration, or full dynamic programming.

use std::collections::HashMap;

use cascadescope::textprep::Document;

pub fn doc(tokens: &[String]) -> Document {
    Document {
        tweet_id: "t".into(),
        minute: 0,
        tokens: tokens.to_vec(),
    }
}

/// Dense TF-IDF straight from the formula: w = (count / doc_total) * ln(N / df),
/// with document frequencies recomputed from the raw token lists.
pub fn dense_tfidf_oracle(docs: &[Vec<String>]) -> (Vec<String>, Vec<Vec<f64>>) {
    let n = docs.len() as f64;
    let mut df: HashMap<&str, f64> = HashMap::new();
    for tokens in docs {
        let mut seen: Vec<&str> = tokens.iter().map(String::as_str).collect();
        seen.sort_unstable();
        seen.dedup();
        for t in seen {
            *df.entry(t).or_insert(0.0) += 1.0;
        }
    }
    let mut terms: Vec<String> = df.keys().map(|s| s.to_string()).collect();
    terms.sort();
    let index: HashMap<&str, usize> = terms
        .iter()
        .enumerate()
        .map(|(i, t)| (t.as_str(), i))
        .collect();
    let mut dense = vec![vec![0.0; terms.len()]; docs.len()];
    for (row, tokens) in docs.iter().enumerate() {
        let total = tokens.len() as f64;
        if total == 0.0 {
            continue;
        }
        let mut counts: HashMap<&str, f64> = HashMap::new();
        for t in tokens {
            *counts.entry(t.as_str()).or_insert(0.0) += 1.0;
        }
        for (term, count) in counts {
            let tf = count / total;
            dense[row][index[term]] = tf * (n / df[term]).ln();
        }
    }
    (terms, dense)
}

/// Optimal cost of splitting `series` into `k + 1` segments, by full
/// dynamic programming over all split positions.
pub fn dp_optimal_cost(series: &[f64], k: usize) -> f64 {
    let n = series.len();
    let cost = |a: usize, b: usize| -> f64 {
        let seg = &series[a..b];
        let mean = seg.iter().sum::<f64>() / seg.len() as f64;
        seg.iter().map(|x| (x - mean) * (x - mean)).sum()
    };
    // best[j][i]: minimal cost of the first i points in j+1 segments.
    let mut best = vec![vec![f64::INFINITY; n + 1]; k + 1];
    for i in 1..=n {
        best[0][i] = cost(0, i);
    }
    for j in 1..=k {
        for i in (j + 1)..=n {
            for split in j..i {
                let candidate = best[j - 1][split] + cost(split, i);
                if candidate < best[j][i] {
                    best[j][i] = candidate;
                }
            }
        }
    }
    best[k][n]
}

/// Exhaustive collapsed-LDA posterior over all K^T token-topic
/// configurations of a tiny corpus, aggregated by the sufficient statistic
/// (n_dk, n_kw).
pub fn lda_posterior_by_stats(
    docs: &[Vec<usize>],
    k: usize,
    v: usize,
    alpha: f64,
    eta: f64,
) -> HashMap<(Vec<u32>, Vec<u32>), f64> {
    use statrs::function::gamma::ln_gamma;
    let tokens: Vec<(usize, usize)> = docs
        .iter()
        .enumerate()
        .flat_map(|(d, ws)| ws.iter().map(move |&w| (d, w)))
        .collect();
    let t = tokens.len();
    let n_configs = k.pow(t as u32);
    let mut weights: HashMap<(Vec<u32>, Vec<u32>), f64> = HashMap::new();
    let mut log_weights: Vec<((Vec<u32>, Vec<u32>), f64)> = Vec::with_capacity(n_configs);
    let mut max_log = f64::NEG_INFINITY;
    for config in 0..n_configs {
        let mut n_dk = vec![0u32; docs.len() * k];
        let mut n_kw = vec![0u32; k * v];
        let mut n_k = vec![0u32; k];
        let mut rest = config;
        for &(d, w) in &tokens {
            let topic = rest % k;
            rest /= k;
            n_dk[d * k + topic] += 1;
            n_kw[topic * v + w] += 1;
            n_k[topic] += 1;
        }
        let mut log_w = 0.0;
        for &c in &n_dk {
            log_w += ln_gamma(c as f64 + alpha);
        }
        for topic in 0..k {
            for w in 0..v {
                log_w += ln_gamma(n_kw[topic * v + w] as f64 + eta);
            }
            log_w -= ln_gamma(n_k[topic] as f64 + v as f64 * eta);
        }
        max_log = max_log.max(log_w);
        log_weights.push(((n_dk, n_kw), log_w));
    }
    let mut total = 0.0;
    for (key, log_w) in log_weights {
        let w = (log_w - max_log).exp();
        *weights.entry(key).or_insert(0.0) += w;
        total += w;
    }
    for w in weights.values_mut() {
        *w /= total;
    }
    weights
}

/// Recover the Gibbs sufficient statistic from a trained model's smoothed
/// phi/theta estimates (integer counts at desk scale).
pub fn recover_stats(
    model: &cascadescope::topics::TopicModel,
    doc_lens: &[usize],
) -> (Vec<u32>, Vec<u32>) {
    let k = model.params.k;
    let v = model.vocab_size;
    let (alpha, eta) = (model.params.alpha, model.params.eta);
    let mut n_dk = vec![0u32; doc_lens.len() * k];
    for (d, &len) in doc_lens.iter().enumerate() {
        for topic in 0..k {
            let raw = model.theta_row(d)[topic] * (len as f64 + k as f64 * alpha) - alpha;
            n_dk[d * k + topic] = raw.round() as u32;
        }
    }
    let mut n_kw = vec![0u32; k * v];
    for topic in 0..k {
        let n_k: u32 = (0..doc_lens.len()).map(|d| n_dk[d * k + topic]).sum();
        for w in 0..v {
            let raw = model.phi_row(topic)[w] * (n_k as f64 + v as f64 * eta) - eta;
            n_kw[topic * v + w] = raw.round() as u32;
        }
    }
    (n_dk, n_kw)
}

/// Trustworthiness of a 2-D embedding against high-dimensional ranks:
/// penalizes embedding neighbors that are not true neighbors, weighted by
/// their high-dimensional rank excess.
pub fn trustworthiness<D>(n: usize, high_dist: D, coords: &[[f64; 2]], k: usize) -> f64
where
    D: Fn(usize, usize) -> f64,
{
    let mut penalty = 0.0;
    for i in 0..n {
        let mut high: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| (high_dist(i, j), j))
            .collect();
        high.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let rank_of: HashMap<usize, usize> = high
            .iter()
            .enumerate()
            .map(|(r, &(_, j))| (j, r + 1))
            .collect();
        let true_neighbors: std::collections::HashSet<usize> =
            high.iter().take(k).map(|&(_, j)| j).collect();
        let mut low: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| {
                let dx = coords[i][0] - coords[j][0];
                let dy = coords[i][1] - coords[j][1];
                (dx * dx + dy * dy, j)
            })
            .collect();
        low.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for &(_, j) in low.iter().take(k) {
            if !true_neighbors.contains(&j) {
                penalty += (rank_of[&j] - k) as f64;
            }
        }
    }
    1.0 - 2.0 / (n as f64 * k as f64 * (2.0 * n as f64 - 3.0 * k as f64 - 1.0)) * penalty
}

/// Lloyd's k-means with farthest-point seeding; returns cluster labels.
pub fn kmeans_labels(points: &[[f64; 2]], k: usize, iters: usize) -> Vec<usize> {
    let n = points.len();
    let dist2 = |a: [f64; 2], b: [f64; 2]| (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2);
    let mut centers = vec![points[0]];
    while centers.len() < k {
        let far = (0..n)
            .max_by(|&x, &y| {
                let dx: f64 = centers
                    .iter()
                    .map(|&c| dist2(points[x], c))
                    .fold(f64::MAX, f64::min);
                let dy: f64 = centers
                    .iter()
                    .map(|&c| dist2(points[y], c))
                    .fold(f64::MAX, f64::min);
                dx.partial_cmp(&dy).unwrap()
            })
            .unwrap();
        centers.push(points[far]);
    }
    let mut labels = vec![0usize; n];
    for _ in 0..iters {
        for (i, p) in points.iter().enumerate() {
            labels[i] = (0..k)
                .min_by(|&a, &b| {
                    dist2(*p, centers[a])
                        .partial_cmp(&dist2(*p, centers[b]))
                        .unwrap()
                })
                .unwrap();
        }
        let mut sums = vec![[0.0f64; 2]; k];
        let mut counts = vec![0usize; k];
        for (i, p) in points.iter().enumerate() {
            sums[labels[i]][0] += p[0];
            sums[labels[i]][1] += p[1];
            counts[labels[i]] += 1;
        }
        for c in 0..k {
            if counts[c] > 0 {
                centers[c] = [sums[c][0] / counts[c] as f64, sums[c][1] / counts[c] as f64];
            }
        }
    }
    labels
}

/// Fraction of points whose cluster's majority true label matches theirs.
pub fn purity(assigned: &[usize], truth: &[usize], k: usize) -> f64 {
    let mut hits = 0usize;
    for cluster in 0..k {
        let members: Vec<usize> = (0..assigned.len())
            .filter(|&i| assigned[i] == cluster)
            .collect();
        if members.is_empty() {
            continue;
        }
        let mut counts: HashMap<usize, usize> = HashMap::new();
        for &m in &members {
            *counts.entry(truth[m]).or_insert(0) += 1;
        }
        hits += counts.values().copied().max().unwrap_or(0);
    }
    hits as f64 / assigned.len() as f64
}

/// Sort-based retweet timing oracle: median as the lower-middle element,
/// mean over the sorted values, log-decade histogram by the same binning
/// formula evaluated independently.
pub struct RetweetOracle {
    pub median: f64,
    pub mean: f64,
    pub log_bins: std::collections::BTreeMap<i64, u64>,
}

pub fn retweet_oracle(deltas: &[f64]) -> RetweetOracle {
    let mut sorted = deltas.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = sorted[(sorted.len() - 1) / 2];
    let mean = sorted.iter().sum::<f64>() / sorted.len() as f64;
    let mut log_bins = std::collections::BTreeMap::new();
    for &d in &sorted {
        let bin = (d.max(1.0).log10() / 0.1).floor() as i64;
        *log_bins.entry(bin).or_insert(0u64) += 1;
    }
    RetweetOracle {
        median,
        mean,
        log_bins,
    }
}
