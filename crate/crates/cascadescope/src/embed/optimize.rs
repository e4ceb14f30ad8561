//! Embedding optimization: the min_dist curve fit for the attractive/
//! repulsive kernel and negative-sampling stochastic gradient descent.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::fuzzy::FuzzyGraph;

/// Fit kernel parameters (a, b) so that `1 / (1 + a d^(2b))` least-squares
/// matches the target curve: 1 for d <= min_dist, exp(-(d - min_dist)/spread)
/// beyond it. Gauss-Newton in log-parameter space with a numeric Jacobian.
pub fn fit_curve_params(min_dist: f64, spread: f64) -> (f64, f64) {
    let grid: Vec<f64> = (0..300)
        .map(|i| i as f64 * (3.0 * spread) / 299.0)
        .collect();
    let target: Vec<f64> = grid
        .iter()
        .map(|&x| {
            if x <= min_dist {
                1.0
            } else {
                (-(x - min_dist) / spread).exp()
            }
        })
        .collect();
    let model = |la: f64, lb: f64, x: f64| -> f64 {
        let (a, b) = (la.exp(), lb.exp());
        if x <= 0.0 {
            1.0
        } else {
            1.0 / (1.0 + a * x.powf(2.0 * b))
        }
    };
    let (mut la, mut lb) = (1.5f64.ln(), 0.0);
    for _ in 0..100 {
        // Normal equations for the two log parameters.
        let eps = 1e-6;
        let (mut jtj00, mut jtj01, mut jtj11) = (0.0, 0.0, 0.0);
        let (mut jtr0, mut jtr1) = (0.0, 0.0);
        for (&x, &t) in grid.iter().zip(&target) {
            let f = model(la, lb, x);
            let r = f - t;
            let j0 = (model(la + eps, lb, x) - f) / eps;
            let j1 = (model(la, lb + eps, x) - f) / eps;
            jtj00 += j0 * j0;
            jtj01 += j0 * j1;
            jtj11 += j1 * j1;
            jtr0 += j0 * r;
            jtr1 += j1 * r;
        }
        // Levenberg damping keeps the step stable far from the optimum.
        let damp = 1e-9;
        let det = (jtj00 + damp) * (jtj11 + damp) - jtj01 * jtj01;
        if det.abs() < 1e-18 {
            break;
        }
        let dla = (-jtr0 * (jtj11 + damp) + jtr1 * jtj01) / det;
        let dlb = (jtr0 * jtj01 - jtr1 * (jtj00 + damp)) / det;
        la += dla;
        lb += dlb;
        if dla.abs() < 1e-12 && dlb.abs() < 1e-12 {
            break;
        }
    }
    (la.exp(), lb.exp())
}

pub struct SgdConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub negative_samples: usize,
    pub a: f64,
    pub b: f64,
    pub seed: u64,
    /// Record the full-pair cross entropy every this many epochs.
    pub checkpoint_every: Option<usize>,
}

const GRAD_CLIP: f64 = 4.0;

fn clip(x: f64) -> f64 {
    x.clamp(-GRAD_CLIP, GRAD_CLIP)
}

/// Fuzzy cross entropy of the embedding against the graph, summed over the
/// nonzero-membership pairs: `-w ln(phi) - (1 - w) ln(1 - phi)`. This is the
/// checkpoint objective; under negative sampling the optimizer follows a
/// stochastic surrogate of it, so checkpoints descend to a plateau rather
/// than decreasing at every step.
pub fn cross_entropy(graph: &FuzzyGraph, coords: &[[f64; 2]], a: f64, b: f64) -> f64 {
    let mut total = 0.0;
    for &(i, j, w) in &graph.edges {
        let dx = coords[i as usize][0] - coords[j as usize][0];
        let dy = coords[i as usize][1] - coords[j as usize][1];
        let d2 = dx * dx + dy * dy;
        let phi = (1.0 / (1.0 + a * d2.powf(b))).clamp(1e-12, 1.0 - 1e-12);
        total += -w * phi.ln() - (1.0 - w) * (1.0 - phi).ln();
    }
    total
}

/// Negative-sampling SGD over the fuzzy edges. Stronger edges are sampled
/// more often (epochs-per-sample schedule); every positive update pairs with
/// uniform negative samples that only move the head. Learning rate decays
/// linearly. Deterministic for a given seed.
pub fn optimize_layout(
    graph: &FuzzyGraph,
    coords: &mut [[f64; 2]],
    cfg: &SgdConfig,
) -> Vec<(usize, f64)> {
    let n = coords.len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    // Repulsion carries the true (1 - w) factor, so negative samples that
    // land on strong edges push less; identical points (w = 1 everywhere)
    // feel no repulsion at all.
    let edge_weight: std::collections::HashMap<(u32, u32), f64> =
        graph.edges.iter().map(|&(i, j, w)| ((i, j), w)).collect();
    // Directed edge list: each undirected edge drives updates at both ends.
    let mut heads = Vec::with_capacity(graph.edges.len() * 2);
    let mut tails = Vec::with_capacity(graph.edges.len() * 2);
    let mut weights = Vec::with_capacity(graph.edges.len() * 2);
    for &(i, j, w) in &graph.edges {
        heads.push(i as usize);
        tails.push(j as usize);
        weights.push(w);
        heads.push(j as usize);
        tails.push(i as usize);
        weights.push(w);
    }
    let max_w = weights.iter().copied().fold(f64::MIN, f64::max);
    let epochs_per_sample: Vec<f64> = weights.iter().map(|&w| max_w / w).collect();
    let mut next_sample: Vec<f64> = epochs_per_sample.clone();
    let mut checkpoints = Vec::new();
    let (a, b) = (cfg.a, cfg.b);
    if cfg.checkpoint_every.is_some() {
        checkpoints.push((0, cross_entropy(graph, coords, a, b)));
    }
    for epoch in 1..=cfg.epochs {
        let alpha = cfg.learning_rate * (1.0 - (epoch - 1) as f64 / cfg.epochs as f64);
        for e in 0..heads.len() {
            if next_sample[e] > epoch as f64 {
                continue;
            }
            next_sample[e] += epochs_per_sample[e];
            let (hi, ti) = (heads[e], tails[e]);
            let dx = coords[hi][0] - coords[ti][0];
            let dy = coords[hi][1] - coords[ti][1];
            let d2 = dx * dx + dy * dy;
            if d2 > 0.0 {
                let coeff = -2.0 * a * b * d2.powf(b - 1.0) / (1.0 + a * d2.powf(b));
                let gx = clip(coeff * dx) * alpha;
                let gy = clip(coeff * dy) * alpha;
                coords[hi][0] += gx;
                coords[hi][1] += gy;
                coords[ti][0] -= gx;
                coords[ti][1] -= gy;
            }
            for _ in 0..cfg.negative_samples {
                let other = rng.gen_range(0..n);
                if other == hi {
                    continue;
                }
                let key = (hi.min(other) as u32, hi.max(other) as u32);
                let repulsion = 1.0 - edge_weight.get(&key).copied().unwrap_or(0.0);
                if repulsion <= 0.0 {
                    continue;
                }
                let dx = coords[hi][0] - coords[other][0];
                let dy = coords[hi][1] - coords[other][1];
                let d2 = dx * dx + dy * dy;
                let coeff = repulsion * 2.0 * b / ((0.001 + d2) * (1.0 + a * d2.powf(b)));
                coords[hi][0] += clip(coeff * dx) * alpha;
                coords[hi][1] += clip(coeff * dy) * alpha;
            }
        }
        if cfg
            .checkpoint_every
            .is_some_and(|c| c > 0 && epoch % c == 0)
        {
            checkpoints.push((epoch, cross_entropy(graph, coords, a, b)));
        }
    }
    checkpoints
}
