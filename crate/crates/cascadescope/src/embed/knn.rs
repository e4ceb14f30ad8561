//! k-nearest-neighbor graphs: exact brute force below a size threshold and
//! NN-descent above it.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Neighbor {
    pub index: u32,
    pub dist: f64,
}

/// Directed k-NN lists, distances ascending, ties broken by index, no
/// self-neighbors.
#[derive(Debug, Clone)]
pub struct KnnGraph {
    pub k: usize,
    pub neighbors: Vec<Vec<Neighbor>>,
}

fn sort_key(n: &Neighbor) -> (f64, u32) {
    (n.dist, n.index)
}

/// Exact brute-force k-NN under an arbitrary distance oracle.
pub fn exact_knn<D>(n: usize, k: usize, dist: D, parallel: bool) -> KnnGraph
where
    D: Fn(usize, usize) -> f64 + Sync,
{
    let row = |i: usize| -> Vec<Neighbor> {
        let mut all: Vec<Neighbor> = (0..n)
            .filter(|&j| j != i)
            .map(|j| Neighbor {
                index: j as u32,
                dist: dist(i, j),
            })
            .collect();
        all.sort_by(|a, b| {
            sort_key(a)
                .partial_cmp(&sort_key(b))
                .expect("finite distances")
        });
        all.truncate(k);
        all
    };
    let neighbors: Vec<Vec<Neighbor>> = if parallel {
        (0..n).into_par_iter().map(row).collect()
    } else {
        (0..n).map(row).collect()
    };
    KnnGraph { k, neighbors }
}

/// Bounded sorted neighbor list used by NN-descent.
struct Heap {
    items: Vec<Neighbor>,
    new_flags: Vec<bool>,
    cap: usize,
}

impl Heap {
    fn new(cap: usize) -> Self {
        Self {
            items: Vec::with_capacity(cap + 1),
            new_flags: Vec::with_capacity(cap + 1),
            cap,
        }
    }

    fn worst(&self) -> f64 {
        if self.items.len() < self.cap {
            f64::INFINITY
        } else {
            self.items.last().map_or(f64::INFINITY, |n| n.dist)
        }
    }

    fn insert(&mut self, cand: Neighbor) -> bool {
        if cand.dist >= self.worst() && self.items.len() >= self.cap {
            return false;
        }
        if self.items.iter().any(|n| n.index == cand.index) {
            return false;
        }
        let pos = self
            .items
            .partition_point(|n| sort_key(n) < sort_key(&cand));
        self.items.insert(pos, cand);
        self.new_flags.insert(pos, true);
        if self.items.len() > self.cap {
            self.items.pop();
            self.new_flags.pop();
        }
        true
    }
}

/// NN-descent (local-join refinement of random initial lists). Deterministic
/// for a given seed; recall against exact search is validated in tests.
pub fn nn_descent<D>(n: usize, k: usize, dist: D, seed: u64, max_iters: usize) -> KnnGraph
where
    D: Fn(usize, usize) -> f64,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut heaps: Vec<Heap> = (0..n).map(|_| Heap::new(k)).collect();
    for i in 0..n {
        while heaps[i].items.len() < k.min(n - 1) {
            let j = rng.gen_range(0..n);
            if j != i {
                let cand = Neighbor {
                    index: j as u32,
                    dist: dist(i, j),
                };
                heaps[i].insert(cand);
            }
        }
    }
    for _ in 0..max_iters {
        // Candidate pools: new and old forward plus reverse neighbors.
        let mut new_cands: Vec<Vec<u32>> = vec![Vec::new(); n];
        let mut old_cands: Vec<Vec<u32>> = vec![Vec::new(); n];
        for i in 0..n {
            for (pos, nb) in heaps[i].items.iter().enumerate() {
                let j = nb.index as usize;
                if heaps[i].new_flags[pos] {
                    new_cands[i].push(nb.index);
                    new_cands[j].push(i as u32);
                } else {
                    old_cands[i].push(nb.index);
                    old_cands[j].push(i as u32);
                }
            }
        }
        for heap in &mut heaps {
            heap.new_flags.iter_mut().for_each(|f| *f = false);
        }
        let mut updates = 0usize;
        for i in 0..n {
            let mut news = std::mem::take(&mut new_cands[i]);
            news.sort_unstable();
            news.dedup();
            let mut olds = std::mem::take(&mut old_cands[i]);
            olds.sort_unstable();
            olds.dedup();
            for (a_pos, &a) in news.iter().enumerate() {
                for &b in news.iter().skip(a_pos + 1).chain(olds.iter()) {
                    if a == b {
                        continue;
                    }
                    let d = dist(a as usize, b as usize);
                    if heaps[a as usize].insert(Neighbor { index: b, dist: d }) {
                        updates += 1;
                    }
                    if heaps[b as usize].insert(Neighbor { index: a, dist: d }) {
                        updates += 1;
                    }
                }
            }
        }
        if updates as f64 <= 0.001 * (n * k) as f64 {
            break;
        }
    }
    KnnGraph {
        k,
        neighbors: heaps.into_iter().map(|h| h.items).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn euclid(points: &[Vec<f64>]) -> impl Fn(usize, usize) -> f64 + Sync + '_ {
        move |i, j| {
            points[i]
                .iter()
                .zip(&points[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        }
    }

    #[test]
    fn three_points_on_a_line() {
        let points = vec![vec![0.0], vec![1.0], vec![3.0]];
        let g = exact_knn(3, 1, euclid(&points), false);
        assert_eq!(g.neighbors[0][0].index, 1);
        assert_eq!(g.neighbors[1][0].index, 0);
        assert_eq!(g.neighbors[2][0].index, 1);
    }

    #[test]
    fn duplicate_points_choose_distance_zero_first() {
        let points = vec![vec![5.0], vec![5.0], vec![9.0]];
        let g = exact_knn(3, 2, euclid(&points), false);
        assert_eq!(
            g.neighbors[0][0],
            Neighbor {
                index: 1,
                dist: 0.0
            }
        );
        assert_eq!(
            g.neighbors[1][0],
            Neighbor {
                index: 0,
                dist: 0.0
            }
        );
    }

    #[test]
    fn parallel_equals_sequential() {
        let points: Vec<Vec<f64>> = (0..40)
            .map(|i| vec![(i as f64 * 0.37).sin(), (i as f64 * 0.61).cos()])
            .collect();
        let a = exact_knn(40, 5, euclid(&points), false);
        let b = exact_knn(40, 5, euclid(&points), true);
        for (ra, rb) in a.neighbors.iter().zip(&b.neighbors) {
            assert_eq!(ra, rb);
        }
    }

    #[test]
    fn nn_descent_recall_on_clusters() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let points: Vec<Vec<f64>> = (0..500)
            .map(|i| {
                let center = (i % 5) as f64 * 10.0;
                (0..8).map(|_| center + rng.gen::<f64>()).collect()
            })
            .collect();
        let k = 10;
        let exact = exact_knn(points.len(), k, euclid(&points), false);
        let approx = nn_descent(points.len(), k, euclid(&points), 7, 12);
        let mut hits = 0usize;
        let mut total = 0usize;
        for (re, ra) in exact.neighbors.iter().zip(&approx.neighbors) {
            let truth: std::collections::HashSet<u32> = re.iter().map(|n| n.index).collect();
            hits += ra.iter().filter(|n| truth.contains(&n.index)).count();
            total += re.len();
        }
        let recall = hits as f64 / total as f64;
        assert!(recall >= 0.95, "recall {recall}");
    }

    #[test]
    fn nn_descent_is_deterministic() {
        let points: Vec<Vec<f64>> = (0..120)
            .map(|i| {
                vec![
                    (i as f64 * 0.13).sin(),
                    (i as f64 * 0.29).cos(),
                    i as f64 % 3.0,
                ]
            })
            .collect();
        let a = nn_descent(points.len(), 6, euclid(&points), 5, 10);
        let b = nn_descent(points.len(), 6, euclid(&points), 5, 10);
        for (ra, rb) in a.neighbors.iter().zip(&b.neighbors) {
            assert_eq!(ra, rb);
        }
    }
}
