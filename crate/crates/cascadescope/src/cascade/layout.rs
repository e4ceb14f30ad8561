//! Kamada-Kawai force-directed layout: per-component stress minimization by
//! Newton coordinate descent with backtracking, disconnected components
//! packed on a grid.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::CascadeGraph;

pub const DEFAULT_LAYOUT_SWEEPS: usize = 100;

/// Shortest-path structure of one connected component.
struct Component {
    /// Indices into the full node set.
    nodes: Vec<usize>,
    /// Dense hop distances within the component.
    dist: Vec<u32>,
    diameter: u32,
}

impl Component {
    fn size(&self) -> usize {
        self.nodes.len()
    }

    fn d(&self, i: usize, j: usize) -> u32 {
        self.dist[i * self.nodes.len() + j]
    }
}

/// Stress model: desired lengths `l_ij = L * d_ij` with `L = 1/diameter`
/// per component and spring constants `k_ij = 1 / d_ij^2`.
pub struct StressModel {
    n: usize,
    components: Vec<Component>,
}

impl StressModel {
    /// Treat the edge list as undirected; self-loops are ignored.
    pub fn new(n_nodes: usize, edges: &[(u32, u32)]) -> Self {
        let mut adj: Vec<Vec<u32>> = vec![Vec::new(); n_nodes];
        for &(a, b) in edges {
            if a == b {
                continue;
            }
            adj[a as usize].push(b);
            adj[b as usize].push(a);
        }
        let mut seen = vec![false; n_nodes];
        let mut components = Vec::new();
        for start in 0..n_nodes {
            if seen[start] {
                continue;
            }
            // BFS to gather the component.
            let mut nodes = vec![start];
            seen[start] = true;
            let mut head = 0;
            while head < nodes.len() {
                let u = nodes[head];
                head += 1;
                for &v in &adj[u] {
                    if !seen[v as usize] {
                        seen[v as usize] = true;
                        nodes.push(v as usize);
                    }
                }
            }
            nodes.sort_unstable();
            let local: std::collections::HashMap<usize, usize> =
                nodes.iter().enumerate().map(|(i, &g)| (g, i)).collect();
            let m = nodes.len();
            let mut dist = vec![u32::MAX; m * m];
            for (li, &gi) in nodes.iter().enumerate() {
                // BFS from gi within the component.
                dist[li * m + li] = 0;
                let mut queue = std::collections::VecDeque::from([gi]);
                while let Some(u) = queue.pop_front() {
                    let du = dist[li * m + local[&u]];
                    for &v in &adj[u] {
                        let lv = local[&(v as usize)];
                        if dist[li * m + lv] == u32::MAX {
                            dist[li * m + lv] = du + 1;
                            queue.push_back(v as usize);
                        }
                    }
                }
            }
            let diameter = dist.iter().copied().max().unwrap_or(0).max(1);
            components.push(Component {
                nodes,
                dist,
                diameter,
            });
        }
        Self {
            n: n_nodes,
            components,
        }
    }

    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    /// Total stress of a full position assignment. Only intra-component
    /// pairs contribute, so the value is invariant under rigid transforms
    /// of the whole layout.
    pub fn stress_of(&self, positions: &[[f64; 2]]) -> f64 {
        assert_eq!(positions.len(), self.n);
        let mut total = 0.0;
        for comp in &self.components {
            let scale = 1.0 / comp.diameter as f64;
            for i in 0..comp.size() {
                for j in i + 1..comp.size() {
                    let d = comp.d(i, j) as f64;
                    let k = 1.0 / (d * d);
                    let l = scale * d;
                    let pi = positions[comp.nodes[i]];
                    let pj = positions[comp.nodes[j]];
                    let r = ((pi[0] - pj[0]).powi(2) + (pi[1] - pj[1]).powi(2)).sqrt();
                    total += k * (r - l) * (r - l);
                }
            }
        }
        total
    }
}

#[derive(Debug, Clone)]
pub struct LayoutResult {
    pub positions: Vec<[f64; 2]>,
    pub stress: f64,
    pub components: usize,
    /// Stress after every accepted node update, non-increasing by
    /// construction.
    pub trace: Vec<f64>,
}

/// Stress of node `i` against all others in its component.
fn node_stress(pos: &[[f64; 2]], comp: &Component, scale: f64, i: usize) -> f64 {
    let pi = pos[i];
    let mut e = 0.0;
    for j in 0..comp.size() {
        if j == i {
            continue;
        }
        let d = comp.d(i, j) as f64;
        let k = 1.0 / (d * d);
        let l = scale * d;
        let r = ((pi[0] - pos[j][0]).powi(2) + (pi[1] - pos[j][1]).powi(2)).sqrt();
        e += k * (r - l) * (r - l);
    }
    e
}

/// Deterministic circle initialization with seeded jitter.
fn init_component(comp: &Component, rng: &mut ChaCha8Rng) -> Vec<[f64; 2]> {
    let m = comp.size();
    if m == 1 {
        return vec![[0.0, 0.0]];
    }
    (0..m)
        .map(|i| {
            let angle = 2.0 * std::f64::consts::PI * i as f64 / m as f64;
            let jitter = 0.05 * (rng.gen::<f64>() - 0.5);
            [
                0.5 * angle.cos() + jitter,
                0.5 * angle.sin() + 0.05 * (rng.gen::<f64>() - 0.5),
            ]
        })
        .collect()
}

fn optimize_component(
    comp: &Component,
    pos: &mut [[f64; 2]],
    sweeps: usize,
    trace: &mut Vec<f64>,
    running_total: &mut f64,
) {
    let m = comp.size();
    if m == 1 {
        return;
    }
    let scale = 1.0 / comp.diameter as f64;
    for _ in 0..sweeps {
        let mut moved = 0.0f64;
        for i in 0..m {
            // Gradient and Hessian of this node's stress terms.
            let (mut gx, mut gy) = (0.0, 0.0);
            let (mut hxx, mut hxy, mut hyy) = (0.0, 0.0, 0.0);
            for j in 0..m {
                if j == i {
                    continue;
                }
                let d = comp.d(i, j) as f64;
                let k = 1.0 / (d * d);
                let l = scale * d;
                let dx = pos[i][0] - pos[j][0];
                let dy = pos[i][1] - pos[j][1];
                let r = (dx * dx + dy * dy).sqrt().max(1e-12);
                let r3 = r * r * r;
                gx += 2.0 * k * (1.0 - l / r) * dx;
                gy += 2.0 * k * (1.0 - l / r) * dy;
                hxx += 2.0 * k * (1.0 - l * dy * dy / r3);
                hxy += 2.0 * k * (l * dx * dy / r3);
                hyy += 2.0 * k * (1.0 - l * dx * dx / r3);
            }
            let grad_norm = (gx * gx + gy * gy).sqrt();
            if grad_norm < 1e-12 {
                continue;
            }
            let det = hxx * hyy - hxy * hxy;
            let (mut sx, mut sy) = if det.abs() > 1e-12 {
                ((-gx * hyy + gy * hxy) / det, (gx * hxy - gy * hxx) / det)
            } else {
                (-gx, -gy)
            };
            // A Newton step toward a saddle is replaced by plain descent.
            if sx * gx + sy * gy > 0.0 {
                sx = -gx;
                sy = -gy;
            }
            let before = node_stress(pos, comp, scale, i);
            let original = pos[i];
            let mut lambda = 1.0;
            let mut accepted = false;
            for _ in 0..30 {
                pos[i] = [original[0] + lambda * sx, original[1] + lambda * sy];
                let after = node_stress(pos, comp, scale, i);
                if after < before {
                    *running_total -= before - after;
                    trace.push(*running_total);
                    moved = moved.max(lambda * (sx * sx + sy * sy).sqrt());
                    accepted = true;
                    break;
                }
                lambda *= 0.5;
            }
            if !accepted {
                pos[i] = original;
            }
        }
        if moved < 1e-10 {
            break;
        }
    }
}

/// Lay out an undirected edge list. Components are optimized independently
/// and packed on a grid (largest first); stress sums per-component stresses
/// and is therefore unaffected by packing offsets.
pub fn layout_edges(
    n_nodes: usize,
    edges: &[(u32, u32)],
    sweeps: usize,
    seed: u64,
) -> LayoutResult {
    let model = StressModel::new(n_nodes, edges);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // All components are initialized up front so the global stress trace
    // starts complete and only ever decreases as updates are accepted.
    let mut placed: Vec<(usize, Vec<[f64; 2]>)> = model
        .components
        .iter()
        .enumerate()
        .map(|(ci, comp)| (ci, init_component(comp, &mut rng)))
        .collect();
    let mut running_total: f64 = placed
        .iter()
        .map(|(ci, pos)| {
            let comp = &model.components[*ci];
            let scale = 1.0 / comp.diameter as f64;
            (0..comp.size()).map(|i| node_stress(pos, comp, scale, i)).sum::<f64>() / 2.0
        })
        .sum();
    let mut trace = vec![running_total];
    // Deterministic component processing order: by construction order
    // (lowest global node first); packing goes largest component first.
    for (ci, pos) in placed.iter_mut() {
        optimize_component(&model.components[*ci], pos, sweeps, &mut trace, &mut running_total);
    }
    let mut order: Vec<usize> = (0..placed.len()).collect();
    order.sort_by_key(|&i| (std::cmp::Reverse(model.components[i].size()), i));

    // Grid packing with uniform cells sized to the largest bounding box.
    let mut cell = 0.0f64;
    let mut boxes = Vec::new();
    for (_, pos) in &placed {
        let (mut lo_x, mut lo_y, mut hi_x, mut hi_y) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
        for p in pos {
            lo_x = lo_x.min(p[0]);
            lo_y = lo_y.min(p[1]);
            hi_x = hi_x.max(p[0]);
            hi_y = hi_y.max(p[1]);
        }
        cell = cell.max(hi_x - lo_x).max(hi_y - lo_y);
        boxes.push((lo_x, lo_y));
    }
    let cell = cell.max(0.1) * 1.3;
    let cols = (placed.len() as f64).sqrt().ceil() as usize;
    let mut positions = vec![[0.0, 0.0]; n_nodes];
    for (slot, &pi) in order.iter().enumerate() {
        let (ci, pos) = &placed[pi];
        let comp = &model.components[*ci];
        let (lo_x, lo_y) = boxes[pi];
        let ox = (slot % cols) as f64 * cell - lo_x;
        let oy = (slot / cols) as f64 * cell - lo_y;
        for (local, &global) in comp.nodes.iter().enumerate() {
            positions[global] = [pos[local][0] + ox, pos[local][1] + oy];
        }
    }
    let stress = model.stress_of(&positions);
    LayoutResult {
        positions,
        stress,
        components: model.n_components(),
        trace,
    }
}

/// Lay out a cascade graph (directed edges treated as undirected).
pub fn kamada_kawai_layout(g: &CascadeGraph, sweeps: usize, seed: u64) -> LayoutResult {
    let edges: Vec<(u32, u32)> = g.edges.iter().map(|e| (e.source, e.target)).collect();
    layout_edges(g.nodes.len(), &edges, sweeps, seed)
}
