use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Graph;
use crate::{rng, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkConfig {
    pub walks_per_node: usize,
    pub walk_length: usize,
    /// Context half-width.
    pub window: usize,
    /// Return parameter.
    pub p: f64,
    /// In-out parameter.
    pub q: f64,
    /// Negatives per (center, context) pair.
    pub negatives: usize,
    pub dim: usize,
    pub epochs: usize,
    pub lr: f64,
    /// (center, context) pairs per Adam step.
    pub batch_size: usize,
}

impl Default for WalkConfig {
    fn default() -> Self {
        WalkConfig {
            walks_per_node: 10,
            walk_length: 80,
            window: 10,
            p: 0.25,
            q: 0.25,
            negatives: 5,
            dim: 100,
            epochs: 1,
            lr: 0.01,
            batch_size: 512,
        }
    }
}

impl WalkConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = |x: f64| x > 0.0 && x.is_finite();
        if self.walks_per_node == 0
            || self.walk_length == 0
            || self.window == 0
            || self.negatives == 0
            || self.dim == 0
            || self.batch_size == 0
        {
            return Err(Error::Config(format!(
                "walk settings must be positive: {self:?}"
            )));
        }
        if !(pos(self.p) && pos(self.q) && pos(self.lr)) {
            return Err(Error::Config(format!(
                "p, q and lr must be positive: {self:?}"
            )));
        }
        Ok(())
    }
}

/// Next-step distribution over `graph.adj[cur]` after arriving from `prev`:
/// weight `1/p` to return, 1 to a common neighbour, `1/q` otherwise.
pub fn transition_probs(graph: &Graph, prev: usize, cur: usize, p: f64, q: f64) -> Vec<f64> {
    let mut w: Vec<f64> = graph.adj[cur]
        .iter()
        .map(|&x| {
            if x == prev {
                1.0 / p
            } else if graph.is_edge(prev, x) {
                1.0
            } else {
                1.0 / q
            }
        })
        .collect();
    let total: f64 = w.iter().sum();
    for x in &mut w {
        *x /= total;
    }
    w
}

fn draw(weights: &[f64], total: f64, rng: &mut impl Rng) -> usize {
    let u = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.len() - 1
}

fn walk_from(
    graph: &Graph,
    start: usize,
    cfg: &WalkConfig,
    rng: &mut impl Rng,
    weights: &mut Vec<f64>,
) -> Vec<usize> {
    let mut walk = Vec::with_capacity(cfg.walk_length);
    walk.push(start);
    if graph.adj[start].is_empty() {
        return walk;
    }
    let (ip, iq) = (1.0 / cfg.p, 1.0 / cfg.q);
    while walk.len() < cfg.walk_length {
        let cur = *walk.last().unwrap();
        let nbrs = &graph.adj[cur];
        let next = if walk.len() == 1 {
            nbrs[rng.gen_range(0..nbrs.len())]
        } else {
            let prev = walk[walk.len() - 2];
            weights.clear();
            weights.extend(nbrs.iter().map(|&x| {
                if x == prev {
                    ip
                } else if graph.is_edge(prev, x) {
                    1.0
                } else {
                    iq
                }
            }));
            let total = weights.iter().sum();
            nbrs[draw(weights, total, rng)]
        };
        walk.push(next);
    }
    walk
}

/// `walks_per_node` rounds over every node; walk `(round, node)` has its own
/// random stream, so the corpus does not depend on the thread count.
pub fn generate_walks(graph: &Graph, cfg: &WalkConfig, seed: u64) -> Vec<Vec<usize>> {
    let n = graph.node_count();
    (0..cfg.walks_per_node * n)
        .into_par_iter()
        .map_init(Vec::new, |weights, k| {
            let (round, node) = (k / n, k % n);
            let mut r = rng::stream(seed, &[0x3A1C, round as u64, node as u64]);
            walk_from(graph, node, cfg, &mut r, weights)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_shape() {
        let g = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3)]);
        let cfg = WalkConfig {
            walks_per_node: 3,
            walk_length: 7,
            ..Default::default()
        };
        let w = generate_walks(&g, &cfg, 1);
        assert_eq!(w.len(), 12);
        assert!(w.iter().all(|x| x.len() == 7));
        for walk in &w {
            assert!(walk.windows(2).all(|s| g.is_edge(s[0], s[1])));
        }
        assert_eq!(w, generate_walks(&g, &cfg, 1));
    }

    #[test]
    fn isolated_nodes_emit_single_node_walks() {
        let g = Graph::from_edges(3, &[(0, 1)]);
        let w = generate_walks(&g, &WalkConfig::default(), 2);
        assert!(w.iter().filter(|x| x[0] == 2).all(|x| x.len() == 1));
    }

    #[test]
    fn probabilities_sum_to_one() {
        let g = Graph::from_edges(5, &[(0, 1), (1, 2), (0, 2), (2, 3), (3, 4), (1, 4)]);
        for (prev, cur) in [(0, 1), (1, 2), (2, 3), (4, 1)] {
            let s: f64 = transition_probs(&g, prev, cur, 0.3, 2.0).iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }
}
