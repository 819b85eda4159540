//! Diagnostics: gradient-norm distributions and running score variance.

use crate::data::{KnowledgeGraph, Triplet};
use crate::scoring::{pair_gradient, EmbeddingStore, Loss, Real, SparseGrad};

/// Welford running mean and variance.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Welford {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> Option<f64> {
        (self.count > 0).then_some(self.mean)
    }

    /// Sample variance `M2 / (n - 1)`; absent below two observations.
    pub fn variance(&self) -> Option<f64> {
        (self.count >= 2).then(|| self.m2 / (self.count - 1) as f64)
    }

    pub fn std(&self) -> Option<f64> {
        self.variance().map(f64::sqrt)
    }
}

/// Per-triplet score history for a fixed list of tracked triplets.
#[derive(Debug, Clone)]
pub struct VarianceTracker {
    pub tracked: Vec<Triplet>,
    pub stats: Vec<Welford>,
    pub nu: f64,
}

impl VarianceTracker {
    pub fn new(tracked: Vec<Triplet>, nu: f64) -> Self {
        let stats = vec![Welford::default(); tracked.len()];
        VarianceTracker { tracked, stats, nu }
    }

    /// Record one observation per tracked triplet.
    pub fn observe<T: Real>(&mut self, store: &EmbeddingStore<T>) {
        for (t, w) in self.tracked.iter().zip(self.stats.iter_mut()) {
            w.push(store.score(*t).as_f64());
        }
    }

    pub fn observe_scores(&mut self, scores: &[f64]) {
        for (w, &s) in self.stats.iter_mut().zip(scores) {
            w.push(s);
        }
    }

    /// `score + nu * std` for tracked triplet `i` (plain score without history).
    pub fn quality(&self, i: usize, score: f64) -> f64 {
        if self.nu == 0.0 {
            score
        } else {
            score + self.nu * self.stats[i].std().unwrap_or(0.0)
        }
    }
}

/// Pair-gradient norms of `pos` against every tail substitution that is not
/// a train triplet.
pub fn tail_gradient_norms<T: Real>(
    store: &EmbeddingStore<T>,
    kg: &KnowledgeGraph,
    loss: &Loss,
    pos: Triplet,
) -> Vec<f64> {
    let mut g = SparseGrad::new(store.width());
    let mut rows = Vec::new();
    (0..kg.entity_count())
        .map(|e| pos.with_tail(e))
        .filter(|n| !kg.in_train(n))
        .map(|n| pair_gradient(store, loss, pos, n, &mut g, &mut rows).grad_norm)
        .collect()
}

/// Empirical complementary CDF `P(X >= x)` at 0 and at every distinct
/// sample value, ascending.
pub fn ccdf(samples: &[f64]) -> Vec<(f64, f64)> {
    let mut v: Vec<f64> = samples.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mut out = vec![(0.0, 1.0)];
    let mut i = 0;
    while i < v.len() {
        let x = v[i];
        let p = (v.len() - i) as f64 / n;
        if x > 0.0 {
            out.push((x, p));
        }
        while i < v.len() && v[i] == x {
            i += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn welford_hand_values() {
        let mut w = Welford::default();
        assert_eq!(w.variance(), None);
        for x in [1.0, 2.0, 3.0, 4.0] {
            w.push(x);
        }
        assert_eq!(w.mean(), Some(2.5));
        assert!((w.variance().unwrap() - 5.0 / 3.0).abs() < 1e-12);
        let mut c = Welford::default();
        for _ in 0..10 {
            c.push(0.7);
        }
        assert_eq!(c.variance(), Some(0.0));
    }

    #[test]
    fn ccdf_starts_at_one_and_decreases() {
        let c = ccdf(&[0.5, 0.5, 1.0, 2.0]);
        assert_eq!(c, vec![(0.0, 1.0), (0.5, 1.0), (1.0, 0.5), (2.0, 0.25)]);
    }
}
