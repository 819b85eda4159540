//! Random-forest regressor with per-leaf variance, used as the SMBO surrogate.

use rand::seq::SliceRandom;
use rand::Rng;

#[derive(Debug, Clone, Copy)]
pub struct ForestParams {
    pub trees: usize,
    pub min_split: usize,
    pub max_depth: usize,
    /// Fraction of features tried at each split.
    pub feature_ratio: f64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            trees: 50,
            min_split: 3,
            max_depth: 20,
            feature_ratio: 5.0 / 6.0,
        }
    }
}

#[derive(Debug, Clone)]
enum Node {
    Leaf {
        mean: f64,
        var: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone)]
struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn leaf(&self, x: &[f64]) -> (f64, f64) {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { mean, var } => return (mean, var),
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if x[feature] <= threshold { left } else { right };
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Forest {
    trees: Vec<Tree>,
}

fn mean_var(ys: &[f64]) -> (f64, f64) {
    let n = ys.len() as f64;
    let m = ys.iter().sum::<f64>() / n;
    (m, ys.iter().map(|y| (y - m) * (y - m)).sum::<f64>() / n)
}

struct Builder<'a, R> {
    xs: &'a [Vec<f64>],
    ys: &'a [f64],
    params: ForestParams,
    rng: &'a mut R,
    nodes: Vec<Node>,
}

impl<R: Rng> Builder<'_, R> {
    fn build(&mut self, idx: &mut [usize], depth: usize) -> usize {
        let here = self.nodes.len();
        let ys: Vec<f64> = idx.iter().map(|&i| self.ys[i]).collect();
        let (mean, var) = mean_var(&ys);
        self.nodes.push(Node::Leaf { mean, var });
        if idx.len() < self.params.min_split || depth >= self.params.max_depth || var == 0.0 {
            return here;
        }
        let dims = self.xs[0].len();
        let mut features: Vec<usize> = (0..dims).collect();
        features.shuffle(self.rng);
        let take = ((dims as f64 * self.params.feature_ratio).ceil() as usize).clamp(1, dims);
        let mut best: Option<(f64, usize, f64)> = None;
        let mut order: Vec<usize> = idx.to_vec();
        for &f in &features[..take] {
            order.sort_by(|&a, &b| self.xs[a][f].total_cmp(&self.xs[b][f]));
            let total: f64 = order.iter().map(|&i| self.ys[i]).sum();
            let total_sq: f64 = order.iter().map(|&i| self.ys[i] * self.ys[i]).sum();
            let (mut s, mut sq) = (0.0, 0.0);
            for k in 1..order.len() {
                let y = self.ys[order[k - 1]];
                s += y;
                sq += y * y;
                let (a, b) = (self.xs[order[k - 1]][f], self.xs[order[k]][f]);
                if a == b {
                    continue;
                }
                let nl = k as f64;
                let nr = (order.len() - k) as f64;
                let sse = (sq - s * s / nl) + ((total_sq - sq) - (total - s) * (total - s) / nr);
                if best.map_or(true, |bb| sse < bb.0) {
                    best = Some((sse, f, (a + b) / 2.0));
                }
            }
        }
        let Some((_, feature, threshold)) = best else {
            return here;
        };
        let split = partition(idx, |&i| self.xs[i][feature] <= threshold);
        let (l, r) = idx.split_at_mut(split);
        let left = self.build(l, depth + 1);
        let right = self.build(r, depth + 1);
        self.nodes[here] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        here
    }
}

fn partition<F: Fn(&usize) -> bool>(v: &mut [usize], pred: F) -> usize {
    let mut k = 0;
    for i in 0..v.len() {
        if pred(&v[i]) {
            v.swap(i, k);
            k += 1;
        }
    }
    k
}

impl Forest {
    /// Fit on rows `xs` with targets `ys`; each tree sees a bootstrap sample.
    pub fn fit<R: Rng>(xs: &[Vec<f64>], ys: &[f64], params: ForestParams, rng: &mut R) -> Forest {
        assert!(!xs.is_empty() && xs.len() == ys.len());
        let n = xs.len();
        let trees = (0..params.trees)
            .map(|_| {
                let mut idx: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
                let mut b = Builder {
                    xs,
                    ys,
                    params,
                    rng: &mut *rng,
                    nodes: Vec::new(),
                };
                b.build(&mut idx, 0);
                Tree { nodes: b.nodes }
            })
            .collect();
        Forest { trees }
    }

    /// Predictive mean and variance: the mixture of the trees' leaf
    /// distributions.
    pub fn predict(&self, x: &[f64]) -> (f64, f64) {
        let k = self.trees.len() as f64;
        let (mut m, mut second) = (0.0, 0.0);
        for t in &self.trees {
            let (lm, lv) = t.leaf(x);
            m += lm;
            second += lv + lm * lm;
        }
        m /= k;
        (m, (second / k - m * m).max(0.0))
    }
}

fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// Expected improvement of a maximization objective over `incumbent`.
pub fn expected_improvement(mean: f64, var: f64, incumbent: f64) -> f64 {
    let d = mean - incumbent;
    let sd = var.sqrt();
    if sd <= 0.0 {
        return d.max(0.0);
    }
    let z = d / sd;
    (d * normal_cdf(z) + sd * normal_pdf(z)).max(0.0)
}
