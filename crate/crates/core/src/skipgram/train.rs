use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use super::WalkConfig;
use crate::sampler::{
    lazy_refresh_due, rescale_into, sample_index, sample_without_replacement,
    weighted_softmax_into, EEHyperParams, SamplerKind,
};
use crate::scoring::{softplus, Matrix, Real, SparseGrad};
use crate::trainer::{GradAccumulator, SparseAdam};
use crate::{rng, Error, Result};

const MAX_RETRIES: usize = 100;
const INPUT: usize = 0;
const OUTPUT: usize = 1;

/// Loss `-log σ(v·u) - Σ log σ(-v̄·u)` for center `u`, context `v` and
/// negatives `v̄`, with gradients written into `gu`, `gv` and `gneg`.
pub fn pair_loss_grad<T: Real>(
    u: &[T],
    v: &[T],
    negs: &[&[T]],
    gu: &mut [T],
    gv: &mut [T],
    gneg: &mut [Vec<T>],
) -> f64 {
    let dot = |a: &[T], b: &[T]| {
        a.iter()
            .zip(b)
            .map(|(&x, &y)| x.as_f64() * y.as_f64())
            .sum::<f64>()
    };
    let sig = |x: f64| 1.0 / (1.0 + (-x).exp());
    gu.iter_mut().for_each(|x| *x = T::zero());
    let xp = dot(v, u);
    let mut loss = softplus(-xp);
    let cp = T::of(sig(xp) - 1.0);
    for i in 0..u.len() {
        gu[i] = gu[i] + cp * v[i];
        gv[i] = cp * u[i];
    }
    for (k, n) in negs.iter().enumerate() {
        let xn = dot(n, u);
        loss += softplus(xn);
        let cn = T::of(sig(xn));
        for i in 0..u.len() {
            gu[i] = gu[i] + cn * n[i];
            gneg[k][i] = cn * u[i];
        }
    }
    loss
}

/// Per-node negative caches for skip-gram.
pub struct NodeCache {
    pub params: EEHyperParams,
    pub entries: Vec<Vec<(usize, f64)>>,
    probs: Vec<Vec<f64>>,
    /// Sorted nodes never used as negatives for a center: itself and every
    /// node sharing a window with it somewhere in the corpus.
    pub exclude: Vec<Vec<usize>>,
    seed: u64,
}

impl NodeCache {
    pub fn new(
        node_count: usize,
        corpus: &[Vec<usize>],
        window: usize,
        params: EEHyperParams,
        seed: u64,
    ) -> Self {
        NodeCache {
            params,
            entries: vec![Vec::new(); node_count],
            probs: vec![Vec::new(); node_count],
            exclude: exclusions(node_count, corpus, window),
            seed,
        }
    }

    pub fn is_excluded(&self, u: usize, x: usize) -> bool {
        self.exclude[u].binary_search(&x).is_ok()
    }

    fn eligible(&self, u: usize) -> usize {
        self.entries.len() - self.exclude[u].len()
    }

    fn refresh_one(
        &self,
        u: usize,
        input: &Matrix<f32>,
        output: &Matrix<f32>,
        round: u64,
    ) -> (Vec<(usize, f64)>, Vec<f64>) {
        let n = self.entries.len();
        let old = &self.entries[u];
        let mut r = rng::stream(self.seed, &[0x5CAC4E, round, u as u64]);
        let mut union: Vec<usize> = old.iter().map(|e| e.0).collect();
        let want = self
            .params
            .n2
            .min(self.eligible(u).saturating_sub(union.len()));
        for _ in 0..want {
            for _ in 0..MAX_RETRIES {
                let x = r.gen_range(0..n);
                if !self.is_excluded(u, x) && !union.contains(&x) {
                    union.push(x);
                    break;
                }
            }
        }
        let cu = input.row(u);
        let scores: Vec<f64> = union
            .iter()
            .map(|&x| {
                output
                    .row(x)
                    .iter()
                    .zip(cu)
                    .map(|(&a, &b)| a as f64 * b as f64)
                    .sum()
            })
            .collect();
        let (mut resc, mut scratch) = (Vec::new(), Vec::new());
        rescale_into(&scores, &mut resc, &mut scratch);
        let keep = sample_without_replacement(&resc, self.params.alpha3, self.params.n1, &mut r);
        let entries: Vec<(usize, f64)> = keep.iter().map(|&i| (union[i], scores[i])).collect();
        let stored: Vec<f64> = entries.iter().map(|e| e.1).collect();
        rescale_into(&stored, &mut resc, &mut scratch);
        let mut probs = Vec::new();
        weighted_softmax_into(&resc, self.params.alpha2, &mut probs);
        (entries, probs)
    }

    /// Rebuild the caches of `nodes` from fresh candidates and the current
    /// embeddings. Each node has its own random stream.
    pub fn refresh(
        &mut self,
        nodes: &[usize],
        input: &Matrix<f32>,
        output: &Matrix<f32>,
        round: u64,
    ) {
        let fresh: Vec<(usize, (Vec<(usize, f64)>, Vec<f64>))> = nodes
            .par_iter()
            .map(|&u| (u, self.refresh_one(u, input, output, round)))
            .collect();
        for (u, (e, p)) in fresh {
            self.entries[u] = e;
            self.probs[u] = p;
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, u: usize, rng: &mut R) -> Option<usize> {
        let e = &self.entries[u];
        (!e.is_empty()).then(|| e[sample_index(&self.probs[u], rng)].0)
    }
}

fn exclusions(n: usize, corpus: &[Vec<usize>], window: usize) -> Vec<Vec<usize>> {
    let mut ex: Vec<Vec<usize>> = (0..n).map(|u| vec![u]).collect();
    for walk in corpus {
        for (i, &u) in walk.iter().enumerate() {
            let lo = i.saturating_sub(window);
            let hi = (i + window + 1).min(walk.len());
            ex[u].extend_from_slice(&walk[lo..hi]);
        }
        // keep memory bounded on long corpora
        for &u in walk {
            if ex[u].len() > 4096 {
                ex[u].sort_unstable();
                ex[u].dedup();
            }
        }
    }
    for l in &mut ex {
        l.sort_unstable();
        l.dedup();
    }
    ex
}

pub struct NodeEmbeddings {
    pub input: Matrix<f32>,
    pub output: Matrix<f32>,
    /// Mean pair loss per epoch.
    pub losses: Vec<f64>,
    pub cache_seconds: f64,
}

impl NodeEmbeddings {
    pub fn to_text(&self, names: &[String]) -> String {
        let mut s = String::new();
        for (i, name) in names.iter().enumerate() {
            s.push_str(name);
            for x in self.input.row(i) {
                s.push(' ');
                s.push_str(&x.to_string());
            }
            s.push('\n');
        }
        s
    }

    /// `σ(v·u)` for center `u` and context `v`.
    pub fn link_probability(&self, u: usize, v: usize) -> f64 {
        let x: f64 = self
            .input
            .row(u)
            .iter()
            .zip(self.output.row(v))
            .map(|(&a, &b)| a as f64 * b as f64)
            .sum();
        1.0 / (1.0 + (-x).exp())
    }
}

fn uniform_negative<R: Rng + ?Sized>(cache: &NodeCache, u: usize, rng: &mut R) -> Option<usize> {
    if cache.eligible(u) == 0 {
        return None;
    }
    let n = cache.entries.len();
    (0..MAX_RETRIES)
        .map(|_| rng.gen_range(0..n))
        .find(|&x| !cache.is_excluded(u, x))
}

/// Skip-gram over every (center, context) pair within the window. Negatives
/// come from the center's cache (`NSCaching`) or uniformly from the nodes
/// outside its windows (`Uniform`).
pub fn train_skipgram(
    node_count: usize,
    corpus: &[Vec<usize>],
    cfg: &WalkConfig,
    mode: SamplerKind,
    ee: &EEHyperParams,
    seed: u64,
) -> Result<NodeEmbeddings> {
    cfg.validate()?;
    ee.validate()?;
    if !matches!(mode, SamplerKind::Uniform | SamplerKind::NSCaching) {
        return Err(Error::Config(format!(
            "skip-gram supports uniform and nscaching negatives, not {mode}"
        )));
    }
    if corpus.iter().all(|w| w.len() < 2) {
        return Err(Error::Config(
            "walk corpus has no (center, context) pairs".into(),
        ));
    }
    let d = cfg.dim;
    let mut params = vec![
        Matrix::<f32>::zeros(node_count, d),
        Matrix::<f32>::zeros(node_count, d),
    ];
    {
        let mut r = rng::stream(seed, &[0x5C1]);
        let b = 0.5 / d as f64;
        for x in &mut params[INPUT].data {
            *x = r.gen_range(-b..b) as f32;
        }
    }
    let mut cache = NodeCache::new(node_count, corpus, cfg.window, *ee, seed);
    let use_cache = mode == SamplerKind::NSCaching;
    let mut cache_seconds = 0.0;
    if use_cache {
        let t = Instant::now();
        let all: Vec<usize> = (0..node_count).collect();
        cache.refresh(&all, &params[INPUT], &params[OUTPUT], 0);
        cache_seconds += t.elapsed().as_secs_f64();
    }
    let mut adam = SparseAdam::for_params(&params, cfg.lr);
    let mut acc = GradAccumulator::for_params(&params);
    let mut grad = SparseGrad::<f32>::new(d);
    let (mut gu, mut gv) = (vec![0f32; d], vec![0f32; d]);
    let mut gneg = vec![vec![0f32; d]; cfg.negatives];
    let mut negs: Vec<usize> = Vec::with_capacity(cfg.negatives);
    let mut touched_centers: Vec<usize> = Vec::new();
    let mut is_touched = vec![false; node_count];
    let mut round: u64 = 0;
    let mut losses = Vec::with_capacity(cfg.epochs);
    let mut order: Vec<usize> = (0..corpus.len()).collect();

    for epoch in 0..cfg.epochs {
        let mut r = rng::stream(seed, &[0x5C2, epoch as u64]);
        order.shuffle(&mut r);
        let (mut loss_sum, mut pairs) = (0.0f64, 0usize);
        let mut in_batch = 0usize;
        let mut flush = |params: &mut Vec<Matrix<f32>>,
                         acc: &mut GradAccumulator<f32>,
                         touched: &mut Vec<usize>,
                         is_touched: &mut Vec<bool>,
                         round: &mut u64,
                         cache: &mut NodeCache| {
            adam.step_params(params, acc);
            acc.reset();
            *round += 1;
            if use_cache && lazy_refresh_due(*round as usize, ee.lazy_n) {
                let t = Instant::now();
                touched.sort_unstable();
                cache.refresh(touched, &params[INPUT], &params[OUTPUT], *round);
                for &c in touched.iter() {
                    is_touched[c] = false;
                }
                touched.clear();
                cache_seconds += t.elapsed().as_secs_f64();
            }
        };
        for &w in &order {
            let walk = &corpus[w];
            for (i, &u) in walk.iter().enumerate() {
                let lo = i.saturating_sub(cfg.window);
                let hi = (i + cfg.window + 1).min(walk.len());
                for (j, &v) in walk.iter().enumerate().take(hi).skip(lo) {
                    if j == i {
                        continue;
                    }
                    negs.clear();
                    for _ in 0..cfg.negatives {
                        let x = if use_cache {
                            cache.draw(u, &mut r)
                        } else {
                            uniform_negative(&cache, u, &mut r)
                        };
                        if let Some(x) = x {
                            negs.push(x);
                        }
                    }
                    let nrows: Vec<&[f32]> = negs.iter().map(|&x| params[OUTPUT].row(x)).collect();
                    let loss = pair_loss_grad(
                        params[INPUT].row(u),
                        params[OUTPUT].row(v),
                        &nrows,
                        &mut gu,
                        &mut gv,
                        &mut gneg,
                    );
                    if !loss.is_finite() {
                        return Err(Error::Diverged(format!("skip-gram epoch {epoch}: loss {loss} at center {u}, context {v}, negatives {negs:?}")));
                    }
                    loss_sum += loss;
                    pairs += 1;
                    grad.clear();
                    grad.row_mut(INPUT, u).copy_from_slice(&gu);
                    for (a, &b) in grad.row_mut(OUTPUT, v).iter_mut().zip(&gv) {
                        *a += b;
                    }
                    for (k, &x) in negs.iter().enumerate() {
                        for (a, &b) in grad.row_mut(OUTPUT, x).iter_mut().zip(&gneg[k]) {
                            *a += b;
                        }
                    }
                    acc.add(&grad);
                    if !is_touched[u] {
                        is_touched[u] = true;
                        touched_centers.push(u);
                    }
                    in_batch += 1;
                    if in_batch == cfg.batch_size {
                        flush(
                            &mut params,
                            &mut acc,
                            &mut touched_centers,
                            &mut is_touched,
                            &mut round,
                            &mut cache,
                        );
                        in_batch = 0;
                    }
                }
            }
        }
        if in_batch > 0 {
            flush(
                &mut params,
                &mut acc,
                &mut touched_centers,
                &mut is_touched,
                &mut round,
                &mut cache,
            );
        }
        losses.push(loss_sum / pairs.max(1) as f64);
    }
    let output = params.pop().expect("two matrices");
    let input = params.pop().expect("two matrices");
    Ok(NodeEmbeddings {
        input,
        output,
        losses,
        cache_seconds,
    })
}
