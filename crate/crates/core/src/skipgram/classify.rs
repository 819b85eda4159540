use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eval::f1_scores;
use crate::rng;
use crate::{Error, Result};

pub const CLASSIFIER_LAMBDA: f64 = 1e-4;
pub const CLASSIFIER_STEPS: usize = 500;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeClassReport {
    pub train_fraction: f64,
    pub micro: Vec<f64>,
    pub macro_: Vec<f64>,
    pub micro_mean: f64,
    pub micro_std: f64,
    pub macro_mean: f64,
    pub macro_std: f64,
    /// Per split, the classes with no training example.
    pub absent_classes: Vec<Vec<usize>>,
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 {
        v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (m, var.sqrt())
}

/// Largest eigenvalue of `XᵀX / n` by power iteration.
fn gram_top_eigenvalue(xs: &[Vec<f64>]) -> f64 {
    let d = xs[0].len();
    let mut v = vec![1.0 / (d as f64).sqrt(); d];
    let mut lambda = 0.0;
    for _ in 0..100 {
        let mut w = vec![0.0; d];
        for x in xs {
            let p: f64 = x.iter().zip(&v).map(|(a, b)| a * b).sum();
            for (wi, xi) in w.iter_mut().zip(x) {
                *wi += p * xi;
            }
        }
        let norm = w.iter().map(|a| a * a).sum::<f64>().sqrt() / xs.len() as f64;
        if norm == 0.0 {
            return 0.0;
        }
        let s = norm * xs.len() as f64;
        v = w.into_iter().map(|a| a / s).collect();
        lambda = norm;
    }
    lambda
}

/// One-vs-rest L2-regularized logistic regression trained by full-batch
/// gradient descent. Rows of the result are `[w_1..w_d, bias]` per class;
/// classes without positives in `ys` stay all-zero.
pub fn logistic_ovr(
    xs: &[Vec<f64>],
    ys: &[usize],
    num_classes: usize,
    lambda: f64,
    steps: usize,
) -> Vec<Vec<f64>> {
    let d = xs[0].len();
    let n = xs.len() as f64;
    // the bias column adds at most 1 to the Gram spectrum
    let lip = 0.25 * (gram_top_eigenvalue(xs) + 1.0) + lambda;
    let lr = 1.0 / lip;
    (0..num_classes)
        .into_par_iter()
        .map(|c| {
            let mut w = vec![0.0; d + 1];
            if !ys.contains(&c) {
                return w;
            }
            let mut g = vec![0.0; d + 1];
            for _ in 0..steps {
                g.iter_mut().for_each(|x| *x = 0.0);
                for (x, &y) in xs.iter().zip(ys) {
                    let z: f64 = x.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() + w[d];
                    let p = 1.0 / (1.0 + (-z).exp());
                    let e = p - if y == c { 1.0 } else { 0.0 };
                    for (gi, xi) in g.iter_mut().zip(x) {
                        *gi += e * xi;
                    }
                    g[d] += e;
                }
                for i in 0..=d {
                    let reg = if i < d { lambda * w[i] } else { 0.0 };
                    w[i] -= lr * (g[i] / n + reg);
                }
            }
            w
        })
        .collect()
}

fn predict(models: &[Vec<f64>], trained: &[bool], x: &[f64]) -> usize {
    let d = x.len();
    let mut best = (f64::NEG_INFINITY, 0);
    for (c, w) in models.iter().enumerate() {
        if !trained[c] {
            continue;
        }
        let z: f64 = x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() + w[d];
        if z > best.0 {
            best = (z, c);
        }
    }
    best.1
}

/// Micro/macro F1 of a one-vs-rest logistic classifier over `splits` random
/// train/test partitions of the labelled nodes.
pub fn classify_nodes(
    embeddings: &[Vec<f64>],
    labels: &[Option<usize>],
    num_classes: usize,
    train_fraction: f64,
    seed: u64,
    splits: usize,
) -> Result<NodeClassReport> {
    let labelled: Vec<usize> = (0..labels.len()).filter(|&i| labels[i].is_some()).collect();
    if labelled.len() < 2 || num_classes == 0 {
        return Err(Error::Config(
            "node classification needs at least two labelled nodes".into(),
        ));
    }
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Config(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let d = embeddings[0].len();
    let mut micro = Vec::new();
    let mut macro_ = Vec::new();
    let mut absent_all = Vec::new();
    for s in 0..splits.max(1) {
        let mut idx = labelled.clone();
        idx.shuffle(&mut rng::stream(seed, &[0xC0A5, s as u64]));
        let k = ((idx.len() as f64 * train_fraction).round() as usize).clamp(1, idx.len() - 1);
        let (tr, te) = idx.split_at(k);
        // standardize with train statistics
        let mut mean = vec![0.0; d];
        for &i in tr {
            for (m, x) in mean.iter_mut().zip(&embeddings[i]) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= tr.len() as f64);
        let mut sd = vec![0.0; d];
        for &i in tr {
            for ((s, x), m) in sd.iter_mut().zip(&embeddings[i]).zip(&mean) {
                *s += (x - m) * (x - m);
            }
        }
        sd.iter_mut()
            .for_each(|s| *s = (*s / tr.len() as f64).sqrt().max(1e-12));
        let z = |i: usize| -> Vec<f64> {
            embeddings[i]
                .iter()
                .zip(&mean)
                .zip(&sd)
                .map(|((x, m), s)| (x - m) / s)
                .collect()
        };
        let xs: Vec<Vec<f64>> = tr.iter().map(|&i| z(i)).collect();
        let ys: Vec<usize> = tr.iter().map(|&i| labels[i].unwrap()).collect();
        let models = logistic_ovr(&xs, &ys, num_classes, CLASSIFIER_LAMBDA, CLASSIFIER_STEPS);
        let trained: Vec<bool> = (0..num_classes).map(|c| ys.contains(&c)).collect();
        let absent: Vec<usize> = (0..num_classes).filter(|&c| !trained[c]).collect();
        if !absent.is_empty() {
            log::warn!("split {s}: classes {absent:?} have no training nodes");
        }
        let preds: Vec<usize> = te
            .iter()
            .map(|&i| predict(&models, &trained, &z(i)))
            .collect();
        let truth: Vec<usize> = te.iter().map(|&i| labels[i].unwrap()).collect();
        let (mi, ma) = f1_scores(&preds, &truth, num_classes);
        micro.push(mi);
        macro_.push(ma);
        absent_all.push(absent);
    }
    let (micro_mean, micro_std) = mean_std(&micro);
    let (macro_mean, macro_std) = mean_std(&macro_);
    Ok(NodeClassReport {
        train_fraction,
        micro,
        macro_,
        micro_mean,
        micro_std,
        macro_mean,
        macro_std,
        absent_classes: absent_all,
    })
}
