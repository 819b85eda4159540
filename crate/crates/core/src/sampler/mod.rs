//! Negative sampling: uniform, Bernoulli, self-adversarial and the
//! cache-based sampler, plus the softmax and rescaling primitives they share.

mod cache;
mod negative;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::weighted_alias::WeightedAliasIndex;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};

use crate::data::{KnowledgeGraph, RelationStats, Triplet};
use crate::scoring::{EmbeddingStore, Real};
use crate::{Error, Result};

pub use cache::{CacheEntry, CacheKey, NegativeCache};
pub use negative::{choose_side, corrupt_uniform, self_adversarial};

/// Exploration/exploitation knobs of the cache sampler.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EEHyperParams {
    /// Positive-sampling temperature.
    pub alpha1: f64,
    /// In-cache sampling temperature.
    pub alpha2: f64,
    /// Cache-update temperature.
    pub alpha3: f64,
    /// Cache size.
    pub n1: usize,
    /// Fresh candidates per refresh.
    pub n2: usize,
    /// Epochs skipped between refreshes.
    pub lazy_n: usize,
    /// Weight of the score standard deviation in the cache quality.
    pub nu: f64,
}

impl Default for EEHyperParams {
    fn default() -> Self {
        EEHyperParams {
            alpha1: 0.0,
            alpha2: 0.0,
            alpha3: 1.0,
            n1: 50,
            n2: 50,
            lazy_n: 0,
            nu: 0.0,
        }
    }
}

impl EEHyperParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("alpha1", self.alpha1),
            ("alpha2", self.alpha2),
            ("alpha3", self.alpha3),
            ("nu", self.nu),
        ] {
            if v.is_nan() || v < 0.0 {
                return Err(Error::Config(format!(
                    "{name} must be nonnegative, got {v}"
                )));
            }
        }
        if self.n1 == 0 || self.n2 == 0 {
            return Err(Error::Config(
                "cache sizes n1 and n2 must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SamplerKind {
    Uniform,
    Bernoulli,
    SelfAdversarial,
    NSCaching,
}

impl fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SamplerKind::Uniform => "uniform",
            SamplerKind::Bernoulli => "bernoulli",
            SamplerKind::SelfAdversarial => "self-adversarial",
            SamplerKind::NSCaching => "nscaching",
        })
    }
}

impl FromStr for SamplerKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "uniform" => Ok(SamplerKind::Uniform),
            "bernoulli" => Ok(SamplerKind::Bernoulli),
            "self-adversarial" | "selfadversarial" | "self-adv" => Ok(SamplerKind::SelfAdversarial),
            "nscaching" | "cache" => Ok(SamplerKind::NSCaching),
            _ => Err(Error::Config(format!("unknown sampler {s:?}"))),
        }
    }
}

/// Which end of a triplet gets corrupted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Head,
    Tail,
}

impl Side {
    pub fn corrupt(self, t: Triplet, e: usize) -> Triplet {
        match self {
            Side::Head => t.with_head(e),
            Side::Tail => t.with_tail(e),
        }
    }
}

/// Anything that can score candidate triplets.
pub trait CandidateScorer: Sync {
    fn score_triplet(&self, t: Triplet) -> f64;

    /// Scores of every substitution `e in 0..n` on `side` of `t`.
    fn score_side(&self, side: Side, t: Triplet, n: usize, out: &mut Vec<f64>) {
        out.clear();
        out.extend((0..n).map(|e| self.score_triplet(side.corrupt(t, e))));
    }
}

impl<T: Real> CandidateScorer for EmbeddingStore<T> {
    fn score_triplet(&self, t: Triplet) -> f64 {
        self.score(t).as_f64()
    }
}

/// `p_i ∝ exp(alpha * v_i)`, computed with max-subtraction. An infinite
/// `alpha` gives the indicator of the argmax set.
pub fn weighted_softmax(values: &[f64], alpha: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    weighted_softmax_into(values, alpha, &mut out);
    out
}

pub fn weighted_softmax_into(values: &[f64], alpha: f64, out: &mut Vec<f64>) {
    out.clear();
    if values.is_empty() {
        return;
    }
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if alpha.is_infinite() {
        out.extend(values.iter().map(|&v| if v == max { 1.0 } else { 0.0 }));
    } else {
        out.extend(values.iter().map(|&v| (alpha * (v - max)).exp()));
    }
    let total: f64 = out.iter().sum();
    for p in out.iter_mut() {
        *p /= total;
    }
}

/// Nearest-rank percentile of sorted data: element `ceil(n*p/100) - 1`.
fn nearest_rank(sorted: &[f64], pct: usize) -> f64 {
    let n = sorted.len();
    let idx = (n * pct).div_ceil(100).max(1) - 1;
    sorted[idx.min(n - 1)]
}

/// Piecewise-linear rescaling to `[0, 1]` between the 20th and 80th
/// percentiles of `values`. Returns whether the input was degenerate
/// (both percentiles equal), in which case every output is 0.5.
pub fn rescale_into(values: &[f64], out: &mut Vec<f64>, scratch: &mut Vec<f64>) -> bool {
    out.clear();
    if values.is_empty() {
        return false;
    }
    scratch.clear();
    scratch.extend_from_slice(values);
    scratch.sort_by(f64::total_cmp);
    let lo = nearest_rank(scratch, 20);
    let hi = nearest_rank(scratch, 80);
    if hi <= lo {
        out.extend(values.iter().map(|_| 0.5));
        return true;
    }
    let span = hi - lo;
    out.extend(values.iter().map(|&v| {
        if v > hi {
            1.0
        } else if v < lo {
            0.0
        } else {
            (v - lo) / span
        }
    }));
    false
}

pub fn rescale(values: &[f64]) -> Vec<f64> {
    let mut out = Vec::new();
    rescale_into(values, &mut out, &mut Vec::new());
    out
}

/// Draw an index from a probability vector.
pub fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

/// Pick `k` distinct indices where each successive draw follows
/// `softmax(alpha * v)` renormalized over the remaining items. Implemented
/// with Gumbel keys, which has exactly that sequential law.
pub fn sample_without_replacement<R: Rng + ?Sized>(
    values: &[f64],
    alpha: f64,
    k: usize,
    rng: &mut R,
) -> Vec<usize> {
    let n = values.len();
    if k >= n {
        return (0..n).collect();
    }
    let mut keys: Vec<(f64, f64, usize)> = values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let g = gumbel(rng);
            if alpha.is_infinite() {
                (v, g, i)
            } else {
                (alpha * v + g, 0.0, i)
            }
        })
        .collect();
    keys.sort_by(|a, b| b.0.total_cmp(&a.0).then(b.1.total_cmp(&a.1)));
    keys.truncate(k);
    keys.into_iter().map(|x| x.2).collect()
}

fn gumbel<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    -(-u.ln()).ln()
}

/// Whether the caches refresh at the end of `epoch`.
pub fn lazy_refresh_due(epoch: usize, lazy_n: usize) -> bool {
    epoch % (lazy_n + 1) == 0
}

/// Per-epoch positive sampler: `softmax(rescale(p), alpha1)` over train triplets.
pub struct PositiveSampler {
    alias: Option<WeightedAliasIndex<f64>>,
    n: usize,
}

impl PositiveSampler {
    pub fn new(weights: &[f64], alpha1: f64) -> Self {
        let n = weights.len();
        if alpha1 == 0.0 || n == 0 {
            return PositiveSampler { alias: None, n };
        }
        let probs = weighted_softmax(&rescale(weights), alpha1);
        let alias = WeightedAliasIndex::new(probs).ok();
        PositiveSampler { alias, n }
    }

    pub fn uniform(n: usize) -> Self {
        PositiveSampler { alias: None, n }
    }

    pub fn is_uniform(&self) -> bool {
        self.alias.is_none()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        match &self.alias {
            Some(a) => a.sample(rng),
            None => rng.gen_range(0..self.n),
        }
    }
}

/// A configured negative sampler, owning the cache when it needs one.
pub struct Sampler {
    pub kind: SamplerKind,
    pub params: EEHyperParams,
    pub stats: RelationStats,
    pub cache: Option<NegativeCache>,
    probs: Vec<f64>,
    scratch: Vec<f64>,
    rescaled: Vec<f64>,
}

impl Sampler {
    pub fn new(
        kind: SamplerKind,
        params: EEHyperParams,
        kg: &KnowledgeGraph,
        seed: u64,
    ) -> Result<Self> {
        params.validate()?;
        let stats = match kind {
            SamplerKind::Uniform => RelationStats::uniform(kg.relation_count()),
            _ => crate::data::relation_stats(kg),
        };
        let cache = (kind == SamplerKind::NSCaching).then(|| NegativeCache::new(params, seed));
        Ok(Sampler {
            kind,
            params,
            stats,
            cache,
            probs: Vec::new(),
            scratch: Vec::new(),
            rescaled: Vec::new(),
        })
    }

    /// Draw one negative for `pos`.
    pub fn sample_negative<S: CandidateScorer, R: Rng + ?Sized>(
        &mut self,
        kg: &KnowledgeGraph,
        scorer: &S,
        pos: Triplet,
        rng: &mut R,
    ) -> Triplet {
        let side = choose_side(self.kind, &self.stats, pos.relation, rng);
        match self.kind {
            SamplerKind::Uniform | SamplerKind::Bernoulli => corrupt_uniform(kg, pos, side, rng),
            SamplerKind::SelfAdversarial => self_adversarial(
                kg,
                scorer,
                pos,
                side,
                self.params.n1,
                self.params.alpha2,
                rng,
            ),
            SamplerKind::NSCaching => {
                let cache = self.cache.as_mut().expect("cache sampler owns a cache");
                cache.touch(kg, scorer, pos);
                let entries = cache.entries(side, pos);
                if entries.is_empty() {
                    return corrupt_uniform(kg, pos, side, rng);
                }
                let q: Vec<f64> = entries.iter().map(|e| e.quality).collect();
                rescale_into(&q, &mut self.rescaled, &mut self.scratch);
                weighted_softmax_into(&self.rescaled, self.params.alpha2, &mut self.probs);
                let e = entries[sample_index(&self.probs, rng)].entity;
                side.corrupt(pos, e)
            }
        }
    }

    /// Positive sampler for the coming epoch.
    pub fn positive_sampler(&self, kg: &KnowledgeGraph) -> PositiveSampler {
        match &self.cache {
            Some(c) if self.params.alpha1 > 0.0 => {
                PositiveSampler::new(&c.positive_weights(kg), self.params.alpha1)
            }
            _ => PositiveSampler::uniform(kg.train.len()),
        }
    }

    /// End-of-epoch maintenance. Returns the seconds spent.
    pub fn end_epoch<S: CandidateScorer>(
        &mut self,
        kg: &KnowledgeGraph,
        scorer: &S,
        epoch: usize,
    ) -> f64 {
        match &mut self.cache {
            Some(c) if lazy_refresh_due(epoch, self.params.lazy_n) => {
                c.refresh_touched(kg, scorer, epoch)
            }
            Some(c) => {
                c.set_epoch(epoch + 1);
                0.0
            }
            None => 0.0,
        }
    }
}
