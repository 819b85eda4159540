//! Mini-batch training with sparse Adam, periodic validation and an
//! optional Bernoulli warm-up phase.

mod adam;

use std::time::Instant;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{KnowledgeGraph, Triplet};
use crate::eval;
use crate::sampler::{CandidateScorer, EEHyperParams, Sampler, SamplerKind, Side};
use crate::scoring::{
    decode_checkpoint, encode_checkpoint, pair_gradient, EmbeddingStore, Loss, LossKind, ModelKind,
    PairStats, Role, SparseGrad,
};
use crate::{rng, Error, Result};

pub use adam::{GradAccumulator, SparseAdam, BETA1, BETA2, EPSILON};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub model: ModelKind,
    pub dim: usize,
    pub loss: Loss,
    pub batch_size: usize,
    pub lr: f64,
    pub epochs: usize,
    pub seed: u64,
    pub sampler: SamplerKind,
    pub ee: EEHyperParams,
    /// Bernoulli epochs run before switching to `sampler`; 0 trains from scratch.
    pub pretrain_epochs: usize,
    /// Validate every this many epochs (0 disables validation).
    pub eval_every: usize,
    /// L2-normalize entity rows after each step.
    pub normalize_entities: bool,
    /// SimplE: average instead of sum the two terms.
    pub simple_half: bool,
    /// Negatives drawn per positive.
    pub negatives: usize,
    /// Worker threads for per-pair gradients (1 = in the calling thread).
    pub threads: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            model: ModelKind::TransE,
            dim: 50,
            loss: Loss::margin(2.0),
            batch_size: 1024,
            lr: 1e-3,
            epochs: 1000,
            seed: 1,
            sampler: SamplerKind::NSCaching,
            ee: EEHyperParams::default(),
            pretrain_epochs: 0,
            eval_every: 20,
            normalize_entities: false,
            simple_half: false,
            negatives: 1,
            threads: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.dim == 0 {
            return bad("dim must be positive".into());
        }
        if self.batch_size == 0 {
            return bad("batch size must be at least 1".into());
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad(format!("learning rate must be positive, got {}", self.lr));
        }
        if let LossKind::Margin { gamma } = self.loss.kind {
            if !(gamma > 0.0) {
                return bad(format!("margin must be positive, got {gamma}"));
            }
        }
        if !(self.loss.lambda >= 0.0) {
            return bad(format!(
                "lambda must be nonnegative, got {}",
                self.loss.lambda
            ));
        }
        if self.negatives == 0 || self.threads == 0 {
            return bad("negatives and threads must be at least 1".into());
        }
        self.ee.validate()
    }

    /// Stable hex digest of the serialized configuration.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).unwrap_or_default();
        format!(
            "{:016x}",
            rng::derive_seed(0, &json.bytes().map(u64::from).collect::<Vec<_>>())
        )
    }
}

/// One line of the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean pair loss over the epoch.
    pub loss: f64,
    /// Mean L2 norm of the per-pair gradients.
    pub grad_norm_mean: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mrr_valid: Option<f64>,
    pub seconds: f64,
    pub cache_seconds: f64,
}

/// What the per-epoch callback sees.
pub struct EpochView<'a> {
    pub record: &'a EpochRecord,
    pub store: &'a EmbeddingStore<f32>,
    pub sampler: &'a Sampler,
    pub kg: &'a KnowledgeGraph,
}

pub type Observer<'o> = dyn FnMut(&EpochView<'_>) -> Result<()> + 'o;

#[derive(Debug, Clone)]
pub struct BestCheckpoint {
    pub epoch: usize,
    pub mrr: f64,
    pub store: EmbeddingStore<f32>,
}

pub struct TrainOutcome {
    pub store: EmbeddingStore<f32>,
    pub best: Option<BestCheckpoint>,
    pub log: Vec<EpochRecord>,
    pub cache_seconds: f64,
    pub refresh_passes: usize,
    /// The Bernoulli phase's final store when pretraining ran.
    pub pretrained: Option<EmbeddingStore<f32>>,
}

impl TrainOutcome {
    /// Best validated store, or the final one when nothing was validated.
    pub fn selected(&self) -> &EmbeddingStore<f32> {
        self.best.as_ref().map(|b| &b.store).unwrap_or(&self.store)
    }
}

pub fn init_store(kg: &KnowledgeGraph, cfg: &TrainConfig) -> Result<EmbeddingStore<f32>> {
    let mut s = EmbeddingStore::xavier(
        cfg.model,
        kg.entity_count(),
        kg.relation_count(),
        cfg.dim,
        cfg.seed,
    )?;
    s.simple_half = cfg.simple_half;
    Ok(s)
}

/// Train from a fresh initialization, with the warm-up phase if configured.
pub fn train(
    kg: &KnowledgeGraph,
    cfg: &TrainConfig,
    observer: &mut Observer<'_>,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if cfg.pretrain_epochs > 0 {
        return pretrain_then_switch(kg, cfg, observer);
    }
    let store = init_store(kg, cfg)?;
    run_phase(kg, cfg, store, 0, 0, observer)
}

/// Continue training an existing store with a fresh optimizer and cache.
pub fn train_warm(
    kg: &KnowledgeGraph,
    cfg: &TrainConfig,
    store: EmbeddingStore<f32>,
    observer: &mut Observer<'_>,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    check_store(kg, cfg, &store)?;
    run_phase(kg, cfg, store, 1, 0, observer)
}

/// Bernoulli sampling for `pretrain_epochs`, a checkpoint round trip, then
/// `epochs` more with the configured sampler, a new cache and a new optimizer.
pub fn pretrain_then_switch(
    kg: &KnowledgeGraph,
    cfg: &TrainConfig,
    observer: &mut Observer<'_>,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let store = init_store(kg, cfg)?;
    if cfg.pretrain_epochs == 0 {
        return run_phase(kg, cfg, store, 0, 0, observer);
    }
    let warm = TrainConfig {
        sampler: SamplerKind::Bernoulli,
        epochs: cfg.pretrain_epochs,
        eval_every: 0,
        ..cfg.clone()
    };
    let phase1 = run_phase(kg, &warm, store, 0, 0, observer)?;
    let reloaded = decode_checkpoint(&encode_checkpoint(&phase1.store))?;
    let mut out = run_phase(kg, cfg, reloaded, 1, cfg.pretrain_epochs, observer)?;
    let mut log = phase1.log;
    log.append(&mut out.log);
    out.log = log;
    out.cache_seconds += phase1.cache_seconds;
    out.pretrained = Some(phase1.store);
    Ok(out)
}

fn check_store(kg: &KnowledgeGraph, cfg: &TrainConfig, s: &EmbeddingStore<f32>) -> Result<()> {
    if s.kind != cfg.model
        || s.dim != cfg.dim
        || s.entity_count != kg.entity_count()
        || s.relation_count != kg.relation_count()
    {
        return Err(Error::Dimension(format!(
            "checkpoint is {} d={} |E|={} |R|={}, run expects {} d={} |E|={} |R|={}",
            s.kind,
            s.dim,
            s.entity_count,
            s.relation_count,
            cfg.model,
            cfg.dim,
            kg.entity_count(),
            kg.relation_count()
        )));
    }
    Ok(())
}

fn run_phase(
    kg: &KnowledgeGraph,
    cfg: &TrainConfig,
    mut store: EmbeddingStore<f32>,
    phase: u64,
    epoch_offset: usize,
    observer: &mut Observer<'_>,
) -> Result<TrainOutcome> {
    if kg.train.is_empty() {
        return Err(Error::EmptyTrain);
    }
    let mut sampler = Sampler::new(
        cfg.sampler,
        cfg.ee,
        kg,
        rng::derive_seed(cfg.seed, &[0x5A3, phase]),
    )?;
    let mut adam = SparseAdam::new(&store, cfg.lr);
    let mut acc = GradAccumulator::for_store(&store);
    let mut rng = rng::stream(cfg.seed, &[0x7241, phase]);
    let pool = if cfg.threads > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(cfg.threads)
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?,
        )
    } else {
        None
    };
    let n = kg.train.len();
    let m = cfg.batch_size.min(n);
    let batches = n.div_ceil(m);
    let mut order: Vec<usize> = (0..n).collect();
    let mut grad = SparseGrad::new(store.width());
    let mut rows = Vec::new();
    let mut pairs: Vec<(Triplet, Triplet)> = Vec::with_capacity(m * cfg.negatives);
    let mut log = Vec::with_capacity(cfg.epochs);
    let mut best: Option<BestCheckpoint> = None;
    let rel_slot = store.slot_of(Role::RelationNormal);
    let ent_slot = store.slot_of(Role::Entity);
    let mut touched_rel: Vec<usize> = Vec::new();
    let mut touched_ent: Vec<usize> = Vec::new();

    for local in 0..cfg.epochs {
        let epoch = epoch_offset + local;
        let start = Instant::now();
        let positives = sampler.positive_sampler(kg);
        if positives.is_uniform() {
            order.shuffle(&mut rng);
        }
        let (mut loss_sum, mut norm_sum, mut count) = (0.0f64, 0.0f64, 0usize);
        for b in 0..batches {
            pairs.clear();
            let lo = b * m;
            let hi = ((b + 1) * m).min(n);
            for i in lo..hi {
                let pos = if positives.is_uniform() {
                    kg.train[order[i]]
                } else {
                    kg.train[positives.sample(&mut rng)]
                };
                for _ in 0..cfg.negatives {
                    let neg = sampler.sample_negative(kg, &store, pos, &mut rng);
                    pairs.push((pos, neg));
                }
            }
            let mut check = |stats: &PairStats, pos: Triplet, neg: Triplet| -> Result<()> {
                if !stats.loss.is_finite() || !stats.grad_norm.is_finite() {
                    return Err(Error::Diverged(format!(
                        "epoch {epoch} batch {b}: loss {} grad norm {} for positive {pos:?} (score {}) and negative {neg:?} (score {}); parameters finite: {}",
                        stats.loss,
                        stats.grad_norm,
                        stats.pos_score,
                        stats.neg_score,
                        store.all_finite()
                    )));
                }
                loss_sum += stats.loss;
                norm_sum += stats.grad_norm;
                count += 1;
                Ok(())
            };
            match &pool {
                None => {
                    for &(pos, neg) in &pairs {
                        let stats =
                            pair_gradient(&store, &cfg.loss, pos, neg, &mut grad, &mut rows);
                        check(&stats, pos, neg)?;
                        acc.add(&grad);
                    }
                }
                Some(pool) => {
                    let width = store.width();
                    let results: Vec<(PairStats, SparseGrad<f32>)> = pool.install(|| {
                        pairs
                            .par_iter()
                            .map_init(
                                || (SparseGrad::new(width), Vec::new()),
                                |(g, r), &(pos, neg)| {
                                    let stats = pair_gradient(&store, &cfg.loss, pos, neg, g, r);
                                    (stats, g.clone())
                                },
                            )
                            .collect()
                    });
                    for ((stats, g), &(pos, neg)) in results.iter().zip(&pairs) {
                        check(stats, pos, neg)?;
                        acc.add(g);
                    }
                }
            }
            adam.step(&mut store, &acc);
            touched_rel.clear();
            touched_ent.clear();
            for &(slot, row) in acc.touched() {
                if Some(slot) == rel_slot {
                    touched_rel.push(row);
                } else if Some(slot) == ent_slot {
                    touched_ent.push(row);
                }
            }
            if rel_slot.is_some() {
                store.project_constraints(Some(&touched_rel));
            }
            if cfg.normalize_entities {
                store.normalize_entities(&touched_ent);
            }
            acc.reset();
        }
        let cache_seconds = sampler.end_epoch(kg, &store, epoch);
        let validate = cfg.eval_every > 0
            && !kg.valid.is_empty()
            && ((local + 1) % cfg.eval_every == 0 || local + 1 == cfg.epochs);
        let mrr_valid = validate.then(|| eval::mrr(kg, &store, &kg.valid));
        if let Some(mrr) = mrr_valid {
            if best.as_ref().map_or(true, |b| mrr > b.mrr) {
                best = Some(BestCheckpoint {
                    epoch,
                    mrr,
                    store: store.clone(),
                });
            }
        }
        let record = EpochRecord {
            epoch,
            loss: loss_sum / count.max(1) as f64,
            grad_norm_mean: norm_sum / count.max(1) as f64,
            mrr_valid,
            seconds: start.elapsed().as_secs_f64(),
            cache_seconds,
        };
        observer(&EpochView {
            record: &record,
            store: &store,
            sampler: &sampler,
            kg,
        })?;
        log.push(record);
    }
    let (cache_seconds, refresh_passes) = sampler
        .cache
        .as_ref()
        .map_or((0.0, 0), |c| (c.maintenance_seconds, c.refresh_passes));
    Ok(TrainOutcome {
        store,
        best,
        log,
        cache_seconds,
        refresh_passes,
        pretrained: None,
    })
}

/// Mean pair loss of every train triplet against every head and tail
/// substitution outside the train set.
pub fn full_objective<S: CandidateScorer + ?Sized>(
    kg: &KnowledgeGraph,
    scorer: &S,
    loss: &Loss,
) -> f64 {
    let n = kg.entity_count();
    let (total, count) = kg
        .train
        .par_iter()
        .map_init(Vec::new, |buf, &t| {
            let ps = scorer.score_triplet(t);
            let mut sum = 0.0;
            let mut cnt = 0usize;
            for side in [Side::Head, Side::Tail] {
                scorer.score_side(side, t, n, buf);
                for (e, &ns) in buf.iter().enumerate() {
                    if !kg.in_train(&side.corrupt(t, e)) {
                        sum += loss.pair_loss(ps, ns);
                        cnt += 1;
                    }
                }
            }
            (sum, cnt)
        })
        .reduce(|| (0.0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    total / count.max(1) as f64
}

pub fn noop_observer() -> impl FnMut(&EpochView<'_>) -> Result<()> {
    |_| Ok(())
}
