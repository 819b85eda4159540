//! Head and tail caches of high-scoring negative candidates.

use std::fmt::Write as _;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use rustc_hash::{FxHashMap, FxHashSet};

use super::negative::distinct_candidates;
use super::{rescale_into, sample_without_replacement, CandidateScorer, EEHyperParams, Side};
use crate::analysis::Welford;
use crate::data::{KnowledgeGraph, Triplet};
use crate::rng;

/// `(Head, relation, tail)` for a head cache, `(Tail, head, relation)` for a tail cache.
pub type CacheKey = (Side, usize, usize);

#[derive(Debug, Clone, PartialEq)]
pub struct CacheEntry {
    pub entity: usize,
    /// Model score at the last refresh.
    pub score: f64,
    /// What sampling and updating rank by: the score, plus `nu` times the
    /// running standard deviation when variance weighting is on.
    pub quality: f64,
    pub history: Welford,
}

#[derive(Debug, Clone, Default)]
struct Slot {
    entries: Vec<CacheEntry>,
    score_sum: f64,
}

pub struct NegativeCache {
    params: EEHyperParams,
    seed: u64,
    epoch: usize,
    head: FxHashMap<(usize, usize), Slot>,
    tail: FxHashMap<(usize, usize), Slot>,
    touched: FxHashSet<CacheKey>,
    /// Wall time spent creating and refreshing caches.
    pub maintenance_seconds: f64,
    /// Number of completed refresh passes.
    pub refresh_passes: usize,
}

pub fn key_of(side: Side, t: Triplet) -> CacheKey {
    match side {
        Side::Head => (Side::Head, t.relation, t.tail),
        Side::Tail => (Side::Tail, t.head, t.relation),
    }
}

fn triplet_of(key: CacheKey, e: usize) -> Triplet {
    match key {
        (Side::Head, r, t) => Triplet::new(e, r, t),
        (Side::Tail, h, r) => Triplet::new(h, r, e),
    }
}

impl NegativeCache {
    pub fn new(params: EEHyperParams, seed: u64) -> Self {
        NegativeCache {
            params,
            seed,
            epoch: 0,
            head: FxHashMap::default(),
            tail: FxHashMap::default(),
            touched: FxHashSet::default(),
            maintenance_seconds: 0.0,
            refresh_passes: 0,
        }
    }

    pub fn params(&self) -> &EEHyperParams {
        &self.params
    }

    pub fn epoch(&self) -> usize {
        self.epoch
    }

    pub fn set_epoch(&mut self, epoch: usize) {
        self.epoch = epoch;
    }

    fn map(&self, side: Side) -> &FxHashMap<(usize, usize), Slot> {
        match side {
            Side::Head => &self.head,
            Side::Tail => &self.tail,
        }
    }

    fn map_mut(&mut self, side: Side) -> &mut FxHashMap<(usize, usize), Slot> {
        match side {
            Side::Head => &mut self.head,
            Side::Tail => &mut self.tail,
        }
    }

    pub fn len(&self) -> usize {
        self.head.len() + self.tail.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, side: Side, pos: Triplet) -> bool {
        let k = key_of(side, pos);
        self.map(side).contains_key(&(k.1, k.2))
    }

    /// Entries of the cache `pos` would draw from on `side`.
    pub fn entries(&self, side: Side, pos: Triplet) -> &[CacheEntry] {
        let k = key_of(side, pos);
        self.map(side)
            .get(&(k.1, k.2))
            .map(|s| s.entries.as_slice())
            .unwrap_or(&[])
    }

    /// Mark both caches of `pos` as used this epoch, creating missing ones
    /// with a forced update.
    pub fn touch<S: CandidateScorer + ?Sized>(
        &mut self,
        kg: &KnowledgeGraph,
        scorer: &S,
        pos: Triplet,
    ) {
        for side in [Side::Head, Side::Tail] {
            let key = key_of(side, pos);
            if !self.map(side).contains_key(&(key.1, key.2)) {
                let start = Instant::now();
                let mut r = rng::stream(
                    self.seed,
                    &[
                        0xC4EA7E,
                        self.epoch as u64,
                        side as u64,
                        key.1 as u64,
                        key.2 as u64,
                    ],
                );
                let slot = build_slot(&self.params, kg, scorer, key, &[], &mut r);
                self.map_mut(side).insert((key.1, key.2), slot);
                self.maintenance_seconds += start.elapsed().as_secs_f64();
            }
            self.touched.insert(key);
        }
    }

    /// One update of the `side` cache of `pos` with the caller's RNG.
    pub fn update<S: CandidateScorer + ?Sized, R: Rng + ?Sized>(
        &mut self,
        kg: &KnowledgeGraph,
        scorer: &S,
        side: Side,
        pos: Triplet,
        rng: &mut R,
    ) {
        let key = key_of(side, pos);
        let old = self
            .map(side)
            .get(&(key.1, key.2))
            .map(|s| s.entries.clone())
            .unwrap_or_default();
        let slot = build_slot(&self.params, kg, scorer, key, &old, rng);
        self.map_mut(side).insert((key.1, key.2), slot);
    }

    /// Replace the `side` cache of `pos` wholesale.
    pub fn insert_entries(&mut self, side: Side, pos: Triplet, entries: Vec<CacheEntry>) {
        let key = key_of(side, pos);
        let score_sum = entries.iter().map(|e| e.score).sum();
        self.map_mut(side)
            .insert((key.1, key.2), Slot { entries, score_sum });
    }

    /// Refresh every cache touched since the last pass. Each key draws from
    /// its own RNG stream, so the result does not depend on thread count.
    /// Returns the seconds spent.
    pub fn refresh_touched<S: CandidateScorer + ?Sized>(
        &mut self,
        kg: &KnowledgeGraph,
        scorer: &S,
        epoch: usize,
    ) -> f64 {
        let start = Instant::now();
        let mut keys: Vec<CacheKey> = self.touched.drain().collect();
        keys.sort_unstable();
        let params = self.params;
        let seed = self.seed;
        let (head, tail) = (&self.head, &self.tail);
        let fresh: Vec<(CacheKey, Slot)> = keys
            .par_iter()
            .map(|&key| {
                let map = match key.0 {
                    Side::Head => head,
                    Side::Tail => tail,
                };
                let old = map
                    .get(&(key.1, key.2))
                    .map(|s| s.entries.as_slice())
                    .unwrap_or(&[]);
                let mut r = rng::stream(
                    seed,
                    &[
                        0xCAC4E,
                        epoch as u64,
                        key.0 as u64,
                        key.1 as u64,
                        key.2 as u64,
                    ],
                );
                (key, build_slot(&params, kg, scorer, key, old, &mut r))
            })
            .collect();
        for (key, slot) in fresh {
            self.map_mut(key.0).insert((key.1, key.2), slot);
        }
        self.epoch = epoch + 1;
        self.refresh_passes += 1;
        let secs = start.elapsed().as_secs_f64();
        self.maintenance_seconds += secs;
        secs
    }

    /// Positive weights: for every train triplet, the sum of the stored
    /// scores in its head and tail caches (0 for caches not yet built).
    pub fn positive_weights(&self, kg: &KnowledgeGraph) -> Vec<f64> {
        kg.train
            .iter()
            .map(|t| {
                let h = self
                    .head
                    .get(&(t.relation, t.tail))
                    .map_or(0.0, |s| s.score_sum);
                let tl = self
                    .tail
                    .get(&(t.head, t.relation))
                    .map_or(0.0, |s| s.score_sum);
                h + tl
            })
            .collect()
    }

    /// Text dump, one `key<TAB>entity_name<TAB>score` line per entry, keys sorted.
    pub fn snapshot(&self, kg: &KnowledgeGraph) -> String {
        let mut keys: Vec<CacheKey> = self
            .head
            .keys()
            .map(|&(r, t)| (Side::Head, r, t))
            .chain(self.tail.keys().map(|&(h, r)| (Side::Tail, h, r)))
            .collect();
        keys.sort_unstable();
        let mut out = String::new();
        for key in keys {
            let label = match key {
                (Side::Head, r, t) => {
                    format!("(?, {}, {})", kg.relations.name(r), kg.entities.name(t))
                }
                (Side::Tail, h, r) => {
                    format!("({}, {}, ?)", kg.entities.name(h), kg.relations.name(r))
                }
            };
            for e in &self.map(key.0)[&(key.1, key.2)].entries {
                let _ = writeln!(out, "{label}\t{}\t{}", kg.entities.name(e.entity), e.score);
            }
        }
        out
    }
}

fn quality(score: f64, history: &Welford, nu: f64) -> f64 {
    if nu == 0.0 {
        score
    } else {
        score + nu * history.std().unwrap_or(0.0)
    }
}

/// Score the old cache together with fresh candidates and keep `n1` of them,
/// drawn without replacement from `softmax(rescale(quality), alpha3)`.
fn build_slot<S: CandidateScorer + ?Sized, R: Rng + ?Sized>(
    params: &EEHyperParams,
    kg: &KnowledgeGraph,
    scorer: &S,
    key: CacheKey,
    old: &[CacheEntry],
    rng: &mut R,
) -> Slot {
    let base = triplet_of(key, 0);
    let old_ids: Vec<usize> = old.iter().map(|e| e.entity).collect();
    let fresh = distinct_candidates(kg, base, key.0, params.n2, &old_ids, rng);
    let mut union: Vec<CacheEntry> = Vec::with_capacity(old.len() + fresh.len());
    for e in old {
        let mut history = e.history.clone();
        let s = scorer.score_triplet(triplet_of(key, e.entity));
        history.push(s);
        union.push(CacheEntry {
            entity: e.entity,
            score: s,
            quality: quality(s, &history, params.nu),
            history,
        });
    }
    for e in fresh {
        let mut history = Welford::default();
        let s = scorer.score_triplet(triplet_of(key, e));
        history.push(s);
        union.push(CacheEntry {
            entity: e,
            score: s,
            quality: s,
            history,
        });
    }
    let q: Vec<f64> = union.iter().map(|e| e.quality).collect();
    let mut r = Vec::with_capacity(q.len());
    rescale_into(&q, &mut r, &mut Vec::with_capacity(q.len()));
    let keep = sample_without_replacement(&r, params.alpha3, params.n1, rng);
    let entries: Vec<CacheEntry> = keep.into_iter().map(|i| union[i].clone()).collect();
    let score_sum = entries.iter().map(|e| e.score).sum();
    Slot { entries, score_sum }
}
