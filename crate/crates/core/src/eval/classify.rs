use rand::Rng;

use crate::data::{KnowledgeGraph, RelationStats, Triplet};
use crate::rng;
use crate::sampler::{CandidateScorer, Side};

/// Labeled triplets: each positive is followed by one corrupted negative.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationSet {
    pub triplets: Vec<Triplet>,
    pub labels: Vec<bool>,
}

/// Pair every positive with a Bernoulli-side corruption outside the true
/// set. Depends only on `seed`, so every model is judged on the same set.
pub fn classification_set(
    kg: &KnowledgeGraph,
    positives: &[Triplet],
    stats: &RelationStats,
    seed: u64,
) -> ClassificationSet {
    let mut r = rng::stream(seed, &[0xC1A55]);
    let n = kg.entity_count();
    let mut out = ClassificationSet {
        triplets: Vec::with_capacity(2 * positives.len()),
        labels: Vec::with_capacity(2 * positives.len()),
    };
    for &p in positives {
        let side = if r.gen::<f64>() < stats.head_replace_prob[p.relation] {
            Side::Head
        } else {
            Side::Tail
        };
        let mut neg = side.corrupt(p, r.gen_range(0..n));
        for _ in 1..100 {
            if !kg.is_true(&neg) {
                break;
            }
            neg = side.corrupt(p, r.gen_range(0..n));
        }
        out.triplets.push(p);
        out.labels.push(true);
        out.triplets.push(neg);
        out.labels.push(false);
    }
    out
}

/// Per-relation score thresholds: predict positive when `score >= threshold`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationModel {
    pub per_relation: Vec<Option<f64>>,
    pub global: f64,
}

impl ClassificationModel {
    pub fn threshold(&self, relation: usize) -> f64 {
        self.per_relation
            .get(relation)
            .copied()
            .flatten()
            .unwrap_or(self.global)
    }
}

/// The accuracy-maximizing cut among midpoints of consecutive distinct
/// scores, plus one cut below and one above every score.
fn best_cut(scored: &mut [(f64, bool)]) -> f64 {
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total_pos = scored.iter().filter(|x| x.1).count();
    // cut below everything: all predicted positive
    let mut best = (total_pos, scored[0].0 - 1.0);
    let mut neg_below = 0usize;
    let mut pos_below = 0usize;
    let mut i = 0;
    while i < scored.len() {
        let v = scored[i].0;
        while i < scored.len() && scored[i].0 == v {
            if scored[i].1 {
                pos_below += 1;
            } else {
                neg_below += 1;
            }
            i += 1;
        }
        let correct = neg_below + (total_pos - pos_below);
        let cut = if i < scored.len() {
            (v + scored[i].0) / 2.0
        } else {
            v + 1.0
        };
        if correct > best.0 {
            best = (correct, cut);
        }
    }
    best.1
}

pub fn fit_thresholds<S: CandidateScorer + ?Sized>(
    set: &ClassificationSet,
    scorer: &S,
    relation_count: usize,
) -> ClassificationModel {
    let mut by_rel: Vec<Vec<(f64, bool)>> = vec![Vec::new(); relation_count];
    let mut all = Vec::with_capacity(set.triplets.len());
    for (t, &l) in set.triplets.iter().zip(&set.labels) {
        let s = scorer.score_triplet(*t);
        by_rel[t.relation].push((s, l));
        all.push((s, l));
    }
    let global = if all.is_empty() {
        0.0
    } else {
        best_cut(&mut all)
    };
    ClassificationModel {
        per_relation: by_rel
            .into_iter()
            .map(|mut v| (!v.is_empty()).then(|| best_cut(&mut v)))
            .collect(),
        global,
    }
}

pub fn accuracy<S: CandidateScorer + ?Sized>(
    model: &ClassificationModel,
    set: &ClassificationSet,
    scorer: &S,
) -> f64 {
    if set.triplets.is_empty() {
        return 0.0;
    }
    let correct = set
        .triplets
        .iter()
        .zip(&set.labels)
        .filter(|(t, &l)| (scorer.score_triplet(**t) >= model.threshold(t.relation)) == l)
        .count();
    correct as f64 / set.triplets.len() as f64
}
