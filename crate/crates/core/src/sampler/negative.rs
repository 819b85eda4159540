use rand::Rng;

use super::{rescale, sample_index, weighted_softmax, CandidateScorer, SamplerKind, Side};
use crate::data::{KnowledgeGraph, RelationStats, Triplet};

pub(crate) const MAX_RETRIES: usize = 100;

/// Head or tail: a fair coin for the uniform sampler, Bernoulli
/// `tph / (tph + hpt)` for every other kind.
pub fn choose_side<R: Rng + ?Sized>(
    kind: SamplerKind,
    stats: &RelationStats,
    relation: usize,
    rng: &mut R,
) -> Side {
    let p_head = match kind {
        SamplerKind::Uniform => 0.5,
        _ => stats.head_replace_prob[relation],
    };
    if rng.gen::<f64>() < p_head {
        Side::Head
    } else {
        Side::Tail
    }
}

/// Replace one side with a uniform entity, rejecting train triplets. After
/// the retry budget the last draw is accepted as is.
pub fn corrupt_uniform<R: Rng + ?Sized>(
    kg: &KnowledgeGraph,
    pos: Triplet,
    side: Side,
    rng: &mut R,
) -> Triplet {
    let n = kg.entity_count();
    let mut cand = side.corrupt(pos, rng.gen_range(0..n));
    for _ in 1..MAX_RETRIES {
        if !kg.in_train(&cand) {
            break;
        }
        cand = side.corrupt(pos, rng.gen_range(0..n));
    }
    cand
}

/// Up to `k` distinct entities whose substitution on `side` is not a train
/// triplet, rejection-sampled uniformly. Slots that exhaust the retry
/// budget are dropped. `exclude` entities are never returned.
pub(crate) fn distinct_candidates<R: Rng + ?Sized>(
    kg: &KnowledgeGraph,
    pos: Triplet,
    side: Side,
    k: usize,
    exclude: &[usize],
    rng: &mut R,
) -> Vec<usize> {
    let n = kg.entity_count();
    let mut out: Vec<usize> = Vec::with_capacity(k);
    for _ in 0..k {
        for _ in 0..MAX_RETRIES {
            let e = rng.gen_range(0..n);
            if exclude.contains(&e) || out.contains(&e) || kg.in_train(&side.corrupt(pos, e)) {
                continue;
            }
            out.push(e);
            break;
        }
    }
    out
}

/// Self-adversarial draw: `n1` distinct candidates scored by the current
/// model, picked with `softmax(rescale(scores), alpha2)`.
pub fn self_adversarial<S: CandidateScorer + ?Sized, R: Rng + ?Sized>(
    kg: &KnowledgeGraph,
    scorer: &S,
    pos: Triplet,
    side: Side,
    n1: usize,
    alpha2: f64,
    rng: &mut R,
) -> Triplet {
    let cands = distinct_candidates(kg, pos, side, n1, &[], rng);
    if cands.is_empty() {
        return corrupt_uniform(kg, pos, side, rng);
    }
    let scores: Vec<f64> = cands
        .iter()
        .map(|&e| scorer.score_triplet(side.corrupt(pos, e)))
        .collect();
    let probs = weighted_softmax(&rescale(&scores), alpha2);
    side.corrupt(pos, cands[sample_index(&probs, rng)])
}
