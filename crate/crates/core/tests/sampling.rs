//! Sampling distributions against closed forms and brute-force enumeration.

use kgcache::analysis::Welford;
use kgcache::data::{from_named_train, relation_stats, KnowledgeGraph, Triplet, Vocab};
use kgcache::sampler::{
    rescale, weighted_softmax, CacheEntry, CandidateScorer, EEHyperParams, NegativeCache,
    PositiveSampler, Sampler, SamplerKind, Side,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// 99% chi-square critical values by degrees of freedom.
fn chi2_99(df: usize) -> f64 {
    [
        0.0, 6.635, 9.210, 11.345, 13.277, 15.086, 16.812, 18.475, 20.090, 21.666,
    ][df]
}

fn chi2(counts: &[u64], probs: &[f64]) -> f64 {
    let n: u64 = counts.iter().sum();
    counts
        .iter()
        .zip(probs)
        .map(|(&c, &p)| {
            let e = p * n as f64;
            (c as f64 - e).powi(2) / e
        })
        .sum()
}

struct EntityScores(Vec<f64>);

impl CandidateScorer for EntityScores {
    fn score_triplet(&self, t: Triplet) -> f64 {
        self.0[t.tail] + 0.5 * self.0[t.head]
    }
}

fn six_entity_kg() -> KnowledgeGraph {
    let entities = Vocab::from_names((0..6).map(|i| format!("e{i}")));
    let relations = Vocab::from_names(["r0".to_string(), "r1".to_string()]);
    let train = vec![
        Triplet::new(0, 0, 1),
        Triplet::new(0, 0, 2),
        Triplet::new(3, 0, 2),
        Triplet::new(4, 1, 5),
        Triplet::new(1, 1, 3),
    ];
    KnowledgeGraph::from_splits(
        entities,
        relations,
        train,
        vec![Triplet::new(2, 1, 4)],
        vec![],
    )
    .unwrap()
}

fn entry(entity: usize, score: f64) -> CacheEntry {
    let mut history = Welford::default();
    history.push(score);
    CacheEntry {
        entity,
        score,
        quality: score,
        history,
    }
}

#[test]
fn positive_sampling_uniform_when_alpha1_zero() {
    let ps = PositiveSampler::new(&[5.0, 1.0, 0.0, 3.0, 2.0, 9.0, 4.0, 4.0, 7.0, 8.0], 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut counts = [0u64; 10];
    for _ in 0..1_000_000 {
        counts[ps.sample(&mut rng)] += 1;
    }
    assert!(chi2(&counts, &[0.1; 10]) < chi2_99(9));
}

#[test]
fn positive_sampling_follows_softmax_of_rescaled_weights() {
    let ps = PositiveSampler::new(&[0.0, 0.5, 1.0], 1.0);
    let z: f64 = [0.0f64, 0.5, 1.0].iter().map(|x| x.exp()).sum();
    let expect = [1.0 / z, 0.5f64.exp() / z, 1f64.exp() / z];
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut counts = [0u64; 3];
    let n = 1_000_000;
    for _ in 0..n {
        counts[ps.sample(&mut rng)] += 1;
    }
    for i in 0..3 {
        assert!((counts[i] as f64 / n as f64 - expect[i]).abs() < 0.01);
    }
    let greedy = PositiveSampler::new(&[0.2, 3.0, 1.0, 2.0], 1e9);
    assert!((0..10_000).all(|_| greedy.sample(&mut rng) == 1));
}

#[test]
fn bernoulli_side_frequency_matches_tph_hpt() {
    let kg = from_named_train(&[
        ("a", "r", "b"),
        ("a", "r", "c"),
        ("a", "r", "d"),
        ("x", "s", "y"),
    ])
    .unwrap();
    let mut s = Sampler::new(SamplerKind::Bernoulli, EEHyperParams::default(), &kg, 1).unwrap();
    let scorer = EntityScores(vec![0.0; kg.entity_count()]);
    let pos = kg.train[0];
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 1_000_000;
    let mut head = 0;
    for _ in 0..n {
        let neg = s.sample_negative(&kg, &scorer, pos, &mut rng);
        if neg.head != pos.head {
            head += 1;
        }
    }
    let f = head as f64 / n as f64;
    assert!((f - 0.75).abs() < 0.005, "head frequency {f}");
}

#[test]
fn negatives_never_in_train() {
    let kg = six_entity_kg();
    let scorer = EntityScores(vec![0.1, 2.0, 0.7, 1.3, 0.2, 0.9]);
    for kind in [
        SamplerKind::Bernoulli,
        SamplerKind::SelfAdversarial,
        SamplerKind::NSCaching,
    ] {
        let params = EEHyperParams {
            n1: 2,
            n2: 2,
            alpha2: 1.0,
            ..Default::default()
        };
        let mut s = Sampler::new(kind, params, &kg, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for i in 0..1_000_000usize {
            let pos = kg.train[i % kg.train.len()];
            let neg = s.sample_negative(&kg, &scorer, pos, &mut rng);
            assert!(!kg.in_train(&neg), "{kind}: {neg:?}");
            if i % 1000 == 999 {
                s.end_epoch(&kg, &scorer, i / 1000);
            }
        }
    }
}

#[test]
fn valid_triplets_may_enter_the_cache() {
    // (2, r1, 4) lives in valid; the tail cache of (2, r1) may hold entity 4
    let kg = six_entity_kg();
    let scorer = EntityScores(vec![0.0, 0.0, 0.0, 0.0, 10.0, 0.0]);
    let mut c = NegativeCache::new(
        EEHyperParams {
            n1: 1,
            n2: 5,
            alpha3: 1e6,
            ..Default::default()
        },
        1,
    );
    let pos = Triplet::new(2, 1, 0);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    c.update(&kg, &scorer, Side::Tail, pos, &mut rng);
    assert_eq!(c.entries(Side::Tail, pos)[0].entity, 4);
    assert!(kg.is_true(&Triplet::new(2, 1, 4)));
}

#[test]
fn cache_draw_uniform_when_alpha2_zero() {
    let kg = six_entity_kg();
    let scorer = EntityScores(vec![0.0; 6]);
    let mut s = Sampler::new(SamplerKind::NSCaching, EEHyperParams::default(), &kg, 5).unwrap();
    let pos = Triplet::new(0, 0, 1);
    s.cache.as_mut().unwrap().touch(&kg, &scorer, pos);
    let cache = s.cache.as_mut().unwrap();
    cache.insert_entries(
        Side::Tail,
        pos,
        vec![entry(3, 0.1), entry(4, 7.0), entry(5, 2.0)],
    );
    cache.insert_entries(Side::Head, pos, vec![entry(2, 0.0), entry(4, 3.0)]);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut tail_counts = [0u64; 6];
    for _ in 0..300_000 {
        let neg = s.sample_negative(&kg, &scorer, pos, &mut rng);
        if neg.head == pos.head {
            tail_counts[neg.tail] += 1;
        }
    }
    let c = [tail_counts[3], tail_counts[4], tail_counts[5]];
    assert!(chi2(&c, &[1.0 / 3.0; 3]) < chi2_99(2));
}

#[test]
fn update_inclusion_uniform_when_alpha3_zero() {
    let kg = six_entity_kg();
    let scorer = EntityScores(vec![0.4, 0.1, 3.0, 2.0, 1.0, 5.0]);
    let pos = Triplet::new(0, 0, 1);
    // non-train tails of (0, r0, ?): {0, 3, 4, 5}
    let cands = [0usize, 3, 4, 5];
    let n1 = 2;
    let mut c = NegativeCache::new(
        EEHyperParams {
            n1,
            n2: 10,
            alpha3: 0.0,
            ..Default::default()
        },
        1,
    );
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let trials = 100_000;
    let mut counts = [0u64; 6];
    for _ in 0..trials {
        c.update(&kg, &scorer, Side::Tail, pos, &mut rng);
        for e in c.entries(Side::Tail, pos) {
            counts[e.entity] += 1;
        }
    }
    for &e in &cands {
        let f = counts[e] as f64 / trials as f64;
        assert!(
            (f - n1 as f64 / cands.len() as f64).abs() < 0.01,
            "entity {e}: {f}"
        );
    }
}

#[test]
fn update_keeps_top_scores_when_alpha3_huge() {
    let kg = six_entity_kg();
    let scorer = EntityScores(vec![0.4, 0.1, 3.0, 2.0, 1.0, 5.0]);
    let pos = Triplet::new(0, 0, 1);
    let mut c = NegativeCache::new(
        EEHyperParams {
            n1: 2,
            n2: 10,
            alpha3: f64::INFINITY,
            ..Default::default()
        },
        1,
    );
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..100 {
        c.update(&kg, &scorer, Side::Tail, pos, &mut rng);
        let mut got: Vec<usize> = c
            .entries(Side::Tail, pos)
            .iter()
            .map(|e| e.entity)
            .collect();
        got.sort();
        assert_eq!(got, vec![3, 5]);
    }
}

/// Inclusion probability of every union member after `k` sequential draws,
/// each from `softmax(alpha * r)` renormalized over the items not yet taken.
fn sequential_inclusion(r: &[f64], alpha: f64, k: usize) -> Vec<f64> {
    fn walk(r: &[f64], alpha: f64, taken: &mut Vec<usize>, k: usize, weight: f64, out: &mut [f64]) {
        if taken.len() == k || taken.len() == r.len() {
            for &i in taken.iter() {
                out[i] += weight;
            }
            return;
        }
        let rest: Vec<usize> = (0..r.len()).filter(|i| !taken.contains(i)).collect();
        let vals: Vec<f64> = rest.iter().map(|&i| r[i]).collect();
        let p = weighted_softmax(&vals, alpha);
        for (j, &i) in rest.iter().enumerate() {
            if p[j] == 0.0 {
                continue;
            }
            taken.push(i);
            walk(r, alpha, taken, k, weight * p[j], out);
            taken.pop();
        }
    }
    let mut out = vec![0.0; r.len()];
    walk(r, alpha, &mut Vec::new(), k, 1.0, &mut out);
    out
}

#[test]
fn update_matches_sequential_tree_enumeration() {
    let kg = six_entity_kg();
    let scores = vec![0.4, 0.1, 3.0, 2.0, 1.0, 5.0];
    let scorer = EntityScores(scores.clone());
    let pos = Triplet::new(0, 0, 1);
    // tail candidates of (0, r0, ?) are {0, 3, 4, 5}; the old cache holds {3, 4}
    // and two fresh draws must then be {0, 5}.
    let old = [3usize, 4];
    let fresh_pool = [0usize, 5];
    for alpha3 in [0.0, 1.0, 1e6] {
        let mut oracle = [0.0f64; 6];
        let union: Vec<usize> = old.iter().chain(&fresh_pool).copied().collect();
        let s: Vec<f64> = union
            .iter()
            .map(|&e| scorer.score_triplet(pos.with_tail(e)))
            .collect();
        let inc = sequential_inclusion(&rescale(&s), alpha3, 2);
        for (j, &e) in union.iter().enumerate() {
            oracle[e] += inc[j];
        }
        let mut c = NegativeCache::new(
            EEHyperParams {
                n1: 2,
                n2: 2,
                alpha3,
                ..Default::default()
            },
            1,
        );
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let trials = 100_000;
        let mut counts = [0u64; 6];
        for _ in 0..trials {
            c.insert_entries(
                Side::Tail,
                pos,
                old.iter().map(|&e| entry(e, scores[e])).collect(),
            );
            c.update(&kg, &scorer, Side::Tail, pos, &mut rng);
            for e in c.entries(Side::Tail, pos) {
                counts[e.entity] += 1;
            }
        }
        for e in 0..6 {
            let f = counts[e] as f64 / trials as f64;
            assert!(
                (f - oracle[e]).abs() < 0.01,
                "alpha3={alpha3} entity {e}: {f} vs {}",
                oracle[e]
            );
        }
    }
}

fn joint_tv(a: &[u64], b: &[u64]) -> f64 {
    let (na, nb) = (a.iter().sum::<u64>() as f64, b.iter().sum::<u64>() as f64);
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x as f64 / na - y as f64 / nb).abs())
        .sum::<f64>()
        / 2.0
}

/// Joint (side, entity) cell of a negative: heads first, then tails.
fn cell(pos: Triplet, neg: Triplet, e: usize) -> usize {
    if neg.head != pos.head {
        neg.head
    } else {
        e + neg.tail
    }
}

#[test]
fn zero_temperature_cache_reduces_to_bernoulli() {
    let kg = six_entity_kg();
    let scorer = EntityScores(vec![0.4, 0.1, 3.0, 2.0, 1.0, 5.0]);
    let zero = EEHyperParams {
        alpha1: 0.0,
        alpha2: 0.0,
        alpha3: 0.0,
        n1: 2,
        n2: 2,
        ..Default::default()
    };
    let mut cache = Sampler::new(SamplerKind::NSCaching, zero, &kg, 10).unwrap();
    let mut bern = Sampler::new(SamplerKind::Bernoulli, zero, &kg, 10).unwrap();
    let pos = kg.train[0];
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (mut a, mut b) = (vec![0u64; 12], vec![0u64; 12]);
    for epoch in 0..10_000 {
        for _ in 0..100 {
            a[cell(pos, cache.sample_negative(&kg, &scorer, pos, &mut rng), 6)] += 1;
            b[cell(pos, bern.sample_negative(&kg, &scorer, pos, &mut rng), 6)] += 1;
        }
        cache.end_epoch(&kg, &scorer, epoch);
    }
    let tv = joint_tv(&a, &b);
    assert!(tv < 0.02, "tv {tv}");
}

/// Self-adversarial sampling written directly from its definition.
fn direct_self_adversarial(
    kg: &KnowledgeGraph,
    scorer: &EntityScores,
    pos: Triplet,
    side: Side,
    n1: usize,
    alpha2: f64,
    rng: &mut ChaCha8Rng,
) -> Triplet {
    use rand::seq::SliceRandom;
    let mut pool: Vec<usize> = (0..kg.entity_count())
        .filter(|&e| !kg.in_train(&side.corrupt(pos, e)))
        .collect();
    pool.shuffle(rng);
    pool.truncate(n1);
    let s: Vec<f64> = pool
        .iter()
        .map(|&e| scorer.score_triplet(side.corrupt(pos, e)))
        .collect();
    let p = weighted_softmax(&rescale(&s), alpha2);
    let u: f64 = rand::Rng::gen(rng);
    let mut acc = 0.0;
    for (i, &pi) in p.iter().enumerate() {
        acc += pi;
        if u < acc {
            return side.corrupt(pos, pool[i]);
        }
    }
    side.corrupt(pos, *pool.last().unwrap())
}

#[test]
fn zero_update_temperature_matches_self_adversarial() {
    let kg = six_entity_kg();
    let scorer = EntityScores(vec![0.4, 0.1, 3.0, 2.0, 1.0, 5.0]);
    let stats = relation_stats(&kg);
    let params = EEHyperParams {
        alpha2: 2.0,
        alpha3: 0.0,
        n1: 2,
        n2: 6,
        ..Default::default()
    };
    let mut cache = Sampler::new(SamplerKind::NSCaching, params, &kg, 12).unwrap();
    let mut lib = Sampler::new(SamplerKind::SelfAdversarial, params, &kg, 12).unwrap();
    let pos = kg.train[0];
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let (mut a, mut b, mut d) = (vec![0u64; 12], vec![0u64; 12], vec![0u64; 12]);
    for epoch in 0..10_000 {
        for _ in 0..100 {
            a[cell(pos, cache.sample_negative(&kg, &scorer, pos, &mut rng), 6)] += 1;
            b[cell(pos, lib.sample_negative(&kg, &scorer, pos, &mut rng), 6)] += 1;
            let side = if rand::Rng::gen::<f64>(&mut rng) < stats.head_replace_prob[pos.relation] {
                Side::Head
            } else {
                Side::Tail
            };
            d[cell(
                pos,
                direct_self_adversarial(&kg, &scorer, pos, side, 2, 2.0, &mut rng),
                6,
            )] += 1;
        }
        cache.end_epoch(&kg, &scorer, epoch);
    }
    assert!(
        joint_tv(&a, &d) < 0.02,
        "cache vs direct {}",
        joint_tv(&a, &d)
    );
    assert!(
        joint_tv(&b, &d) < 0.02,
        "library vs direct {}",
        joint_tv(&b, &d)
    );
}
