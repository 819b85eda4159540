use kgcache::sampler::{EEHyperParams, SamplerKind};
use kgcache::skipgram::{
    classify_nodes, generate_walks, pair_loss_grad, train_skipgram, transition_probs, Graph,
    NodeCache, WalkConfig,
};
use proptest::prelude::*;
use rand::Rng;

fn walk_cfg(walks: usize, len: usize, p: f64, q: f64) -> WalkConfig {
    WalkConfig {
        walks_per_node: walks,
        walk_length: len,
        p,
        q,
        ..Default::default()
    }
}

#[test]
fn unbiased_first_step_on_a_path() {
    // a=0, b=1, c=2
    let g = Graph::from_edges(3, &[(0, 1), (1, 2)]);
    let walks = generate_walks(&g, &walk_cfg(100_000, 2, 1.0, 1.0), 7);
    let from_b: Vec<_> = walks.iter().filter(|w| w[0] == 1).collect();
    assert_eq!(from_b.len(), 100_000);
    let to_a = from_b.iter().filter(|w| w[1] == 0).count() as f64 / 1e5;
    assert!((to_a - 0.5).abs() < 0.01, "{to_a}");
}

#[test]
fn biased_step_on_a_triangle_matches_hand_weights() {
    let (p, q) = (0.25, 0.25);
    let g = Graph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]);
    // at (prev=a, cur=b): back to a weighs 1/p, c is a common neighbour and weighs 1
    let hand = [(1.0 / p) / (1.0 / p + 1.0), 1.0 / (1.0 / p + 1.0)];
    let probs = transition_probs(&g, 0, 1, p, q);
    assert!((probs[0] - hand[0]).abs() < 1e-12 && (probs[1] - hand[1]).abs() < 1e-12);
    let walks = generate_walks(&g, &walk_cfg(200_000, 3, p, q), 3);
    let steps: Vec<usize> = walks
        .iter()
        .filter(|w| w[0] == 0 && w[1] == 1)
        .map(|w| w[2])
        .collect();
    assert!(steps.len() > 90_000);
    let back = steps.iter().filter(|&&x| x == 0).count() as f64 / steps.len() as f64;
    assert!((back - hand[0]).abs() < 0.01, "{back} vs {}", hand[0]);
}

#[test]
fn corpus_has_r_walks_per_node() {
    let g = Graph::from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4)]);
    let w = generate_walks(&g, &walk_cfg(7, 5, 0.5, 2.0), 1);
    assert_eq!(w.len(), 35);
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

#[test]
fn pair_gradient_matches_finite_differences() {
    let mut r = kgcache::rng::stream(5, &[]);
    let d = 6;
    for _ in 0..20 {
        let mut rv = |_: usize| -> Vec<f64> { (0..d).map(|_| r.gen_range(-1.0..1.0)).collect() };
        let u = rv(0);
        let v = rv(0);
        let negs: Vec<Vec<f64>> = (0..3).map(&mut rv).collect();
        let nref: Vec<&[f64]> = negs.iter().map(|x| x.as_slice()).collect();
        let (mut gu, mut gv) = (vec![0.0; d], vec![0.0; d]);
        let mut gn = vec![vec![0.0; d]; 3];
        pair_loss_grad(&u, &v, &nref, &mut gu, &mut gv, &mut gn);
        let loss = |u: &[f64], v: &[f64], n: &[Vec<f64>]| {
            let nr: Vec<&[f64]> = n.iter().map(|x| x.as_slice()).collect();
            let (mut a, mut b) = (vec![0.0; d], vec![0.0; d]);
            let mut c = vec![vec![0.0; d]; 3];
            pair_loss_grad(u, v, &nr, &mut a, &mut b, &mut c)
        };
        let h = 1e-6;
        for i in 0..d {
            let (mut up, mut um) = (u.clone(), u.clone());
            up[i] += h;
            um[i] -= h;
            let fd = (loss(&up, &v, &negs) - loss(&um, &v, &negs)) / (2.0 * h);
            assert!(rel_err(fd, gu[i]) < 1e-4 || (fd - gu[i]).abs() < 1e-9);
            let (mut vp, mut vm) = (v.clone(), v.clone());
            vp[i] += h;
            vm[i] -= h;
            let fd = (loss(&u, &vp, &negs) - loss(&u, &vm, &negs)) / (2.0 * h);
            assert!(rel_err(fd, gv[i]) < 1e-4 || (fd - gv[i]).abs() < 1e-9);
            let (mut np, mut nm) = (negs.clone(), negs.clone());
            np[1][i] += h;
            nm[1][i] -= h;
            let fd = (loss(&u, &v, &np) - loss(&u, &v, &nm)) / (2.0 * h);
            assert!(rel_err(fd, gn[1][i]) < 1e-4 || (fd - gn[1][i]).abs() < 1e-9);
        }
    }
}

fn ring_with_chords(n: usize) -> Graph {
    let mut e: Vec<(usize, usize)> = (0..n).map(|i| (i, (i + 1) % n)).collect();
    e.extend((0..n).step_by(5).map(|i| (i, (i + n / 2) % n)));
    Graph::from_edges(n, &e)
}

fn small_cfg() -> WalkConfig {
    WalkConfig {
        walks_per_node: 4,
        walk_length: 10,
        window: 2,
        dim: 16,
        epochs: 8,
        lr: 0.01,
        batch_size: 64,
        negatives: 5,
        ..Default::default()
    }
}

#[test]
fn loss_decreases_on_a_fixed_corpus() {
    let g = ring_with_chords(50);
    let cfg = small_cfg();
    let corpus = generate_walks(&g, &cfg, 2);
    let e = train_skipgram(
        50,
        &corpus,
        &cfg,
        SamplerKind::NSCaching,
        &EEHyperParams::default(),
        2,
    )
    .unwrap();
    assert!(e.losses.last().unwrap() < &e.losses[0], "{:?}", e.losses);
}

#[test]
fn zero_temperature_cache_matches_uniform_negatives() {
    let g = ring_with_chords(50);
    let cfg = small_cfg();
    let corpus = generate_walks(&g, &cfg, 1);
    let ee = EEHyperParams {
        alpha2: 0.0,
        alpha3: 0.0,
        ..Default::default()
    };
    let seeds = 12;
    let runs = |mode| -> Vec<Vec<f64>> {
        (0..seeds)
            .map(|s| {
                train_skipgram(50, &corpus, &cfg, mode, &ee, 100 + s)
                    .unwrap()
                    .losses
            })
            .collect()
    };
    let cached = runs(SamplerKind::NSCaching);
    let uniform = runs(SamplerKind::Uniform);
    let band = |runs: &[Vec<f64>], e: usize| {
        let xs: Vec<f64> = runs.iter().map(|r| r[e]).collect();
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let sd = (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0)).sqrt();
        (m - 1.96 * sd / n.sqrt(), m + 1.96 * sd / n.sqrt())
    };
    for e in 0..cfg.epochs {
        let (a, b) = (band(&cached, e), band(&uniform, e));
        assert!(
            a.0 <= b.1 && b.0 <= a.1,
            "epoch {e}: cached {a:?} uniform {b:?}"
        );
    }
}

#[test]
fn random_embeddings_classify_at_chance() {
    let mut r = kgcache::rng::stream(8, &[]);
    let k = 4;
    let emb: Vec<Vec<f64>> = (0..2000)
        .map(|_| (0..16).map(|_| r.gen_range(-1.0..1.0)).collect())
        .collect();
    let lab: Vec<Option<usize>> = (0..2000).map(|i| Some(i % k)).collect();
    let rep = classify_nodes(&emb, &lab, k, 0.5, 4, 5).unwrap();
    assert!((rep.micro_mean - 0.25).abs() < 0.05, "{}", rep.micro_mean);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn walks_follow_edges_and_probabilities_normalize(
        edges in prop::collection::vec((0usize..12, 0usize..12), 1..40),
        p in 0.1f64..4.0,
        q in 0.1f64..4.0,
        seed in any::<u64>(),
    ) {
        let g = Graph::from_edges(12, &edges);
        for a in 0..12 {
            prop_assert!(!g.adj[a].contains(&a));
            for &b in &g.adj[a] {
                prop_assert!(g.is_edge(b, a));
                let s: f64 = transition_probs(&g, a, b, p, q).iter().sum();
                prop_assert!((s - 1.0).abs() < 1e-9);
            }
        }
        let walks = generate_walks(&g, &walk_cfg(2, 6, p, q), seed);
        for w in &walks {
            prop_assert!(w.iter().all(|&x| x < 12));
            prop_assert!(w.windows(2).all(|s| g.is_edge(s[0], s[1])));
        }
    }

    #[test]
    fn node_caches_never_hold_the_center(seed in any::<u64>(), n1 in 1usize..8, n2 in 1usize..8) {
        let g = ring_with_chords(20);
        let cfg = WalkConfig { walks_per_node: 1, walk_length: 6, window: 1, ..Default::default() };
        let corpus = generate_walks(&g, &cfg, seed);
        let params = EEHyperParams { n1, n2, alpha3: 1.0, ..Default::default() };
        let mut c = NodeCache::new(20, &corpus, 1, params, seed);
        let m = kgcache::scoring::Matrix::<f32>::zeros(20, 3);
        c.refresh(&(0..20).collect::<Vec<_>>(), &m, &m, 0);
        for u in 0..20 {
            let mut seen = std::collections::HashSet::new();
            for &(x, _) in &c.entries[u] {
                prop_assert!(x != u);
                prop_assert!(!c.is_excluded(u, x));
                prop_assert!(seen.insert(x));
            }
            prop_assert!(c.entries[u].len() <= n1);
        }
    }
}
