use kgcache::automl::{
    random_search, smbo_search, SearchOptions, SearchResult, SearchSpace, TrialOutcome,
    TrialParams, TrialRecord,
};
use kgcache::Result;

fn quad(_: usize, p: &TrialParams) -> std::result::Result<TrialOutcome, String> {
    Ok(TrialOutcome {
        objective: -(p.alpha2 - 3.0).powi(2),
        epochs: 0,
    })
}

fn quiet() -> impl FnMut(&TrialRecord) -> Result<()> {
    |_| Ok(())
}

/// Trials needed until the incumbent is within `gap` of the optimum 0.
fn trials_to_reach(r: &SearchResult, gap: f64) -> usize {
    r.incumbent_trace()
        .iter()
        .position(|&b| b >= -gap)
        .map_or(r.history.len() + 1, |i| i + 1)
}

fn median(mut v: Vec<usize>) -> f64 {
    v.sort_unstable();
    let n = v.len();
    (v[(n - 1) / 2] + v[n / 2]) as f64 / 2.0
}

#[test]
fn random_points_stay_in_range() {
    let space = SearchSpace::default();
    let mut r = kgcache::rng::stream(9, &[]);
    for _ in 0..10_000 {
        assert!(space.contains(&space.sample(&mut r)));
    }
}

#[test]
fn history_length_equals_budget() {
    for budget in [8, 9, 20] {
        let r = smbo_search(
            &SearchSpace::default(),
            SearchOptions {
                budget,
                seed: 4,
                ..Default::default()
            },
            vec![],
            &quad,
            &mut quiet(),
        )
        .unwrap();
        assert_eq!(r.history.len(), budget);
    }
}

#[test]
fn incumbent_never_decreases() {
    for seed in 0..5 {
        let opts = SearchOptions {
            budget: 40,
            seed,
            ..Default::default()
        };
        for r in [
            random_search(&SearchSpace::default(), opts, vec![], &quad, &mut quiet()).unwrap(),
            smbo_search(&SearchSpace::default(), opts, vec![], &quad, &mut quiet()).unwrap(),
        ] {
            let tr = r.incumbent_trace();
            assert!(tr.windows(2).all(|w| w[1] >= w[0]));
        }
    }
}

#[test]
fn smbo_with_full_initial_design_is_random_search() {
    let opts = SearchOptions {
        budget: 30,
        seed: 11,
        init_design: 30,
        ..Default::default()
    };
    let a = smbo_search(&SearchSpace::default(), opts, vec![], &quad, &mut quiet()).unwrap();
    let b = random_search(&SearchSpace::default(), opts, vec![], &quad, &mut quiet()).unwrap();
    let pa: Vec<_> = a.history.iter().map(|t| t.params).collect();
    let pb: Vec<_> = b.history.iter().map(|t| t.params).collect();
    assert_eq!(pa, pb);
}

#[test]
fn random_search_coverage_matches_its_analytic_rate() {
    // one anchor plus 199 uniform draws; a draw lands within 0.5 of 3 with
    // probability 1/100 on [0, 100]
    let seeds = 400;
    let hits = (0..seeds)
        .filter(|&seed| {
            let r = random_search(
                &SearchSpace::default(),
                SearchOptions {
                    budget: 200,
                    seed,
                    ..Default::default()
                },
                vec![],
                &quad,
                &mut quiet(),
            )
            .unwrap();
            (r.best.unwrap().params.alpha2 - 3.0).abs() < 0.5
        })
        .count();
    let p = 1.0 - 0.99f64.powi(199);
    let rate = hits as f64 / seeds as f64;
    let sd = (p * (1.0 - p) / seeds as f64).sqrt();
    assert!(
        (rate - p).abs() < 4.0 * sd,
        "coverage {rate} vs analytic {p}"
    );
}

#[test]
fn smbo_needs_at_most_half_the_trials_of_random_search() {
    let mut smbo = Vec::new();
    let mut rand = Vec::new();
    for seed in 1..=20 {
        let r = random_search(
            &SearchSpace::default(),
            SearchOptions {
                budget: 600,
                seed,
                ..Default::default()
            },
            vec![],
            &quad,
            &mut quiet(),
        )
        .unwrap();
        rand.push(trials_to_reach(&r, 0.2));
        let s = smbo_search(
            &SearchSpace::default(),
            SearchOptions {
                budget: 120,
                seed,
                ..Default::default()
            },
            vec![],
            &quad,
            &mut quiet(),
        )
        .unwrap();
        smbo.push(trials_to_reach(&s, 0.2));
    }
    let (ms, mr) = (median(smbo.clone()), median(rand.clone()));
    eprintln!("smbo {smbo:?}\nrandom {rand:?}\nmedians {ms} vs {mr}");
    assert!(ms <= 0.5 * mr, "smbo median {ms}, random median {mr}");
}
