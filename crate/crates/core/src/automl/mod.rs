//! Hyper-parameter search over the sampler's exploration/exploitation knobs:
//! plain random search and SMBO with a random-forest surrogate.

mod forest;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::rng;
use crate::sampler::EEHyperParams;
use crate::{Error, Result};

pub use forest::{expected_improvement, Forest, ForestParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub alpha1: (f64, f64),
    pub alpha2: (f64, f64),
    pub alpha3: (f64, f64),
    pub n1: Vec<usize>,
    pub n2: Vec<usize>,
}

impl Default for SearchSpace {
    fn default() -> Self {
        SearchSpace {
            alpha1: (0.0, 1.0),
            alpha2: (0.0, 100.0),
            alpha3: (0.0, 100.0),
            n1: vec![10, 30, 50, 70, 90],
            n2: vec![10, 30, 50, 70, 90],
        }
    }
}

impl SearchSpace {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> TrialParams {
        let u = |r: &mut R, (lo, hi): (f64, f64)| lo + (hi - lo) * r.gen::<f64>();
        TrialParams {
            alpha1: u(rng, self.alpha1),
            alpha2: u(rng, self.alpha2),
            alpha3: u(rng, self.alpha3),
            n1: self.n1[rng.gen_range(0..self.n1.len())],
            n2: self.n2[rng.gen_range(0..self.n2.len())],
        }
    }

    pub fn contains(&self, p: &TrialParams) -> bool {
        let within = |x: f64, (lo, hi): (f64, f64)| x >= lo && x <= hi;
        within(p.alpha1, self.alpha1)
            && within(p.alpha2, self.alpha2)
            && within(p.alpha3, self.alpha3)
            && self.n1.contains(&p.n1)
            && self.n2.contains(&p.n2)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |(lo, hi): (f64, f64)| lo.is_finite() && hi.is_finite() && lo <= hi && lo >= 0.0;
        if !(ok(self.alpha1) && ok(self.alpha2) && ok(self.alpha3))
            || self.n1.is_empty()
            || self.n2.is_empty()
            || self.n1.contains(&0)
            || self.n2.contains(&0)
        {
            return Err(Error::Config(format!("invalid search space {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialParams {
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha3: f64,
    pub n1: usize,
    pub n2: usize,
}

impl TrialParams {
    /// The starting point every search evaluates first.
    pub fn anchor() -> Self {
        TrialParams {
            alpha1: 0.0,
            alpha2: 0.0,
            alpha3: 0.0,
            n1: 50,
            n2: 50,
        }
    }

    pub fn apply(&self, base: EEHyperParams) -> EEHyperParams {
        EEHyperParams {
            alpha1: self.alpha1,
            alpha2: self.alpha2,
            alpha3: self.alpha3,
            n1: self.n1,
            n2: self.n2,
            ..base
        }
    }

    fn features(&self) -> Vec<f64> {
        vec![
            self.alpha1,
            self.alpha2,
            self.alpha3,
            self.n1 as f64,
            self.n2 as f64,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrialStatus {
    Completed,
    Failed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Proposal {
    Anchor,
    Random,
    Surrogate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    #[serde(flatten)]
    pub params: TrialParams,
    /// Validation MRR; present only for completed trials.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective: Option<f64>,
    pub epochs: usize,
    pub seconds: f64,
    pub status: TrialStatus,
    pub proposal: Proposal,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl TrialRecord {
    /// Value the surrogate learns from: failures count as 0.
    fn target(&self) -> f64 {
        self.objective.unwrap_or(0.0)
    }
}

/// What a trial callback reports back.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    pub objective: f64,
    pub epochs: usize,
}

pub type TrialFn<'a> =
    dyn Fn(usize, &TrialParams) -> std::result::Result<TrialOutcome, String> + Sync + 'a;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchAlgo {
    Random,
    Smbo,
}

impl fmt::Display for SearchAlgo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SearchAlgo::Random => "random",
            SearchAlgo::Smbo => "smbo",
        })
    }
}

impl FromStr for SearchAlgo {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "random" => Ok(SearchAlgo::Random),
            "smbo" => Ok(SearchAlgo::Smbo),
            _ => Err(format!("unknown search algorithm {s:?} (random, smbo)")),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SearchOptions {
    pub budget: usize,
    pub seed: u64,
    /// Trials proposed at random (anchor included) before the surrogate kicks in.
    pub init_design: usize,
    pub candidates: usize,
    pub forest: ForestParams,
    /// Trials evaluated concurrently per round.
    pub workers: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            budget: 50,
            seed: 1,
            init_design: 8,
            candidates: 1000,
            forest: ForestParams::default(),
            workers: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub best: Option<TrialRecord>,
    pub history: Vec<TrialRecord>,
}

impl SearchResult {
    /// Best objective after each trial (failed-only prefixes give -inf).
    pub fn incumbent_trace(&self) -> Vec<f64> {
        let mut best = f64::NEG_INFINITY;
        self.history
            .iter()
            .map(|r| {
                if let Some(o) = r.objective {
                    best = best.max(o);
                }
                best
            })
            .collect()
    }
}

pub fn incumbent(history: &[TrialRecord]) -> Option<&TrialRecord> {
    let mut best: Option<&TrialRecord> = None;
    for r in history {
        if let Some(o) = r.objective {
            if best.and_then(|b| b.objective).map_or(true, |bo| o > bo) {
                best = Some(r);
            }
        }
    }
    best
}

pub fn random_search(
    space: &SearchSpace,
    opts: SearchOptions,
    resume: Vec<TrialRecord>,
    objective: &TrialFn<'_>,
    on_trial: &mut dyn FnMut(&TrialRecord) -> Result<()>,
) -> Result<SearchResult> {
    if opts.budget == 0 {
        return Err(Error::Config("search budget must be at least 1".into()));
    }
    run(
        space,
        SearchOptions {
            init_design: usize::MAX,
            ..opts
        },
        resume,
        objective,
        on_trial,
    )
}

pub fn smbo_search(
    space: &SearchSpace,
    opts: SearchOptions,
    resume: Vec<TrialRecord>,
    objective: &TrialFn<'_>,
    on_trial: &mut dyn FnMut(&TrialRecord) -> Result<()>,
) -> Result<SearchResult> {
    if opts.budget < opts.init_design.max(1) {
        return Err(Error::Config(format!(
            "smbo budget {} is below the initial design size {}",
            opts.budget, opts.init_design
        )));
    }
    run(space, opts, resume, objective, on_trial)
}

pub fn search(
    algo: SearchAlgo,
    space: &SearchSpace,
    opts: SearchOptions,
    resume: Vec<TrialRecord>,
    objective: &TrialFn<'_>,
    on_trial: &mut dyn FnMut(&TrialRecord) -> Result<()>,
) -> Result<SearchResult> {
    match algo {
        SearchAlgo::Random => random_search(space, opts, resume, objective, on_trial),
        SearchAlgo::Smbo => smbo_search(space, opts, resume, objective, on_trial),
    }
}

fn random_proposal(space: &SearchSpace, seed: u64, i: usize) -> TrialParams {
    space.sample(&mut rng::stream(seed, &[0x5EA2C4, i as u64]))
}

/// Proposals for trial indices `start..start + count` given `history`.
fn propose(
    space: &SearchSpace,
    opts: &SearchOptions,
    history: &[TrialRecord],
    start: usize,
    count: usize,
) -> Vec<(TrialParams, Proposal)> {
    let mut out: Vec<(TrialParams, Proposal)> = Vec::with_capacity(count);
    let mut surrogate: Option<(Forest, f64)> = None;
    let ys: Vec<f64> = history.iter().map(TrialRecord::target).collect();
    let fit_ok = start >= opts.init_design && !ys.is_empty() && ys.iter().any(|&y| y != ys[0]);
    if fit_ok {
        let xs: Vec<Vec<f64>> = history.iter().map(|r| r.params.features()).collect();
        let mut r = rng::stream(opts.seed, &[0xF0E57, start as u64]);
        let f = Forest::fit(&xs, &ys, opts.forest, &mut r);
        let inc = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        surrogate = Some((f, inc));
    }
    let mut ranked: Vec<(f64, TrialParams)> = Vec::new();
    if let Some((f, inc)) = &surrogate {
        let mut r = rng::stream(opts.seed, &[0x5B0, start as u64]);
        ranked = (0..opts.candidates.max(1))
            .map(|_| {
                let p = space.sample(&mut r);
                let (m, v) = f.predict(&p.features());
                (expected_improvement(m, v, *inc), p)
            })
            .collect();
        // stable: ties keep generation order
        ranked.sort_by(|a, b| b.0.total_cmp(&a.0));
    }
    for k in 0..count {
        let i = start + k;
        let p = if i == 0 {
            (TrialParams::anchor(), Proposal::Anchor)
        } else if i < opts.init_design || surrogate.is_none() || k >= ranked.len() {
            (random_proposal(space, opts.seed, i), Proposal::Random)
        } else {
            (ranked[k].1, Proposal::Surrogate)
        };
        out.push(p);
    }
    out
}

fn evaluate(
    i: usize,
    params: TrialParams,
    proposal: Proposal,
    objective: &TrialFn<'_>,
) -> TrialRecord {
    let start = Instant::now();
    let res = objective(i, &params);
    let seconds = start.elapsed().as_secs_f64();
    match res {
        Ok(o) if o.objective.is_finite() => TrialRecord {
            trial: i,
            params,
            objective: Some(o.objective),
            epochs: o.epochs,
            seconds,
            status: TrialStatus::Completed,
            proposal,
            error: None,
        },
        Ok(o) => TrialRecord {
            trial: i,
            params,
            objective: None,
            epochs: o.epochs,
            seconds,
            status: TrialStatus::Failed,
            proposal,
            error: Some(format!("non-finite objective {}", o.objective)),
        },
        Err(e) => TrialRecord {
            trial: i,
            params,
            objective: None,
            epochs: 0,
            seconds,
            status: TrialStatus::Failed,
            proposal,
            error: Some(e),
        },
    }
}

fn run(
    space: &SearchSpace,
    opts: SearchOptions,
    resume: Vec<TrialRecord>,
    objective: &TrialFn<'_>,
    on_trial: &mut dyn FnMut(&TrialRecord) -> Result<()>,
) -> Result<SearchResult> {
    space.validate()?;
    let mut history = resume;
    for (i, r) in history.iter().enumerate() {
        if r.trial != i {
            return Err(Error::Config(format!(
                "resumed history has trial {} at position {i}",
                r.trial
            )));
        }
    }
    history.truncate(opts.budget);
    let workers = opts.workers.max(1);
    let pool = if workers > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?,
        )
    } else {
        None
    };
    while history.len() < opts.budget {
        let start = history.len();
        let mut count = workers.min(opts.budget - start);
        // keep the random design and the surrogate phase in separate rounds
        if start < opts.init_design {
            count = count.min(opts.init_design - start);
        }
        let props = propose(space, &opts, &history, start, count);
        let records: Vec<TrialRecord> = match &pool {
            None => props
                .iter()
                .enumerate()
                .map(|(k, &(p, how))| evaluate(start + k, p, how, objective))
                .collect(),
            Some(pool) => pool.install(|| {
                props
                    .par_iter()
                    .enumerate()
                    .map(|(k, &(p, how))| evaluate(start + k, p, how, objective))
                    .collect()
            }),
        };
        for r in records {
            if let Some(e) = &r.error {
                log::warn!("trial {} failed: {e}", r.trial);
            }
            on_trial(&r)?;
            history.push(r);
        }
    }
    Ok(SearchResult {
        best: incumbent(&history).cloned(),
        history,
    })
}

/// Parse a JSON-lines search history written by [`TrialRecord`] serialization.
pub fn parse_history(text: &str, origin: &str) -> Result<Vec<TrialRecord>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let r: TrialRecord =
            serde_json::from_str(line).map_err(|e| Error::parse(origin, i + 1, e.to_string()))?;
        if r.trial != out.len() {
            return Err(Error::parse(
                origin,
                i + 1,
                format!("expected trial {}, found {}", out.len(), r.trial),
            ));
        }
        if (r.status == TrialStatus::Completed) != r.objective.is_some() {
            return Err(Error::parse(
                origin,
                i + 1,
                "objective must be present exactly for completed trials",
            ));
        }
        out.push(r);
    }
    Ok(out)
}
