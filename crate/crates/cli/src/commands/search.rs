use kgcache::automl::{
    parse_history, search, SearchOptions, SearchSpace, TrialOutcome, TrialParams,
};
use kgcache::eval::mrr;
use kgcache::fsio;
use kgcache::sampler::SamplerKind;
use kgcache::trainer::{noop_observer, train, TrainConfig};

use super::train_config;
use crate::args::SearchArgs;
use crate::resolve::{ensure_dir, write_json, JsonLines};
use crate::{Failure, Outcome, Snapshot};

fn range(name: &str, v: &[f64]) -> Result<(f64, f64), Failure> {
    match v {
        [lo, hi] => Ok((*lo, *hi)),
        _ => Err(Failure::Usage(format!("--{name} expects LO,HI"))),
    }
}

/// Best validation MRR of one reduced-fidelity training run.
pub fn trial_objective(
    kg: &kgcache::data::KnowledgeGraph,
    base: &TrainConfig,
    p: &TrialParams,
) -> Result<TrialOutcome, String> {
    let cfg = TrainConfig {
        ee: p.apply(base.ee),
        ..base.clone()
    };
    let out = train(kg, &cfg, &mut noop_observer()).map_err(|e| e.to_string())?;
    let objective = match &out.best {
        Some(b) => b.mrr,
        None => mrr(kg, &out.store, &kg.valid),
    };
    Ok(TrialOutcome {
        objective,
        epochs: out.log.len(),
    })
}

pub fn run(a: SearchArgs, snapshot: &Snapshot) -> Outcome {
    let mut base = train_config(&a.model, &a.ee)?;
    if base.sampler != SamplerKind::NSCaching {
        return Err(Failure::Usage(
            "search tunes the cache sampler; use --sampler nscaching".into(),
        ));
    }
    base.epochs = a.fidelity.unwrap_or(base.epochs);
    let space = SearchSpace {
        alpha1: range("alpha1-range", &a.alpha1_range)?,
        alpha2: range("alpha2-range", &a.alpha2_range)?,
        alpha3: range("alpha3-range", &a.alpha3_range)?,
        n1: a.n1_choices.clone(),
        n2: a.n2_choices.clone(),
    };
    space.validate()?;
    if a.workers == 0 {
        return Err(Failure::Usage("--workers must be at least 1".into()));
    }
    let opts = SearchOptions {
        budget: a.budget,
        seed: base.seed,
        init_design: a.init_design,
        candidates: a.candidates,
        workers: a.workers,
        ..Default::default()
    };
    let kg = a.data.load()?;
    ensure_dir(&a.out)?;
    let history_path = a.out.join("history.jsonl");
    let resume = if history_path.exists() {
        if !a.resume {
            return Err(Failure::Usage(format!(
                "{} exists; pass --resume to continue it",
                history_path.display()
            )));
        }
        parse_history(
            &fsio::read_to_string(&history_path)?,
            &history_path.display().to_string(),
        )?
    } else {
        Vec::new()
    };
    snapshot.write(&a.out)?;
    let mut history = JsonLines::new(history_path);
    for r in &resume {
        history.push(r)?;
    }
    let objective = |_: usize, p: &TrialParams| trial_objective(&kg, &base, p);
    let mut on_trial = |r: &kgcache::automl::TrialRecord| -> kgcache::Result<()> {
        match r.objective {
            Some(o) => log::info!("trial {}: objective {o:.4}", r.trial),
            None => log::warn!(
                "trial {} failed: {}",
                r.trial,
                r.error.as_deref().unwrap_or("")
            ),
        }
        history.push(r)
    };
    let result = search(a.algo, &space, opts, resume, &objective, &mut on_trial)?;
    match &result.best {
        Some(best) => {
            write_json(&a.out.join("incumbent.json"), best)?;
            println!(
                "incumbent: trial {} objective {:.4} (alpha1 {}, alpha2 {}, alpha3 {}, n1 {}, n2 {})",
                best.trial,
                best.objective.unwrap_or(f64::NAN),
                best.params.alpha1,
                best.params.alpha2,
                best.params.alpha3,
                best.params.n1,
                best.params.n2
            );
            Ok(())
        }
        None => Err(Failure::Runtime(anyhow::anyhow!("every trial failed"))),
    }
}
