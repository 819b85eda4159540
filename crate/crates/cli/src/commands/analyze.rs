use std::fmt::Write as _;
use std::path::PathBuf;

use clap::ValueEnum;
use kgcache::analysis::{ccdf, tail_gradient_norms};
use kgcache::fsio;
use kgcache::scoring::read_checkpoint;

use super::{loss_of, DEFAULT_GAMMA};
use crate::args::{AnalyzeArgs, LossArg};
use crate::resolve::{checkpoint_file, ensure_dir, RunDefaults};
use crate::{Failure, Outcome, Snapshot};

/// Per checkpoint, the CCDF of pair-gradient norms over every tail
/// substitution of the requested train triplets.
pub fn run(a: AnalyzeArgs, snapshot: &Snapshot) -> Outcome {
    let mut files: Vec<(String, PathBuf)> = Vec::new();
    if let Some(run) = &a.run {
        for &k in &a.epochs {
            files.push((format!("epoch{k}"), run.join(format!("epoch_{k}.bin"))));
        }
        if a.epochs.is_empty() {
            files.push(("final".into(), checkpoint_file(run)?.0));
        }
    }
    for p in &a.checkpoint {
        let (f, _) = checkpoint_file(p)?;
        let label = f.file_stem().map_or_else(
            || "checkpoint".to_string(),
            |s| s.to_string_lossy().into_owned(),
        );
        files.push((label, f));
    }
    if files.is_empty() {
        return Err(Failure::Usage("give --checkpoint or --run".into()));
    }
    let run_dir = match &a.run {
        Some(r) => r.clone(),
        None => checkpoint_file(&files[0].1)?.1,
    };
    let defaults = RunDefaults::load(&run_dir)?;
    let run_loss = defaults
        .get::<String>("loss")?
        .and_then(|s| LossArg::from_str(&s, true).ok());
    let kind = a.loss.or(run_loss).unwrap_or(LossArg::Margin);
    let gamma = match kind {
        LossArg::Margin => Some(a.gamma.or(defaults.get("gamma")?).unwrap_or(DEFAULT_GAMMA)),
        LossArg::Logistic => a.gamma,
    };
    let loss = loss_of(
        kind,
        gamma,
        a.lambda.or(defaults.get("lambda")?).unwrap_or(0.0),
    )?;
    let kg = defaults.data(&a.data)?.load()?;
    if let Some(&bad) = a.triplets.iter().find(|&&i| i >= kg.train.len()) {
        return Err(Failure::Usage(format!(
            "triplet index {bad} out of range ({} train triplets)",
            kg.train.len()
        )));
    }
    let out = a.out.clone().unwrap_or(run_dir);
    ensure_dir(&out)?;
    snapshot.write(&out)?;
    for (label, file) in &files {
        let (store, _) = read_checkpoint(file)?;
        let mut tsv = String::from("index\thead\trelation\ttail\tx\tccdf\n");
        for &i in &a.triplets {
            let t = kg.train[i];
            let (h, r, tl) = (
                kg.entities.name(t.head),
                kg.relations.name(t.relation),
                kg.entities.name(t.tail),
            );
            for (x, p) in ccdf(&tail_gradient_norms(&store, &kg, &loss, t)) {
                let _ = writeln!(tsv, "{i}\t{h}\t{r}\t{tl}\t{x}\t{p}");
            }
        }
        fsio::write_atomic_str(&out.join(format!("grad_ccdf_{label}.tsv")), &tsv)?;
    }
    println!("{} checkpoint(s) analyzed", files.len());
    Ok(())
}
