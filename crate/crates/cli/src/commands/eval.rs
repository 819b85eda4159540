use kgcache::data::{relation_stats, Split};
use kgcache::eval::{accuracy, classification_set, filtered_ranks, fit_thresholds, MetricsReport};
use kgcache::fsio;
use kgcache::scoring::read_checkpoint;
use serde::Serialize;

use crate::args::{ClassifyArgs, EvalArgs};
use crate::resolve::{checkpoint_file, ensure_dir, write_json, RunDefaults};
use crate::{Outcome, Snapshot};

fn split_name(s: Split) -> &'static str {
    match s {
        Split::Train => "train",
        Split::Valid => "valid",
        Split::Test => "test",
    }
}

pub fn run(a: EvalArgs, snapshot: &Snapshot) -> Outcome {
    let (file, run_dir) = checkpoint_file(&a.checkpoint)?;
    let data = RunDefaults::load(&run_dir)?.data(&a.data)?;
    let kg = data.load()?;
    let (store, _) = read_checkpoint(&file)?;
    let out = a.out.unwrap_or(run_dir);
    ensure_dir(&out)?;
    snapshot.write(&out)?;
    let name = split_name(a.split);
    let ranks = filtered_ranks(&kg, &store, kg.split(a.split));
    if a.ranks {
        fsio::write_atomic_str(&out.join(format!("ranks_{name}.tsv")), &ranks.to_tsv(&kg))?;
    }
    let m = MetricsReport::from_ranks(&ranks);
    write_json(&out.join(format!("metrics_{name}.json")), &m)?;
    println!(
        "{}",
        serde_json::to_string(&m).map_err(anyhow::Error::from)?
    );
    Ok(())
}

#[derive(Serialize)]
struct ClassificationReport {
    valid_accuracy: f64,
    test_accuracy: f64,
    n_valid: usize,
    n_test: usize,
}

/// Thresholds fitted on corrupted validation triplets, accuracy on test.
pub fn classify(a: ClassifyArgs, snapshot: &Snapshot) -> Outcome {
    let (file, run_dir) = checkpoint_file(&a.checkpoint)?;
    let data = RunDefaults::load(&run_dir)?.data(&a.data)?;
    let kg = data.load()?;
    let (store, _) = read_checkpoint(&file)?;
    let out = a.out.unwrap_or(run_dir);
    ensure_dir(&out)?;
    snapshot.write(&out)?;
    let stats = relation_stats(&kg);
    let valid = classification_set(&kg, &kg.valid, &stats, a.seed);
    let test = classification_set(&kg, &kg.test, &stats, a.seed.wrapping_add(1));
    let model = fit_thresholds(&valid, &store, kg.relation_count());
    let report = ClassificationReport {
        valid_accuracy: accuracy(&model, &valid, &store),
        test_accuracy: accuracy(&model, &test, &store),
        n_valid: valid.triplets.len(),
        n_test: test.triplets.len(),
    };
    write_json(&out.join("classification.json"), &report)?;
    println!(
        "triplet classification accuracy: valid {:.4}, test {:.4}",
        report.valid_accuracy, report.test_accuracy
    );
    Ok(())
}
