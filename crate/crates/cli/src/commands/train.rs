use std::fmt::Write as _;
use std::time::Instant;

use kgcache::analysis::VarianceTracker;
use kgcache::data::Split;
use kgcache::eval::{filtered_ranks, MetricsReport};
use kgcache::fsio;
use kgcache::sampler::SamplerKind;
use kgcache::scoring::{read_checkpoint, write_checkpoint, CheckpointMeta};
use kgcache::trainer::{train, train_warm, EpochView};
use serde::Serialize;

use super::train_config;
use crate::args::TrainArgs;
use crate::resolve::{ensure_dir, write_json, JsonLines};
use crate::{Failure, Outcome, Snapshot};

#[derive(Serialize)]
struct Summary {
    config_hash: String,
    epochs: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    best_epoch: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    best_valid_mrr: Option<f64>,
    cache_seconds: f64,
    refresh_passes: usize,
    seconds: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    test: Option<MetricsReport>,
}

fn na(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".to_string(), |v| v.to_string())
}

pub fn run(a: TrainArgs, snapshot: &Snapshot) -> Outcome {
    let cfg = train_config(&a.model, &a.ee)?;
    if !a.snapshot_epochs.is_empty() && cfg.sampler != SamplerKind::NSCaching {
        return Err(Failure::Usage(
            "--snapshot-epochs needs --sampler nscaching".into(),
        ));
    }
    if a.init.is_some() && cfg.pretrain_epochs > 0 {
        return Err(Failure::Usage(
            "--init and --pretrain-epochs cannot be combined".into(),
        ));
    }
    let kg = a.data.load()?;
    ensure_dir(&a.out)?;
    snapshot.write(&a.out)?;
    kg.write_dictionaries(&a.out)?;
    if cfg.threads > 1 {
        log::info!("{} gradient threads; pair gradients are merged in a fixed order, so results match one thread", cfg.threads);
    }

    let start = Instant::now();
    let hash = cfg.hash();
    let meta = |epoch| CheckpointMeta {
        seed: cfg.seed,
        config_hash: hash.clone(),
        epoch,
    };
    let tracked = kg.train[..a.track.min(kg.train.len())].to_vec();
    let mut tracker = VarianceTracker::new(tracked, cfg.ee.nu);
    let mut variance =
        String::from("epoch\tindex\thead\trelation\ttail\tscore\tmean\tvariance\tquality\n");
    let mut log = JsonLines::new(a.out.join("train_log.jsonl"));
    let out_dir = a.out.clone();
    let mut observer = |v: &EpochView<'_>| -> kgcache::Result<()> {
        let epoch = v.record.epoch;
        log.push(v.record)?;
        if a.snapshot_epochs.contains(&epoch) {
            if let Some(cache) = &v.sampler.cache {
                fsio::write_atomic_str(
                    &out_dir.join(format!("cache_epoch{epoch}.tsv")),
                    &cache.snapshot(v.kg),
                )?;
            }
        }
        if a.save_epochs.contains(&epoch) {
            write_checkpoint(
                &out_dir.join(format!("epoch_{epoch}.bin")),
                v.store,
                &meta(epoch),
            )?;
        }
        if !tracker.tracked.is_empty() {
            tracker.observe(v.store);
            for (i, t) in tracker.tracked.iter().enumerate() {
                let w = &tracker.stats[i];
                let score = v.store.score(*t) as f64;
                let quality = w.std().map(|_| tracker.quality(i, score));
                let _ = writeln!(
                    variance,
                    "{epoch}\t{i}\t{}\t{}\t{}\t{score}\t{}\t{}\t{}",
                    v.kg.entities.name(t.head),
                    v.kg.relations.name(t.relation),
                    v.kg.entities.name(t.tail),
                    na(w.mean()),
                    na(w.variance()),
                    na(quality)
                );
            }
            fsio::write_atomic_str(&out_dir.join("variance.tsv"), &variance)?;
        }
        Ok(())
    };
    let outcome = match &a.init {
        Some(path) => {
            let (store, _) = read_checkpoint(path)?;
            train_warm(&kg, &cfg, store, &mut observer)?
        }
        None => train(&kg, &cfg, &mut observer)?,
    };

    let last = outcome.log.last().map_or(0, |r| r.epoch);
    write_checkpoint(&a.out.join("final.bin"), &outcome.store, &meta(last))?;
    if let Some(best) = &outcome.best {
        write_checkpoint(&a.out.join("best.bin"), &best.store, &meta(best.epoch))?;
    }
    let test = if kg.test.is_empty() {
        None
    } else {
        let ranks = filtered_ranks(&kg, outcome.selected(), kg.split(Split::Test));
        if a.ranks {
            fsio::write_atomic_str(&a.out.join("ranks_test.tsv"), &ranks.to_tsv(&kg))?;
        }
        let m = MetricsReport::from_ranks(&ranks);
        write_json(&a.out.join("metrics_test.json"), &m)?;
        Some(m)
    };
    let summary = Summary {
        config_hash: hash.clone(),
        epochs: outcome.log.len(),
        best_epoch: outcome.best.as_ref().map(|b| b.epoch),
        best_valid_mrr: outcome.best.as_ref().map(|b| b.mrr),
        cache_seconds: outcome.cache_seconds,
        refresh_passes: outcome.refresh_passes,
        seconds: start.elapsed().as_secs_f64(),
        test,
    };
    write_json(&a.out.join("summary.json"), &summary)?;
    match (&summary.best_valid_mrr, &summary.test) {
        (Some(v), Some(t)) => println!(
            "valid MRR {v:.4} (epoch {}), test MRR {:.4}, Hit@10 {:.4}",
            summary.best_epoch.unwrap_or(0),
            t.mrr,
            t.hit10
        ),
        (None, Some(t)) => println!("test MRR {:.4}, Hit@10 {:.4}", t.mrr, t.hit10),
        _ => println!("trained {} epochs", summary.epochs),
    }
    Ok(())
}
