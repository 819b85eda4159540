use kgcache::fsio;
use kgcache::sampler::SamplerKind;
use kgcache::skipgram::{
    classify_nodes, corpus_to_text, generate_walks, parse_corpus, train_skipgram, Graph, WalkConfig,
};
use serde::Serialize;

use crate::args::{EmbedArgs, GraphArgs, NodeSampler, WalkArgs, WalkFlags};
use crate::resolve::{ensure_dir, JsonLines};
use crate::{Failure, Outcome, Snapshot};

impl GraphArgs {
    pub fn load(&self) -> Result<Graph, Failure> {
        let g = match (&self.edges, &self.content, &self.cites) {
            (Some(e), _, _) => Graph::load(e, self.labels.as_deref())?,
            (None, Some(content), Some(cites)) => Graph::load_citation(content, cites)?,
            _ => {
                return Err(Failure::Usage(
                    "give --edges, or --content with --cites".into(),
                ))
            }
        };
        log::info!(
            "graph: {} nodes, {} edges, {} classes",
            g.node_count(),
            g.edge_count(),
            g.classes.len()
        );
        Ok(g)
    }
}

impl WalkFlags {
    fn apply(&self, cfg: WalkConfig) -> WalkConfig {
        WalkConfig {
            walks_per_node: self.walks_per_node,
            walk_length: self.walk_length,
            p: self.p,
            q: self.q,
            ..cfg
        }
    }
}

pub fn walk(a: WalkArgs, snapshot: &Snapshot) -> Outcome {
    let cfg = a.walk.apply(WalkConfig::default());
    cfg.validate()?;
    let g = a.graph.load()?;
    ensure_dir(&a.out)?;
    snapshot.write(&a.out)?;
    let walks = generate_walks(&g, &cfg, a.seed);
    fsio::write_atomic_str(&a.out.join("corpus.txt"), &corpus_to_text(&walks, &g.nodes))?;
    println!("{} walks", walks.len());
    Ok(())
}

#[derive(Serialize)]
struct EpochLoss {
    epoch: usize,
    loss: f64,
}

pub fn embed(a: EmbedArgs, snapshot: &Snapshot) -> Outcome {
    let cfg = a.walk.apply(WalkConfig {
        window: a.window,
        negatives: a.negatives,
        dim: a.dim,
        epochs: a.epochs,
        lr: a.lr,
        batch_size: a.batch_size,
        ..Default::default()
    });
    cfg.validate()?;
    let ee = a.ee.params();
    ee.validate()?;
    if a.train_fraction.iter().any(|f| !(*f > 0.0 && *f < 1.0)) {
        return Err(Failure::Usage(
            "--train-fraction values must lie in (0, 1)".into(),
        ));
    }
    let g = a.graph.load()?;
    ensure_dir(&a.out)?;
    snapshot.write(&a.out)?;
    let corpus = match &a.corpus {
        Some(p) => parse_corpus(
            &fsio::read_to_string(p)?,
            &p.display().to_string(),
            &g.nodes,
        )?,
        None => generate_walks(&g, &cfg, a.seed),
    };
    let mode = match a.sampler {
        NodeSampler::Uniform => SamplerKind::Uniform,
        NodeSampler::Nscaching => SamplerKind::NSCaching,
    };
    let emb = train_skipgram(g.node_count(), &corpus, &cfg, mode, &ee, a.seed)?;
    fsio::write_atomic_str(&a.out.join("embeddings.txt"), &emb.to_text(g.nodes.names()))?;
    let mut log = JsonLines::new(a.out.join("skipgram_log.jsonl"));
    for (epoch, &loss) in emb.losses.iter().enumerate() {
        log.push(&EpochLoss { epoch, loss })?;
    }
    if !g.has_labels() {
        log::info!("no labels; skipping node classification");
        return Ok(());
    }
    let rows: Vec<Vec<f64>> = (0..g.node_count())
        .map(|i| emb.input.row(i).iter().map(|&x| x as f64).collect())
        .collect();
    let mut reports = JsonLines::new(a.out.join("node_classification.jsonl"));
    for &f in &a.train_fraction {
        let r = classify_nodes(&rows, &g.labels, g.classes.len(), f, a.seed, a.splits)?;
        println!(
            "train fraction {f}: micro-F1 {:.4} ± {:.4}, macro-F1 {:.4} ± {:.4}",
            r.micro_mean, r.micro_std, r.macro_mean, r.macro_std
        );
        reports.push(&r)?;
    }
    Ok(())
}
