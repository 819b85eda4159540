pub mod analyze;
pub mod eval;
pub mod graph;
pub mod search;
pub mod train;

use kgcache::sampler::EEHyperParams;
use kgcache::scoring::Loss;
use kgcache::trainer::TrainConfig;

use crate::args::{EeArgs, LossArg, ModelArgs};
use crate::Failure;

pub const DEFAULT_GAMMA: f64 = 2.0;

pub fn loss_of(kind: LossArg, gamma: Option<f64>, lambda: f64) -> Result<Loss, Failure> {
    let loss = match (kind, gamma) {
        (LossArg::Logistic, Some(_)) => {
            return Err(Failure::Usage(
                "--gamma applies to the margin loss only, not --loss logistic".into(),
            ))
        }
        (LossArg::Logistic, None) => Loss::logistic(),
        (LossArg::Margin, g) => Loss::margin(g.unwrap_or(DEFAULT_GAMMA)),
    };
    Ok(loss.with_lambda(lambda))
}

impl EeArgs {
    pub fn params(&self) -> EEHyperParams {
        EEHyperParams {
            alpha1: self.alpha1,
            alpha2: self.alpha2,
            alpha3: self.alpha3,
            n1: self.n1,
            n2: self.n2,
            lazy_n: self.lazy_n,
            nu: self.nu,
        }
    }
}

pub fn train_config(m: &ModelArgs, ee: &EeArgs) -> Result<TrainConfig, Failure> {
    let cfg = TrainConfig {
        model: m.model,
        dim: m.dim,
        loss: loss_of(m.loss, m.gamma, m.lambda)?,
        batch_size: m.batch_size,
        lr: m.lr,
        epochs: m.epochs,
        seed: m.seed,
        sampler: m.sampler,
        ee: ee.params(),
        pretrain_epochs: m.pretrain_epochs,
        eval_every: m.eval_every,
        normalize_entities: m.normalize_entities,
        simple_half: m.simple_half,
        negatives: m.negatives,
        threads: m.threads,
    };
    cfg.validate()?;
    Ok(cfg)
}
