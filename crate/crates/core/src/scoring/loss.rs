use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{EmbeddingStore, Real, SparseGrad};
use crate::data::Triplet;
use crate::{Error, Result};

/// Numerically stable `ln(1 + e^x)`.
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LossKind {
    /// `max(0, gamma - pos + neg)`
    Margin { gamma: f64 },
    /// `softplus(-pos) + softplus(neg)`
    Logistic,
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LossKind::Margin { .. } => f.write_str("margin"),
            LossKind::Logistic => f.write_str("logistic"),
        }
    }
}

impl FromStr for LossKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "margin" => Ok(LossKind::Margin { gamma: 1.0 }),
            "logistic" => Ok(LossKind::Logistic),
            _ => Err(Error::Config(format!("unknown loss {s:?}"))),
        }
    }
}

/// Pairwise loss plus an L2 penalty on the rows a pair touches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Loss {
    pub kind: LossKind,
    pub lambda: f64,
}

impl Loss {
    pub fn margin(gamma: f64) -> Self {
        Loss {
            kind: LossKind::Margin { gamma },
            lambda: 0.0,
        }
    }

    pub fn logistic() -> Self {
        Loss {
            kind: LossKind::Logistic,
            lambda: 0.0,
        }
    }

    pub fn with_lambda(self, lambda: f64) -> Self {
        Loss { lambda, ..self }
    }

    /// Loss of a (positive, negative) score pair, without the penalty.
    pub fn pair_loss(&self, pos: f64, neg: f64) -> f64 {
        match self.kind {
            LossKind::Margin { gamma } => (gamma - pos + neg).max(0.0),
            LossKind::Logistic => softplus(-pos) + softplus(neg),
        }
    }

    /// Derivatives of [`Loss::pair_loss`] with respect to `pos` and `neg`.
    /// The hinge is inactive at exactly zero.
    pub fn pair_loss_grad(&self, pos: f64, neg: f64) -> (f64, f64) {
        match self.kind {
            LossKind::Margin { gamma } => {
                if gamma - pos + neg > 0.0 {
                    (-1.0, 1.0)
                } else {
                    (0.0, 0.0)
                }
            }
            LossKind::Logistic => (-sigmoid(-pos), sigmoid(neg)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairStats {
    /// Pair loss including the penalty term.
    pub loss: f64,
    pub pos_score: f64,
    pub neg_score: f64,
    /// L2 norm of the full pair gradient.
    pub grad_norm: f64,
}

/// Gradient of the pair objective over every row the pair touches, written
/// into `grad` (cleared first). `rows` is scratch space.
pub fn pair_gradient<T: Real>(
    store: &EmbeddingStore<T>,
    loss: &Loss,
    pos: Triplet,
    neg: Triplet,
    grad: &mut SparseGrad<T>,
    rows: &mut Vec<(usize, usize)>,
) -> PairStats {
    grad.clear();
    let ps = store.score(pos).as_f64();
    let ns = store.score(neg).as_f64();
    let mut value = loss.pair_loss(ps, ns);
    let (dp, dn) = loss.pair_loss_grad(ps, ns);
    if dp != 0.0 {
        store.score_with_grad(pos, T::of(dp), grad);
    }
    if dn != 0.0 {
        store.score_with_grad(neg, T::of(dn), grad);
    }
    if loss.lambda > 0.0 {
        rows.clear();
        store.touched_rows(pos, rows);
        store.touched_rows(neg, rows);
        let lam = T::of(loss.lambda);
        let two_lam = T::of(2.0 * loss.lambda);
        let mut penalty = T::zero();
        for &(slot, row) in rows.iter() {
            let src = store.params[slot].row(row);
            let off = grad.entry(slot, row);
            let b = grad.buf_mut();
            for (i, &x) in src.iter().enumerate() {
                penalty = penalty + x * x;
                b[off + i] = b[off + i] + two_lam * x;
            }
        }
        value += (lam * penalty).as_f64();
    }
    PairStats {
        loss: value,
        pos_score: ps,
        neg_score: ns,
        grad_norm: grad.norm(),
    }
}
