//! Link-prediction ranking, triplet classification and F1 scores.

mod classify;
mod f1;

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{KnowledgeGraph, Triplet};
use crate::sampler::{CandidateScorer, Side};

pub use classify::{
    accuracy, classification_set, fit_thresholds, ClassificationModel, ClassificationSet,
};
pub use f1::f1_scores;

/// Head- and tail-replacement ranks for each evaluated triplet.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RankResult {
    pub triplets: Vec<Triplet>,
    pub head: Vec<f64>,
    pub tail: Vec<f64>,
    pub raw_head: Vec<f64>,
    pub raw_tail: Vec<f64>,
}

impl RankResult {
    /// Both sides' filtered ranks, heads first.
    pub fn all(&self) -> Vec<f64> {
        self.head.iter().chain(&self.tail).copied().collect()
    }

    pub fn to_tsv(&self, kg: &KnowledgeGraph) -> String {
        let mut out = String::from(
            "head\trelation\ttail\thead_rank\ttail_rank\traw_head_rank\traw_tail_rank\n",
        );
        for (i, t) in self.triplets.iter().enumerate() {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                kg.entities.name(t.head),
                kg.relations.name(t.relation),
                kg.entities.name(t.tail),
                self.head[i],
                self.tail[i],
                self.raw_head[i],
                self.raw_tail[i]
            );
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub mrr: f64,
    pub hit1: f64,
    pub hit3: f64,
    pub hit10: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub mrr: f64,
    pub hit1: f64,
    pub hit3: f64,
    pub hit10: f64,
    pub n_test: usize,
    pub head: EvalSummary,
    pub tail: EvalSummary,
}

impl MetricsReport {
    pub fn from_ranks(r: &RankResult) -> Self {
        let both = summarize(&r.all());
        MetricsReport {
            mrr: both.mrr,
            hit1: both.hit1,
            hit3: both.hit3,
            hit10: both.hit10,
            n_test: r.triplets.len(),
            head: summarize(&r.head),
            tail: summarize(&r.tail),
        }
    }
}

/// Rank with tie averaging: `1 + #greater + #equal_others / 2`.
fn tie_rank(greater: usize, equal_others: usize) -> f64 {
    1.0 + greater as f64 + equal_others as f64 / 2.0
}

/// `(raw, filtered)` rank of entity `truth` among `scores`; `known` lists the
/// entities forming true triplets on this side (sorted, may include `truth`).
fn rank_one(scores: &[f64], truth: usize, known: &[usize]) -> (f64, f64) {
    let s = scores[truth];
    let (mut greater, mut equal) = (0usize, 0usize);
    for (e, &x) in scores.iter().enumerate() {
        if e == truth {
            continue;
        }
        if x > s {
            greater += 1;
        } else if x == s {
            equal += 1;
        }
    }
    let raw = tie_rank(greater, equal);
    let (mut fg, mut fe) = (greater, equal);
    for &e in known {
        if e == truth {
            continue;
        }
        let x = scores[e];
        if x > s {
            fg -= 1;
        } else if x == s {
            fe -= 1;
        }
    }
    (raw, tie_rank(fg, fe))
}

/// Filtered (and raw) ranks of `triplets`, scoring every entity on each side.
pub fn filtered_ranks<S: CandidateScorer + ?Sized>(
    kg: &KnowledgeGraph,
    scorer: &S,
    triplets: &[Triplet],
) -> RankResult {
    let n = kg.entity_count();
    let per: Vec<(f64, f64, f64, f64)> = triplets
        .par_iter()
        .map_init(Vec::new, |buf, &t| {
            scorer.score_side(Side::Head, t, n, buf);
            let (rh, fh) = rank_one(buf, t.head, kg.known_heads(t.relation, t.tail));
            scorer.score_side(Side::Tail, t, n, buf);
            let (rt, ft) = rank_one(buf, t.tail, kg.known_tails(t.head, t.relation));
            (fh, ft, rh, rt)
        })
        .collect();
    let mut out = RankResult {
        triplets: triplets.to_vec(),
        ..Default::default()
    };
    for (fh, ft, rh, rt) in per {
        out.head.push(fh);
        out.tail.push(ft);
        out.raw_head.push(rh);
        out.raw_tail.push(rt);
    }
    out
}

pub fn summarize(ranks: &[f64]) -> EvalSummary {
    if ranks.is_empty() {
        return EvalSummary {
            mrr: 0.0,
            hit1: 0.0,
            hit3: 0.0,
            hit10: 0.0,
        };
    }
    let n = ranks.len() as f64;
    let hit = |k: f64| ranks.iter().filter(|&&r| r <= k).count() as f64 / n;
    EvalSummary {
        mrr: ranks.iter().map(|r| 1.0 / r).sum::<f64>() / n,
        hit1: hit(1.0),
        hit3: hit(3.0),
        hit10: hit(10.0),
    }
}

/// Filtered MRR over both sides of `triplets`.
pub fn mrr<S: CandidateScorer + ?Sized>(
    kg: &KnowledgeGraph,
    scorer: &S,
    triplets: &[Triplet],
) -> f64 {
    summarize(&filtered_ranks(kg, scorer, triplets).all()).mrr
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_hand_values() {
        let s = summarize(&[1.0, 2.0, 4.0]);
        assert!((s.mrr - 1.75 / 3.0).abs() < 1e-12);
        assert_eq!(s.hit10, 1.0);
        assert!((summarize(&[5.0, 10.0, 11.0]).hit10 - 2.0 / 3.0).abs() < 1e-12);
        let p = summarize(&[1.0; 4]);
        assert_eq!((p.mrr, p.hit1, p.hit3, p.hit10), (1.0, 1.0, 1.0, 1.0));
    }

    #[test]
    fn rank_with_ties_and_filter() {
        // truth 0 scores 1; entity 1 is higher but known-true
        let scores = [1.0, 3.0, 1.0, 0.0, 2.0];
        let (raw, filt) = rank_one(&scores, 0, &[0, 1]);
        assert_eq!(raw, 3.5);
        assert_eq!(filt, 2.5);
    }
}
