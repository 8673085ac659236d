//! Selection of structurally similar sentence pairs across two treebanks
//! and cross-lingual consistency summaries over predicted parses.

use crate::conll::Treebank;
use crate::treedist::{build_tree, dted, DepTree, DtedScore, LabelMode};
use serde::Serialize;
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CrossLingualError {
    #[error("k must be at least 1")]
    ZeroK,
    #[error("sentence {id} in bank {side} is not a valid tree: {detail}")]
    InvalidSentence {
        side: &'static str,
        id: String,
        detail: String,
    },
    #[error("no selected pair has predictions on both sides")]
    EmptySelection,
}

/// One scored cross-bank sentence pair.
#[derive(Debug, Clone, Serialize)]
pub struct PairScore {
    pub id_a: String,
    pub id_b: String,
    #[serde(flatten)]
    pub dted: DtedScore,
}

/// The top-k structurally most similar pairs between two banks.
#[derive(Debug, Clone, Serialize)]
pub struct PairSelection {
    pub pairs: Vec<PairScore>,
    pub k: usize,
    pub mode: LabelMode,
    pub allow_repeats: bool,
    /// Set when fewer than `k` pairs were achievable.
    pub truncated: bool,
}

fn forest(
    bank: &Treebank,
    mode: LabelMode,
    side: &'static str,
) -> Result<Vec<(String, DepTree)>, CrossLingualError> {
    bank.sentences
        .iter()
        .enumerate()
        .map(|(idx, sentence)| {
            let id = sentence.effective_id(idx);
            build_tree(sentence, mode)
                .map(|tree| (id.clone(), tree))
                .map_err(|e| CrossLingualError::InvalidSentence {
                    side,
                    id,
                    detail: e.to_string(),
                })
        })
        .collect()
}

/// Pick the `k` highest-scoring sentence pairs between two banks.
///
/// Only pairs whose sentence lengths differ by at most `length_window` are
/// scored (a longer gap caps the score at `1 - gap / max_size` anyway).
/// Candidates are ranked by `(score desc, id_a asc, id_b asc)` and taken
/// greedily; unless `allow_repeats` is set, each sentence is used at most
/// once per side. Fewer than `k` achievable pairs marks the selection as
/// truncated instead of failing.
pub fn select_pairs(
    bank_a: &Treebank,
    bank_b: &Treebank,
    k: usize,
    mode: LabelMode,
    length_window: usize,
    allow_repeats: bool,
) -> Result<PairSelection, CrossLingualError> {
    if k == 0 {
        return Err(CrossLingualError::ZeroK);
    }
    let forest_a = forest(bank_a, mode, "a")?;
    let forest_b = forest(bank_b, mode, "b")?;

    let mut candidates: Vec<PairScore> = Vec::new();
    for (id_a, tree_a) in &forest_a {
        for (id_b, tree_b) in &forest_b {
            if tree_a.size().abs_diff(tree_b.size()) > length_window {
                continue;
            }
            candidates.push(PairScore {
                id_a: id_a.clone(),
                id_b: id_b.clone(),
                dted: dted(tree_a, tree_b),
            });
        }
    }
    candidates.sort_by(|x, y| {
        y.dted
            .score
            .total_cmp(&x.dted.score)
            .then_with(|| x.id_a.cmp(&y.id_a))
            .then_with(|| x.id_b.cmp(&y.id_b))
    });

    let mut used_a: Vec<&str> = Vec::new();
    let mut used_b: Vec<&str> = Vec::new();
    let mut pairs: Vec<PairScore> = Vec::new();
    for candidate in &candidates {
        if pairs.len() == k {
            break;
        }
        if !allow_repeats
            && (used_a.contains(&candidate.id_a.as_str())
                || used_b.contains(&candidate.id_b.as_str()))
        {
            continue;
        }
        used_a.push(&candidate.id_a);
        used_b.push(&candidate.id_b);
        pairs.push(candidate.clone());
    }

    let truncated = pairs.len() < k;
    Ok(PairSelection {
        pairs,
        k,
        mode,
        allow_repeats,
        truncated,
    })
}

/// Outcome for one selected pair under the predicted trees.
#[derive(Debug, Clone, Serialize)]
pub struct PairOutcome {
    pub id_a: String,
    pub id_b: String,
    /// Similarity of the gold trees, from the selection.
    pub gold_score: f64,
    /// Similarity of the predicted trees; absent when either prediction is
    /// missing or not a tree.
    pub pred_score: Option<f64>,
}

/// Mean predicted similarity over the selected pairs, next to the gold
/// similarity it is measured against.
#[derive(Debug, Clone, Serialize)]
pub struct ConsistencySummary {
    pub mean_pred: f64,
    /// Mean gold score over the same (non-skipped) pairs.
    pub mean_gold: f64,
    /// `mean_pred / mean_gold`; absent when the gold mean is zero.
    pub ratio: Option<f64>,
    pub skipped: usize,
    pub per_pair: Vec<PairOutcome>,
}

/// Score the predicted trees of both sides over a gold-selected pair list.
///
/// Predictions are looked up by sentence id; pairs with a missing or
/// non-tree prediction on either side are skipped and counted. The ratio
/// compares means over the same effective pairs, so predictions identical
/// to gold yield exactly 1.
pub fn consistency_summary(
    pred_a: &Treebank,
    pred_b: &Treebank,
    selection: &PairSelection,
    mode: LabelMode,
) -> Result<ConsistencySummary, CrossLingualError> {
    let index = |bank: &Treebank| -> HashMap<String, usize> {
        bank.sentences
            .iter()
            .enumerate()
            .map(|(idx, s)| (s.effective_id(idx), idx))
            .collect()
    };
    let index_a = index(pred_a);
    let index_b = index(pred_b);
    let tree_for = |bank: &Treebank, index: &HashMap<String, usize>, id: &str| -> Option<DepTree> {
        let &idx = index.get(id)?;
        build_tree(&bank.sentences[idx], mode).ok()
    };

    let mut per_pair = Vec::new();
    let mut skipped = 0usize;
    for pair in &selection.pairs {
        let pred_score = match (
            tree_for(pred_a, &index_a, &pair.id_a),
            tree_for(pred_b, &index_b, &pair.id_b),
        ) {
            (Some(ta), Some(tb)) => Some(dted(&ta, &tb).score),
            _ => {
                skipped += 1;
                None
            }
        };
        per_pair.push(PairOutcome {
            id_a: pair.id_a.clone(),
            id_b: pair.id_b.clone(),
            gold_score: pair.dted.score,
            pred_score,
        });
    }

    let effective: Vec<&PairOutcome> = per_pair.iter().filter(|p| p.pred_score.is_some()).collect();
    if effective.is_empty() {
        return Err(CrossLingualError::EmptySelection);
    }
    let mean_pred =
        effective.iter().map(|p| p.pred_score.unwrap()).sum::<f64>() / effective.len() as f64;
    let mean_gold = effective.iter().map(|p| p.gold_score).sum::<f64>() / effective.len() as f64;
    let ratio = (mean_gold != 0.0).then(|| mean_pred / mean_gold);

    Ok(ConsistencySummary {
        mean_pred,
        mean_gold,
        ratio,
        skipped,
        per_pair,
    })
}
