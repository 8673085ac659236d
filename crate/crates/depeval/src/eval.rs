//! Attachment scoring and discrepancy statistics between predicted and gold
//! treebanks.
//!
//! All operations require sanitizer-aligned inputs: equal sentence counts
//! and, per sentence, equal token counts with identical forms. Feeding
//! anything else is an error rather than a silent mis-count.

use crate::conll::{normalize_deprel, validate, Sentence, Token, Treebank};
use serde::Serialize;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("treebanks are not aligned: {0}")]
    NotAligned(String),
    #[error("no comparable tokens; refusing to report over an empty corpus")]
    EmptyCorpus,
    #[error("gold sentence {index} ({id}) is not a valid tree: {detail}")]
    InvalidGold {
        index: usize,
        id: String,
        detail: String,
    },
}

/// UAS/LAS attachment scores.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub token_total: usize,
    pub uas_correct: usize,
    pub las_correct: usize,
    /// Percentage of tokens with the correct head.
    pub uas: f64,
    /// Percentage of tokens with the correct head and relation.
    pub las: f64,
    pub punctuation_excluded: bool,
}

fn ensure_aligned(predicted: &Treebank, gold: &Treebank) -> Result<(), EvalError> {
    if predicted.len() != gold.len() {
        return Err(EvalError::NotAligned(format!(
            "{} predicted sentences vs {} gold",
            predicted.len(),
            gold.len()
        )));
    }
    for (idx, (p, g)) in predicted
        .sentences
        .iter()
        .zip(gold.sentences.iter())
        .enumerate()
    {
        if p.forms() != g.forms() {
            return Err(EvalError::NotAligned(format!(
                "sentence {} ({}): token forms differ; run sanitize first",
                idx,
                g.effective_id(idx)
            )));
        }
    }
    Ok(())
}

/// Whether a token counts as punctuation for score exclusion: gold UPOS is
/// `PUNCT`, falling back to a `punct` relation when UPOS is absent.
fn is_excluded_punct(gold: &Token) -> bool {
    if gold.upos_absent() {
        normalize_deprel(&gold.deprel) == "punct"
    } else {
        gold.upos == "PUNCT"
    }
}

/// Count correct heads (UAS) and correct head+relation pairs (LAS).
///
/// Relations are compared after [`normalize_deprel`]. With `exclude_punct`,
/// tokens that are punctuation in the gold annotation leave all counts.
pub fn score(
    predicted: &Treebank,
    gold: &Treebank,
    exclude_punct: bool,
) -> Result<EvalReport, EvalError> {
    ensure_aligned(predicted, gold)?;
    let mut token_total = 0usize;
    let mut uas_correct = 0usize;
    let mut las_correct = 0usize;
    for (p_sentence, g_sentence) in predicted.sentences.iter().zip(gold.sentences.iter()) {
        for (p, g) in p_sentence.tokens.iter().zip(g_sentence.tokens.iter()) {
            if exclude_punct && is_excluded_punct(g) {
                continue;
            }
            token_total += 1;
            if p.head == g.head {
                uas_correct += 1;
                if normalize_deprel(&p.deprel) == normalize_deprel(&g.deprel) {
                    las_correct += 1;
                }
            }
        }
    }
    if token_total == 0 {
        return Err(EvalError::EmptyCorpus);
    }
    Ok(EvalReport {
        token_total,
        uas_correct,
        las_correct,
        uas: 100.0 * uas_correct as f64 / token_total as f64,
        las: 100.0 * las_correct as f64 / token_total as f64,
        punctuation_excluded: exclude_punct,
    })
}

/// One gold-label/predicted-label disagreement and how often it occurred.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConfusionEntry {
    pub gold_label: String,
    pub predicted_label: String,
    pub count: usize,
}

/// Rank label disagreements by frequency.
///
/// With `attached_only` (the default in the CLI), only tokens whose head was
/// predicted correctly are counted, isolating labeling disagreement from
/// attachment error. Entries are sorted by descending count, ties broken by
/// `(gold_label, predicted_label)`, and truncated to `top_k`.
pub fn label_confusion(
    predicted: &Treebank,
    gold: &Treebank,
    top_k: usize,
    attached_only: bool,
) -> Result<Vec<ConfusionEntry>, EvalError> {
    ensure_aligned(predicted, gold)?;
    let mut counts: BTreeMap<(String, String), usize> = BTreeMap::new();
    for (p_sentence, g_sentence) in predicted.sentences.iter().zip(gold.sentences.iter()) {
        for (p, g) in p_sentence.tokens.iter().zip(g_sentence.tokens.iter()) {
            if attached_only && p.head != g.head {
                continue;
            }
            let gold_label = normalize_deprel(&g.deprel);
            let predicted_label = normalize_deprel(&p.deprel);
            if gold_label != predicted_label {
                *counts.entry((gold_label, predicted_label)).or_insert(0) += 1;
            }
        }
    }
    let mut entries: Vec<ConfusionEntry> = counts
        .into_iter()
        .map(|((gold_label, predicted_label), count)| ConfusionEntry {
            gold_label,
            predicted_label,
            count,
        })
        .collect();
    entries.sort_by(|a, b| {
        b.count
            .cmp(&a.count)
            .then_with(|| a.gold_label.cmp(&b.gold_label))
            .then_with(|| a.predicted_label.cmp(&b.predicted_label))
    });
    entries.truncate(top_k);
    Ok(entries)
}

/// Where the predicted root landed relative to gold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RootCategory {
    Correct,
    PunctRoot,
    NounRootForVerb,
    OtherMismatch,
    NoRoot,
    MultiRoot,
}

impl RootCategory {
    pub const ALL: [RootCategory; 6] = [
        RootCategory::Correct,
        RootCategory::PunctRoot,
        RootCategory::NounRootForVerb,
        RootCategory::OtherMismatch,
        RootCategory::NoRoot,
        RootCategory::MultiRoot,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RootCategory::Correct => "CORRECT",
            RootCategory::PunctRoot => "PUNCT_ROOT",
            RootCategory::NounRootForVerb => "NOUN_ROOT_FOR_VERB",
            RootCategory::OtherMismatch => "OTHER_MISMATCH",
            RootCategory::NoRoot => "NO_ROOT",
            RootCategory::MultiRoot => "MULTI_ROOT",
        }
    }
}

impl std::fmt::Display for RootCategory {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Sentence counts per root category; they sum to the number of compared
/// sentence pairs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RootReport {
    pub per_category: BTreeMap<RootCategory, usize>,
    pub sentence_pairs: usize,
}

/// Categorize every sentence pair by its predicted root.
///
/// A prediction with no `head = 0` token is `NoRoot`, with several
/// `MultiRoot`. Otherwise the predicted root token is compared to gold's:
/// same token → `Correct`; punctuation in gold (UPOS `PUNCT` or relation
/// `punct`) → `PunctRoot`; a gold NOUN/PROPN/PRON where the gold root is
/// VERB/AUX → `NounRootForVerb`; anything else → `OtherMismatch`. UPOS is
/// never inferred: without it the nominal-for-verbal case degrades to
/// `OtherMismatch`.
pub fn root_analysis(predicted: &Treebank, gold: &Treebank) -> Result<RootReport, EvalError> {
    ensure_aligned(predicted, gold)?;
    let mut per_category: BTreeMap<RootCategory, usize> =
        RootCategory::ALL.into_iter().map(|c| (c, 0)).collect();
    let mut sentence_pairs = 0usize;

    for (idx, (p_sentence, g_sentence)) in predicted
        .sentences
        .iter()
        .zip(gold.sentences.iter())
        .enumerate()
    {
        if g_sentence.is_empty() {
            continue;
        }
        let gold_violations = validate(g_sentence);
        if !gold_violations.is_empty() {
            return Err(EvalError::InvalidGold {
                index: idx,
                id: g_sentence.effective_id(idx),
                detail: gold_violations
                    .iter()
                    .map(|v| v.kind.to_string())
                    .collect::<Vec<_>>()
                    .join(", "),
            });
        }
        sentence_pairs += 1;
        let category = categorize_root(p_sentence, g_sentence);
        *per_category.get_mut(&category).unwrap() += 1;
    }

    Ok(RootReport {
        per_category,
        sentence_pairs,
    })
}

fn categorize_root(predicted: &Sentence, gold: &Sentence) -> RootCategory {
    let predicted_roots: Vec<usize> = predicted
        .tokens
        .iter()
        .filter(|t| t.head == 0)
        .map(|t| t.id)
        .collect();
    let root = match predicted_roots.as_slice() {
        [] => return RootCategory::NoRoot,
        [r] => *r,
        _ => return RootCategory::MultiRoot,
    };
    let gold_root = gold
        .tokens
        .iter()
        .find(|t| t.head == 0)
        .expect("gold sentence was validated")
        .id;
    if root == gold_root {
        return RootCategory::Correct;
    }
    let at_root = &gold.tokens[root - 1];
    if at_root.upos == "PUNCT" || normalize_deprel(&at_root.deprel) == "punct" {
        return RootCategory::PunctRoot;
    }
    let at_gold_root = &gold.tokens[gold_root - 1];
    let nominal = matches!(at_root.upos.as_str(), "NOUN" | "PROPN" | "PRON");
    let verbal = matches!(at_gold_root.upos.as_str(), "VERB" | "AUX");
    if nominal && verbal {
        return RootCategory::NounRootForVerb;
    }
    RootCategory::OtherMismatch
}
