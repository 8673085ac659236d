//! Classification and filtering of predicted parses whose surface forms
//! cannot be aligned one-to-one with the gold tokenization.
//!
//! Every predicted sentence gets exactly one [`DefectClass`], decided by a
//! fixed precedence so reports are reproducible. Only `Aligned` sentences
//! survive [`sanitize`]; nothing is repaired.

use crate::conll::{Sentence, Treebank, Violation, ViolationKind};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use thiserror::Error;

/// Alignment outcome for one predicted sentence.
///
/// Classification precedence (first match wins):
/// 1. the prediction carried `COLUMN_COUNT` / `NON_INTEGER_FIELD` parse
///    violations → `FormatDisruption`;
/// 2. the predicted forms contain two or more non-overlapping copies of the
///    full gold form sequence → `MultipleOutputs`;
/// 3. forms equal gold exactly → `Aligned`;
/// 4. the character concatenation matches gold but token boundaries differ
///    → `SegmentationDisruption`;
/// 5. the predicted forms are a proper subsequence of gold →
///    `WordFiltering` when every missing form is in the sensitive lexicon,
///    otherwise `WordOmission`;
/// 6. same multiset of forms in a different order → `WordScrambling`;
/// 7. anything else → `FormatDisruption`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DefectClass {
    FormatDisruption,
    MultipleOutputs,
    WordOmission,
    WordFiltering,
    SegmentationDisruption,
    WordScrambling,
    Aligned,
}

impl DefectClass {
    pub const ALL: [DefectClass; 7] = [
        DefectClass::FormatDisruption,
        DefectClass::MultipleOutputs,
        DefectClass::WordOmission,
        DefectClass::WordFiltering,
        DefectClass::SegmentationDisruption,
        DefectClass::WordScrambling,
        DefectClass::Aligned,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DefectClass::FormatDisruption => "format_disruption",
            DefectClass::MultipleOutputs => "multiple_outputs",
            DefectClass::WordOmission => "word_omission",
            DefectClass::WordFiltering => "word_filtering",
            DefectClass::SegmentationDisruption => "segmentation_disruption",
            DefectClass::WordScrambling => "word_scrambling",
            DefectClass::Aligned => "aligned",
        }
    }
}

impl std::fmt::Display for DefectClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Forms whose absence counts as policy filtering rather than omission.
#[derive(Debug, Clone, Default)]
pub struct SensitiveLexicon(BTreeSet<String>);

impl SensitiveLexicon {
    pub fn empty() -> Self {
        SensitiveLexicon::default()
    }

    /// One form per line; blank lines ignored.
    pub fn from_text(text: &str) -> Self {
        SensitiveLexicon(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .map(str::to_string)
                .collect(),
        )
    }

    pub fn contains(&self, form: &str) -> bool {
        self.0.contains(form)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Classify a predicted sentence against its gold counterpart.
///
/// `predicted_violations` are the parse-time violations recorded for the
/// predicted sentence. Forms are compared as exact bytes.
pub fn align_forms(
    predicted: &Sentence,
    predicted_violations: &[Violation],
    gold: &Sentence,
    lexicon: &SensitiveLexicon,
) -> DefectClass {
    if predicted_violations.iter().any(|v| {
        matches!(
            v.kind,
            ViolationKind::ColumnCount | ViolationKind::NonIntegerField
        )
    }) {
        return DefectClass::FormatDisruption;
    }

    let pred = predicted.forms();
    let gold_forms = gold.forms();

    if !gold_forms.is_empty() && occurrences(&pred, &gold_forms) >= 2 {
        return DefectClass::MultipleOutputs;
    }

    if pred == gold_forms {
        return DefectClass::Aligned;
    }

    if pred.concat() == gold_forms.concat() {
        return DefectClass::SegmentationDisruption;
    }

    if pred.len() < gold_forms.len() && is_subsequence(&pred, &gold_forms) {
        let missing = missing_forms(&pred, &gold_forms);
        if !missing.is_empty() && missing.iter().all(|f| lexicon.contains(f)) {
            return DefectClass::WordFiltering;
        }
        return DefectClass::WordOmission;
    }

    if multiset(&pred) == multiset(&gold_forms) {
        return DefectClass::WordScrambling;
    }

    DefectClass::FormatDisruption
}

/// Non-overlapping occurrences of `needle` in `haystack`, scanned left to
/// right.
fn occurrences(haystack: &[&str], needle: &[&str]) -> usize {
    if needle.is_empty() {
        return 0;
    }
    let mut count = 0;
    let mut i = 0;
    while i + needle.len() <= haystack.len() {
        if &haystack[i..i + needle.len()] == needle {
            count += 1;
            i += needle.len();
        } else {
            i += 1;
        }
    }
    count
}

fn is_subsequence(sub: &[&str], of: &[&str]) -> bool {
    let mut it = of.iter();
    sub.iter().all(|s| it.any(|o| o == s))
}

/// Multiset difference `gold - pred`, as the set of form values that lost
/// at least one occurrence.
fn missing_forms<'a>(pred: &[&'a str], gold: &[&'a str]) -> Vec<&'a str> {
    let mut counts = multiset(gold);
    for form in pred {
        if let Some(c) = counts.get_mut(form) {
            *c -= 1;
        }
    }
    counts
        .into_iter()
        .filter(|&(_, c)| c > 0)
        .map(|(f, _)| f)
        .collect()
}

fn multiset<'a>(forms: &[&'a str]) -> BTreeMap<&'a str, usize> {
    let mut counts = BTreeMap::new();
    for &form in forms {
        *counts.entry(form).or_insert(0usize) += 1;
    }
    counts
}

/// Per-sentence classification plus corpus totals.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SanitizeReport {
    pub retained: usize,
    pub dropped: usize,
    #[serde(rename = "per_class")]
    pub per_class_counts: BTreeMap<DefectClass, usize>,
    #[serde(rename = "sentences")]
    pub per_sentence: Vec<SentenceOutcome>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceOutcome {
    pub id: String,
    pub class: DefectClass,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SanitizeError {
    #[error("duplicate source id {id:?} in gold treebank")]
    DuplicateGoldId { id: String },
}

/// Filter a predicted treebank down to the sentences that align with gold.
///
/// Sentences are matched by source id (positional `#<index>` ids when a
/// file carries no `sent_id` comments). The returned treebank holds only
/// `Aligned` predictions, in gold order, tokens untouched. Gold sentences
/// with no prediction are counted as dropped `WordOmission`; predicted
/// sentences matching no gold id, or repeating an already-consumed id, are
/// counted as `FormatDisruption`.
pub fn sanitize(
    predicted: &Treebank,
    predicted_violations: &[Violation],
    gold: &Treebank,
    lexicon: &SensitiveLexicon,
) -> Result<(Treebank, SanitizeReport), SanitizeError> {
    let mut gold_ids = BTreeSet::new();
    for (idx, sentence) in gold.sentences.iter().enumerate() {
        if !gold_ids.insert(sentence.effective_id(idx)) {
            return Err(SanitizeError::DuplicateGoldId {
                id: sentence.effective_id(idx),
            });
        }
    }

    let mut violations_by_sentence: HashMap<usize, Vec<&Violation>> = HashMap::new();
    for violation in predicted_violations {
        violations_by_sentence
            .entry(violation.sentence_index)
            .or_default()
            .push(violation);
    }

    // First prediction per gold id wins; everything else is stray.
    let mut prediction_for: HashMap<String, usize> = HashMap::new();
    let mut strays: Vec<usize> = Vec::new();
    for (idx, sentence) in predicted.sentences.iter().enumerate() {
        let id = sentence.effective_id(idx);
        if gold_ids.contains(&id) && !prediction_for.contains_key(&id) {
            prediction_for.insert(id, idx);
        } else {
            strays.push(idx);
        }
    }

    let mut per_sentence = Vec::new();
    let mut retained_sentences = Vec::new();
    for (gold_idx, gold_sentence) in gold.sentences.iter().enumerate() {
        let id = gold_sentence.effective_id(gold_idx);
        let class = match prediction_for.get(&id) {
            Some(&pred_idx) => {
                let violations: Vec<Violation> = violations_by_sentence
                    .get(&pred_idx)
                    .map(|vs| vs.iter().map(|&v| v.clone()).collect())
                    .unwrap_or_default();
                let class = align_forms(
                    &predicted.sentences[pred_idx],
                    &violations,
                    gold_sentence,
                    lexicon,
                );
                if class == DefectClass::Aligned {
                    retained_sentences.push(predicted.sentences[pred_idx].clone());
                }
                class
            }
            None => DefectClass::WordOmission,
        };
        per_sentence.push(SentenceOutcome { id, class });
    }
    for &idx in &strays {
        per_sentence.push(SentenceOutcome {
            id: predicted.sentences[idx].effective_id(idx),
            class: DefectClass::FormatDisruption,
        });
    }

    let mut per_class_counts = BTreeMap::new();
    for outcome in &per_sentence {
        *per_class_counts.entry(outcome.class).or_insert(0usize) += 1;
    }
    let retained = retained_sentences.len();
    let dropped = per_sentence.len() - retained;

    let bank = Treebank {
        sentences: retained_sentences,
        language_tag: predicted.language_tag.clone(),
        name: predicted.name.clone(),
    };
    Ok((
        bank,
        SanitizeReport {
            retained,
            dropped,
            per_class_counts,
            per_sentence,
        },
    ))
}
