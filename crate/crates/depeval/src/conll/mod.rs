//! Data model, reader, writer, and validator for CoNLL dependency annotations.
//!
//! Both 10-column CoNLL-U and 8-column CoNLL-X rows are accepted and
//! normalized to the 10-field [`Token`]; the originating dialect is recorded
//! per sentence so files round-trip byte-for-byte.

mod read;
mod write;

pub use read::{read_conll, ReadMode};
pub use write::{write_conll, WriteError};

use serde::{Deserialize, Serialize};

/// The empty-field marker used by both CoNLL dialects.
pub const EMPTY_MARKER: &str = "_";

/// Column layout a sentence was read from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dialect {
    /// 10-column CoNLL-U rows.
    Conllu,
    /// 8-column CoNLL-X rows (PHEAD/PDEPREL omitted).
    Conllx,
}

/// One CoNLL row: a surface form plus its head index and dependency relation.
///
/// `id` is the token's 1-based position in its sentence; `head` is the id of
/// the governing token, with 0 denoting the root. String fields hold the
/// column text verbatim, `"_"` for absent values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub id: usize,
    pub form: String,
    pub lemma: String,
    pub upos: String,
    pub xpos: String,
    pub feats: String,
    pub head: usize,
    pub deprel: String,
    pub deps: String,
    pub misc: String,
}

impl Token {
    /// A token with only position, form, head, and relation set; the
    /// remaining columns carry the empty marker.
    pub fn new(id: usize, form: &str, head: usize, deprel: &str) -> Self {
        Token {
            id,
            form: form.to_string(),
            lemma: EMPTY_MARKER.to_string(),
            upos: EMPTY_MARKER.to_string(),
            xpos: EMPTY_MARKER.to_string(),
            feats: EMPTY_MARKER.to_string(),
            head,
            deprel: deprel.to_string(),
            deps: EMPTY_MARKER.to_string(),
            misc: EMPTY_MARKER.to_string(),
        }
    }

    /// Whether the UPOS column is absent (`"_"` or empty).
    pub fn upos_absent(&self) -> bool {
        self.upos.is_empty() || self.upos == EMPTY_MARKER
    }
}

/// An ordered token list plus its metadata lines.
///
/// `source_id` is taken from a `# sent_id = ...` comment when present.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Sentence {
    pub tokens: Vec<Token>,
    pub comments: Vec<String>,
    pub source_id: Option<String>,
    pub dialect: Option<Dialect>,
}

impl Sentence {
    /// Build a sentence from `(form, head, deprel)` triples, ids assigned
    /// positionally.
    pub fn from_rows(rows: &[(&str, usize, &str)]) -> Self {
        let tokens = rows
            .iter()
            .enumerate()
            .map(|(i, (form, head, deprel))| Token::new(i + 1, form, *head, deprel))
            .collect();
        Sentence {
            tokens,
            ..Sentence::default()
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Surface forms in token order.
    pub fn forms(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.form.as_str()).collect()
    }

    /// Identifier used to match sentences across treebanks: the recorded
    /// `sent_id` when present, otherwise a positional fallback of the form
    /// `#<index>`.
    pub fn effective_id(&self, index: usize) -> String {
        match &self.source_id {
            Some(id) => id.clone(),
            None => format!("#{index}"),
        }
    }
}

/// An ordered collection of sentences.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Treebank {
    pub sentences: Vec<Sentence>,
    pub language_tag: String,
    pub name: String,
}

impl Treebank {
    pub fn from_sentences(sentences: Vec<Sentence>) -> Self {
        Treebank {
            sentences,
            ..Treebank::default()
        }
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }
}

/// Structural illegality found in a sentence.
///
/// `sentence_index` is the 0-based index of the blank-line-separated block
/// the sentence came from, so dropped sentences stay addressable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub sentence_index: usize,
    pub kind: ViolationKind,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ViolationKind {
    HeadOutOfRange,
    SelfHead,
    NoRoot,
    MultiRoot,
    Cycle,
    IdGap,
    ColumnCount,
    NonIntegerField,
}

impl std::fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ViolationKind::HeadOutOfRange => "HEAD_OUT_OF_RANGE",
            ViolationKind::SelfHead => "SELF_HEAD",
            ViolationKind::NoRoot => "NO_ROOT",
            ViolationKind::MultiRoot => "MULTI_ROOT",
            ViolationKind::Cycle => "CYCLE",
            ViolationKind::IdGap => "ID_GAP",
            ViolationKind::ColumnCount => "COLUMN_COUNT",
            ViolationKind::NonIntegerField => "NON_INTEGER_FIELD",
        };
        f.write_str(s)
    }
}

/// Check every head-structure invariant of a sentence.
///
/// An empty result certifies that the head array encodes a single rooted
/// tree: ids are exactly `1..n`, heads lie in `[0, n]` with `head != id`,
/// exactly one token has head 0, and every head chain reaches it.
///
/// A sentence with no tokens (e.g. a comment-only block) is vacuously valid.
/// `sentence_index` on the returned violations is 0; callers that know the
/// sentence's position remap it.
pub fn validate(sentence: &Sentence) -> Vec<Violation> {
    let n = sentence.tokens.len();
    let mut violations = Vec::new();
    let mut push = |kind: ViolationKind, detail: String| {
        violations.push(Violation {
            sentence_index: 0,
            kind,
            detail,
        });
    };

    if n == 0 {
        return violations;
    }

    for (pos, token) in sentence.tokens.iter().enumerate() {
        if token.id != pos + 1 {
            push(
                ViolationKind::IdGap,
                format!("token at position {} has id {}", pos + 1, token.id),
            );
        }
    }

    for token in &sentence.tokens {
        if token.head > n {
            push(
                ViolationKind::HeadOutOfRange,
                format!(
                    "token {} ({:?}) has head {} outside [0, {}]",
                    token.id, token.form, token.head, n
                ),
            );
        } else if token.head == token.id {
            push(
                ViolationKind::SelfHead,
                format!("token {} ({:?}) is its own head", token.id, token.form),
            );
        }
    }

    let roots: Vec<usize> = sentence
        .tokens
        .iter()
        .filter(|t| t.head == 0)
        .map(|t| t.id)
        .collect();
    match roots.len() {
        0 => push(ViolationKind::NoRoot, "no token has head 0".to_string()),
        1 => {}
        _ => push(
            ViolationKind::MultiRoot,
            format!("tokens {roots:?} all have head 0"),
        ),
    }

    // Head-chain walk: 0 = unvisited, 1 = on the current chain,
    // 2 = reaches the root (or a broken head), 3 = part of a cycle.
    let mut state = vec![0u8; n + 1];
    state[0] = 2;
    let mut cyclic: Vec<usize> = Vec::new();
    for start in 1..=n {
        if state[start] != 0 {
            continue;
        }
        let mut chain = Vec::new();
        let mut cur = start;
        loop {
            if state[cur] == 1 {
                // Revisited a node from this walk: everything from the first
                // occurrence of `cur` onward loops.
                let loop_start = chain.iter().position(|&c| c == cur).unwrap();
                for &c in &chain[loop_start..] {
                    state[c] = 3;
                    cyclic.push(c);
                }
                for &c in &chain[..loop_start] {
                    state[c] = 3;
                    cyclic.push(c);
                }
                break;
            }
            if state[cur] == 2 || state[cur] == 3 {
                let reached = state[cur];
                for &c in &chain {
                    state[c] = reached;
                    if reached == 3 {
                        cyclic.push(c);
                    }
                }
                break;
            }
            state[cur] = 1;
            chain.push(cur);
            let head = sentence.tokens[cur - 1].head;
            if head > n || head == cur {
                // Broken link, reported above; the chain ends here without
                // forming a cycle.
                for &c in &chain {
                    state[c] = 2;
                }
                break;
            }
            cur = head;
        }
    }
    if !cyclic.is_empty() {
        cyclic.sort_unstable();
        cyclic.dedup();
        push(
            ViolationKind::Cycle,
            format!("head chain from tokens {cyclic:?} never reaches 0"),
        );
    }

    violations
}

/// Normalize a dependency relation label for comparison: surrounding
/// whitespace stripped and case folded. Subtypes after `:` are kept.
pub fn normalize_deprel(label: &str) -> String {
    label.trim().to_lowercase()
}
