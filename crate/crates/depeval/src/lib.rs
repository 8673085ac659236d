//! Toolkit for evaluating machine-produced dependency parses.
//!
//! The crate covers the full path from raw model output to evaluation
//! numbers:
//!
//! - [`conll`] — data model, reader, writer, and validator for CoNLL-U /
//!   CoNLL-X dependency annotations.
//! - [`sanitize`] — classify predicted parses whose token sequence cannot
//!   be aligned one-to-one with the gold tokenization, and filter them out.
//! - [`treedist`] — ordered tree edit distance between dependency trees and
//!   the derived DTED similarity score in `[0, 1]`.
//! - [`eval`] — UAS/LAS attachment scoring, label confusion ranking, and
//!   root error categorization.
//! - [`crosslingual`] — selection of structurally similar sentence pairs
//!   across two treebanks and cross-lingual consistency summaries.
//! - [`llm`] — prompt rendering, a cached chat-completions client, and
//!   extraction of CoNLL blocks from free-form model responses.

pub mod conll;
pub mod crosslingual;
pub mod eval;
pub mod llm;
pub mod sanitize;
pub mod treedist;
