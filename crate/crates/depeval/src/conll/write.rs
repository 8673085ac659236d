use super::{Dialect, Token, Treebank};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum WriteError {
    #[error("sentence {sentence}, token {token}: {column} column contains a tab or newline")]
    IllegalField {
        sentence: usize,
        token: usize,
        column: &'static str,
    },
}

/// Serialize a treebank back to CoNLL text.
///
/// Comments are emitted before their sentence, rows are tab-separated with
/// the dialect's column count (10 unless the sentence was read as CoNLL-X),
/// and each sentence is followed by one blank line. Reading a violation-free
/// file and writing it reproduces the input byte-for-byte apart from
/// trailing-whitespace normalization.
pub fn write_conll(treebank: &Treebank) -> Result<String, WriteError> {
    let mut out = String::new();
    for (s_idx, sentence) in treebank.sentences.iter().enumerate() {
        for comment in &sentence.comments {
            out.push_str(comment);
            out.push('\n');
        }
        for token in &sentence.tokens {
            check_token(token, s_idx)?;
            let conllx = sentence.dialect == Some(Dialect::Conllx);
            let id = token.id.to_string();
            let head = token.head.to_string();
            let mut fields = vec![
                id.as_str(),
                &token.form,
                &token.lemma,
                &token.upos,
                &token.xpos,
                &token.feats,
                head.as_str(),
                &token.deprel,
            ];
            if !conllx {
                fields.push(&token.deps);
                fields.push(&token.misc);
            }
            out.push_str(&fields.join("\t"));
            out.push('\n');
        }
        out.push('\n');
    }
    Ok(out)
}

fn check_token(token: &Token, sentence: usize) -> Result<(), WriteError> {
    let columns: [(&str, &'static str); 8] = [
        (&token.form, "FORM"),
        (&token.lemma, "LEMMA"),
        (&token.upos, "UPOS"),
        (&token.xpos, "XPOS"),
        (&token.feats, "FEATS"),
        (&token.deprel, "DEPREL"),
        (&token.deps, "DEPS"),
        (&token.misc, "MISC"),
    ];
    for (value, column) in columns {
        if value.contains('\t') || value.contains('\n') {
            return Err(WriteError::IllegalField {
                sentence,
                token: token.id,
                column,
            });
        }
    }
    Ok(())
}
