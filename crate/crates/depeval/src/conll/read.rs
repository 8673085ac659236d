use super::{validate, Dialect, Sentence, Token, Treebank, Violation, ViolationKind, EMPTY_MARKER};

/// How much of a malformed input to keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReadMode {
    /// Drop every sentence that carries a violation; the violation is still
    /// recorded against the sentence's block index.
    Strict,
    /// Keep sentences with recoverable issues (skipped multiword rows,
    /// renumbered ids, padded columns, ...) and record the violations anyway.
    Lenient,
}

/// Parse CoNLL text into a treebank plus everything that was wrong with it.
///
/// Sentences are blank-line separated; lines starting with `#` are comments
/// and attach to their block's sentence (the writer emits them before the
/// rows); rows are tab-separated with 10 (CoNLL-U) or 8 (CoNLL-X) columns.
/// Nothing is fatal: all problems surface as [`Violation`]s, and empty
/// input yields an empty treebank. `sentence_index` on each violation is
/// the 0-based block index in the input, so in `Strict` mode the sentence
/// count of the result plus the number of distinct dropped blocks equals
/// the block count of the input.
pub fn read_conll(text: &str, mode: ReadMode) -> (Treebank, Vec<Violation>) {
    let mut sentences = Vec::new();
    let mut violations = Vec::new();

    let mut block_index = 0usize;
    let mut block: Vec<&str> = Vec::new();
    let mut lines = text.lines();
    loop {
        let line = lines.next();
        let trimmed = line.map(|l| l.strip_suffix('\r').unwrap_or(l));
        match trimmed {
            Some(l) if !l.trim().is_empty() => block.push(l),
            _ => {
                if !block.is_empty() {
                    let (sentence, mut block_violations) = parse_block(&block);
                    for v in &mut block_violations {
                        v.sentence_index = block_index;
                    }
                    let keep = match mode {
                        ReadMode::Strict => block_violations.is_empty(),
                        ReadMode::Lenient => true,
                    };
                    if keep {
                        sentences.push(sentence);
                    }
                    violations.extend(block_violations);
                    block.clear();
                    block_index += 1;
                }
                if line.is_none() {
                    break;
                }
            }
        }
    }

    (Treebank::from_sentences(sentences), violations)
}

fn parse_block(lines: &[&str]) -> (Sentence, Vec<Violation>) {
    let mut comments = Vec::new();
    let mut tokens: Vec<Token> = Vec::new();
    let mut original_ids: Vec<String> = Vec::new();
    let mut violations = Vec::new();
    let mut dialect = None;
    let mut push = |kind: ViolationKind, detail: String| {
        violations.push(Violation {
            sentence_index: 0,
            kind,
            detail,
        });
    };

    for line in lines {
        if line.starts_with('#') {
            comments.push(line.to_string());
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let padded: [&str; 10] = match fields.len() {
            10 => {
                dialect = Some(dialect.unwrap_or(Dialect::Conllu));
                fields.clone().try_into().unwrap()
            }
            8 => {
                // CoNLL-X: id form lemma cpostag postag feats head deprel.
                dialect = Some(Dialect::Conllx);
                [
                    fields[0],
                    fields[1],
                    fields[2],
                    fields[3],
                    fields[4],
                    fields[5],
                    fields[6],
                    fields[7],
                    EMPTY_MARKER,
                    EMPTY_MARKER,
                ]
            }
            n => {
                push(
                    ViolationKind::ColumnCount,
                    format!("row {:?} has {} columns, expected 10 or 8", line, n),
                );
                continue;
            }
        };

        let id_field = padded[0];
        let id: usize = match id_field.parse() {
            Ok(id) => id,
            Err(_) => {
                let what = if id_field.contains('-') {
                    "multiword token range"
                } else if id_field.contains('.') {
                    "empty node"
                } else {
                    "non-integer id"
                };
                push(
                    ViolationKind::NonIntegerField,
                    format!("{what} {id_field:?} skipped"),
                );
                continue;
            }
        };

        let form = padded[1];
        if form.is_empty() {
            push(
                ViolationKind::ColumnCount,
                format!("row with id {id_field} has an empty FORM column"),
            );
        }

        let head: usize = match padded[6].parse() {
            Ok(h) => h,
            Err(_) => {
                push(
                    ViolationKind::NonIntegerField,
                    format!("row {id_field}: head {:?} is not an integer", padded[6]),
                );
                0
            }
        };

        original_ids.push(id_field.to_string());
        tokens.push(Token {
            id,
            form: form.to_string(),
            lemma: padded[2].to_string(),
            upos: padded[3].to_string(),
            xpos: padded[4].to_string(),
            feats: padded[5].to_string(),
            head,
            deprel: padded[7].to_string(),
            deps: padded[8].to_string(),
            misc: padded[9].to_string(),
        });
    }

    // Ids must be exactly 1..n. Renumber positionally so the Sentence
    // invariant holds structurally; the violation keeps the original ids.
    let misnumbered: Vec<String> = tokens
        .iter()
        .enumerate()
        .filter(|(pos, t)| t.id != pos + 1)
        .map(|(pos, _)| format!("{} at position {}", original_ids[pos], pos + 1))
        .collect();
    if !misnumbered.is_empty() {
        push(
            ViolationKind::IdGap,
            format!("ids are not 1..n: {}", misnumbered.join(", ")),
        );
        for (pos, token) in tokens.iter_mut().enumerate() {
            token.id = pos + 1;
        }
    }

    let source_id = comments.iter().find_map(|c| {
        let body = c.trim_start_matches('#').trim();
        let (key, value) = body.split_once('=')?;
        if key.trim() == "sent_id" {
            Some(value.trim().to_string())
        } else {
            None
        }
    });

    let sentence = Sentence {
        tokens,
        comments,
        source_id,
        dialect,
    };
    violations.extend(validate(&sentence));
    (sentence, violations)
}
