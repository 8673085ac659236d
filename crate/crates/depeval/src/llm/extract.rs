//! Extraction of candidate CoNLL blocks from free-form model responses.

use crate::conll::{read_conll, ReadMode, Sentence, Violation, ViolationKind};

/// Pull candidate CoNLL blocks out of a raw model response.
///
/// Code fences are stripped and prose is dropped. A block is a maximal run
/// of consecutive non-blank lines in which at least 80% of the non-comment
/// lines look like CoNLL rows: 7 or more tab- or multi-space-separated
/// fields with an integer first field. Multi-space rows (models often emit
/// aligned columns) are normalized to tabs; `#` comment lines ride along;
/// the tolerated non-row lines stay verbatim so downstream validation still
/// sees them. All qualifying blocks are returned — several blocks for one
/// sentence is exactly the duplicate-output signal the sanitizer looks for.
/// An empty result means the response contained no parse at all.
pub fn extract_conll(raw: &str) -> Vec<String> {
    let mut blocks = Vec::new();
    let mut run: Vec<String> = Vec::new();
    let mut rows = 0usize;
    let mut junk = 0usize;

    let mut close = |run: &mut Vec<String>, rows: &mut usize, junk: &mut usize| {
        if *rows > 0 {
            blocks.push(run.join("\n"));
        }
        run.clear();
        *rows = 0;
        *junk = 0;
    };

    for line in raw.lines() {
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.trim().is_empty() || line.trim_start().starts_with("```") {
            close(&mut run, &mut rows, &mut junk);
            continue;
        }
        if line.starts_with('#') {
            run.push(line.to_string());
            continue;
        }
        match conll_fields(line) {
            Some(fields) => {
                rows += 1;
                run.push(fields.join("\t"));
            }
            None => {
                // Tolerate stray lines inside a table as long as real rows
                // keep the upper hand.
                if rows > 0 && (rows as f64) / ((rows + junk + 1) as f64) >= 0.8 {
                    junk += 1;
                    run.push(line.to_string());
                } else {
                    close(&mut run, &mut rows, &mut junk);
                }
            }
        }
    }
    close(&mut run, &mut rows, &mut junk);
    blocks
}

/// Split a line into CoNLL fields if it plausibly is one: at least 7 fields
/// separated by tabs or by runs of 2+ spaces, first field an integer.
fn conll_fields(line: &str) -> Option<Vec<String>> {
    let by_tab: Vec<&str> = line.split('\t').collect();
    let fields: Vec<String> = if by_tab.len() >= 7 {
        by_tab.into_iter().map(|f| f.trim().to_string()).collect()
    } else {
        split_multi_space(line)
    };
    if fields.len() < 7 {
        return None;
    }
    fields[0].parse::<usize>().ok()?;
    Some(fields)
}

fn split_multi_space(line: &str) -> Vec<String> {
    let mut fields = Vec::new();
    let mut current = String::new();
    let mut spaces = 0usize;
    for ch in line.trim().chars() {
        if ch == ' ' {
            spaces += 1;
            continue;
        }
        if spaces >= 2 && !current.is_empty() {
            fields.push(std::mem::take(&mut current));
        } else if spaces == 1 {
            current.push(' ');
        }
        spaces = 0;
        current.push(ch);
    }
    if !current.is_empty() {
        fields.push(current);
    }
    fields
}

/// Fold extracted blocks into one predicted sentence for a source sentence.
///
/// Blocks are concatenated row-wise and parsed leniently, so a duplicated
/// table surfaces as doubled forms rather than being lost. No block at all
/// yields an empty prediction carrying a `COLUMN_COUNT` violation — the
/// response had no recognizable columns — which the sanitizer classifies as
/// format disruption.
pub fn blocks_to_prediction(blocks: &[String], source_id: &str) -> (Sentence, Vec<Violation>) {
    let rows: Vec<&str> = blocks
        .iter()
        .flat_map(|b| b.lines())
        .filter(|l| !l.starts_with('#'))
        .collect();

    if rows.is_empty() {
        let sentence = Sentence {
            tokens: Vec::new(),
            comments: vec![format!("# sent_id = {source_id}")],
            source_id: Some(source_id.to_string()),
            dialect: None,
        };
        let violation = Violation {
            sentence_index: 0,
            kind: ViolationKind::ColumnCount,
            detail: "no CoNLL block extracted from response".to_string(),
        };
        return (sentence, vec![violation]);
    }

    let (bank, mut violations) = read_conll(&rows.join("\n"), ReadMode::Lenient);
    let mut sentence = bank.sentences.into_iter().next().unwrap_or_default();
    for v in &mut violations {
        v.sentence_index = 0;
    }
    sentence.comments = vec![format!("# sent_id = {source_id}")];
    sentence.source_id = Some(source_id.to_string());
    (sentence, violations)
}
