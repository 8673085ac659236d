//! Ordered tree edit distance between dependency trees and the DTED
//! similarity score derived from it.
//!
//! A sentence becomes a rooted ordered tree: one node per token plus a
//! synthetic root, children ordered by token index. [`edit_distance`] is the
//! minimum number of unit-cost node insertions, deletions, and relabelings
//! turning one tree into the other while respecting ancestor and sibling
//! order, computed with the keyroot/forest dynamic program of Zhang and
//! Shasha. [`dted`] normalizes it to a similarity in `[0, 1]`:
//! `1 - dist / max(|a|, |b|)`, sizes counting the synthetic root.

mod label;

pub use label::{
    labeler_by_name, labelers, registered_names, LabelMode, NodeLabeler, UnknownLabelMode,
};

use crate::conll::{validate, Sentence};
use serde::Serialize;
use thiserror::Error;

/// Label of the synthetic root node. The leading tab cannot occur in any
/// label derived from tab-separated input, so the root only ever matches
/// another root, in every mode.
pub const ROOT_LABEL: &str = "\t<root>";

#[derive(Debug, Error)]
pub enum TreeBuildError {
    #[error("sentence does not encode a rooted tree: {summary}")]
    InvalidSentence { summary: String },
    #[error("node {node} has head {head} outside the tree")]
    BadParent { node: usize, head: usize },
}

/// A rooted, ordered dependency tree.
///
/// Node 0 is the synthetic root; nodes `1..=n` follow token order and the
/// children of every node are ordered by token index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepTree {
    labels: Vec<String>,
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
}

impl DepTree {
    /// Build a tree directly from a head array (`heads[i]` is the head of
    /// node `i + 1`, 0 meaning the root) and per-token labels.
    pub fn from_heads(heads: &[usize], token_labels: &[&str]) -> Result<DepTree, TreeBuildError> {
        assert_eq!(heads.len(), token_labels.len());
        let n = heads.len();
        let mut labels = Vec::with_capacity(n + 1);
        labels.push(ROOT_LABEL.to_string());
        labels.extend(token_labels.iter().map(|l| l.to_string()));

        let mut parent = vec![None; n + 1];
        let mut children = vec![Vec::new(); n + 1];
        for (i, &head) in heads.iter().enumerate() {
            let node = i + 1;
            if head > n || head == node {
                return Err(TreeBuildError::BadParent { node, head });
            }
            parent[node] = Some(head);
            children[head].push(node);
        }
        let tree = DepTree {
            labels,
            parent,
            children,
        };
        // Every node must reach the root: a postorder over parent links
        // visits each node exactly once iff the structure is a tree.
        if tree.postorder().len() != n + 1 {
            return Err(TreeBuildError::InvalidSentence {
                summary: "head links contain a cycle".to_string(),
            });
        }
        Ok(tree)
    }

    /// Number of nodes including the synthetic root.
    pub fn size(&self) -> usize {
        self.labels.len()
    }

    pub fn label(&self, node: usize) -> &str {
        &self.labels[node]
    }

    pub fn children(&self, node: usize) -> &[usize] {
        &self.children[node]
    }

    pub fn parent(&self, node: usize) -> Option<usize> {
        self.parent[node]
    }

    /// Nodes in postorder, children before parents, left to right.
    fn postorder(&self) -> Vec<usize> {
        let mut order = Vec::with_capacity(self.size());
        // (node, next child index) stack; explicit to survive deep chains.
        let mut stack = vec![(0usize, 0usize)];
        while let Some((node, child_idx)) = stack.pop() {
            if child_idx < self.children[node].len() {
                stack.push((node, child_idx + 1));
                stack.push((self.children[node][child_idx], 0));
            } else {
                order.push(node);
            }
        }
        order
    }
}

/// Derive the comparison tree for a sentence under a labeling strategy.
///
/// One node per token plus the synthetic root; `parent(token) = head`,
/// children ordered by token index. Sentences carrying any validation
/// violation are rejected.
pub fn build_tree(sentence: &Sentence, mode: LabelMode) -> Result<DepTree, TreeBuildError> {
    let violations = validate(sentence);
    if !violations.is_empty() {
        let summary = violations
            .iter()
            .map(|v| v.kind.to_string())
            .collect::<Vec<_>>()
            .join(", ");
        return Err(TreeBuildError::InvalidSentence { summary });
    }
    let labeler = mode.labeler();
    let heads: Vec<usize> = sentence.tokens.iter().map(|t| t.head).collect();
    let labels: Vec<String> = sentence
        .tokens
        .iter()
        .map(|t| labeler.token_label(t))
        .collect();
    let label_refs: Vec<&str> = labels.iter().map(|s| s.as_str()).collect();
    DepTree::from_heads(&heads, &label_refs)
}

/// Postorder arrays the Zhang–Shasha program runs on, 1-based.
struct Postorder<'t> {
    /// `labels[i]` is the label of the node with postorder number `i`.
    labels: Vec<&'t str>,
    /// `lld[i]` is the postorder number of the leftmost leaf descendant of
    /// node `i`.
    lld: Vec<usize>,
    /// Postorder numbers whose leftmost leaf no later node shares, ascending.
    keyroots: Vec<usize>,
}

impl<'t> Postorder<'t> {
    fn new(tree: &'t DepTree) -> Self {
        let order = tree.postorder();
        let n = order.len();
        let mut number = vec![0usize; n];
        for (i, &node) in order.iter().enumerate() {
            number[node] = i + 1;
        }

        let mut labels = vec![""; n + 1];
        let mut lld = vec![0usize; n + 1];
        for (i, &node) in order.iter().enumerate() {
            let post = i + 1;
            labels[post] = tree.label(node);
            let mut leftmost = node;
            while let Some(&first) = tree.children(leftmost).first() {
                leftmost = first;
            }
            lld[post] = number[leftmost];
        }

        let mut keyroots = Vec::new();
        for i in 1..=n {
            if (i + 1..=n).all(|j| lld[j] != lld[i]) {
                keyroots.push(i);
            }
        }

        Postorder {
            labels,
            lld,
            keyroots,
        }
    }

    fn len(&self) -> usize {
        self.labels.len() - 1
    }
}

/// Minimum number of unit-cost node insertions, deletions, and relabelings
/// transforming `a` into `b`, preserving ancestor and sibling order.
pub fn edit_distance(a: &DepTree, b: &DepTree) -> usize {
    let pa = Postorder::new(a);
    let pb = Postorder::new(b);
    let n = pa.len();
    let m = pb.len();

    let mut tree_dist = vec![vec![0usize; m + 1]; n + 1];
    for &i in &pa.keyroots {
        for &j in &pb.keyroots {
            forest_distance(&pa, &pb, i, j, &mut tree_dist);
        }
    }
    tree_dist[n][m]
}

/// Fill `tree_dist[i1][j1]` for every subtree pair rooted in the keyroot
/// forests of `i` and `j`, per the Zhang–Shasha recurrence.
#[allow(clippy::needless_range_loop)]
fn forest_distance(
    pa: &Postorder,
    pb: &Postorder,
    i: usize,
    j: usize,
    tree_dist: &mut [Vec<usize>],
) {
    let li = pa.lld[i];
    let lj = pb.lld[j];
    // Forest prefixes are indexed relative to the keyroot's leftmost leaf:
    // postorder position x maps to x - li + 1, with 0 the empty forest.
    let width = i - li + 2;
    let height = j - lj + 2;
    let mut fd = vec![vec![0usize; height]; width];
    for di in 1..width {
        fd[di][0] = fd[di - 1][0] + 1;
    }
    for dj in 1..height {
        fd[0][dj] = fd[0][dj - 1] + 1;
    }

    for i1 in li..=i {
        let di = i1 - li + 1;
        for j1 in lj..=j {
            let dj = j1 - lj + 1;
            if pa.lld[i1] == li && pb.lld[j1] == lj {
                // Both prefixes are whole trees: the standard 3-way step.
                let relabel = usize::from(pa.labels[i1] != pb.labels[j1]);
                fd[di][dj] = (fd[di - 1][dj] + 1)
                    .min(fd[di][dj - 1] + 1)
                    .min(fd[di - 1][dj - 1] + relabel);
                tree_dist[i1][j1] = fd[di][dj];
            } else {
                // Split off the rightmost trees and reuse their distance.
                let di0 = pa.lld[i1] - li;
                let dj0 = pb.lld[j1] - lj;
                fd[di][dj] = (fd[di - 1][dj] + 1)
                    .min(fd[di][dj - 1] + 1)
                    .min(fd[di0][dj0] + tree_dist[i1][j1]);
            }
        }
    }
}

/// Edit distance normalized to a similarity score.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DtedScore {
    pub edit_dist: usize,
    pub size_a: usize,
    pub size_b: usize,
    /// `1 - edit_dist / max(size_a, size_b)`, floored at 0, in `[0, 1]`.
    pub score: f64,
}

/// Similarity between two dependency trees: `1 - dist / max(|a|, |b|)`.
///
/// The distance of trees sharing almost no structure can exceed the larger
/// size (it is only bounded by `|a| + |b| - 2`), so the score floors at 0 to
/// stay within `[0, 1]`. The raw distance and both sizes are kept in the
/// result.
pub fn dted(a: &DepTree, b: &DepTree) -> DtedScore {
    let edit_dist = edit_distance(a, b);
    let size_a = a.size();
    let size_b = b.size();
    let score = (1.0 - edit_dist as f64 / size_a.max(size_b) as f64).max(0.0);
    DtedScore {
        edit_dist,
        size_a,
        size_b,
        score,
    }
}
