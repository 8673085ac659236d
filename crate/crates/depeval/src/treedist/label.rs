//! Node labeling strategies for dependency trees.
//!
//! Each strategy decides what string a tree node carries into the edit
//! distance, and therefore what "relabel" means. Strategies are registered
//! by name so runtime configuration (`--label-mode`) can select one.

use crate::conll::{normalize_deprel, Token};
use serde::{Deserialize, Serialize};

/// Which node labeling the edit distance compares.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelMode {
    /// All non-root labels compare equal: distance depends only on shape.
    Structural,
    /// Nodes labeled with their incoming relation (case-folded, subtypes
    /// kept).
    Deprel,
    /// Nodes labeled with their surface form.
    Form,
}

impl LabelMode {
    pub const ALL: [LabelMode; 3] = [LabelMode::Structural, LabelMode::Deprel, LabelMode::Form];

    pub fn name(self) -> &'static str {
        self.labeler().name()
    }

    /// The registered strategy behind this mode.
    pub fn labeler(self) -> &'static dyn NodeLabeler {
        match self {
            LabelMode::Structural => &StructuralLabeler,
            LabelMode::Deprel => &DeprelLabeler,
            LabelMode::Form => &FormLabeler,
        }
    }
}

impl std::fmt::Display for LabelMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for LabelMode {
    type Err = UnknownLabelMode;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        LabelMode::ALL
            .into_iter()
            .find(|mode| mode.name() == s)
            .ok_or_else(|| UnknownLabelMode {
                given: s.to_string(),
            })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown label mode {given:?}; registered modes: {}", registered_names().join(", "))]
pub struct UnknownLabelMode {
    pub given: String,
}

/// A node labeling strategy.
pub trait NodeLabeler: Send + Sync {
    /// Registry name, as accepted on the command line.
    fn name(&self) -> &'static str;

    /// Label carried by the node for this token.
    fn token_label(&self, token: &Token) -> String;
}

struct StructuralLabeler;

impl NodeLabeler for StructuralLabeler {
    fn name(&self) -> &'static str {
        "structural"
    }

    fn token_label(&self, _token: &Token) -> String {
        "*".to_string()
    }
}

struct DeprelLabeler;

impl NodeLabeler for DeprelLabeler {
    fn name(&self) -> &'static str {
        "deprel"
    }

    fn token_label(&self, token: &Token) -> String {
        normalize_deprel(&token.deprel)
    }
}

struct FormLabeler;

impl NodeLabeler for FormLabeler {
    fn name(&self) -> &'static str {
        "form"
    }

    fn token_label(&self, token: &Token) -> String {
        token.form.clone()
    }
}

/// All registered strategies, in declaration order.
pub fn labelers() -> [&'static dyn NodeLabeler; 3] {
    [&StructuralLabeler, &DeprelLabeler, &FormLabeler]
}

/// Look a strategy up by its registry name.
pub fn labeler_by_name(name: &str) -> Option<&'static dyn NodeLabeler> {
    labelers().into_iter().find(|l| l.name() == name)
}

/// Names accepted by [`labeler_by_name`], for error messages and help text.
pub fn registered_names() -> Vec<&'static str> {
    labelers().iter().map(|l| l.name()).collect()
}
