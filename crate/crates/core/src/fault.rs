//! General errors: the fixed, task-agnostic fault classes raised while a
//! behavior tree executes, and the feedback templates rendered from them.

use std::fmt;

use serde::{Deserialize, Serialize};

const NOT_CLOSE_TEMPLATE: &str = include_str!("../assets/feedback/notClose.txt");
const NOT_VISIBLE_TEMPLATE: &str = include_str!("../assets/feedback/notVisible.txt");
const DOES_NOT_EXIST_TEMPLATE: &str = include_str!("../assets/feedback/doesNotExist.txt");

/// Placeholder substituted with the faulting target inside a feedback template.
pub const TARGET_PLACEHOLDER: &str = "{target}";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GeneralErrorKind {
    #[serde(rename = "notClose")]
    NotClose,
    #[serde(rename = "notVisible")]
    NotVisible,
    #[serde(rename = "doesNotExist")]
    DoesNotExist,
}

impl GeneralErrorKind {
    pub const ALL: [GeneralErrorKind; 3] =
        [GeneralErrorKind::NotClose, GeneralErrorKind::NotVisible, GeneralErrorKind::DoesNotExist];

    pub fn as_str(self) -> &'static str {
        match self {
            GeneralErrorKind::NotClose => "notClose",
            GeneralErrorKind::NotVisible => "notVisible",
            GeneralErrorKind::DoesNotExist => "doesNotExist",
        }
    }

    /// Raw feedback template text, with a `{target}` placeholder.
    pub fn template(self) -> &'static str {
        match self {
            GeneralErrorKind::NotClose => NOT_CLOSE_TEMPLATE.trim_end(),
            GeneralErrorKind::NotVisible => NOT_VISIBLE_TEMPLATE.trim_end(),
            GeneralErrorKind::DoesNotExist => DOES_NOT_EXIST_TEMPLATE.trim_end(),
        }
    }

    pub fn render(self, target: &str) -> String {
        self.template().replace(TARGET_PLACEHOLDER, target)
    }
}

impl fmt::Display for GeneralErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A typed execution fault carried from the simulator to the refiner.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GeneralErrorReport {
    pub kind: GeneralErrorKind,
    pub action_name: String,
    pub target: String,
    pub message: String,
}

impl GeneralErrorReport {
    /// Builds a report whose message is the kind's template instantiated with `target`.
    pub fn new(kind: GeneralErrorKind, action_name: impl Into<String>, target: impl Into<String>) -> Self {
        let target = target.into();
        GeneralErrorReport { kind, action_name: action_name.into(), message: kind.render(&target), target }
    }
}

impl fmt::Display for GeneralErrorReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} during {}({}): {}", self.kind, self.action_name, self.target, self.message)
    }
}
