//! XML behavior trees: parsing, canonical serialization and ticking.
//!
//! The node vocabulary is fixed to `Sequence`, `Selector`, `Action` and
//! `Condition`. See `docs/bt-schema.md` in the repository for the grammar.

mod node;
mod tick;
mod xml;

use serde::{Deserialize, Serialize};

pub use node::{Attributes, BtNode, ConditionValue, NodeKind};
pub use tick::{tick, Effector, Status, TickOutcome};
pub use xml::{parse_bt, serialize_bt, ParseError};

/// A validated tree together with the exact text it was parsed from.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BehaviorTree {
    pub root: BtNode,
    pub source_text: String,
}

impl BehaviorTree {
    /// Validates a programmatically built tree; `source_text` becomes its canonical form.
    pub fn from_root(root: BtNode) -> Result<Self, ParseError> {
        validate_recursive(&root)?;
        let mut tree = BehaviorTree { root, source_text: String::new() };
        tree.source_text = serialize_bt(&tree);
        Ok(tree)
    }

    pub fn canonical(&self) -> String {
        serialize_bt(self)
    }
}

/// Structural equality: the source text is ignored.
impl PartialEq for BehaviorTree {
    fn eq(&self, other: &Self) -> bool {
        self.root == other.root
    }
}

impl Eq for BehaviorTree {}

fn validate_recursive(node: &BtNode) -> Result<(), ParseError> {
    xml::validate_node(node, 0)?;
    node.children.iter().try_for_each(validate_recursive)
}
