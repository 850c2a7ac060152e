use std::fmt;

use serde::{Deserialize, Serialize};

/// The four node tags a behavior tree may contain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NodeKind {
    Sequence,
    Selector,
    Action,
    Condition,
}

impl NodeKind {
    pub const ALL: [NodeKind; 4] = [NodeKind::Sequence, NodeKind::Selector, NodeKind::Action, NodeKind::Condition];

    pub fn tag(self) -> &'static str {
        match self {
            NodeKind::Sequence => "Sequence",
            NodeKind::Selector => "Selector",
            NodeKind::Action => "Action",
            NodeKind::Condition => "Condition",
        }
    }

    pub fn from_tag(tag: &str) -> Option<NodeKind> {
        NodeKind::ALL.into_iter().find(|k| k.tag() == tag)
    }

    pub fn is_composite(self) -> bool {
        matches!(self, NodeKind::Sequence | NodeKind::Selector)
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Ordered attribute list. Order is the order the attributes were received in.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Attributes(Vec<(String, String)>);

impl Attributes {
    pub fn new() -> Self {
        Attributes(Vec::new())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    /// Inserts or replaces `key`, keeping the original position on replace.
    pub fn set(&mut self, key: impl Into<String>, value: impl Into<String>) {
        let key = key.into();
        let value = value.into();
        match self.0.iter_mut().find(|(k, _)| *k == key) {
            Some(slot) => slot.1 = value,
            None => self.0.push((key, value)),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(|(k, _)| k.as_str())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn name(&self) -> Option<&str> {
        self.get("name")
    }

    pub fn target(&self) -> Option<&str> {
        self.get("target")
    }
}

impl<K: Into<String>, V: Into<String>> FromIterator<(K, V)> for Attributes {
    fn from_iter<I: IntoIterator<Item = (K, V)>>(iter: I) -> Self {
        let mut attrs = Attributes::new();
        for (k, v) in iter {
            attrs.set(k, v);
        }
        attrs
    }
}

/// Value carried by a `Condition` node.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConditionValue {
    Bool(bool),
    Literal(String),
}

impl ConditionValue {
    /// `"1"`, `"0"`, `"true"`, `"false"` (any case) are booleans; anything else is a literal.
    pub fn parse(token: &str) -> ConditionValue {
        let trimmed = token.trim();
        match trimmed.to_ascii_lowercase().as_str() {
            "1" | "true" => ConditionValue::Bool(true),
            "0" | "false" => ConditionValue::Bool(false),
            _ => ConditionValue::Literal(trimmed.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BtNode {
    pub kind: NodeKind,
    pub attributes: Attributes,
    pub children: Vec<BtNode>,
}

impl BtNode {
    pub fn sequence(children: Vec<BtNode>) -> Self {
        BtNode { kind: NodeKind::Sequence, attributes: Attributes::new(), children }
    }

    pub fn selector(children: Vec<BtNode>) -> Self {
        BtNode { kind: NodeKind::Selector, attributes: Attributes::new(), children }
    }

    pub fn action(name: &str, target: Option<&str>) -> Self {
        let mut attributes = Attributes::new();
        attributes.set("name", name);
        if let Some(target) = target {
            attributes.set("target", target);
        }
        BtNode { kind: NodeKind::Action, attributes, children: Vec::new() }
    }

    pub fn condition(name: &str, target: &str, value: &str) -> Self {
        let attributes = [("name", name), ("target", target), ("value", value)].into_iter().collect();
        BtNode { kind: NodeKind::Condition, attributes, children: Vec::new() }
    }

    /// Adds an attribute, builder style.
    pub fn with_attr(mut self, key: &str, value: &str) -> Self {
        self.attributes.set(key, value);
        self
    }

    pub fn is_leaf(&self) -> bool {
        !self.kind.is_composite()
    }

    /// Number of nodes in this subtree, including itself.
    pub fn size(&self) -> usize {
        1 + self.children.iter().map(BtNode::size).sum::<usize>()
    }

    pub fn depth(&self) -> usize {
        1 + self.children.iter().map(BtNode::depth).max().unwrap_or(0)
    }

    /// Leaves in depth-first order.
    pub fn leaves(&self) -> Vec<&BtNode> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a BtNode>) {
        if self.is_leaf() {
            out.push(self);
        }
        for child in &self.children {
            child.collect_leaves(out);
        }
    }

    /// Names of every `Action` leaf, depth-first.
    pub fn action_names(&self) -> Vec<&str> {
        self.leaves().into_iter().filter(|n| n.kind == NodeKind::Action).filter_map(|n| n.attributes.name()).collect()
    }
}
