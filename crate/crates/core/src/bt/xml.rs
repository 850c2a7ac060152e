use std::fmt::Write as _;

use thiserror::Error;

use super::node::{Attributes, BtNode, NodeKind};
use super::BehaviorTree;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("malformed XML: {0}")]
    MalformedXml(String),
    #[error("unsupported node <{tag}> at line {line}; allowed tags are Sequence, Selector, Action, Condition")]
    UnsupportedNode { tag: String, line: u32 },
    #[error("<{tag}> at line {line} has no children")]
    EmptyComposite { tag: String, line: u32 },
    #[error("<{tag}> at line {line} is missing required attribute `{attribute}`")]
    MissingAttribute { tag: String, attribute: String, line: u32 },
    #[error("<{tag}> at line {line} does not accept attribute `{attribute}`")]
    UnexpectedAttribute { tag: String, attribute: String, line: u32 },
    #[error("leaf <{tag}> at line {line} must not have children")]
    UnexpectedChildren { tag: String, line: u32 },
}

/// Parses exactly one well-formed behavior tree element.
///
/// Whitespace between elements and XML comments are ignored; stray text
/// inside composites is ignored as well.
pub fn parse_bt(xml: &str) -> Result<BehaviorTree, ParseError> {
    let doc = roxmltree::Document::parse(xml).map_err(|e| ParseError::MalformedXml(e.to_string()))?;
    let lines = LineIndex::new(xml);
    let root = convert(&lines, doc.root_element())?;
    Ok(BehaviorTree { root, source_text: xml.to_string() })
}

/// Byte offsets of line starts, so each node's line is a binary search.
struct LineIndex(Vec<usize>);

impl LineIndex {
    fn new(text: &str) -> Self {
        LineIndex(std::iter::once(0).chain(text.match_indices('\n').map(|(i, _)| i + 1)).collect())
    }

    fn line_of(&self, offset: usize) -> u32 {
        self.0.partition_point(|&start| start <= offset) as u32
    }
}

fn convert(lines: &LineIndex, node: roxmltree::Node<'_, '_>) -> Result<BtNode, ParseError> {
    let tag = node.tag_name().name();
    let line = lines.line_of(node.range().start);
    let kind = NodeKind::from_tag(tag).ok_or_else(|| ParseError::UnsupportedNode { tag: tag.to_string(), line })?;

    let attributes: Attributes = node.attributes().map(|a| (a.name(), a.value())).collect();
    let element_children: Vec<_> = node.children().filter(|c| c.is_element()).collect();

    let mut children = Vec::with_capacity(element_children.len());
    for child in element_children {
        children.push(convert(lines, child)?);
    }

    let built = BtNode { kind, attributes, children };
    validate_node(&built, line)?;
    Ok(built)
}

pub(crate) fn validate_node(node: &BtNode, line: u32) -> Result<(), ParseError> {
    let tag = node.kind.tag().to_string();
    if node.kind.is_composite() {
        if node.children.is_empty() {
            return Err(ParseError::EmptyComposite { tag, line });
        }
        if let Some(extra) = node.attributes.keys().find(|k| *k != "name") {
            return Err(ParseError::UnexpectedAttribute { tag, attribute: extra.to_string(), line });
        }
        return Ok(());
    }

    if !node.children.is_empty() {
        return Err(ParseError::UnexpectedChildren { tag, line });
    }
    let required: &[&str] = match node.kind {
        NodeKind::Action => &["name"],
        _ => &["name", "target", "value"],
    };
    for attribute in required {
        if node.attributes.get(attribute).is_none() {
            return Err(ParseError::MissingAttribute { tag, attribute: attribute.to_string(), line });
        }
    }
    Ok(())
}

/// Canonical XML: four-space indentation, attributes in stored order,
/// self-closing leaves, no trailing newline.
pub fn serialize_bt(tree: &BehaviorTree) -> String {
    let mut out = String::new();
    write_node(&tree.root, 0, &mut out);
    out.pop();
    out
}

fn write_node(node: &BtNode, depth: usize, out: &mut String) {
    let indent = "    ".repeat(depth);
    out.push_str(&indent);
    out.push('<');
    out.push_str(node.kind.tag());
    for (key, value) in node.attributes.iter() {
        let _ = write!(out, " {key}=\"{}\"", escape_attr(value));
    }
    if node.is_leaf() {
        out.push_str("/>\n");
        return;
    }
    out.push_str(">\n");
    for child in &node.children {
        write_node(child, depth + 1, out);
    }
    let _ = writeln!(out, "{indent}</{}>", node.kind.tag());
}

fn escape_attr(value: &str) -> String {
    let mut out = String::with_capacity(value.len());
    for ch in value.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\n' => out.push_str("&#10;"),
            '\r' => out.push_str("&#13;"),
            '\t' => out.push_str("&#9;"),
            c => out.push(c),
        }
    }
    out
}
