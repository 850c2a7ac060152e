//! Instruction interpretation, layered decomposition, and per-sub-task tree generation.

mod action;
mod decompose;
mod interpret;
pub mod templates;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bt::ParseError;
use crate::gateway::{ChatMessage, CompletionRequest, Gateway, GatewayError, Part, Role, Stage};
use crate::predicates::{CompletionCondition, PredicateRegistry};
use crate::world::ViewText;

pub use action::{actions_listing, extract_xml, generate_tree, plan_subtask_bt, NoXmlFound, PlanInput};
pub use decompose::{decompose_task, parse_decomposition, DecompositionIssue};
pub use interpret::{interpret_task, parse_interpretation, sanitize_task_id};
pub use templates::{SlotKind, Template, TemplateError, TemplateSet};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskRequest {
    pub instruction: String,
}

impl TaskRequest {
    pub fn new(instruction: &str) -> Result<Self, PlannerError> {
        let instruction = instruction.trim();
        if instruction.is_empty() {
            return Err(PlannerError::EmptyInstruction);
        }
        Ok(TaskRequest { instruction: instruction.to_string() })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskContext {
    /// Matches `[a-z0-9]+(_[a-z0-9]+)*`.
    pub task_id: String,
    pub context_text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SubTaskStatus {
    Pending,
    Done,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubTask {
    pub name: String,
    /// 1-based.
    pub layer: u32,
    pub condition: CompletionCondition,
    pub status: SubTaskStatus,
}

impl SubTask {
    pub fn new(name: &str, layer: u32, condition: CompletionCondition) -> Self {
        SubTask { name: name.to_string(), layer, condition, status: SubTaskStatus::Pending }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecompositionPlan {
    /// Non-empty; each layer non-empty, in execution order.
    pub layers: Vec<Vec<SubTask>>,
}

impl DecompositionPlan {
    pub fn subtasks(&self) -> impl Iterator<Item = &SubTask> {
        self.layers.iter().flatten()
    }

    pub fn len(&self) -> usize {
        self.layers.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// True when `text` matches `[a-z0-9]+(_[a-z0-9]+)*`.
pub fn is_identifier(text: &str) -> bool {
    !text.is_empty()
        && text.split('_').all(|w| !w.is_empty() && w.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit()))
}

/// A file injected into every prompt. The bundled pipeline uses none; the
/// hook exists so the knowledge meter can be shown to count them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KnowledgeFile {
    pub name: String,
    pub text: String,
}

/// Everything fixed for a run: templates, predicate registry, injected files.
#[derive(Debug, Clone, Default)]
pub struct PlannerAssets {
    pub templates: TemplateSet,
    pub registry: PredicateRegistry,
    pub knowledge: Vec<KnowledgeFile>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlannerError {
    #[error("instruction is empty")]
    EmptyInstruction,
    #[error("no views to interpret")]
    NoViews,
    #[error("malformed {stage} response: {detail}")]
    MalformedResponse { stage: Stage, detail: String },
    #[error("malformed decomposition: {0}")]
    MalformedDecomposition(String),
    #[error("decomposition uses an unknown predicate or wrong arity: {0}")]
    UnknownPredicate(String),
    #[error(transparent)]
    NoXml(#[from] NoXmlFound),
    #[error("behavior tree rejected: {0}")]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Template(#[from] TemplateError),
}

impl PlannerError {
    /// Tree-generation failures that count as a failed attempt rather than a run error.
    pub fn is_tree_format(&self) -> bool {
        matches!(self, PlannerError::NoXml(_) | PlannerError::Parse(_))
    }
}

/// System message, then one user message: rendered template, view blobs, injected files.
pub(crate) fn compose(assets: &PlannerAssets, user_text: String, views: &[ViewText]) -> Vec<ChatMessage> {
    let mut parts = vec![Part::text(user_text)];
    parts.extend(views.iter().map(|v| Part::blob("text/plain", v.text.as_bytes())));
    parts.extend(assets.knowledge.iter().map(|k| Part::text(k.text.clone())));
    vec![ChatMessage::system(assets.templates.system.text.clone()), ChatMessage::new(Role::User, parts)]
}

/// The original exchange followed by a format-repair turn.
pub(crate) fn with_repair(
    assets: &PlannerAssets,
    messages: &[ChatMessage],
    previous: &str,
    problem: &str,
) -> Result<Vec<ChatMessage>, TemplateError> {
    let mut out = messages.to_vec();
    // an empty reply is still shown so the turn structure stays regular
    out.push(ChatMessage::assistant(previous.to_string()));
    out.push(ChatMessage::user(assets.templates.format_repair.render(&[("problem", problem)])?));
    Ok(out)
}

pub(crate) fn call(
    gateway: &mut Gateway,
    stage: Stage,
    subtask: Option<&str>,
    attempt: u32,
    format_retry: bool,
    messages: Vec<ChatMessage>,
) -> Result<String, GatewayError> {
    gateway.complete(CompletionRequest { stage, subtask: subtask.map(str::to_string), attempt, format_retry, messages })
}

pub(crate) fn completed_listing(completed: &[SubTask]) -> String {
    if completed.is_empty() {
        return "(none)".to_string();
    }
    completed.iter().map(|s| format!("- {} ({})", s.name, s.condition)).collect::<Vec<_>>().join("\n")
}

pub(crate) fn class_listing(classes: &[String]) -> String {
    classes.join(", ")
}

impl fmt::Display for SubTask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Layer {}: {} | {}", self.layer, self.name, self.condition)
    }
}
