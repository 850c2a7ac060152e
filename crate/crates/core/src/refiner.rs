//! Replacement trees after a failed execution.
//!
//! A refinement prompt carries the failed tree verbatim, the failure (a general
//! error rendered from its feedback template, or the unmet completion
//! condition), and views re-rendered after the failure. The model returns a
//! whole new tree; nothing is patched in place.

use serde::{Deserialize, Serialize};

use crate::bt::BehaviorTree;
use crate::fault::GeneralErrorReport;
use crate::gateway::{ChatMessage, Gateway, Stage};
use crate::planner::{
    compose, generate_tree, PlanInput, PlannerAssets, PlannerError, SubTask, TaskContext, TaskRequest,
};
use crate::predicates::CompletionCondition;
use crate::world::ViewText;

pub const DEFAULT_MAX_REFINEMENTS: u32 = 5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum RefinementCause {
    GeneralError(GeneralErrorReport),
    /// The tree finished but the condition was false afterwards.
    UnmetCondition(CompletionCondition),
}

#[derive(Debug, Clone)]
pub struct RefinementInput {
    pub request: TaskRequest,
    pub ctx: TaskContext,
    pub subtask: SubTask,
    pub completed: Vec<SubTask>,
    pub failed_tree: BehaviorTree,
    pub cause: RefinementCause,
    pub fresh_views: Vec<ViewText>,
    pub object_classes: Vec<String>,
}

/// Text for the feedback slot. Only this slot depends on the cause.
pub fn feedback_text(cause: &RefinementCause) -> String {
    match cause {
        RefinementCause::GeneralError(report) => format!(
            "General error {} raised by {} on '{}'.\n{}",
            report.kind.as_str(),
            report.action_name,
            report.target,
            report.message
        ),
        RefinementCause::UnmetCondition(condition) => {
            format!("The tree ran to completion without errors, but the completion condition {condition} evaluated to false afterwards.")
        }
    }
}

pub fn build_refinement_prompt(
    input: &RefinementInput,
    assets: &PlannerAssets,
) -> Result<Vec<ChatMessage>, PlannerError> {
    let plan = PlanInput {
        request: &input.request,
        ctx: &input.ctx,
        subtask: &input.subtask,
        completed: &input.completed,
        object_classes: &input.object_classes,
    };
    let mut slots = plan.common_slots();
    slots.push(("predicates", assets.registry.listing()));
    slots.push(("failed_tree", input.failed_tree.source_text.clone()));
    slots.push(("feedback", feedback_text(&input.cause)));
    slots.push(("view_count", input.fresh_views.len().to_string()));
    let pairs: Vec<(&str, &str)> = slots.iter().map(|(k, v)| (*k, v.as_str())).collect();
    let text = assets.templates.refine.render(&pairs)?;
    Ok(compose(assets, text, &input.fresh_views))
}

/// `attempt` is the refinement index, starting at 1. The caller enforces the budget.
pub fn refine_bt(
    input: &RefinementInput,
    assets: &PlannerAssets,
    gateway: &mut Gateway,
    attempt: u32,
) -> Result<BehaviorTree, PlannerError> {
    let messages = build_refinement_prompt(input, assets)?;
    generate_tree(gateway, assets, Stage::Refine, &input.subtask.name, attempt, messages)
}
