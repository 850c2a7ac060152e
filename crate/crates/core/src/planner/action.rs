use regex::Regex;
use thiserror::Error;

use super::{
    call, class_listing, completed_listing, compose, with_repair, PlannerAssets, PlannerError, SubTask, TaskContext,
    TaskRequest,
};
use crate::bt::{parse_bt, BehaviorTree, NodeKind};
use crate::gateway::{ChatMessage, Gateway, Stage};
use crate::world::ActionKind;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("no behavior tree element found in the response")]
pub struct NoXmlFound;

/// Returns the first maximal well-formed element whose tag is a tree node tag,
/// after removing code fences.
pub fn extract_xml(response: &str) -> Result<String, NoXmlFound> {
    let fence = Regex::new(r"```[A-Za-z0-9_-]*").expect("static pattern");
    let text = fence.replace_all(response, "\n");
    let tags: Vec<&str> = NodeKind::ALL.iter().map(|k| k.tag()).collect();
    let open = Regex::new(&format!(r"<({})[\s/>]", tags.join("|"))).expect("static pattern");
    for caps in open.captures_iter(&text) {
        let start = caps.get(0).expect("match").start();
        let tag = &caps[1];
        let Some(head_end) = start_tag_end(&text, start) else { continue };
        let mut candidates = Vec::new();
        if text[..head_end].ends_with("/>") {
            candidates.push(head_end);
        } else {
            let close = format!("</{tag}>");
            let mut from = head_end;
            while let Some(off) = text[from..].find(&close) {
                let end = from + off + close.len();
                candidates.push(end);
                from = end;
            }
            // prefer the outermost element
            candidates.reverse();
        }
        for end in candidates {
            let slice = &text[start..end];
            if roxmltree::Document::parse(slice).is_ok() {
                return Ok(slice.to_string());
            }
        }
    }
    Err(NoXmlFound)
}

/// Byte offset just past the `>` closing the start tag at `start`, respecting quotes.
fn start_tag_end(text: &str, start: usize) -> Option<usize> {
    let mut quote: Option<char> = None;
    for (i, c) in text[start..].char_indices() {
        match (quote, c) {
            (Some(q), c) if c == q => quote = None,
            (Some(_), _) => {}
            (None, '"' | '\'') => quote = Some(c),
            (None, '>') => return Some(start + i + 1),
            (None, '<') if i > 0 => return None,
            _ => {}
        }
    }
    None
}

/// Action vocabulary shown in planning and refinement prompts.
pub fn actions_listing() -> String {
    ActionKind::ALL.iter().map(|a| format!("- {}", a.name())).collect::<Vec<_>>().join("\n")
}

/// What a planning prompt is built from.
#[derive(Debug, Clone, Copy)]
pub struct PlanInput<'a> {
    pub request: &'a TaskRequest,
    pub ctx: &'a TaskContext,
    pub subtask: &'a SubTask,
    pub completed: &'a [SubTask],
    /// Scene-derived; sorted and de-duplicated by the caller.
    pub object_classes: &'a [String],
}

impl PlanInput<'_> {
    pub(crate) fn common_slots(&self) -> Vec<(&'static str, String)> {
        vec![
            ("instruction", self.request.instruction.clone()),
            ("task_id", self.ctx.task_id.clone()),
            ("context", self.ctx.context_text.clone()),
            ("completed", completed_listing(self.completed)),
            ("subtask", self.subtask.name.clone()),
            ("condition", self.subtask.condition.to_string()),
            ("actions", actions_listing()),
            ("object_classes", class_listing(self.object_classes)),
        ]
    }
}

/// Sends a tree-generation request. A response without a usable tree gets one
/// format re-prompt; a second failure is returned.
pub fn generate_tree(
    gateway: &mut Gateway,
    assets: &PlannerAssets,
    stage: Stage,
    subtask: &str,
    attempt: u32,
    messages: Vec<ChatMessage>,
) -> Result<BehaviorTree, PlannerError> {
    let response = call(gateway, stage, Some(subtask), attempt, false, messages.clone())?;
    let problem = match tree_from(&response) {
        Ok(tree) => return Ok(tree),
        Err(e) => format!(
            "{e}. Reply with a single XML behavior tree built from Sequence, Selector, Action and Condition nodes"
        ),
    };
    let repair = with_repair(assets, &messages, &response, &problem)?;
    let response = call(gateway, stage, Some(subtask), attempt, true, repair)?;
    tree_from(&response)
}

fn tree_from(response: &str) -> Result<BehaviorTree, PlannerError> {
    let xml = extract_xml(response)?;
    Ok(parse_bt(&xml)?)
}

/// `generation` is 0 for the first tree of a sub-task; a re-plan after an
/// unusable first tree uses the next index.
pub fn plan_subtask_bt(
    input: &PlanInput<'_>,
    assets: &PlannerAssets,
    gateway: &mut Gateway,
    generation: u32,
) -> Result<BehaviorTree, PlannerError> {
    let mut slots = input.common_slots();
    slots.push(("predicates", assets.registry.listing()));
    let pairs: Vec<(&str, &str)> = slots.iter().map(|(k, v)| (*k, v.as_str())).collect();
    let text = assets.templates.plan.render(&pairs)?;
    let messages = compose(assets, text, &[]);
    generate_tree(gateway, assets, Stage::Plan, &input.subtask.name, generation, messages)
}
