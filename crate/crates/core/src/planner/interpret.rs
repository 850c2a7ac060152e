use regex::Regex;

use super::{call, compose, with_repair, PlannerAssets, PlannerError, TaskContext, TaskRequest};
use crate::gateway::{Gateway, Stage};
use crate::world::ViewText;

/// Lowercase, whitespace and hyphens to underscores, everything outside `[a-z0-9_]` dropped,
/// underscore runs collapsed and trimmed.
pub fn sanitize_task_id(raw: &str) -> String {
    let mapped: String = raw
        .trim()
        .to_lowercase()
        .chars()
        .map(|c| if c.is_whitespace() || c == '-' { '_' } else { c })
        .filter(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || *c == '_')
        .collect();
    mapped.split('_').filter(|w| !w.is_empty()).collect::<Vec<_>>().join("_")
}

/// Reads the `TASK_ID:` and `CONTEXT:` sections. Marker case and spacing are tolerated.
pub fn parse_interpretation(response: &str) -> Result<TaskContext, String> {
    let id_re = Regex::new(r"(?im)^[\s*#>-]*task[\s_-]*id\s*[*]*\s*:\s*(.*)$").expect("static pattern");
    let ctx_re = Regex::new(r"(?im)^[\s*#>-]*context\s*[*]*\s*:").expect("static pattern");
    let caps = id_re.captures(response).ok_or("no TASK_ID section")?;
    let task_id = sanitize_task_id(caps[1].trim_matches(|c: char| c == '*' || c == '`' || c.is_whitespace()));
    if task_id.is_empty() {
        return Err("TASK_ID is empty after normalization".to_string());
    }
    let context_text = match ctx_re.find(response) {
        Some(m) => response[m.end()..].trim().to_string(),
        None => String::new(),
    };
    Ok(TaskContext { task_id, context_text })
}

pub fn interpret_task(
    request: &TaskRequest,
    views: &[ViewText],
    assets: &PlannerAssets,
    gateway: &mut Gateway,
) -> Result<TaskContext, PlannerError> {
    if request.instruction.trim().is_empty() {
        return Err(PlannerError::EmptyInstruction);
    }
    if views.is_empty() {
        return Err(PlannerError::NoViews);
    }
    let count = views.len().to_string();
    let text = assets.templates.interpret.render(&[("instruction", &request.instruction), ("view_count", &count)])?;
    let messages = compose(assets, text, views);
    let response = call(gateway, Stage::Interpret, None, 0, false, messages.clone())?;
    let problem = match parse_interpretation(&response) {
        Ok(ctx) => return Ok(ctx),
        Err(problem) => problem,
    };
    let repair = with_repair(
        assets,
        &messages,
        &response,
        &format!("{problem}. Start one line with TASK_ID: and another with CONTEXT:."),
    )?;
    let response = call(gateway, Stage::Interpret, None, 0, true, repair)?;
    parse_interpretation(&response)
        .map_err(|detail| PlannerError::MalformedResponse { stage: Stage::Interpret, detail })
}
