use std::collections::{BTreeMap, BTreeSet};

use regex::Regex;

use super::{
    call, compose, is_identifier, with_repair, DecompositionPlan, PlannerAssets, PlannerError, SubTask, TaskContext,
    TaskRequest,
};
use crate::gateway::{Gateway, Stage};
use crate::predicates::{Literal, PredicateRegistry};

/// Why a decomposition response was rejected.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DecompositionIssue {
    Malformed(String),
    UnknownPredicate(String),
}

/// Parses `Layer <n>: <name> | <literal>` lines. Lines not starting with
/// `Layer` are ignored; a `Layer` line that does not fit the grammar is an error.
pub fn parse_decomposition(
    response: &str,
    registry: &PredicateRegistry,
) -> Result<DecompositionPlan, DecompositionIssue> {
    let line_re = Regex::new(r"(?i)^layer\s+(\d+)\s*:\s*([^|]+?)\s*\|\s*(.+?)\s*$").expect("static pattern");
    let mut layers: BTreeMap<u32, Vec<SubTask>> = BTreeMap::new();
    let mut names = BTreeSet::new();
    for raw in response.lines() {
        let line = raw.trim().trim_start_matches(['-', '*', ' ']).trim_matches('`');
        if !line.to_ascii_lowercase().starts_with("layer") {
            continue;
        }
        let caps =
            line_re.captures(line).ok_or_else(|| DecompositionIssue::Malformed(format!("cannot parse `{line}`")))?;
        let layer: u32 =
            caps[1].parse().map_err(|_| DecompositionIssue::Malformed(format!("bad layer number in `{line}`")))?;
        if layer == 0 {
            return Err(DecompositionIssue::Malformed("layers are numbered from 1".into()));
        }
        let name = caps[2].trim().to_string();
        if !is_identifier(&name) {
            return Err(DecompositionIssue::Malformed(format!(
                "sub-task name `{name}` is not lowercase words joined by underscores"
            )));
        }
        if !names.insert(name.clone()) {
            return Err(DecompositionIssue::Malformed(format!("sub-task `{name}` appears twice")));
        }
        let literal: Literal = caps[3]
            .parse()
            .map_err(|e: crate::predicates::LiteralParseError| DecompositionIssue::Malformed(e.to_string()))?;
        let condition =
            registry.canonicalize(&literal).map_err(|e| DecompositionIssue::UnknownPredicate(e.to_string()))?;
        layers.entry(layer).or_default().push(SubTask::new(&name, layer, condition));
    }
    if layers.is_empty() {
        return Err(DecompositionIssue::Malformed("no `Layer <n>: <name> | <condition>` lines".into()));
    }
    Ok(DecompositionPlan { layers: layers.into_values().collect() })
}

pub fn decompose_task(
    ctx: &TaskContext,
    request: &TaskRequest,
    assets: &PlannerAssets,
    gateway: &mut Gateway,
) -> Result<DecompositionPlan, PlannerError> {
    let listing = assets.registry.listing();
    let text = assets.templates.decompose.render(&[
        ("instruction", &request.instruction),
        ("task_id", &ctx.task_id),
        ("context", &ctx.context_text),
        ("predicates", &listing),
    ])?;
    let messages = compose(assets, text, &[]);
    let response = call(gateway, Stage::Decompose, None, 0, false, messages.clone())?;
    let problem = match parse_decomposition(&response, &assets.registry) {
        Ok(plan) => return Ok(plan),
        Err(DecompositionIssue::Malformed(m)) => {
            format!("{m}. Use one line per sub-task: Layer <n>: <sub_task_name> | <predicate>(<arguments>)=<value>")
        }
        Err(DecompositionIssue::UnknownPredicate(m)) => {
            format!("{m}. Completion conditions may only use these predicates:\n{listing}")
        }
    };
    let repair = with_repair(assets, &messages, &response, &problem)?;
    let response = call(gateway, Stage::Decompose, None, 0, true, repair)?;
    parse_decomposition(&response, &assets.registry).map_err(|issue| match issue {
        DecompositionIssue::Malformed(m) => PlannerError::MalformedDecomposition(m),
        DecompositionIssue::UnknownPredicate(m) => PlannerError::UnknownPredicate(m),
    })
}
