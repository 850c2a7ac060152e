//! Versioned prompt templates with `{{slot}}` placeholders.
//!
//! Template text is shared by every task; only slot values vary. A rendered
//! prompt can be matched back against its template, which is how tests check
//! that two tasks' prompts differ nowhere outside the slots.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use regex::Regex;
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TemplateError {
    #[error("template `{template}` has no slot `{slot}`")]
    UnknownSlot { template: String, slot: String },
    #[error("template `{template}` is missing a value for slot `{slot}`")]
    MissingSlot { template: String, slot: String },
    #[error("template directory {path}: {message}")]
    Io { path: String, message: String },
}

/// Where a slot's value comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotKind {
    /// The user's instruction.
    Instruction,
    /// Sensing: view counts and rendered views.
    Observation,
    /// Object classes present in the scene.
    ObjectClasses,
    /// Text produced by earlier model calls in the same run.
    Derived,
    /// Execution or format feedback.
    Feedback,
    /// Fixed vocabularies, identical for every task.
    Vocabulary,
}

pub fn slot_kind(slot: &str) -> Option<SlotKind> {
    Some(match slot {
        "instruction" => SlotKind::Instruction,
        "view_count" => SlotKind::Observation,
        "object_classes" => SlotKind::ObjectClasses,
        "task_id" | "context" | "subtask" | "condition" | "completed" | "failed_tree" => SlotKind::Derived,
        "feedback" | "problem" => SlotKind::Feedback,
        "predicates" | "actions" => SlotKind::Vocabulary,
        _ => return None,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    pub id: String,
    pub text: String,
}

impl Template {
    pub fn new(id: &str, text: &str) -> Self {
        Template { id: id.to_string(), text: text.trim_end().to_string() }
    }

    /// Slot names in order of first appearance.
    pub fn slots(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for cap in slot_regex().captures_iter(&self.text) {
            let name = cap[1].to_string();
            if !out.contains(&name) {
                out.push(name);
            }
        }
        out
    }

    /// SHA-256 of the template text.
    pub fn fingerprint(&self) -> String {
        hex::encode(Sha256::digest(self.text.as_bytes()))
    }

    /// Every declared slot must be supplied, and nothing else.
    pub fn render(&self, values: &[(&str, &str)]) -> Result<String, TemplateError> {
        let slots = self.slots();
        for (name, _) in values {
            if !slots.iter().any(|s| s == name) {
                return Err(TemplateError::UnknownSlot { template: self.id.clone(), slot: name.to_string() });
            }
        }
        let mut missing = None;
        let rendered = slot_regex().replace_all(&self.text, |cap: &regex::Captures<'_>| {
            match values.iter().find(|(n, _)| *n == &cap[1]) {
                Some((_, v)) => v.to_string(),
                None => {
                    missing.get_or_insert_with(|| cap[1].to_string());
                    String::new()
                }
            }
        });
        match missing {
            Some(slot) => Err(TemplateError::MissingSlot { template: self.id.clone(), slot }),
            None => Ok(rendered.into_owned()),
        }
    }

    /// Recovers slot values from a rendered prompt, or `None` if the fixed text differs.
    pub fn match_rendered(&self, rendered: &str) -> Option<BTreeMap<String, String>> {
        let mut pattern = String::from("(?s)^");
        let mut last = 0;
        let mut names = Vec::new();
        for cap in slot_regex().captures_iter(&self.text) {
            let whole = cap.get(0).expect("match");
            pattern.push_str(&regex::escape(&self.text[last..whole.start()]));
            pattern.push_str("(.*?)");
            names.push(cap[1].to_string());
            last = whole.end();
        }
        pattern.push_str(&regex::escape(&self.text[last..]));
        pattern.push('$');
        let re = Regex::new(&pattern).ok()?;
        let caps = re.captures(rendered)?;
        let mut out = BTreeMap::new();
        for (i, name) in names.iter().enumerate() {
            let value = caps.get(i + 1).map_or("", |m| m.as_str()).to_string();
            // a repeated slot must carry the same value each time
            match out.get(name) {
                Some(prev) if *prev != value => return None,
                Some(_) => {}
                None => {
                    out.insert(name.clone(), value);
                }
            }
        }
        Some(out)
    }
}

fn slot_regex() -> Regex {
    Regex::new(r"\{\{([a-z_]+)\}\}").expect("static pattern")
}

/// File names of the shared stage templates.
pub const STAGE_TEMPLATES: [&str; 6] = ["system", "interpret", "decompose", "plan", "refine", "format_repair"];
pub const TEMPLATE_VERSION: &str = "v1";

/// The prompt templates in use, plus any other files found beside them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateSet {
    pub system: Template,
    pub interpret: Template,
    pub decompose: Template,
    pub plan: Template,
    pub refine: Template,
    pub format_repair: Template,
    /// Files in a template directory that are not stage templates. They are not
    /// used by the pipeline but are counted as task-specific input.
    pub extra_files: Vec<PathBuf>,
}

impl Default for TemplateSet {
    fn default() -> Self {
        TemplateSet::bundled()
    }
}

impl TemplateSet {
    pub fn bundled() -> Self {
        TemplateSet {
            system: Template::new("system.v1", include_str!("../../assets/prompts/system.v1.txt")),
            interpret: Template::new("interpret.v1", include_str!("../../assets/prompts/interpret.v1.txt")),
            decompose: Template::new("decompose.v1", include_str!("../../assets/prompts/decompose.v1.txt")),
            plan: Template::new("plan.v1", include_str!("../../assets/prompts/plan.v1.txt")),
            refine: Template::new("refine.v1", include_str!("../../assets/prompts/refine.v1.txt")),
            format_repair: Template::new("format_repair.v1", include_str!("../../assets/prompts/format_repair.v1.txt")),
            extra_files: Vec::new(),
        }
    }

    /// Overrides bundled templates with `<stage>.v1.txt` files from `dir`. Missing
    /// stages keep the bundled text; an empty directory is valid.
    pub fn from_dir(dir: &Path) -> Result<Self, TemplateError> {
        let io = |e: std::io::Error| TemplateError::Io { path: dir.display().to_string(), message: e.to_string() };
        let mut set = TemplateSet::bundled();
        let mut files: Vec<PathBuf> = fs::read_dir(dir).map_err(io)?.filter_map(Result::ok).map(|e| e.path()).collect();
        files.sort();
        for path in files.into_iter().filter(|p| p.is_file()) {
            let file_name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_string();
            let stage = STAGE_TEMPLATES.iter().find(|s| file_name == format!("{s}.{TEMPLATE_VERSION}.txt"));
            match stage {
                Some(stage) => {
                    let text = fs::read_to_string(&path).map_err(io)?;
                    *set.slot_mut(stage) = Template::new(&format!("{stage}.{TEMPLATE_VERSION}"), &text);
                }
                None => set.extra_files.push(path),
            }
        }
        Ok(set)
    }

    fn slot_mut(&mut self, stage: &str) -> &mut Template {
        match stage {
            "system" => &mut self.system,
            "interpret" => &mut self.interpret,
            "decompose" => &mut self.decompose,
            "plan" => &mut self.plan,
            "refine" => &mut self.refine,
            _ => &mut self.format_repair,
        }
    }

    pub fn all(&self) -> [&Template; 6] {
        [&self.system, &self.interpret, &self.decompose, &self.plan, &self.refine, &self.format_repair]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_requires_exact_slots() {
        let t = Template::new("t", "a {{instruction}} b {{feedback}}\n");
        assert_eq!(t.slots(), vec!["instruction", "feedback"]);
        assert_eq!(t.render(&[("instruction", "x"), ("feedback", "y")]).unwrap(), "a x b y");
        assert!(matches!(t.render(&[("instruction", "x")]), Err(TemplateError::MissingSlot { .. })));
        assert!(matches!(
            t.render(&[("instruction", "x"), ("feedback", "y"), ("goal", "z")]),
            Err(TemplateError::UnknownSlot { .. })
        ));
    }

    #[test]
    fn rendered_text_matches_back() {
        let t = Template::new("t", "Instruction: {{instruction}}\nfixed line\n{{feedback}} end");
        let text = t.render(&[("instruction", "put it away"), ("feedback", "multi\nline")]).unwrap();
        let slots = t.match_rendered(&text).unwrap();
        assert_eq!(slots["instruction"], "put it away");
        assert_eq!(slots["feedback"], "multi\nline");
        assert!(t.match_rendered(&text.replace("fixed line", "edited line")).is_none());
    }

    #[test]
    fn bundled_templates_use_only_known_slots() {
        for t in TemplateSet::bundled().all() {
            for slot in t.slots() {
                assert!(slot_kind(&slot).is_some(), "{} uses unclassified slot {slot}", t.id);
            }
        }
        assert!(TemplateSet::bundled().system.slots().is_empty());
    }

    #[test]
    fn empty_directory_keeps_bundled_text() {
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(TemplateSet::from_dir(dir.path()).unwrap(), TemplateSet::bundled());
        fs::write(dir.path().join("apple_examples.txt"), "x").unwrap();
        assert_eq!(TemplateSet::from_dir(dir.path()).unwrap().extra_files.len(), 1);
    }
}
