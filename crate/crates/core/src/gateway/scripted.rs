//! Deterministic fixture-backed backend.
//!
//! A fixture file is a sequence of sections:
//!
//! ```text
//! === plan locate_mug 0
//! <Sequence>...</Sequence>
//! === refine locate_mug *
//! ...
//! ```
//!
//! Header: `=== <stage> [<subtask>] <attempt|*> [retry]`. `*` matches any
//! attempt. A format re-prompt (`retry`) falls back to the plain key when no
//! dedicated section exists.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;

use super::message::Stage;
use super::{ChatBackend, CompletionRequest, GatewayError};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FixtureKey {
    pub stage: Stage,
    pub subtask: Option<String>,
    /// `None` is the `*` wildcard.
    pub attempt: Option<u32>,
    pub retry: bool,
}

impl FixtureKey {
    pub fn for_request(req: &CompletionRequest) -> Self {
        FixtureKey {
            stage: req.stage,
            subtask: req.subtask.clone(),
            attempt: Some(req.attempt),
            retry: req.format_retry,
        }
    }
}

impl fmt::Display for FixtureKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.stage)?;
        if let Some(sub) = &self.subtask {
            write!(f, " {sub}")?;
        }
        match self.attempt {
            Some(a) => write!(f, " {a}")?,
            None => write!(f, " *")?,
        }
        if self.retry {
            write!(f, " retry")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FixtureSet {
    entries: BTreeMap<FixtureKey, String>,
}

impl FixtureSet {
    pub fn parse(text: &str) -> Result<FixtureSet, GatewayError> {
        let mut set = FixtureSet::default();
        set.merge_text(text, "<inline>")?;
        Ok(set)
    }

    /// Loads a single fixture file, or every `*.fixture` file in a directory.
    pub fn load(path: &Path) -> Result<FixtureSet, GatewayError> {
        let io = |e: std::io::Error| GatewayError::Config(format!("{}: {e}", path.display()));
        let mut set = FixtureSet::default();
        if path.is_dir() {
            let mut files: Vec<_> = fs::read_dir(path)
                .map_err(io)?
                .filter_map(Result::ok)
                .map(|e| e.path())
                .filter(|p| p.extension().is_some_and(|x| x == "fixture"))
                .collect();
            files.sort();
            for file in files {
                let text = fs::read_to_string(&file).map_err(io)?;
                set.merge_text(&text, &file.display().to_string())?;
            }
        } else {
            let text = fs::read_to_string(path).map_err(io)?;
            set.merge_text(&text, &path.display().to_string())?;
        }
        Ok(set)
    }

    fn merge_text(&mut self, text: &str, origin: &str) -> Result<(), GatewayError> {
        let bad = |line: usize, msg: String| GatewayError::Config(format!("{origin}:{line}: {msg}"));
        let mut current: Option<(FixtureKey, usize, Vec<&str>)> = None;
        let mut finished = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            if let Some(header) = line.strip_prefix("===") {
                if let Some(done) = current.take() {
                    finished.push(done);
                }
                let key = parse_header(header).map_err(|m| bad(idx + 1, m))?;
                current = Some((key, idx + 1, Vec::new()));
            } else if let Some((_, _, body)) = current.as_mut() {
                body.push(line);
            } else if !line.trim().is_empty() && !line.trim_start().starts_with('#') {
                return Err(bad(idx + 1, "text before the first === header".into()));
            }
        }
        finished.extend(current);
        for (key, line, body) in finished {
            let body = body.join("\n").trim().to_string();
            if self.entries.contains_key(&key) {
                return Err(bad(line, format!("duplicate fixture `{key}`")));
            }
            self.entries.insert(key, body);
        }
        Ok(())
    }

    /// Fixture set for one task. `source` is a fixture file, a directory holding
    /// `<task>.fixture`, or the name of a bundled set (`golden`, `flawed_fixed`, `flawed`).
    pub fn for_task(source: &str, task: &str) -> Result<FixtureSet, GatewayError> {
        let path = Path::new(source);
        if path.is_file() {
            return FixtureSet::load(path);
        }
        if path.is_dir() {
            let file = path.join(format!("{task}.fixture"));
            if !file.is_file() {
                return Err(GatewayError::Config(format!("no fixture file {}", file.display())));
            }
            return FixtureSet::load(&file);
        }
        let name = source.trim_end_matches('/');
        match bundled(name, task) {
            Some(text) => {
                let mut set = FixtureSet::default();
                set.merge_text(text, &format!("{name}/{task}.fixture"))?;
                Ok(set)
            }
            None => Err(GatewayError::Config(format!("no fixture set `{source}` for task `{task}`"))),
        }
    }

    pub fn insert(&mut self, key: FixtureKey, response: impl Into<String>) {
        self.entries.insert(key, response.into());
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn lookup(&self, wanted: &FixtureKey) -> Option<&str> {
        let mut candidates = vec![wanted.clone()];
        if wanted.retry {
            candidates.push(FixtureKey { retry: false, ..wanted.clone() });
        }
        candidates.push(FixtureKey { attempt: None, ..wanted.clone() });
        if wanted.retry {
            candidates.push(FixtureKey { attempt: None, retry: false, ..wanted.clone() });
        }
        candidates.iter().find_map(|k| self.entries.get(k)).map(String::as_str)
    }
}

/// Names of the bundled fixture sets.
pub const BUNDLED_SETS: [&str; 3] = ["golden", "flawed_fixed", "flawed"];

fn bundled(set: &str, task: &str) -> Option<&'static str> {
    Some(match (set, task) {
        ("golden", "apple") => include_str!("../../assets/fixtures/golden/apple.fixture"),
        ("golden", "mug") => include_str!("../../assets/fixtures/golden/mug.fixture"),
        ("golden", "table") => include_str!("../../assets/fixtures/golden/table.fixture"),
        ("golden", "coffee") => include_str!("../../assets/fixtures/golden/coffee.fixture"),
        ("flawed_fixed", "mug") => include_str!("../../assets/fixtures/flawed_fixed/mug.fixture"),
        ("flawed", "mug") => include_str!("../../assets/fixtures/flawed/mug.fixture"),
        _ => return None,
    })
}

fn parse_header(header: &str) -> Result<FixtureKey, String> {
    let mut tokens: Vec<&str> = header.split_whitespace().collect();
    let retry = tokens.last() == Some(&"retry");
    if retry {
        tokens.pop();
    }
    let (stage, subtask, attempt) = match tokens.as_slice() {
        [stage, attempt] => (*stage, None, *attempt),
        [stage, subtask, attempt] => (*stage, Some(subtask.to_string()), *attempt),
        _ => return Err(format!("bad fixture header `==={header}`")),
    };
    let stage = Stage::parse(stage).ok_or_else(|| format!("unknown stage `{stage}`"))?;
    let attempt = match attempt {
        "*" => None,
        n => Some(n.parse::<u32>().map_err(|_| format!("bad attempt `{n}`"))?),
    };
    Ok(FixtureKey { stage, subtask, attempt, retry })
}

/// Resolves every request from a [`FixtureSet`]; stateless, so it can be shared.
#[derive(Debug, Clone)]
pub struct ScriptedBackend {
    fixtures: FixtureSet,
}

impl ScriptedBackend {
    pub fn new(fixtures: FixtureSet) -> Self {
        ScriptedBackend { fixtures }
    }
}

impl ChatBackend for ScriptedBackend {
    fn complete(&self, request: &CompletionRequest) -> Result<String, GatewayError> {
        let key = FixtureKey::for_request(request);
        self.fixtures.lookup(&key).map(str::to_string).ok_or_else(|| GatewayError::FixtureMissing(key.to_string()))
    }

    fn name(&self) -> &str {
        "scripted"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::message::ChatMessage;

    const TEXT: &str = "\
# comment line
=== interpret 0
TASK_ID: bring_coffee_to_table
CONTEXT: a kitchen

=== plan locate_mug 0
<Sequence><Action name=\"Grab\" target=\"mug\"/></Sequence>
=== refine locate_mug *
<Action name=\"ScanRoom\" target=\"mug\"/>
=== plan locate_mug 0 retry
<Action name=\"Grab\" target=\"mug\"/>
";

    fn req(stage: Stage, subtask: Option<&str>, attempt: u32, retry: bool) -> CompletionRequest {
        CompletionRequest {
            stage,
            subtask: subtask.map(String::from),
            attempt,
            format_retry: retry,
            messages: vec![ChatMessage::user("x")],
        }
    }

    #[test]
    fn resolves_exact_wildcard_and_retry_keys() {
        let backend = ScriptedBackend::new(FixtureSet::parse(TEXT).unwrap());
        assert_eq!(
            backend.complete(&req(Stage::Plan, Some("locate_mug"), 0, false)).unwrap(),
            "<Sequence><Action name=\"Grab\" target=\"mug\"/></Sequence>"
        );
        assert_eq!(
            backend.complete(&req(Stage::Plan, Some("locate_mug"), 0, true)).unwrap(),
            "<Action name=\"Grab\" target=\"mug\"/>"
        );
        assert_eq!(
            backend.complete(&req(Stage::Refine, Some("locate_mug"), 3, false)).unwrap(),
            "<Action name=\"ScanRoom\" target=\"mug\"/>"
        );
        assert!(backend.complete(&req(Stage::Interpret, None, 0, false)).unwrap().ends_with("a kitchen"));
        // retry without a dedicated section reuses the plain one
        assert!(backend.complete(&req(Stage::Interpret, None, 0, true)).unwrap().starts_with("TASK_ID"));
    }

    #[test]
    fn missing_key_is_named() {
        let backend = ScriptedBackend::new(FixtureSet::parse(TEXT).unwrap());
        match backend.complete(&req(Stage::Plan, Some("fill_mug"), 0, false)) {
            Err(GatewayError::FixtureMissing(key)) => assert_eq!(key, "plan fill_mug 0"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_bad_files() {
        assert!(FixtureSet::parse("stray\n=== plan a 0\nx").is_err());
        assert!(FixtureSet::parse("=== fly a 0\nx").is_err());
        assert!(FixtureSet::parse("=== plan a zero\nx").is_err());
        assert!(FixtureSet::parse("=== plan a 0\nx\n=== plan a 0\ny").is_err());
    }
}
