use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::RunError;
use crate::gateway::BackendConfig;
use crate::planner::TemplateSet;
use crate::refiner::DEFAULT_MAX_REFINEMENTS;
use crate::world::SensorConfig;

/// Run settings, loadable from a TOML file. Unknown keys are rejected, which
/// also keeps credentials out: only the *name* of the credential variable is accepted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Refinements allowed per sub-task after its first tree; 0 disables refinement.
    pub max_refinements: u32,
    pub wall_clock_cap_secs: f64,
    pub sensor: SensorConfig,
    pub backend: BackendConfig,
    /// Simulated duration of every action and condition check. Counts as action time only.
    pub action_delay_ms: u64,
    /// Overrides for the bundled prompt templates.
    pub template_dir: Option<PathBuf>,
    /// Extra files appended to every prompt. Anything listed here is task-specific
    /// input and is counted by the knowledge meter.
    pub task_knowledge_files: Vec<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            max_refinements: DEFAULT_MAX_REFINEMENTS,
            wall_clock_cap_secs: 600.0,
            sensor: SensorConfig::default(),
            backend: BackendConfig::default(),
            action_delay_ms: 0,
            template_dir: None,
            task_knowledge_files: Vec::new(),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, RunError> {
        let config: RunConfig = toml::from_str(text).map_err(|e| RunError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = fs::read_to_string(path).map_err(|e| RunError::Config(format!("{}: {e}", path.display())))?;
        RunConfig::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<(), RunError> {
        if !(self.wall_clock_cap_secs.is_finite() && self.wall_clock_cap_secs > 0.0) {
            return Err(RunError::Config("wall_clock_cap_secs must be positive".into()));
        }
        self.sensor.validate().map_err(|e| RunError::Config(e.to_string()))?;
        self.backend.validate().map_err(|e| RunError::Config(e.to_string()))
    }

    pub fn templates(&self) -> Result<TemplateSet, RunError> {
        match &self.template_dir {
            Some(dir) => TemplateSet::from_dir(dir).map_err(|e| RunError::Config(e.to_string())),
            None => Ok(TemplateSet::bundled()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::BackendMode;

    #[test]
    fn parses_partial_file_over_defaults() {
        let config = RunConfig::from_toml_str(
            "max_refinements = 2\n[sensor]\nview_distance = 6\n[backend]\nmode = \"replay\"\ntranscript = \"run.jsonl\"\n",
        )
        .unwrap();
        assert_eq!(config.max_refinements, 2);
        assert_eq!(config.sensor.view_distance, 6);
        assert_eq!(config.sensor.fov, 90);
        assert_eq!(config.backend.mode, BackendMode::Replay);
    }

    #[test]
    fn rejects_secrets_and_bad_caps() {
        assert!(RunConfig::from_toml_str("[backend]\napi_key = \"sk-123\"\n").is_err());
        assert!(RunConfig::from_toml_str("wall_clock_cap_secs = 0\n").is_err());
        assert!(RunConfig::from_toml_str("[sensor]\nrotation_increment = 7\n").is_err());
    }
}
