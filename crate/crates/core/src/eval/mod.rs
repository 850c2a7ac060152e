//! Batches of independent trials and their reports.
//!
//! Report files:
//! - `trials.jsonl`: one [`TrialReport`] per line.
//! - `summary.md`: one table row per [`BatchSummary`].

mod tasks;

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;
use std::thread;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::orchestrator::{run_task, RunConfig, RunResult};
use crate::planner::TaskRequest;

pub use tasks::{builtin_task, builtin_tasks, TaskSpec, BUILTIN_TASK_NAMES};

/// Method label written into every report row.
pub const METHOD: &str = "zkplan";
pub const DEFAULT_TRIALS: usize = 10;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("a batch needs at least one trial")]
    ZeroTrials,
    #[error("report io: {0}")]
    Io(#[from] io::Error),
    #[error("trial record line {line}: {message}")]
    Malformed { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub task: String,
    pub method: String,
    pub trial: usize,
    /// Starting heading, when jitter is on.
    pub start_heading: Option<u16>,
    pub result: Option<RunResult>,
    /// Set when the trial could not run at all; counted as a failure.
    pub error: Option<String>,
}

impl TrialReport {
    pub fn succeeded(&self) -> bool {
        self.result.as_ref().is_some_and(|r| r.success)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub task: String,
    pub method: String,
    pub n: usize,
    pub successes: usize,
    pub mean_planning_ms: f64,
    pub mean_action_ms: f64,
    pub mean_refinements: f64,
    pub mean_llm_calls: f64,
    pub knowledge_bytes: u64,
}

#[derive(Debug, Clone)]
pub struct Batch {
    pub summary: BatchSummary,
    pub trials: Vec<TrialReport>,
}

/// Folds trials in trial-index order, so the input order does not matter.
/// Trials that never ran contribute zeros to the means.
pub fn summarize(task: &str, trials: &[TrialReport]) -> BatchSummary {
    let mut sorted: Vec<&TrialReport> = trials.iter().collect();
    sorted.sort_by_key(|t| t.trial);
    let n = sorted.len();
    let mean = |f: &dyn Fn(&RunResult) -> f64| {
        if n == 0 {
            return 0.0;
        }
        sorted.iter().filter_map(|t| t.result.as_ref()).map(f).sum::<f64>() / n as f64
    };
    BatchSummary {
        task: task.to_string(),
        method: sorted.first().map_or(METHOD.to_string(), |t| t.method.clone()),
        n,
        successes: sorted.iter().filter(|t| t.succeeded()).count(),
        mean_planning_ms: mean(&|r| r.metrics.planning_ms),
        mean_action_ms: mean(&|r| r.metrics.action_ms),
        mean_refinements: mean(&|r| r.metrics.refinement_count as f64),
        mean_llm_calls: mean(&|r| r.metrics.llm_calls as f64),
        knowledge_bytes: sorted
            .iter()
            .filter_map(|t| t.result.as_ref())
            .map(|r| r.metrics.knowledge_bytes)
            .max()
            .unwrap_or(0),
    }
}

fn jittered_heading(config: &RunConfig, seed: u64, trial: usize) -> u16 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(trial as u64));
    let headings: Vec<u16> = config.sensor.orientations_from(0).collect();
    headings[rng.gen_range(0..headings.len())]
}

fn run_trial(spec: &TaskSpec, config: &RunConfig, trial: usize, seed: Option<u64>) -> TrialReport {
    let start_heading = seed.map(|s| jittered_heading(config, s, trial));
    let attempt = || -> Result<RunResult, String> {
        let mut world = spec.load_world(config.sensor).map_err(|e| e.to_string())?;
        if let Some(heading) = start_heading {
            let pos = world.agent().pos;
            world.set_agent_pose(pos, heading);
        }
        let backend = config.backend.build(&spec.name).map_err(|e| e.to_string())?;
        let request = TaskRequest::new(&spec.instruction).map_err(|e| e.to_string())?;
        run_task(&request, world, &spec.goals, config, backend).map(|run| run.result).map_err(|e| e.to_string())
    };
    let (result, error) = match attempt() {
        Ok(result) => (Some(result), None),
        Err(e) => (None, Some(e)),
    };
    TrialReport { task: spec.name.clone(), method: METHOD.to_string(), trial, start_heading, result, error }
}

/// Runs `n` independent trials, each on a fresh world and a fresh backend.
/// `seed` turns on start-heading jitter; without it every trial is identical.
pub fn run_batch(spec: &TaskSpec, config: &RunConfig, n: usize, seed: Option<u64>) -> Result<Batch, EvalError> {
    if n == 0 {
        return Err(EvalError::ZeroTrials);
    }
    let workers = thread::available_parallelism().map_or(1, |p| p.get()).min(n);
    let mut trials: Vec<TrialReport> = thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                scope.spawn(move || {
                    (w..n).step_by(workers).map(|i| run_trial(spec, config, i, seed)).collect::<Vec<_>>()
                })
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("trial worker panicked")).collect()
    });
    trials.sort_by_key(|t| t.trial);
    Ok(Batch { summary: summarize(&spec.name, &trials), trials })
}

pub fn trials_to_jsonl(trials: &[TrialReport]) -> String {
    trials.iter().map(|t| serde_json::to_string(t).expect("trial serializes") + "\n").collect()
}

pub fn trials_from_jsonl(text: &str) -> Result<Vec<TrialReport>, EvalError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| EvalError::Malformed { line: i + 1, message: e.to_string() }))
        .collect()
}

/// Rebuilds every batch summary from a trial record file, in first-seen task order.
pub fn summaries_from_trials(trials: &[TrialReport]) -> Vec<BatchSummary> {
    let mut order: Vec<&str> = Vec::new();
    for t in trials {
        if !order.contains(&t.task.as_str()) {
            order.push(&t.task);
        }
    }
    order
        .into_iter()
        .map(|task| {
            let own: Vec<TrialReport> = trials.iter().filter(|t| t.task == task).cloned().collect();
            summarize(task, &own)
        })
        .collect()
}

pub fn summary_table(summaries: &[BatchSummary]) -> String {
    let mut out = String::from(
        "| method | task | successes | mean planning ms | mean action ms | mean refinements | mean llm calls | knowledge bytes |\n\
         |---|---|---|---|---|---|---|---|\n",
    );
    for s in summaries {
        let _ = writeln!(
            out,
            "| {} | {} | {}/{} | {:.1} | {:.1} | {:.2} | {:.2} | {} |",
            s.method,
            s.task,
            s.successes,
            s.n,
            s.mean_planning_ms,
            s.mean_action_ms,
            s.mean_refinements,
            s.mean_llm_calls,
            s.knowledge_bytes
        );
    }
    out
}

/// Writes `trials.jsonl` and `summary.md` into `dir`.
pub fn write_reports(dir: &Path, batches: &[Batch]) -> Result<(), EvalError> {
    fs::create_dir_all(dir)?;
    let trials: Vec<TrialReport> = batches.iter().flat_map(|b| b.trials.iter().cloned()).collect();
    fs::write(dir.join("trials.jsonl"), trials_to_jsonl(&trials))?;
    let summaries: Vec<BatchSummary> = batches.iter().map(|b| b.summary.clone()).collect();
    fs::write(dir.join("summary.md"), summary_table(&summaries))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::BackendConfig;

    fn config(fixtures: &str) -> RunConfig {
        RunConfig { backend: BackendConfig::scripted(fixtures), ..RunConfig::default() }
    }

    #[test]
    fn zero_trials_is_rejected() {
        let spec = builtin_task("apple").unwrap();
        assert!(matches!(run_batch(&spec, &config("golden"), 0, None), Err(EvalError::ZeroTrials)));
    }

    #[test]
    fn flawed_only_mug_never_succeeds() {
        let spec = builtin_task("mug").unwrap();
        let batch = run_batch(&spec, &config("flawed"), 3, None).unwrap();
        assert_eq!(batch.summary.successes, 0);
        assert_eq!(batch.summary.n, 3);
    }

    #[test]
    fn permuted_trials_give_the_same_summary() {
        let spec = builtin_task("apple").unwrap();
        let batch = run_batch(&spec, &config("golden"), 4, Some(7)).unwrap();
        let mut reversed = batch.trials.clone();
        reversed.reverse();
        assert_eq!(summarize("apple", &reversed), batch.summary);
    }

    #[test]
    fn summary_is_rebuilt_from_the_trial_file() {
        let spec = builtin_task("apple").unwrap();
        let batch = run_batch(&spec, &config("golden"), 2, None).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_reports(dir.path(), std::slice::from_ref(&batch)).unwrap();
        let loaded = trials_from_jsonl(&fs::read_to_string(dir.path().join("trials.jsonl")).unwrap()).unwrap();
        assert_eq!(summaries_from_trials(&loaded), vec![batch.summary.clone()]);
        let table = fs::read_to_string(dir.path().join("summary.md")).unwrap();
        assert!(table.contains("| zkplan | apple | 2/2 |"), "{table}");
    }

    #[test]
    fn missing_fixture_set_is_a_recorded_failure() {
        let spec = builtin_task("table").unwrap();
        let batch = run_batch(&spec, &config("flawed"), 1, None).unwrap();
        assert_eq!(batch.summary.successes, 0);
        assert!(batch.trials[0].error.as_deref().unwrap().contains("no fixture set"));
    }
}
