//! The closed loop: interpret once, decompose once, then for each sub-task
//! plan, tick, check its condition, and refine until it holds or the budget runs out.

mod config;
mod effector;
mod firewall;

use std::fs;
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bt::{tick, BehaviorTree, TickOutcome};
use crate::gateway::{ChatBackend, Gateway, Stage, Transcript};
use crate::planner::{
    decompose_task, interpret_task, plan_subtask_bt, DecompositionPlan, KnowledgeFile, PlanInput, PlannerAssets,
    PlannerError, SubTask, SubTaskStatus, TaskContext, TaskRequest, TemplateSet,
};
use crate::predicates::{GoalLiteral, PredicateRegistry};
use crate::refiner::{refine_bt, RefinementCause, RefinementInput};
use crate::world::WorldState;

pub use config::RunConfig;
pub use effector::{ExecutionTrace, SimEffector, TraceEntry};
pub use firewall::{firewall_violations, goal_pattern, FirewallHit};

/// Problems found before the run starts. Failures during the run are reported in [`RunResult`].
#[derive(Debug, Clone, PartialEq, Error)]
pub enum RunError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("goal `{0}` cannot be evaluated against the scene")]
    UnresolvableGoal(String),
    #[error(transparent)]
    Planner(#[from] PlannerError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RunFailure {
    /// Every generation for the sub-task failed.
    BudgetExceeded { subtask: String },
    /// Wall-clock cap reached.
    TerminationExceeded { elapsed_ms: f64 },
    /// A pipeline stage failed outside the refinement loop.
    StageError { stage: Stage, subtask: Option<String>, message: String },
    /// Every sub-task finished but the ground-truth goals do not hold.
    OracleRejected,
}

impl std::fmt::Display for RunFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunFailure::BudgetExceeded { subtask } => write!(f, "refinement budget exhausted on `{subtask}`"),
            RunFailure::TerminationExceeded { elapsed_ms } => {
                write!(f, "wall-clock cap reached after {elapsed_ms:.0} ms")
            }
            RunFailure::StageError { stage, subtask: Some(s), message } => {
                write!(f, "{stage} stage failed on `{s}`: {message}")
            }
            RunFailure::StageError { stage, subtask: None, message } => write!(f, "{stage} stage failed: {message}"),
            RunFailure::OracleRejected => f.write_str("all sub-tasks done but the goals do not hold"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttemptRecord {
    pub generation: u32,
    pub stage: Stage,
    /// Canonical XML of the tree that ran; `None` when no usable tree came back.
    pub tree: Option<String>,
    pub outcome: Option<TickOutcome>,
    pub condition_met: bool,
    /// Why no tree was produced.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubtaskOutcome {
    pub subtask: SubTask,
    /// The condition held before planning, so no tree was requested.
    pub satisfied_before_planning: bool,
    pub attempts: Vec<AttemptRecord>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    /// Prompt building, gateway calls and parsing. Excludes action execution.
    pub planning_ms: f64,
    pub action_ms: f64,
    pub total_ms: f64,
    /// Refine-stage generations across all sub-tasks.
    pub refinement_count: u32,
    pub llm_calls: usize,
    pub knowledge_bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    /// Oracle verdict; true only if every sub-task is done and every goal holds.
    pub success: bool,
    pub oracle: bool,
    pub task_context: Option<TaskContext>,
    pub plan: Option<DecompositionPlan>,
    pub subtask_outcomes: Vec<SubtaskOutcome>,
    pub trace: ExecutionTrace,
    pub metrics: RunMetrics,
    pub failure: Option<RunFailure>,
}

impl RunResult {
    /// The result with wall-clock measurements zeroed, for comparing runs.
    pub fn without_timings(&self) -> RunResult {
        let mut out = self.clone();
        out.metrics.planning_ms = 0.0;
        out.metrics.action_ms = 0.0;
        out.metrics.total_ms = 0.0;
        out
    }

    /// Stable JSON of [`Self::without_timings`].
    pub fn fingerprint(&self) -> String {
        serde_json::to_string(&self.without_timings()).expect("run result serializes")
    }

    pub fn interrupted_count(&self) -> usize {
        self.subtask_outcomes
            .iter()
            .flat_map(|s| &s.attempts)
            .filter(|a| matches!(a.outcome, Some(TickOutcome::Interrupted(_))))
            .count()
    }
}

#[derive(Debug, Clone)]
pub struct TaskRun {
    pub result: RunResult,
    pub transcript: Transcript,
    pub final_world: WorldState,
}

/// Bytes of task-specific input: configured knowledge files plus any non-template
/// files in the template directory. Shared templates, the instruction, the scene
/// and the goals are not counted.
pub fn measure_knowledge_bytes(config: &RunConfig, templates: &TemplateSet) -> u64 {
    let size = |p: &std::path::Path| fs::metadata(p).map(|m| m.len()).unwrap_or(0);
    config.task_knowledge_files.iter().map(|p| size(p)).sum::<u64>()
        + templates.extra_files.iter().map(|p| size(p)).sum::<u64>()
}

fn load_knowledge(config: &RunConfig) -> Result<Vec<KnowledgeFile>, RunError> {
    config
        .task_knowledge_files
        .iter()
        .map(|p| {
            let text = fs::read_to_string(p).map_err(|e| RunError::Config(format!("{}: {e}", p.display())))?;
            Ok(KnowledgeFile { name: p.display().to_string(), text })
        })
        .collect()
}

/// Goals must use known predicates and name objects present in the scene.
pub fn check_goals(world: &WorldState, goals: &[GoalLiteral]) -> Result<(), RunError> {
    let registry = PredicateRegistry::new();
    for goal in goals {
        registry.check(goal).map_err(|_| RunError::UnresolvableGoal(goal.to_string()))?;
        let object_args = match registry.check(goal).expect("checked") {
            crate::predicates::Resolved::Canonical(crate::predicates::Predicate::IsFilledWith) => &goal.args[..1],
            _ => &goal.args[..],
        };
        if object_args.iter().any(|a| world.resolve_all(a).is_empty()) {
            return Err(RunError::UnresolvableGoal(goal.to_string()));
        }
    }
    Ok(())
}

struct Clocks {
    started: Instant,
    planning: Duration,
    cap: Duration,
}

impl Clocks {
    fn plan<T>(&mut self, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        self.planning += t.elapsed();
        out
    }

    fn expired(&self) -> bool {
        self.started.elapsed() > self.cap
    }
}

/// Runs one task end to end. `goals` reach only the oracle; no prompt sees them.
pub fn run_task(
    request: &TaskRequest,
    mut world: WorldState,
    goals: &[GoalLiteral],
    config: &RunConfig,
    backend: Arc<dyn ChatBackend>,
) -> Result<TaskRun, RunError> {
    config.validate()?;
    world.set_sensor(config.sensor).map_err(|e| RunError::Config(e.to_string()))?;
    check_goals(&world, goals)?;
    let templates = config.templates()?;
    let knowledge_bytes = measure_knowledge_bytes(config, &templates);
    let assets = PlannerAssets { templates, registry: PredicateRegistry::new(), knowledge: load_knowledge(config)? };

    let mut gateway = Gateway::new(backend);
    let mut clocks = Clocks {
        started: Instant::now(),
        planning: Duration::ZERO,
        cap: Duration::from_secs_f64(config.wall_clock_cap_secs),
    };
    let mut run = Loop {
        request,
        config,
        assets: &assets,
        gateway: &mut gateway,
        clocks: &mut clocks,
        trace: ExecutionTrace::default(),
        action_time: Duration::ZERO,
        refinements: 0,
    };
    let (task_context, plan, outcomes, failure) = run.execute(&mut world);
    let trace = std::mem::take(&mut run.trace);
    let action_time = run.action_time;
    let refinement_count = run.refinements;

    let all_done = plan.as_ref().is_some_and(|p| p.subtasks().all(|s| s.status == SubTaskStatus::Done));
    let oracle = world.oracle_check(goals).unwrap_or(false);
    let failure = failure.or((all_done && !oracle).then_some(RunFailure::OracleRejected));
    let result = RunResult {
        success: all_done && oracle,
        oracle,
        task_context,
        plan,
        subtask_outcomes: outcomes,
        trace,
        metrics: RunMetrics {
            planning_ms: clocks.planning.as_secs_f64() * 1000.0,
            action_ms: action_time.as_secs_f64() * 1000.0,
            total_ms: clocks.started.elapsed().as_secs_f64() * 1000.0,
            refinement_count,
            llm_calls: gateway.transcript().len(),
            knowledge_bytes,
        },
        failure,
    };
    tracing::info!(success = result.success, llm_calls = result.metrics.llm_calls, "run finished");
    Ok(TaskRun { result, transcript: gateway.into_transcript(), final_world: world })
}

struct Loop<'a> {
    request: &'a TaskRequest,
    config: &'a RunConfig,
    assets: &'a PlannerAssets,
    gateway: &'a mut Gateway,
    clocks: &'a mut Clocks,
    trace: ExecutionTrace,
    action_time: Duration,
    refinements: u32,
}

type LoopOutput = (Option<TaskContext>, Option<DecompositionPlan>, Vec<SubtaskOutcome>, Option<RunFailure>);

fn stage_error(stage: Stage, subtask: Option<&str>, e: &PlannerError) -> RunFailure {
    RunFailure::StageError { stage, subtask: subtask.map(str::to_string), message: e.to_string() }
}

impl Loop<'_> {
    fn execute(&mut self, world: &mut WorldState) -> LoopOutput {
        let (request, assets) = (self.request, self.assets);
        let views = self.clocks.plan(|| world.render_views());
        let gateway = &mut *self.gateway;
        let ctx = match self.clocks.plan(|| interpret_task(request, &views, assets, gateway)) {
            Ok(ctx) => ctx,
            Err(e) => return (None, None, Vec::new(), Some(stage_error(Stage::Interpret, None, &e))),
        };
        tracing::info!(task_id = %ctx.task_id, "interpreted");
        let gateway = &mut *self.gateway;
        let mut plan = match self.clocks.plan(|| decompose_task(&ctx, request, assets, gateway)) {
            Ok(plan) => plan,
            Err(e) => return (Some(ctx), None, Vec::new(), Some(stage_error(Stage::Decompose, None, &e))),
        };
        let classes = world.object_classes();
        let mut completed: Vec<SubTask> = Vec::new();
        let mut outcomes = Vec::new();
        for layer in 0..plan.layers.len() {
            for index in 0..plan.layers[layer].len() {
                let subtask = plan.layers[layer][index].clone();
                let (outcome, failure) = self.run_subtask(world, &ctx, &subtask, &completed, &classes);
                plan.layers[layer][index].status = outcome.subtask.status;
                outcomes.push(outcome);
                if let Some(failure) = failure {
                    // later layers depend on this one
                    return (Some(ctx), Some(plan), outcomes, Some(failure));
                }
                completed.push(plan.layers[layer][index].clone());
            }
        }
        (Some(ctx), Some(plan), outcomes, None)
    }

    fn run_subtask(
        &mut self,
        world: &mut WorldState,
        ctx: &TaskContext,
        subtask: &SubTask,
        completed: &[SubTask],
        classes: &[String],
    ) -> (SubtaskOutcome, Option<RunFailure>) {
        let mut outcome =
            SubtaskOutcome { subtask: subtask.clone(), satisfied_before_planning: false, attempts: Vec::new() };
        if world.eval_predicate(&subtask.condition).unwrap_or(false) {
            outcome.subtask.status = SubTaskStatus::Done;
            outcome.satisfied_before_planning = true;
            return (outcome, None);
        }
        let input = PlanInput { request: self.request, ctx, subtask, completed, object_classes: classes };
        let mut last: Option<(BehaviorTree, RefinementCause)> = None;
        let mut generation = 0;
        loop {
            if generation > self.config.max_refinements {
                outcome.subtask.status = SubTaskStatus::Failed;
                return (outcome, Some(RunFailure::BudgetExceeded { subtask: subtask.name.clone() }));
            }
            if self.clocks.expired() {
                outcome.subtask.status = SubTaskStatus::Failed;
                let elapsed_ms = self.clocks.started.elapsed().as_secs_f64() * 1000.0;
                return (outcome, Some(RunFailure::TerminationExceeded { elapsed_ms }));
            }
            let (stage, generated) = match &last {
                None => {
                    let (assets, gateway) = (self.assets, &mut *self.gateway);
                    (Stage::Plan, self.clocks.plan(|| plan_subtask_bt(&input, assets, gateway, generation)))
                }
                Some((failed_tree, cause)) => {
                    self.refinements += 1;
                    let (assets, gateway) = (self.assets, &mut *self.gateway);
                    let refinement = self.clocks.plan(|| RefinementInput {
                        request: self.request.clone(),
                        ctx: ctx.clone(),
                        subtask: subtask.clone(),
                        completed: completed.to_vec(),
                        failed_tree: failed_tree.clone(),
                        cause: cause.clone(),
                        fresh_views: world.render_views(),
                        object_classes: classes.to_vec(),
                    });
                    (Stage::Refine, self.clocks.plan(|| refine_bt(&refinement, assets, gateway, generation)))
                }
            };
            let tree = match generated {
                Ok(tree) => tree,
                Err(e) if e.is_tree_format() => {
                    tracing::warn!(subtask = %subtask.name, generation, error = %e, "no usable tree");
                    outcome.attempts.push(AttemptRecord {
                        generation,
                        stage,
                        tree: None,
                        outcome: None,
                        condition_met: false,
                        error: Some(e.to_string()),
                    });
                    generation += 1;
                    continue;
                }
                Err(e) => {
                    outcome.subtask.status = SubTaskStatus::Failed;
                    return (outcome, Some(stage_error(stage, Some(&subtask.name), &e)));
                }
            };

            let mut effector = SimEffector::new(
                world,
                &mut self.trace,
                &subtask.name,
                Duration::from_millis(self.config.action_delay_ms),
            );
            let ticked = tick(&tree, &mut effector);
            self.action_time += effector.elapsed();
            let condition_met = world.eval_predicate(&subtask.condition).unwrap_or(false);
            tracing::info!(subtask = %subtask.name, generation, ?ticked, condition_met, "ticked");
            outcome.attempts.push(AttemptRecord {
                generation,
                stage,
                tree: Some(tree.canonical()),
                outcome: Some(ticked.clone()),
                condition_met,
                error: None,
            });
            if condition_met {
                outcome.subtask.status = SubTaskStatus::Done;
                return (outcome, None);
            }
            let cause = match ticked {
                TickOutcome::Interrupted(report) => RefinementCause::GeneralError(report),
                TickOutcome::Completed(_) => RefinementCause::UnmetCondition(subtask.condition.clone()),
            };
            last = Some((tree, cause));
            generation += 1;
        }
    }
}
