//! Zero-knowledge task planning for a simulated household robot.
//!
//! An instruction is interpreted against rendered views, decomposed into
//! layered sub-tasks with predicate completion conditions, and each sub-task is
//! planned as an XML behavior tree, ticked in a grid-world simulator, and
//! refined from execution feedback. Goal literals reach only the oracle.

pub mod bt;
pub mod eval;
pub mod fault;
pub mod gateway;
pub mod orchestrator;
pub mod planner;
pub mod predicates;
pub mod refiner;
pub mod world;

pub use bt::{parse_bt, serialize_bt, tick, BehaviorTree, BtNode, Effector, NodeKind, ParseError, Status, TickOutcome};
pub use eval::{builtin_task, builtin_tasks, run_batch, BatchSummary, TaskSpec, TrialReport};
pub use fault::{GeneralErrorKind, GeneralErrorReport};
pub use gateway::{BackendConfig, BackendMode, ChatBackend, ChatMessage, Gateway, GatewayError, Stage, Transcript};
pub use orchestrator::{measure_knowledge_bytes, run_task, RunConfig, RunError, RunFailure, RunResult, TaskRun};
pub use planner::{DecompositionPlan, SubTask, SubTaskStatus, TaskContext, TaskRequest};
pub use predicates::{CompletionCondition, GoalLiteral, Literal, PredicateRegistry, PredicateValue};
pub use world::{load_scene, ActionResult, SensorConfig, ViewText, WorldState};
