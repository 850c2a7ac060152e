use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::bt::{Attributes, Effector, Status};
use crate::fault::GeneralErrorReport;
use crate::world::{ActionResult, WorldState};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub subtask: String,
    pub action: String,
    pub attributes: Vec<(String, String)>,
    pub result: ActionResult,
}

/// Every action executed in a run, in order. Each `Success` entry is exactly one world mutation.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionTrace {
    pub entries: Vec<TraceEntry>,
}

impl ExecutionTrace {
    pub fn last_success(&self) -> Option<&TraceEntry> {
        self.entries.iter().rev().find(|e| e.result == ActionResult::Success)
    }
}

/// Adapts the simulator to tree ticking, logging actions and timing them.
pub struct SimEffector<'a> {
    world: &'a mut WorldState,
    trace: &'a mut ExecutionTrace,
    subtask: &'a str,
    delay: Duration,
    elapsed: Duration,
}

impl<'a> SimEffector<'a> {
    pub fn new(world: &'a mut WorldState, trace: &'a mut ExecutionTrace, subtask: &'a str, delay: Duration) -> Self {
        SimEffector { world, trace, subtask, delay, elapsed: Duration::ZERO }
    }

    /// Time spent inside the effector, including the configured delay.
    pub fn elapsed(&self) -> Duration {
        self.elapsed
    }

    fn timed<T>(&mut self, f: impl FnOnce(&mut WorldState) -> T) -> T {
        let started = Instant::now();
        let out = f(self.world);
        if !self.delay.is_zero() {
            thread::sleep(self.delay);
        }
        self.elapsed += started.elapsed();
        out
    }
}

impl Effector for SimEffector<'_> {
    fn run_action(&mut self, attributes: &Attributes) -> Result<Status, GeneralErrorReport> {
        let name = attributes.name().unwrap_or_default().to_string();
        let result = self.timed(|w| w.execute_action(&name, attributes));
        self.trace.entries.push(TraceEntry {
            subtask: self.subtask.to_string(),
            action: name,
            attributes: attributes.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
            result: result.clone(),
        });
        match result {
            ActionResult::Success => Ok(Status::Success),
            ActionResult::Failure(_) => Ok(Status::Failure),
            ActionResult::Error(report) => Err(report),
        }
    }

    fn check_condition(&mut self, attributes: &Attributes) -> Result<bool, GeneralErrorReport> {
        self.timed(|w| w.check_condition(attributes))
    }
}
