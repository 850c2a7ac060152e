#![allow(dead_code)]

use std::sync::Arc;

use zkplan::gateway::{BackendConfig, ChatBackend, ReplayBackend, Transcript};
use zkplan::{builtin_task, run_task, RunConfig, TaskRequest, TaskRun, TaskSpec};

pub fn config(fixtures: &str) -> RunConfig {
    RunConfig { backend: BackendConfig::scripted(fixtures), ..RunConfig::default() }
}

pub fn task(name: &str) -> TaskSpec {
    builtin_task(name).unwrap_or_else(|| panic!("no builtin task {name}"))
}

pub fn run_with_backend(spec: &TaskSpec, config: &RunConfig, backend: Arc<dyn ChatBackend>) -> TaskRun {
    let world = spec.load_world(config.sensor).expect("scene loads");
    let request = TaskRequest::new(&spec.instruction).expect("instruction");
    run_task(&request, world, &spec.goals, config, backend).expect("run starts")
}

pub fn run(spec: &TaskSpec, config: &RunConfig) -> TaskRun {
    let backend = config.backend.build(&spec.name).expect("backend builds");
    run_with_backend(spec, config, backend)
}

pub fn run_builtin(name: &str, fixtures: &str) -> TaskRun {
    run(&task(name), &config(fixtures))
}

pub fn replay(spec: &TaskSpec, config: &RunConfig, transcript: Transcript) -> TaskRun {
    run_with_backend(spec, config, Arc::new(ReplayBackend::new(transcript)))
}
