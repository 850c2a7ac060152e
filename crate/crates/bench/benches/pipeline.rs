use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use zkplan::bt::Attributes;
use zkplan::planner::extract_xml;
use zkplan::{builtin_task, parse_bt, serialize_bt, tick, Effector, GeneralErrorReport, SensorConfig, Status};
use zkplan_bench::{golden_run, synthetic_tree, LOCATE_MUG_XML};

/// Succeeds on every call; isolates traversal cost from simulation.
struct Nop;

impl Effector for Nop {
    fn run_action(&mut self, _: &Attributes) -> Result<Status, GeneralErrorReport> {
        Ok(Status::Success)
    }
    fn check_condition(&mut self, _: &Attributes) -> Result<bool, GeneralErrorReport> {
        Ok(true)
    }
}

fn bt(c: &mut Criterion) {
    c.bench_function("parse_bt/locate_mug", |b| b.iter(|| parse_bt(black_box(LOCATE_MUG_XML)).unwrap()));

    let big = synthetic_tree(4, 5);
    let big_xml = serialize_bt(&big);
    c.bench_function("parse_bt/synthetic_1365", |b| b.iter(|| parse_bt(black_box(&big_xml)).unwrap()));
    c.bench_function("serialize_bt/synthetic_1365", |b| b.iter(|| serialize_bt(black_box(&big))));
    c.bench_function("tick/synthetic_1365", |b| b.iter(|| tick(black_box(&big), &mut Nop)));

    let reply = format!("Here is the plan.\n```xml\n{LOCATE_MUG_XML}\n```\nLet me know.");
    c.bench_function("extract_xml/fenced_reply", |b| b.iter(|| extract_xml(black_box(&reply)).unwrap()));
}

fn world(c: &mut Criterion) {
    let spec = builtin_task("coffee").unwrap();
    let start = spec.load_world(SensorConfig::default()).unwrap();
    let tree = parse_bt(LOCATE_MUG_XML).unwrap();
    c.bench_function("render_views/coffee", |b| b.iter(|| black_box(&start).render_views()));
    c.bench_function("tick/locate_mug_in_world", |b| {
        b.iter_batched(
            || start.clone(),
            |mut w| {
                let mut sim = WorldEffector(&mut w);
                tick(&tree, &mut sim)
            },
            BatchSize::SmallInput,
        )
    });
}

struct WorldEffector<'a>(&'a mut zkplan::WorldState);

impl Effector for WorldEffector<'_> {
    fn run_action(&mut self, a: &Attributes) -> Result<Status, GeneralErrorReport> {
        match self.0.execute_action(a.name().unwrap_or_default(), a) {
            zkplan::ActionResult::Success => Ok(Status::Success),
            zkplan::ActionResult::Failure(_) => Ok(Status::Failure),
            zkplan::ActionResult::Error(r) => Err(r),
        }
    }
    fn check_condition(&mut self, a: &Attributes) -> Result<bool, GeneralErrorReport> {
        self.0.check_condition(a)
    }
}

fn end_to_end(c: &mut Criterion) {
    let mut group = c.benchmark_group("golden_run");
    for task in zkplan::eval::BUILTIN_TASK_NAMES {
        group.bench_function(task, |b| b.iter(|| golden_run(black_box(task))));
    }
    group.finish();
}

criterion_group!(benches, bt, world, end_to_end);
criterion_main!(benches);
