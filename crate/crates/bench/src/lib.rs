//! Inputs shared by the benchmarks.

use zkplan::bt::BtNode;
use zkplan::{builtin_task, run_task, BackendConfig, BehaviorTree, RunConfig, RunResult, TaskRequest};

/// The golden tree for the coffee task's first sub-task.
pub const LOCATE_MUG_XML: &str = r#"<Sequence>
    <Selector>
        <Condition name="isVisible" target="mug" value="1"/>
        <Action name="ScanRoom" target="mug"/>
    </Selector>
    <Action name="Navigate_To" target="mug"/>
    <Action name="Grab" target="mug"/>
</Sequence>"#;

/// A full tree with `fanout` children per composite, `depth` levels deep.
/// Sequences and selectors alternate by level; leaves are scan actions.
pub fn synthetic_tree(fanout: usize, depth: usize) -> BehaviorTree {
    fn build(fanout: usize, depth: usize, level: usize) -> BtNode {
        if level == depth {
            return BtNode::action("ScanRoom", Some("mug"));
        }
        let kids = (0..fanout).map(|_| build(fanout, depth, level + 1)).collect();
        if level.is_multiple_of(2) {
            BtNode::sequence(kids)
        } else {
            BtNode::selector(kids)
        }
    }
    BehaviorTree::from_root(build(fanout, depth, 0)).expect("synthetic tree is valid")
}

/// One end-to-end run of a built-in task against the golden fixtures.
pub fn golden_run(task: &str) -> RunResult {
    let spec = builtin_task(task).expect("builtin task");
    let config = RunConfig { backend: BackendConfig::scripted("golden"), ..RunConfig::default() };
    let world = spec.load_world(config.sensor).expect("scene loads");
    let backend = config.backend.build(task).expect("fixtures load");
    let request = TaskRequest::new(&spec.instruction).expect("instruction");
    run_task(&request, world, &spec.goals, &config, backend).expect("run starts").result
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_tree_has_the_expected_size() {
        // 1 + 3 + 9 + 27
        assert_eq!(synthetic_tree(3, 3).root.size(), 40);
    }

    #[test]
    fn golden_inputs_are_sound() {
        assert!(zkplan::parse_bt(LOCATE_MUG_XML).is_ok());
        assert!(golden_run("apple").success);
    }
}
