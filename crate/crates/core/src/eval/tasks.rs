use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::predicates::{GoalLiteral, Literal};
use crate::world::{load_scene_with, SceneError, SensorConfig, WorldState};

/// A task: instruction for the planner, scene for the simulator, goals for the oracle.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub name: String,
    pub instruction: String,
    /// Where the scene came from, for reports.
    pub scene_path: String,
    pub scene_text: String,
    pub goals: Vec<GoalLiteral>,
}

impl TaskSpec {
    pub fn load_world(&self, sensor: SensorConfig) -> Result<WorldState, SceneError> {
        load_scene_with(&self.scene_text, sensor)
    }

    /// A task from a scene file and goal literals such as `In(apple, fridge)=true`.
    pub fn from_parts(name: &str, instruction: &str, scene_path: &Path, goals: &[&str]) -> Result<TaskSpec, String> {
        let scene_text = fs::read_to_string(scene_path).map_err(|e| format!("{}: {e}", scene_path.display()))?;
        let goals =
            goals.iter().map(|g| g.parse::<Literal>().map_err(|e| e.to_string())).collect::<Result<Vec<_>, _>>()?;
        Ok(TaskSpec {
            name: name.to_string(),
            instruction: instruction.to_string(),
            scene_path: scene_path.display().to_string(),
            scene_text,
            goals,
        })
    }
}

pub const BUILTIN_TASK_NAMES: [&str; 4] = ["apple", "mug", "table", "coffee"];

fn builtin(name: &str, instruction: &str, scene: &'static str, goals: &[&str]) -> TaskSpec {
    TaskSpec {
        name: name.to_string(),
        instruction: instruction.to_string(),
        scene_path: format!("assets/scenes/{name}.scene"),
        scene_text: scene.to_string(),
        goals: goals.iter().map(|g| g.parse().expect("builtin goal parses")).collect(),
    }
}

/// The four household tasks.
pub fn builtin_tasks() -> Vec<TaskSpec> {
    vec![
        builtin(
            "apple",
            "put the apple in the fridge",
            include_str!("../../assets/scenes/apple.scene"),
            &["In(apple, fridge)=true"],
        ),
        builtin(
            "mug",
            "soak the mug",
            include_str!("../../assets/scenes/mug.scene"),
            &["In(mug, sink)=true", "FaucetOn(sink)=true"],
        ),
        builtin(
            "table",
            "set a place at the dining table",
            include_str!("../../assets/scenes/table.scene"),
            &["On(plate, table)=true", "On(fork, table)=true", "On(knife, table)=true"],
        ),
        builtin(
            "coffee",
            "bring a mug of coffee to the table",
            include_str!("../../assets/scenes/coffee.scene"),
            &["FilledWith(coffee_mug, coffee)=true", "On(coffee_mug, table)=true"],
        ),
    ]
}

pub fn builtin_task(name: &str) -> Option<TaskSpec> {
    builtin_tasks().into_iter().find(|t| t.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orchestrator::check_goals;
    use crate::predicates::PredicateValue;

    #[test]
    fn four_tasks_with_their_goals() {
        let tasks = builtin_tasks();
        assert_eq!(tasks.iter().map(|t| t.name.as_str()).collect::<Vec<_>>(), BUILTIN_TASK_NAMES);
        assert_eq!(tasks[0].instruction, "put the apple in the fridge");
        assert_eq!(tasks[0].goals, vec![Literal::new("In", &["apple", "fridge"], PredicateValue::Bool(true))]);
        assert_eq!(
            tasks[1].goals,
            vec![
                Literal::new("In", &["mug", "sink"], PredicateValue::Bool(true)),
                Literal::new("FaucetOn", &["sink"], PredicateValue::Bool(true)),
            ]
        );
        assert_eq!(
            tasks[3].goals,
            vec![
                Literal::new("FilledWith", &["coffee_mug", "coffee"], PredicateValue::Bool(true)),
                Literal::new("On", &["coffee_mug", "table"], PredicateValue::Bool(true)),
            ]
        );
    }

    #[test]
    fn scenes_load_and_goals_resolve_but_do_not_hold_yet() {
        for task in builtin_tasks() {
            let world = task.load_world(SensorConfig::default()).unwrap();
            check_goals(&world, &task.goals).unwrap();
            assert!(!world.oracle_check(&task.goals).unwrap(), "{} starts solved", task.name);
            let start = world.agent().pos;
            for obj in world.objects() {
                let at = world.position_of(&obj.id).unwrap();
                assert!(at.chebyshev(start) <= world.sensor().view_distance, "{} out of range", obj.id);
            }
        }
    }
}
