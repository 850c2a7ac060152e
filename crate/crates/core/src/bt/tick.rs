use serde::{Deserialize, Serialize};

use super::node::{Attributes, BtNode, NodeKind};
use super::BehaviorTree;
use crate::fault::GeneralErrorReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Status {
    Success,
    Failure,
    /// Reserved for asynchronous effectors; the simulator never returns it.
    Running,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum TickOutcome {
    Completed(Status),
    Interrupted(GeneralErrorReport),
}

impl TickOutcome {
    pub fn report(&self) -> Option<&GeneralErrorReport> {
        match self {
            TickOutcome::Interrupted(report) => Some(report),
            TickOutcome::Completed(_) => None,
        }
    }
}

/// What a tree is ticked against. Leaf attributes are handed over untouched.
pub trait Effector {
    fn run_action(&mut self, attributes: &Attributes) -> Result<Status, GeneralErrorReport>;
    fn check_condition(&mut self, attributes: &Attributes) -> Result<bool, GeneralErrorReport>;
}

impl<E: Effector + ?Sized> Effector for &mut E {
    fn run_action(&mut self, attributes: &Attributes) -> Result<Status, GeneralErrorReport> {
        (**self).run_action(attributes)
    }

    fn check_condition(&mut self, attributes: &Attributes) -> Result<bool, GeneralErrorReport> {
        (**self).check_condition(attributes)
    }
}

/// One depth-first pass over the tree. The first general error aborts the
/// whole pass; no effector call happens after it.
pub fn tick<E: Effector + ?Sized>(tree: &BehaviorTree, effector: &mut E) -> TickOutcome {
    match tick_node(&tree.root, effector) {
        Ok(status) => TickOutcome::Completed(status),
        Err(report) => TickOutcome::Interrupted(report),
    }
}

fn tick_node<E: Effector + ?Sized>(node: &BtNode, effector: &mut E) -> Result<Status, GeneralErrorReport> {
    match node.kind {
        NodeKind::Action => effector.run_action(&node.attributes),
        NodeKind::Condition => {
            let holds = effector.check_condition(&node.attributes)?;
            Ok(if holds { Status::Success } else { Status::Failure })
        }
        NodeKind::Sequence => {
            for child in &node.children {
                match tick_node(child, effector)? {
                    Status::Success => continue,
                    other => return Ok(other),
                }
            }
            Ok(Status::Success)
        }
        NodeKind::Selector => {
            for child in &node.children {
                match tick_node(child, effector)? {
                    Status::Failure => continue,
                    other => return Ok(other),
                }
            }
            Ok(Status::Failure)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bt::parse_bt;
    use crate::fault::GeneralErrorKind;

    /// Effector answering from per-target scripts and logging every call.
    #[derive(Default)]
    struct Scripted {
        calls: Vec<String>,
    }

    impl Scripted {
        fn answer(&mut self, attributes: &Attributes) -> Result<bool, GeneralErrorReport> {
            let target = attributes.target().unwrap_or_default().to_string();
            self.calls.push(format!("{}:{}", attributes.name().unwrap_or_default(), target));
            match target.as_str() {
                "ok" => Ok(true),
                "bad" => Ok(false),
                other => Err(GeneralErrorReport::new(GeneralErrorKind::NotVisible, "x", other)),
            }
        }
    }

    impl Effector for Scripted {
        fn run_action(&mut self, attributes: &Attributes) -> Result<Status, GeneralErrorReport> {
            self.answer(attributes).map(|ok| if ok { Status::Success } else { Status::Failure })
        }

        fn check_condition(&mut self, attributes: &Attributes) -> Result<bool, GeneralErrorReport> {
            self.answer(attributes)
        }
    }

    fn run(xml: &str) -> (TickOutcome, Vec<String>) {
        let tree = parse_bt(xml).unwrap();
        let mut effector = Scripted::default();
        let outcome = tick(&tree, &mut effector);
        (outcome, effector.calls)
    }

    #[test]
    fn sequence_condition_then_action() {
        let (outcome, calls) =
            run(r#"<Sequence><Condition name="c" target="ok" value="1"/><Action name="a" target="ok"/></Sequence>"#);
        assert_eq!(outcome, TickOutcome::Completed(Status::Success));
        assert_eq!(calls.iter().filter(|c| c.starts_with("a:")).count(), 1);
    }

    #[test]
    fn selector_falls_through_false_condition() {
        let (outcome, calls) =
            run(r#"<Selector><Condition name="c" target="bad" value="1"/><Action name="a" target="ok"/></Selector>"#);
        assert_eq!(outcome, TickOutcome::Completed(Status::Success));
        assert_eq!(calls, vec!["c:bad", "a:ok"]);
    }

    #[test]
    fn interruption_stops_everything() {
        let (outcome, calls) =
            run(r#"<Sequence><Action name="a" target="mug"/><Action name="b" target="ok"/></Sequence>"#);
        let report = outcome.report().expect("interrupted");
        assert_eq!(report.kind, GeneralErrorKind::NotVisible);
        assert_eq!(calls, vec!["a:mug"]);
    }

    #[test]
    fn interruption_inside_selector_does_not_fall_through() {
        let (outcome, calls) =
            run(r#"<Selector><Action name="a" target="oops"/><Action name="b" target="ok"/></Selector>"#);
        assert!(matches!(outcome, TickOutcome::Interrupted(_)));
        assert_eq!(calls.len(), 1);
    }

    #[test]
    fn sequence_stops_at_first_failure() {
        let (outcome, calls) = run(
            r#"<Sequence><Action name="a" target="ok"/><Action name="b" target="bad"/><Action name="c" target="ok"/></Sequence>"#,
        );
        assert_eq!(outcome, TickOutcome::Completed(Status::Failure));
        assert_eq!(calls.len(), 2);
    }
}
