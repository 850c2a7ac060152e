use thiserror::Error;

use super::{ObjectState, Relation, WorldState};
use crate::bt::Attributes;
use crate::fault::{GeneralErrorKind, GeneralErrorReport};
use crate::predicates::{Literal, Predicate, PredicateRegistry, PredicateValue, Resolved};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown predicate `{0}`")]
pub struct UnknownPredicate(pub String);

impl WorldState {
    /// Ground-truth truth value of a literal. Object references denote every
    /// matching object; a literal holds when some binding does.
    pub fn eval_predicate(&self, literal: &Literal) -> Result<bool, UnknownPredicate> {
        let registry = PredicateRegistry::new();
        let resolved = registry.check(literal).map_err(|_| UnknownPredicate(literal.predicate.clone()))?;
        let arg = |i: usize| self.resolve_all(&literal.args[i]);
        let expect_bool = |truth: bool| match &literal.expected {
            PredicateValue::Bool(b) => truth == *b,
            PredicateValue::Substance(_) => false,
        };

        let result = match resolved {
            Resolved::PairedFaucetOn => expect_bool(arg(0).iter().any(|o| self.faucet_running_for(o))),
            Resolved::Canonical(p) => match p {
                Predicate::IsVisible => expect_bool(arg(0).iter().any(|o| self.is_visible(&o.id))),
                Predicate::IsClose => expect_bool(
                    arg(0).iter().any(|o| self.distance_to(&o.id).is_some_and(|d| d <= self.sensor.reach_distance)),
                ),
                Predicate::IsOpen => expect_bool(arg(0).iter().any(|o| o.is_open)),
                Predicate::IsToggledOn => expect_bool(arg(0).iter().any(|o| o.is_on)),
                Predicate::IsHolding => {
                    expect_bool(arg(0).iter().any(|o| self.agent.holding.as_deref() == Some(o.id.as_str())))
                }
                Predicate::IsOnTop => expect_bool(self.related(&arg(0), &arg(1), Relation::On)),
                Predicate::IsContainedIn => expect_bool(self.related(&arg(0), &arg(1), Relation::In)),
                Predicate::IsFilledWith => {
                    let objs = arg(0);
                    if literal.args.len() == 2 {
                        let substance = literal.args[1].as_str();
                        expect_bool(objs.iter().any(|o| fill_matches(o, substance)))
                    } else {
                        match &literal.expected {
                            PredicateValue::Substance(s) => objs.iter().any(|o| fill_matches(o, s)),
                            PredicateValue::Bool(b) => objs.iter().any(|o| o.fill.is_some()) == *b,
                        }
                    }
                }
            },
        };
        Ok(result)
    }

    /// Conjunction of every goal literal over ground truth.
    pub fn oracle_check(&self, goals: &[Literal]) -> Result<bool, UnknownPredicate> {
        for goal in goals {
            if !self.eval_predicate(goal)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Behavior-tree condition check. Unlike [`Self::eval_predicate`], this is
    /// perception-gated: the target must exist and, except for `isVisible`
    /// itself, be in view.
    ///
    /// Binary predicates take their second argument from a `receptacle`
    /// (or `object2`) attribute. Unknown predicate names evaluate to false.
    pub fn check_condition(&self, attributes: &Attributes) -> Result<bool, GeneralErrorReport> {
        let name = attributes.name().unwrap_or_default();
        let reference = attributes.target().unwrap_or_default().trim();
        let Some(target) = self.resolve(reference).map(str::to_string) else {
            return Err(GeneralErrorReport::new(GeneralErrorKind::DoesNotExist, name, reference));
        };
        let registry = PredicateRegistry::new();
        let Some(resolved) = registry.resolve(name) else { return Ok(false) };
        if resolved != Resolved::Canonical(Predicate::IsVisible) && !self.is_visible(&target) {
            return Err(GeneralErrorReport::new(GeneralErrorKind::NotVisible, name, &target));
        }

        let mut args = vec![target];
        if *resolved.arity().start() == 2 {
            match attributes.get("receptacle").or_else(|| attributes.get("object2")) {
                Some(second) => args.push(second.to_string()),
                None => return Ok(false),
            }
        }
        let literal = Literal {
            predicate: name.to_string(),
            args,
            expected: PredicateValue::parse(attributes.get("value").unwrap_or("true")),
        };
        Ok(self.eval_predicate(&literal).unwrap_or(false))
    }

    fn related(&self, objects: &[&ObjectState], receptacles: &[&ObjectState], relation: Relation) -> bool {
        objects.iter().any(|o| {
            o.parent.as_ref().is_some_and(|l| l.relation == relation && receptacles.iter().any(|r| r.id == l.id))
        })
    }

    fn faucet_running_for(&self, obj: &ObjectState) -> bool {
        match obj.class.as_str() {
            "faucet" => obj.is_on,
            "sink" => self
                .objects
                .values()
                .filter(|f| f.class == "faucet" && f.is_on)
                .any(|f| self.paired_sink(&f.id) == Some(obj.id.as_str())),
            _ => false,
        }
    }
}

fn fill_matches(obj: &ObjectState, substance: &str) -> bool {
    obj.fill.as_deref().is_some_and(|f| f.eq_ignore_ascii_case(substance))
}
