use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::gateway::Transcript;
use crate::predicates::GoalLiteral;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FirewallHit {
    pub seq: usize,
    pub goal: String,
}

/// Matches the call text of a goal, `pred(a, b)`, with any spacing and case, as a whole word.
pub fn goal_pattern(goal: &GoalLiteral) -> Regex {
    let args: Vec<String> = goal.args.iter().map(|a| regex::escape(a)).collect();
    let pattern = format!(r"(?i)\b{}\s*\(\s*{}\s*\)", regex::escape(&goal.predicate), args.join(r"\s*,\s*"));
    Regex::new(&pattern).expect("escaped pattern")
}

/// Requests (text and decoded blobs) that mention any goal literal.
pub fn firewall_violations(transcript: &Transcript, goals: &[GoalLiteral]) -> Vec<FirewallHit> {
    let patterns: Vec<(String, Regex)> = goals.iter().map(|g| (g.to_string(), goal_pattern(g))).collect();
    let mut hits = Vec::new();
    for entry in transcript.entries() {
        let text: String = entry.request.iter().map(|m| m.plain_text()).collect::<Vec<_>>().join("\n");
        for (goal, re) in &patterns {
            if re.is_match(&text) {
                hits.push(FirewallHit { seq: entry.seq, goal: goal.clone() });
            }
        }
    }
    hits
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predicates::{Literal, PredicateValue};

    #[test]
    fn pattern_is_word_bounded() {
        let goal = Literal::new("In", &["apple", "fridge"], PredicateValue::Bool(true));
        let re = goal_pattern(&goal);
        assert!(re.is_match("the goal is In( apple ,fridge)"));
        assert!(!re.is_match("isContainedIn(apple, fridge)=true"));
        assert!(!re.is_match("In(apple, fridge_door)"));
    }
}
