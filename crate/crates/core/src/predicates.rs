//! The fixed registry of general predicates and the literal type used for
//! both sub-task completion conditions and oracle goal literals.

use std::fmt;
use std::ops::RangeInclusive;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Predicate {
    IsVisible,
    IsClose,
    IsOpen,
    IsToggledOn,
    IsOnTop,
    IsContainedIn,
    IsFilledWith,
    IsHolding,
}

impl Predicate {
    pub const ALL: [Predicate; 8] = [
        Predicate::IsVisible,
        Predicate::IsClose,
        Predicate::IsOpen,
        Predicate::IsToggledOn,
        Predicate::IsOnTop,
        Predicate::IsContainedIn,
        Predicate::IsFilledWith,
        Predicate::IsHolding,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Predicate::IsVisible => "isVisible",
            Predicate::IsClose => "isClose",
            Predicate::IsOpen => "isOpen",
            Predicate::IsToggledOn => "isToggledOn",
            Predicate::IsOnTop => "isOnTop",
            Predicate::IsContainedIn => "isContainedIn",
            Predicate::IsFilledWith => "isFilledWith",
            Predicate::IsHolding => "isHolding",
        }
    }

    /// `isFilledWith` takes either `(object)` with a substance value or
    /// `(object, substance)` with a boolean value.
    pub fn arity(self) -> RangeInclusive<usize> {
        match self {
            Predicate::IsOnTop | Predicate::IsContainedIn => 2..=2,
            Predicate::IsFilledWith => 1..=2,
            _ => 1..=1,
        }
    }

    fn signature(self) -> &'static str {
        match self {
            Predicate::IsVisible => "isVisible(object)=true|false",
            Predicate::IsClose => "isClose(object)=true|false",
            Predicate::IsOpen => "isOpen(object)=true|false",
            Predicate::IsToggledOn => "isToggledOn(object)=true|false",
            Predicate::IsOnTop => "isOnTop(object, receptacle)=true|false",
            Predicate::IsContainedIn => "isContainedIn(object, receptacle)=true|false",
            Predicate::IsFilledWith => "isFilledWith(object)=<substance>",
            Predicate::IsHolding => "isHolding(object)=true|false",
        }
    }
}

/// How a name maps onto the canonical predicates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Resolved {
    Canonical(Predicate),
    /// `FaucetOn(x)`: `isToggledOn` of the faucet paired with `x` (or `x` itself if it is a faucet).
    PairedFaucetOn,
}

impl Resolved {
    pub fn arity(self) -> RangeInclusive<usize> {
        match self {
            Resolved::Canonical(p) => p.arity(),
            Resolved::PairedFaucetOn => 1..=1,
        }
    }
}

const ALIASES: &[(&str, Resolved)] = &[
    ("On", Resolved::Canonical(Predicate::IsOnTop)),
    ("In", Resolved::Canonical(Predicate::IsContainedIn)),
    ("FilledWith", Resolved::Canonical(Predicate::IsFilledWith)),
    ("FaucetOn", Resolved::PairedFaucetOn),
    ("Visible", Resolved::Canonical(Predicate::IsVisible)),
    ("Holding", Resolved::Canonical(Predicate::IsHolding)),
    ("Open", Resolved::Canonical(Predicate::IsOpen)),
    ("ToggledOn", Resolved::Canonical(Predicate::IsToggledOn)),
    ("Close", Resolved::Canonical(Predicate::IsClose)),
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PredicateError {
    #[error("unknown predicate `{0}`")]
    Unknown(String),
    #[error("predicate `{name}` takes {expected} argument(s), got {got}")]
    Arity { name: String, expected: String, got: usize },
}

/// Fixed at startup and identical for every task.
#[derive(Debug, Clone, Copy, Default)]
pub struct PredicateRegistry;

impl PredicateRegistry {
    pub fn new() -> Self {
        PredicateRegistry
    }

    /// Case-insensitive lookup over canonical names and aliases.
    pub fn resolve(&self, name: &str) -> Option<Resolved> {
        let name = name.trim();
        Predicate::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(name))
            .map(Resolved::Canonical)
            .or_else(|| ALIASES.iter().find(|(alias, _)| alias.eq_ignore_ascii_case(name)).map(|(_, r)| *r))
    }

    pub fn check(&self, literal: &Literal) -> Result<Resolved, PredicateError> {
        let resolved =
            self.resolve(&literal.predicate).ok_or_else(|| PredicateError::Unknown(literal.predicate.clone()))?;
        let arity = resolved.arity();
        if !arity.contains(&literal.args.len()) {
            let expected = if arity.start() == arity.end() {
                arity.start().to_string()
            } else {
                format!("{}-{}", arity.start(), arity.end())
            };
            return Err(PredicateError::Arity { name: literal.predicate.clone(), expected, got: literal.args.len() });
        }
        Ok(resolved)
    }

    /// Validates the literal and rewrites renaming aliases to the canonical name.
    pub fn canonicalize(&self, literal: &Literal) -> Result<Literal, PredicateError> {
        let mut out = literal.clone();
        match self.check(literal)? {
            Resolved::Canonical(p) => out.predicate = p.name().to_string(),
            Resolved::PairedFaucetOn => out.predicate = "FaucetOn".to_string(),
        }
        Ok(out)
    }

    /// Listing embedded in decomposition prompts.
    pub fn listing(&self) -> String {
        Predicate::ALL.iter().map(|p| format!("- {}", p.signature())).collect::<Vec<_>>().join("\n")
    }
}

/// Boolean-or-substance value on the right of a literal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PredicateValue {
    Bool(bool),
    Substance(String),
}

impl PredicateValue {
    pub fn parse(token: &str) -> PredicateValue {
        let token = token.trim();
        match token.to_ascii_lowercase().as_str() {
            "1" | "true" => PredicateValue::Bool(true),
            "0" | "false" => PredicateValue::Bool(false),
            _ => PredicateValue::Substance(token.to_string()),
        }
    }
}

impl fmt::Display for PredicateValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PredicateValue::Bool(b) => write!(f, "{b}"),
            PredicateValue::Substance(s) => f.write_str(s),
        }
    }
}

/// `predicate(arg, ...)=value`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Literal {
    pub predicate: String,
    pub args: Vec<String>,
    pub expected: PredicateValue,
}

/// Ground-truth oracle assertion.
pub type GoalLiteral = Literal;
/// Sub-task completion condition.
pub type CompletionCondition = Literal;

impl Literal {
    pub fn new(predicate: &str, args: &[&str], expected: PredicateValue) -> Self {
        Literal { predicate: predicate.to_string(), args: args.iter().map(|a| a.to_string()).collect(), expected }
    }

    /// Just the call part, `predicate(a, b)`.
    pub fn call_text(&self) -> String {
        format!("{}({})", self.predicate, self.args.join(", "))
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}={}", self.call_text(), self.expected)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cannot parse literal `{text}`: {reason}")]
pub struct LiteralParseError {
    pub text: String,
    pub reason: &'static str,
}

impl FromStr for Literal {
    type Err = LiteralParseError;

    /// Accepts `pred(a, b)=value` and `pred(a, b) = value`; a missing value means `true`.
    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let err = |reason| LiteralParseError { text: text.to_string(), reason };
        let trimmed = text.trim();
        let open = trimmed.find('(').ok_or_else(|| err("missing `(`"))?;
        let close = trimmed.rfind(')').ok_or_else(|| err("missing `)`"))?;
        if close < open {
            return Err(err("unbalanced parentheses"));
        }
        let predicate = trimmed[..open].trim();
        if predicate.is_empty() || !predicate.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(err("bad predicate name"));
        }
        let args: Vec<String> = trimmed[open + 1..close].split(',').map(|a| a.trim().to_string()).collect();
        if args.iter().any(|a| a.is_empty()) {
            return Err(err("empty argument"));
        }
        let rest = trimmed[close + 1..].trim();
        let expected = if rest.is_empty() {
            PredicateValue::Bool(true)
        } else {
            let value = rest.strip_prefix('=').ok_or_else(|| err("expected `=` after `)`"))?.trim();
            if value.is_empty() {
                return Err(err("empty value"));
            }
            PredicateValue::parse(value)
        };
        Ok(Literal { predicate: predicate.to_string(), args, expected })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_binary_literal() {
        let lit: Literal = "isOnTop(mug, table)=true".parse().unwrap();
        assert_eq!(lit, Literal::new("isOnTop", &["mug", "table"], PredicateValue::Bool(true)));
        let sub: Literal = "isFilledWith(mug) = coffee".parse().unwrap();
        assert_eq!(sub.expected, PredicateValue::Substance("coffee".into()));
        assert_eq!(sub.to_string(), "isFilledWith(mug)=coffee");
    }

    #[test]
    fn rejects_broken_literals() {
        for bad in ["isOpen", "isOpen()", "isOpen(a,)", "is Open(a)=1", "isOpen(a) true", "isOpen(a)="] {
            assert!(bad.parse::<Literal>().is_err(), "{bad}");
        }
    }

    #[test]
    fn aliases_resolve() {
        let reg = PredicateRegistry::new();
        assert_eq!(reg.resolve("On"), Some(Resolved::Canonical(Predicate::IsOnTop)));
        assert_eq!(reg.resolve("In"), Some(Resolved::Canonical(Predicate::IsContainedIn)));
        assert_eq!(reg.resolve("FilledWith"), Some(Resolved::Canonical(Predicate::IsFilledWith)));
        assert_eq!(reg.resolve("FaucetOn"), Some(Resolved::PairedFaucetOn));
        assert_eq!(reg.resolve("visible"), Some(Resolved::Canonical(Predicate::IsVisible)));
        assert_eq!(reg.resolve("isShiny"), None);
    }

    #[test]
    fn arity_is_enforced() {
        let reg = PredicateRegistry::new();
        let lit: Literal = "isOnTop(mug)=true".parse().unwrap();
        assert!(matches!(reg.check(&lit), Err(PredicateError::Arity { .. })));
        let lit: Literal = "FilledWith(coffee_mug, coffee)=true".parse().unwrap();
        assert!(reg.check(&lit).is_ok());
        assert_eq!(reg.canonicalize(&lit).unwrap().predicate, "isFilledWith");
    }
}
