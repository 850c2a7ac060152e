use std::fmt;

use base64::engine::general_purpose::STANDARD;
use base64::Engine as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::System => "system",
            Role::User => "user",
            Role::Assistant => "assistant",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Part {
    Text {
        text: String,
    },
    /// Base64 payload plus its media type.
    EncodedBlob {
        media_type: String,
        data: String,
    },
}

impl Part {
    pub fn text(text: impl Into<String>) -> Part {
        Part::Text { text: text.into() }
    }

    pub fn blob(media_type: &str, bytes: &[u8]) -> Part {
        Part::EncodedBlob { media_type: media_type.to_string(), data: STANDARD.encode(bytes) }
    }

    pub fn decode_blob(&self) -> Option<Result<Vec<u8>, base64::DecodeError>> {
        match self {
            Part::EncodedBlob { data, .. } => Some(STANDARD.decode(data)),
            Part::Text { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MessageError {
    #[error("message has no parts")]
    Empty,
    #[error("blob part {index} is not valid base64: {reason}")]
    BadBlob { index: usize, reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub parts: Vec<Part>,
}

impl ChatMessage {
    pub fn new(role: Role, parts: Vec<Part>) -> Self {
        ChatMessage { role, parts }
    }

    pub fn system(text: impl Into<String>) -> Self {
        ChatMessage::new(Role::System, vec![Part::text(text)])
    }

    pub fn user(text: impl Into<String>) -> Self {
        ChatMessage::new(Role::User, vec![Part::text(text)])
    }

    pub fn assistant(text: impl Into<String>) -> Self {
        ChatMessage::new(Role::Assistant, vec![Part::text(text)])
    }

    pub fn validate(&self) -> Result<(), MessageError> {
        if self.parts.is_empty() {
            return Err(MessageError::Empty);
        }
        for (index, part) in self.parts.iter().enumerate() {
            if let Some(Err(e)) = part.decode_blob() {
                return Err(MessageError::BadBlob { index, reason: e.to_string() });
            }
        }
        Ok(())
    }

    /// Concatenated text parts, plus decoded text blobs.
    pub fn plain_text(&self) -> String {
        let mut out = Vec::new();
        for part in &self.parts {
            match part {
                Part::Text { text } => out.push(text.clone()),
                Part::EncodedBlob { .. } => {
                    if let Some(Ok(bytes)) = part.decode_blob() {
                        out.push(String::from_utf8_lossy(&bytes).into_owned());
                    }
                }
            }
        }
        out.join("\n")
    }
}

/// Pipeline stage a request belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Interpret,
    Decompose,
    Plan,
    Refine,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Interpret => "interpret",
            Stage::Decompose => "decompose",
            Stage::Plan => "plan",
            Stage::Refine => "refine",
        }
    }

    pub fn parse(text: &str) -> Option<Stage> {
        [Stage::Interpret, Stage::Decompose, Stage::Plan, Stage::Refine].into_iter().find(|s| s.as_str() == text)
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blobs_round_trip_and_validate() {
        let msg = ChatMessage::new(Role::User, vec![Part::text("look"), Part::blob("text/plain", b"view 1")]);
        msg.validate().unwrap();
        assert_eq!(msg.plain_text(), "look\nview 1");
        let bad = ChatMessage::new(
            Role::User,
            vec![Part::EncodedBlob { media_type: "text/plain".into(), data: "%%%".into() }],
        );
        assert!(matches!(bad.validate(), Err(MessageError::BadBlob { index: 0, .. })));
        assert_eq!(ChatMessage::new(Role::User, vec![]).validate(), Err(MessageError::Empty));
    }
}
