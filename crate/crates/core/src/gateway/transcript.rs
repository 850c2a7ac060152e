//! Line-delimited JSON transcripts, one record per backend exchange.

use std::fs;
use std::io::{self, Write as _};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::message::{ChatMessage, Stage};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub seq: usize,
    pub stage: Stage,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subtask: Option<String>,
    pub attempt: u32,
    #[serde(default)]
    pub format_retry: bool,
    pub request_digest: String,
    pub request: Vec<ChatMessage>,
    pub response: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub latency_ms: f64,
    /// Milliseconds since the Unix epoch, never decreasing within a transcript.
    pub timestamp_ms: u64,
}

/// SHA-256 over the canonical JSON encoding of the messages.
pub fn request_digest(messages: &[ChatMessage]) -> String {
    let bytes = serde_json::to_vec(messages).expect("messages serialize");
    hex::encode(Sha256::digest(&bytes))
}

#[derive(Debug, Error)]
pub enum TranscriptError {
    #[error("transcript io: {0}")]
    Io(#[from] io::Error),
    #[error("transcript line {line}: {message}")]
    Malformed { line: usize, message: String },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    entries: Vec<TranscriptEntry>,
}

impl Transcript {
    pub fn new() -> Self {
        Transcript::default()
    }

    pub fn entries(&self) -> &[TranscriptEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Appends, fixing up `seq` and clamping the timestamp so it never goes backwards.
    pub fn push(&mut self, mut entry: TranscriptEntry) {
        entry.seq = self.entries.len();
        if let Some(last) = self.entries.last() {
            entry.timestamp_ms = entry.timestamp_ms.max(last.timestamp_ms);
        }
        self.entries.push(entry);
    }

    pub fn count_stage(&self, stage: Stage) -> usize {
        self.entries.iter().filter(|e| e.stage == stage).count()
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for entry in &self.entries {
            out.push_str(&serde_json::to_string(entry).expect("entry serializes"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Transcript, TranscriptError> {
        let mut transcript = Transcript::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            if raw.trim().is_empty() {
                continue;
            }
            let entry: TranscriptEntry =
                serde_json::from_str(raw).map_err(|e| TranscriptError::Malformed { line, message: e.to_string() })?;
            if entry.seq != transcript.len() {
                return Err(TranscriptError::Malformed {
                    line,
                    message: format!("expected seq {}, found {}", transcript.len(), entry.seq),
                });
            }
            if request_digest(&entry.request) != entry.request_digest {
                return Err(TranscriptError::Malformed {
                    line,
                    message: "request digest does not match request".into(),
                });
            }
            if let Some(prev) = transcript.entries.last() {
                if entry.timestamp_ms < prev.timestamp_ms {
                    return Err(TranscriptError::Malformed { line, message: "timestamp goes backwards".into() });
                }
            }
            for msg in &entry.request {
                msg.validate().map_err(|e| TranscriptError::Malformed { line, message: e.to_string() })?;
            }
            transcript.entries.push(entry);
        }
        Ok(transcript)
    }

    pub fn record(&self, path: &Path) -> Result<(), TranscriptError> {
        let mut file = fs::File::create(path)?;
        file.write_all(self.to_jsonl().as_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Transcript, TranscriptError> {
        Transcript::from_jsonl(&fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::message::{Part, Role};

    fn entry(i: usize) -> TranscriptEntry {
        let request = vec![
            ChatMessage::system("fixed"),
            ChatMessage::new(Role::User, vec![Part::text(format!("prompt {i}")), Part::blob("text/plain", b"view")]),
        ];
        TranscriptEntry {
            seq: 0,
            stage: if i.is_multiple_of(2) { Stage::Plan } else { Stage::Refine },
            subtask: Some("locate_mug".into()),
            attempt: i as u32,
            format_retry: false,
            request_digest: request_digest(&request),
            request,
            response: format!("<Action name=\"Grab\" target=\"m{i}\"/>"),
            error: None,
            latency_ms: 0.25 * i as f64,
            timestamp_ms: 1000 + i as u64,
        }
    }

    fn five() -> Transcript {
        let mut t = Transcript::new();
        for i in 0..5 {
            t.push(entry(i));
        }
        t
    }

    #[test]
    fn write_then_load_is_lossless() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.jsonl");
        let t = five();
        t.record(&path).unwrap();
        assert_eq!(Transcript::load(&path).unwrap(), t);
    }

    #[test]
    fn truncated_last_line_reports_that_line() {
        let text = five().to_jsonl();
        let cut = &text[..text.len() - 20];
        match Transcript::from_jsonl(cut) {
            Err(TranscriptError::Malformed { line, .. }) => assert_eq!(line, 5),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn empty_file_is_an_empty_transcript() {
        assert!(Transcript::from_jsonl("").unwrap().is_empty());
    }

    #[test]
    fn tampered_request_is_caught() {
        let text = five().to_jsonl().replacen("prompt 0", "prompt X", 1);
        assert!(matches!(Transcript::from_jsonl(&text), Err(TranscriptError::Malformed { line: 1, .. })));
    }

    #[test]
    fn timestamps_are_clamped_monotone() {
        let mut t = Transcript::new();
        let mut a = entry(0);
        a.timestamp_ms = 50;
        let mut b = entry(1);
        b.timestamp_ms = 10;
        t.push(a);
        t.push(b);
        assert_eq!(t.entries()[1].timestamp_ms, 50);
        assert_eq!(t.entries()[1].seq, 1);
    }
}
