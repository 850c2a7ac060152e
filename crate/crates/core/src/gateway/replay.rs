use std::sync::Mutex;

use super::transcript::{request_digest, Transcript, TranscriptEntry};
use super::{ChatBackend, CompletionRequest, GatewayError};

/// Serves a recorded transcript back in order, checking each request matches.
///
/// One replay backend belongs to one trial; the cursor is shared state.
#[derive(Debug)]
pub struct ReplayBackend {
    entries: Vec<TranscriptEntry>,
    cursor: Mutex<usize>,
}

impl ReplayBackend {
    pub fn new(transcript: Transcript) -> Self {
        ReplayBackend { entries: transcript.entries().to_vec(), cursor: Mutex::new(0) }
    }

    pub fn remaining(&self) -> usize {
        self.entries.len() - *self.cursor.lock().expect("replay cursor")
    }
}

impl ChatBackend for ReplayBackend {
    fn complete(&self, request: &CompletionRequest) -> Result<String, GatewayError> {
        let mut cursor = self.cursor.lock().expect("replay cursor");
        let Some(entry) = self.entries.get(*cursor) else {
            return Err(GatewayError::ReplayExhausted { consumed: *cursor });
        };
        let same_slot = entry.stage == request.stage
            && entry.subtask == request.subtask
            && entry.attempt == request.attempt
            && entry.format_retry == request.format_retry;
        if !same_slot || entry.request_digest != request_digest(&request.messages) {
            return Err(GatewayError::ReplayMismatch {
                seq: entry.seq,
                detail: if same_slot {
                    "request content differs from the recording".to_string()
                } else {
                    format!(
                        "recorded {} {:?} attempt {}, got {} {:?} attempt {}",
                        entry.stage, entry.subtask, entry.attempt, request.stage, request.subtask, request.attempt
                    )
                },
            });
        }
        *cursor += 1;
        match &entry.error {
            Some(error) => Err(GatewayError::Transport(format!("recorded failure: {error}"))),
            None => Ok(entry.response.clone()),
        }
    }

    fn name(&self) -> &str {
        "replay"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::message::{ChatMessage, Stage};
    use crate::gateway::scripted::FixtureSet;
    use crate::gateway::{Gateway, ScriptedBackend};
    use std::sync::Arc;

    fn request(text: &str, attempt: u32) -> CompletionRequest {
        CompletionRequest {
            stage: Stage::Plan,
            subtask: Some("s".into()),
            attempt,
            format_retry: false,
            messages: vec![ChatMessage::user(text)],
        }
    }

    fn recorded() -> Transcript {
        let fixtures = FixtureSet::parse("=== plan s 0\nfirst\n=== plan s 1\nsecond").unwrap();
        let mut gw = Gateway::new(Arc::new(ScriptedBackend::new(fixtures)));
        gw.complete(request("a", 0)).unwrap();
        gw.complete(request("b", 1)).unwrap();
        gw.into_transcript()
    }

    #[test]
    fn replays_identical_requests() {
        let replay = ReplayBackend::new(recorded());
        assert_eq!(replay.complete(&request("a", 0)).unwrap(), "first");
        assert_eq!(replay.complete(&request("b", 1)).unwrap(), "second");
        assert!(matches!(replay.complete(&request("c", 2)), Err(GatewayError::ReplayExhausted { consumed: 2 })));
    }

    #[test]
    fn diverging_request_is_a_mismatch() {
        let replay = ReplayBackend::new(recorded());
        assert!(matches!(replay.complete(&request("changed", 0)), Err(GatewayError::ReplayMismatch { seq: 0, .. })));
        assert!(matches!(replay.complete(&request("a", 7)), Err(GatewayError::ReplayMismatch { .. })));
        assert_eq!(replay.remaining(), 2);
    }
}
