// SPDX-License-Identifier: Apache-2.0

//! `transcript.v1`: one JSON object per line, one line per exchange.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{LlmError, PromptRequest, RawReply};

pub const TRANSCRIPT_SCHEMA: &str = "transcript.v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub schema: String,
    pub hash: String,
    pub request: PromptRequest,
    pub response: RawReply,
}

impl TranscriptEntry {
    pub fn new(req: &PromptRequest, reply: &RawReply) -> Self {
        TranscriptEntry { schema: TRANSCRIPT_SCHEMA.into(), hash: req.hash(), request: req.clone(), response: reply.clone() }
    }
}

pub fn transcript_text(entries: &[TranscriptEntry]) -> String {
    let mut out = String::new();
    for e in entries {
        out.push_str(&serde_json::to_string(e).expect("entry serializes"));
        out.push('\n');
    }
    out
}

/// Content hash of a transcript's serialized form.
pub fn transcript_hash(entries: &[TranscriptEntry]) -> String {
    hex::encode(Sha256::digest(transcript_text(entries).as_bytes()))
}

pub fn write_transcript(path: &Path, entries: &[TranscriptEntry]) -> Result<(), LlmError> {
    std::fs::write(path, transcript_text(entries))
        .map_err(|e| LlmError::Transcript { path: path.display().to_string(), message: e.to_string() })
}

pub fn read_transcript(path: &Path) -> Result<Vec<TranscriptEntry>, LlmError> {
    let err = |message: String| LlmError::Transcript { path: path.display().to_string(), message };
    let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let e: TranscriptEntry = serde_json::from_str(line).map_err(|e| err(format!("line {}: {e}", i + 1)))?;
        if e.schema != TRANSCRIPT_SCHEMA {
            return Err(err(format!("line {}: schema `{}`", i + 1, e.schema)));
        }
        out.push(e);
    }
    Ok(out)
}
