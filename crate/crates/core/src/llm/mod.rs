// SPDX-License-Identifier: Apache-2.0

//! Language-model access for the generation pipeline.
//!
//! Every stage asks for a single fenced JSON document that must match a
//! registered schema. Replies that do not parse are re-requested with a
//! repair note; the final reply is returned marked malformed if it still
//! does not conform.

mod backends;
mod schema;
mod transcript;

use std::sync::{Condvar, Mutex};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use backends::{prompt_context, with_context, LiveBackend, LiveConfig, MockBackend, RecordBackend, ReplayBackend, ScriptEntry, ScriptedBackend, API_KEY_ENV};
pub use schema::{check_schema, extract_fenced_json, SCHEMAS};
pub use transcript::{read_transcript, transcript_hash, write_transcript, TranscriptEntry, TRANSCRIPT_SCHEMA};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LlmError {
    #[error("language-model backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("no API key: set the {0} environment variable")]
    AuthMissing(String),
    #[error("no recorded response for request {hash} ({stage})")]
    ReplayMiss { hash: String, stage: String },
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("cannot use transcript {path}: {message}")]
    Transcript { path: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    SpecExtract,
    ItemExtract,
    AssertGen,
    RelationshipLlm,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::SpecExtract => "spec_extract",
            Stage::ItemExtract => "item_extract",
            Stage::AssertGen => "assert_gen",
            Stage::RelationshipLlm => "relationship_llm",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptRequest {
    pub stage: Stage,
    pub system_text: String,
    pub user_text: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub schema_id: String,
}

impl PromptRequest {
    pub fn validate(&self) -> Result<(), LlmError> {
        if self.user_text.trim().is_empty() {
            return Err(LlmError::InvalidRequest("empty user text".into()));
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(LlmError::InvalidRequest(format!("temperature {} outside [0, 2]", self.temperature)));
        }
        if self.max_tokens == 0 {
            return Err(LlmError::InvalidRequest("max_tokens must be positive".into()));
        }
        if !SCHEMAS.contains(&self.schema_id.as_str()) {
            return Err(LlmError::InvalidRequest(format!("unregistered schema `{}`", self.schema_id)));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form (object keys sorted), so the
    /// hash does not depend on how the request was built or serialized.
    pub fn hash(&self) -> String {
        let v = serde_json::to_value(self).expect("request serializes");
        hash_value(&v)
    }
}

/// Hash a JSON value in canonical form.
pub fn hash_value(v: &serde_json::Value) -> String {
    fn canon(v: &serde_json::Value) -> serde_json::Value {
        match v {
            serde_json::Value::Object(m) => {
                let sorted: std::collections::BTreeMap<&String, serde_json::Value> = m.iter().map(|(k, v)| (k, canon(v))).collect();
                serde_json::to_value(sorted).unwrap()
            }
            serde_json::Value::Array(a) => serde_json::Value::Array(a.iter().map(canon).collect()),
            other => other.clone(),
        }
    }
    let text = serde_json::to_string(&canon(v)).unwrap();
    hex::encode(Sha256::digest(text.as_bytes()))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

/// What a backend returns for one request.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawReply {
    pub raw_text: String,
    pub usage: Usage,
    pub latency_ms: u64,
    pub backend_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelResponse {
    pub raw_text: String,
    /// The schema-conforming document, absent when malformed.
    pub parsed: Option<serde_json::Value>,
    /// Why the final reply was rejected.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub malformed: Option<String>,
    pub usage: Usage,
    pub latency_ms: u64,
    pub backend_id: String,
    /// Requests sent, including repair retries.
    pub attempts: u32,
}

pub trait Backend: Send + Sync {
    fn send(&self, req: &PromptRequest) -> Result<RawReply, LlmError>;
}

struct Inflight {
    limit: usize,
    busy: Mutex<usize>,
    freed: Condvar,
}

impl Inflight {
    fn acquire(&self) {
        let mut n = self.busy.lock().unwrap();
        while *n >= self.limit {
            n = self.freed.wait(n).unwrap();
        }
        *n += 1;
    }

    fn release(&self) {
        *self.busy.lock().unwrap() -= 1;
        self.freed.notify_one();
    }
}

/// Front door for all model calls: validation, repair retries, the
/// in-flight limit and the session transcript.
pub struct Gateway {
    backend: Box<dyn Backend>,
    pub retry_limit: u32,
    inflight: Inflight,
    log: Mutex<Vec<TranscriptEntry>>,
}

fn repair_note(reason: &str, schema_id: &str) -> String {
    format!(
        "\n\nYour previous reply could not be used ({reason}). Reply again with exactly one fenced ```json block \
         conforming to schema {schema_id} and nothing else."
    )
}

impl Gateway {
    pub fn new(backend: Box<dyn Backend>) -> Self {
        Gateway::with_limits(backend, 2, 4)
    }

    pub fn with_limits(backend: Box<dyn Backend>, retry_limit: u32, max_inflight: usize) -> Self {
        Gateway {
            backend,
            retry_limit,
            inflight: Inflight { limit: max_inflight.max(1), busy: Mutex::new(0), freed: Condvar::new() },
            log: Mutex::new(Vec::new()),
        }
    }

    fn send_logged(&self, req: &PromptRequest) -> Result<RawReply, LlmError> {
        self.inflight.acquire();
        let r = self.backend.send(req);
        self.inflight.release();
        let reply = r?;
        self.log.lock().unwrap().push(TranscriptEntry::new(req, &reply));
        Ok(reply)
    }

    pub fn complete(&self, req: &PromptRequest) -> Result<ModelResponse, LlmError> {
        req.validate()?;
        let mut current = req.clone();
        let mut usage = Usage::default();
        let mut attempts = 0;
        loop {
            attempts += 1;
            let reply = self.send_logged(&current)?;
            usage.prompt_tokens += reply.usage.prompt_tokens;
            usage.completion_tokens += reply.usage.completion_tokens;
            let outcome = extract_fenced_json(&reply.raw_text).and_then(|v| check_schema(&req.schema_id, &v).map(|()| v));
            match outcome {
                Ok(v) => {
                    return Ok(ModelResponse {
                        raw_text: reply.raw_text,
                        parsed: Some(v),
                        malformed: None,
                        usage,
                        latency_ms: reply.latency_ms,
                        backend_id: reply.backend_id,
                        attempts,
                    })
                }
                Err(reason) if attempts > self.retry_limit => {
                    return Ok(ModelResponse {
                        raw_text: reply.raw_text,
                        parsed: None,
                        malformed: Some(reason),
                        usage,
                        latency_ms: reply.latency_ms,
                        backend_id: reply.backend_id,
                        attempts,
                    })
                }
                Err(reason) => {
                    current = req.clone();
                    current.user_text.push_str(&repair_note(&reason, &req.schema_id));
                }
            }
        }
    }

    /// Exchanges so far, in call order.
    pub fn transcript(&self) -> Vec<TranscriptEntry> {
        self.log.lock().unwrap().clone()
    }
}
