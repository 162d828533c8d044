// SPDX-License-Identifier: Apache-2.0

//! Backend implementations: rule-based mock, scripted, replay, record and
//! live HTTP.

use std::collections::{BTreeMap, VecDeque};
use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde_json::{json, Value};

use super::transcript::{read_transcript, TranscriptEntry};
use super::{Backend, LlmError, PromptRequest, RawReply, Stage, Usage};

pub const API_KEY_ENV: &str = "MODASSERT_API_KEY";

const CONTEXT_FENCE: &str = "\n```json\n";

/// Append a machine-readable context block to prompt text.
pub fn with_context(text: &str, context: &Value) -> String {
    let body = serde_json::to_string_pretty(context).expect("context serializes");
    format!("{}{CONTEXT_FENCE}{body}\n```\n", text.trim_end())
}

/// The last context block embedded by [`with_context`].
pub fn prompt_context(user_text: &str) -> Option<Value> {
    let start = user_text.rfind(CONTEXT_FENCE)? + CONTEXT_FENCE.len();
    let end = start + user_text[start..].find("\n```")?;
    serde_json::from_str(&user_text[start..end]).ok()
}

fn word_count(s: &str) -> u64 {
    s.split_whitespace().count() as u64
}

fn fenced(doc: &Value) -> String {
    format!("```json\n{}\n```", serde_json::to_string_pretty(doc).expect("document serializes"))
}

/// Deterministic rule-based stand-in for a model. Reads the context block
/// of the prompt and derives a document from the port list alone.
#[derive(Debug, Default, Clone)]
pub struct MockBackend;

struct Port {
    name: String,
    direction: String,
    width: u64,
}

fn ports(ctx: &Value) -> Vec<Port> {
    ctx["ports"]
        .as_array()
        .map(|a| {
            a.iter()
                .filter_map(|p| {
                    Some(Port {
                        name: p["name"].as_str()?.to_string(),
                        direction: p["direction"].as_str().unwrap_or("input").to_string(),
                        width: p["width"].as_u64().unwrap_or(1),
                    })
                })
                .collect()
        })
        .unwrap_or_default()
}

impl MockBackend {
    fn document(&self, req: &PromptRequest, ctx: &Value) -> Result<Value, LlmError> {
        let module = ctx["module"]
            .as_str()
            .ok_or_else(|| LlmError::BackendUnavailable("mock backend: prompt context names no module".into()))?;
        let ports = ports(ctx);
        let clock = ctx["clock"].as_str();
        let reset = ctx["reset"].as_str();
        let is_control = |n: &str| Some(n) == clock || Some(n) == reset;
        let data_in: Vec<&Port> = ports.iter().filter(|p| p.direction == "input" && !is_control(&p.name)).collect();
        let data_out: Vec<&Port> = ports.iter().filter(|p| p.direction != "input" && !is_control(&p.name)).collect();
        Ok(match req.stage {
            Stage::SpecExtract => {
                let behaviors: Vec<Value> = ports
                    .iter()
                    .map(|p| {
                        let role = if Some(p.name.as_str()) == clock {
                            "clock; state updates on its rising edge".to_string()
                        } else if Some(p.name.as_str()) == reset {
                            "reset; returns the module to its initial state".to_string()
                        } else {
                            format!("{} data, {} bit(s) wide", p.direction, p.width)
                        };
                        json!({"port": p.name, "behavior": format!("`{}` is the {role}.", p.name)})
                    })
                    .collect();
                let mut assumptions = Vec::new();
                if let Some(c) = clock {
                    assumptions.push(json!(format!("`{c}` is a free-running clock.")));
                }
                if let Some(r) = reset {
                    assumptions.push(json!(format!("`{r}` is asserted before normal operation.")));
                }
                json!({
                    "module": module,
                    "overview": format!(
                        "`{module}` has {} data input(s) and {} output(s).",
                        data_in.len(),
                        data_out.len()
                    ),
                    "port_behaviors": behaviors,
                    "assumptions": assumptions,
                })
            }
            Stage::ItemExtract => {
                let mut items = Vec::new();
                if clock.is_some() && !data_in.is_empty() {
                    for o in &data_out {
                        let mut refs: Vec<&str> = data_in.iter().map(|p| p.name.as_str()).collect();
                        refs.push(&o.name);
                        items.push(json!({
                            "condition": "all data inputs keep their values across two consecutive clock cycles",
                            "expected": format!("`{}` keeps its value in the following cycle", o.name),
                            "referenced_signals": refs,
                        }));
                    }
                }
                if items.is_empty() {
                    if let Some(p) = data_out.first().copied().or(ports.first()) {
                        items.push(json!({
                            "condition": "always",
                            "expected": format!("`{}` is {} bit(s) wide", p.name, p.width),
                            "referenced_signals": [p.name],
                        }));
                    }
                }
                json!({"module": module, "items": items})
            }
            Stage::AssertGen => {
                let by_name: BTreeMap<&str, &Port> = ports.iter().map(|p| (p.name.as_str(), p)).collect();
                let mut out = Vec::new();
                for it in ctx["items"].as_array().into_iter().flatten() {
                    let id = it["id"].as_str().unwrap_or("VI-1");
                    let refs: Vec<&Port> = it["referenced_signals"]
                        .as_array()
                        .into_iter()
                        .flatten()
                        .filter_map(|s| by_name.get(s.as_str()?).copied())
                        .collect();
                    let ins: Vec<String> = refs
                        .iter()
                        .filter(|p| p.direction == "input")
                        .map(|p| format!("$stable({module}.{})", p.name))
                        .collect();
                    let outs: Vec<&&Port> = refs.iter().filter(|p| p.direction != "input").collect();
                    let sva = match (clock, ins.is_empty(), outs.first()) {
                        (Some(_), false, Some(o)) => {
                            format!("({}) |=> $stable({module}.{})", ins.join(" && "), o.name)
                        }
                        _ => match refs.first() {
                            Some(p) => format!("$bits({module}.{}) == {}", p.name, p.width),
                            None => continue,
                        },
                    };
                    out.push(json!({"item_ids": [id], "sva": sva}));
                }
                json!({"module": module, "assertions": out})
            }
            Stage::RelationshipLlm => {
                return Err(LlmError::BackendUnavailable("mock backend has no relationship rules".into()))
            }
        })
    }
}

impl Backend for MockBackend {
    fn send(&self, req: &PromptRequest) -> Result<RawReply, LlmError> {
        let ctx = prompt_context(&req.user_text)
            .ok_or_else(|| LlmError::BackendUnavailable("mock backend: prompt has no context block".into()))?;
        let text = fenced(&self.document(req, &ctx)?);
        Ok(RawReply {
            usage: Usage { prompt_tokens: word_count(&req.system_text) + word_count(&req.user_text), completion_tokens: word_count(&text) },
            raw_text: text,
            latency_ms: 0,
            backend_id: "mock".into(),
        })
    }
}

/// One canned reply. `stage` and `module` restrict which requests it
/// answers; `None` matches anything.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScriptEntry {
    pub stage: Option<Stage>,
    pub module: Option<String>,
    pub reply: String,
}

impl ScriptEntry {
    pub fn any(reply: &str) -> Self {
        ScriptEntry { stage: None, module: None, reply: reply.into() }
    }

    pub fn for_module(stage: Stage, module: &str, reply: &str) -> Self {
        ScriptEntry { stage: Some(stage), module: Some(module.into()), reply: reply.into() }
    }
}

/// Serves canned replies in order; each entry is used once.
pub struct ScriptedBackend {
    entries: Mutex<VecDeque<ScriptEntry>>,
}

impl ScriptedBackend {
    pub fn new(entries: Vec<ScriptEntry>) -> Self {
        ScriptedBackend { entries: Mutex::new(entries.into()) }
    }

    pub fn remaining(&self) -> usize {
        self.entries.lock().unwrap().len()
    }
}

impl Backend for ScriptedBackend {
    fn send(&self, req: &PromptRequest) -> Result<RawReply, LlmError> {
        let module = prompt_context(&req.user_text).and_then(|c| c["module"].as_str().map(String::from));
        let mut entries = self.entries.lock().unwrap();
        let pos = entries.iter().position(|e| {
            e.stage.is_none_or(|s| s == req.stage) && e.module.as_ref().is_none_or(|m| Some(m) == module.as_ref())
        });
        let Some(e) = pos.and_then(|i| entries.remove(i)) else {
            return Err(LlmError::BackendUnavailable(format!(
                "script has no reply for {} of `{}`",
                req.stage.as_str(),
                module.unwrap_or_default()
            )));
        };
        Ok(RawReply {
            usage: Usage { prompt_tokens: word_count(&req.user_text), completion_tokens: word_count(&e.reply) },
            raw_text: e.reply,
            latency_ms: 0,
            backend_id: "scripted".into(),
        })
    }
}

/// Serves recorded replies keyed by request hash. A request recorded
/// several times gets its replies in recording order, the last repeating.
pub struct ReplayBackend {
    replies: BTreeMap<String, Vec<RawReply>>,
    served: Mutex<BTreeMap<String, usize>>,
    hits: AtomicUsize,
    misses: AtomicUsize,
}

impl ReplayBackend {
    pub fn new(entries: Vec<TranscriptEntry>) -> Self {
        let mut replies: BTreeMap<String, Vec<RawReply>> = BTreeMap::new();
        for e in entries {
            replies.entry(e.request.hash()).or_default().push(e.response);
        }
        ReplayBackend { replies, served: Mutex::new(BTreeMap::new()), hits: AtomicUsize::new(0), misses: AtomicUsize::new(0) }
    }

    pub fn open(path: &Path) -> Result<Self, LlmError> {
        Ok(ReplayBackend::new(read_transcript(path)?))
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::Relaxed)
    }

    pub fn misses(&self) -> usize {
        self.misses.load(Ordering::Relaxed)
    }
}

impl Backend for ReplayBackend {
    fn send(&self, req: &PromptRequest) -> Result<RawReply, LlmError> {
        let hash = req.hash();
        let Some(list) = self.replies.get(&hash) else {
            self.misses.fetch_add(1, Ordering::Relaxed);
            return Err(LlmError::ReplayMiss { hash, stage: req.stage.as_str().into() });
        };
        let mut served = self.served.lock().unwrap();
        let n = served.entry(hash).or_insert(0);
        let reply = list[(*n).min(list.len() - 1)].clone();
        *n += 1;
        self.hits.fetch_add(1, Ordering::Relaxed);
        Ok(reply)
    }
}

/// Forwards to another backend and appends every exchange to a
/// `transcript.v1` file.
pub struct RecordBackend {
    inner: Box<dyn Backend>,
    path: PathBuf,
    file: Mutex<std::fs::File>,
}

impl RecordBackend {
    pub fn new(inner: Box<dyn Backend>, path: &Path) -> Result<Self, LlmError> {
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| LlmError::Transcript { path: path.display().to_string(), message: e.to_string() })?;
        Ok(RecordBackend { inner, path: path.to_path_buf(), file: Mutex::new(file) })
    }
}

impl Backend for RecordBackend {
    fn send(&self, req: &PromptRequest) -> Result<RawReply, LlmError> {
        let reply = self.inner.send(req)?;
        let line = serde_json::to_string(&TranscriptEntry::new(req, &reply)).expect("entry serializes");
        let mut f = self.file.lock().unwrap();
        writeln!(f, "{line}")
            .map_err(|e| LlmError::Transcript { path: self.path.display().to_string(), message: e.to_string() })?;
        Ok(reply)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LiveConfig {
    pub base_url: String,
    pub model: String,
    pub timeout: Duration,
}

impl Default for LiveConfig {
    fn default() -> Self {
        LiveConfig { base_url: "https://api.openai.com/v1".into(), model: "gpt-4o".into(), timeout: Duration::from_secs(120) }
    }
}

/// Chat-completions client over HTTPS.
pub struct LiveBackend {
    cfg: LiveConfig,
    key: String,
    agent: ureq::Agent,
}

impl LiveBackend {
    /// Fails with `AuthMissing` when the API key variable is unset.
    pub fn new(cfg: LiveConfig) -> Result<Self, LlmError> {
        let key = std::env::var(API_KEY_ENV)
            .ok()
            .filter(|k| !k.trim().is_empty())
            .ok_or_else(|| LlmError::AuthMissing(API_KEY_ENV.into()))?;
        let agent = ureq::Agent::config_builder().timeout_global(Some(cfg.timeout)).build().into();
        Ok(LiveBackend { cfg, key, agent })
    }

    fn attempt(&self, body: &Value) -> Result<Value, (bool, String)> {
        let url = format!("{}/chat/completions", self.cfg.base_url.trim_end_matches('/'));
        let resp = self
            .agent
            .post(&url)
            .header("Authorization", &format!("Bearer {}", self.key))
            .send_json(body);
        match resp {
            Ok(mut r) => r.body_mut().read_json::<Value>().map_err(|e| (false, format!("bad response body: {e}"))),
            Err(ureq::Error::StatusCode(code)) => Err((code == 429 || code >= 500, format!("HTTP status {code}"))),
            Err(e) => Err((true, e.to_string())),
        }
    }
}

impl Backend for LiveBackend {
    fn send(&self, req: &PromptRequest) -> Result<RawReply, LlmError> {
        let body = json!({
            "model": self.cfg.model,
            "temperature": req.temperature,
            "max_tokens": req.max_tokens,
            "messages": [
                {"role": "system", "content": req.system_text},
                {"role": "user", "content": req.user_text},
            ],
        });
        let started = Instant::now();
        let mut delay = Duration::from_millis(500);
        let mut last = String::new();
        for attempt in 0..3 {
            if attempt > 0 {
                std::thread::sleep(delay);
                delay *= 2;
            }
            match self.attempt(&body) {
                Ok(v) => {
                    let text = v["choices"][0]["message"]["content"]
                        .as_str()
                        .ok_or_else(|| LlmError::BackendUnavailable("response has no message content".into()))?;
                    return Ok(RawReply {
                        raw_text: text.to_string(),
                        usage: Usage {
                            prompt_tokens: v["usage"]["prompt_tokens"].as_u64().unwrap_or(0),
                            completion_tokens: v["usage"]["completion_tokens"].as_u64().unwrap_or(0),
                        },
                        latency_ms: started.elapsed().as_millis() as u64,
                        backend_id: format!("live:{}", self.cfg.model),
                    });
                }
                Err((retry, msg)) => {
                    last = msg;
                    if !retry {
                        break;
                    }
                }
            }
        }
        Err(LlmError::BackendUnavailable(last))
    }
}
