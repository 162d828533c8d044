// SPDX-License-Identifier: Apache-2.0

//! Layered configuration: built-in defaults, an optional TOML file, then
//! `--section.key value` flag overrides. Secrets come from the environment.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use modassert::pipeline::PipelineConfig;
use regex::Regex;
use serde::Deserialize;
use toml::{Table, Value};

/// Every accepted key, dotted.
pub const KEYS: &[&str] = &[
    "root_override",
    "paths.rtl",
    "paths.spec",
    "paths.out",
    "paths.include",
    "paths.defines",
    "llm.base_url",
    "llm.model",
    "llm.temperature",
    "llm.max_tokens",
    "llm.max_inflight",
    "llm.retry_limit",
    "llm.timeout_secs",
    "llm.mode",
    "llm.transcript",
    "pipeline.max_items_per_module",
    "pipeline.max_asserts_per_module",
    "pipeline.spec_budget_words",
    "pipeline.top_k_sections",
    "pipeline.expose_net_names",
    "pipeline.clock_regex",
    "pipeline.reset_regex",
    "mutate.budget",
    "mutate.seed",
    "mutate.jobs",
    "mutate.sim_cmd_template",
    "mutate.timeout_secs",
    "mutate.testbench",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LlmMode {
    Live,
    Record,
    Replay,
    Mock,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default)]
pub struct Paths {
    pub rtl: Vec<String>,
    pub spec: Vec<String>,
    pub out: PathBuf,
    pub include: Vec<PathBuf>,
    pub defines: BTreeMap<String, String>,
}

impl Default for Paths {
    fn default() -> Self {
        Paths { rtl: vec![], spec: vec![], out: PathBuf::from("out"), include: vec![], defines: BTreeMap::new() }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default)]
pub struct Llm {
    pub base_url: String,
    pub model: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub max_inflight: usize,
    pub retry_limit: u32,
    pub timeout_secs: u64,
    pub mode: LlmMode,
    /// Replay source, or the file that record mode appends to.
    pub transcript: Option<PathBuf>,
}

impl Default for Llm {
    fn default() -> Self {
        Llm {
            base_url: "https://api.openai.com/v1".into(),
            model: "gpt-4o".into(),
            temperature: 0.2,
            max_tokens: 2048,
            max_inflight: 4,
            retry_limit: 2,
            timeout_secs: 120,
            mode: LlmMode::Live,
            transcript: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default)]
pub struct Pipeline {
    pub max_items_per_module: usize,
    pub max_asserts_per_module: usize,
    pub spec_budget_words: usize,
    pub top_k_sections: usize,
    pub expose_net_names: bool,
    pub clock_regex: String,
    pub reset_regex: String,
}

impl Default for Pipeline {
    fn default() -> Self {
        let d = PipelineConfig::default();
        Pipeline {
            max_items_per_module: d.max_items_per_module,
            max_asserts_per_module: d.max_asserts_per_module,
            spec_budget_words: d.spec_budget_words,
            top_k_sections: d.top_k_sections,
            expose_net_names: d.expose_net_names,
            clock_regex: d.clock_regex.as_str().into(),
            reset_regex: d.reset_regex.as_str().into(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default)]
pub struct Mutate {
    pub budget: usize,
    pub seed: u64,
    /// 0 means one job per CPU.
    pub jobs: usize,
    /// External simulator command; the built-in simulator when absent.
    pub sim_cmd_template: Option<String>,
    pub timeout_secs: u64,
    pub testbench: Option<PathBuf>,
}

impl Default for Mutate {
    fn default() -> Self {
        Mutate { budget: 100, seed: 0, jobs: 0, sim_cmd_template: None, timeout_secs: 120, testbench: None }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default)]
pub struct Config {
    pub root_override: Option<String>,
    pub paths: Paths,
    pub llm: Llm,
    pub pipeline: Pipeline,
    pub mutate: Mutate,
}

fn closest(key: &str) -> Option<&'static str> {
    KEYS.iter()
        .map(|k| (strsim::normalized_levenshtein(key, k), *k))
        .filter(|(s, _)| *s >= 0.7)
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, k)| k)
}

fn check_keys(table: &Table, prefix: &str, errors: &mut Vec<String>) {
    for (k, v) in table {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        let is_section = KEYS.iter().any(|known| known.starts_with(&format!("{key}.")));
        match v {
            Value::Table(t) if is_section => check_keys(t, &key, errors),
            _ if KEYS.contains(&key.as_str()) => {}
            _ => {
                let hint = closest(&key).map(|s| format!(" (did you mean `{s}`?)")).unwrap_or_default();
                errors.push(format!("unknown config key `{key}`{hint}"));
            }
        }
    }
}

/// A flag value as TOML: numbers, booleans and arrays parse as such,
/// anything else is taken as a string.
fn flag_value(raw: &str) -> Value {
    let doc = format!("v = {raw}");
    match doc.parse::<Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| Value::String(raw.into())),
        Err(_) => Value::String(raw.into()),
    }
}

fn set_dotted(table: &mut Table, key: &str, value: Value) -> Result<()> {
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().expect("split yields one part");
    let mut cur = table;
    for p in parts {
        let entry = cur.entry(p.to_string()).or_insert_with(|| Value::Table(Table::new()));
        cur = match entry {
            Value::Table(t) => t,
            _ => bail!("config key `{p}` is not a section"),
        };
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

impl Config {
    /// Build from an optional file plus `(dotted key, raw value)` overrides.
    pub fn load(file: Option<&Path>, overrides: &[(String, String)]) -> Result<Config> {
        let mut table = match file {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
                text.parse::<Table>().with_context(|| format!("parsing config {}", p.display()))?
            }
            None => Table::new(),
        };
        for (k, v) in overrides {
            set_dotted(&mut table, k, flag_value(v))?;
        }
        let mut errors = Vec::new();
        check_keys(&table, "", &mut errors);
        if !errors.is_empty() {
            bail!("{}", errors.join("\n"));
        }
        let cfg: Config = Value::Table(table).try_into().context("invalid configuration")?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        Regex::new(&self.pipeline.clock_regex).context("pipeline.clock_regex")?;
        Regex::new(&self.pipeline.reset_regex).context("pipeline.reset_regex")?;
        if !(0.0..=2.0).contains(&self.llm.temperature) {
            bail!("llm.temperature must be within [0, 2]");
        }
        if self.llm.max_inflight == 0 {
            bail!("llm.max_inflight must be at least 1");
        }
        if self.llm.mode == LlmMode::Replay && self.llm.transcript.is_none() {
            bail!("llm.mode = replay needs llm.transcript");
        }
        Ok(())
    }

    pub fn pipeline_config(&self) -> PipelineConfig {
        PipelineConfig {
            max_items_per_module: self.pipeline.max_items_per_module,
            max_asserts_per_module: self.pipeline.max_asserts_per_module,
            temperature: self.llm.temperature,
            max_tokens: self.llm.max_tokens,
            spec_budget_words: self.pipeline.spec_budget_words,
            top_k_sections: self.pipeline.top_k_sections,
            clock_regex: Regex::new(&self.pipeline.clock_regex).expect("validated"),
            reset_regex: Regex::new(&self.pipeline.reset_regex).expect("validated"),
            expose_net_names: self.pipeline.expose_net_names,
            root_override: self.root_override.clone(),
        }
    }

    pub fn clock_regex(&self) -> Regex {
        Regex::new(&self.pipeline.clock_regex).expect("validated")
    }

    pub fn jobs(&self) -> usize {
        match self.mutate.jobs {
            0 => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
            n => n,
        }
    }

    pub fn sim_timeout(&self) -> Duration {
        Duration::from_secs(self.mutate.timeout_secs)
    }
}

/// Pull `--a.b value` and `--a.b=value` pairs out of `args`, leaving the
/// rest for the subcommand parser.
pub fn split_overrides(args: Vec<String>) -> Result<(Vec<String>, Vec<(String, String)>)> {
    let mut rest = Vec::new();
    let mut overrides = Vec::new();
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        let Some(body) = a.strip_prefix("--").filter(|b| b.contains('.') && !b.starts_with('.')) else {
            rest.push(a);
            continue;
        };
        let (key, value) = match body.split_once('=') {
            Some((k, v)) if k.contains('.') => (k.to_string(), v.to_string()),
            Some(_) => {
                rest.push(a);
                continue;
            }
            None => match it.next() {
                Some(v) => (body.to_string(), v),
                None => bail!("flag --{body} needs a value"),
            },
        };
        overrides.push((key, value));
    }
    Ok((rest, overrides))
}
