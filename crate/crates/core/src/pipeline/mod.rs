// SPDX-License-Identifier: Apache-2.0

//! Per-module generation: specification extraction, verification items and
//! deep assertions, with the artifacts written between stages.

mod prompts;
mod spec_doc;
mod stages;

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{extract_relationships, DesignGraph, GraphError};
use crate::llm::{transcript_hash, Gateway, LlmError, TranscriptEntry};
use crate::verilog::{Direction, SourceUnit, Width};

pub use prompts::{body_statements, build_assert_prompt, build_items_prompt, build_spec_prompt, copies_body, shares_ngram, NGRAM};
pub use spec_doc::{Section, SpecDocument};
pub use stages::{assertions_sv, extract_module_spec, extract_verification_items, generate_deep_assertions};

pub const PIPELINE_SCHEMA: &str = "pipeline.v1";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("specification text is empty")]
    EmptySpec,
    #[error("unknown module `{0}`")]
    UnknownModule(String),
    #[error("{stage} for `{module}` returned unusable output: {message}")]
    MalformedLlmOutput { module: String, stage: String, message: String },
    #[error("port list for `{module}` does not match the design (missing: {missing:?}, not ports: {extra:?})")]
    PortMismatch { module: String, missing: Vec<String>, extra: Vec<String> },
    #[error("assertions for `{module}` use names outside the template: {}", names.join(", "))]
    TemplateViolation { module: String, names: Vec<String> },
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("cannot access `{}`: {message}", path.display())]
    Io { path: PathBuf, message: String },
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub max_items_per_module: usize,
    pub max_asserts_per_module: usize,
    pub temperature: f64,
    pub max_tokens: u32,
    /// Spec text above this many words is cut down to selected sections.
    pub spec_budget_words: usize,
    pub top_k_sections: usize,
    pub clock_regex: Regex,
    pub reset_regex: Regex,
    /// Also show the item extractor the module's declared net names.
    pub expose_net_names: bool,
    pub root_override: Option<String>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            max_items_per_module: 10,
            max_asserts_per_module: 8,
            temperature: 0.2,
            max_tokens: 2048,
            spec_budget_words: 3000,
            top_k_sections: 4,
            clock_regex: Regex::new("(?i)clk|clock").unwrap(),
            reset_regex: Regex::new("(?i)rst|reset").unwrap(),
            expose_net_names: false,
            root_override: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortBehavior {
    pub port: String,
    pub direction: Direction,
    pub width: Width,
    pub behavior: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub transcript: String,
    /// Hashes of the requests whose replies produced this artifact.
    pub requests: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModuleSpec {
    pub module: String,
    pub overview: String,
    pub port_behaviors: Vec<PortBehavior>,
    pub assumptions: Vec<String>,
    pub provenance: Provenance,
}

impl ModuleSpec {
    /// Content hash that items use to point back at their spec.
    pub fn content_hash(&self) -> String {
        crate::llm::hash_value(&serde_json::to_value(self).expect("spec serializes"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationItem {
    pub id: String,
    pub module: String,
    pub condition: String,
    pub expected: String,
    pub referenced_signals: Vec<String>,
    /// [`ModuleSpec::content_hash`] of the spec the item came from.
    pub spec_ref: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssertionStatus {
    Generated,
    SyntaxOk,
    Bound,
    Checked,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assertion {
    pub id: String,
    pub module: String,
    pub item_ids: Vec<String>,
    pub sva_text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clock_expr: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub disable_expr: Option<String>,
    pub referenced_hier_signals: Vec<String>,
    pub status: AssertionStatus,
    pub trivial: bool,
}

/// Clock and reset ports chosen for a module.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModuleControls {
    pub clock: Option<String>,
    pub reset: Option<String>,
    pub reset_active_low: bool,
}

/// Whether a reset name reads as active-low (`rst_n`, `nReset`, `resetn`).
pub fn active_low_name(name: &str) -> bool {
    let l = name.to_lowercase();
    l.ends_with("_n") || l.ends_with("_b") || l.ends_with("_l") || l.ends_with("rstn") || l.ends_with("resetn")
        || (name.starts_with('n') && name[1..].starts_with(|c: char| c.is_ascii_uppercase() || c == '_'))
}

pub fn module_controls(graph: &DesignGraph, module: &str, cfg: &PipelineConfig) -> ModuleControls {
    let scalar_inputs: Vec<&str> = graph
        .ports
        .get(module)
        .into_iter()
        .flatten()
        .filter(|p| p.direction == Direction::Input && p.width.bits() == Some(1))
        .map(|p| p.name.as_str())
        .collect();
    let clock = scalar_inputs.iter().find(|n| cfg.clock_regex.is_match(n)).map(|s| s.to_string());
    let reset = scalar_inputs
        .iter()
        .find(|n| Some(**n) != clock.as_deref() && cfg.reset_regex.is_match(n))
        .map(|s| s.to_string());
    let reset_active_low = reset.as_deref().is_some_and(active_low_name);
    ModuleControls { clock, reset, reset_active_low }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModuleArtifacts {
    pub module: String,
    pub spec: Option<ModuleSpec>,
    pub items: Vec<VerificationItem>,
    pub assertions: Vec<Assertion>,
    pub warnings: Vec<String>,
    pub error: Option<String>,
}

pub struct PipelineBundle {
    pub graph: DesignGraph,
    pub modules: Vec<ModuleArtifacts>,
    pub transcript: Vec<TranscriptEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lineage {
    pub assertions: usize,
    pub assertions_traced: usize,
    pub items: usize,
    pub items_traced: usize,
}

impl Lineage {
    pub fn complete(&self) -> bool {
        self.assertions == self.assertions_traced && self.items == self.items_traced
    }
}

/// Count assertions that name at least one existing item of their module,
/// and items whose spec reference matches their module's spec.
pub fn lineage(modules: &[ModuleArtifacts]) -> Lineage {
    let mut l = Lineage { assertions: 0, assertions_traced: 0, items: 0, items_traced: 0 };
    for m in modules {
        let spec_hash = m.spec.as_ref().map(ModuleSpec::content_hash);
        let ids: BTreeSet<&str> = m.items.iter().map(|i| i.id.as_str()).collect();
        for it in &m.items {
            l.items += 1;
            if Some(&it.spec_ref) == spec_hash.as_ref() && it.module == m.module {
                l.items_traced += 1;
            }
        }
        for a in &m.assertions {
            l.assertions += 1;
            if !a.item_ids.is_empty() && a.item_ids.iter().all(|i| ids.contains(i.as_str())) {
                l.assertions_traced += 1;
            }
        }
    }
    l
}

/// Run all stages for every module (or the filtered ones) children
/// first. A failing module is recorded and the run continues.
pub fn run_pipeline(
    gw: &Gateway,
    cfg: &PipelineConfig,
    doc: &SpecDocument,
    unit: &SourceUnit,
    filter: Option<&[String]>,
) -> Result<PipelineBundle, PipelineError> {
    let graph = extract_relationships(unit, cfg.root_override.as_deref())?;
    let mut order = graph.children_first();
    if let Some(f) = filter {
        for m in f {
            if !graph.has_module(m) {
                return Err(PipelineError::UnknownModule(m.clone()));
            }
        }
        order.retain(|m| f.contains(m));
    }
    let mut modules = Vec::new();
    for m in order {
        let mut art =
            ModuleArtifacts { module: m.clone(), spec: None, items: vec![], assertions: vec![], warnings: vec![], error: None };
        let result = (|| -> Result<(), PipelineError> {
            let spec = extract_module_spec(gw, cfg, doc, &graph, unit, &m, &mut art.warnings)?;
            art.spec = Some(spec.clone());
            art.items = extract_verification_items(gw, cfg, &spec, &graph, &mut art.warnings)?;
            art.assertions = generate_deep_assertions(gw, cfg, &spec, &art.items, &graph, &mut art.warnings)?;
            Ok(())
        })();
        if let Err(e) = result {
            art.error = Some(e.to_string());
        }
        modules.push(art);
    }
    Ok(PipelineBundle { graph, modules, transcript: gw.transcript() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModuleSummary {
    pub module: String,
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub warnings: Vec<String>,
    pub items: usize,
    pub assertions: usize,
    pub syntax_ok: usize,
    pub bound: usize,
    pub trivial: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineSummary {
    pub schema: String,
    pub root: String,
    pub modules: Vec<ModuleSummary>,
    pub lineage: Lineage,
    pub transcript_hash: String,
}

impl PipelineBundle {
    pub fn summary(&self) -> PipelineSummary {
        PipelineSummary {
            schema: PIPELINE_SCHEMA.into(),
            root: self.graph.root.clone(),
            modules: self
                .modules
                .iter()
                .map(|m| ModuleSummary {
                    module: m.module.clone(),
                    ok: m.error.is_none(),
                    error: m.error.clone(),
                    warnings: m.warnings.clone(),
                    items: m.items.len(),
                    assertions: m.assertions.len(),
                    syntax_ok: m.assertions.iter().filter(|a| a.status >= AssertionStatus::SyntaxOk).count(),
                    bound: m.assertions.iter().filter(|a| a.status >= AssertionStatus::Bound).count(),
                    trivial: m.assertions.iter().filter(|a| a.trivial).count(),
                })
                .collect(),
            lineage: lineage(&self.modules),
            transcript_hash: transcript_hash(&self.transcript),
        }
    }
}

/// JSON text with a leading `schema` tag and a trailing newline.
pub fn artifact_text<T: Serialize>(schema: &str, value: &T) -> String {
    let mut v = serde_json::to_value(value).expect("artifact serializes");
    if let serde_json::Value::Object(m) = &mut v {
        m.insert("schema".into(), schema.into());
    }
    let mut s = serde_json::to_string_pretty(&v).expect("artifact serializes");
    s.push('\n');
    s
}

#[derive(Serialize)]
struct ItemsDoc<'a> {
    module: &'a str,
    items: &'a [VerificationItem],
}

#[derive(Serialize)]
struct AssertionsDoc<'a> {
    module: &'a str,
    assertions: &'a [Assertion],
}

pub fn items_text(module: &str, items: &[VerificationItem]) -> String {
    artifact_text("items.v1", &ItemsDoc { module, items })
}

pub fn assertions_text(module: &str, assertions: &[Assertion]) -> String {
    artifact_text("assertions.v1", &AssertionsDoc { module, assertions })
}

pub(crate) fn write_file(path: &Path, text: &str) -> Result<(), PipelineError> {
    if let Some(d) = path.parent() {
        std::fs::create_dir_all(d).map_err(|e| PipelineError::Io { path: d.to_path_buf(), message: e.to_string() })?;
    }
    std::fs::write(path, text).map_err(|e| PipelineError::Io { path: path.to_path_buf(), message: e.to_string() })
}

/// Write the bundle under `dir`: `design_graph.json`, `pipeline.json`,
/// `transcript.jsonl` and `modules/<m>/` with each stage's output.
pub fn write_bundle(bundle: &PipelineBundle, dir: &Path) -> Result<PipelineSummary, PipelineError> {
    let mut graph = serde_json::to_string_pretty(&bundle.graph.to_json()).expect("graph serializes");
    graph.push('\n');
    write_file(&dir.join("design_graph.json"), &graph)?;
    for m in &bundle.modules {
        let md = dir.join("modules").join(&m.module);
        if let Some(spec) = &m.spec {
            write_file(&md.join("module_spec.json"), &artifact_text("module_spec.v1", spec))?;
            write_file(&md.join("items.json"), &items_text(&m.module, &m.items))?;
            write_file(&md.join("assertions.json"), &assertions_text(&m.module, &m.assertions))?;
            write_file(&md.join("assertions.sv"), &assertions_sv(&m.module, &m.assertions))?;
        }
    }
    let tpath = dir.join("transcript.jsonl");
    crate::llm::write_transcript(&tpath, &bundle.transcript)?;
    let summary = bundle.summary();
    write_file(&dir.join("pipeline.json"), &artifact_text(PIPELINE_SCHEMA, &summary))?;
    Ok(summary)
}
