// SPDX-License-Identifier: Apache-2.0

//! Prompt assembly for the three generation stages.

use std::collections::BTreeSet;

use serde_json::{json, Value};

use super::spec_doc::words;
use super::{module_controls, ModuleSpec, PipelineConfig, PipelineError, SpecDocument, VerificationItem};
use crate::graph::{relationship_digest, DesignGraph, SignalKind};
use crate::llm::{with_context, PromptRequest, Stage};
use crate::verilog::{item_text, ItemKind, SourceUnit};

/// Length of the word sequences that may not be copied from a module body
/// into its specification prompt.
pub const NGRAM: usize = 5;

/// Statements inside a module: the canonical text of its assignments,
/// processes, instances and declarations, plus each raw source line.
pub fn body_statements(unit: &SourceUnit, module: &str) -> Vec<String> {
    let Some(m) = unit.module(module) else { return vec![] };
    let mut out: Vec<String> = m
        .items
        .iter()
        .filter(|i| !matches!(i.kind, ItemKind::Param(_)))
        .map(|i| item_text(&i.kind))
        .collect();
    if let Some(f) = unit.files.iter().find(|f| f.path == m.file) {
        let lines: Vec<&str> = f.text.lines().collect();
        let (a, b) = (m.lines.start.max(1) as usize - 1, (m.lines.end as usize).min(lines.len()));
        if a < b {
            out.extend(lines[a..b].iter().map(|l| l.to_string()));
        }
    }
    out
}

fn ngrams(text: &str) -> Vec<Vec<&str>> {
    let w: Vec<&str> = words(text).collect();
    w.windows(NGRAM).map(|s| s.to_vec()).collect()
}

/// Whether `text` contains any run of [`NGRAM`] words that also occurs in
/// one of `bodies`.
pub fn shares_ngram(text: &str, bodies: &[String]) -> bool {
    let grams: BTreeSet<Vec<&str>> = bodies.iter().flat_map(|b| ngrams(b)).collect();
    ngrams(text).iter().any(|g| grams.contains(g))
}

/// Whether `text` repeats part of a module body: a shared word run, or a
/// whole body line of at least three words (whitespace ignored).
pub fn copies_body(text: &str, bodies: &[String]) -> bool {
    let squash = |s: &str| s.split_whitespace().collect::<String>();
    let flat = squash(text);
    shares_ngram(text, bodies)
        || bodies
            .iter()
            .flat_map(|b| b.lines())
            .any(|l| words(l).count() >= 3 && flat.contains(&squash(l)))
}

fn port_context(graph: &DesignGraph, module: &str) -> Vec<Value> {
    graph.ports[module]
        .iter()
        .map(|p| json!({"name": p.name, "direction": p.direction, "width": p.width.bits()}))
        .collect()
}

fn base_context(graph: &DesignGraph, module: &str, cfg: &PipelineConfig) -> Value {
    let c = module_controls(graph, module, cfg);
    json!({
        "module": module,
        "ports": port_context(graph, module),
        "clock": c.clock,
        "reset": c.reset,
        "reset_active_low": c.reset_active_low,
    })
}

fn request(stage: Stage, schema: &str, system: &str, user: String, cfg: &PipelineConfig) -> PromptRequest {
    PromptRequest {
        stage,
        system_text: system.into(),
        user_text: user,
        temperature: cfg.temperature,
        max_tokens: cfg.max_tokens,
        schema_id: schema.into(),
    }
}

const SPEC_SYSTEM: &str = "You are a hardware verification engineer. From a design-level specification and a \
description of where a module sits in the design hierarchy, write the functional specification of that one \
module. Describe intended behavior only; you are not shown its implementation.";

const REPLY_RULE: &str = "Reply with exactly one fenced ```json block and nothing else.";

/// Stage-two prompt. Overview lines that repeat a statement of the module
/// body are left out, so the prompt carries no implementation text.
pub fn build_spec_prompt(
    doc: &SpecDocument,
    graph: &DesignGraph,
    unit: &SourceUnit,
    module: &str,
    cfg: &PipelineConfig,
) -> Result<PromptRequest, PipelineError> {
    let digest = relationship_digest(graph, module)?;
    let mut keywords: BTreeSet<String> = words(&digest).map(str::to_lowercase).collect();
    keywords.insert(module.to_lowercase());
    let overview = doc.select(&keywords, cfg.spec_budget_words, cfg.top_k_sections);
    let bodies = body_statements(unit, module);
    let kept: Vec<&str> = overview.lines().filter(|l| !copies_body(l, &bodies)).collect();
    let user = format!(
        "Design specification (excerpt):\n{}\n\nHierarchy facts:\n{}\n\
         Write the specification of module `{module}`. Give an overview, one behavior entry per port \
         (every port listed above exactly once, no others) and the assumptions it makes about its environment.\n\
         Schema module_spec.v1: {{\"module\": string, \"overview\": string, \"port_behaviors\": \
         [{{\"port\": string, \"behavior\": string}}], \"assumptions\": [string]}}. {REPLY_RULE}\n\nContext:",
        kept.join("\n").trim_end(),
        digest,
    );
    let ctx = base_context(graph, module, cfg);
    Ok(request(Stage::SpecExtract, "module_spec.v1", SPEC_SYSTEM, with_context(&user, &ctx), cfg))
}

const ITEMS_SYSTEM: &str = "You are a hardware verification engineer. Break a module specification into \
verification items: short, atomic statements of what must be checked, each with one condition and one \
expected result.";

pub fn build_items_prompt(
    spec: &ModuleSpec,
    graph: &DesignGraph,
    cfg: &PipelineConfig,
) -> Result<PromptRequest, PipelineError> {
    let module = spec.module.as_str();
    let digest = relationship_digest(graph, module)?;
    let mut ctx = base_context(graph, module, cfg);
    let mut nets_line = String::new();
    if cfg.expose_net_names {
        let nets: Vec<&str> = graph.signals[module]
            .iter()
            .filter(|s| s.kind != SignalKind::Port)
            .map(|s| s.name.as_str())
            .collect();
        nets_line = format!("Declared internal signals: {}\n", nets.join(", "));
        ctx["nets"] = json!(nets);
    }
    let spec_json = serde_json::to_string_pretty(&json!({
        "module": spec.module,
        "overview": spec.overview,
        "port_behaviors": spec.port_behaviors,
        "assumptions": spec.assumptions,
    }))
    .expect("spec serializes");
    ctx["spec"] = serde_json::to_value(spec).expect("spec serializes");
    let user = format!(
        "Module specification:\n{spec_json}\n\nHierarchy facts:\n{digest}{nets_line}\n\
         List at most {} verification items for `{module}`. Reference signals by their names in this module.\n\
         Schema items.v1: {{\"module\": string, \"items\": [{{\"condition\": string, \"expected\": string, \
         \"referenced_signals\": [string]}}]}}. {REPLY_RULE}\n\nContext:",
        cfg.max_items_per_module,
    );
    Ok(request(Stage::ItemExtract, "items.v1", ITEMS_SYSTEM, with_context(&user, &ctx), cfg))
}

const ASSERT_SYSTEM: &str = "You are a hardware verification engineer writing SystemVerilog assertions that are \
bound into a module and observe its internal behavior.";

pub fn build_assert_prompt(
    spec: &ModuleSpec,
    items: &[VerificationItem],
    graph: &DesignGraph,
    cfg: &PipelineConfig,
) -> Result<PromptRequest, PipelineError> {
    let module = spec.module.as_str();
    let digest = relationship_digest(graph, module)?;
    let c = module_controls(graph, module, cfg);
    let mut ctx = base_context(graph, module, cfg);
    let item_values: Vec<Value> = items
        .iter()
        .map(|i| {
            json!({"id": i.id, "condition": i.condition, "expected": i.expected, "referenced_signals": i.referenced_signals})
        })
        .collect();
    ctx["items"] = json!(item_values);
    ctx["template"] = json!("{source_module_name}.{signal_name}");
    let mut clocking = String::new();
    if let Some(clk) = &c.clock {
        clocking = format!("Sample on `@(posedge {clk})`");
        if let Some(r) = &c.reset {
            let cond = if c.reset_active_low { format!("!{r}") } else { r.clone() };
            clocking.push_str(&format!(" with `disable iff ({cond})`"));
        }
        clocking.push_str(".\n");
    }
    let user = format!(
        "Verification items:\n{}\n\nHierarchy facts:\n{digest}\n\
         Write at most {} assertions for `{module}`, one or more per item. Write every signal as \
         `{{source_module_name}}.{{signal_name}}`, e.g. `{module}.{}`. {clocking}\
         Each entry lists the ids of the items it checks.\n\
         Schema assertions.v1: {{\"module\": string, \"assertions\": [{{\"item_ids\": [string], \"sva\": string}}]}}. \
         {REPLY_RULE}\n\nContext:",
        serde_json::to_string_pretty(&item_values).expect("items serialize"),
        cfg.max_asserts_per_module,
        graph.ports[module].first().map_or("sig", |p| p.name.as_str()),
    );
    Ok(request(Stage::AssertGen, "assertions.v1", ASSERT_SYSTEM, with_context(&user, &ctx), cfg))
}
