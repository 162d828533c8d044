// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeSet;
use std::fmt::Write;

use serde_json::Value;

use super::prompts::{build_assert_prompt, build_items_prompt, build_spec_prompt};
use super::{
    module_controls, Assertion, AssertionStatus, ModuleSpec, PipelineConfig, PipelineError, PortBehavior, Provenance,
    SpecDocument, VerificationItem,
};
use crate::graph::DesignGraph;
use crate::llm::{Gateway, PromptRequest};
use crate::sva::{is_trivial, parse_sva, validate, AssertionInput, Clocking, Prop, Seq, SvaAst};
use crate::verilog::{expr_text, Edge, Expr, Ident, SourceUnit, UnaryOp};

const TRANSCRIPT_FILE: &str = "transcript.jsonl";

fn ask(gw: &Gateway, req: &PromptRequest, module: &str) -> Result<Value, PipelineError> {
    let resp = gw.complete(req)?;
    match resp.parsed {
        Some(v) => Ok(v),
        None => Err(PipelineError::MalformedLlmOutput {
            module: module.into(),
            stage: req.stage.as_str().into(),
            message: resp.malformed.unwrap_or_default(),
        }),
    }
}

fn with_note(req: &PromptRequest, note: &str) -> PromptRequest {
    let mut r = req.clone();
    r.user_text.push_str("\n\n");
    r.user_text.push_str(note);
    r
}

fn str_field(v: &Value, key: &str) -> String {
    v[key].as_str().unwrap_or_default().trim().to_string()
}

/// Build the module specification. A reply whose port list differs from
/// the design is re-requested once with the difference spelled out.
pub fn extract_module_spec(
    gw: &Gateway,
    cfg: &PipelineConfig,
    doc: &SpecDocument,
    graph: &DesignGraph,
    unit: &SourceUnit,
    module: &str,
    warnings: &mut Vec<String>,
) -> Result<ModuleSpec, PipelineError> {
    if !graph.has_module(module) {
        return Err(PipelineError::UnknownModule(module.into()));
    }
    let ports = &graph.ports[module];
    let req = build_spec_prompt(doc, graph, unit, module, cfg)?;
    let mut requests = vec![req.hash()];
    let mut doc_v = ask(gw, &req, module)?;
    for attempt in 0..2 {
        let listed: Vec<String> = doc_v["port_behaviors"]
            .as_array()
            .into_iter()
            .flatten()
            .map(|p| str_field(p, "port"))
            .collect();
        let missing: Vec<String> = ports.iter().filter(|p| !listed.contains(&p.name)).map(|p| p.name.clone()).collect();
        let extra: Vec<String> = listed
            .iter()
            .filter(|n| !ports.iter().any(|p| &p.name == *n))
            .cloned()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        if missing.is_empty() && extra.is_empty() {
            break;
        }
        if attempt == 1 {
            return Err(PipelineError::PortMismatch { module: module.into(), missing, extra });
        }
        let note = format!(
            "Your port_behaviors did not match the module's ports. Missing: {}. Not ports of `{module}`: {}. \
             List every port exactly once and no other names.",
            if missing.is_empty() { "none".into() } else { missing.join(", ") },
            if extra.is_empty() { "none".into() } else { extra.join(", ") },
        );
        let fix = with_note(&req, &note);
        requests.push(fix.hash());
        doc_v = ask(gw, &fix, module)?;
    }
    let mut behaviors = Vec::new();
    for p in ports {
        let entries: Vec<&Value> = doc_v["port_behaviors"]
            .as_array()
            .into_iter()
            .flatten()
            .filter(|b| str_field(b, "port") == p.name)
            .collect();
        if entries.len() > 1 {
            warnings.push(format!("{module}: port `{}` described {} times; kept the first", p.name, entries.len()));
        }
        behaviors.push(PortBehavior {
            port: p.name.clone(),
            direction: p.direction,
            width: p.width,
            behavior: str_field(entries[0], "behavior"),
        });
    }
    Ok(ModuleSpec {
        module: module.into(),
        overview: str_field(&doc_v, "overview"),
        port_behaviors: behaviors,
        assumptions: doc_v["assumptions"]
            .as_array()
            .into_iter()
            .flatten()
            .filter_map(|a| a.as_str().map(|s| s.trim().to_string()))
            .collect(),
        provenance: Provenance { transcript: TRANSCRIPT_FILE.into(), requests },
    })
}

/// Resolve a referenced name against the module's ports and nets, also
/// accepting the `module.signal` form.
fn resolve_local(graph: &DesignGraph, module: &str, name: &str) -> Option<String> {
    let bare = name.strip_prefix(&format!("{module}.")).unwrap_or(name);
    graph.signal_info(module, bare).map(|s| s.name.clone())
}

pub fn extract_verification_items(
    gw: &Gateway,
    cfg: &PipelineConfig,
    spec: &ModuleSpec,
    graph: &DesignGraph,
    warnings: &mut Vec<String>,
) -> Result<Vec<VerificationItem>, PipelineError> {
    let module = spec.module.as_str();
    let req = build_items_prompt(spec, graph, cfg)?;
    let doc = ask(gw, &req, module)?;
    let spec_ref = spec.content_hash();
    let mut items = Vec::new();
    for (i, it) in doc["items"].as_array().into_iter().flatten().enumerate() {
        let mut refs = Vec::new();
        let mut unknown = Vec::new();
        for r in it["referenced_signals"].as_array().into_iter().flatten().filter_map(Value::as_str) {
            match resolve_local(graph, module, r) {
                Some(n) if !refs.contains(&n) => refs.push(n),
                Some(_) => {}
                None => unknown.push(r.to_string()),
            }
        }
        if !unknown.is_empty() {
            warnings.push(format!("{module}: item {} dropped, unknown signal(s) {}", i + 1, unknown.join(", ")));
            continue;
        }
        if items.len() == cfg.max_items_per_module {
            warnings.push(format!("{module}: items beyond {} dropped", cfg.max_items_per_module));
            break;
        }
        items.push(VerificationItem {
            id: format!("VI-{}", items.len() + 1),
            module: module.into(),
            condition: str_field(it, "condition"),
            expected: str_field(it, "expected"),
            referenced_signals: refs,
            spec_ref: spec_ref.clone(),
        });
    }
    Ok(items)
}

fn map_bools(p: &mut Prop, f: &mut dyn FnMut(&mut Expr)) {
    fn seq(s: &mut Seq, f: &mut dyn FnMut(&mut Expr)) {
        match s {
            Seq::Bool { expr } => f(expr),
            Seq::Delay { lhs, rhs, .. } => {
                if let Some(l) = lhs {
                    seq(l, f);
                }
                seq(rhs, f);
            }
            Seq::Repeat { inner, .. } => seq(inner, f),
        }
    }
    match p {
        Prop::Seq { seq: s } => seq(s, f),
        Prop::Not { inner } => map_bools(inner, f),
        Prop::And { lhs, rhs } | Prop::Or { lhs, rhs } => {
            map_bools(lhs, f);
            map_bools(rhs, f);
        }
        Prop::Implies { ante, cons, .. } => {
            seq(ante, f);
            map_bools(cons, f);
        }
    }
}

/// Rewrite names into `Module.signal`: bare names of the target module and
/// instance paths of the design. Other names are left for validation.
fn template_names(e: &mut Expr, graph: &DesignGraph, module: &str) {
    if let Expr::Name { parts, .. } = e {
        let dotted: Vec<&str> = parts.iter().map(|p| p.name.as_str()).collect();
        let rewritten = match dotted.as_slice() {
            [s] if graph.signal_info(module, s).is_some() => Some((module.to_string(), s.to_string())),
            [m, _] if graph.has_module(m) => None,
            [prefix @ .., s] if !prefix.is_empty() => {
                let path = prefix.join(".");
                let at = graph.module_at(&path).or_else(|| graph.module_at(&format!("{}.{path}", graph.root)));
                at.filter(|m| graph.signal_info(m, s).is_some()).map(|m| (m.to_string(), s.to_string()))
            }
            _ => None,
        };
        if let Some((m, s)) = rewritten {
            *parts = vec![Ident::new(m), Ident::new(s)];
        }
        return;
    }
    for c in e.children_mut() {
        template_names(c, graph, module);
    }
}

/// Give an assertion the module's clock and reset when it has none.
/// Bare control names are used when every module the body reads has them.
fn add_controls(ast: &mut SvaAst, graph: &DesignGraph, module: &str, cfg: &PipelineConfig) {
    let c = module_controls(graph, module, cfg);
    let modules: BTreeSet<String> =
        ast.body_names().iter().filter_map(|n| n.split_once('.').map(|(m, _)| m.to_string())).collect();
    let name = |sig: &str| -> Expr {
        if !modules.is_empty() && modules.iter().all(|m| graph.signal_info(m, sig).is_some()) {
            Expr::ident(sig)
        } else {
            Expr::Name { parts: vec![Ident::new(module), Ident::new(sig)], loc: Default::default() }
        }
    };
    if ast.clock.is_none() {
        if let Some(clk) = &c.clock {
            ast.clock = Some(Clocking { edge: Edge::Posedge, expr: name(clk) });
        }
    }
    if ast.disable.is_none() && ast.clock.is_some() {
        if let Some(r) = &c.reset {
            let e = name(r);
            ast.disable = Some(if c.reset_active_low { Expr::unary(UnaryOp::LogicNot, e) } else { e });
        }
    }
}

struct Candidate {
    item_ids: Vec<String>,
    text: String,
    ast: Option<SvaAst>,
    problem: Option<String>,
    bad_names: Vec<String>,
}

fn as_statement(text: &str) -> String {
    let t = text.trim().trim_end_matches(';').trim();
    let head = t.split_once(':').map_or(t, |(l, rest)| if l.trim().chars().all(|c| c.is_alphanumeric() || c == '_') { rest.trim() } else { t });
    if head.starts_with("assert") {
        format!("{t};")
    } else {
        format!("assert property ({t});")
    }
}

fn candidates(
    doc: &Value,
    items: &[VerificationItem],
    graph: &DesignGraph,
    module: &str,
    cfg: &PipelineConfig,
    warnings: &mut Vec<String>,
) -> Vec<Candidate> {
    let ids: BTreeSet<&str> = items.iter().map(|i| i.id.as_str()).collect();
    let mut out = Vec::new();
    for (i, a) in doc["assertions"].as_array().into_iter().flatten().enumerate() {
        let item_ids: Vec<String> = a["item_ids"]
            .as_array()
            .into_iter()
            .flatten()
            .filter_map(Value::as_str)
            .filter(|id| ids.contains(id))
            .map(String::from)
            .collect();
        if item_ids.is_empty() {
            warnings.push(format!("{module}: assertion {} dropped, it names no known item", i + 1));
            continue;
        }
        let raw = as_statement(&str_field(a, "sva"));
        let mut c = Candidate { item_ids, text: raw.clone(), ast: None, problem: None, bad_names: vec![] };
        match parse_sva(&raw) {
            Err(e) => c.problem = Some(format!("`{raw}`: {e}")),
            Ok(mut ast) => {
                map_bools(&mut ast.property, &mut |e| template_names(e, graph, module));
                add_controls(&mut ast, graph, module, cfg);
                ast.label = None;
                c.text = ast.to_string();
                let v = &validate(&[AssertionInput { id: String::new(), text: c.text.clone() }], graph)[0];
                let mut bad: Vec<String> = Vec::new();
                for n in v.template.iter().chain(v.resolution.iter()).flat_map(|o| o.names.iter()) {
                    if !bad.contains(n) {
                        bad.push(n.clone());
                    }
                }
                if !bad.is_empty() {
                    c.problem = Some(format!("`{}` uses names that are not `Module.signal` of this design: {}", c.text, bad.join(", ")));
                }
                c.bad_names = bad;
                c.ast = Some(ast);
            }
        }
        out.push(c);
    }
    out
}

/// Generate deep assertions for the items. Syntax errors and names
/// outside the template get one repair request; names still outside the
/// template after it fail the module.
pub fn generate_deep_assertions(
    gw: &Gateway,
    cfg: &PipelineConfig,
    spec: &ModuleSpec,
    items: &[VerificationItem],
    graph: &DesignGraph,
    warnings: &mut Vec<String>,
) -> Result<Vec<Assertion>, PipelineError> {
    if items.is_empty() {
        return Ok(vec![]);
    }
    let module = spec.module.as_str();
    let req = build_assert_prompt(spec, items, graph, cfg)?;
    let mut local = Vec::new();
    let doc = ask(gw, &req, module)?;
    let mut cands = candidates(&doc, items, graph, module, cfg, &mut local);
    let problems: Vec<String> = cands.iter().filter_map(|c| c.problem.clone()).collect();
    if !problems.is_empty() {
        let note = format!(
            "These assertions could not be used:\n- {}\nReturn the full corrected list.",
            problems.join("\n- ")
        );
        let doc = ask(gw, &with_note(&req, &note), module)?;
        local.clear();
        cands = candidates(&doc, items, graph, module, cfg, &mut local);
        let bad: Vec<String> = cands.iter().flat_map(|c| c.bad_names.iter().cloned()).collect::<BTreeSet<_>>().into_iter().collect();
        if !bad.is_empty() {
            return Err(PipelineError::TemplateViolation { module: module.into(), names: bad });
        }
    }
    warnings.extend(local);
    if cands.len() > cfg.max_asserts_per_module {
        warnings.push(format!("{module}: assertions beyond {} dropped", cfg.max_asserts_per_module));
        cands.truncate(cfg.max_asserts_per_module);
    }
    Ok(cands
        .into_iter()
        .enumerate()
        .map(|(i, c)| {
            let (status, trivial, clock, disable, names) = match &c.ast {
                Some(ast) => (
                    AssertionStatus::Bound,
                    is_trivial(ast),
                    ast.clock.as_ref().map(|k| {
                        let edge = if k.edge == Edge::Posedge { "posedge" } else { "negedge" };
                        format!("{edge} {}", expr_text(&k.expr))
                    }),
                    ast.disable.as_ref().map(expr_text),
                    ast.body_names(),
                ),
                None => (AssertionStatus::Generated, false, None, None, vec![]),
            };
            Assertion {
                id: format!("A-{}", i + 1),
                module: module.into(),
                item_ids: c.item_ids,
                sva_text: c.text,
                clock_expr: clock,
                disable_expr: disable,
                referenced_hier_signals: names,
                status,
                trivial,
            }
        })
        .collect())
}

/// `assertions.sv`: a checker module holding the assertions, attached to
/// every instance of `module` with `bind`.
pub fn assertions_sv(module: &str, assertions: &[Assertion]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "module {module}_sva;");
    for a in assertions {
        let label = a.id.replace('-', "_");
        let mut tags = a.item_ids.join(", ");
        if a.trivial {
            tags.push_str(", trivial");
        }
        if a.status < AssertionStatus::SyntaxOk {
            let _ = writeln!(out, "  // {label} ({tags}) does not parse:");
            for line in a.sva_text.lines() {
                let _ = writeln!(out, "  // {line}");
            }
            continue;
        }
        let _ = writeln!(out, "  // {tags}");
        let _ = writeln!(out, "  {label}: {}", a.sva_text);
    }
    let _ = writeln!(out, "endmodule\n");
    let _ = writeln!(out, "bind {module} {module}_sva u_{module}_sva ();");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn statement_wrapping() {
        assert_eq!(as_statement("a |-> b"), "assert property (a |-> b);");
        assert_eq!(as_statement("assert property (a);"), "assert property (a);");
        assert_eq!(as_statement("p1: assert property (a)"), "p1: assert property (a);");
    }

    #[test]
    fn active_low_names() {
        for n in ["rst_n", "nReset", "resetn", "RSTN", "arst_b"] {
            assert!(super::super::active_low_name(n), "{n}");
        }
        for n in ["rst", "reset", "nrst_sync_in", "n"] {
            assert!(!super::super::active_low_name(n), "{n}");
        }
    }
}
