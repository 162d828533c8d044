// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use super::{parse_sva, Prop, Seq, SvaAst};
use crate::graph::DesignGraph;
use crate::verilog::lexer::{lex, TokenKind};
use crate::verilog::{BinaryOp, Expr};

pub const VERDICTS_SCHEMA: &str = "verdicts.v1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssertionInput {
    pub id: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub names: Vec<String>,
}

impl CheckOutcome {
    fn pass() -> Self {
        CheckOutcome { ok: true, message: None, names: vec![] }
    }

    fn fail_names(names: Vec<String>) -> Self {
        CheckOutcome { ok: names.is_empty(), message: None, names }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationVerdict {
    pub id: String,
    pub text: String,
    pub syntax: CheckOutcome,
    /// Absent when the syntax check failed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub template: Option<CheckOutcome>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<CheckOutcome>,
    pub trivial: bool,
}

impl ValidationVerdict {
    pub fn fully_valid(&self) -> bool {
        self.syntax.ok
            && self.template.as_ref().is_some_and(|t| t.ok)
            && self.resolution.as_ref().is_some_and(|r| r.ok)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerdictReport {
    pub schema: String,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "S")]
    pub s: usize,
    pub verdicts: Vec<ValidationVerdict>,
}

impl VerdictReport {
    pub fn new(verdicts: Vec<ValidationVerdict>) -> Self {
        VerdictReport {
            schema: VERDICTS_SCHEMA.into(),
            n: verdicts.len(),
            s: verdicts.iter().filter(|v| v.syntax.ok).count(),
            verdicts,
        }
    }

    pub fn has_failures(&self) -> bool {
        self.verdicts.iter().any(|v| !v.fully_valid())
    }
}

/// Check syntax, the `Module.signal` naming template and signal existence
/// for each assertion.
///
/// Body signals must be written `Module.signal` with `Module` a module of
/// the design. The clocking event and `disable iff` condition may also use
/// bare names, which must exist in every module the body refers to.
pub fn validate(assertions: &[AssertionInput], graph: &DesignGraph) -> Vec<ValidationVerdict> {
    assertions.iter().map(|a| validate_one(a, graph)).collect()
}

fn validate_one(a: &AssertionInput, graph: &DesignGraph) -> ValidationVerdict {
    let ast = match parse_sva(&a.text) {
        Ok(ast) => ast,
        Err(e) => {
            return ValidationVerdict {
                id: a.id.clone(),
                text: a.text.clone(),
                syntax: CheckOutcome { ok: false, message: Some(e.to_string()), names: vec![] },
                template: None,
                resolution: None,
                trivial: false,
            }
        }
    };
    let body = ast.body_names();
    let control = ast.control_names();

    let mut violations = Vec::new();
    let mut unresolved = Vec::new();
    let mut modules: Vec<&str> = Vec::new();
    for n in &body {
        match n.split_once('.') {
            Some((m, s)) if !s.contains('.') && graph.has_module(m) => {
                if !modules.contains(&m) {
                    modules.push(m);
                }
                if graph.signal_info(m, s).is_none() {
                    unresolved.push(n.clone());
                }
            }
            _ => {
                violations.push(n.clone());
                unresolved.push(n.clone());
            }
        }
    }
    for n in &control {
        match n.split_once('.') {
            None => {
                if modules.is_empty() || modules.iter().any(|m| graph.signal_info(m, n).is_none()) {
                    unresolved.push(n.clone());
                }
            }
            Some((m, s)) if !s.contains('.') && graph.has_module(m) => {
                if graph.signal_info(m, s).is_none() {
                    unresolved.push(n.clone());
                }
            }
            _ => {
                violations.push(n.clone());
                unresolved.push(n.clone());
            }
        }
    }
    ValidationVerdict {
        id: a.id.clone(),
        text: a.text.clone(),
        syntax: CheckOutcome::pass(),
        template: Some(CheckOutcome::fail_names(violations)),
        resolution: Some(CheckOutcome::fail_names(unresolved)),
        trivial: is_trivial(&ast),
    }
}

/// An assertion is trivial when its outcome does not depend on any signal
/// value: every boolean reads only declaration facts such as `$bits`, or
/// an overlapping implication restates its antecedent.
pub fn is_trivial(ast: &SvaAst) -> bool {
    let mut reads_signal = false;
    ast.property.for_each_bool(&mut |e| reads_signal |= reads_value(e));
    if !reads_signal {
        return true;
    }
    match &ast.property {
        Prop::Implies { ante, overlapping: true, cons } => matches!(&**cons, Prop::Seq { seq } if seq == ante),
        Prop::Seq { seq: Seq::Bool { expr } } => is_tautology(expr),
        _ => false,
    }
}

fn reads_value(e: &Expr) -> bool {
    match e {
        Expr::Name { .. } => true,
        Expr::Call { name, .. } if name == "$bits" => false,
        _ => e.children().into_iter().any(reads_value),
    }
}

fn is_tautology(e: &Expr) -> bool {
    match e {
        Expr::Binary { op, lhs, rhs, .. } => {
            matches!(op, BinaryOp::Eq | BinaryOp::CaseEq | BinaryOp::Le | BinaryOp::Ge) && lhs == rhs
        }
        _ => false,
    }
}

/// Split a SystemVerilog text into its `assert property` statements,
/// returned verbatim. Anything else in the file is ignored.
pub fn split_assertions(text: &str) -> Vec<String> {
    let Ok(toks) = lex(text) else {
        return fallback_split(text);
    };
    let mut out = Vec::new();
    let mut i = 0;
    while i < toks.len() {
        if toks[i].is_kw("assert") && toks.get(i + 1).is_some_and(|t| t.is_kw("property")) {
            let mut start = i;
            if i >= 2 && toks[i - 1].is_op(":") && matches!(toks[i - 2].kind, TokenKind::Ident { .. }) {
                start = i - 2;
            }
            let mut depth = 0i32;
            let mut j = i + 2;
            let mut end = None;
            while j < toks.len() {
                let t = &toks[j];
                if matches!(t.kind, TokenKind::Eof) {
                    break;
                }
                if t.is_op("(") {
                    depth += 1;
                } else if t.is_op(")") {
                    depth -= 1;
                } else if t.is_op(";") && depth <= 0 {
                    end = Some(j);
                    break;
                }
                j += 1;
            }
            let stop = end.unwrap_or(j.saturating_sub(1));
            let last = &toks[stop.min(toks.len() - 1)];
            out.push(text[toks[start].start..last.end].to_string());
            i = stop + 1;
        } else {
            i += 1;
        }
    }
    out
}

fn fallback_split(text: &str) -> Vec<String> {
    text.split(';')
        .filter_map(|s| {
            let t = s.trim();
            t.find("assert").map(|k| format!("{};", &t[k..]))
        })
        .collect()
}
