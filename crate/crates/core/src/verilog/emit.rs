// SPDX-License-Identifier: Apache-2.0

//! Canonical Verilog printer.
//!
//! Output is stable: printing, reparsing and printing again gives the
//! same text, and the reparsed tree equals the original.

use std::fmt::Write;

use super::ast::*;

const INDENT: &str = "  ";

/// Emit one text per originating file, holding that file's modules in
/// order. Files that contributed no modules are omitted.
pub fn emit_verilog(unit: &SourceUnit) -> Vec<(String, String)> {
    let mut out = Vec::new();
    for f in &unit.files {
        let mods: Vec<&ModuleDecl> = unit.modules.iter().filter(|m| m.file == f.path).collect();
        if mods.is_empty() {
            continue;
        }
        let mut text = String::new();
        if let Some(ts) = &f.timescale {
            let _ = writeln!(text, "`timescale {ts}\n");
        }
        for (i, m) in mods.iter().enumerate() {
            if i > 0 {
                text.push('\n');
            }
            text.push_str(&emit_module(m));
        }
        out.push((f.path.clone(), text));
    }
    out
}

/// Emit the whole unit as a single text.
pub fn emit_unit(unit: &SourceUnit) -> String {
    if unit.modules.is_empty() {
        return String::new();
    }
    let mut out = String::new();
    if let Some(ts) = unit.files.iter().find_map(|f| f.timescale.as_ref()) {
        let _ = writeln!(out, "`timescale {ts}");
        out.push('\n');
    }
    for (i, m) in unit.modules.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(&emit_module(m));
    }
    out
}

pub fn emit_module(m: &ModuleDecl) -> String {
    let mut out = String::new();
    let _ = write!(out, "module {}", m.name);
    if !m.header_params.is_empty() {
        out.push_str(" #(\n");
        for (i, p) in m.header_params.iter().enumerate() {
            let sep = if i + 1 < m.header_params.len() { "," } else { "" };
            let _ = writeln!(out, "{INDENT}{}{sep}", param_text(p));
        }
        out.push(')');
    }
    if m.ports.is_empty() {
        out.push_str(";\n");
    } else if m.ansi_ports {
        out.push_str(" (\n");
        for (i, p) in m.ports.iter().enumerate() {
            let sep = if i + 1 < m.ports.len() { "," } else { "" };
            let _ = writeln!(out, "{INDENT}{}{sep}", port_text(p));
        }
        out.push_str(");\n");
    } else {
        let names: Vec<String> = m.ports.iter().map(|p| p.name.to_string()).collect();
        let _ = writeln!(out, " ({});", names.join(", "));
        for p in &m.ports {
            let _ = writeln!(out, "{INDENT}{};", port_text(p));
        }
    }
    for item in &m.items {
        emit_item(&mut out, &item.kind);
    }
    out.push_str("endmodule\n");
    out
}

fn range_text(r: &Range) -> String {
    format!("[{}:{}]", expr_text(&r.msb), expr_text(&r.lsb))
}

fn param_text(p: &ParamDecl) -> String {
    let mut s = String::from(if p.local { "localparam" } else { "parameter" });
    if p.signed {
        s.push_str(" signed");
    }
    if let Some(r) = &p.range {
        s.push(' ');
        s.push_str(&range_text(r));
    }
    let assigns: Vec<String> = p.assigns.iter().map(|(n, e)| format!("{n} = {}", expr_text(e))).collect();
    s.push(' ');
    s.push_str(&assigns.join(", "));
    s
}

fn port_text(p: &PortDecl) -> String {
    let mut s = String::from(match p.direction {
        Direction::Input => "input",
        Direction::Output => "output",
        Direction::Inout => "inout",
    });
    if let Some(k) = p.net_kind {
        s.push(' ');
        s.push_str(k.keyword());
    }
    if p.signed {
        s.push_str(" signed");
    }
    if let Some(r) = &p.range {
        s.push(' ');
        s.push_str(&range_text(r));
    }
    let _ = write!(s, " {}", p.name);
    s
}

/// Canonical text of one module body item.
pub fn item_text(item: &ItemKind) -> String {
    let mut s = String::new();
    emit_item(&mut s, item);
    s
}

fn emit_item(out: &mut String, item: &ItemKind) {
    match item {
        ItemKind::Param(p) => {
            let _ = writeln!(out, "{INDENT}{};", param_text(p));
        }
        ItemKind::Net(n) => {
            let mut s = String::from(n.kind.keyword());
            if n.signed {
                s.push_str(" signed");
            }
            if let Some(r) = &n.range {
                s.push(' ');
                s.push_str(&range_text(r));
            }
            let names: Vec<String> = n
                .names
                .iter()
                .map(|nm| {
                    let mut t = nm.name.to_string();
                    for d in &nm.dims {
                        t.push(' ');
                        t.push_str(&range_text(d));
                    }
                    if let Some(init) = &nm.init {
                        let _ = write!(t, " = {}", expr_text(init));
                    }
                    t
                })
                .collect();
            let _ = writeln!(out, "{INDENT}{s} {};", names.join(", "));
        }
        ItemKind::Assign(a) => {
            let _ = writeln!(out, "{INDENT}assign {} = {};", expr_text(&a.lhs), expr_text(&a.rhs));
        }
        ItemKind::Always(a) => {
            let kw = match a.kind {
                AlwaysKind::Always => "always",
                AlwaysKind::AlwaysFf => "always_ff",
                AlwaysKind::AlwaysComb => "always_comb",
                AlwaysKind::AlwaysLatch => "always_latch",
            };
            let mut head = format!("{INDENT}{kw}");
            match &a.sensitivity {
                None => {}
                Some(Sensitivity::Star) => head.push_str(" @(*)"),
                Some(Sensitivity::List(items)) => {
                    let parts: Vec<String> = items
                        .iter()
                        .map(|i| {
                            let e = expr_text(&i.expr);
                            match i.edge {
                                Some(Edge::Posedge) => format!("posedge {e}"),
                                Some(Edge::Negedge) => format!("negedge {e}"),
                                None => e,
                            }
                        })
                        .collect();
                    let _ = write!(head, " @({})", parts.join(" or "));
                }
            }
            out.push_str(&head);
            emit_stmt_tail(out, &a.body, 1);
        }
        ItemKind::Instance(inst) => {
            let _ = write!(out, "{INDENT}{}", inst.child_module);
            if !inst.param_overrides.is_empty() {
                let ps: Vec<String> = inst
                    .param_overrides
                    .iter()
                    .map(|p| match &p.name {
                        Some(n) => format!(".{n}({})", expr_text(&p.value)),
                        None => expr_text(&p.value),
                    })
                    .collect();
                let _ = write!(out, " #({})", ps.join(", "));
            }
            let _ = write!(out, " {} (", inst.instance_name);
            if inst.connections.is_empty() {
                out.push_str(");\n");
                return;
            }
            out.push('\n');
            for (i, c) in inst.connections.iter().enumerate() {
                let sep = if i + 1 < inst.connections.len() { "," } else { "" };
                let e = c.expr.as_ref().map(expr_text).unwrap_or_default();
                match &c.port {
                    PortRef::Named(n) => {
                        let _ = writeln!(out, "{INDENT}{INDENT}.{n}({e}){sep}");
                    }
                    PortRef::Positional(_) => {
                        let _ = writeln!(out, "{INDENT}{INDENT}{e}{sep}");
                    }
                }
            }
            let _ = writeln!(out, "{INDENT});");
        }
        ItemKind::Opaque(o) => {
            let _ = writeln!(out, "{INDENT}{}", o.text);
        }
    }
}

/// Print `s` as the body following a header already on the current line.
fn emit_stmt_tail(out: &mut String, s: &Stmt, depth: usize) {
    if matches!(s, Stmt::Block { .. }) {
        out.push(' ');
        emit_stmt_inline(out, s, depth);
    } else {
        out.push('\n');
        emit_stmt(out, s, depth + 1);
    }
}

fn pad(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str(INDENT);
    }
}

fn emit_stmt(out: &mut String, s: &Stmt, depth: usize) {
    pad(out, depth);
    emit_stmt_inline(out, s, depth);
}

/// Print a statement whose first line has already been indented.
fn emit_stmt_inline(out: &mut String, s: &Stmt, depth: usize) {
    match s {
        Stmt::Block { label, stmts } => {
            out.push_str("begin");
            if let Some(l) = label {
                let _ = write!(out, " : {l}");
            }
            out.push('\n');
            for st in stmts {
                emit_stmt(out, st, depth + 1);
            }
            pad(out, depth);
            out.push_str("end\n");
        }
        Stmt::If { cond, then_branch, else_branch, .. } => {
            let _ = write!(out, "if ({})", expr_text(cond));
            emit_stmt_tail(out, then_branch, depth);
            if let Some(e) = else_branch {
                if matches!(**then_branch, Stmt::Block { .. }) {
                    // drop the newline after `end` so `else` follows it
                    out.pop();
                    out.push(' ');
                } else {
                    pad(out, depth);
                }
                out.push_str("else");
                if matches!(**e, Stmt::If { .. }) {
                    out.push(' ');
                    emit_stmt_inline(out, e, depth);
                } else {
                    emit_stmt_tail(out, e, depth);
                }
            }
        }
        Stmt::Case { kind, expr, items } => {
            let kw = match kind {
                CaseKind::Case => "case",
                CaseKind::Casez => "casez",
                CaseKind::Casex => "casex",
            };
            let _ = writeln!(out, "{kw} ({})", expr_text(expr));
            for item in items {
                pad(out, depth + 1);
                if item.labels.is_empty() {
                    out.push_str("default:");
                } else {
                    let ls: Vec<String> = item.labels.iter().map(expr_text).collect();
                    let _ = write!(out, "{}:", ls.join(", "));
                }
                emit_stmt_tail(out, &item.body, depth + 1);
            }
            pad(out, depth);
            out.push_str("endcase\n");
        }
        Stmt::Assign { lhs, rhs, blocking, delay, .. } => {
            let op = if *blocking { "=" } else { "<=" };
            let d = match delay {
                Some(d) => format!("#{} ", expr_text(d)),
                None => String::new(),
            };
            let _ = writeln!(out, "{} {op} {d}{};", expr_text(lhs), expr_text(rhs));
        }
        Stmt::For { init, cond, step, body } => {
            let _ = write!(
                out,
                "for ({} = {}; {}; {} = {})",
                expr_text(&init.0),
                expr_text(&init.1),
                expr_text(cond),
                expr_text(&step.0),
                expr_text(&step.1)
            );
            emit_stmt_tail(out, body, depth);
        }
        Stmt::SystemCall { name, args } => {
            if args.is_empty() {
                let _ = writeln!(out, "{name};");
            } else {
                let a: Vec<String> = args.iter().map(expr_text).collect();
                let _ = writeln!(out, "{name}({});", a.join(", "));
            }
        }
        Stmt::Null => out.push_str(";\n"),
    }
}

/// Whether `child` needs parentheses as an operand of a binary operator
/// with precedence `parent` on the given side.
pub fn needs_parens(child: &Expr, parent: u8, right: bool) -> bool {
    let c = child.precedence();
    if right {
        c <= parent
    } else {
        c < parent
    }
}

pub fn expr_text(e: &Expr) -> String {
    let mut s = String::new();
    write_expr(&mut s, e);
    s
}

fn write_wrapped(out: &mut String, e: &Expr, wrap: bool) {
    if wrap {
        out.push('(');
        write_expr(out, e);
        out.push(')');
    } else {
        write_expr(out, e);
    }
}

fn write_expr(out: &mut String, e: &Expr) {
    match e {
        Expr::Name { parts, .. } => {
            for (i, p) in parts.iter().enumerate() {
                if i > 0 {
                    out.push('.');
                }
                let _ = write!(out, "{p}");
            }
        }
        Expr::Number { text, .. } => out.push_str(text),
        Expr::Str { text } => {
            let _ = write!(out, "\"{text}\"");
        }
        Expr::Index { base, index } => {
            write_wrapped(out, base, !base.is_primary());
            out.push('[');
            write_expr(out, index);
            out.push(']');
        }
        Expr::Slice { base, kind, left, right } => {
            write_wrapped(out, base, !base.is_primary());
            out.push('[');
            write_expr(out, left);
            out.push_str(match kind {
                SliceKind::Range => ":",
                SliceKind::Up => "+:",
                SliceKind::Down => "-:",
            });
            write_expr(out, right);
            out.push(']');
        }
        Expr::Concat { items } => {
            out.push('{');
            for (i, it) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_expr(out, it);
            }
            out.push('}');
        }
        Expr::Replicate { count, items } => {
            out.push('{');
            write_expr(out, count);
            out.push('{');
            for (i, it) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_expr(out, it);
            }
            out.push_str("}}");
        }
        Expr::Unary { op, operand, .. } => {
            out.push_str(op.symbol());
            if matches!(**operand, Expr::Unary { .. }) {
                // `~ &a` must not lex as `~&a`
                out.push(' ');
            }
            write_wrapped(out, operand, matches!(**operand, Expr::Binary { .. } | Expr::Ternary { .. }));
        }
        Expr::Binary { op, lhs, rhs, .. } => {
            let p = op.precedence();
            write_wrapped(out, lhs, needs_parens(lhs, p, false));
            let _ = write!(out, " {} ", op.symbol());
            write_wrapped(out, rhs, needs_parens(rhs, p, true));
        }
        Expr::Ternary { cond, then_expr, else_expr, .. } => {
            write_wrapped(out, cond, matches!(**cond, Expr::Ternary { .. }));
            out.push_str(" ? ");
            write_expr(out, then_expr);
            out.push_str(" : ");
            write_expr(out, else_expr);
        }
        Expr::Call { name, args } => {
            out.push_str(name);
            if !args.is_empty() || !name.starts_with('$') {
                out.push('(');
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    write_expr(out, a);
                }
                out.push(')');
            }
        }
        Expr::Paren { inner } => {
            out.push('(');
            write_expr(out, inner);
            out.push(')');
        }
    }
}
