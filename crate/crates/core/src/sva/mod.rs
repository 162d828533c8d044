// SPDX-License-Identifier: Apache-2.0

//! Parser, printer and validator for the supported SVA subset.

mod validate;

use std::fmt::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::verilog::lexer::{lex, Token, TokenKind};
use crate::verilog::parser::Parser;
use crate::verilog::{expr_text, Edge, Expr};

pub use validate::{
    is_trivial, split_assertions, validate, AssertionInput, CheckOutcome, ValidationVerdict,
    VerdictReport, VERDICTS_SCHEMA,
};

/// System functions allowed inside assertion expressions.
pub const SYSTEM_FUNCTIONS: &[&str] = &["$past", "$rose", "$fell", "$stable", "$bits"];

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[error("syntax error at {line}:{col}: {message}")]
pub struct SyntaxError {
    pub line: u32,
    pub col: u32,
    pub offset: usize,
    pub message: String,
    pub expected: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Clocking {
    pub edge: Edge,
    pub expr: Expr,
}

/// Sequence expressions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Seq {
    Bool { expr: Expr },
    /// `lhs ##[min:max] rhs`; a missing `lhs` is a leading delay.
    Delay { lhs: Option<Box<Seq>>, min: u32, max: u32, rhs: Box<Seq> },
    /// `inner[*min:max]`
    Repeat { inner: Box<Seq>, min: u32, max: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Prop {
    Seq { seq: Seq },
    Not { inner: Box<Prop> },
    And { lhs: Box<Prop>, rhs: Box<Prop> },
    Or { lhs: Box<Prop>, rhs: Box<Prop> },
    /// `|->` when `overlapping`, otherwise `|=>`.
    Implies { ante: Seq, overlapping: bool, cons: Box<Prop> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SvaAst {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clock: Option<Clocking>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub disable: Option<Expr>,
    pub property: Prop,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action: Option<Expr>,
}

impl Seq {
    pub fn bool(expr: Expr) -> Seq {
        Seq::Bool { expr }
    }

    /// Visit every boolean leaf.
    pub fn for_each_bool<'a>(&'a self, f: &mut dyn FnMut(&'a Expr)) {
        match self {
            Seq::Bool { expr } => f(expr),
            Seq::Delay { lhs, rhs, .. } => {
                if let Some(l) = lhs {
                    l.for_each_bool(f);
                }
                rhs.for_each_bool(f);
            }
            Seq::Repeat { inner, .. } => inner.for_each_bool(f),
        }
    }

    /// Largest `$past` depth used.
    pub fn max_past(&self) -> u32 {
        let mut m = 0;
        self.for_each_bool(&mut |e| m = m.max(past_depth(e)));
        m
    }
}

impl Prop {
    pub fn for_each_bool<'a>(&'a self, f: &mut dyn FnMut(&'a Expr)) {
        match self {
            Prop::Seq { seq } => seq.for_each_bool(f),
            Prop::Not { inner } => inner.for_each_bool(f),
            Prop::And { lhs, rhs } | Prop::Or { lhs, rhs } => {
                lhs.for_each_bool(f);
                rhs.for_each_bool(f);
            }
            Prop::Implies { ante, cons, .. } => {
                ante.for_each_bool(f);
                cons.for_each_bool(f);
            }
        }
    }
}

impl SvaAst {
    /// Signal names referenced by the property body, in first-use order.
    pub fn body_names(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        self.property.for_each_bool(&mut |e| {
            for n in e.names() {
                if !out.contains(&n) {
                    out.push(n);
                }
            }
        });
        out
    }

    /// Names used by the clocking event and disable condition.
    pub fn control_names(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for e in self.clock.iter().map(|c| &c.expr).chain(self.disable.iter()) {
            for n in e.names() {
                if !out.contains(&n) {
                    out.push(n);
                }
            }
        }
        out
    }
}

fn past_depth(e: &Expr) -> u32 {
    let mut m = 0;
    if let Expr::Call { name, args } = e {
        if name == "$past" {
            let d = args.get(1).and_then(const_u32).unwrap_or(1);
            m = d + args.first().map(past_depth).unwrap_or(0);
        }
    }
    for c in e.children() {
        m = m.max(past_depth(c));
    }
    m
}

fn const_u32(e: &Expr) -> Option<u32> {
    match e {
        Expr::Number { text, .. } => {
            let lit = crate::verilog::number::parse_literal(text)?;
            if lit.has_unknown() {
                return None;
            }
            u32::try_from(&lit.value).ok()
        }
        _ => None,
    }
}

// -- parsing -----------------------------------------------------------------

/// Parse one `assert property (...)` statement.
pub fn parse_sva(text: &str) -> Result<SvaAst, SyntaxError> {
    let toks = lex(text).map_err(|e| SyntaxError {
        line: e.line,
        col: e.col,
        offset: 0,
        message: e.message,
        expected: vec![],
    })?;
    let mut p = SvaParser { p: Parser::new(&toks, text) };
    let ast = p.assertion()?;
    Ok(ast)
}

/// Parse a bare property expression (no `assert property` wrapper).
pub fn parse_property(text: &str) -> Result<Prop, SyntaxError> {
    let toks = lex(text).map_err(|e| SyntaxError {
        line: e.line,
        col: e.col,
        offset: 0,
        message: e.message,
        expected: vec![],
    })?;
    let mut p = SvaParser { p: Parser::new(&toks, text) };
    let prop = p.property()?;
    if !p.p.at_eof() {
        return Err(p.err_expected(&["end of property"]));
    }
    Ok(prop)
}

struct SvaParser<'a> {
    p: Parser<'a>,
}

type SResult<T> = Result<T, SyntaxError>;

impl From<crate::verilog::ParseError> for SyntaxError {
    fn from(e: crate::verilog::ParseError) -> Self {
        SyntaxError { line: e.line, col: e.col, offset: e.offset, message: e.message, expected: e.expected }
    }
}

impl<'a> SvaParser<'a> {
    fn tok(&self) -> &'a Token {
        self.p.peek()
    }

    fn err(&self, message: impl Into<String>) -> SyntaxError {
        self.p.error(message).into()
    }

    fn err_expected(&self, expected: &[&str]) -> SyntaxError {
        self.p.error_expected(expected).into()
    }

    fn assertion(&mut self) -> SResult<SvaAst> {
        let mut label = None;
        if let TokenKind::Ident { name, .. } = &self.tok().kind {
            if self.p.peek_at(1).is_op(":") && !self.tok().is_kw("assert") {
                label = Some(name.clone());
                self.p.bump();
                self.p.bump();
            }
        }
        self.p.expect_kw("assert")?;
        self.p.expect_kw("property")?;
        self.p.expect_op("(")?;
        let mut clock = None;
        if self.p.eat_op("@") {
            self.p.expect_op("(")?;
            let edge = if self.p.eat_kw("posedge") {
                Edge::Posedge
            } else if self.p.eat_kw("negedge") {
                Edge::Negedge
            } else {
                return Err(self.err_expected(&["`posedge`", "`negedge`"]));
            };
            let expr = self.bool_expr()?;
            self.p.expect_op(")")?;
            clock = Some(Clocking { edge, expr });
        }
        let mut disable = None;
        if self.p.eat_kw("disable") {
            self.p.expect_kw("iff")?;
            self.p.expect_op("(")?;
            disable = Some(self.bool_expr()?);
            self.p.expect_op(")")?;
        }
        let property = self.property()?;
        self.p.expect_op(")")?;
        let mut action = None;
        if self.p.eat_kw("else") {
            let e = self.p.primary()?;
            match &e {
                Expr::Call { name, .. } if name.starts_with('$') => action = Some(e),
                _ => return Err(self.err("expected a system task after `else`")),
            }
        }
        self.p.expect_op(";")?;
        if !self.p.at_eof() {
            return Err(self.err_expected(&["end of assertion"]));
        }
        Ok(SvaAst { label, clock, disable, property, action })
    }

    fn property(&mut self) -> SResult<Prop> {
        let start = self.tok().clone();
        let lhs = self.or_prop()?;
        let overlapping = if self.p.eat_op("|->") {
            true
        } else if self.p.eat_op("|=>") {
            false
        } else {
            return Ok(lhs);
        };
        let ante = match lhs {
            Prop::Seq { seq } => seq,
            _ => {
                let mut e = self.err("implication antecedent must be a sequence");
                e.line = start.line;
                e.col = start.col;
                e.offset = start.start;
                return Err(e);
            }
        };
        let cons = self.property()?;
        Ok(Prop::Implies { ante, overlapping, cons: Box::new(cons) })
    }

    fn or_prop(&mut self) -> SResult<Prop> {
        let mut lhs = self.and_prop()?;
        while self.p.eat_kw("or") {
            let rhs = self.and_prop()?;
            lhs = Prop::Or { lhs: Box::new(lhs), rhs: Box::new(rhs) };
        }
        Ok(lhs)
    }

    fn and_prop(&mut self) -> SResult<Prop> {
        let mut lhs = self.unary_prop()?;
        while self.p.eat_kw("and") {
            let rhs = self.unary_prop()?;
            lhs = Prop::And { lhs: Box::new(lhs), rhs: Box::new(rhs) };
        }
        Ok(lhs)
    }

    fn unary_prop(&mut self) -> SResult<Prop> {
        if self.p.eat_kw("not") {
            let inner = self.unary_prop()?;
            return Ok(Prop::Not { inner: Box::new(inner) });
        }
        if self.tok().is_op("(") {
            let save = self.p.pos;
            match self.sequence() {
                Ok(seq) => return Ok(Prop::Seq { seq }),
                Err(_) => {
                    self.p.pos = save;
                    self.p.bump();
                    let inner = self.property()?;
                    self.p.expect_op(")")?;
                    return Ok(inner);
                }
            }
        }
        Ok(Prop::Seq { seq: self.sequence()? })
    }

    fn sequence(&mut self) -> SResult<Seq> {
        let mut lhs = if self.tok().is_op("##") {
            let (min, max) = self.delay()?;
            let rhs = self.seq_item()?;
            Seq::Delay { lhs: None, min, max, rhs: Box::new(rhs) }
        } else {
            self.seq_item()?
        };
        while self.tok().is_op("##") {
            let (min, max) = self.delay()?;
            let rhs = self.seq_item()?;
            lhs = Seq::Delay { lhs: Some(Box::new(lhs)), min, max, rhs: Box::new(rhs) };
        }
        Ok(lhs)
    }

    fn number(&mut self) -> SResult<u32> {
        let t = self.tok();
        if let TokenKind::Number(text) = &t.kind {
            if let Some(v) = const_u32(&Expr::number(text)) {
                self.p.bump();
                return Ok(v);
            }
        }
        Err(self.err_expected(&["constant"]))
    }

    fn delay(&mut self) -> SResult<(u32, u32)> {
        self.p.expect_op("##")?;
        if self.p.eat_op("[") {
            let min = self.number()?;
            self.p.expect_op(":")?;
            if matches!(&self.tok().kind, TokenKind::Ident { name, .. } if name == "$")
                || matches!(&self.tok().kind, TokenKind::SysIdent(s) if s == "$")
            {
                return Err(self.err("unbounded delay ranges are not supported"));
            }
            let at = self.tok().clone();
            let max = self.number()?;
            self.p.expect_op("]")?;
            if min > max {
                return Err(SyntaxError {
                    line: at.line,
                    col: at.col,
                    offset: at.start,
                    message: format!("delay range [{min}:{max}] has its bounds inverted"),
                    expected: vec![],
                });
            }
            Ok((min, max))
        } else {
            let n = self.number()?;
            Ok((n, n))
        }
    }

    fn seq_item(&mut self) -> SResult<Seq> {
        let mut s = self.seq_primary()?;
        while self.tok().is_op("[") && self.p.peek_at(1).is_op("*") {
            self.p.bump();
            self.p.bump();
            let at = self.tok().clone();
            let min = self.number()?;
            let max = if self.p.eat_op(":") { self.number()? } else { min };
            self.p.expect_op("]")?;
            if min == 0 || min > max {
                return Err(SyntaxError {
                    line: at.line,
                    col: at.col,
                    offset: at.start,
                    message: format!("repetition [*{min}:{max}] must satisfy 1 <= min <= max"),
                    expected: vec![],
                });
            }
            s = Seq::Repeat { inner: Box::new(s), min, max };
        }
        Ok(s)
    }

    fn seq_primary(&mut self) -> SResult<Seq> {
        if self.tok().is_op("(") {
            // Try a plain boolean first; fall back to a parenthesised
            // sequence or property.
            let save = self.p.pos;
            if let Ok(e) = self.bool_expr() {
                return Ok(Seq::Bool { expr: e });
            }
            self.p.pos = save;
            self.p.bump();
            let inner = self.property()?;
            self.p.expect_op(")")?;
            return match inner {
                Prop::Seq { seq } => Ok(seq),
                _ => Err(self.err("property used where a sequence is expected")),
            };
        }
        Ok(Seq::Bool { expr: self.bool_expr()? })
    }

    fn bool_expr(&mut self) -> SResult<Expr> {
        let start = self.tok().clone();
        let e = self.p.expr()?;
        check_system_calls(&e).map_err(|m| SyntaxError {
            line: start.line,
            col: start.col,
            offset: start.start,
            message: m,
            expected: vec![],
        })?;
        Ok(e.strip_parens())
    }
}

fn check_system_calls(e: &Expr) -> Result<(), String> {
    if let Expr::Call { name, args } = e {
        if !name.starts_with('$') {
            return Err(format!("function call `{name}` is not allowed in an assertion"));
        }
        if !SYSTEM_FUNCTIONS.contains(&name.as_str()) {
            return Err(format!("unsupported system function `{name}`"));
        }
        match name.as_str() {
            "$past" => {
                if args.is_empty() || args.len() > 2 {
                    return Err("`$past` takes one or two arguments".into());
                }
                if let Some(d) = args.get(1) {
                    match const_u32(d) {
                        Some(n) if n >= 1 => {}
                        _ => return Err("`$past` depth must be a constant >= 1".into()),
                    }
                }
            }
            _ => {
                if args.len() != 1 {
                    return Err(format!("`{name}` takes exactly one argument"));
                }
            }
        }
    }
    for c in e.children() {
        check_system_calls(c)?;
    }
    Ok(())
}

// -- printing ----------------------------------------------------------------

const PREC_IMPLIES: u8 = 1;
const PREC_OR: u8 = 2;
const PREC_AND: u8 = 3;
const PREC_NOT: u8 = 4;
const PREC_SEQ: u8 = 5;

fn prop_prec(p: &Prop) -> u8 {
    match p {
        Prop::Implies { .. } => PREC_IMPLIES,
        Prop::Or { .. } => PREC_OR,
        Prop::And { .. } => PREC_AND,
        Prop::Not { .. } => PREC_NOT,
        Prop::Seq { .. } => PREC_SEQ,
    }
}

fn write_prop(out: &mut String, p: &Prop, min: u8) {
    let wrap = prop_prec(p) < min;
    if wrap {
        out.push('(');
    }
    match p {
        Prop::Seq { seq } => write_seq(out, seq),
        Prop::Not { inner } => {
            out.push_str("not ");
            write_prop(out, inner, PREC_NOT);
        }
        Prop::And { lhs, rhs } => {
            write_prop(out, lhs, PREC_AND);
            out.push_str(" and ");
            write_prop(out, rhs, PREC_NOT);
        }
        Prop::Or { lhs, rhs } => {
            write_prop(out, lhs, PREC_OR);
            out.push_str(" or ");
            write_prop(out, rhs, PREC_AND);
        }
        Prop::Implies { ante, overlapping, cons } => {
            write_seq(out, ante);
            out.push_str(if *overlapping { " |-> " } else { " |=> " });
            write_prop(out, cons, PREC_IMPLIES);
        }
    }
    if wrap {
        out.push(')');
    }
}

fn write_delay(out: &mut String, min: u32, max: u32) {
    if min == max {
        let _ = write!(out, "##{min}");
    } else {
        let _ = write!(out, "##[{min}:{max}]");
    }
}

fn write_seq(out: &mut String, s: &Seq) {
    match s {
        Seq::Bool { expr } => out.push_str(&expr_text(expr)),
        Seq::Delay { lhs, min, max, rhs } => {
            if let Some(l) = lhs {
                write_seq(out, l);
                out.push(' ');
            }
            write_delay(out, *min, *max);
            out.push(' ');
            write_seq_item(out, rhs);
        }
        Seq::Repeat { inner, min, max } => {
            write_seq_item(out, inner);
            if min == max {
                let _ = write!(out, "[*{min}]");
            } else {
                let _ = write!(out, "[*{min}:{max}]");
            }
        }
    }
}

/// A sequence in operand position: delays and compound booleans get
/// parentheses.
fn write_seq_item(out: &mut String, s: &Seq) {
    let wrap = match s {
        Seq::Bool { expr } => !expr.is_primary(),
        Seq::Delay { .. } => true,
        Seq::Repeat { .. } => false,
    };
    if wrap {
        out.push('(');
        write_seq(out, s);
        out.push(')');
    } else {
        write_seq(out, s);
    }
}

pub fn property_text(p: &Prop) -> String {
    let mut s = String::new();
    write_prop(&mut s, p, 0);
    s
}

impl fmt::Display for SvaAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(l) = &self.label {
            write!(f, "{l}: ")?;
        }
        f.write_str("assert property (")?;
        if let Some(c) = &self.clock {
            let edge = match c.edge {
                Edge::Posedge => "posedge",
                Edge::Negedge => "negedge",
            };
            write!(f, "@({edge} {}) ", expr_text(&c.expr))?;
        }
        if let Some(d) = &self.disable {
            write!(f, "disable iff ({}) ", expr_text(d))?;
        }
        f.write_str(&property_text(&self.property))?;
        f.write_str(")")?;
        if let Some(a) = &self.action {
            write!(f, " else {}", expr_text(a))?;
        }
        f.write_str(";")
    }
}

/// Canonical text used to de-duplicate assertions. Labels and action
/// blocks do not affect identity.
pub fn normalized_text(text: &str) -> String {
    match parse_sva(text) {
        Ok(mut ast) => {
            ast.label = None;
            ast.action = None;
            ast.to_string()
        }
        Err(_) => text.split_whitespace().collect::<Vec<_>>().join(" "),
    }
}
