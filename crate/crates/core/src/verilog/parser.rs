// SPDX-License-Identifier: Apache-2.0

//! Recursive-descent parser for the supported Verilog subset.
//!
//! Anything inside a module body the parser does not model is kept as an
//! [`OpaqueSpan`] holding the exact source text, so nothing is dropped.

use std::collections::BTreeSet;
use std::fmt;

use super::ast::*;
use super::lexer::{is_keyword, lex, Token, TokenKind};
use super::preprocess::{PreprocessOptions, Preprocessed, Preprocessor};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: u32,
    pub col: u32,
    /// Byte offset in the parsed text.
    pub offset: usize,
    pub message: String,
    pub expected: Vec<String>,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.message)?;
        if !self.expected.is_empty() {
            write!(f, " (expected {})", self.expected.join(", "))?;
        }
        Ok(())
    }
}

impl std::error::Error for ParseError {}

pub type PResult<T> = Result<T, ParseError>;

/// Parse a set of in-memory files into one compilation unit.
///
/// Files are preprocessed in order with shared macro state, then parsed.
/// Modules whose header cannot be parsed are dropped and reported; the
/// rest of the input is still processed.
pub fn parse_verilog(files: &[(String, String)], opts: &PreprocessOptions) -> SourceUnit {
    let mut unit = SourceUnit::default();
    let mut pre = Preprocessor::new(opts, files);
    let mut seen = BTreeSet::new();
    for (path, text) in files {
        let pp = pre.run(path, text);
        let mut diags = Vec::new();
        let modules = match lex(&pp.text) {
            Ok(toks) => {
                let mut p = Parser::new(&toks, &pp.text).with_origin(&pp, path);
                let mods = p.source_items();
                diags.append(&mut p.diagnostics);
                mods
            }
            Err(e) => {
                let o = pp.origin(e.line);
                diags.push(Diagnostic {
                    severity: Severity::Error,
                    file: o.file,
                    line: o.line,
                    col: e.col,
                    message: e.message,
                });
                Vec::new()
            }
        };
        for m in modules {
            if seen.insert(m.name.name.clone()) {
                unit.modules.push(m);
            } else {
                diags.push(Diagnostic {
                    severity: Severity::Error,
                    file: m.file.clone(),
                    line: m.lines.start,
                    col: 1,
                    message: format!("duplicate module `{}` ignored", m.name),
                });
            }
        }
        unit.diagnostics.append(&mut pre.diagnostics);
        unit.diagnostics.append(&mut diags);
        unit.files.push(SourceFile {
            path: path.clone(),
            text: text.clone(),
            preprocessed: pp.text.clone(),
            timescale: pp.timescale.clone(),
        });
    }
    normalize_positional(&mut unit);
    unit
}

/// Resolve positional connections and parameter overrides to named form
/// using the child module's declaration order.
fn normalize_positional(unit: &mut SourceUnit) {
    let decls: Vec<(String, Vec<String>, Vec<String>)> = unit
        .modules
        .iter()
        .map(|m| {
            (
                m.name.name.clone(),
                m.ports.iter().map(|p| p.name.name.clone()).collect(),
                m.overridable_params().iter().map(|p| p.name.clone()).collect(),
            )
        })
        .collect();
    let mut diags = Vec::new();
    for m in &mut unit.modules {
        let file = m.file.clone();
        for inst in m.instances_mut() {
            let positional = inst.connections.iter().any(|c| matches!(c.port, PortRef::Positional(_)))
                || inst.param_overrides.iter().any(|p| p.name.is_none());
            if !positional {
                continue;
            }
            let Some((_, ports, params)) = decls.iter().find(|d| d.0 == inst.child_module.name) else {
                diags.push(Diagnostic {
                    severity: Severity::Warning,
                    file: file.clone(),
                    line: inst.loc.line,
                    col: inst.loc.col,
                    message: format!(
                        "positional connections on `{}` kept: module `{}` is not defined",
                        inst.instance_name, inst.child_module
                    ),
                });
                continue;
            };
            for c in &mut inst.connections {
                if let PortRef::Positional(i) = c.port {
                    match ports.get(i) {
                        Some(name) => c.port = PortRef::Named(Ident::new(name)),
                        None => diags.push(Diagnostic {
                            severity: Severity::Error,
                            file: file.clone(),
                            line: inst.loc.line,
                            col: inst.loc.col,
                            message: format!(
                                "instance `{}` has more connections than `{}` has ports",
                                inst.instance_name, inst.child_module
                            ),
                        }),
                    }
                }
            }
            for (i, p) in inst.param_overrides.iter_mut().enumerate() {
                if p.name.is_none() {
                    match params.get(i) {
                        Some(name) => p.name = Some(Ident::new(name)),
                        None => diags.push(Diagnostic {
                            severity: Severity::Error,
                            file: file.clone(),
                            line: inst.loc.line,
                            col: inst.loc.col,
                            message: format!(
                                "instance `{}` overrides more parameters than `{}` declares",
                                inst.instance_name, inst.child_module
                            ),
                        }),
                    }
                }
            }
        }
    }
    unit.diagnostics.extend(diags);
}

/// Parse a standalone expression.
pub fn parse_expression(text: &str) -> PResult<Expr> {
    let toks = lex(text).map_err(|e| ParseError {
        line: e.line,
        col: e.col,
        offset: 0,
        message: e.message,
        expected: vec![],
    })?;
    let mut p = Parser::new(&toks, text);
    let e = p.expr()?;
    p.expect_eof()?;
    Ok(e)
}

pub struct Parser<'a> {
    toks: &'a [Token],
    pub pos: usize,
    src: &'a str,
    origin: Option<(&'a Preprocessed, &'a str)>,
    pub diagnostics: Vec<Diagnostic>,
}

impl<'a> Parser<'a> {
    pub fn new(toks: &'a [Token], src: &'a str) -> Self {
        Parser { toks, pos: 0, src, origin: None, diagnostics: Vec::new() }
    }

    fn with_origin(mut self, pp: &'a Preprocessed, file: &'a str) -> Self {
        self.origin = Some((pp, file));
        self
    }

    // -- token helpers ----------------------------------------------------

    pub fn peek(&self) -> &'a Token {
        &self.toks[self.pos.min(self.toks.len() - 1)]
    }

    pub fn peek_at(&self, n: usize) -> &'a Token {
        &self.toks[(self.pos + n).min(self.toks.len() - 1)]
    }

    pub fn bump(&mut self) -> &'a Token {
        let t = self.peek();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    pub fn at_eof(&self) -> bool {
        matches!(self.peek().kind, TokenKind::Eof)
    }

    pub fn eat_op(&mut self, op: &str) -> bool {
        if self.peek().is_op(op) {
            self.bump();
            true
        } else {
            false
        }
    }

    pub fn eat_kw(&mut self, kw: &str) -> bool {
        if self.peek().is_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    pub fn expect_op(&mut self, op: &str) -> PResult<()> {
        if self.eat_op(op) {
            Ok(())
        } else {
            Err(self.error_expected(&[&format!("`{op}`")]))
        }
    }

    pub fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.error_expected(&[&format!("`{kw}`")]))
        }
    }

    pub fn expect_eof(&mut self) -> PResult<()> {
        if self.at_eof() {
            Ok(())
        } else {
            Err(self.error_expected(&["end of input"]))
        }
    }

    pub fn loc(&self) -> Loc {
        self.loc_of(self.peek())
    }

    fn loc_of(&self, t: &Token) -> Loc {
        match self.origin {
            Some((pp, _)) => Loc { line: pp.origin(t.line).line, col: t.col },
            None => Loc { line: t.line, col: t.col },
        }
    }

    pub fn error(&self, message: impl Into<String>) -> ParseError {
        let t = self.peek();
        let loc = self.loc_of(t);
        ParseError { line: loc.line, col: loc.col, offset: t.start, message: message.into(), expected: vec![] }
    }

    pub fn error_expected(&self, expected: &[&str]) -> ParseError {
        let mut e = self.error(format!("unexpected {}", describe(&self.peek().kind)));
        e.expected = expected.iter().map(|s| s.to_string()).collect();
        e
    }

    fn warn(&mut self, t: &Token, message: String) {
        self.diag(Severity::Warning, t, message);
    }

    fn diag(&mut self, severity: Severity, t: &Token, message: String) {
        let (file, line) = match self.origin {
            Some((pp, _)) => {
                let o = pp.origin(t.line);
                (o.file, o.line)
            }
            None => (String::new(), t.line),
        };
        self.diagnostics.push(Diagnostic { severity, file, line, col: t.col, message });
    }

    pub fn ident(&mut self) -> PResult<Ident> {
        match &self.peek().kind {
            TokenKind::Ident { name, escaped } if *escaped || !is_keyword(name) => {
                let id = Ident { name: name.clone(), escaped: *escaped };
                self.bump();
                Ok(id)
            }
            _ => Err(self.error_expected(&["identifier"])),
        }
    }

    fn is_plain_ident(&self) -> bool {
        matches!(&self.peek().kind, TokenKind::Ident { name, escaped } if *escaped || !is_keyword(name))
    }

    // -- top level --------------------------------------------------------

    fn source_items(&mut self) -> Vec<ModuleDecl> {
        let mut out = Vec::new();
        while !self.at_eof() {
            if self.peek().is_kw("module") || self.peek().is_kw("macromodule") {
                let start = self.pos;
                match self.module() {
                    Ok(m) => out.push(m),
                    Err(e) => {
                        let t = &self.toks[start];
                        let name = match &self.toks[(start + 1).min(self.toks.len() - 1)].kind {
                            TokenKind::Ident { name, .. } => name.clone(),
                            _ => "<unnamed>".into(),
                        };
                        self.diag(
                            Severity::Error,
                            t,
                            format!("module `{name}` dropped: header does not parse: {e}"),
                        );
                        self.pos = start + 1;
                        while !self.at_eof() && !self.peek().is_kw("endmodule") {
                            self.bump();
                        }
                        self.eat_kw("endmodule");
                    }
                }
            } else {
                let t = self.peek();
                self.warn(t, format!("skipping {} outside of a module", describe(&t.kind)));
                self.bump();
                while !self.at_eof() && !self.peek().is_kw("module") && !self.peek().is_kw("macromodule") {
                    self.bump();
                }
            }
        }
        out
    }

    fn module(&mut self) -> PResult<ModuleDecl> {
        let module_tok = self.bump();
        let name = self.ident()?;
        let mut header_params = Vec::new();
        if self.eat_op("#") {
            self.expect_op("(")?;
            let mut inherited_local = false;
            if !self.peek().is_op(")") {
                loop {
                    let mut local = inherited_local;
                    if self.eat_kw("parameter") {
                        local = false;
                    } else if self.eat_kw("localparam") {
                        local = true;
                    }
                    inherited_local = local;
                    let signed = self.eat_kw("signed");
                    let range = self.opt_range()?;
                    let pname = self.ident()?;
                    self.expect_op("=")?;
                    let value = self.expr()?;
                    header_params.push(ParamDecl { local, signed, range, assigns: vec![(pname, value)] });
                    if !self.eat_op(",") {
                        break;
                    }
                }
            }
            self.expect_op(")")?;
        }
        let mut ports = Vec::new();
        let mut ansi = true;
        if self.eat_op("(") {
            if !self.peek().is_op(")") {
                if is_direction(self.peek()) {
                    self.ansi_ports(&mut ports)?;
                } else {
                    ansi = false;
                    loop {
                        let n = self.ident()?;
                        ports.push(PortDecl {
                            name: n,
                            direction: Direction::Inout,
                            net_kind: None,
                            signed: false,
                            range: None,
                            width: None,
                        });
                        if !self.eat_op(",") {
                            break;
                        }
                    }
                }
            }
            self.expect_op(")")?;
        }
        self.expect_op(";")?;
        if ports.is_empty() {
            ansi = true;
        }
        let mut module = ModuleDecl {
            name,
            file: self.origin.map(|(_, f)| f.to_string()).unwrap_or_default(),
            lines: LineSpan { start: self.loc_of(module_tok).line, end: 0 },
            ansi_ports: ansi,
            header_params,
            ports,
            items: Vec::new(),
        };
        let mut declared: BTreeSet<String> = BTreeSet::new();
        while !self.peek().is_kw("endmodule") {
            if self.at_eof() {
                return Err(self.error("missing `endmodule`"));
            }
            let start = self.pos;
            if !ansi && is_direction(self.peek()) {
                match self.body_port_decl(&mut module, &mut declared) {
                    Ok(()) => continue,
                    Err(e) => {
                        self.pos = start;
                        self.opaque_item(&mut module, start, e.message);
                        continue;
                    }
                }
            }
            match self.body_item() {
                Ok(items) => {
                    let span = Span { start: self.toks[start].start, end: self.toks[self.pos - 1].end };
                    module.items.extend(items.into_iter().map(|kind| BodyItem { kind, span }));
                }
                Err(e) => {
                    self.pos = start;
                    self.opaque_item(&mut module, start, e.message);
                }
            }
        }
        let end_tok = self.bump();
        module.lines.end = self.loc_of(end_tok).line;
        if !ansi {
            for p in &module.ports {
                if !declared.contains(&p.name.name) {
                    self.diag(
                        Severity::Error,
                        module_tok,
                        format!("port `{}` of `{}` has no direction declaration", p.name, module.name),
                    );
                }
            }
        }
        let mut names = BTreeSet::new();
        for p in &module.ports {
            if !names.insert(p.name.name.clone()) {
                self.diag(
                    Severity::Error,
                    module_tok,
                    format!("duplicate port `{}` in `{}`", p.name, module.name),
                );
            }
        }
        Ok(module)
    }

    fn opaque_item(&mut self, module: &mut ModuleDecl, start: usize, reason: String) {
        self.skip_item();
        if self.pos == start {
            self.bump();
        }
        let first = &self.toks[start];
        let last = &self.toks[self.pos - 1];
        let text = self.src[first.start..last.end].to_string();
        if text != ";" {
            self.warn(first, format!("unsupported construct kept verbatim: {reason}"));
        }
        module.items.push(BodyItem {
            kind: ItemKind::Opaque(OpaqueSpan { text, reason }),
            span: Span { start: first.start, end: last.end },
        });
    }

    fn ansi_ports(&mut self, ports: &mut Vec<PortDecl>) -> PResult<()> {
        let mut dir = Direction::Input;
        let mut kind = None;
        let mut signed = false;
        let mut range = None;
        loop {
            if is_direction(self.peek()) {
                dir = direction_of(self.bump());
                kind = None;
                if let TokenKind::Ident { name, escaped: false } = &self.peek().kind {
                    if let Some(k) = NetKind::from_keyword(name) {
                        kind = Some(k);
                        self.bump();
                    }
                }
                signed = self.eat_kw("signed");
                range = self.opt_range()?;
            }
            let name = self.ident()?;
            ports.push(PortDecl { name, direction: dir, net_kind: kind, signed, range: range.clone(), width: None });
            if !self.eat_op(",") {
                return Ok(());
            }
        }
    }

    fn body_port_decl(&mut self, module: &mut ModuleDecl, declared: &mut BTreeSet<String>) -> PResult<()> {
        let dir = direction_of(self.bump());
        let mut kind = None;
        if let TokenKind::Ident { name, escaped: false } = &self.peek().kind {
            if let Some(k) = NetKind::from_keyword(name) {
                kind = Some(k);
                self.bump();
            }
        }
        let signed = self.eat_kw("signed");
        let range = self.opt_range()?;
        let mut names = Vec::new();
        loop {
            names.push(self.ident()?);
            if !self.eat_op(",") {
                break;
            }
        }
        self.expect_op(";")?;
        for n in &names {
            if !module.ports.iter().any(|p| p.name == *n) {
                return Err(self.error(format!("`{n}` is not in the port list")));
            }
        }
        for n in names {
            let p = module.ports.iter_mut().find(|p| p.name == n).unwrap();
            p.direction = dir;
            p.net_kind = kind;
            p.signed = signed;
            p.range = range.clone();
            declared.insert(n.name);
        }
        Ok(())
    }

    fn opt_range(&mut self) -> PResult<Option<Range>> {
        if !self.peek().is_op("[") {
            return Ok(None);
        }
        self.bump();
        let msb = self.expr()?;
        self.expect_op(":")?;
        let lsb = self.expr()?;
        self.expect_op("]")?;
        Ok(Some(Range { msb, lsb }))
    }

    fn body_item(&mut self) -> PResult<Vec<ItemKind>> {
        let t = self.peek();
        let TokenKind::Ident { name, escaped } = &t.kind else {
            return Err(self.error_expected(&["module item"]));
        };
        if *escaped || !is_keyword(name) {
            return Ok(self.instances()?.into_iter().map(ItemKind::Instance).collect());
        }
        match name.as_str() {
            "parameter" | "localparam" => Ok(vec![ItemKind::Param(self.param_decl()?)]),
            "wire" | "reg" | "logic" | "integer" | "tri" => Ok(vec![ItemKind::Net(self.net_decl()?)]),
            "assign" => {
                self.bump();
                let mut out = Vec::new();
                loop {
                    let loc = self.loc();
                    let lhs = self.lvalue()?;
                    self.expect_op("=")?;
                    let rhs = self.expr()?;
                    out.push(ItemKind::Assign(ContinuousAssign { lhs, rhs, loc }));
                    if !self.eat_op(",") {
                        break;
                    }
                }
                self.expect_op(";")?;
                Ok(out)
            }
            "always" | "always_ff" | "always_comb" | "always_latch" => {
                Ok(vec![ItemKind::Always(self.always()?)])
            }
            other => Err(self.error(format!("unsupported module item `{other}`"))),
        }
    }

    fn param_decl(&mut self) -> PResult<ParamDecl> {
        let local = self.bump().is_kw("localparam");
        let signed = self.eat_kw("signed");
        let range = self.opt_range()?;
        let mut assigns = Vec::new();
        loop {
            let n = self.ident()?;
            self.expect_op("=")?;
            assigns.push((n, self.expr()?));
            if !self.eat_op(",") {
                break;
            }
        }
        self.expect_op(";")?;
        Ok(ParamDecl { local, signed, range, assigns })
    }

    fn net_decl(&mut self) -> PResult<NetDecl> {
        let kind = match &self.bump().kind {
            TokenKind::Ident { name, .. } => NetKind::from_keyword(name).unwrap(),
            _ => unreachable!(),
        };
        let signed = self.eat_kw("signed");
        let range = if kind == NetKind::Integer { None } else { self.opt_range()? };
        let mut names = Vec::new();
        loop {
            let name = self.ident()?;
            let mut dims = Vec::new();
            while let Some(r) = self.opt_range()? {
                dims.push(r);
            }
            let init = if self.eat_op("=") { Some(self.expr()?) } else { None };
            names.push(NetName { name, dims, init });
            if !self.eat_op(",") {
                break;
            }
        }
        self.expect_op(";")?;
        Ok(NetDecl { kind, signed, range, names, width: None })
    }

    fn always(&mut self) -> PResult<AlwaysBlock> {
        let loc = self.loc();
        let kind = match &self.bump().kind {
            TokenKind::Ident { name, .. } => match name.as_str() {
                "always_ff" => AlwaysKind::AlwaysFf,
                "always_comb" => AlwaysKind::AlwaysComb,
                "always_latch" => AlwaysKind::AlwaysLatch,
                _ => AlwaysKind::Always,
            },
            _ => unreachable!(),
        };
        let sensitivity = if self.eat_op("@") {
            Some(self.sensitivity()?)
        } else if matches!(kind, AlwaysKind::AlwaysComb | AlwaysKind::AlwaysLatch) {
            None
        } else {
            return Err(self.error("`always` without an event control"));
        };
        let body = self.stmt()?;
        Ok(AlwaysBlock { kind, sensitivity, body, loc })
    }

    fn sensitivity(&mut self) -> PResult<Sensitivity> {
        if self.eat_op("*") {
            return Ok(Sensitivity::Star);
        }
        self.expect_op("(")?;
        if self.peek().is_op("*") && self.peek_at(1).is_op(")") {
            self.bump();
            self.bump();
            return Ok(Sensitivity::Star);
        }
        let mut items = Vec::new();
        loop {
            let edge = if self.eat_kw("posedge") {
                Some(Edge::Posedge)
            } else if self.eat_kw("negedge") {
                Some(Edge::Negedge)
            } else {
                None
            };
            let expr = self.expr()?;
            items.push(SensItem { edge, expr });
            if !(self.eat_kw("or") || self.eat_op(",")) {
                break;
            }
        }
        self.expect_op(")")?;
        Ok(Sensitivity::List(items))
    }

    fn instances(&mut self) -> PResult<Vec<InstanceDecl>> {
        let child = self.ident()?;
        let mut overrides = Vec::new();
        if self.eat_op("#") {
            self.expect_op("(")?;
            if !self.peek().is_op(")") {
                loop {
                    if self.eat_op(".") {
                        let n = self.ident()?;
                        self.expect_op("(")?;
                        let value = self.expr()?;
                        self.expect_op(")")?;
                        overrides.push(ParamOverride { name: Some(n), value });
                    } else {
                        overrides.push(ParamOverride { name: None, value: self.expr()? });
                    }
                    if !self.eat_op(",") {
                        break;
                    }
                }
            }
            self.expect_op(")")?;
        }
        let mut out = Vec::new();
        loop {
            let loc = self.loc();
            let inst_name = self.ident()?;
            if self.peek().is_op("[") {
                return Err(self.error("instance arrays are not supported"));
            }
            self.expect_op("(")?;
            let connections = self.connections()?;
            self.expect_op(")")?;
            out.push(InstanceDecl {
                child_module: child.clone(),
                instance_name: inst_name,
                param_overrides: overrides.clone(),
                connections,
                loc,
            });
            if !self.eat_op(",") {
                break;
            }
        }
        self.expect_op(";")?;
        Ok(out)
    }

    fn connections(&mut self) -> PResult<Vec<Connection>> {
        let mut out = Vec::new();
        if self.peek().is_op(")") {
            return Ok(out);
        }
        if self.peek().is_op(".") {
            loop {
                self.expect_op(".")?;
                let n = self.ident()?;
                self.expect_op("(")?;
                let expr = if self.peek().is_op(")") { None } else { Some(self.expr()?) };
                self.expect_op(")")?;
                out.push(Connection { port: PortRef::Named(n), expr });
                if !self.eat_op(",") {
                    break;
                }
            }
        } else {
            let mut i = 0;
            loop {
                let expr =
                    if self.peek().is_op(",") || self.peek().is_op(")") { None } else { Some(self.expr()?) };
                out.push(Connection { port: PortRef::Positional(i), expr });
                i += 1;
                if !self.eat_op(",") {
                    break;
                }
            }
        }
        Ok(out)
    }

    // -- statements -------------------------------------------------------

    fn stmt(&mut self) -> PResult<Stmt> {
        let t = self.peek();
        if self.eat_op(";") {
            return Ok(Stmt::Null);
        }
        if let TokenKind::SysIdent(name) = &t.kind {
            self.bump();
            let mut args = Vec::new();
            if self.eat_op("(") {
                if !self.peek().is_op(")") {
                    loop {
                        args.push(self.expr()?);
                        if !self.eat_op(",") {
                            break;
                        }
                    }
                }
                self.expect_op(")")?;
            }
            self.expect_op(";")?;
            return Ok(Stmt::SystemCall { name: name.clone(), args });
        }
        if self.eat_kw("begin") {
            let label = if self.eat_op(":") { Some(self.ident()?) } else { None };
            let mut stmts = Vec::new();
            while !self.peek().is_kw("end") {
                if self.at_eof() {
                    return Err(self.error_expected(&["`end`"]));
                }
                stmts.push(self.stmt()?);
            }
            self.bump();
            if label.is_some() && self.peek().is_op(":") {
                self.bump();
                self.ident()?;
            }
            return Ok(Stmt::Block { label, stmts });
        }
        if t.is_kw("if") {
            let loc = self.loc();
            self.bump();
            self.expect_op("(")?;
            let cond = self.expr()?;
            self.expect_op(")")?;
            let then_branch = Box::new(self.stmt()?);
            let else_branch = if self.eat_kw("else") { Some(Box::new(self.stmt()?)) } else { None };
            return Ok(Stmt::If { cond, then_branch, else_branch, loc });
        }
        if t.is_kw("case") || t.is_kw("casez") || t.is_kw("casex") {
            let kind = if t.is_kw("casez") {
                CaseKind::Casez
            } else if t.is_kw("casex") {
                CaseKind::Casex
            } else {
                CaseKind::Case
            };
            self.bump();
            self.expect_op("(")?;
            let expr = self.expr()?;
            self.expect_op(")")?;
            let mut items = Vec::new();
            while !self.eat_kw("endcase") {
                if self.at_eof() {
                    return Err(self.error_expected(&["`endcase`"]));
                }
                let mut labels = Vec::new();
                if self.eat_kw("default") {
                    self.eat_op(":");
                } else {
                    loop {
                        labels.push(self.expr()?);
                        if !self.eat_op(",") {
                            break;
                        }
                    }
                    self.expect_op(":")?;
                }
                let body = self.stmt()?;
                items.push(CaseItem { labels, body });
            }
            return Ok(Stmt::Case { kind, expr, items });
        }
        if t.is_kw("for") {
            self.bump();
            self.expect_op("(")?;
            let a = self.lvalue()?;
            self.expect_op("=")?;
            let b = self.expr()?;
            self.expect_op(";")?;
            let cond = self.expr()?;
            self.expect_op(";")?;
            let c = self.lvalue()?;
            self.expect_op("=")?;
            let d = self.expr()?;
            self.expect_op(")")?;
            let body = Box::new(self.stmt()?);
            return Ok(Stmt::For { init: (a, b), cond, step: (c, d), body });
        }
        if let TokenKind::Ident { name, escaped: false } = &t.kind {
            if is_keyword(name) {
                return Err(self.error(format!("unsupported statement `{name}`")));
            }
        }
        let loc = self.loc();
        let lhs = self.lvalue()?;
        let blocking = if self.eat_op("=") {
            true
        } else if self.eat_op("<=") {
            false
        } else {
            return Err(self.error_expected(&["`=`", "`<=`"]));
        };
        let delay = if self.eat_op("#") { Some(self.delay_value()?) } else { None };
        let rhs = self.expr()?;
        self.expect_op(";")?;
        Ok(Stmt::Assign { lhs, rhs, blocking, delay, loc })
    }

    fn delay_value(&mut self) -> PResult<Expr> {
        if self.eat_op("(") {
            let e = self.expr()?;
            self.expect_op(")")?;
            return Ok(Expr::Paren { inner: Box::new(e) });
        }
        self.primary()
    }

    fn lvalue(&mut self) -> PResult<Expr> {
        if self.peek().is_op("{") {
            return self.primary();
        }
        let loc = self.loc();
        let mut parts = vec![self.ident()?];
        while self.peek().is_op(".") {
            self.bump();
            parts.push(self.ident()?);
        }
        self.postfix(Expr::Name { parts, loc })
    }

    /// Skip one module item without interpreting it.
    fn skip_item(&mut self) {
        let t = self.peek();
        let block_end = match &t.kind {
            TokenKind::Ident { name, escaped: false } => match name.as_str() {
                "generate" => Some("endgenerate"),
                "function" => Some("endfunction"),
                "task" => Some("endtask"),
                "specify" => Some("endspecify"),
                _ => None,
            },
            _ => None,
        };
        if let Some(end) = block_end {
            while !self.at_eof() && !self.peek().is_kw("endmodule") {
                if self.bump().is_kw(end) {
                    return;
                }
            }
            return;
        }
        if ["always", "always_ff", "always_comb", "always_latch", "initial", "final"]
            .iter()
            .any(|k| t.is_kw(k))
        {
            self.bump();
            self.skip_statement();
            return;
        }
        self.skip_statement();
    }

    fn skip_balanced(&mut self) {
        // assumes the current token opens a group
        let mut depth = 0i32;
        loop {
            let t = self.peek();
            if self.at_eof() || t.is_kw("endmodule") {
                return;
            }
            if t.is_op("(") || t.is_op("[") || t.is_op("{") {
                depth += 1;
            } else if t.is_op(")") || t.is_op("]") || t.is_op("}") {
                depth -= 1;
            }
            self.bump();
            if depth <= 0 {
                return;
            }
        }
    }

    fn skip_statement(&mut self) {
        loop {
            let t = self.peek();
            if self.at_eof() || t.is_kw("endmodule") {
                return;
            }
            if t.is_op("@") || t.is_op("#") {
                self.bump();
                if self.peek().is_op("(") {
                    self.skip_balanced();
                } else {
                    self.bump();
                }
                continue;
            }
            break;
        }
        let t = self.peek();
        if t.is_kw("begin") || t.is_kw("fork") {
            let mut depth = 0;
            loop {
                let t = self.bump();
                if t.is_kw("begin") || t.is_kw("fork") {
                    depth += 1;
                } else if t.is_kw("end") || t.is_kw("join") || t.is_kw("join_any") || t.is_kw("join_none") {
                    depth -= 1;
                    if depth == 0 {
                        if self.peek().is_op(":") {
                            self.bump();
                            self.bump();
                        }
                        return;
                    }
                }
                if self.at_eof() || self.peek().is_kw("endmodule") {
                    return;
                }
            }
        }
        if t.is_kw("if") {
            self.bump();
            if self.peek().is_op("(") {
                self.skip_balanced();
            }
            self.skip_statement();
            if self.eat_kw("else") {
                self.skip_statement();
            }
            return;
        }
        if t.is_kw("case") || t.is_kw("casez") || t.is_kw("casex") {
            let mut depth = 0;
            loop {
                let t = self.bump();
                if t.is_kw("case") || t.is_kw("casez") || t.is_kw("casex") {
                    depth += 1;
                } else if t.is_kw("endcase") {
                    depth -= 1;
                    if depth == 0 {
                        return;
                    }
                }
                if self.at_eof() || self.peek().is_kw("endmodule") {
                    return;
                }
            }
        }
        if t.is_kw("for") || t.is_kw("while") || t.is_kw("repeat") {
            self.bump();
            if self.peek().is_op("(") {
                self.skip_balanced();
            }
            self.skip_statement();
            return;
        }
        if t.is_kw("forever") {
            self.bump();
            self.skip_statement();
            return;
        }
        let mut depth = 0i32;
        loop {
            let t = self.peek();
            if self.at_eof() || t.is_kw("endmodule") {
                return;
            }
            if t.is_op("(") || t.is_op("[") || t.is_op("{") {
                depth += 1;
            } else if t.is_op(")") || t.is_op("]") || t.is_op("}") {
                depth -= 1;
            }
            self.bump();
            if depth <= 0 && t.is_op(";") {
                return;
            }
        }
    }

    // -- expressions ------------------------------------------------------

    pub fn expr(&mut self) -> PResult<Expr> {
        let cond = self.binary(2)?;
        if self.peek().is_op("?") {
            let loc = self.loc();
            self.bump();
            let then_expr = self.expr()?;
            self.expect_op(":")?;
            let else_expr = self.expr()?;
            return Ok(Expr::Ternary {
                cond: Box::new(cond),
                then_expr: Box::new(then_expr),
                else_expr: Box::new(else_expr),
                loc,
            });
        }
        Ok(cond)
    }

    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let t = self.peek();
            let op = match &t.kind {
                TokenKind::Op(o) => match BinaryOp::from_symbol(o) {
                    Some(op) if op.precedence() >= min_prec => op,
                    _ => break,
                },
                _ => break,
            };
            let loc = self.loc();
            self.bump();
            let rhs = self.binary(op.precedence() + 1)?;
            lhs = Expr::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs), loc };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        if let TokenKind::Op(o) = &self.peek().kind {
            if let Some(op) = UnaryOp::from_symbol(o) {
                let loc = self.loc();
                self.bump();
                let operand = self.unary()?;
                return Ok(Expr::Unary { op, operand: Box::new(operand), loc });
            }
        }
        let p = self.primary()?;
        self.postfix(p)
    }

    fn postfix(&mut self, mut e: Expr) -> PResult<Expr> {
        while self.peek().is_op("[") {
            if self.peek_at(1).is_op("*") {
                // SVA repetition; not ours
                break;
            }
            self.bump();
            let left = self.expr()?;
            let kind = if self.eat_op(":") {
                Some(SliceKind::Range)
            } else if self.eat_op("+:") {
                Some(SliceKind::Up)
            } else if self.eat_op("-:") {
                Some(SliceKind::Down)
            } else {
                None
            };
            e = match kind {
                Some(kind) => {
                    let right = self.expr()?;
                    Expr::Slice { base: Box::new(e), kind, left: Box::new(left), right: Box::new(right) }
                }
                None => Expr::Index { base: Box::new(e), index: Box::new(left) },
            };
            self.expect_op("]")?;
        }
        Ok(e)
    }

    pub fn primary(&mut self) -> PResult<Expr> {
        let t = self.peek();
        let loc = self.loc();
        match &t.kind {
            TokenKind::Number(text) => {
                self.bump();
                Ok(Expr::Number { text: text.clone(), loc })
            }
            TokenKind::Str(text) => {
                self.bump();
                Ok(Expr::Str { text: text.clone() })
            }
            TokenKind::SysIdent(name) => {
                self.bump();
                let args = if self.peek().is_op("(") { self.call_args()? } else { vec![] };
                Ok(Expr::Call { name: name.clone(), args })
            }
            TokenKind::Ident { .. } if self.is_plain_ident() => {
                let first = self.ident()?;
                if self.peek().is_op("(") {
                    let args = self.call_args()?;
                    return Ok(Expr::Call { name: first.name, args });
                }
                let mut parts = vec![first];
                while self.peek().is_op(".") {
                    self.bump();
                    parts.push(self.ident()?);
                }
                Ok(Expr::Name { parts, loc })
            }
            TokenKind::Op("(") => {
                self.bump();
                let inner = self.expr()?;
                self.expect_op(")")?;
                Ok(Expr::Paren { inner: Box::new(inner) })
            }
            TokenKind::Op("{") => {
                self.bump();
                let first = self.expr()?;
                if self.peek().is_op("{") {
                    self.bump();
                    let mut items = Vec::new();
                    loop {
                        items.push(self.expr()?);
                        if !self.eat_op(",") {
                            break;
                        }
                    }
                    self.expect_op("}")?;
                    self.expect_op("}")?;
                    return Ok(Expr::Replicate { count: Box::new(first), items });
                }
                let mut items = vec![first];
                while self.eat_op(",") {
                    items.push(self.expr()?);
                }
                self.expect_op("}")?;
                Ok(Expr::Concat { items })
            }
            _ => Err(self.error_expected(&["expression"])),
        }
    }

    fn call_args(&mut self) -> PResult<Vec<Expr>> {
        self.expect_op("(")?;
        let mut args = Vec::new();
        if !self.peek().is_op(")") {
            loop {
                args.push(self.expr()?);
                if !self.eat_op(",") {
                    break;
                }
            }
        }
        self.expect_op(")")?;
        Ok(args)
    }
}

fn is_direction(t: &Token) -> bool {
    t.is_kw("input") || t.is_kw("output") || t.is_kw("inout")
}

fn direction_of(t: &Token) -> Direction {
    if t.is_kw("input") {
        Direction::Input
    } else if t.is_kw("output") {
        Direction::Output
    } else {
        Direction::Inout
    }
}

pub fn describe(k: &TokenKind) -> String {
    match k {
        TokenKind::Eof => "end of input".into(),
        TokenKind::Ident { .. } => format!("identifier `{k}`"),
        TokenKind::Number(_) => format!("number `{k}`"),
        _ => format!("`{k}`"),
    }
}
