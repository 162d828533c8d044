// SPDX-License-Identifier: Apache-2.0

//! `define / `include / `ifdef handling. Macros are expanded before lexing;
//! every output line remembers the file and line it came from.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use super::ast::{Diagnostic, Severity};

#[derive(Debug, Clone, Default)]
pub struct PreprocessOptions {
    pub include_dirs: Vec<PathBuf>,
    pub defines: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineOrigin {
    pub file: String,
    pub line: u32,
}

#[derive(Debug, Clone, Default)]
pub struct Preprocessed {
    pub text: String,
    /// `lines[n]` is the origin of output line `n + 1`.
    pub lines: Vec<LineOrigin>,
    pub timescale: Option<String>,
}

impl Preprocessed {
    pub fn origin(&self, line: u32) -> LineOrigin {
        self.lines
            .get(line.saturating_sub(1) as usize)
            .or(self.lines.last())
            .cloned()
            .unwrap_or(LineOrigin { file: String::new(), line })
    }
}

#[derive(Debug, Clone)]
struct Macro {
    params: Option<Vec<String>>,
    body: String,
}

/// Macro state is shared by all files of one compilation unit, in order.
pub struct Preprocessor<'a> {
    opts: &'a PreprocessOptions,
    /// In-memory files that `include may resolve to.
    memory: &'a [(String, String)],
    macros: BTreeMap<String, Macro>,
    pub diagnostics: Vec<Diagnostic>,
}

struct Cond {
    active: bool,
    taken: bool,
    parent_active: bool,
}

const MAX_DEPTH: usize = 32;

impl<'a> Preprocessor<'a> {
    pub fn new(opts: &'a PreprocessOptions, memory: &'a [(String, String)]) -> Self {
        let macros = opts
            .defines
            .iter()
            .map(|(k, v)| (k.clone(), Macro { params: None, body: v.clone() }))
            .collect();
        Preprocessor { opts, memory, macros, diagnostics: Vec::new() }
    }

    pub fn run(&mut self, path: &str, text: &str) -> Preprocessed {
        let mut out = Preprocessed::default();
        let mut conds = Vec::new();
        self.scan(path, text, &mut out, &mut conds, 0);
        if !conds.is_empty() {
            self.diag(Severity::Error, path, 0, "unterminated `ifdef block");
        }
        if !out.text.ends_with('\n') && !out.text.is_empty() {
            let last = text.lines().count() as u32;
            out.lines.push(LineOrigin { file: path.to_string(), line: last.max(1) });
        }
        out
    }

    fn diag(&mut self, severity: Severity, file: &str, line: u32, msg: impl Into<String>) {
        self.diagnostics.push(Diagnostic {
            severity,
            file: file.to_string(),
            line,
            col: 0,
            message: msg.into(),
        });
    }

    fn scan(
        &mut self,
        path: &str,
        text: &str,
        out: &mut Preprocessed,
        conds: &mut Vec<Cond>,
        depth: usize,
    ) {
        let b = text.as_bytes();
        let mut i = 0;
        let mut line = 1u32;
        let active = |conds: &Vec<Cond>| conds.last().is_none_or(|c| c.active);
        let newline = |out: &mut Preprocessed, line: u32| {
            out.text.push('\n');
            out.lines.push(LineOrigin { file: path.to_string(), line });
        };
        while i < b.len() {
            let c = b[i];
            if c == b'\n' {
                newline(out, line);
                line += 1;
                i += 1;
                continue;
            }
            if c == b'/' && b.get(i + 1) == Some(&b'/') {
                let end = text[i..].find('\n').map_or(b.len(), |e| i + e);
                if active(conds) {
                    out.text.push_str(&text[i..end]);
                }
                i = end;
                continue;
            }
            if c == b'/' && b.get(i + 1) == Some(&b'*') {
                let end = text[i + 2..].find("*/").map_or(b.len(), |e| i + 2 + e + 2);
                for (k, seg) in text[i..end].split('\n').enumerate() {
                    if k > 0 {
                        newline(out, line);
                        line += 1;
                    }
                    if active(conds) {
                        out.text.push_str(seg);
                    }
                }
                i = end;
                continue;
            }
            if c == b'"' {
                let mut j = i + 1;
                while j < b.len() && b[j] != b'"' && b[j] != b'\n' {
                    j += if b[j] == b'\\' { 2 } else { 1 };
                }
                let end = (j + 1).min(b.len());
                if active(conds) {
                    out.text.push_str(&text[i..end]);
                }
                i = end;
                continue;
            }
            if c == b'`' {
                let name_end = ident_end(b, i + 1);
                let name = &text[i + 1..name_end];
                i = self.directive(path, text, name, name_end, &mut line, out, conds, depth);
                continue;
            }
            if active(conds) {
                let ch = text[i..].chars().next().unwrap();
                out.text.push(ch);
                i += ch.len_utf8();
            } else {
                i += 1;
            }
        }
    }

    /// Handle a backtick directive or macro use; returns the new scan offset.
    #[allow(clippy::too_many_arguments)]
    fn directive(
        &mut self,
        path: &str,
        text: &str,
        name: &str,
        mut i: usize,
        line: &mut u32,
        out: &mut Preprocessed,
        conds: &mut Vec<Cond>,
        depth: usize,
    ) -> usize {
        let b = text.as_bytes();
        let active = conds.last().is_none_or(|c| c.active);
        let rest_of_line = |i: usize| text[i..].find('\n').map_or(b.len(), |e| i + e);
        match name {
            "ifdef" | "ifndef" => {
                let (arg, j) = next_word(text, i);
                let defined = self.macros.contains_key(arg);
                let cond = if name == "ifdef" { defined } else { !defined };
                conds.push(Cond { active: active && cond, taken: cond, parent_active: active });
                return j;
            }
            "elsif" => {
                let (arg, j) = next_word(text, i);
                let defined = self.macros.contains_key(arg);
                match conds.last_mut() {
                    Some(c) => {
                        let now = !c.taken && defined;
                        c.active = c.parent_active && now;
                        c.taken |= now;
                    }
                    None => self.diag(Severity::Error, path, *line, "`elsif without `ifdef"),
                }
                return j;
            }
            "else" => {
                match conds.last_mut() {
                    Some(c) => {
                        c.active = c.parent_active && !c.taken;
                        c.taken = true;
                    }
                    None => self.diag(Severity::Error, path, *line, "`else without `ifdef"),
                }
                return i;
            }
            "endif" => {
                if conds.pop().is_none() {
                    self.diag(Severity::Error, path, *line, "`endif without `ifdef");
                }
                return i;
            }
            _ => {}
        }
        if !active {
            return i;
        }
        match name {
            "define" => {
                // collect the logical line, honouring backslash continuations
                let mut body = String::new();
                let mut extra_lines = 0;
                loop {
                    let end = rest_of_line(i);
                    let seg = &text[i..end];
                    if let Some(stripped) = seg.trim_end_matches('\r').strip_suffix('\\') {
                        body.push_str(stripped);
                        body.push(' ');
                        if end >= b.len() {
                            i = end;
                            break;
                        }
                        i = end + 1;
                        extra_lines += 1;
                    } else {
                        body.push_str(seg);
                        i = end;
                        break;
                    }
                }
                for _ in 0..extra_lines {
                    out.text.push('\n');
                    out.lines.push(LineOrigin { file: path.to_string(), line: *line });
                    *line += 1;
                }
                self.define(path, *line, &body);
                i
            }
            "undef" => {
                let (arg, j) = next_word(text, i);
                self.macros.remove(arg);
                j
            }
            "include" => {
                let end = rest_of_line(i);
                let arg = text[i..end].trim();
                let arg = strip_line_comment(arg).trim();
                let target = arg.trim_matches(|c| c == '"' || c == '<' || c == '>');
                if depth >= MAX_DEPTH {
                    self.diag(Severity::Error, path, *line, "`include nesting too deep");
                } else {
                    match self.resolve_include(path, target) {
                        Some((inc_path, inc_text)) => {
                            self.scan(&inc_path, &inc_text, out, conds, depth + 1);
                            if !out.text.ends_with('\n') && !out.text.is_empty() {
                                out.text.push(' ');
                            }
                        }
                        None => self.diag(
                            Severity::Error,
                            path,
                            *line,
                            format!("cannot find include file {target:?}"),
                        ),
                    }
                }
                end
            }
            "timescale" => {
                let end = rest_of_line(i);
                out.timescale = Some(strip_line_comment(&text[i..end]).trim().to_string());
                end
            }
            "resetall" | "celldefine" | "endcelldefine" | "nounconnected_drive" => i,
            "default_nettype" | "unconnected_drive" => next_word(text, i).1,
            _ => {
                let Some(mac) = self.macros.get(name).cloned() else {
                    self.diag(Severity::Error, path, *line, format!("undefined macro `{name}"));
                    return i;
                };
                let mut body = mac.body.clone();
                if let Some(params) = &mac.params {
                    let Some((args, j, newlines)) = macro_args(text, i) else {
                        self.diag(
                            Severity::Error,
                            path,
                            *line,
                            format!("macro `{name} expects arguments"),
                        );
                        return i;
                    };
                    if args.len() != params.len() {
                        self.diag(
                            Severity::Error,
                            path,
                            *line,
                            format!("macro `{name} expects {} arguments, got {}", params.len(), args.len()),
                        );
                    }
                    body = substitute(&mac.body, params, &args);
                    i = j;
                    if depth < MAX_DEPTH {
                        self.expand_text(path, *line, &body, out, conds, depth + 1);
                    }
                    for _ in 0..newlines {
                        out.text.push('\n');
                        out.lines.push(LineOrigin { file: path.to_string(), line: *line });
                        *line += 1;
                    }
                    return i;
                }
                if depth < MAX_DEPTH {
                    self.expand_text(path, *line, &body, out, conds, depth + 1);
                } else {
                    self.diag(Severity::Error, path, *line, "macro expansion too deep");
                }
                i
            }
        }
    }

    /// Rescan a macro body so nested macro uses are expanded.
    fn expand_text(
        &mut self,
        path: &str,
        line: u32,
        body: &str,
        out: &mut Preprocessed,
        conds: &mut Vec<Cond>,
        depth: usize,
    ) {
        let mut sub = Preprocessed::default();
        self.scan(path, body, &mut sub, conds, depth);
        // bodies are single logical lines; keep the caller's line count intact
        out.text.push_str(&sub.text.replace('\n', " "));
        let _ = line;
    }

    fn define(&mut self, path: &str, line: u32, body: &str) {
        let b = body.as_bytes();
        let mut i = 0;
        while i < b.len() && b[i].is_ascii_whitespace() {
            i += 1;
        }
        let name_end = ident_end(b, i);
        let name = body[i..name_end].to_string();
        if name.is_empty() {
            self.diag(Severity::Error, path, line, "`define without a name");
            return;
        }
        let mut rest = &body[name_end..];
        let mut params = None;
        if rest.starts_with('(') {
            if let Some(close) = rest.find(')') {
                params = Some(
                    rest[1..close]
                        .split(',')
                        .map(|p| p.split('=').next().unwrap_or("").trim().to_string())
                        .filter(|p| !p.is_empty())
                        .collect(),
                );
                rest = &rest[close + 1..];
            }
        }
        let value = strip_line_comment(rest).trim().to_string();
        self.macros.insert(name, Macro { params, body: value });
    }

    fn resolve_include(&self, from: &str, target: &str) -> Option<(String, String)> {
        let mut candidates: Vec<PathBuf> = Vec::new();
        if let Some(dir) = Path::new(from).parent() {
            candidates.push(dir.join(target));
        }
        for dir in &self.opts.include_dirs {
            candidates.push(dir.join(target));
        }
        for cand in &candidates {
            let key = cand.to_string_lossy();
            if let Some((p, t)) = self.memory.iter().find(|(p, _)| *p == key) {
                return Some((p.clone(), t.clone()));
            }
        }
        let base = Path::new(target).file_name()?;
        if let Some((p, t)) =
            self.memory.iter().find(|(p, _)| Path::new(p).file_name() == Some(base))
        {
            return Some((p.clone(), t.clone()));
        }
        for cand in candidates {
            if let Ok(t) = std::fs::read_to_string(&cand) {
                return Some((cand.to_string_lossy().into_owned(), t));
            }
        }
        None
    }
}

fn ident_end(b: &[u8], mut i: usize) -> usize {
    while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_' || b[i] == b'$') {
        i += 1;
    }
    i
}

fn next_word(text: &str, mut i: usize) -> (&str, usize) {
    let b = text.as_bytes();
    while i < b.len() && (b[i] == b' ' || b[i] == b'\t') {
        i += 1;
    }
    let e = ident_end(b, i);
    (&text[i..e], e)
}

fn strip_line_comment(s: &str) -> &str {
    match s.find("//") {
        Some(p) => &s[..p],
        None => s,
    }
}

/// Parse `( a, b )` after a function-like macro name.
fn macro_args(text: &str, mut i: usize) -> Option<(Vec<String>, usize, u32)> {
    let b = text.as_bytes();
    while i < b.len() && (b[i] == b' ' || b[i] == b'\t') {
        i += 1;
    }
    if b.get(i) != Some(&b'(') {
        return None;
    }
    i += 1;
    let mut depth = 0;
    let mut args = Vec::new();
    let mut cur = String::new();
    let mut newlines = 0;
    while i < b.len() {
        let c = b[i] as char;
        match c {
            '(' | '[' | '{' => depth += 1,
            ')' | ']' | '}' if depth > 0 => depth -= 1,
            ')' => {
                args.push(cur.trim().to_string());
                return Some((args, i + 1, newlines));
            }
            ',' if depth == 0 => {
                args.push(cur.trim().to_string());
                cur.clear();
                i += 1;
                continue;
            }
            '\n' => newlines += 1,
            _ => {}
        }
        cur.push(c);
        i += 1;
    }
    None
}

fn substitute(body: &str, params: &[String], args: &[String]) -> String {
    let b = body.as_bytes();
    let mut out = String::new();
    let mut i = 0;
    while i < b.len() {
        if b[i].is_ascii_alphabetic() || b[i] == b'_' {
            let e = ident_end(b, i);
            let word = &body[i..e];
            match params.iter().position(|p| p == word) {
                Some(k) => out.push_str(args.get(k).map(String::as_str).unwrap_or("")),
                None => out.push_str(word),
            }
            i = e;
        } else {
            let ch = body[i..].chars().next().unwrap();
            out.push(ch);
            i += ch.len_utf8();
        }
    }
    out
}
