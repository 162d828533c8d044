// SPDX-License-Identifier: Apache-2.0

//! Tokenizer shared by the Verilog frontend and the SVA parser.

use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    Ident { name: String, escaped: bool },
    /// `$name` system identifier, stored with the leading `$`.
    SysIdent(String),
    /// Numeric literal, raw text with whitespace removed.
    Number(String),
    Str(String),
    Op(&'static str),
    Eof,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    /// Byte offsets into the lexed text.
    pub start: usize,
    pub end: usize,
    pub line: u32,
    pub col: u32,
}

impl Token {
    pub fn is_op(&self, op: &str) -> bool {
        matches!(&self.kind, TokenKind::Op(o) if *o == op)
    }

    /// True for an unescaped identifier spelled `kw`.
    pub fn is_kw(&self, kw: &str) -> bool {
        matches!(&self.kind, TokenKind::Ident { name, escaped: false } if name == kw)
    }
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Ident { name, escaped: true } => write!(f, "\\{name} "),
            TokenKind::Ident { name, .. } => f.write_str(name),
            TokenKind::SysIdent(s) | TokenKind::Number(s) => f.write_str(s),
            TokenKind::Str(s) => write!(f, "\"{s}\""),
            TokenKind::Op(o) => f.write_str(o),
            TokenKind::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexError {
    pub line: u32,
    pub col: u32,
    pub message: String,
}

// Longest match first.
const OPS: &[&str] = &[
    "<<<=", ">>>=", "===", "!==", "<<<", ">>>", "|->", "|=>", "<<=", ">>=", "==", "!=", "<=",
    ">=", "&&", "||", "<<", ">>", "**", "~&", "~|", "~^", "^~", "->", "##", "+:", "-:", "+", "-",
    "*", "/", "%", "<", ">", "!", "~", "&", "|", "^", "?", ":", ";", ",", ".", "(", ")", "[", "]",
    "{", "}", "@", "#", "=", "'",
];

pub fn is_keyword(s: &str) -> bool {
    matches!(
        s,
        "module"
            | "endmodule"
            | "input"
            | "output"
            | "inout"
            | "wire"
            | "reg"
            | "logic"
            | "integer"
            | "tri"
            | "signed"
            | "unsigned"
            | "parameter"
            | "localparam"
            | "assign"
            | "always"
            | "always_ff"
            | "always_comb"
            | "always_latch"
            | "initial"
            | "begin"
            | "end"
            | "if"
            | "else"
            | "case"
            | "casez"
            | "casex"
            | "endcase"
            | "default"
            | "for"
            | "while"
            | "repeat"
            | "forever"
            | "posedge"
            | "negedge"
            | "or"
            | "and"
            | "not"
            | "generate"
            | "endgenerate"
            | "function"
            | "endfunction"
            | "task"
            | "endtask"
            | "genvar"
            | "specify"
            | "endspecify"
            | "fork"
            | "join"
            | "property"
            | "endproperty"
            | "assert"
            | "disable"
            | "iff"
            | "supply0"
            | "supply1"
    )
}

/// Tokenize `text`. Comments and whitespace are skipped; a trailing
/// `Eof` token is always appended.
pub fn lex(text: &str) -> Result<Vec<Token>, LexError> {
    Lexer::new(text).run()
}

struct Lexer<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    line: u32,
    line_start: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer { src, bytes: src.as_bytes(), pos: 0, line: 1, line_start: 0 }
    }

    fn peek(&self, off: usize) -> u8 {
        self.bytes.get(self.pos + off).copied().unwrap_or(0)
    }

    fn col(&self, pos: usize) -> u32 {
        (pos - self.line_start) as u32 + 1
    }

    fn bump(&mut self) {
        if self.peek(0) == b'\n' {
            self.line += 1;
            self.line_start = self.pos + 1;
        }
        self.pos += 1;
    }

    fn err(&self, message: impl Into<String>) -> LexError {
        LexError { line: self.line, col: self.col(self.pos), message: message.into() }
    }

    fn skip_trivia(&mut self) -> Result<(), LexError> {
        loop {
            match (self.peek(0), self.peek(1)) {
                (b' ' | b'\t' | b'\r' | b'\n' | 0x0c, _) => self.bump(),
                (b'/', b'/') => {
                    while self.pos < self.bytes.len() && self.peek(0) != b'\n' {
                        self.bump();
                    }
                }
                (b'/', b'*') => {
                    self.bump();
                    self.bump();
                    loop {
                        if self.pos >= self.bytes.len() {
                            return Err(self.err("unterminated block comment"));
                        }
                        if self.peek(0) == b'*' && self.peek(1) == b'/' {
                            self.bump();
                            self.bump();
                            break;
                        }
                        self.bump();
                    }
                }
                _ => return Ok(()),
            }
        }
    }

    fn run(mut self) -> Result<Vec<Token>, LexError> {
        let mut out = Vec::new();
        loop {
            self.skip_trivia()?;
            let start = self.pos;
            let line = self.line;
            let col = self.col(start);
            if start >= self.bytes.len() {
                out.push(Token { kind: TokenKind::Eof, start, end: start, line, col });
                return Ok(out);
            }
            let kind = self.next_kind()?;
            out.push(Token { kind, start, end: self.pos, line, col });
        }
    }

    fn next_kind(&mut self) -> Result<TokenKind, LexError> {
        let c = self.peek(0);
        if c.is_ascii_alphabetic() || c == b'_' {
            let s = self.pos;
            while is_ident_char(self.peek(0)) {
                self.bump();
            }
            return Ok(TokenKind::Ident { name: self.src[s..self.pos].to_string(), escaped: false });
        }
        if c == b'\\' {
            self.bump();
            let s = self.pos;
            while self.pos < self.bytes.len() && !self.peek(0).is_ascii_whitespace() {
                self.bump();
            }
            if s == self.pos {
                return Err(self.err("empty escaped identifier"));
            }
            return Ok(TokenKind::Ident { name: self.src[s..self.pos].to_string(), escaped: true });
        }
        if c == b'$' && (self.peek(1).is_ascii_alphabetic() || self.peek(1) == b'_') {
            let s = self.pos;
            self.bump();
            while is_ident_char(self.peek(0)) {
                self.bump();
            }
            return Ok(TokenKind::SysIdent(self.src[s..self.pos].to_string()));
        }
        if c == b'"' {
            self.bump();
            let s = self.pos;
            loop {
                match self.peek(0) {
                    0 | b'\n' => return Err(self.err("unterminated string literal")),
                    b'\\' => {
                        self.bump();
                        self.bump();
                    }
                    b'"' => break,
                    _ => self.bump(),
                }
            }
            let text = self.src[s..self.pos].to_string();
            self.bump();
            return Ok(TokenKind::Str(text));
        }
        if c.is_ascii_digit() {
            return Ok(self.number());
        }
        if c == b'\'' && is_base_char(self.peek(1)) {
            return Ok(self.based_tail(String::new()));
        }
        if c == b'\'' && matches!(self.peek(1), b'0' | b'1' | b'x' | b'X' | b'z' | b'Z')
            && !is_ident_char(self.peek(2))
        {
            let s = self.pos;
            self.bump();
            self.bump();
            return Ok(TokenKind::Number(self.src[s..self.pos].to_string()));
        }
        for op in OPS {
            if self.src[self.pos..].starts_with(op) {
                for _ in 0..op.len() {
                    self.bump();
                }
                return Ok(TokenKind::Op(op));
            }
        }
        Err(self.err(format!("unexpected character {:?}", c as char)))
    }

    fn number(&mut self) -> TokenKind {
        let s = self.pos;
        while self.peek(0).is_ascii_digit() || self.peek(0) == b'_' {
            self.bump();
        }
        // real literal
        if self.peek(0) == b'.' && self.peek(1).is_ascii_digit() {
            self.bump();
            while self.peek(0).is_ascii_digit() || self.peek(0) == b'_' {
                self.bump();
            }
            self.exponent();
            return TokenKind::Number(self.src[s..self.pos].to_string());
        }
        if matches!(self.peek(0), b'e' | b'E')
            && (self.peek(1).is_ascii_digit()
                || (matches!(self.peek(1), b'+' | b'-') && self.peek(2).is_ascii_digit()))
        {
            self.exponent();
            return TokenKind::Number(self.src[s..self.pos].to_string());
        }
        let size = self.src[s..self.pos].to_string();
        // size may be separated from the base by whitespace
        let save = (self.pos, self.line, self.line_start);
        while matches!(self.peek(0), b' ' | b'\t') {
            self.bump();
        }
        if self.peek(0) == b'\'' && is_base_char(self.peek(1)) {
            return self.based_tail(size);
        }
        (self.pos, self.line, self.line_start) = save;
        TokenKind::Number(size)
    }

    fn exponent(&mut self) {
        if matches!(self.peek(0), b'e' | b'E') {
            self.bump();
            if matches!(self.peek(0), b'+' | b'-') {
                self.bump();
            }
            while self.peek(0).is_ascii_digit() {
                self.bump();
            }
        }
    }

    /// Lex `'[s]<base><digits>` with `size` already consumed.
    fn based_tail(&mut self, size: String) -> TokenKind {
        let mut text = size;
        text.push('\'');
        self.bump();
        if matches!(self.peek(0), b's' | b'S') {
            text.push(self.peek(0) as char);
            self.bump();
        }
        text.push(self.peek(0) as char);
        self.bump();
        while matches!(self.peek(0), b' ' | b'\t') {
            self.bump();
        }
        while self.peek(0).is_ascii_hexdigit()
            || matches!(self.peek(0), b'_' | b'x' | b'X' | b'z' | b'Z' | b'?')
        {
            text.push(self.peek(0) as char);
            self.bump();
        }
        TokenKind::Number(text)
    }
}

fn is_ident_char(c: u8) -> bool {
    c.is_ascii_alphanumeric() || c == b'_' || c == b'$'
}

fn is_base_char(c: u8) -> bool {
    matches!(c, b'b' | b'B' | b'o' | b'O' | b'd' | b'D' | b'h' | b'H' | b's' | b'S')
}
