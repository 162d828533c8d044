// SPDX-License-Identifier: Apache-2.0

//! Syntax tree for the supported Verilog subset.
//!
//! Source positions ([`Loc`], [`Span`], [`LineSpan`]) never take part in
//! equality, so `==` on any node is structural equality.

use serde::{Deserialize, Serialize};
use std::fmt;

macro_rules! position_type {
    ($name:ident { $($field:ident : $ty:ty),* }) => {
        #[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
        pub struct $name { $(pub $field: $ty),* }

        impl PartialEq for $name {
            fn eq(&self, _: &Self) -> bool {
                true
            }
        }
        impl Eq for $name {}
    };
}

position_type!(Loc { line: u32, col: u32 });
position_type!(Span { start: usize, end: usize });
position_type!(LineSpan { start: u32, end: u32 });

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
    Info,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub file: String,
    pub line: u32,
    pub col: u32,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
            Severity::Info => "info",
        };
        write!(f, "{}:{}:{}: {sev}: {}", self.file, self.line, self.col, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Ident {
    pub name: String,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub escaped: bool,
}

impl Ident {
    pub fn new(name: impl Into<String>) -> Self {
        Ident { name: name.into(), escaped: false }
    }
}

impl fmt::Display for Ident {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.escaped {
            write!(f, "\\{} ", self.name)
        } else {
            f.write_str(&self.name)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceFile {
    pub path: String,
    pub text: String,
    /// Macro-expanded text the parser actually saw.
    #[serde(skip)]
    pub preprocessed: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timescale: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceUnit {
    pub files: Vec<SourceFile>,
    pub modules: Vec<ModuleDecl>,
    pub diagnostics: Vec<Diagnostic>,
}

impl SourceUnit {
    pub fn module(&self, name: &str) -> Option<&ModuleDecl> {
        self.modules.iter().find(|m| m.name.name == name)
    }

    pub fn module_mut(&mut self, name: &str) -> Option<&mut ModuleDecl> {
        self.modules.iter_mut().find(|m| m.name.name == name)
    }

    pub fn errors(&self) -> impl Iterator<Item = &Diagnostic> {
        self.diagnostics.iter().filter(|d| d.severity == Severity::Error)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Input,
    Output,
    Inout,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Input => "input",
            Direction::Output => "output",
            Direction::Inout => "inout",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NetKind {
    Wire,
    Reg,
    Logic,
    Integer,
    Tri,
}

impl NetKind {
    pub fn keyword(self) -> &'static str {
        match self {
            NetKind::Wire => "wire",
            NetKind::Reg => "reg",
            NetKind::Logic => "logic",
            NetKind::Integer => "integer",
            NetKind::Tri => "tri",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Self> {
        Some(match s {
            "wire" => NetKind::Wire,
            "reg" => NetKind::Reg,
            "logic" => NetKind::Logic,
            "integer" => NetKind::Integer,
            "tri" => NetKind::Tri,
            _ => return None,
        })
    }

    /// Whether procedural code may assign a net of this kind.
    pub fn is_variable(self) -> bool {
        matches!(self, NetKind::Reg | NetKind::Logic | NetKind::Integer)
    }
}

/// `[msb:lsb]` as written.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Range {
    pub msb: Expr,
    pub lsb: Expr,
}

/// Width after parameter substitution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Width {
    Scalar,
    Range { msb: i64, lsb: i64 },
    Unknown,
}

impl Width {
    pub fn bits(self) -> Option<u32> {
        match self {
            Width::Scalar => Some(1),
            Width::Range { msb, lsb } => Some((msb - lsb).unsigned_abs() as u32 + 1),
            Width::Unknown => None,
        }
    }
}

impl fmt::Display for Width {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Width::Scalar => f.write_str("1 bit"),
            Width::Range { msb, lsb } => write!(f, "{} bits [{msb}:{lsb}]", self.bits().unwrap()),
            Width::Unknown => f.write_str("unknown width"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PortDecl {
    pub name: Ident,
    pub direction: Direction,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub net_kind: Option<NetKind>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub signed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<Range>,
    /// Filled in by `resolve_widths`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<Width>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamDecl {
    pub local: bool,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub signed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<Range>,
    pub assigns: Vec<(Ident, Expr)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetName {
    pub name: Ident,
    /// Unpacked (memory) dimensions.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dims: Vec<Range>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init: Option<Expr>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetDecl {
    pub kind: NetKind,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub signed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<Range>,
    pub names: Vec<NetName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<Width>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContinuousAssign {
    pub lhs: Expr,
    pub rhs: Expr,
    pub loc: Loc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Edge {
    Posedge,
    Negedge,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SensItem {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edge: Option<Edge>,
    pub expr: Expr,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "items", rename_all = "lowercase")]
pub enum Sensitivity {
    Star,
    List(Vec<SensItem>),
}

impl Sensitivity {
    pub fn is_edge_triggered(&self) -> bool {
        matches!(self, Sensitivity::List(items) if items.iter().any(|s| s.edge.is_some()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlwaysKind {
    Always,
    AlwaysFf,
    AlwaysComb,
    AlwaysLatch,
}

impl AlwaysKind {
    pub fn keyword(self) -> &'static str {
        match self {
            AlwaysKind::Always => "always",
            AlwaysKind::AlwaysFf => "always_ff",
            AlwaysKind::AlwaysComb => "always_comb",
            AlwaysKind::AlwaysLatch => "always_latch",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlwaysBlock {
    pub kind: AlwaysKind,
    /// `None` only for `always_comb` / `always_latch`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sensitivity: Option<Sensitivity>,
    pub body: Stmt,
    pub loc: Loc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CaseKind {
    Case,
    Casez,
    Casex,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseItem {
    /// Empty for `default`.
    pub labels: Vec<Expr>,
    pub body: Stmt,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "stmt", rename_all = "snake_case")]
pub enum Stmt {
    Block {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<Ident>,
        stmts: Vec<Stmt>,
    },
    If {
        cond: Expr,
        then_branch: Box<Stmt>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        else_branch: Option<Box<Stmt>>,
        loc: Loc,
    },
    Case {
        kind: CaseKind,
        expr: Expr,
        items: Vec<CaseItem>,
    },
    Assign {
        lhs: Expr,
        rhs: Expr,
        blocking: bool,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        delay: Option<Expr>,
        loc: Loc,
    },
    For {
        init: (Expr, Expr),
        cond: Expr,
        step: (Expr, Expr),
        body: Box<Stmt>,
    },
    SystemCall {
        name: String,
        args: Vec<Expr>,
    },
    Null,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamOverride {
    /// `None` while still positional.
    pub name: Option<Ident>,
    pub value: Expr,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PortRef {
    Named(Ident),
    Positional(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Connection {
    pub port: PortRef,
    /// `None` for an explicitly unconnected port, `.p()`.
    pub expr: Option<Expr>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceDecl {
    pub child_module: Ident,
    pub instance_name: Ident,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub param_overrides: Vec<ParamOverride>,
    pub connections: Vec<Connection>,
    pub loc: Loc,
}

impl InstanceDecl {
    pub fn connection(&self, port: &str) -> Option<&Connection> {
        self.connections
            .iter()
            .find(|c| matches!(&c.port, PortRef::Named(n) if n.name == port))
    }
}

/// Source text the parser does not model, reproduced verbatim on emit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpaqueSpan {
    pub text: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "item", rename_all = "snake_case")]
pub enum ItemKind {
    Param(ParamDecl),
    Net(NetDecl),
    Assign(ContinuousAssign),
    Always(AlwaysBlock),
    Instance(InstanceDecl),
    Opaque(OpaqueSpan),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BodyItem {
    #[serde(flatten)]
    pub kind: ItemKind,
    #[serde(skip)]
    pub span: Span,
}

impl From<ItemKind> for BodyItem {
    fn from(kind: ItemKind) -> Self {
        BodyItem { kind, span: Span::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModuleDecl {
    pub name: Ident,
    pub file: String,
    pub lines: LineSpan,
    /// ANSI-style header (`module m(input a, ...)`) or a bare name list.
    pub ansi_ports: bool,
    /// Header `#(parameter ...)` declarations, one name each.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub header_params: Vec<ParamDecl>,
    pub ports: Vec<PortDecl>,
    pub items: Vec<BodyItem>,
}

impl ModuleDecl {
    pub fn port(&self, name: &str) -> Option<&PortDecl> {
        self.ports.iter().find(|p| p.name.name == name)
    }

    /// Overridable parameters in declaration order (header, then body
    /// `parameter`), excluding `localparam`.
    pub fn overridable_params(&self) -> Vec<&Ident> {
        self.all_params().filter(|(local, _, _)| !local).map(|(_, n, _)| n).collect()
    }

    /// `(is_local, name, default)` for every parameter in declaration order.
    pub fn all_params(&self) -> impl Iterator<Item = (bool, &Ident, &Expr)> {
        let body = self.items.iter().filter_map(|i| match &i.kind {
            ItemKind::Param(p) => Some(p),
            _ => None,
        });
        self.header_params
            .iter()
            .chain(body)
            .flat_map(|p| p.assigns.iter().map(move |(n, e)| (p.local, n, e)))
    }

    pub fn nets(&self) -> impl Iterator<Item = (&NetDecl, &NetName)> {
        self.items.iter().flat_map(|i| match &i.kind {
            ItemKind::Net(d) => d.names.iter().map(move |n| (d, n)).collect::<Vec<_>>(),
            _ => Vec::new(),
        })
    }

    pub fn instances(&self) -> impl Iterator<Item = &InstanceDecl> {
        self.items.iter().filter_map(|i| match &i.kind {
            ItemKind::Instance(inst) => Some(inst),
            _ => None,
        })
    }

    pub fn instances_mut(&mut self) -> impl Iterator<Item = &mut InstanceDecl> {
        self.items.iter_mut().filter_map(|i| match &mut i.kind {
            ItemKind::Instance(inst) => Some(inst),
            _ => None,
        })
    }

    /// Width of a port or net by name, if declared and resolved.
    pub fn signal_width(&self, name: &str) -> Option<Width> {
        if let Some(p) = self.port(name) {
            return p.width;
        }
        self.nets().find(|(_, n)| n.name.name == name).and_then(|(d, _)| d.width)
    }

    /// Every port and net name, ports first.
    pub fn signal_names(&self) -> Vec<String> {
        let mut out: Vec<String> = self.ports.iter().map(|p| p.name.name.clone()).collect();
        for (_, n) in self.nets() {
            if !out.contains(&n.name.name) {
                out.push(n.name.name.clone());
            }
        }
        out
    }

    pub fn has_signal(&self, name: &str) -> bool {
        self.port(name).is_some() || self.nets().any(|(_, n)| n.name.name == name)
    }
}

// ---------------------------------------------------------------------------
// Expressions

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum UnaryOp {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
    #[serde(rename = "!")]
    LogicNot,
    #[serde(rename = "~")]
    BitNot,
    #[serde(rename = "&")]
    RedAnd,
    #[serde(rename = "~&")]
    RedNand,
    #[serde(rename = "|")]
    RedOr,
    #[serde(rename = "~|")]
    RedNor,
    #[serde(rename = "^")]
    RedXor,
    #[serde(rename = "~^")]
    RedXnor,
}

impl UnaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            UnaryOp::Plus => "+",
            UnaryOp::Minus => "-",
            UnaryOp::LogicNot => "!",
            UnaryOp::BitNot => "~",
            UnaryOp::RedAnd => "&",
            UnaryOp::RedNand => "~&",
            UnaryOp::RedOr => "|",
            UnaryOp::RedNor => "~|",
            UnaryOp::RedXor => "^",
            UnaryOp::RedXnor => "~^",
        }
    }

    pub fn from_symbol(s: &str) -> Option<Self> {
        Some(match s {
            "+" => UnaryOp::Plus,
            "-" => UnaryOp::Minus,
            "!" => UnaryOp::LogicNot,
            "~" => UnaryOp::BitNot,
            "&" => UnaryOp::RedAnd,
            "~&" => UnaryOp::RedNand,
            "|" => UnaryOp::RedOr,
            "~|" => UnaryOp::RedNor,
            "^" => UnaryOp::RedXor,
            "~^" | "^~" => UnaryOp::RedXnor,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BinaryOp {
    #[serde(rename = "**")]
    Pow,
    #[serde(rename = "*")]
    Mul,
    #[serde(rename = "/")]
    Div,
    #[serde(rename = "%")]
    Mod,
    #[serde(rename = "+")]
    Add,
    #[serde(rename = "-")]
    Sub,
    #[serde(rename = "<<")]
    Shl,
    #[serde(rename = ">>")]
    Shr,
    #[serde(rename = "<<<")]
    AShl,
    #[serde(rename = ">>>")]
    AShr,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "==")]
    Eq,
    #[serde(rename = "!=")]
    Ne,
    #[serde(rename = "===")]
    CaseEq,
    #[serde(rename = "!==")]
    CaseNe,
    #[serde(rename = "&")]
    BitAnd,
    #[serde(rename = "^")]
    BitXor,
    #[serde(rename = "~^")]
    BitXnor,
    #[serde(rename = "|")]
    BitOr,
    #[serde(rename = "&&")]
    LogicAnd,
    #[serde(rename = "||")]
    LogicOr,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        use BinaryOp::*;
        match self {
            Pow => "**",
            Mul => "*",
            Div => "/",
            Mod => "%",
            Add => "+",
            Sub => "-",
            Shl => "<<",
            Shr => ">>",
            AShl => "<<<",
            AShr => ">>>",
            Lt => "<",
            Le => "<=",
            Gt => ">",
            Ge => ">=",
            Eq => "==",
            Ne => "!=",
            CaseEq => "===",
            CaseNe => "!==",
            BitAnd => "&",
            BitXor => "^",
            BitXnor => "~^",
            BitOr => "|",
            LogicAnd => "&&",
            LogicOr => "||",
        }
    }

    pub fn from_symbol(s: &str) -> Option<Self> {
        use BinaryOp::*;
        Some(match s {
            "**" => Pow,
            "*" => Mul,
            "/" => Div,
            "%" => Mod,
            "+" => Add,
            "-" => Sub,
            "<<" => Shl,
            ">>" => Shr,
            "<<<" => AShl,
            ">>>" => AShr,
            "<" => Lt,
            "<=" => Le,
            ">" => Gt,
            ">=" => Ge,
            "==" => Eq,
            "!=" => Ne,
            "===" => CaseEq,
            "!==" => CaseNe,
            "&" => BitAnd,
            "^" => BitXor,
            "~^" | "^~" => BitXnor,
            "|" => BitOr,
            "&&" => LogicAnd,
            "||" => LogicOr,
            _ => return None,
        })
    }

    /// Binding strength; larger binds tighter.
    pub fn precedence(self) -> u8 {
        use BinaryOp::*;
        match self {
            Pow => 12,
            Mul | Div | Mod => 11,
            Add | Sub => 10,
            Shl | Shr | AShl | AShr => 9,
            Lt | Le | Gt | Ge => 8,
            Eq | Ne | CaseEq | CaseNe => 7,
            BitAnd => 6,
            BitXor | BitXnor => 5,
            BitOr => 4,
            LogicAnd => 3,
            LogicOr => 2,
        }
    }
}

/// Precedence of the conditional operator.
pub const TERNARY_PREC: u8 = 1;
/// Precedence of unary operators and primaries.
pub const UNARY_PREC: u8 = 13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SliceKind {
    /// `[msb:lsb]`
    Range,
    /// `[base+:width]`
    Up,
    /// `[base-:width]`
    Down,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "expr", rename_all = "snake_case")]
pub enum Expr {
    /// Possibly hierarchical name, `a` or `u1.a`.
    Name { parts: Vec<Ident>, loc: Loc },
    Number { text: String, loc: Loc },
    Str { text: String },
    Index { base: Box<Expr>, index: Box<Expr> },
    Slice { base: Box<Expr>, kind: SliceKind, left: Box<Expr>, right: Box<Expr> },
    Concat { items: Vec<Expr> },
    Replicate { count: Box<Expr>, items: Vec<Expr> },
    Unary { op: UnaryOp, operand: Box<Expr>, loc: Loc },
    Binary { op: BinaryOp, lhs: Box<Expr>, rhs: Box<Expr>, loc: Loc },
    Ternary { cond: Box<Expr>, then_expr: Box<Expr>, else_expr: Box<Expr>, loc: Loc },
    /// Function or `$system` call.
    Call { name: String, args: Vec<Expr> },
    Paren { inner: Box<Expr> },
}

impl Expr {
    pub fn ident(name: &str) -> Expr {
        Expr::Name { parts: vec![Ident::new(name)], loc: Loc::default() }
    }

    pub fn number(text: &str) -> Expr {
        Expr::Number { text: text.to_string(), loc: Loc::default() }
    }

    pub fn binary(op: BinaryOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs), loc: Loc::default() }
    }

    pub fn unary(op: UnaryOp, operand: Expr) -> Expr {
        Expr::Unary { op, operand: Box::new(operand), loc: Loc::default() }
    }

    /// Precedence of the node's top-level operator.
    pub fn precedence(&self) -> u8 {
        match self {
            Expr::Binary { op, .. } => op.precedence(),
            Expr::Ternary { .. } => TERNARY_PREC,
            _ => UNARY_PREC,
        }
    }

    /// Dotted name if this is a plain (possibly hierarchical) identifier.
    pub fn as_name(&self) -> Option<String> {
        match self {
            Expr::Name { parts, .. } => Some(
                parts.iter().map(|p| p.name.as_str()).collect::<Vec<_>>().join("."),
            ),
            _ => None,
        }
    }

    /// Direct children in evaluation order.
    pub fn children(&self) -> Vec<&Expr> {
        match self {
            Expr::Name { .. } | Expr::Number { .. } | Expr::Str { .. } => vec![],
            Expr::Index { base, index } => vec![base, index],
            Expr::Slice { base, left, right, .. } => vec![base, left, right],
            Expr::Concat { items } => items.iter().collect(),
            Expr::Replicate { count, items } => {
                std::iter::once(&**count).chain(items.iter()).collect()
            }
            Expr::Unary { operand, .. } => vec![operand],
            Expr::Binary { lhs, rhs, .. } => vec![lhs, rhs],
            Expr::Ternary { cond, then_expr, else_expr, .. } => vec![cond, then_expr, else_expr],
            Expr::Call { args, .. } => args.iter().collect(),
            Expr::Paren { inner } => vec![inner],
        }
    }

    pub fn children_mut(&mut self) -> Vec<&mut Expr> {
        match self {
            Expr::Name { .. } | Expr::Number { .. } | Expr::Str { .. } => vec![],
            Expr::Index { base, index } => vec![base, index],
            Expr::Slice { base, left, right, .. } => vec![base, left, right],
            Expr::Concat { items } => items.iter_mut().collect(),
            Expr::Replicate { count, items } => {
                std::iter::once(&mut **count).chain(items.iter_mut()).collect()
            }
            Expr::Unary { operand, .. } => vec![operand],
            Expr::Binary { lhs, rhs, .. } => vec![lhs, rhs],
            Expr::Ternary { cond, then_expr, else_expr, .. } => vec![cond, then_expr, else_expr],
            Expr::Call { args, .. } => args.iter_mut().collect(),
            Expr::Paren { inner } => vec![inner],
        }
    }

    /// All referenced names (dotted), in first-occurrence order.
    pub fn names(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_names(&mut out);
        out
    }

    fn collect_names(&self, out: &mut Vec<String>) {
        if let Some(n) = self.as_name() {
            if !out.contains(&n) {
                out.push(n);
            }
            return;
        }
        for c in self.children() {
            c.collect_names(out);
        }
    }

    /// Remove all explicit parentheses.
    pub fn strip_parens(self) -> Expr {
        match self {
            Expr::Paren { inner } => inner.strip_parens(),
            mut other => {
                for c in other.children_mut() {
                    let taken = std::mem::replace(c, Expr::Str { text: String::new() });
                    *c = taken.strip_parens();
                }
                other
            }
        }
    }

    /// Whether this is a primary that a prefix operator can attach to
    /// without extra parentheses.
    pub fn is_primary(&self) -> bool {
        !matches!(self, Expr::Binary { .. } | Expr::Ternary { .. } | Expr::Unary { .. })
    }
}

impl Stmt {
    /// Visit every statement in pre-order.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Stmt)) {
        f(self);
        match self {
            Stmt::Block { stmts, .. } => stmts.iter().for_each(|s| s.walk(f)),
            Stmt::If { then_branch, else_branch, .. } => {
                then_branch.walk(f);
                if let Some(e) = else_branch {
                    e.walk(f);
                }
            }
            Stmt::Case { items, .. } => items.iter().for_each(|i| i.body.walk(f)),
            Stmt::For { body, .. } => body.walk(f),
            Stmt::Assign { .. } | Stmt::SystemCall { .. } | Stmt::Null => {}
        }
    }

    /// Signals read anywhere in the statement, including conditions and
    /// index expressions on the left-hand side.
    pub fn reads(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut push = |names: Vec<String>| {
            for n in names {
                if !out.contains(&n) {
                    out.push(n);
                }
            }
        };
        self.walk(&mut |s| match s {
            Stmt::If { cond, .. } => push(cond.names()),
            Stmt::Case { expr, items, .. } => {
                push(expr.names());
                for i in items {
                    for l in &i.labels {
                        push(l.names());
                    }
                }
            }
            Stmt::Assign { lhs, rhs, .. } => {
                push(rhs.names());
                push(lvalue_index_reads(lhs));
            }
            Stmt::For { init, cond, step, .. } => {
                push(init.1.names());
                push(cond.names());
                push(step.1.names());
            }
            Stmt::SystemCall { .. } | Stmt::Block { .. } | Stmt::Null => {}
        });
        out
    }

    /// Signals assigned anywhere in the statement.
    pub fn writes(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.walk(&mut |s| {
            let targets = match s {
                Stmt::Assign { lhs, .. } => lvalue_targets(lhs),
                Stmt::For { init, step, .. } => {
                    let mut t = lvalue_targets(&init.0);
                    t.extend(lvalue_targets(&step.0));
                    t
                }
                _ => vec![],
            };
            for t in targets {
                if !out.contains(&t) {
                    out.push(t);
                }
            }
        });
        out
    }
}

/// Base names written by an lvalue (`a`, `a[3]`, `{a, b[1:0]}`).
pub fn lvalue_targets(lhs: &Expr) -> Vec<String> {
    match lhs {
        Expr::Name { .. } => lhs.as_name().into_iter().collect(),
        Expr::Index { base, .. } | Expr::Slice { base, .. } => lvalue_targets(base),
        Expr::Concat { items } => items.iter().flat_map(lvalue_targets).collect(),
        Expr::Paren { inner } => lvalue_targets(inner),
        _ => vec![],
    }
}

/// Names read by index expressions inside an lvalue.
pub fn lvalue_index_reads(lhs: &Expr) -> Vec<String> {
    match lhs {
        Expr::Index { base, index } => {
            let mut v = lvalue_index_reads(base);
            v.extend(index.names());
            v
        }
        Expr::Slice { base, left, right, .. } => {
            let mut v = lvalue_index_reads(base);
            v.extend(left.names());
            v.extend(right.names());
            v
        }
        Expr::Concat { items } => items.iter().flat_map(lvalue_index_reads).collect(),
        _ => vec![],
    }
}
