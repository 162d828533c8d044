// SPDX-License-Identifier: Apache-2.0

//! Single-site mutation of RTL and mutation-testing campaigns.
//!
//! Every mutation changes exactly one token of the emitted module text:
//! an operator swap, an inserted or removed negation, a flipped literal
//! bit, or a replaced assignment target. Candidates that would need extra
//! parentheses to keep their meaning are not eligible.

mod campaign;

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use campaign::{
    campaign_table, compare_sets, run_campaign, AssertionSet, CampaignConfig, CampaignResult, ExcludedAssertion, MutantOutcome,
    MutantStatus, SetDelta, SetScore, Trigger, CAMPAIGN_SCHEMA, union_score,
};

use crate::sim::SimError;
use crate::verilog::lexer::lex;
use crate::verilog::number::parse_literal;
use crate::verilog::{
    emit_module, parse_verilog, BinaryOp, Expr, ItemKind, Loc, ModuleDecl, SourceUnit, Stmt, UnaryOp, Width,
};

#[derive(Debug, Error)]
pub enum MutationError {
    #[error("no eligible mutation sites")]
    NoEligibleSites,
    #[error("unknown assertion set `{0}`")]
    UnknownSetId(String),
    #[error("mutation `{0}` does not apply to this design")]
    StaleMutation(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("I/O error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Operator {
    BinopReplace,
    UnaryNegateInsert,
    ConditionInvert,
    ConstantFlip,
    AssignmentTargetSwap,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Site {
    pub module: String,
    pub file: String,
    pub line: u32,
    pub col: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mutation {
    pub id: String,
    pub operator: Operator,
    pub site: Site,
    pub original: String,
    pub mutated: String,
    /// Position of the candidate in the module's deterministic walk.
    pub point: usize,
}

/// Operator pairs swapped by `binop-replace`.
fn swapped(op: BinaryOp) -> Option<BinaryOp> {
    use BinaryOp::*;
    Some(match op {
        BitAnd => BitOr,
        BitOr => BitAnd,
        Add => Sub,
        Sub => Add,
        Eq => Ne,
        Ne => Eq,
        Lt => Ge,
        Ge => Lt,
        LogicAnd => LogicOr,
        LogicOr => LogicAnd,
        _ => return None,
    })
}

/// Flip the least significant bit of a literal, keeping base and width.
fn flip_literal(text: &str) -> Option<String> {
    let lit = parse_literal(text)?;
    if lit.has_unknown() || lit.fill.is_some() {
        return None;
    }
    let v = lit.value ^ num_bigint::BigUint::from(1u32);
    let compact: String = text.chars().filter(|c| !c.is_whitespace() && *c != '_').collect();
    let Some(q) = compact.find('\'') else { return Some(v.to_string()) };
    let head = &compact[..q];
    let mut spec = compact[q + 1..].chars();
    let mut prefix = String::from("'");
    let mut c = spec.next()?;
    if c == 's' || c == 'S' {
        prefix.push(c);
        c = spec.next()?;
    }
    prefix.push(c);
    let width = spec.as_str().len();
    let digits = match c.to_ascii_lowercase() {
        'b' => v.to_str_radix(2),
        'o' => v.to_str_radix(8),
        'h' => v.to_str_radix(16),
        _ => v.to_str_radix(10),
    };
    Some(format!("{head}{prefix}{digits:0>width$}"))
}

fn leftmost_loc(e: &Expr) -> Option<Loc> {
    match e {
        Expr::Name { loc, .. } | Expr::Number { loc, .. } => Some(*loc),
        Expr::Binary { lhs, .. } => leftmost_loc(lhs),
        Expr::Ternary { cond, .. } => leftmost_loc(cond),
        Expr::Unary { loc, .. } => Some(*loc),
        Expr::Index { base, .. } | Expr::Slice { base, .. } => leftmost_loc(base),
        other => other.children().into_iter().find_map(leftmost_loc),
    }
}

#[derive(Debug, Clone)]
struct Candidate {
    operator: Operator,
    loc: Option<Loc>,
    original: String,
    mutated: String,
}

/// Walks a module in a fixed order, numbering candidates and applying
/// the one at `target`.
struct Walker<'w> {
    target: Option<usize>,
    counter: usize,
    found: Vec<Candidate>,
    widths: &'w BTreeMap<String, Option<u32>>,
}

impl Walker<'_> {
    /// Register a candidate; returns true if it is the one to apply.
    fn offer(&mut self, c: Candidate) -> bool {
        let k = self.counter;
        self.counter += 1;
        if self.target.is_none() {
            self.found.push(c);
            false
        } else {
            self.target == Some(k)
        }
    }

    fn value_expr(&mut self, e: &mut Expr) {
        match e {
            Expr::Binary { op, lhs, rhs, loc } => {
                if let Some(new) = swapped(*op) {
                    let c = Candidate {
                        operator: Operator::BinopReplace,
                        loc: Some(*loc),
                        original: op.symbol().into(),
                        mutated: new.symbol().into(),
                    };
                    if self.offer(c) {
                        *op = new;
                    }
                }
                self.value_expr(lhs);
                self.value_expr(rhs);
            }
            Expr::Number { text, loc } => {
                if let Some(new) = flip_literal(text) {
                    let c = Candidate { operator: Operator::ConstantFlip, loc: Some(*loc), original: text.clone(), mutated: new.clone() };
                    if self.offer(c) {
                        *text = new;
                    }
                }
            }
            Expr::Ternary { cond, then_expr, else_expr, .. } => {
                self.condition(cond);
                self.value_expr(then_expr);
                self.value_expr(else_expr);
            }
            Expr::Unary { operand, .. } => self.value_expr(operand),
            Expr::Paren { inner } => self.value_expr(inner),
            Expr::Concat { items } => items.iter_mut().for_each(|i| self.value_expr(i)),
            Expr::Replicate { items, .. } => items.iter_mut().for_each(|i| self.value_expr(i)),
            // selects, names, calls: indices and bounds are left alone
            _ => {}
        }
    }

    fn condition(&mut self, cond: &mut Expr) {
        if let Expr::Unary { op: UnaryOp::LogicNot, operand, loc } = cond {
            let c = Candidate { operator: Operator::ConditionInvert, loc: Some(*loc), original: "!".into(), mutated: String::new() };
            if self.offer(c) {
                *cond = (**operand).clone();
                return;
            }
        } else if cond.is_primary() {
            let c = Candidate { operator: Operator::ConditionInvert, loc: leftmost_loc(cond), original: String::new(), mutated: "!".into() };
            if self.offer(c) {
                *cond = Expr::unary(UnaryOp::LogicNot, cond.clone());
                return;
            }
        }
        self.value_expr(cond);
    }

    fn rhs(&mut self, rhs: &mut Expr) {
        if rhs.is_primary() && !matches!(rhs, Expr::Number { .. } | Expr::Str { .. } | Expr::Call { .. }) {
            let c = Candidate { operator: Operator::UnaryNegateInsert, loc: leftmost_loc(rhs), original: String::new(), mutated: "~".into() };
            if self.offer(c) {
                *rhs = Expr::unary(UnaryOp::BitNot, rhs.clone());
                return;
            }
        }
        self.value_expr(rhs);
    }

    fn stmt(&mut self, s: &mut Stmt, targets: &[String]) {
        match s {
            Stmt::Block { stmts, .. } => stmts.iter_mut().for_each(|st| self.stmt(st, targets)),
            Stmt::If { cond, then_branch, else_branch, .. } => {
                self.condition(cond);
                self.stmt(then_branch, targets);
                if let Some(e) = else_branch {
                    self.stmt(e, targets);
                }
            }
            Stmt::Case { items, .. } => {
                for it in items {
                    self.stmt(&mut it.body, targets);
                }
            }
            Stmt::Assign { lhs, rhs, .. } => {
                if let Some(name) = lhs.as_name().filter(|n| !n.contains('.')) {
                    let w = self.widths.get(&name).copied().flatten();
                    for other in targets {
                        if *other == name || w.is_none() || self.widths.get(other).copied().flatten() != w {
                            continue;
                        }
                        let c = Candidate {
                            operator: Operator::AssignmentTargetSwap,
                            loc: leftmost_loc(lhs),
                            original: name.clone(),
                            mutated: other.clone(),
                        };
                        if self.offer(c) {
                            *lhs = Expr::ident(other);
                        }
                    }
                }
                self.rhs(rhs);
            }
            Stmt::For { body, .. } => self.stmt(body, targets),
            Stmt::SystemCall { .. } | Stmt::Null => {}
        }
    }

    fn module(&mut self, m: &mut ModuleDecl) {
        for item in &mut m.items {
            match &mut item.kind {
                ItemKind::Assign(a) => self.rhs(&mut a.rhs),
                ItemKind::Always(a) => {
                    let mut targets: Vec<String> = a.body.writes().into_iter().filter(|n| !n.contains('.')).collect();
                    targets.sort();
                    targets.dedup();
                    self.stmt(&mut a.body, &targets);
                }
                _ => {}
            }
        }
    }
}

fn widths_of(m: &ModuleDecl) -> BTreeMap<String, Option<u32>> {
    m.signal_names().into_iter().map(|n| (n.clone(), m.signal_width(&n).and_then(Width::bits))).collect()
}

fn walk(m: &mut ModuleDecl, target: Option<usize>) -> Vec<Candidate> {
    let widths = widths_of(m);
    let mut w = Walker { target, counter: 0, found: Vec::new(), widths: &widths };
    w.module(m);
    w.found
}

fn token_texts(text: &str) -> Option<Vec<&str>> {
    let toks = lex(text).ok()?;
    Some(toks.iter().map(|t| &text[t.start..t.end]).filter(|s| !s.is_empty()).collect())
}

/// Whether `a` and `b` differ in exactly one token span of at most one
/// token on each side.
pub fn single_token_diff(a: &str, b: &str) -> bool {
    let (Some(x), Some(y)) = (token_texts(a), token_texts(b)) else { return false };
    let pre = x.iter().zip(&y).take_while(|(p, q)| p == q).count();
    let max_suf = x.len().min(y.len()) - pre;
    let suf = x.iter().rev().zip(y.iter().rev()).take(max_suf).take_while(|(p, q)| p == q).count();
    let (dx, dy) = (x.len() - pre - suf, y.len() - pre - suf);
    dx <= 1 && dy <= 1 && dx + dy > 0
}

/// Apply one mutation to a copy of the design.
pub fn apply_mutation(unit: &SourceUnit, m: &Mutation) -> Result<SourceUnit, MutationError> {
    let mut out = unit.clone();
    let module = out.module_mut(&m.site.module).ok_or_else(|| MutationError::StaleMutation(m.id.clone()))?;
    let before = module.clone();
    walk(module, Some(m.point));
    if *module == before {
        return Err(MutationError::StaleMutation(m.id.clone()));
    }
    Ok(out)
}

fn eligible(unit: &SourceUnit) -> Vec<(String, usize, Candidate)> {
    let mut out = Vec::new();
    for m in &unit.modules {
        let mut probe = m.clone();
        let cands = walk(&mut probe, None);
        let original = emit_module(m);
        for (k, c) in cands.into_iter().enumerate() {
            let mut mutant = m.clone();
            walk(&mut mutant, Some(k));
            let text = emit_module(&mutant);
            if !single_token_diff(&original, &text) {
                continue;
            }
            let reparsed = parse_verilog(&[("mutant.v".into(), text)], &Default::default());
            if reparsed.errors().next().is_some() || reparsed.modules.len() != 1 {
                continue;
            }
            out.push((m.name.name.clone(), k, c));
        }
    }
    out
}

/// Sample up to `budget` mutations. Every module with eligible sites gets
/// one before any module gets a second; the rest are drawn uniformly.
pub fn enumerate_mutations(unit: &SourceUnit, budget: usize, seed: u64) -> Result<Vec<Mutation>, MutationError> {
    if budget == 0 {
        return Ok(Vec::new());
    }
    let all = eligible(unit);
    if all.is_empty() {
        return Err(MutationError::NoEligibleSites);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut by_module: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, (m, _, _)) in all.iter().enumerate() {
        by_module.entry(m.as_str()).or_default().push(i);
    }
    let mut modules: Vec<&str> = by_module.keys().copied().collect();
    modules.shuffle(&mut rng);
    let mut chosen: Vec<usize> = Vec::new();
    for m in modules.iter().take(budget) {
        let pick = *by_module[m].choose(&mut rng).unwrap();
        chosen.push(pick);
    }
    if chosen.len() < budget {
        let mut rest: Vec<usize> = (0..all.len()).filter(|i| !chosen.contains(i)).collect();
        rest.shuffle(&mut rng);
        chosen.extend(rest.into_iter().take(budget - chosen.len()));
    }
    let file_of = |name: &str| unit.module(name).map(|m| m.file.clone()).unwrap_or_default();
    let mut muts: Vec<Mutation> = chosen
        .into_iter()
        .map(|i| {
            let (module, point, c) = &all[i];
            let loc = c.loc.unwrap_or_default();
            Mutation {
                id: String::new(),
                operator: c.operator,
                site: Site { module: module.clone(), file: file_of(module), line: loc.line, col: loc.col },
                original: c.original.clone(),
                mutated: c.mutated.clone(),
                point: *point,
            }
        })
        .collect();
    muts.sort_by(|a, b| (&a.site, a.point).cmp(&(&b.site, b.point)));
    for (i, m) in muts.iter_mut().enumerate() {
        m.id = format!("m{:04}", i + 1);
    }
    Ok(muts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verilog::{emit_unit, resolve_widths};

    fn unit(src: &str) -> SourceUnit {
        let mut u = parse_verilog(&[("t.v".into(), src.into())], &Default::default());
        resolve_widths(&mut u);
        u
    }

    #[test]
    fn literal_flips() {
        assert_eq!(flip_literal("1'b0").as_deref(), Some("1'b1"));
        assert_eq!(flip_literal("8'h80").as_deref(), Some("8'h81"));
        assert_eq!(flip_literal("3").as_deref(), Some("2"));
        assert_eq!(flip_literal("16'h0810").as_deref(), Some("16'h0811"));
        assert_eq!(flip_literal("4'bx01"), None);
    }

    #[test]
    fn and_gate_has_one_site() {
        let u = unit("module g(input a, input c, output b);\nassign b = a & c;\nendmodule\n");
        let m = enumerate_mutations(&u, 1, 7).unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!((m[0].operator, m[0].original.as_str(), m[0].mutated.as_str()), (Operator::BinopReplace, "&", "|"));
        assert_eq!((m[0].site.line, m[0].site.col), (2, 14));
        let mutant = apply_mutation(&u, &m[0]).unwrap();
        assert!(emit_unit(&mutant).contains("assign b = a | c;"));
    }

    #[test]
    fn parenthesis_sensitive_swaps_are_skipped() {
        // `a & b ^ c` → `a | b ^ c` would regroup without new parentheses
        let u = unit("module g(input a, input b, input c, output y);\nassign y = a & b ^ c;\nendmodule\n");
        assert!(matches!(enumerate_mutations(&u, 10, 1), Err(MutationError::NoEligibleSites)));
    }

    #[test]
    fn no_sites_is_an_error() {
        let u = unit("module g(input a, output y);\nendmodule\n");
        assert!(matches!(enumerate_mutations(&u, 3, 1), Err(MutationError::NoEligibleSites)));
        assert!(enumerate_mutations(&u, 0, 1).unwrap().is_empty());
    }

    #[test]
    fn diff_spans() {
        assert!(single_token_diff("a = b & c;", "a = b | c;"));
        assert!(single_token_diff("if (i) x", "if (!i) x"));
        assert!(!single_token_diff("a = b;", "a = b;"));
        assert!(!single_token_diff("a = b & c;", "a = (b | c);"));
    }
}
