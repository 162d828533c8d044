// SPDX-License-Identifier: Apache-2.0

//! A deliberately naive relationship extractor: recursive descent over the
//! instance tree with its own name and statement walkers.

use std::collections::{BTreeMap, BTreeSet};

use modassert::graph::{DesignGraph, HopVia};
use modassert::verilog::{Direction, Expr, ItemKind, ModuleDecl, PortRef, SourceUnit, Stmt};

#[derive(Debug, PartialEq, Eq)]
pub struct Relations {
    /// (parent module, instance name, child module)
    pub edges: BTreeSet<(String, String, String)>,
    /// module → ports in declaration order
    pub ports: BTreeMap<String, Vec<(String, Direction)>>,
    /// (from hier, to hier, via)
    pub hops: BTreeSet<(String, String, String)>,
}

fn names(e: &Expr, out: &mut BTreeSet<String>) {
    match e {
        Expr::Name { parts, .. } => {
            out.insert(parts.iter().map(|p| p.name.clone()).collect::<Vec<_>>().join("."));
        }
        Expr::Number { .. } | Expr::Str { .. } => {}
        Expr::Index { base, index } => {
            names(base, out);
            names(index, out);
        }
        Expr::Slice { base, left, right, .. } => {
            names(base, out);
            names(left, out);
            names(right, out);
        }
        Expr::Concat { items } | Expr::Call { args: items, .. } => items.iter().for_each(|i| names(i, out)),
        Expr::Replicate { count, items } => {
            names(count, out);
            items.iter().for_each(|i| names(i, out));
        }
        Expr::Unary { operand, .. } => names(operand, out),
        Expr::Binary { lhs, rhs, .. } => {
            names(lhs, out);
            names(rhs, out);
        }
        Expr::Ternary { cond, then_expr, else_expr, .. } => {
            names(cond, out);
            names(then_expr, out);
            names(else_expr, out);
        }
        Expr::Paren { inner } => names(inner, out),
    }
}

/// Split an lvalue into (written base names, names read by its selects).
fn lvalue(e: &Expr, written: &mut BTreeSet<String>, read: &mut BTreeSet<String>) {
    match e {
        Expr::Name { .. } => names(e, written),
        Expr::Index { base, index } => {
            lvalue(base, written, read);
            names(index, read);
        }
        Expr::Slice { base, left, right, .. } => {
            lvalue(base, written, read);
            names(left, read);
            names(right, read);
        }
        Expr::Concat { items } => items.iter().for_each(|i| lvalue(i, written, read)),
        Expr::Paren { inner } => lvalue(inner, written, read),
        _ => {}
    }
}

fn stmt(s: &Stmt, written: &mut BTreeSet<String>, read: &mut BTreeSet<String>) {
    match s {
        Stmt::Block { stmts, .. } => stmts.iter().for_each(|x| stmt(x, written, read)),
        Stmt::If { cond, then_branch, else_branch, .. } => {
            names(cond, read);
            stmt(then_branch, written, read);
            if let Some(e) = else_branch {
                stmt(e, written, read);
            }
        }
        Stmt::Case { expr, items, .. } => {
            names(expr, read);
            for it in items {
                it.labels.iter().for_each(|l| names(l, read));
                stmt(&it.body, written, read);
            }
        }
        Stmt::Assign { lhs, rhs, .. } => {
            lvalue(lhs, written, read);
            names(rhs, read);
        }
        Stmt::For { init, cond, step, body } => {
            lvalue(&init.0, written, read);
            names(&init.1, read);
            names(cond, read);
            lvalue(&step.0, written, read);
            names(&step.1, read);
            stmt(body, written, read);
        }
        Stmt::SystemCall { .. } | Stmt::Null => {}
    }
}

/// Ports, declared nets, and undeclared names that appear as assign
/// targets or in instance connections.
fn local_signals(m: &ModuleDecl) -> BTreeSet<String> {
    let mut s: BTreeSet<String> = m.ports.iter().map(|p| p.name.name.clone()).collect();
    let mut params = BTreeSet::new();
    for item in &m.items {
        match &item.kind {
            ItemKind::Net(n) => s.extend(n.names.iter().map(|x| x.name.name.clone())),
            ItemKind::Param(p) => params.extend(p.assigns.iter().map(|(i, _)| i.name.clone())),
            _ => {}
        }
    }
    params.extend(m.header_params.iter().flat_map(|p| p.assigns.iter().map(|(i, _)| i.name.clone())));
    let mut extra = BTreeSet::new();
    for item in &m.items {
        match &item.kind {
            ItemKind::Assign(a) => lvalue(&a.lhs, &mut extra, &mut BTreeSet::new()),
            ItemKind::Instance(i) => i.connections.iter().filter_map(|c| c.expr.as_ref()).for_each(|e| names(e, &mut extra)),
            _ => {}
        }
    }
    s.extend(extra.into_iter().filter(|n| !n.contains('.') && !params.contains(n)));
    s
}

struct Walker<'a> {
    modules: BTreeMap<&'a str, &'a ModuleDecl>,
    out: Relations,
}

impl<'a> Walker<'a> {
    fn visit(&mut self, module: &str, path: &str) {
        let m = self.modules[module];
        let sigs = local_signals(m);
        self.out.ports.insert(module.to_string(), m.ports.iter().map(|p| (p.name.name.clone(), p.direction)).collect());
        let here = |s: &str| format!("{path}.{s}");
        let add = |hops: &mut BTreeSet<(String, String, String)>, from: String, to: String, via: &str| {
            hops.insert((from, to, via.to_string()));
        };
        for item in &m.items {
            let (written, read, via) = match &item.kind {
                ItemKind::Assign(a) => {
                    let (mut w, mut r) = (BTreeSet::new(), BTreeSet::new());
                    lvalue(&a.lhs, &mut w, &mut r);
                    names(&a.rhs, &mut r);
                    (w, r, "assign")
                }
                ItemKind::Always(a) => {
                    let (mut w, mut r) = (BTreeSet::new(), BTreeSet::new());
                    stmt(&a.body, &mut w, &mut r);
                    (w, r, "always")
                }
                ItemKind::Net(n) if !n.kind.is_variable() => {
                    for nm in &n.names {
                        if let Some(init) = &nm.init {
                            let mut r = BTreeSet::new();
                            names(init, &mut r);
                            for x in r.iter().filter(|x| sigs.contains(*x)) {
                                add(&mut self.out.hops, here(x), here(&nm.name.name), "assign");
                            }
                        }
                    }
                    continue;
                }
                _ => continue,
            };
            for w in written.iter().filter(|x| sigs.contains(*x)) {
                for r in read.iter().filter(|x| sigs.contains(*x)) {
                    add(&mut self.out.hops, here(r), here(w), via);
                }
            }
        }
        for item in &m.items {
            let ItemKind::Instance(inst) = &item.kind else { continue };
            let Some(child) = self.modules.get(inst.child_module.name.as_str()).copied() else { continue };
            let cpath = format!("{path}.{}", inst.instance_name.name);
            self.out.edges.insert((module.to_string(), inst.instance_name.name.clone(), child.name.name.clone()));
            for c in &inst.connections {
                let (PortRef::Named(pn), Some(e)) = (&c.port, &c.expr) else { continue };
                let Some(port) = child.ports.iter().find(|p| p.name.name == pn.name) else { continue };
                let mut r = BTreeSet::new();
                names(e, &mut r);
                for x in r.iter().filter(|x| sigs.contains(*x)) {
                    let (outer, inner) = (here(x), format!("{cpath}.{}", pn.name));
                    if port.direction != Direction::Output {
                        add(&mut self.out.hops, outer.clone(), inner.clone(), "port-connection");
                    }
                    if port.direction != Direction::Input {
                        add(&mut self.out.hops, inner, outer, "port-connection");
                    }
                }
            }
            self.visit(&child.name.name, &cpath);
        }
    }
}

pub fn brute_force(unit: &SourceUnit, root: &str) -> Relations {
    let modules = unit.modules.iter().map(|m| (m.name.name.as_str(), m)).collect();
    let mut w = Walker { modules, out: Relations { edges: BTreeSet::new(), ports: BTreeMap::new(), hops: BTreeSet::new() } };
    w.visit(root, root);
    w.out
}

pub fn from_graph(g: &DesignGraph) -> Relations {
    let via = |v: HopVia| match v {
        HopVia::PortConnection => "port-connection",
        HopVia::Assign => "assign",
        HopVia::Always => "always",
    };
    Relations {
        edges: g.edges.iter().map(|e| (e.parent.clone(), e.instance.clone(), e.child.clone())).collect(),
        ports: g.ports.iter().map(|(m, ps)| (m.clone(), ps.iter().map(|p| (p.name.clone(), p.direction)).collect())).collect(),
        hops: g.hops.iter().map(|h| (h.from.hier(), h.to.hier(), via(h.via).to_string())).collect(),
    }
}
