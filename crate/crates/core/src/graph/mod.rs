// SPDX-License-Identifier: Apache-2.0

//! Module hierarchy, port tables, signal propagation and cones of
//! influence.

mod digest;

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::verilog::{
    Direction, Expr, ItemKind, ModuleDecl, PortRef, SourceUnit, Width,
};

pub use digest::relationship_digest;

pub const GRAPH_SCHEMA: &str = "design_graph.v1";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("design has no modules")]
    EmptyDesign,
    #[error("recursive instantiation: {}", cycle.join(" -> "))]
    RecursiveInstantiation { cycle: Vec<String> },
    #[error("ambiguous root; candidates: {}", candidates.join(", "))]
    AmbiguousRoot { candidates: Vec<String> },
    #[error("unknown module `{0}`")]
    UnknownModule(String),
    #[error("unknown signal(s): {}", .0.join(", "))]
    UnknownSignal(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct InstanceEdge {
    pub parent: String,
    pub instance: String,
    pub child: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PortView {
    pub name: String,
    pub direction: Direction,
    pub width: Width,
    pub signed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalKind {
    Port,
    Wire,
    Variable,
    /// Used in a connection or assignment without a declaration.
    Implicit,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignalInfo {
    pub name: String,
    pub kind: SignalKind,
    pub width: Width,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SignalRef {
    pub module: String,
    /// Instance path, starting with the root module name.
    pub path: String,
    pub signal: String,
}

impl SignalRef {
    pub fn hier(&self) -> String {
        format!("{}.{}", self.path, self.signal)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HopVia {
    PortConnection,
    Assign,
    Always,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SignalHop {
    pub from: SignalRef,
    pub to: SignalRef,
    pub via: HopVia,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DepKind {
    Comb,
    Seq,
    Boundary,
}

/// `sink` in `module` depends on `source` in `source_module`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Dependency {
    pub module: String,
    pub sink: String,
    pub source_module: String,
    pub source: String,
    pub kind: DepKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceNode {
    pub path: String,
    pub module: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DesignGraph {
    pub root: String,
    pub nodes: Vec<String>,
    pub edges: Vec<InstanceEdge>,
    pub ports: BTreeMap<String, Vec<PortView>>,
    pub hops: Vec<SignalHop>,
    pub dependency: Vec<Dependency>,
    pub signals: BTreeMap<String, Vec<SignalInfo>>,
    pub instances: Vec<InstanceNode>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    #[serde(skip)]
    fanin: BTreeMap<String, BTreeSet<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConeOfInfluence {
    pub seed_signals: BTreeSet<String>,
    pub members: BTreeSet<String>,
    pub size: usize,
}

/// Build the design graph. The root is the only module that is never
/// instantiated, unless `root_override` names one.
pub fn extract_relationships(unit: &SourceUnit, root_override: Option<&str>) -> Result<DesignGraph, GraphError> {
    if unit.modules.is_empty() {
        return Err(GraphError::EmptyDesign);
    }
    let defined: BTreeMap<&str, &ModuleDecl> = unit.modules.iter().map(|m| (m.name.name.as_str(), m)).collect();
    let mut warnings = Vec::new();

    // module-type graph, with black-box children reported and skipped
    let mut children: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    let mut instantiated = BTreeSet::new();
    for m in &unit.modules {
        let list = children.entry(m.name.name.as_str()).or_default();
        for inst in m.instances() {
            if defined.contains_key(inst.child_module.name.as_str()) {
                list.push(inst.child_module.name.as_str());
                instantiated.insert(inst.child_module.name.as_str());
            } else {
                warnings.push(format!(
                    "instance `{}.{}` of undefined module `{}` treated as a black box",
                    m.name, inst.instance_name, inst.child_module
                ));
            }
        }
    }
    check_acyclic(&children)?;

    let root = match root_override {
        Some(r) => {
            if !defined.contains_key(r) {
                return Err(GraphError::UnknownModule(r.to_string()));
            }
            r.to_string()
        }
        None => {
            let candidates: Vec<String> = unit
                .modules
                .iter()
                .map(|m| m.name.name.clone())
                .filter(|n| !instantiated.contains(n.as_str()))
                .collect();
            match candidates.len() {
                1 => candidates[0].clone(),
                _ => {
                    let mut candidates = candidates;
                    candidates.sort();
                    return Err(GraphError::AmbiguousRoot { candidates });
                }
            }
        }
    };

    // modules reachable from the root
    let mut reachable = BTreeSet::new();
    let mut stack = vec![root.as_str()];
    while let Some(m) = stack.pop() {
        if reachable.insert(m) {
            stack.extend(children[m].iter().copied());
        }
    }
    let nodes: Vec<String> = reachable.iter().map(|s| s.to_string()).collect();

    let mut edges = Vec::new();
    let mut ports = BTreeMap::new();
    let mut signals = BTreeMap::new();
    let mut dependency = Vec::new();
    for name in &nodes {
        let m = defined[name.as_str()];
        for inst in m.instances() {
            if defined.contains_key(inst.child_module.name.as_str()) {
                edges.push(InstanceEdge {
                    parent: name.clone(),
                    instance: inst.instance_name.name.clone(),
                    child: inst.child_module.name.clone(),
                });
            }
        }
        ports.insert(
            name.clone(),
            m.ports
                .iter()
                .map(|p| PortView {
                    name: p.name.name.clone(),
                    direction: p.direction,
                    width: p.width.unwrap_or(Width::Unknown),
                    signed: p.signed,
                })
                .collect::<Vec<_>>(),
        );
        signals.insert(name.clone(), module_signals(m));
        dependency.extend(module_dependencies(m, &defined));
    }
    edges.sort();
    dependency.sort();
    dependency.dedup();

    // elaborate instance tree and instance-level hops
    let mut instances = Vec::new();
    let mut hops = Vec::new();
    let mut queue = VecDeque::from([(root.clone(), root.clone())]);
    while let Some((path, mname)) = queue.pop_front() {
        let m = defined[mname.as_str()];
        let sigs: BTreeSet<&str> = signals[&mname].iter().map(|s| s.name.as_str()).collect();
        let at = |signal: &str| SignalRef { module: mname.clone(), path: path.clone(), signal: signal.to_string() };
        for item in &m.items {
            match &item.kind {
                ItemKind::Assign(a) => {
                    let reads = known(&a.rhs.names(), &sigs);
                    let mut reads = reads;
                    reads.extend(known(&crate::verilog::lvalue_index_reads(&a.lhs), &sigs));
                    for w in known(&crate::verilog::lvalue_targets(&a.lhs), &sigs) {
                        for r in &reads {
                            hops.push(SignalHop { from: at(r), to: at(&w), via: HopVia::Assign });
                        }
                    }
                }
                ItemKind::Always(a) => {
                    let reads = known(&a.body.reads(), &sigs);
                    for w in known(&a.body.writes(), &sigs) {
                        for r in &reads {
                            hops.push(SignalHop { from: at(r), to: at(&w), via: HopVia::Always });
                        }
                    }
                }
                ItemKind::Net(n) => {
                    for nm in &n.names {
                        if let Some(init) = &nm.init {
                            if n.kind.is_variable() {
                                continue;
                            }
                            for r in known(&init.names(), &sigs) {
                                hops.push(SignalHop { from: at(&r), to: at(&nm.name.name), via: HopVia::Assign });
                            }
                        }
                    }
                }
                _ => {}
            }
        }
        for inst in m.instances() {
            let Some(child) = defined.get(inst.child_module.name.as_str()) else { continue };
            let cpath = format!("{path}.{}", inst.instance_name.name);
            let cat = |signal: &str| SignalRef {
                module: child.name.name.clone(),
                path: cpath.clone(),
                signal: signal.to_string(),
            };
            for c in &inst.connections {
                let (PortRef::Named(pn), Some(expr)) = (&c.port, &c.expr) else { continue };
                let Some(port) = child.port(&pn.name) else { continue };
                let names = known(&expr.names(), &sigs);
                for n in &names {
                    if matches!(port.direction, Direction::Input | Direction::Inout) {
                        hops.push(SignalHop { from: at(n), to: cat(&pn.name), via: HopVia::PortConnection });
                    }
                    if matches!(port.direction, Direction::Output | Direction::Inout) {
                        hops.push(SignalHop { from: cat(&pn.name), to: at(n), via: HopVia::PortConnection });
                    }
                }
            }
            queue.push_back((cpath, child.name.name.clone()));
        }
        instances.push(InstanceNode { path: path.clone(), module: mname.clone() });
    }
    hops.sort();
    hops.dedup();

    let mut g = DesignGraph {
        root,
        nodes,
        edges,
        ports,
        hops,
        dependency,
        signals,
        instances,
        warnings,
        fanin: BTreeMap::new(),
    };
    g.index();
    Ok(g)
}

fn known(names: &[String], sigs: &BTreeSet<&str>) -> Vec<String> {
    let mut out: Vec<String> = names.iter().filter(|n| sigs.contains(n.as_str())).cloned().collect();
    out.sort();
    out.dedup();
    out
}

fn check_acyclic(children: &BTreeMap<&str, Vec<&str>>) -> Result<(), GraphError> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Active,
        Done,
    }
    fn visit<'a>(
        m: &'a str,
        children: &BTreeMap<&'a str, Vec<&'a str>>,
        marks: &mut BTreeMap<&'a str, Mark>,
        stack: &mut Vec<&'a str>,
    ) -> Result<(), GraphError> {
        match marks.get(m) {
            Some(Mark::Done) => return Ok(()),
            Some(Mark::Active) => {
                let start = stack.iter().position(|s| *s == m).unwrap();
                let mut cycle: Vec<String> = stack[start..].iter().map(|s| s.to_string()).collect();
                cycle.push(m.to_string());
                return Err(GraphError::RecursiveInstantiation { cycle });
            }
            None => {}
        }
        marks.insert(m, Mark::Active);
        stack.push(m);
        for c in children.get(m).into_iter().flatten() {
            visit(c, children, marks, stack)?;
        }
        stack.pop();
        marks.insert(m, Mark::Done);
        Ok(())
    }
    let mut marks = BTreeMap::new();
    for m in children.keys() {
        visit(m, children, &mut marks, &mut Vec::new())?;
    }
    Ok(())
}

fn module_signals(m: &ModuleDecl) -> Vec<SignalInfo> {
    let mut out: Vec<SignalInfo> = m
        .ports
        .iter()
        .map(|p| SignalInfo {
            name: p.name.name.clone(),
            kind: SignalKind::Port,
            width: p.width.unwrap_or(Width::Unknown),
        })
        .collect();
    for (decl, n) in m.nets() {
        if out.iter().any(|s| s.name == n.name.name) {
            continue;
        }
        out.push(SignalInfo {
            name: n.name.name.clone(),
            kind: if decl.kind.is_variable() { SignalKind::Variable } else { SignalKind::Wire },
            width: decl.width.unwrap_or(Width::Unknown),
        });
    }
    let params: BTreeSet<String> = m.all_params().map(|(_, n, _)| n.name.clone()).collect();
    let mut implicit = BTreeSet::new();
    for item in &m.items {
        let names: Vec<String> = match &item.kind {
            ItemKind::Assign(a) => crate::verilog::lvalue_targets(&a.lhs),
            ItemKind::Instance(i) => i.connections.iter().filter_map(|c| c.expr.as_ref()).flat_map(Expr::names).collect(),
            _ => vec![],
        };
        for n in names {
            if !n.contains('.') && !params.contains(&n) && !out.iter().any(|s| s.name == n) {
                implicit.insert(n);
            }
        }
    }
    out.extend(implicit.into_iter().map(|name| SignalInfo { name, kind: SignalKind::Implicit, width: Width::Scalar }));
    out
}

/// Per-module-type fan-in pairs.
fn module_dependencies(m: &ModuleDecl, defined: &BTreeMap<&str, &ModuleDecl>) -> Vec<Dependency> {
    let mname = m.name.name.clone();
    let sigs: Vec<SignalInfo> = module_signals(m);
    let sigs: BTreeSet<&str> = sigs.iter().map(|s| s.name.as_str()).collect();
    let mut out = Vec::new();
    let mut add = |sink: &str, source_module: &str, source: &str, kind: DepKind| {
        out.push(Dependency {
            module: mname.clone(),
            sink: sink.to_string(),
            source_module: source_module.to_string(),
            source: source.to_string(),
            kind,
        });
    };
    for item in &m.items {
        match &item.kind {
            ItemKind::Assign(a) => {
                let mut reads = known(&a.rhs.names(), &sigs);
                reads.extend(known(&crate::verilog::lvalue_index_reads(&a.lhs), &sigs));
                for w in known(&crate::verilog::lvalue_targets(&a.lhs), &sigs) {
                    for r in &reads {
                        add(&w, &m.name.name, r, DepKind::Comb);
                    }
                }
            }
            ItemKind::Always(a) => {
                let kind = if a.sensitivity.as_ref().is_some_and(|s| s.is_edge_triggered()) {
                    DepKind::Seq
                } else {
                    DepKind::Comb
                };
                let reads = known(&a.body.reads(), &sigs);
                for w in known(&a.body.writes(), &sigs) {
                    for r in &reads {
                        add(&w, &m.name.name, r, kind);
                    }
                }
            }
            ItemKind::Net(n) if !n.kind.is_variable() => {
                for nm in &n.names {
                    if let Some(init) = &nm.init {
                        for r in known(&init.names(), &sigs) {
                            add(&nm.name.name, &m.name.name, &r, DepKind::Comb);
                        }
                    }
                }
            }
            ItemKind::Instance(inst) => {
                let Some(child) = defined.get(inst.child_module.name.as_str()) else { continue };
                for c in &inst.connections {
                    let (PortRef::Named(pn), Some(expr)) = (&c.port, &c.expr) else { continue };
                    let Some(port) = child.port(&pn.name) else { continue };
                    for n in known(&expr.names(), &sigs) {
                        if matches!(port.direction, Direction::Output | Direction::Inout) {
                            add(&n, &child.name.name, &pn.name, DepKind::Boundary);
                        }
                    }
                }
            }
            _ => {}
        }
    }
    // child input ports depend on the parent nets wired to them
    for parent in defined.values() {
        for inst in parent.instances().filter(|i| i.child_module.name == m.name.name) {
            let psigs = module_signals(parent);
            let psigs: BTreeSet<&str> = psigs.iter().map(|s| s.name.as_str()).collect();
            for c in &inst.connections {
                let (PortRef::Named(pn), Some(expr)) = (&c.port, &c.expr) else { continue };
                let Some(port) = m.port(&pn.name) else { continue };
                if matches!(port.direction, Direction::Input | Direction::Inout) {
                    for n in known(&expr.names(), &psigs) {
                        add(&pn.name, &parent.name.name, &n, DepKind::Boundary);
                    }
                }
            }
        }
    }
    out
}

impl DesignGraph {
    fn index(&mut self) {
        let mut fanin: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for h in &self.hops {
            fanin.entry(h.to.hier()).or_default().insert(h.from.hier());
        }
        self.fanin = fanin;
    }

    /// Re-derive lookup tables after deserialization.
    pub fn reindex(&mut self) {
        self.index();
    }

    pub fn has_module(&self, name: &str) -> bool {
        self.nodes.iter().any(|n| n == name)
    }

    /// Every hierarchical signal name in the elaborated design.
    pub fn all_signals(&self) -> Vec<String> {
        let mut out = Vec::new();
        for inst in &self.instances {
            for s in &self.signals[&inst.module] {
                out.push(format!("{}.{}", inst.path, s.name));
            }
        }
        out.sort();
        out
    }

    /// Instance paths of a module type, in elaboration order.
    pub fn instance_paths(&self, module: &str) -> Vec<&str> {
        self.instances.iter().filter(|i| i.module == module).map(|i| i.path.as_str()).collect()
    }

    pub fn module_at(&self, path: &str) -> Option<&str> {
        self.instances.iter().find(|i| i.path == path).map(|i| i.module.as_str())
    }

    pub fn signal_info(&self, module: &str, signal: &str) -> Option<&SignalInfo> {
        self.signals.get(module)?.iter().find(|s| s.name == signal)
    }

    /// Resolve a user-facing name to hierarchical signals. Accepts a full
    /// path (`top.u1.x`), a path relative to the root (`u1.x`), or a
    /// module-qualified name (`leaf.x`, one result per instance).
    pub fn resolve(&self, name: &str) -> Vec<String> {
        let Some((prefix, signal)) = name.rsplit_once('.') else { return vec![] };
        if let Some(m) = self.module_at(prefix) {
            if self.signal_info(m, signal).is_some() {
                return vec![name.to_string()];
            }
        }
        let rel = format!("{}.{}", self.root, prefix);
        if let Some(m) = self.module_at(&rel) {
            if self.signal_info(m, signal).is_some() {
                return vec![format!("{rel}.{signal}")];
            }
        }
        if self.has_module(prefix) && self.signal_info(prefix, signal).is_some() {
            return self.instance_paths(prefix).into_iter().map(|p| format!("{p}.{signal}")).collect();
        }
        vec![]
    }

    /// Direct structural fan-in of a hierarchical signal.
    pub fn fanin(&self, hier: &str) -> impl Iterator<Item = &String> {
        self.fanin.get(hier).into_iter().flatten()
    }

    pub fn children_of(&self, module: &str) -> Vec<&InstanceEdge> {
        let mut v: Vec<&InstanceEdge> = self.edges.iter().filter(|e| e.parent == module).collect();
        v.sort_by(|a, b| a.instance.cmp(&b.instance));
        v
    }

    pub fn parents_of(&self, module: &str) -> Vec<&InstanceEdge> {
        self.edges.iter().filter(|e| e.child == module).collect()
    }

    /// Module types ordered so every child precedes its parents; ties are
    /// broken by name.
    pub fn children_first(&self) -> Vec<String> {
        let mut done: BTreeSet<String> = BTreeSet::new();
        let mut out = Vec::new();
        while out.len() < self.nodes.len() {
            for n in &self.nodes {
                if done.contains(n) {
                    continue;
                }
                if self.children_of(n).iter().all(|e| done.contains(&e.child)) {
                    done.insert(n.clone());
                    out.push(n.clone());
                }
            }
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("graph serializes");
        v.as_object_mut().unwrap().insert("schema".into(), GRAPH_SCHEMA.into());
        v
    }
}

/// Transitive structural fan-in of `seeds`, crossing instance boundaries.
pub fn cone_of_influence<S: AsRef<str>>(graph: &DesignGraph, seeds: &[S]) -> Result<ConeOfInfluence, GraphError> {
    let mut seed_signals = BTreeSet::new();
    let mut missing = Vec::new();
    for s in seeds {
        let r = graph.resolve(s.as_ref());
        if r.is_empty() {
            missing.push(s.as_ref().to_string());
        }
        seed_signals.extend(r);
    }
    if !missing.is_empty() {
        return Err(GraphError::UnknownSignal(missing));
    }
    let mut members = seed_signals.clone();
    let mut work: Vec<String> = seed_signals.iter().cloned().collect();
    while let Some(s) = work.pop() {
        for f in graph.fanin(&s) {
            if members.insert(f.clone()) {
                work.push(f.clone());
            }
        }
    }
    let size = members.len();
    Ok(ConeOfInfluence { seed_signals, members, size })
}
