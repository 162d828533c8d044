// SPDX-License-Identifier: Apache-2.0

//! Flattened design and the cycle-based evaluation loop.

use std::collections::{BTreeMap, HashMap};
use std::time::Instant;

use num_bigint::BigUint;
use num_traits::One;

use super::{SimError, Stimulus};
use crate::trace::{WaveSignal, Waveform};
use crate::value::{eval, self_width, EvalEnv, EvalResult, Value};
use crate::verilog::number::parse_literal;
use crate::verilog::widths::{eval_const, ParamEnv};
use crate::verilog::{
    AlwaysKind, CaseKind, Direction, Edge, Expr, ItemKind, ModuleDecl, PortRef, Sensitivity, SliceKind, SourceUnit, Stmt,
};

const MAX_SETTLE_SWEEPS: usize = 1000;
const MAX_EDGE_ROUNDS: usize = 100;
const MAX_LOOP_ITERATIONS: usize = 100_000;

#[derive(Debug, Clone)]
struct Signal {
    name: String,
    width: u32,
    range: (i64, i64),
    /// `(first, last)` index of an unpacked array.
    array: Option<(i64, i64)>,
}

#[derive(Debug)]
struct Scope {
    path: String,
    params: HashMap<String, Value>,
    sigs: HashMap<String, usize>,
}

#[derive(Debug)]
enum Proc<'a> {
    /// Continuous assignment, possibly across a port boundary.
    Assign { rhs_scope: usize, rhs: Expr, lhs_scope: usize, lhs: Expr },
    Comb { scope: usize, body: &'a Stmt },
    Seq { scope: usize, triggers: Vec<(Edge, usize)>, body: &'a Stmt },
}

/// An elaborated design ready to simulate.
#[derive(Debug)]
pub struct Design<'a> {
    root: String,
    signals: Vec<Signal>,
    scopes: Vec<Scope>,
    procs: Vec<Proc<'a>>,
    inputs: BTreeMap<String, usize>,
    timescale: Option<String>,
}

struct ParamValues<'a>(&'a HashMap<String, Value>);

impl EvalEnv for ParamValues<'_> {
    fn signal(&self, name: &str) -> Option<Value> {
        self.0.get(name).cloned()
    }
}

fn to_param_env(p: &HashMap<String, Value>) -> ParamEnv {
    p.iter().filter_map(|(k, v)| v.to_u64().map(|x| (k.clone(), x as i64))).collect()
}

fn elab_err(path: &str, msg: impl std::fmt::Display) -> SimError {
    SimError::Elaboration(format!("{path}: {msg}"))
}

impl<'a> Design<'a> {
    pub fn elaborate(unit: &'a SourceUnit, top: Option<&str>) -> Result<Design<'a>, SimError> {
        let graph = crate::graph::extract_relationships(unit, top).map_err(|e| SimError::Elaboration(e.to_string()))?;
        let root = unit.module(&graph.root).ok_or_else(|| SimError::Elaboration(format!("no module `{}`", graph.root)))?;
        let mut d = Design {
            root: graph.root.clone(),
            signals: Vec::new(),
            scopes: Vec::new(),
            procs: Vec::new(),
            inputs: BTreeMap::new(),
            timescale: unit.files.iter().find(|f| f.path == root.file).and_then(|f| f.timescale.clone()),
        };
        d.instantiate(unit, root, graph.root.clone(), HashMap::new())?;
        for p in &root.ports {
            if p.direction != Direction::Output {
                d.inputs.insert(p.name.name.clone(), d.scopes[0].sigs[&p.name.name]);
            }
        }
        Ok(d)
    }

    fn instantiate(
        &mut self,
        unit: &'a SourceUnit,
        m: &'a ModuleDecl,
        path: String,
        overrides: HashMap<String, Value>,
    ) -> Result<usize, SimError> {
        // parameters
        let mut params: HashMap<String, Value> = HashMap::new();
        for (local, name, default) in m.all_params() {
            if !local {
                if let Some(v) = overrides.get(&name.name) {
                    params.insert(name.name.clone(), v.clone());
                    continue;
                }
            }
            if matches!(default, Expr::Str { .. }) {
                continue;
            }
            let v = eval(default, &ParamValues(&params), 0).map_err(|e| elab_err(&path, format!("parameter `{name}`: {e}")))?;
            params.insert(name.name.clone(), v);
        }
        let penv = to_param_env(&params);
        let range_of = |r: Option<&crate::verilog::Range>, integer: bool| -> Result<(i64, i64), SimError> {
            match r {
                Some(r) => Ok((
                    eval_const(&r.msb, &penv).map_err(|e| elab_err(&path, e))?,
                    eval_const(&r.lsb, &penv).map_err(|e| elab_err(&path, e))?,
                )),
                None if integer => Ok((31, 0)),
                None => Ok((0, 0)),
            }
        };
        let mut sigs = HashMap::new();
        let mut declare = |this: &mut Self, name: &str, range: (i64, i64), array: Option<(i64, i64)>| {
            if sigs.contains_key(name) {
                return;
            }
            let width = (range.0 - range.1).unsigned_abs() as u32 + 1;
            this.signals.push(Signal { name: format!("{path}.{name}"), width, range, array });
            sigs.insert(name.to_string(), this.signals.len() - 1);
        };
        // body declarations may refine a non-ANSI port's range
        let mut decl_ranges: HashMap<&str, (Option<&crate::verilog::Range>, bool, Option<(i64, i64)>)> = HashMap::new();
        for (decl, n) in m.nets() {
            let array = match n.dims.first() {
                Some(r) => Some((
                    eval_const(&r.msb, &penv).map_err(|e| elab_err(&path, e))?,
                    eval_const(&r.lsb, &penv).map_err(|e| elab_err(&path, e))?,
                )),
                None => None,
            };
            decl_ranges.insert(&n.name.name, (decl.range.as_ref(), decl.kind == crate::verilog::NetKind::Integer, array));
        }
        for p in &m.ports {
            let r = match (&p.range, decl_ranges.get(p.name.name.as_str())) {
                (None, Some((Some(r), _, _))) => range_of(Some(r), false)?,
                _ => range_of(p.range.as_ref(), p.net_kind == Some(crate::verilog::NetKind::Integer))?,
            };
            declare(self, &p.name.name, r, None);
        }
        for (decl, n) in m.nets() {
            let r = range_of(decl.range.as_ref(), decl.kind == crate::verilog::NetKind::Integer)?;
            let array = decl_ranges[n.name.name.as_str()].2;
            declare(self, &n.name.name, r, array);
        }
        // implicit nets: bare names in connections and assignment targets
        for item in &m.items {
            let mut names: Vec<String> = Vec::new();
            match &item.kind {
                ItemKind::Assign(a) => names.extend(a.lhs.names()),
                ItemKind::Instance(i) => {
                    for c in &i.connections {
                        if let Some(e) = &c.expr {
                            names.extend(e.names());
                        }
                    }
                }
                _ => {}
            }
            for n in names {
                if !n.contains('.') && !params.contains_key(&n) {
                    declare(self, &n, (0, 0), None);
                }
            }
        }
        let scope = self.scopes.len();
        self.scopes.push(Scope { path: path.clone(), params, sigs });

        for item in &m.items {
            match &item.kind {
                ItemKind::Assign(a) => {
                    self.procs.push(Proc::Assign { rhs_scope: scope, rhs: a.rhs.clone(), lhs_scope: scope, lhs: a.lhs.clone() })
                }
                ItemKind::Net(decl) => {
                    for n in &decl.names {
                        if let Some(init) = &n.init {
                            if decl.kind.is_variable() {
                                continue;
                            }
                            let lhs = Expr::Name { parts: vec![n.name.clone()], loc: Default::default() };
                            self.procs.push(Proc::Assign { rhs_scope: scope, rhs: init.clone(), lhs_scope: scope, lhs });
                        }
                    }
                }
                ItemKind::Always(a) => match &a.sensitivity {
                    Some(s) if s.is_edge_triggered() => {
                        let Sensitivity::List(items) = s else { unreachable!() };
                        let mut triggers = Vec::new();
                        for it in items {
                            let Some(edge) = it.edge else { continue };
                            let n = it.expr.as_name().ok_or_else(|| elab_err(&path, "edge on a non-signal expression"))?;
                            let sig = *self.scopes[scope].sigs.get(&n).ok_or_else(|| elab_err(&path, format!("unknown signal `{n}`")))?;
                            triggers.push((edge, sig));
                        }
                        self.procs.push(Proc::Seq { scope, triggers, body: &a.body });
                    }
                    _ if a.kind == AlwaysKind::AlwaysFf => return Err(elab_err(&path, "always_ff without an edge")),
                    _ => self.procs.push(Proc::Comb { scope, body: &a.body }),
                },
                ItemKind::Instance(inst) => {
                    let child = unit
                        .module(&inst.child_module.name)
                        .ok_or_else(|| elab_err(&path, format!("unknown module `{}`", inst.child_module)))?;
                    let mut ov = HashMap::new();
                    let names = child.overridable_params();
                    for (i, o) in inst.param_overrides.iter().enumerate() {
                        let name = match &o.name {
                            Some(n) => n.name.clone(),
                            None => names.get(i).map(|n| n.name.clone()).ok_or_else(|| elab_err(&path, "too many parameter overrides"))?,
                        };
                        let v = eval(&o.value, &ParamValues(&self.scopes[scope].params), 0).map_err(|e| elab_err(&path, e))?;
                        ov.insert(name, v);
                    }
                    let cpath = format!("{path}.{}", inst.instance_name.name);
                    let cscope = self.instantiate(unit, child, cpath.clone(), ov)?;
                    for c in &inst.connections {
                        let Some(expr) = &c.expr else { continue };
                        let pname = match &c.port {
                            PortRef::Named(n) => n.name.clone(),
                            PortRef::Positional(i) => child.ports.get(*i).map(|p| p.name.name.clone()).ok_or_else(|| elab_err(&cpath, "too many connections"))?,
                        };
                        let port = child.port(&pname).ok_or_else(|| elab_err(&cpath, format!("no port `{pname}`")))?;
                        let pexpr = Expr::Name { parts: vec![port.name.clone()], loc: Default::default() };
                        if port.direction == Direction::Output {
                            self.procs.push(Proc::Assign { rhs_scope: cscope, rhs: pexpr, lhs_scope: scope, lhs: expr.clone() });
                        } else {
                            self.procs.push(Proc::Assign { rhs_scope: scope, rhs: expr.clone(), lhs_scope: cscope, lhs: pexpr });
                        }
                    }
                }
                ItemKind::Param(_) | ItemKind::Opaque(_) => {}
            }
        }
        Ok(scope)
    }

    /// Hierarchical names of every dumped signal.
    pub fn signal_names(&self) -> Vec<String> {
        self.signals.iter().filter(|s| s.array.is_none()).map(|s| s.name.clone()).collect()
    }

    pub fn root(&self) -> &str {
        &self.root
    }
}

#[derive(Debug, Clone, Copy)]
enum Place {
    Whole,
    Bits { off: u32, width: u32 },
    Elem(usize),
    ElemBits { idx: usize, off: u32, width: u32 },
    Discard,
}

struct State<'d, 'a> {
    design: &'d Design<'a>,
    values: Vec<Value>,
    arrays: HashMap<usize, Vec<Value>>,
    deadline: Option<Instant>,
}

struct Env<'s, 'd, 'a> {
    st: &'s State<'d, 'a>,
    scope: usize,
}

impl Env<'_, '_, '_> {
    fn lookup(&self, name: &str) -> Option<usize> {
        let sc = &self.st.design.scopes[self.scope];
        if let Some(i) = sc.sigs.get(name) {
            return Some(*i);
        }
        // downward hierarchical reference
        let full = format!("{}.{name}", sc.path);
        self.st.design.signals.iter().position(|s| s.name == full)
    }
}

impl EvalEnv for Env<'_, '_, '_> {
    fn signal(&self, name: &str) -> Option<Value> {
        if let Some(i) = self.lookup(name) {
            if self.st.design.signals[i].array.is_some() {
                return None;
            }
            return Some(self.st.values[i].clone());
        }
        self.st.design.scopes[self.scope].params.get(name).cloned()
    }

    fn range(&self, name: &str) -> Option<(i64, i64)> {
        self.lookup(name).map(|i| self.st.design.signals[i].range)
    }

    fn is_array(&self, name: &str) -> bool {
        self.lookup(name).is_some_and(|i| self.st.design.signals[i].array.is_some())
    }

    fn element(&self, name: &str, index: Option<u64>) -> Option<Value> {
        let i = self.lookup(name)?;
        let sig = &self.st.design.signals[i];
        let (a, b) = sig.array?;
        let Some(index) = index else { return Some(Value::unknown(sig.width)) };
        let off = index as i64 - a.min(b);
        let mem = &self.st.arrays[&i];
        Some(if off < 0 || off as usize >= mem.len() { Value::unknown(sig.width) } else { mem[off as usize].clone() })
    }
}

fn sim_err(e: impl std::fmt::Display) -> SimError {
    SimError::Crash(e.to_string())
}

fn splice(old: &Value, off: u32, width: u32, v: &Value) -> Value {
    let m = ((BigUint::one() << width) - 1u32) << off;
    let full = (BigUint::one() << old.width) - 1u32;
    let bits = (&old.bits & (&full ^ &m)) | ((&v.resize(width).bits << off) & &m);
    Value::new(old.width, bits)
}

impl<'d, 'a> State<'d, 'a> {
    fn new(design: &'d Design<'a>) -> Self {
        let mut arrays = HashMap::new();
        let values = design
            .signals
            .iter()
            .enumerate()
            .map(|(i, s)| {
                if let Some((a, b)) = s.array {
                    arrays.insert(i, vec![Value::zero(s.width); (a - b).unsigned_abs() as usize + 1]);
                }
                Value::zero(s.width)
            })
            .collect();
        State { design, values, arrays, deadline: None }
    }

    fn env(&self, scope: usize) -> Env<'_, 'd, 'a> {
        Env { st: self, scope }
    }

    fn eval(&self, scope: usize, e: &Expr, ctx: u32) -> EvalResult {
        eval(e, &self.env(scope), ctx)
    }

    fn check_deadline(&self) -> Result<(), SimError> {
        match self.deadline {
            Some(d) if Instant::now() > d => Err(SimError::TimeoutExceeded(Default::default())),
            _ => Ok(()),
        }
    }

    /// Resolve an lvalue to concrete storage locations, MSB part first.
    fn places(&self, scope: usize, lhs: &Expr, out: &mut Vec<(usize, Place, u32)>) -> Result<(), SimError> {
        let env = self.env(scope);
        let bit_off = |sig: &Signal, index: i64| -> Option<u32> {
            let (msb, lsb) = sig.range;
            let off = if msb >= lsb { index - lsb } else { lsb - index };
            (0..sig.width as i64).contains(&off).then_some(off as u32)
        };
        match lhs {
            Expr::Name { .. } => {
                let n = lhs.as_name().unwrap();
                let i = env.lookup(&n).ok_or_else(|| sim_err(format!("assignment to unknown `{n}`")))?;
                out.push((i, Place::Whole, self.design.signals[i].width));
            }
            Expr::Index { base, index } => {
                let n = base.as_name().ok_or_else(|| sim_err("unsupported assignment target"))?;
                let i = env.lookup(&n).ok_or_else(|| sim_err(format!("assignment to unknown `{n}`")))?;
                let sig = &self.design.signals[i];
                let idx = self.eval(scope, index, 0).map_err(sim_err)?.to_u64();
                if let Some((a, b)) = sig.array {
                    let off = idx.map(|x| x as i64 - a.min(b));
                    match off {
                        Some(o) if o >= 0 && (o as usize) < self.arrays[&i].len() => out.push((i, Place::Elem(o as usize), sig.width)),
                        _ => out.push((i, Place::Discard, sig.width)),
                    }
                } else {
                    match idx.and_then(|x| bit_off(sig, x as i64)) {
                        Some(off) => out.push((i, Place::Bits { off, width: 1 }, 1)),
                        None => out.push((i, Place::Discard, 1)),
                    }
                }
            }
            Expr::Slice { base, kind, left, right } => {
                let (i, elem) = match &**base {
                    Expr::Index { base: b, index } if b.as_name().is_some_and(|n| env.is_array(&n)) => {
                        let n = b.as_name().unwrap();
                        let i = env.lookup(&n).unwrap();
                        let (a, bb) = self.design.signals[i].array.unwrap();
                        let idx = self.eval(scope, index, 0).map_err(sim_err)?.to_u64();
                        (i, idx.map(|x| (x as i64 - a.min(bb)) as usize))
                    }
                    other => {
                        let n = other.as_name().ok_or_else(|| sim_err("unsupported assignment target"))?;
                        (env.lookup(&n).ok_or_else(|| sim_err(format!("assignment to unknown `{n}`")))?, None)
                    }
                };
                let sig = &self.design.signals[i];
                let c = |e: &Expr| self.eval(scope, e, 0).map_err(sim_err).map(|v| v.to_u64().map(|x| x as i64));
                let (hi, lo) = match kind {
                    SliceKind::Range => (c(left)?, c(right)?),
                    SliceKind::Up => {
                        let b = c(left)?;
                        let w = c(right)?.unwrap_or(1);
                        (b.map(|b| b + w - 1), b)
                    }
                    SliceKind::Down => {
                        let b = c(left)?;
                        let w = c(right)?.unwrap_or(1);
                        (b, b.map(|b| b - w + 1))
                    }
                };
                let width = match (hi, lo) {
                    (Some(h), Some(l)) => (h - l).unsigned_abs() as u32 + 1,
                    _ => 1,
                };
                let offs = (hi.and_then(|h| bit_off(sig, h)), lo.and_then(|l| bit_off(sig, l)));
                match (offs, elem) {
                    ((Some(a), Some(b)), None) => out.push((i, Place::Bits { off: a.min(b), width }, width)),
                    ((Some(a), Some(b)), Some(idx)) if idx < self.arrays[&i].len() => {
                        out.push((i, Place::ElemBits { idx, off: a.min(b), width }, width))
                    }
                    _ => out.push((i, Place::Discard, width)),
                }
            }
            Expr::Concat { items } => {
                for it in items {
                    self.places(scope, it, out)?;
                }
            }
            Expr::Paren { inner } => self.places(scope, inner, out)?,
            _ => return Err(sim_err(format!("unsupported assignment target `{}`", crate::verilog::expr_text(lhs)))),
        }
        Ok(())
    }

    fn lhs_width(&self, scope: usize, lhs: &Expr) -> u32 {
        let mut p = Vec::new();
        match self.places(scope, lhs, &mut p) {
            Ok(()) => p.iter().map(|x| x.2).sum(),
            Err(_) => 1,
        }
    }

    /// Split `v` over `places` (MSB part first) into concrete writes.
    fn writes(&self, places: &[(usize, Place, u32)], v: &Value) -> Vec<(usize, Place, Value)> {
        let total: u32 = places.iter().map(|p| p.2).sum();
        let v = v.resize(total);
        let mut shift = total;
        let mut out = Vec::new();
        for (i, place, w) in places {
            shift -= w;
            let part = Value::new(*w, &v.bits >> shift);
            out.push((*i, *place, part));
        }
        out
    }

    /// Apply a write; returns whether anything changed.
    fn apply(&mut self, i: usize, place: Place, v: &Value) -> bool {
        match place {
            Place::Discard => false,
            Place::Whole => {
                let nv = v.resize(self.values[i].width);
                let changed = self.values[i] != nv;
                self.values[i] = nv;
                changed
            }
            Place::Bits { off, width } => {
                let nv = splice(&self.values[i], off, width, v);
                let changed = self.values[i] != nv;
                self.values[i] = nv;
                changed
            }
            Place::Elem(idx) => {
                let mem = self.arrays.get_mut(&i).unwrap();
                let nv = v.resize(mem[idx].width);
                let changed = mem[idx] != nv;
                mem[idx] = nv;
                changed
            }
            Place::ElemBits { idx, off, width } => {
                let mem = self.arrays.get_mut(&i).unwrap();
                let nv = splice(&mem[idx], off, width, v);
                let changed = mem[idx] != nv;
                mem[idx] = nv;
                changed
            }
        }
    }

    fn assign(&mut self, scope: usize, lhs: &Expr, v: &Value) -> Result<bool, SimError> {
        let mut p = Vec::new();
        self.places(scope, lhs, &mut p)?;
        let mut changed = false;
        for (i, place, part) in self.writes(&p, v) {
            changed |= self.apply(i, place, &part);
        }
        Ok(changed)
    }

    /// Execute a statement. Blocking writes land immediately; non-blocking
    /// ones are queued on `nba`. Returns whether a blocking write changed
    /// state.
    fn exec(&mut self, scope: usize, s: &Stmt, nba: &mut Vec<(usize, Place, Value)>) -> Result<bool, SimError> {
        Ok(match s {
            Stmt::Null | Stmt::SystemCall { .. } => false,
            Stmt::Block { stmts, .. } => {
                let mut ch = false;
                for st in stmts {
                    ch |= self.exec(scope, st, nba)?;
                }
                ch
            }
            Stmt::If { cond, then_branch, else_branch, .. } => {
                let c = self.eval(scope, cond, 0).map_err(sim_err)?;
                if c.truth() == Some(true) {
                    self.exec(scope, then_branch, nba)?
                } else if let Some(e) = else_branch {
                    self.exec(scope, e, nba)?
                } else {
                    false
                }
            }
            Stmt::Case { kind, expr, items } => {
                let sel_w = self_width(expr, &self.env(scope)).map_err(sim_err)?;
                let mut chosen = None;
                'outer: for item in items {
                    for l in &item.labels {
                        let w = sel_w.max(self_width(l, &self.env(scope)).map_err(sim_err)?);
                        let a = self.eval(scope, expr, w).map_err(sim_err)?;
                        let b = self.eval(scope, l, w).map_err(sim_err)?;
                        let care = if *kind == CaseKind::Case {
                            (BigUint::one() << w) - 1u32
                        } else {
                            ((BigUint::one() << w) - 1u32) ^ (&b.xmask | &a.xmask)
                        };
                        if (&a.bits & &care) == (&b.bits & &care) && (*kind != CaseKind::Case || a.xmask == b.xmask) {
                            chosen = Some(&item.body);
                            break 'outer;
                        }
                    }
                }
                if chosen.is_none() {
                    chosen = items.iter().find(|i| i.labels.is_empty()).map(|i| &i.body);
                }
                match chosen {
                    Some(b) => self.exec(scope, b, nba)?,
                    None => false,
                }
            }
            Stmt::Assign { lhs, rhs, blocking, .. } => {
                let w = self.lhs_width(scope, lhs);
                let v = self.eval(scope, rhs, w).map_err(sim_err)?;
                if *blocking {
                    self.assign(scope, lhs, &v)?
                } else {
                    let mut p = Vec::new();
                    self.places(scope, lhs, &mut p)?;
                    nba.extend(self.writes(&p, &v));
                    false
                }
            }
            Stmt::For { init, cond, step, body } => {
                let mut ch = false;
                let w = self.lhs_width(scope, &init.0);
                let v = self.eval(scope, &init.1, w).map_err(sim_err)?;
                ch |= self.assign(scope, &init.0, &v)?;
                let mut n = 0;
                while self.eval(scope, cond, 0).map_err(sim_err)?.truth() == Some(true) {
                    ch |= self.exec(scope, body, nba)?;
                    let w = self.lhs_width(scope, &step.0);
                    let v = self.eval(scope, &step.1, w).map_err(sim_err)?;
                    ch |= self.assign(scope, &step.0, &v)?;
                    n += 1;
                    if n > MAX_LOOP_ITERATIONS {
                        return Err(sim_err("for loop did not terminate"));
                    }
                }
                ch
            }
        })
    }

    fn settle(&mut self) -> Result<(), SimError> {
        let design = self.design;
        for _ in 0..MAX_SETTLE_SWEEPS {
            let mut changed = false;
            for p in &design.procs {
                match p {
                    Proc::Assign { rhs_scope, rhs, lhs_scope, lhs } => {
                        let w = self.lhs_width(*lhs_scope, lhs);
                        let v = self.eval(*rhs_scope, rhs, w).map_err(sim_err)?;
                        changed |= self.assign(*lhs_scope, lhs, &v)?;
                    }
                    Proc::Comb { scope, body } => {
                        // intermediate blocking writes do not count as change
                        let before = self.values.clone();
                        let before_mem = (!self.arrays.is_empty()).then(|| self.arrays.clone());
                        let mut nba = Vec::new();
                        self.exec(*scope, body, &mut nba)?;
                        for (i, place, v) in nba {
                            self.apply(i, place, &v);
                        }
                        changed |= self.values != before || before_mem.is_some_and(|m| m != self.arrays);
                    }
                    Proc::Seq { .. } => {}
                }
            }
            if !changed {
                return Ok(());
            }
        }
        Err(sim_err("combinational logic did not settle"))
    }

    /// Settle, then run edge-triggered blocks until no more edges occur.
    fn propagate(&mut self, last: &mut [Option<bool>]) -> Result<(), SimError> {
        let design = self.design;
        for _ in 0..MAX_EDGE_ROUNDS {
            self.check_deadline()?;
            self.settle()?;
            let mut fired = Vec::new();
            for (pi, p) in design.procs.iter().enumerate() {
                if let Proc::Seq { triggers, .. } = p {
                    let hit = triggers.iter().any(|(edge, sig)| {
                        let now = self.values[*sig].get_bit(0);
                        let before = last[*sig];
                        match edge {
                            Edge::Posedge => before == Some(false) && now == Some(true),
                            Edge::Negedge => before == Some(true) && now == Some(false),
                        }
                    });
                    if hit {
                        fired.push(pi);
                    }
                }
            }
            for (i, l) in last.iter_mut().enumerate() {
                *l = self.values[i].get_bit(0);
            }
            if fired.is_empty() {
                return Ok(());
            }
            let mut nba = Vec::new();
            for pi in fired {
                if let Proc::Seq { scope, body, .. } = &design.procs[pi] {
                    self.exec(*scope, body, &mut nba)?;
                }
            }
            for (i, place, v) in nba {
                self.apply(i, place, &v);
            }
        }
        Err(sim_err("clock edges did not settle"))
    }
}

fn stimulus_value(v: &serde_json::Value, width: u32) -> Option<Value> {
    match v {
        serde_json::Value::Number(n) => n.as_u64().map(|x| Value::from_u64(width, x)),
        serde_json::Value::Bool(b) => Some(Value::from_u64(width, *b as u64)),
        serde_json::Value::String(s) => {
            if let Some(hex) = s.strip_prefix("0x") {
                return BigUint::parse_bytes(hex.as_bytes(), 16).map(|b| Value::new(width, b));
            }
            let lit = parse_literal(s)?;
            if lit.has_unknown() {
                return None;
            }
            Some(Value::new(width, lit.value))
        }
        _ => None,
    }
}

/// Run `design` under `stim`, returning the full waveform.
pub fn simulate(design: &Design<'_>, stim: &Stimulus, deadline: Option<Instant>) -> Result<Waveform, SimError> {
    let clock = *design
        .inputs
        .get(&stim.clock.signal)
        .ok_or_else(|| SimError::Stimulus(format!("clock `{}` is not an input of `{}`", stim.clock.signal, design.root)))?;
    let mut by_cycle: BTreeMap<u64, Vec<(usize, Value)>> = BTreeMap::new();
    for set in &stim.inputs {
        for (name, v) in &set.set {
            let name = name.strip_prefix(&format!("{}.", design.root)).unwrap_or(name);
            let &i = design.inputs.get(name).ok_or_else(|| SimError::Stimulus(format!("`{name}` is not an input of `{}`", design.root)))?;
            let val = stimulus_value(v, design.signals[i].width)
                .ok_or_else(|| SimError::Stimulus(format!("bad value {v} for `{name}`")))?;
            by_cycle.entry(set.cycle).or_default().push((i, val));
        }
    }

    let mut st = State::new(design);
    st.deadline = deadline;
    let mut wave = Waveform { timescale: Some(design.timescale.clone().unwrap_or_else(|| "1ns".into())), ..Default::default() };
    let mut dumped: Vec<Option<usize>> = vec![None; design.signals.len()];
    for (i, s) in design.signals.iter().enumerate() {
        if s.array.is_none() {
            wave.changes.push(Vec::new());
            dumped[i] = Some(wave.changes.len() - 1);
            let range = (s.width > 1 || s.range != (0, 0)).then_some(s.range);
            wave.signals.insert(s.name.clone(), WaveSignal { width: s.width, range, slot: wave.changes.len() - 1 });
        }
    }
    let record = |st: &State, wave: &mut Waveform, t: u64| {
        for (i, slot) in dumped.iter().enumerate() {
            let Some(slot) = slot else { continue };
            let list = &mut wave.changes[*slot];
            if list.last().map(|(_, v)| v) != Some(&st.values[i]) {
                list.push((t, st.values[i].clone()));
            }
        }
    };

    let mut last: Vec<Option<bool>> = st.values.iter().map(|v| v.get_bit(0)).collect();
    let half = stim.clock.period / 2;
    for k in 0..stim.cycles {
        let t = k * stim.clock.period;
        st.values[clock] = Value::zero(st.values[clock].width);
        for (i, v) in by_cycle.get(&k).into_iter().flatten() {
            st.values[*i] = v.clone();
        }
        st.propagate(&mut last)?;
        record(&st, &mut wave, t);
        st.values[clock] = Value::from_u64(st.values[clock].width, 1);
        st.propagate(&mut last)?;
        record(&st, &mut wave, t + half);
    }
    let end = stim.cycles * stim.clock.period;
    st.values[clock] = Value::zero(st.values[clock].width);
    st.propagate(&mut last)?;
    record(&st, &mut wave, end);
    wave.end_time = end;
    Ok(wave)
}
