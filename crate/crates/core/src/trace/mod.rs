// SPDX-License-Identifier: Apache-2.0

//! Checking assertions against simulation waveforms.
//!
//! Signals are sampled just before each edge of the assertion's clock.
//! Cycle numbers count those edges from zero. An attempt whose booleans
//! touch x/z, or during which the disable condition is true, is aborted
//! and does not count.

mod check;
pub mod toggle;
mod vcd;

use std::collections::BTreeMap;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use check::{evaluate, AttemptResult, Evaluation, SampledTrace, Verdict};
pub use toggle::{toggle_coverage, toggled_signals, ToggleReport};
pub use vcd::{parse_vcd, parse_vcd_str, write_vcd, WaveSignal, Waveform};

use crate::graph::DesignGraph;
use crate::sva::{parse_sva, SvaAst};
use crate::verilog::Edge;

pub const TRACE_VERDICTS_SCHEMA: &str = "trace_verdicts.v1";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TraceError {
    #[error("malformed VCD at line {line}: {message}")]
    VcdMalformed { line: usize, message: String },
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("signal(s) not found in waveform: {}", .0.join(", "))]
    MissingSignal(Vec<String>),
    #[error("{0}")]
    Unsupported(String),
}

#[derive(Debug, Clone, Default)]
pub struct CheckOptions {
    /// Waveform scope corresponding to the design root, e.g. `tb.dut`.
    pub root_scope: Option<String>,
    /// Clock for assertions without a clocking event.
    pub default_clock: Option<String>,
    /// Used to find a clock in the bound scope when neither the assertion
    /// nor `default_clock` names one.
    pub clock_regex: Option<Regex>,
}

/// Assertion names mapped onto waveform signals for one instance choice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Binding {
    pub instance: String,
    pub names: BTreeMap<String, String>,
    pub clock: Option<(String, Edge)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceVerdict {
    pub id: String,
    pub verdict: Verdict,
    pub attempts: u64,
    #[serde(default)]
    pub aborted: u64,
    pub first_fail_cycle: Option<u64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub witness: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub instances: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceCheckError {
    pub id: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceReport {
    pub schema: String,
    pub verdicts: Vec<TraceVerdict>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub errors: Vec<TraceCheckError>,
}

/// Find the waveform scope holding the root module's ports.
pub fn detect_root_scope(wave: &Waveform, graph: &DesignGraph) -> Option<String> {
    let ports: Vec<&str> = graph.ports.get(&graph.root).map(|p| p.iter().map(|p| p.name.as_str()).collect()).unwrap_or_default();
    let probe: Vec<String> = if ports.is_empty() {
        graph.signals.get(&graph.root).map(|s| s.iter().map(|s| s.name.clone()).collect()).unwrap_or_default()
    } else {
        ports.iter().map(|s| s.to_string()).collect()
    };
    let first = probe.first()?;
    let mut candidates: Vec<String> = wave
        .signals
        .keys()
        .filter_map(|n| n.strip_suffix(first.as_str()).and_then(|p| p.strip_suffix('.')))
        .filter(|p| probe.iter().all(|s| wave.signals.contains_key(&format!("{p}.{s}"))))
        .map(str::to_string)
        .collect();
    candidates.sort_by_key(|p| (p.rsplit('.').next() != Some(graph.root.as_str()), p.matches('.').count(), p.clone()));
    candidates.into_iter().next()
}

fn to_wave_name(hier: &str, root: &str, scope: &str) -> String {
    match hier.strip_prefix(root).and_then(|r| r.strip_prefix('.')) {
        Some(rest) => format!("{scope}.{rest}"),
        None => hier.to_string(),
    }
}

fn find_in_wave(wave: &Waveform, name: &str, scope: Option<&str>) -> Option<String> {
    if wave.signals.contains_key(name) {
        return Some(name.to_string());
    }
    if let Some(s) = scope {
        let full = format!("{s}.{name}");
        if wave.signals.contains_key(&full) {
            return Some(full);
        }
    }
    let suffix = format!(".{name}");
    let mut hits = wave.signals.keys().filter(|k| k.ends_with(&suffix));
    match (hits.next(), hits.next()) {
        (Some(h), None) => Some(h.clone()),
        _ => None,
    }
}

const MAX_BINDINGS: usize = 64;

/// Map every name used by `ast` to a waveform signal. With a design graph,
/// a module-qualified name yields one binding per instance of that module.
pub fn bind(ast: &SvaAst, wave: &Waveform, graph: Option<&DesignGraph>, opts: &CheckOptions) -> Result<Vec<Binding>, TraceError> {
    let body = ast.body_names();
    let control = ast.control_names();
    let clock_name = match &ast.clock {
        Some(c) => Some((
            c.expr.as_name().ok_or_else(|| TraceError::Unsupported("clocking event must be a single signal".into()))?,
            c.edge,
        )),
        None => opts.default_clock.clone().map(|c| (c, Edge::Posedge)),
    };
    let mut missing = Vec::new();
    let mut combos: Vec<Binding> = Vec::new();

    match graph {
        None => {
            let scope = opts.root_scope.as_deref();
            let mut names = BTreeMap::new();
            for n in body.iter().chain(&control) {
                match find_in_wave(wave, n, scope) {
                    Some(w) => {
                        names.insert(n.clone(), w);
                    }
                    None => missing.push(n.clone()),
                }
            }
            let clock = match &clock_name {
                Some((c, e)) => names.get(c).cloned().or_else(|| find_in_wave(wave, c, scope)).map(|w| (w, *e)),
                None => None,
            };
            if let (Some((c, _)), None) = (clock_name, &clock) {
                if !missing.contains(&c) {
                    missing.push(c);
                }
            }
            combos.push(Binding { instance: scope.unwrap_or("").to_string(), names, clock });
        }
        Some(g) => {
            let scope = match &opts.root_scope {
                Some(s) => s.clone(),
                None => detect_root_scope(wave, g).ok_or_else(|| TraceError::MissingSignal(vec![format!("{} (root scope)", g.root)]))?,
            };
            // candidate hierarchical names per body name, grouped by module
            let mut groups: Vec<(String, Vec<String>)> = Vec::new();
            let mut fixed: BTreeMap<String, String> = BTreeMap::new();
            let mut qualified: Vec<(String, String, String)> = Vec::new();
            for n in &body {
                let r = g.resolve(n);
                if r.is_empty() {
                    missing.push(n.clone());
                } else if r.len() == 1 {
                    fixed.insert(n.clone(), r[0].clone());
                } else {
                    let (m, s) = n.rsplit_once('.').unwrap();
                    if !groups.iter().any(|(k, _)| k == m) {
                        groups.push((m.to_string(), g.instance_paths(m).iter().map(|p| p.to_string()).collect()));
                    }
                    qualified.push((n.clone(), m.to_string(), s.to_string()));
                }
            }
            let mut choices: Vec<BTreeMap<String, String>> = vec![BTreeMap::new()];
            for (m, paths) in &groups {
                let mut next = Vec::new();
                for c in &choices {
                    for p in paths {
                        let mut c = c.clone();
                        c.insert(m.clone(), p.clone());
                        next.push(c);
                    }
                }
                next.truncate(MAX_BINDINGS);
                choices = next;
            }
            // instance that anchors bare control names
            let anchor_of = |choice: &BTreeMap<String, String>| -> String {
                match body.first() {
                    Some(first) => {
                        let hier = fixed.get(first).cloned().or_else(|| {
                            qualified.iter().find(|q| &q.0 == first).map(|(_, m, s)| format!("{}.{}", choice[m], s))
                        });
                        hier.and_then(|h| h.rsplit_once('.').map(|(p, _)| p.to_string())).unwrap_or_else(|| g.root.clone())
                    }
                    None => g.root.clone(),
                }
            };
            for choice in choices {
                let anchor = anchor_of(&choice);
                let mut names = BTreeMap::new();
                let place = |n: &str, hier: String, names: &mut BTreeMap<String, String>, missing: &mut Vec<String>| {
                    let w = to_wave_name(&hier, &g.root, &scope);
                    if wave.signals.contains_key(&w) {
                        names.insert(n.to_string(), w);
                    } else if !missing.iter().any(|m| m == &w) {
                        missing.push(w);
                    }
                };
                for (n, h) in &fixed {
                    place(n, h.clone(), &mut names, &mut missing);
                }
                for (n, m, s) in &qualified {
                    place(n, format!("{}.{}", choice[m], s), &mut names, &mut missing);
                }
                let control_hier = |n: &str| -> String {
                    if n.contains('.') {
                        g.resolve(n).into_iter().next().unwrap_or_else(|| n.to_string())
                    } else {
                        format!("{anchor}.{n}")
                    }
                };
                for n in &control {
                    place(n, control_hier(n), &mut names, &mut missing);
                }
                let clock = match &clock_name {
                    Some((c, e)) => {
                        let w = to_wave_name(&control_hier(c), &g.root, &scope);
                        if wave.signals.contains_key(&w) {
                            Some((w, *e))
                        } else {
                            if !missing.contains(&w) {
                                missing.push(w);
                            }
                            None
                        }
                    }
                    None => opts.clock_regex.as_ref().and_then(|re| {
                        let prefix = format!("{}.", to_wave_name(&anchor, &g.root, &scope));
                        wave.signals
                            .keys()
                            .filter_map(|k| k.strip_prefix(&prefix).filter(|leaf| !leaf.contains('.') && re.is_match(leaf)).map(|_| k))
                            .next()
                            .map(|k| (k.clone(), Edge::Posedge))
                    }),
                };
                combos.push(Binding { instance: anchor, names, clock });
            }
        }
    }
    if !missing.is_empty() {
        missing.sort();
        missing.dedup();
        return Err(TraceError::MissingSignal(missing));
    }
    Ok(combos)
}

/// Sample the bound signals at each clock edge (just before it), or at
/// every change time for unclocked assertions.
pub fn sample(wave: &Waveform, binding: &Binding) -> SampledTrace {
    let mut out = SampledTrace::default();
    for (n, w) in &binding.names {
        if let Some(r) = wave.signals[w].range {
            out.ranges.insert(n.clone(), r);
        }
    }
    let (times, before) = match &binding.clock {
        Some((c, edge)) => (wave.edges(c, *edge == Edge::Posedge), true),
        None => (wave.times(), false),
    };
    for t in times {
        let mut m = BTreeMap::new();
        for (n, w) in &binding.names {
            let v = if before { wave.value_before(w, t) } else { wave.value_at(w, t) };
            m.insert(n.clone(), v.expect("bound signal exists"));
        }
        out.cycles.push(m);
    }
    out
}

/// Check one assertion over one or more waveforms. The verdict combines
/// every instance binding and every waveform: any failure fails, then any
/// pending obligation, then pass if anything was attempted.
pub fn check(id: &str, ast: &SvaAst, waves: &[&Waveform], graph: Option<&DesignGraph>, opts: &CheckOptions) -> Result<TraceVerdict, TraceError> {
    let mut results = Vec::new();
    let mut witness = BTreeMap::new();
    let mut best_fail: Option<u64> = None;
    let mut instances = Vec::new();
    for wave in waves {
        for b in bind(ast, wave, graph, opts)? {
            let trace = sample(wave, &b);
            let ev = evaluate(ast, &trace).map_err(|e| TraceError::Unsupported(e.to_string()))?;
            if let Some(c) = ev.first_fail_cycle {
                if best_fail.is_none_or(|f| c < f) {
                    best_fail = Some(c);
                    witness = trace.cycles[c as usize].iter().map(|(k, v)| (k.clone(), v.to_string())).collect();
                }
            }
            if !instances.contains(&b.instance) {
                instances.push(b.instance.clone());
            }
            results.extend(ev.results);
        }
    }
    let ev = check::summarize(results);
    Ok(TraceVerdict {
        id: id.to_string(),
        verdict: ev.verdict,
        attempts: ev.attempts,
        aborted: ev.aborted,
        first_fail_cycle: ev.first_fail_cycle,
        witness,
        instances: if graph.is_some() { instances } else { Vec::new() },
    })
}

/// Check assertion texts; unparseable or unbindable ones are reported in
/// `errors` rather than aborting the batch.
pub fn check_texts(
    assertions: &[(String, String)],
    waves: &[&Waveform],
    graph: Option<&DesignGraph>,
    opts: &CheckOptions,
) -> TraceReport {
    let mut verdicts = Vec::new();
    let mut errors = Vec::new();
    for (id, text) in assertions {
        let res = parse_sva(text).map_err(|e| e.to_string()).and_then(|ast| check(id, &ast, waves, graph, opts).map_err(|e| e.to_string()));
        match res {
            Ok(v) => verdicts.push(v),
            Err(message) => errors.push(TraceCheckError { id: id.clone(), message }),
        }
    }
    TraceReport { schema: TRACE_VERDICTS_SCHEMA.to_string(), verdicts, errors }
}

/// Share of passing assertions that passed non-vacuously, in percent.
/// Zero when nothing passed.
pub fn nvr_percent(verdicts: &[TraceVerdict]) -> f64 {
    let passes = verdicts.iter().filter(|v| matches!(v.verdict, Verdict::Pass | Verdict::VacuousPass)).count();
    let real = verdicts.iter().filter(|v| v.verdict == Verdict::Pass).count();
    if passes == 0 {
        0.0
    } else {
        real as f64 * 100.0 / passes as f64
    }
}
