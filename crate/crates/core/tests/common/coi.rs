// SPDX-License-Identifier: Apache-2.0

//! Random two-level netlists whose fan-in edges are recorded while the
//! text is generated, so reachability can be computed without the parser.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Netlist {
    pub text: String,
    /// Hierarchical sink → hierarchical sources.
    pub fanin: BTreeMap<String, BTreeSet<String>>,
    pub signals: Vec<String>,
    pub instances: Vec<String>,
}

struct Body {
    lines: Vec<String>,
    /// local sink → local sources
    deps: Vec<(String, Vec<String>)>,
}

fn expr(rng: &mut ChaCha8Rng, srcs: &[String]) -> String {
    let ops = ["&", "|", "^", "+"];
    let mut e = srcs[0].clone();
    for s in &srcs[1..] {
        e = format!("{e} {} {s}", ops[rng.gen_range(0..ops.len())]);
    }
    if rng.gen_bool(0.2) {
        e = format!("~({e})");
    }
    e
}

fn pick(rng: &mut ChaCha8Rng, pool: &[String], max: usize) -> Vec<String> {
    let k = rng.gen_range(1..=max.min(pool.len()));
    let mut v: Vec<String> = pool.choose_multiple(rng, k).cloned().collect();
    v.sort();
    v
}

/// Drive each of `sinks` from signals in `pool` (plus earlier sinks), with
/// a mix of continuous assigns, clocked registers (which may feed back)
/// and guarded combinational blocks.
fn drive(rng: &mut ChaCha8Rng, pool: &[String], sinks: &[String], regs: &BTreeSet<String>) -> Body {
    let mut body = Body { lines: vec![], deps: vec![] };
    let mut avail: Vec<String> = pool.to_vec();
    for s in sinks {
        if regs.contains(s) {
            let mut reads_pool = avail.clone();
            reads_pool.push(s.clone());
            let cond = pick(rng, &reads_pool, 1);
            let a = pick(rng, &reads_pool, 2);
            let b = pick(rng, &reads_pool, 2);
            body.lines.push(format!(
                "  always @(posedge clk) begin\n    if ({}) {s} <= {};\n    else {s} <= {};\n  end",
                cond[0],
                expr(rng, &a),
                expr(rng, &b)
            ));
            let mut deps: BTreeSet<String> = cond.into_iter().collect();
            deps.extend(a);
            deps.extend(b);
            body.deps.push((s.clone(), deps.into_iter().collect()));
        } else {
            let srcs = pick(rng, &avail, 3);
            body.lines.push(format!("  assign {s} = {};", expr(rng, &srcs)));
            body.deps.push((s.clone(), srcs));
        }
        avail.push(s.clone());
    }
    body
}

/// A netlist of at most `max_signals` hierarchical signals: a `cell`
/// module and a `top` with up to two `cell` instances.
pub fn random_netlist(seed: u64, max_signals: usize) -> Netlist {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_in = rng.gen_range(1..=3);
    let n_out = rng.gen_range(1..=2);
    let n_wire = rng.gen_range(0..=3);
    let cell_size = 1 + n_in + n_out + n_wire;
    let max_inst = ((max_signals / 2) / cell_size).min(2);
    let n_inst = rng.gen_range(0..=max_inst);
    let budget = max_signals - n_inst * cell_size;
    let t_in = rng.gen_range(1..=3.min(budget - 2));
    let t_out = rng.gen_range(1..=2);
    let t_wire = rng.gen_range(0..=(budget - 1 - t_in - t_out).min(8));

    // cell
    let ci: Vec<String> = (0..n_in).map(|i| format!("ci{i}")).collect();
    let co: Vec<String> = (0..n_out).map(|i| format!("co{i}")).collect();
    let cw: Vec<String> = (0..n_wire).map(|i| format!("cw{i}")).collect();
    let cell_sinks: Vec<String> = cw.iter().chain(&co).cloned().collect();
    let cell_regs: BTreeSet<String> = cell_sinks.iter().filter(|_| rng.gen_bool(0.3)).cloned().collect();
    let cell_body = drive(&mut rng, &ci, &cell_sinks, &cell_regs);
    let mut text = String::new();
    let decl = |name: &str, regs: &BTreeSet<String>| if regs.contains(name) { "reg" } else { "wire" };
    let mut ports: Vec<String> = vec!["input clk".into()];
    ports.extend(ci.iter().map(|p| format!("input {p}")));
    ports.extend(co.iter().map(|p| format!("output {} {p}", decl(p, &cell_regs))));
    let _ = writeln!(text, "module cell (\n  {}\n);", ports.join(",\n  "));
    for w in &cw {
        let _ = writeln!(text, "  {} {w};", decl(w, &cell_regs));
    }
    for l in &cell_body.lines {
        let _ = writeln!(text, "{l}");
    }
    let _ = writeln!(text, "endmodule\n");

    // top: instance outputs drive some of the top wires
    let ti: Vec<String> = (0..t_in).map(|i| format!("ti{i}")).collect();
    let to: Vec<String> = (0..t_out).map(|i| format!("to{i}")).collect();
    let tw: Vec<String> = (0..t_wire).map(|i| format!("tw{i}")).collect();
    let mut top_sinks: Vec<String> = tw.iter().chain(&to).cloned().collect();
    let mut inst_lines = Vec::new();
    let mut fanin: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    let mut inst_driven: Vec<String> = Vec::new();
    let mut instances = Vec::new();
    let mut top_pool: Vec<String> = vec!["clk".into()];
    top_pool.extend(ti.iter().cloned());
    for k in 0..n_inst {
        let inst = format!("u{k}");
        let path = format!("top.{inst}");
        instances.push(path.clone());
        let mut conns = vec![".clk(clk)".to_string()];
        fanin.entry(format!("{path}.clk")).or_default().insert("top.clk".into());
        for p in &ci {
            let src = top_pool.choose(&mut rng).unwrap().clone();
            conns.push(format!(".{p}({src})"));
            fanin.entry(format!("{path}.{p}")).or_default().insert(format!("top.{src}"));
        }
        for p in &co {
            let free: Vec<String> = top_sinks.iter().filter(|s| !inst_driven.contains(s)).cloned().collect();
            if free.is_empty() || rng.gen_bool(0.25) {
                conns.push(format!(".{p}()"));
                continue;
            }
            let dst = free.choose(&mut rng).unwrap().clone();
            conns.push(format!(".{p}({dst})"));
            fanin.entry(format!("top.{dst}")).or_default().insert(format!("{path}.{p}"));
            inst_driven.push(dst);
        }
        inst_lines.push(format!("  cell {inst} ({});", conns.join(", ")));
        for (sink, srcs) in &cell_body.deps {
            let e = fanin.entry(format!("{path}.{sink}")).or_default();
            e.extend(srcs.iter().map(|s| format!("{path}.{s}")));
        }
        // instance outputs may feed later logic in top
        top_pool.extend(inst_driven.iter().cloned());
    }
    top_sinks.retain(|s| !inst_driven.contains(s));
    let mut pool = top_pool.clone();
    pool.sort();
    pool.dedup();
    let top_regs: BTreeSet<String> = top_sinks.iter().filter(|_| rng.gen_bool(0.3)).cloned().collect();
    let top_body = drive(&mut rng, &pool, &top_sinks, &top_regs);
    let mut ports: Vec<String> = vec!["input clk".into()];
    ports.extend(ti.iter().map(|p| format!("input {p}")));
    ports.extend(to.iter().map(|p| format!("output {} {p}", decl(p, &top_regs))));
    let _ = writeln!(text, "module top (\n  {}\n);", ports.join(",\n  "));
    for w in &tw {
        let _ = writeln!(text, "  {} {w};", decl(w, &top_regs));
    }
    for l in inst_lines.iter().chain(&top_body.lines) {
        let _ = writeln!(text, "{l}");
    }
    let _ = writeln!(text, "endmodule");
    for (sink, srcs) in &top_body.deps {
        fanin.entry(format!("top.{sink}")).or_default().extend(srcs.iter().map(|s| format!("top.{s}")));
    }

    let mut signals: Vec<String> = ["clk"].iter().map(|s| s.to_string()).chain(ti).chain(to).chain(tw).map(|s| format!("top.{s}")).collect();
    for path in &instances {
        for s in std::iter::once("clk".to_string()).chain(ci.iter().cloned()).chain(co.iter().cloned()).chain(cw.iter().cloned()) {
            signals.push(format!("{path}.{s}"));
        }
    }
    assert!(signals.len() <= max_signals, "{} signals", signals.len());
    Netlist { text, fanin, signals, instances }
}

/// Breadth-first reachability over recorded fan-in.
pub fn reach(fanin: &BTreeMap<String, BTreeSet<String>>, seeds: &[String]) -> BTreeSet<String> {
    let mut seen: BTreeSet<String> = seeds.iter().cloned().collect();
    let mut frontier: Vec<String> = seeds.to_vec();
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for s in &frontier {
            for f in fanin.get(s).into_iter().flatten() {
                if seen.insert(f.clone()) {
                    next.push(f.clone());
                }
            }
        }
        frontier = next;
    }
    seen
}
