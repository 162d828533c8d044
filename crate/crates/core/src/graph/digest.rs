// SPDX-License-Identifier: Apache-2.0

use std::fmt::Write;

use super::{DesignGraph, GraphError, HopVia};
use crate::verilog::{Direction, Width};

fn dir_word(d: Direction) -> &'static str {
    match d {
        Direction::Input => "input",
        Direction::Output => "output",
        Direction::Inout => "inout",
    }
}

fn width_words(w: Width) -> String {
    match w {
        Width::Scalar => "single bit".into(),
        Width::Range { msb, lsb } => format!("{} bits, range {msb} down to {lsb}", w.bits().unwrap()),
        Width::Unknown => "width not known".into(),
    }
}

/// Plain-text summary of one module's place in the hierarchy: its ports,
/// who instantiates it, what it instantiates and which signals cross its
/// boundary.
pub fn relationship_digest(graph: &DesignGraph, module: &str) -> Result<String, GraphError> {
    if !graph.has_module(module) {
        return Err(GraphError::UnknownModule(module.to_string()));
    }
    let mut out = String::new();
    let _ = writeln!(out, "module: {module}");
    let ports = &graph.ports[module];
    if ports.is_empty() {
        out.push_str("ports: none\n");
    } else {
        out.push_str("ports:\n");
        for p in ports {
            let signed = if p.signed { ", signed" } else { "" };
            let _ = writeln!(out, "  - {} is an {} port ({}{signed})", p.name, dir_word(p.direction), width_words(p.width));
        }
    }
    let mut parents: Vec<(String, Vec<String>)> = Vec::new();
    for e in graph.parents_of(module) {
        match parents.iter_mut().find(|(p, _)| *p == e.parent) {
            Some((_, v)) => v.push(e.instance.clone()),
            None => parents.push((e.parent.clone(), vec![e.instance.clone()])),
        }
    }
    parents.sort();
    for (p, insts) in &mut parents {
        insts.sort();
        let _ = writeln!(out, "instantiated by: {p} (as {})", insts.join(", "));
    }
    let children = graph.children_of(module);
    if children.is_empty() {
        out.push_str("children: none\n");
    } else {
        out.push_str("children:\n");
        for e in children {
            let _ = writeln!(out, "  - instance {} of module {}", e.instance, e.child);
        }
    }

    // boundary hops seen from one representative instance of this module
    let mut lines = Vec::new();
    if let Some(path) = graph.instance_paths(module).first().copied() {
        for h in graph.hops.iter().filter(|h| h.via == HopVia::PortConnection) {
            let from_here = h.from.path == path;
            let to_here = h.to.path == path;
            let rel = |p: &str, s: &str| -> String {
                if p == path {
                    format!("this module's {s}")
                } else if let Some(rest) = p.strip_prefix(&format!("{path}.")) {
                    format!("{s} of child instance {rest}")
                } else {
                    format!("{s} in parent module {}", graph.module_at(p).unwrap_or(p))
                }
            };
            if from_here || to_here {
                lines.push(format!("  - {} flows into {}", rel(&h.from.path, &h.from.signal), rel(&h.to.path, &h.to.signal)));
            }
        }
    }
    lines.sort();
    lines.dedup();
    if lines.is_empty() {
        out.push_str("boundary signal flow: none\n");
    } else {
        out.push_str("boundary signal flow:\n");
        for l in lines {
            out.push_str(&l);
            out.push('\n');
        }
    }
    Ok(out)
}
