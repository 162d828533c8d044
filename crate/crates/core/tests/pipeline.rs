// SPDX-License-Identifier: Apache-2.0

use std::path::{Path, PathBuf};

use modassert::graph::extract_relationships;
use modassert::llm::{Gateway, MockBackend, ScriptEntry, ScriptedBackend, Stage};
use modassert::pipeline::*;
use modassert::verilog::{load_design, SourceUnit};
use serde_json::json;

fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(rel)
}

fn design(files: &[&str]) -> SourceUnit {
    let paths: Vec<PathBuf> = files.iter().map(|f| fixture(f)).collect();
    load_design(&paths, &Default::default()).unwrap()
}

fn three_file() -> (SourceUnit, SpecDocument) {
    let unit = design(&["three_file/leaf.v", "three_file/mid.v", "three_file/top.v"]);
    let doc = SpecDocument::load(&[fixture("three_file/spec.md")]).unwrap();
    (unit, doc)
}

fn tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().display().to_string(), std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn fenced(v: serde_json::Value) -> String {
    format!("```json\n{}\n```", serde_json::to_string_pretty(&v).unwrap())
}

#[test]
fn mock_bundle_is_complete_and_reproducible() {
    let (unit, doc) = three_file();
    let cfg = PipelineConfig::default();
    let mut trees = Vec::new();
    for _ in 0..3 {
        let gw = Gateway::new(Box::new(MockBackend));
        let bundle = run_pipeline(&gw, &cfg, &doc, &unit, None).unwrap();
        assert_eq!(bundle.modules.iter().map(|m| m.module.as_str()).collect::<Vec<_>>(), ["leaf", "mid", "top3"]);
        for m in &bundle.modules {
            assert!(m.error.is_none(), "{}: {:?}", m.module, m.error);
            assert!(m.spec.is_some());
            assert!(!m.assertions.is_empty(), "{}", m.module);
            assert!(m.assertions.iter().all(|a| a.status == AssertionStatus::Bound));
        }
        assert!(lineage(&bundle.modules).complete());
        let dir = tempfile::tempdir().unwrap();
        let summary = write_bundle(&bundle, dir.path()).unwrap();
        assert_eq!(summary.modules.len(), 3);
        for f in ["design_graph.json", "pipeline.json", "transcript.jsonl", "modules/mid/assertions.sv"] {
            assert!(dir.path().join(f).is_file(), "{f}");
        }
        trees.push(tree(dir.path()));
    }
    assert_eq!(trees[0], trees[1]);
    assert_eq!(trees[1], trees[2]);
}

#[test]
fn mock_spec_covers_exactly_the_ports() {
    let unit = design(&["designs/top_leaf.v"]);
    let doc = SpecDocument::from_texts(vec![("s.md".into(), "An inverter wrapped in a top level.".into())]).unwrap();
    let graph = extract_relationships(&unit, None).unwrap();
    let gw = Gateway::new(Box::new(MockBackend));
    let mut warnings = vec![];
    let spec = extract_module_spec(&gw, &PipelineConfig::default(), &doc, &graph, &unit, "leaf", &mut warnings).unwrap();
    let ports: Vec<&str> = spec.port_behaviors.iter().map(|p| p.port.as_str()).collect();
    assert_eq!(ports, ["x", "y"]);
    assert!(warnings.is_empty());
}

#[test]
fn spec_prompt_has_interface_but_no_body() {
    let unit = design(&["designs/top_leaf.v"]);
    let doc = SpecDocument::from_texts(vec![(
        "s.md".into(),
        "The leaf inverts its input.\nFor reference: assign y = ~x; in the leaf.\n".into(),
    )])
    .unwrap();
    let graph = extract_relationships(&unit, None).unwrap();
    let req = build_spec_prompt(&doc, &graph, &unit, "leaf", &PipelineConfig::default()).unwrap();
    assert!(req.user_text.contains("x is an input port"));
    assert!(req.user_text.contains("y is an output port"));
    assert!(req.user_text.contains("instantiated by: top"));
    let source = std::fs::read_to_string(fixture("designs/top_leaf.v")).unwrap();
    for line in source.lines().skip(4).take(1) {
        assert!(!req.user_text.contains(line.trim()), "{line}");
    }
    assert!(!req.user_text.contains("assign y = ~x"));
}

#[test]
fn overview_lines_repeating_body_statements_are_dropped() {
    let (unit, doc) = three_file();
    let graph = extract_relationships(&unit, None).unwrap();
    let cfg = PipelineConfig::default();
    let mid = build_spec_prompt(&doc, &graph, &unit, "mid", &cfg).unwrap();
    assert!(!mid.user_text.contains("u_leaf (.clk(clk)"));
    let top = build_spec_prompt(&doc, &graph, &unit, "top3", &cfg).unwrap();
    assert!(top.user_text.contains("u_leaf (.clk(clk)"));
}

#[test]
fn module_filter_limits_output() {
    let (unit, doc) = three_file();
    let gw = Gateway::new(Box::new(MockBackend));
    let bundle = run_pipeline(&gw, &PipelineConfig::default(), &doc, &unit, Some(&["leaf".to_string()])).unwrap();
    assert_eq!(bundle.modules.len(), 1);
    assert_eq!(bundle.modules[0].module, "leaf");
    let dir = tempfile::tempdir().unwrap();
    write_bundle(&bundle, dir.path()).unwrap();
    let modules: Vec<_> = std::fs::read_dir(dir.path().join("modules")).unwrap().collect();
    assert_eq!(modules.len(), 1);
    assert!(run_pipeline(&gw, &PipelineConfig::default(), &doc, &unit, Some(&["nope".to_string()])).is_err());
}

fn leaf_spec(graph: &modassert::graph::DesignGraph, unit: &SourceUnit, gw: &Gateway) -> ModuleSpec {
    let doc = SpecDocument::from_texts(vec![("s.md".into(), "A register.".into())]).unwrap();
    extract_module_spec(gw, &PipelineConfig::default(), &doc, graph, unit, "leaf", &mut vec![]).unwrap()
}

#[test]
fn scripted_items_are_numbered_and_unknown_signals_dropped() {
    let unit = design(&["three_file/leaf.v", "three_file/mid.v", "three_file/top.v"]);
    let graph = extract_relationships(&unit, None).unwrap();
    let spec = leaf_spec(&graph, &unit, &Gateway::new(Box::new(MockBackend)));
    let reply = fenced(json!({"module": "leaf", "items": [
        {"condition": "d is 5 at a rising edge", "expected": "q is 5 one cycle later", "referenced_signals": ["d", "q"]},
        {"condition": "always", "expected": "gone is low", "referenced_signals": ["gone"]},
        {"condition": "clk rises", "expected": "q follows d", "referenced_signals": ["leaf.q", "clk"]},
    ]}));
    let gw = Gateway::new(Box::new(ScriptedBackend::new(vec![ScriptEntry::for_module(Stage::ItemExtract, "leaf", &reply)])));
    let mut warnings = vec![];
    let items = extract_verification_items(&gw, &PipelineConfig::default(), &spec, &graph, &mut warnings).unwrap();
    let ids: Vec<&str> = items.iter().map(|i| i.id.as_str()).collect();
    assert_eq!(ids, ["VI-1", "VI-2"]);
    assert_eq!(items[1].referenced_signals, ["q", "clk"]);
    assert_eq!(warnings.len(), 1);
    assert!(warnings[0].contains("gone"));
    assert!(items.iter().all(|i| i.spec_ref == spec.content_hash()));
}

#[test]
fn item_cap_applies() {
    let unit = design(&["three_file/leaf.v", "three_file/mid.v", "three_file/top.v"]);
    let graph = extract_relationships(&unit, None).unwrap();
    let spec = leaf_spec(&graph, &unit, &Gateway::new(Box::new(MockBackend)));
    let many: Vec<_> = (0..5).map(|i| json!({"condition": format!("c{i}"), "expected": "e", "referenced_signals": ["q"]})).collect();
    let reply = fenced(json!({"module": "leaf", "items": many}));
    let gw = Gateway::new(Box::new(ScriptedBackend::new(vec![ScriptEntry::any(&reply)])));
    let cfg = PipelineConfig { max_items_per_module: 3, ..Default::default() };
    let items = extract_verification_items(&gw, &cfg, &spec, &graph, &mut vec![]).unwrap();
    assert_eq!(items.len(), 3);
}

#[test]
fn no_items_means_no_request() {
    let unit = design(&["three_file/leaf.v", "three_file/mid.v", "three_file/top.v"]);
    let graph = extract_relationships(&unit, None).unwrap();
    let spec = leaf_spec(&graph, &unit, &Gateway::new(Box::new(MockBackend)));
    let gw = Gateway::new(Box::new(ScriptedBackend::new(vec![])));
    let out = generate_deep_assertions(&gw, &PipelineConfig::default(), &spec, &[], &graph, &mut vec![]).unwrap();
    assert!(out.is_empty());
    assert!(gw.transcript().is_empty());
}

#[test]
fn port_mismatch_is_repaired_once() {
    let unit = design(&["designs/top_leaf.v"]);
    let graph = extract_relationships(&unit, None).unwrap();
    let doc = SpecDocument::from_texts(vec![("s.md".into(), "An inverter.".into())]).unwrap();
    let partial = fenced(json!({"module": "leaf", "overview": "inverts", "assumptions": [],
        "port_behaviors": [{"port": "x", "behavior": "input"}, {"port": "z", "behavior": "made up"}]}));
    let full = fenced(json!({"module": "leaf", "overview": "inverts", "assumptions": [],
        "port_behaviors": [{"port": "x", "behavior": "input"}, {"port": "y", "behavior": "inverse of x"}]}));
    let cfg = PipelineConfig::default();

    let gw = Gateway::new(Box::new(ScriptedBackend::new(vec![ScriptEntry::any(&partial), ScriptEntry::any(&full)])));
    let spec = extract_module_spec(&gw, &cfg, &doc, &graph, &unit, "leaf", &mut vec![]).unwrap();
    assert_eq!(spec.port_behaviors[1].behavior, "inverse of x");
    let log = gw.transcript();
    assert!(log[1].request.user_text.contains("Missing: y. Not ports of `leaf`: z."));
    assert_eq!(spec.provenance.requests.len(), 2);

    let gw = Gateway::new(Box::new(ScriptedBackend::new(vec![ScriptEntry::any(&partial), ScriptEntry::any(&partial)])));
    match extract_module_spec(&gw, &cfg, &doc, &graph, &unit, "leaf", &mut vec![]) {
        Err(PipelineError::PortMismatch { missing, extra, .. }) => {
            assert_eq!(missing, ["y"]);
            assert_eq!(extra, ["z"]);
        }
        other => panic!("{other:?}"),
    }
}

fn i2c() -> (SourceUnit, modassert::graph::DesignGraph) {
    let unit = design(&["i2c/i2c_master_bit_ctrl.v", "i2c/i2c_master_byte_ctrl.v", "i2c/i2c_master_top.v"]);
    let graph = extract_relationships(&unit, None).unwrap();
    (unit, graph)
}

fn byte_ctrl_items(graph: &modassert::graph::DesignGraph, unit: &SourceUnit) -> (ModuleSpec, Vec<VerificationItem>) {
    let gw = Gateway::new(Box::new(MockBackend));
    let doc = SpecDocument::load(&[fixture("i2c/spec.md")]).unwrap();
    let spec = extract_module_spec(&gw, &PipelineConfig::default(), &doc, graph, unit, "i2c_master_byte_ctrl", &mut vec![])
        .unwrap();
    let item = VerificationItem {
        id: "VI-1".into(),
        module: "i2c_master_byte_ctrl".into(),
        condition: "any of start, stop, read, write is asserted and cmd_ack is low".into(),
        expected: "go is high".into(),
        referenced_signals: vec!["start".into(), "stop".into(), "read".into(), "write".into(), "cmd_ack".into(), "go".into()],
        spec_ref: spec.content_hash(),
    };
    (spec, vec![item])
}

#[test]
fn assertions_are_templated_and_clocked() {
    let (unit, graph) = i2c();
    let (spec, items) = byte_ctrl_items(&graph, &unit);
    let reply = fenced(json!({"module": "i2c_master_byte_ctrl", "assertions": [
        {"item_ids": ["VI-1"], "sva": "(start | stop | read | write) && !cmd_ack |-> go"},
        {"item_ids": ["VI-1"], "sva": "assert property ($bits(i2c_master_byte_ctrl.ena) == 1);"},
        {"item_ids": ["VI-1"], "sva": "i2c_master_top.byte_controller.bit_ctrl.cmd_ack |=> !i2c_master_bit_ctrl.cmd_ack"},
        {"item_ids": ["VI-9"], "sva": "go"},
    ]}));
    let gw = Gateway::new(Box::new(ScriptedBackend::new(vec![ScriptEntry::any(&reply)])));
    let mut warnings = vec![];
    let out = generate_deep_assertions(&gw, &PipelineConfig::default(), &spec, &items, &graph, &mut warnings).unwrap();
    assert_eq!(out.len(), 3);
    assert_eq!(
        out[0].sva_text,
        "assert property (@(posedge clk) disable iff (!rst_n) i2c_master_byte_ctrl.start | i2c_master_byte_ctrl.stop \
         | i2c_master_byte_ctrl.read | i2c_master_byte_ctrl.write && !i2c_master_byte_ctrl.cmd_ack |-> \
         i2c_master_byte_ctrl.go);"
    );
    assert_eq!(out[0].clock_expr.as_deref(), Some("posedge clk"));
    assert_eq!(out[0].disable_expr.as_deref(), Some("!rst_n"));
    assert!(!out[0].trivial);
    assert!(out[1].trivial);
    assert_eq!(out[2].referenced_hier_signals, ["i2c_master_bit_ctrl.cmd_ack"]);
    assert!(warnings.iter().any(|w| w.contains("no known item")));
    let sv = assertions_sv("i2c_master_byte_ctrl", &out);
    assert!(sv.starts_with("module i2c_master_byte_ctrl_sva;\n"));
    assert!(sv.contains("A_1: assert property (@(posedge clk)"));
    assert!(sv.trim_end().ends_with("bind i2c_master_byte_ctrl i2c_master_byte_ctrl_sva u_i2c_master_byte_ctrl_sva ();"));
    assert_eq!(modassert::sva::split_assertions(&sv).len(), 3);
}

#[test]
fn template_violations_fail_after_one_repair() {
    let (unit, graph) = i2c();
    let (spec, items) = byte_ctrl_items(&graph, &unit);
    let bad = fenced(json!({"module": "i2c_master_byte_ctrl", "assertions": [
        {"item_ids": ["VI-1"], "sva": "u_missing.go |-> nothing_here"},
    ]}));
    let good = fenced(json!({"module": "i2c_master_byte_ctrl", "assertions": [
        {"item_ids": ["VI-1"], "sva": "go |-> !cmd_ack"},
    ]}));
    let cfg = PipelineConfig::default();

    let gw = Gateway::new(Box::new(ScriptedBackend::new(vec![ScriptEntry::any(&bad), ScriptEntry::any(&good)])));
    let out = generate_deep_assertions(&gw, &cfg, &spec, &items, &graph, &mut vec![]).unwrap();
    assert_eq!(out.len(), 1);
    assert!(gw.transcript()[1].request.user_text.contains("nothing_here"));

    let gw = Gateway::new(Box::new(ScriptedBackend::new(vec![ScriptEntry::any(&bad), ScriptEntry::any(&bad)])));
    match generate_deep_assertions(&gw, &cfg, &spec, &items, &graph, &mut vec![]) {
        Err(PipelineError::TemplateViolation { names, .. }) => assert_eq!(names, ["nothing_here", "u_missing.go"]),
        other => panic!("{other:?}"),
    }
}

#[test]
fn unparseable_assertions_stay_generated() {
    let (unit, graph) = i2c();
    let (spec, items) = byte_ctrl_items(&graph, &unit);
    let reply = fenced(json!({"module": "i2c_master_byte_ctrl", "assertions": [
        {"item_ids": ["VI-1"], "sva": "go |-> ##[3:1] cmd_ack"},
    ]}));
    let gw = Gateway::new(Box::new(ScriptedBackend::new(vec![ScriptEntry::any(&reply), ScriptEntry::any(&reply)])));
    let out = generate_deep_assertions(&gw, &PipelineConfig::default(), &spec, &items, &graph, &mut vec![]).unwrap();
    assert_eq!(out[0].status, AssertionStatus::Generated);
    assert!(assertions_sv("i2c_master_byte_ctrl", &out).contains("// A_1 (VI-1) does not parse:"));
}
