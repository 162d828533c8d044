// SPDX-License-Identifier: Apache-2.0

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures")
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_modassert")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn fx(rel: &str) -> String {
    fixtures().join(rel).display().to_string()
}

fn s(p: &Path) -> String {
    p.display().to_string()
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

#[test]
fn analyze_writes_graph() {
    let t = tempfile::tempdir().unwrap();
    let o = run(&["analyze", "--rtl", &fx("three_file/*.v"), "--out", &s(t.path()), "--ast"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let g: serde_json::Value = serde_json::from_slice(&std::fs::read(t.path().join("design_graph.json")).unwrap()).unwrap();
    assert_eq!(g["schema"], "design_graph.v1");
    assert_eq!(g["root"], "top3");
    let ast: serde_json::Value = serde_json::from_slice(&std::fs::read(t.path().join("ast.json")).unwrap()).unwrap();
    assert_eq!(ast["schema"], "ast.v1");
}

#[test]
fn mock_pipeline_is_rerunnable() {
    let t = tempfile::tempdir().unwrap();
    let mut trees = Vec::new();
    for i in 0..2 {
        let out = t.path().join(format!("run{i}"));
        let o = run(&[
            "pipeline",
            "--llm.mode",
            "mock",
            "--rtl",
            &fx("three_file/*.v"),
            "--spec",
            &fx("three_file/spec.md"),
            "--out",
            &s(&out),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        trees.push(tree(&out));
    }
    let names: Vec<&str> = trees[0].iter().map(|(n, _)| n.as_str()).collect();
    for m in ["leaf", "mid", "top3"] {
        for f in ["module_spec.json", "items.json", "assertions.json", "assertions.sv"] {
            assert!(names.contains(&format!("modules/{m}/{f}").as_str()), "{names:?}");
        }
    }
    assert!(names.contains(&"pipeline.json") && names.contains(&"transcript.jsonl"));
    assert_eq!(trees[0], trees[1]);
}

#[test]
fn staged_commands_match_the_pipeline() {
    let t = tempfile::tempdir().unwrap();
    let (rtl, spec) = (fx("three_file/*.v"), fx("three_file/spec.md"));
    let staged = t.path().join("staged");
    for cmd in ["extract-spec", "gen-items", "gen-assertions"] {
        let o = run(&[cmd, "--llm.mode=mock", "--rtl", &rtl, "--spec", &spec, "--out", &s(&staged)]);
        assert_eq!(code(&o), 0, "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let full = t.path().join("full");
    assert_eq!(code(&run(&["pipeline", "--llm.mode", "mock", "--rtl", &rtl, "--spec", &spec, "--out", &s(&full)])), 0);
    for m in ["leaf", "mid", "top3"] {
        for f in ["items.json", "assertions.json", "assertions.sv"] {
            let rel = format!("modules/{m}/{f}");
            assert_eq!(std::fs::read(staged.join(&rel)).unwrap(), std::fs::read(full.join(&rel)).unwrap(), "{rel}");
        }
    }
    assert!(staged.join("transcripts/gen-items.jsonl").exists());
}

#[test]
fn gen_items_needs_a_spec_for_named_modules() {
    let t = tempfile::tempdir().unwrap();
    let o = run(&["gen-items", "--llm.mode", "mock", "--rtl", &fx("three_file/*.v"), "--module", "leaf", "--out", &s(t.path())]);
    assert_eq!(code(&o), 2);
}

#[test]
fn replayed_i2c_pipeline() {
    let t = tempfile::tempdir().unwrap();
    let o = run(&[
        "pipeline",
        "--llm.mode",
        "replay",
        "--llm.transcript",
        &fx("i2c/transcript.jsonl"),
        "--rtl",
        &fx("i2c/*.v"),
        "--spec",
        &fx("i2c/spec.md"),
        "--out",
        &s(t.path()),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(std::fs::read(t.path().join("transcript.jsonl")).unwrap(), std::fs::read(fixtures().join("i2c/transcript.jsonl")).unwrap());
}

#[test]
fn live_mode_without_key_is_an_operational_error() {
    let t = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_modassert"))
        .args(["pipeline", "--rtl", &fx("three_file/*.v"), "--spec", &fx("three_file/spec.md"), "--out", &s(t.path())])
        .env_remove("MODASSERT_API_KEY")
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("MODASSERT_API_KEY"));
}

#[test]
fn validate_exit_codes() {
    let t = tempfile::tempdir().unwrap();
    let good = t.path().join("good.sv");
    std::fs::write(&good, "assert property (@(posedge clk) leaf.d == 4'h1 |=> leaf.q == 4'h1);\n").unwrap();
    let bad = t.path().join("bad.sv");
    std::fs::write(&bad, "assert property (@(posedge clk) leaf.d == 4'h1 |=> leaf.q == 4'h1);\nassert property (@(posedge clk) leaf.d |-> );\n")
        .unwrap();
    let rtl = fx("three_file/leaf.v");
    let o = run(&["validate", "--rtl", &rtl, "--assertions", &s(&good), "--out", &s(t.path())]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let o = run(&["validate", "--rtl", &rtl, "--assertions", &s(&bad), "--out", &s(t.path())]);
    assert_eq!(code(&o), 1);
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(t.path().join("verdicts.json")).unwrap()).unwrap();
    assert_eq!(v["schema"], "verdicts.v1");
    assert_eq!((v["N"].as_u64(), v["S"].as_u64()), (Some(2), Some(1)));
}

const LEAF_VCD: &str = "$timescale 1ns $end
$scope module tb $end
$scope module dut $end
$var wire 1 ! clk $end
$var wire 4 \" d [3:0] $end
$var wire 4 # q [3:0] $end
$upscope $end
$upscope $end
$enddefinitions $end
#0
0!
b0001 \"
b0000 #
#5
1!
#6
b0001 #
#10
0!
#12
b0000 \"
#15
1!
#20
0!
";

#[test]
fn check_trace_reports_failures() {
    let t = tempfile::tempdir().unwrap();
    let vcd = t.path().join("leaf.vcd");
    std::fs::write(&vcd, LEAF_VCD).unwrap();
    let a = t.path().join("a.sv");
    std::fs::write(&a, "assert property (@(posedge clk) leaf.d == 4'h1 |=> leaf.q == 4'h1);\n").unwrap();
    let rtl = fx("three_file/leaf.v");
    let o = run(&["check-trace", "--rtl", &rtl, "--assertions", &s(&a), "--vcd", &s(&vcd), "--out", &s(t.path())]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    std::fs::write(&a, "assert property (@(posedge clk) leaf.d == 4'h1 |=> leaf.q == 4'h2);\n").unwrap();
    let o = run(&["check-trace", "--rtl", &rtl, "--assertions", &s(&a), "--vcd", &s(&vcd), "--out", &s(t.path())]);
    assert_eq!(code(&o), 1);
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(t.path().join("trace_verdicts.json")).unwrap()).unwrap();
    assert_eq!(v["schema"], "trace_verdicts.v1");
    assert_eq!(v["verdicts"][0]["verdict"], "fail");
    assert_eq!(v["verdicts"][0]["first_fail_cycle"], 1);
}

#[test]
fn report_formats() {
    let o = run(&["report", "--format", "csv"]);
    assert_eq!(code(&o), 0);
    assert_eq!(String::from_utf8_lossy(&o.stdout).lines().count(), 1);
    assert_eq!(code(&run(&["report", "--format", "yaml"])), 2);

    let t = tempfile::tempdir().unwrap();
    let vcd = t.path().join("leaf.vcd");
    std::fs::write(&vcd, LEAF_VCD).unwrap();
    let a = t.path().join("a.sv");
    std::fs::write(&a, "assert property (@(posedge clk) leaf.d == 4'h1 |=> leaf.q == 4'h1);\n").unwrap();
    let b = t.path().join("b.sv");
    std::fs::write(
        &b,
        "assert property (@(posedge clk) leaf.d == 4'h1 |=> leaf.q == 4'h1);\nassert property (@(posedge clk) leaf.d == 4'h7 |=> leaf.q == 4'h7);\n",
    )
    .unwrap();
    let o = run(&[
        "report",
        "--rtl",
        &fx("three_file/leaf.v"),
        "--set",
        &format!("a={}", s(&a)),
        "--set",
        &format!("b={}", s(&b)),
        "--merge",
        "ab=a,b",
        "--vcd",
        &s(&vcd),
        "--format",
        "json",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let rows = v["rows"].as_array().unwrap();
    let ids: Vec<&str> = rows.iter().map(|r| r["set_id"].as_str().unwrap()).collect();
    assert_eq!(ids, ["a", "ab", "b"]);
    assert_eq!(rows[1]["N"], 2);
    assert_eq!(rows[2]["P_trace"], 2);
    assert_eq!(rows[2]["NVR_percent"], 50.0);
}

#[test]
fn usage_and_config_errors() {
    assert_eq!(code(&run(&["frobnicate"])), 64);
    assert_eq!(code(&run(&[])), 64);
    assert_eq!(code(&run(&["validate", "--rtl", "x.v"])), 64);
    let o = run(&["analyze", "--llm.mdoel", "x", "--rtl", &fx("three_file/leaf.v")]);
    assert_eq!(code(&o), 64);
    assert!(String::from_utf8_lossy(&o.stderr).contains("did you mean `llm.model`"));
    assert_eq!(code(&run(&["analyze", "--rtl", "/nonexistent/*.v"])), 2);
    assert_eq!(code(&run(&["--help"])), 0);
}

#[test]
fn config_file_supplies_paths() {
    let t = tempfile::tempdir().unwrap();
    let cfg = t.path().join("modassert.toml");
    let out = t.path().join("o");
    std::fs::write(
        &cfg,
        format!("[paths]\nrtl = [{:?}]\nspec = [{:?}]\nout = {:?}\n[llm]\nmode = \"mock\"\n", fx("three_file/*.v"), fx("three_file/spec.md"), s(&out)),
    )
    .unwrap();
    let o = run(&["--config", &s(&cfg), "pipeline"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("modules/top3/assertions.sv").exists());
}

#[test]
fn mutate_then_campaign() {
    let t = tempfile::tempdir().unwrap();
    let rtl = fx("latency/*.v");
    let o = run(&["mutate", "--rtl", &rtl, "--mutate.budget", "4", "--mutate.seed", "3", "--out", &s(t.path())]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let muts: serde_json::Value = serde_json::from_slice(&std::fs::read(t.path().join("mutants.json")).unwrap()).unwrap();
    assert_eq!(muts.as_array().unwrap().len(), 4);
    let o = run(&[
        "campaign",
        "--rtl",
        &rtl,
        "--mutants",
        &s(&t.path().join("mutants.json")),
        "--set",
        &format!("deep={}", fx("latency/deep.sv")),
        "--set",
        &format!("base={}", fx("latency/baseline.sv")),
        "--testbench",
        &fx("latency/stimulus.json"),
        "--mutate.jobs",
        "2",
        "--out",
        &s(t.path()),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let c: serde_json::Value = serde_json::from_slice(&std::fs::read(t.path().join("campaign.json")).unwrap()).unwrap();
    assert_eq!(c["schema"], "campaign.v1");
    assert_eq!(c["mutants_total"], 4);
    let o = run(&["report", "--campaign", &s(&t.path().join("campaign.json")), "--format", "csv"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}
