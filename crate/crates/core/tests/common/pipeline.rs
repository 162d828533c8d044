// SPDX-License-Identifier: Apache-2.0

//! Mock pipeline runs and an independent scan of spec prompts for text
//! copied out of module bodies.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use modassert::llm::{Gateway, MockBackend, Stage};
use modassert::pipeline::{run_pipeline, write_bundle, PipelineBundle, PipelineConfig, SpecDocument};
use modassert::verilog::{load_design, PreprocessOptions, SourceUnit};
use regex::Regex;

use super::corpus::fixtures;

pub struct PipelineCase {
    pub name: &'static str,
    pub files: Vec<PathBuf>,
    pub spec: PathBuf,
}

pub fn cases() -> Vec<PipelineCase> {
    let fx = fixtures();
    vec![
        PipelineCase {
            name: "three_file",
            files: ["leaf.v", "mid.v", "top.v"].iter().map(|f| fx.join("three_file").join(f)).collect(),
            spec: fx.join("three_file/spec.md"),
        },
        PipelineCase {
            name: "i2c",
            files: ["i2c_master_bit_ctrl.v", "i2c_master_byte_ctrl.v", "i2c_master_top.v"]
                .iter()
                .map(|f| fx.join("i2c").join(f))
                .collect(),
            spec: fx.join("i2c/spec.md"),
        },
    ]
}

pub fn run_mock(case: &PipelineCase) -> (SourceUnit, PipelineBundle) {
    let unit = load_design(&case.files, &PreprocessOptions::default()).unwrap();
    let doc = SpecDocument::load(std::slice::from_ref(&case.spec)).unwrap();
    let gw = Gateway::new(Box::new(MockBackend));
    let bundle = run_pipeline(&gw, &PipelineConfig::default(), &doc, &unit, None).unwrap();
    (unit, bundle)
}

/// Every file under `dir` with its bytes, sorted by relative path.
pub fn tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
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

/// Bundle written to a fresh directory, as bytes.
pub fn bundle_bytes(case: &PipelineCase) -> Vec<(String, Vec<u8>)> {
    let (_, bundle) = run_mock(case);
    let dir = tempfile::tempdir().unwrap();
    write_bundle(&bundle, dir.path()).unwrap();
    tree(dir.path())
}

/// Assertions whose items exist, and items whose spec exists, as
/// (traced, total) counts.
pub fn lineage_counts(bundle: &PipelineBundle) -> ((usize, usize), (usize, usize)) {
    let (mut a_ok, mut a_all, mut i_ok, mut i_all) = (0, 0, 0, 0);
    for m in &bundle.modules {
        let spec_hash = m.spec.as_ref().map(|s| s.content_hash());
        let item_ids: BTreeSet<&str> = m.items.iter().map(|i| i.id.as_str()).collect();
        for i in &m.items {
            i_all += 1;
            if i.module == m.module && spec_hash.as_deref() == Some(i.spec_ref.as_str()) {
                i_ok += 1;
            }
        }
        for a in &m.assertions {
            a_all += 1;
            if !a.item_ids.is_empty() && a.item_ids.iter().all(|id| item_ids.contains(id.as_str())) {
                a_ok += 1;
            }
        }
    }
    ((a_ok, a_all), (i_ok, i_all))
}

fn word_stream(text: &str) -> Vec<&str> {
    Regex::new(r"[A-Za-z0-9_]+").unwrap().find_iter(text).map(|m| m.as_str()).collect()
}

/// Source text of `module` after its header, up to `endmodule`.
fn raw_body(unit: &SourceUnit, module: &str) -> String {
    let m = unit.modules.iter().find(|m| m.name.name == module).unwrap();
    let file = unit.files.iter().find(|f| f.path == m.file).unwrap();
    let start = Regex::new(&format!(r"\bmodule\s+{module}\b")).unwrap().find(&file.text).unwrap().start();
    let rest = &file.text[start..];
    let header_end = rest.find(");").unwrap() + 2;
    let end = rest.find("endmodule").unwrap();
    rest[header_end..end].to_string()
}

/// Spec-stage prompts sharing a run of five words with their target
/// module's body, as (module, shared words).
pub fn copied_runs(unit: &SourceUnit, bundle: &PipelineBundle) -> (usize, Vec<(String, String)>) {
    let target = Regex::new(r"specification of module `([A-Za-z0-9_]+)`").unwrap();
    let mut scanned = 0;
    let mut hits = Vec::new();
    for e in bundle.transcript.iter().filter(|e| e.request.stage == Stage::SpecExtract) {
        let module = &target.captures(&e.request.user_text).unwrap()[1];
        let body = raw_body(unit, module);
        let grams: BTreeSet<Vec<&str>> = word_stream(&body).windows(5).map(|w| w.to_vec()).collect();
        scanned += 1;
        for w in word_stream(&e.request.user_text).windows(5) {
            if grams.contains(w) {
                hits.push((module.to_string(), w.join(" ")));
            }
        }
    }
    (scanned, hits)
}
