// SPDX-License-Identifier: Apache-2.0

use std::path::{Path, PathBuf};

use modassert::verilog::{emit_verilog, load_design, parse_verilog, resolve_widths, PreprocessOptions, SourceUnit};

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

#[derive(Debug, Clone)]
pub struct CorpusDesign {
    pub name: String,
    pub files: Vec<PathBuf>,
    pub open_source: bool,
}

fn verilog_files(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "v"))
        .collect();
    v.sort();
    v
}

/// Every design shipped under `tests/fixtures`: one per file in
/// `designs/`, one per multi-file directory, and the open-source cores.
pub fn corpus() -> Vec<CorpusDesign> {
    let fx = fixtures();
    let mut out: Vec<CorpusDesign> = verilog_files(&fx.join("designs"))
        .into_iter()
        .map(|p| CorpusDesign { name: p.file_stem().unwrap().to_string_lossy().into_owned(), files: vec![p], open_source: false })
        .collect();
    for d in ["three_file", "latency", "i2c"] {
        out.push(CorpusDesign { name: d.into(), files: verilog_files(&fx.join(d)), open_source: false });
    }
    for d in ["serv", "servant"] {
        out.push(CorpusDesign { name: d.into(), files: verilog_files(&fx.join("oss").join(d)), open_source: true });
    }
    out
}

pub fn load(d: &CorpusDesign) -> SourceUnit {
    load_design(&d.files, &PreprocessOptions::default()).unwrap()
}

/// Parse, emit and parse again. Returns a description of the first
/// structural difference, if any.
pub fn round_trip(d: &CorpusDesign) -> Result<(), String> {
    let first = load(d);
    if let Some(e) = first.errors().next() {
        return Err(format!("{}: parse error {e}", d.name));
    }
    let emitted = emit_verilog(&first);
    let mut second = parse_verilog(&emitted, &PreprocessOptions::default());
    resolve_widths(&mut second);
    if let Some(e) = second.errors().next() {
        return Err(format!("{}: re-parse error {e}", d.name));
    }
    if first.modules.len() != second.modules.len() {
        return Err(format!("{}: {} modules became {}", d.name, first.modules.len(), second.modules.len()));
    }
    for (a, b) in first.modules.iter().zip(&second.modules) {
        if a != b {
            return Err(format!("{}: module `{}` changed", d.name, a.name.name));
        }
    }
    Ok(())
}
