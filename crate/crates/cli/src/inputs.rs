// SPDX-License-Identifier: Apache-2.0

//! Assertion-file loading and `ID=A,B` arguments.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use modassert::pipeline::Assertion;
use modassert::sva::split_assertions;
use serde::Deserialize;

#[derive(Deserialize)]
struct AssertionsFile {
    module: String,
    assertions: Vec<Assertion>,
}

fn expand(patterns: &[String]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in patterns {
        let mut hits: Vec<PathBuf> = glob::glob(p).with_context(|| format!("bad pattern `{p}`"))?.collect::<Result<_, _>>()?;
        if hits.is_empty() {
            bail!("`{p}` matches no files");
        }
        hits.sort();
        out.extend(hits);
    }
    Ok(out)
}

fn stem(p: &Path) -> String {
    p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| p.display().to_string())
}

/// `(id, text)` pairs from `.sv` files (one per `assert property`) and
/// `assertions.v1` JSON. `.sv` ids are `<file stem>:<n>`, JSON ids are
/// `<module>/<id>`; the full path replaces the stem when stems repeat.
pub fn load_assertions(patterns: &[String]) -> Result<Vec<(String, String)>> {
    let files = expand(patterns)?;
    let mut stems: BTreeMap<String, usize> = BTreeMap::new();
    for f in &files {
        *stems.entry(stem(f)).or_default() += 1;
    }
    let mut out = Vec::new();
    for f in &files {
        let text = std::fs::read_to_string(f).with_context(|| format!("reading {}", f.display()))?;
        if f.extension().is_some_and(|e| e == "json") {
            let doc: AssertionsFile = serde_json::from_str(&text).with_context(|| format!("parsing {}", f.display()))?;
            out.extend(doc.assertions.into_iter().map(|a| (format!("{}/{}", doc.module, a.id), a.sva_text)));
        } else {
            let s = stem(f);
            let tag = if stems[&s] > 1 { f.display().to_string() } else { s };
            out.extend(split_assertions(&text).into_iter().enumerate().map(|(i, a)| (format!("{tag}:{}", i + 1), a)));
        }
    }
    Ok(out)
}

/// Split `ID=A,B,...` into the id and its non-empty parts.
pub fn parse_set_arg(arg: &str) -> Result<(String, Vec<String>)> {
    let Some((id, rest)) = arg.split_once('=') else { bail!("expected ID=VALUE[,VALUE...], got `{arg}`") };
    let parts: Vec<String> = rest.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect();
    if id.trim().is_empty() || parts.is_empty() {
        bail!("expected ID=VALUE[,VALUE...], got `{arg}`");
    }
    Ok((id.trim().to_string(), parts))
}
