// SPDX-License-Identifier: Apache-2.0

//! Verilog front end: preprocessing, parsing, width resolution and
//! canonical re-emission.

pub mod ast;
pub mod emit;
pub mod lexer;
pub mod number;
pub mod parser;
pub mod preprocess;
pub mod widths;

use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

pub use ast::*;
pub use emit::{emit_module, emit_unit, emit_verilog, expr_text, item_text};
pub use parser::{parse_expression, parse_verilog, ParseError};
pub use preprocess::PreprocessOptions;
pub use widths::resolve_widths;

#[derive(Debug, Error)]
pub enum FrontendError {
    #[error("cannot read `{path}`: {source}")]
    FileUnreadable {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Read source files from disk, in the given order.
pub fn read_sources(paths: &[PathBuf]) -> Result<Vec<(String, String)>, FrontendError> {
    paths
        .iter()
        .map(|p| {
            std::fs::read_to_string(p)
                .map(|t| (p.display().to_string(), t))
                .map_err(|source| FrontendError::FileUnreadable { path: p.clone(), source })
        })
        .collect()
}

/// Read, parse and resolve widths in one step.
pub fn load_design(paths: &[PathBuf], opts: &PreprocessOptions) -> Result<SourceUnit, FrontendError> {
    let files = read_sources(paths)?;
    let mut unit = parse_verilog(&files, opts);
    resolve_widths(&mut unit);
    Ok(unit)
}

pub const AST_SCHEMA: &str = "ast.v1";

#[derive(Serialize)]
struct AstDump<'a> {
    schema: &'static str,
    #[serde(flatten)]
    unit: &'a SourceUnit,
}

/// JSON dump of a compilation unit tagged with its schema id.
pub fn ast_json(unit: &SourceUnit) -> serde_json::Value {
    serde_json::to_value(AstDump { schema: AST_SCHEMA, unit }).expect("AST serializes")
}

pub fn file_name(path: &str) -> &str {
    Path::new(path).file_name().and_then(|s| s.to_str()).unwrap_or(path)
}
