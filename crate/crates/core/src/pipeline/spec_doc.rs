// SPDX-License-Identifier: Apache-2.0

//! Design specification text, split into headed sections.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::PipelineError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Section {
    pub file: usize,
    pub heading: String,
    /// Byte span of the section body within its file, heading included.
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpecDocument {
    pub files: Vec<(String, String)>,
    pub sections: Vec<Section>,
}

static HEADING: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^(#{1,6}\s+\S.*|\d+(\.\d+)*\.?\s+[A-Z].*)$").unwrap());

pub(crate) fn words(text: &str) -> impl Iterator<Item = &str> {
    text.split(|c: char| !(c.is_alphanumeric() || c == '_')).filter(|w| !w.is_empty())
}

impl SpecDocument {
    pub fn from_texts(files: Vec<(String, String)>) -> Result<Self, PipelineError> {
        if files.iter().all(|(_, t)| t.trim().is_empty()) {
            return Err(PipelineError::EmptySpec);
        }
        let mut sections = Vec::new();
        for (fi, (_, text)) in files.iter().enumerate() {
            let mut heads: Vec<(usize, String)> = Vec::new();
            let mut off = 0;
            for line in text.split_inclusive('\n') {
                let l = line.trim_end();
                if HEADING.is_match(l) {
                    heads.push((off, l.trim_start_matches('#').trim().to_string()));
                }
                off += line.len();
            }
            if heads.first().is_none_or(|(s, _)| !text[..*s].trim().is_empty()) {
                heads.insert(0, (0, String::new()));
            }
            for (i, (start, heading)) in heads.iter().enumerate() {
                let end = heads.get(i + 1).map_or(text.len(), |h| h.0);
                sections.push(Section { file: fi, heading: heading.clone(), start: *start, end });
            }
        }
        Ok(SpecDocument { files, sections })
    }

    pub fn load(paths: &[PathBuf]) -> Result<Self, PipelineError> {
        let mut files = Vec::new();
        for p in paths {
            let text = std::fs::read_to_string(p).map_err(|e| PipelineError::Io { path: p.clone(), message: e.to_string() })?;
            files.push((p.display().to_string(), text));
        }
        SpecDocument::from_texts(files)
    }

    pub fn section_text(&self, s: &Section) -> &str {
        &self.files[s.file].1[s.start..s.end]
    }

    pub fn word_count(&self) -> usize {
        self.files.iter().map(|(_, t)| words(t).count()).sum()
    }

    /// The whole text when it fits in `budget` words; otherwise the `top_k`
    /// sections sharing the most words with `keywords`, in document order,
    /// truncated to the budget.
    pub fn select(&self, keywords: &BTreeSet<String>, budget: usize, top_k: usize) -> String {
        if self.word_count() <= budget {
            return self.files.iter().map(|(_, t)| t.trim_end()).collect::<Vec<_>>().join("\n\n");
        }
        let mut scored: Vec<(usize, usize)> = self
            .sections
            .iter()
            .enumerate()
            .map(|(i, s)| (words(self.section_text(s)).filter(|w| keywords.contains(&w.to_lowercase())).count(), i))
            .collect();
        scored.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        let mut chosen: Vec<usize> = scored.iter().take(top_k).map(|s| s.1).collect();
        chosen.sort();
        let mut out = String::new();
        let mut used = 0;
        for i in chosen {
            for line in self.section_text(&self.sections[i]).lines() {
                let n = words(line).count();
                if used + n > budget {
                    return out;
                }
                used += n;
                out.push_str(line);
                out.push('\n');
            }
        }
        out
    }
}
