// SPDX-License-Identifier: Apache-2.0

//! Per-set metric rows and their JSON, Markdown and CSV renderings.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mutation::{union_score, CampaignResult};
use crate::sva::{normalized_text, ValidationVerdict};
use crate::trace::{nvr_percent, ToggleReport, TraceVerdict, Verdict};

pub const METRICS_SCHEMA: &str = "metrics.v1";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ReportError {
    #[error("inputs describe different designs: `{expected}` and `{found}`")]
    InconsistentDesignId { expected: String, found: String },
    #[error("unknown report format `{0}` (expected json, markdown or csv)")]
    UnknownFormat(String),
    #[error("merge `{merge}` names unknown set `{member}`")]
    UnknownMember { merge: String, member: String },
    #[error("malformed metrics document: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub design: String,
    pub set_id: String,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "S")]
    pub s: usize,
    /// Assertions that passed on the traces, vacuous passes included.
    /// Absent when the set was not checked against any trace.
    #[serde(rename = "P_trace")]
    pub p_trace: Option<usize>,
    #[serde(rename = "NVR_percent")]
    pub nvr_percent: Option<f64>,
    #[serde(rename = "TFC_percent")]
    pub tfc_percent: Option<f64>,
    pub error_coverage_percent: Option<f64>,
    pub median_detect_cycles: Option<f64>,
}

/// Everything known about one assertion set of one design.
#[derive(Debug, Clone, Default)]
pub struct SetEvidence {
    pub design: String,
    pub set_id: String,
    pub validation: Vec<ValidationVerdict>,
    /// Trace verdicts keyed by the same ids as `validation`.
    pub trace: Vec<TraceVerdict>,
    pub toggle: Option<ToggleReport>,
}

/// A row computed over the union of other sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Merge {
    pub set_id: String,
    pub members: Vec<String>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ReportOptions {
    /// Count assertions tagged trivial (bit widths, tautologies).
    pub include_trivial: bool,
}

struct Entry<'a> {
    syntax_ok: bool,
    trace: Option<&'a TraceVerdict>,
}

/// Distinct assertions of the given sets, keyed by normalized text. When
/// a text repeats, the occurrence that sorts first by id wins, so the
/// result does not depend on input order.
fn entries<'a>(sets: &[&'a SetEvidence], opts: ReportOptions) -> BTreeMap<String, Entry<'a>> {
    let mut candidates: Vec<(String, &'a str, &'a str, Entry<'a>)> = Vec::new();
    for s in sets {
        let trace: BTreeMap<&str, &TraceVerdict> = s.trace.iter().map(|t| (t.id.as_str(), t)).collect();
        for v in &s.validation {
            if v.trivial && !opts.include_trivial {
                continue;
            }
            let e = Entry { syntax_ok: v.syntax.ok, trace: trace.get(v.id.as_str()).copied() };
            candidates.push((normalized_text(&v.text), s.set_id.as_str(), v.id.as_str(), e));
        }
    }
    candidates.sort_by(|a, b| (&a.0, a.1, a.2).cmp(&(&b.0, b.1, b.2)));
    let mut out = BTreeMap::new();
    for (text, _, _, e) in candidates {
        out.entry(text).or_insert(e);
    }
    out
}

fn tfc(reports: &[&ToggleReport]) -> Option<f64> {
    if reports.is_empty() {
        return None;
    }
    let coi: BTreeSet<&String> = reports.iter().flat_map(|r| r.coi.members.iter()).collect();
    let toggled: BTreeSet<&String> = reports.iter().flat_map(|r| r.toggled.iter()).collect();
    let denom = reports.iter().map(|r| r.denominator).max().unwrap_or(0).max(coi.len());
    Some(if denom == 0 { 0.0 } else { toggled.len() as f64 * 100.0 / denom as f64 })
}

fn row(design: &str, set_id: &str, sets: &[&SetEvidence], opts: ReportOptions) -> MetricsRow {
    let e = entries(sets, opts);
    let traced: Vec<TraceVerdict> = e.values().filter_map(|x| x.trace.cloned()).collect();
    let checked = sets.iter().any(|s| !s.trace.is_empty());
    let toggles: Vec<&ToggleReport> = sets.iter().filter_map(|s| s.toggle.as_ref()).collect();
    MetricsRow {
        design: design.to_string(),
        set_id: set_id.to_string(),
        n: e.len(),
        s: e.values().filter(|x| x.syntax_ok).count(),
        p_trace: checked.then(|| {
            traced.iter().filter(|t| matches!(t.verdict, Verdict::Pass | Verdict::VacuousPass)).count()
        }),
        nvr_percent: checked.then(|| nvr_percent(&traced)),
        tfc_percent: tfc(&toggles),
        error_coverage_percent: None,
        median_detect_cycles: None,
    }
}

/// One row per set and per merge, sorted by (design, set id).
pub fn aggregate(
    evidence: &[SetEvidence],
    merges: &[Merge],
    campaign: Option<&CampaignResult>,
    opts: ReportOptions,
) -> Result<Vec<MetricsRow>, ReportError> {
    let design = evidence.first().map(|e| e.design.clone()).or_else(|| campaign.map(|c| c.design.clone()));
    let Some(design) = design else { return Ok(vec![]) };
    for found in evidence.iter().map(|e| &e.design).chain(campaign.map(|c| &c.design)) {
        if *found != design {
            return Err(ReportError::InconsistentDesignId { expected: design, found: found.clone() });
        }
    }
    let mut by_id: BTreeMap<&str, Vec<&SetEvidence>> = BTreeMap::new();
    for e in evidence {
        by_id.entry(e.set_id.as_str()).or_default().push(e);
    }
    let mut rows = Vec::new();
    for (id, sets) in &by_id {
        let mut r = row(&design, id, sets, opts);
        if let Some(score) = campaign.and_then(|c| c.set(id)) {
            r.error_coverage_percent = Some(score.error_coverage_percent);
            r.median_detect_cycles = score.median_detect_cycles;
        }
        rows.push(r);
    }
    for m in merges {
        let mut sets = Vec::new();
        for member in &m.members {
            let found = by_id.get(member.as_str()).ok_or_else(|| ReportError::UnknownMember {
                merge: m.set_id.clone(),
                member: member.clone(),
            })?;
            sets.extend(found.iter().copied());
        }
        let mut r = row(&design, &m.set_id, &sets, opts);
        if let Some(c) = campaign {
            if m.members.iter().all(|s| c.set(s).is_some()) {
                let score = union_score(c, &m.set_id, &m.members).expect("members checked");
                r.error_coverage_percent = Some(score.error_coverage_percent);
                r.median_detect_cycles = score.median_detect_cycles;
            }
        }
        rows.push(r);
    }
    rows.sort_by(|a, b| (&a.design, &a.set_id).cmp(&(&b.design, &b.set_id)));
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Markdown,
    Csv,
}

impl FromStr for Format {
    type Err = ReportError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(Format::Json),
            "markdown" | "md" | "markdown-table" => Ok(Format::Markdown),
            "csv" => Ok(Format::Csv),
            other => Err(ReportError::UnknownFormat(other.to_string())),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct MetricsDoc {
    schema: String,
    rows: Vec<MetricsRow>,
}

const COLUMNS: [&str; 9] =
    ["Design", "Set", "N", "S", "P", "NVR (%)", "TFC (%)", "Error coverage (%)", "Median detect cycles"];

fn cells(r: &MetricsRow) -> [String; 9] {
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.2}")).unwrap_or_default();
    [
        r.design.clone(),
        r.set_id.clone(),
        r.n.to_string(),
        r.s.to_string(),
        r.p_trace.map(|p| p.to_string()).unwrap_or_default(),
        opt(r.nvr_percent),
        opt(r.tfc_percent),
        opt(r.error_coverage_percent),
        opt(r.median_detect_cycles),
    ]
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn render(rows: &[MetricsRow], format: Format) -> String {
    match format {
        Format::Json => {
            let doc = MetricsDoc { schema: METRICS_SCHEMA.into(), rows: rows.to_vec() };
            let mut s = serde_json::to_string_pretty(&doc).expect("rows serialize");
            s.push('\n');
            s
        }
        Format::Markdown => {
            let mut out = String::new();
            let _ = writeln!(out, "| {} |", COLUMNS.join(" | "));
            let _ = writeln!(out, "|{}", "---|".repeat(COLUMNS.len()));
            for r in rows {
                let c = cells(r).map(|c| if c.is_empty() { "-".to_string() } else { c.replace('|', "\\|") });
                let _ = writeln!(out, "| {} |", c.join(" | "));
            }
            out
        }
        Format::Csv => {
            let mut out = String::new();
            let _ = writeln!(out, "{}", COLUMNS.join(","));
            for r in rows {
                let _ = writeln!(out, "{}", cells(r).map(|c| csv_field(&c)).join(","));
            }
            out
        }
    }
}

/// Read rows back from [`Format::Json`] output.
pub fn parse_metrics_json(text: &str) -> Result<Vec<MetricsRow>, ReportError> {
    let doc: MetricsDoc = serde_json::from_str(text).map_err(|e| ReportError::Malformed(e.to_string()))?;
    if doc.schema != METRICS_SCHEMA {
        return Err(ReportError::Malformed(format!("schema `{}`", doc.schema)));
    }
    Ok(doc.rows)
}
