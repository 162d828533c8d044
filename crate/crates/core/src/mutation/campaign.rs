// SPDX-License-Identifier: Apache-2.0

//! Running mutants through a simulator and scoring assertion sets.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{apply_mutation, Mutation, MutationError};
use crate::graph::{extract_relationships, DesignGraph};
use crate::sim::{SimError, Simulator};
use crate::sva::{parse_sva, SvaAst};
use crate::trace::{check, parse_vcd, CheckOptions, Verdict};
use crate::verilog::{emit_verilog, file_name, SourceUnit};

pub const CAMPAIGN_SCHEMA: &str = "campaign.v1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssertionSet {
    pub id: String,
    /// `(assertion id, SVA text)`
    pub assertions: Vec<(String, String)>,
}

#[derive(Debug, Clone)]
pub struct CampaignConfig {
    pub jobs: usize,
    pub timeout: Duration,
    pub root: Option<String>,
    pub check: CheckOptions,
    /// Scratch directory for emitted mutants and their waveforms.
    pub workdir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExcludedAssertion {
    pub set_id: String,
    pub assertion_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MutantStatus {
    Simulated,
    Unsimulated,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trigger {
    pub set_id: String,
    pub assertion_id: String,
    pub cycle: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MutantOutcome {
    pub mutation: Mutation,
    pub status: MutantStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    /// Earliest trigger cycle per detecting set.
    pub detected_by: BTreeMap<String, u64>,
    pub triggers: Vec<Trigger>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetScore {
    pub set_id: String,
    /// Assertions that took part (passed on the unmutated design).
    pub active_assertions: usize,
    pub detected: usize,
    pub error_coverage_percent: f64,
    pub median_detect_cycles: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignResult {
    pub schema: String,
    pub design: String,
    pub mutants_total: usize,
    pub mutants_simulated: usize,
    pub sets: Vec<SetScore>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub excluded: Vec<ExcludedAssertion>,
    pub mutants: Vec<MutantOutcome>,
}

impl CampaignResult {
    pub fn set(&self, id: &str) -> Option<&SetScore> {
        self.sets.iter().find(|s| s.set_id == id)
    }
}

struct ParsedSet {
    id: String,
    asserts: Vec<(String, SvaAst)>,
}

fn io_err(path: &Path, source: std::io::Error) -> MutationError {
    MutationError::Io { path: path.display().to_string(), source }
}

/// Emit a unit into `dir`, returning the written source paths.
fn write_sources(unit: &SourceUnit, dir: &Path) -> Result<Vec<PathBuf>, MutationError> {
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let mut out = Vec::new();
    for (i, (path, text)) in emit_verilog(unit).into_iter().enumerate() {
        let p = dir.join(format!("{i:02}_{}", file_name(&path)));
        std::fs::write(&p, text).map_err(|e| io_err(&p, e))?;
        out.push(p);
    }
    Ok(out)
}

pub(crate) fn median(mut v: Vec<u64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_unstable();
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] as f64 } else { (v[n / 2 - 1] + v[n / 2]) as f64 / 2.0 })
}

/// Simulate every mutant once and check every assertion set against the
/// same waveform. Assertions that do not pass on the unmutated design are
/// excluded, since a failure there says nothing about the mutation.
pub fn run_campaign(
    unit: &SourceUnit,
    mutations: &[Mutation],
    sets: &[AssertionSet],
    sim: &dyn Simulator,
    testbench: &Path,
    cfg: &CampaignConfig,
) -> Result<CampaignResult, MutationError> {
    let graph = extract_relationships(unit, cfg.root.as_deref()).map_err(|e| SimError::Elaboration(e.to_string()))?;
    let golden_dir = cfg.workdir.join("golden");
    let golden_srcs = write_sources(unit, &golden_dir)?;
    let golden_vcd = golden_dir.join("trace.vcd");
    sim.run(&golden_srcs, testbench, &golden_vcd, cfg.timeout)?;
    let golden = parse_vcd(&golden_vcd).map_err(|e| SimError::Crash(format!("golden waveform: {e}")))?;

    let mut excluded = Vec::new();
    let mut parsed = Vec::new();
    for set in sets {
        let mut asserts = Vec::new();
        for (aid, text) in &set.assertions {
            let reason = match parse_sva(text) {
                Err(e) => Some(format!("syntax: {e}")),
                Ok(ast) => match check(aid, &ast, &[&golden], Some(&graph), &cfg.check) {
                    Err(e) => Some(e.to_string()),
                    Ok(v) if v.verdict == Verdict::Fail => {
                        Some(format!("fails on the unmutated design at cycle {}", v.first_fail_cycle.unwrap_or(0)))
                    }
                    Ok(_) => {
                        asserts.push((aid.clone(), ast));
                        None
                    }
                },
            };
            if let Some(reason) = reason {
                excluded.push(ExcludedAssertion { set_id: set.id.clone(), assertion_id: aid.clone(), reason });
            }
        }
        parsed.push(ParsedSet { id: set.id.clone(), asserts });
    }

    let next = AtomicUsize::new(0);
    let outcomes: Mutex<Vec<MutantOutcome>> = Mutex::new(Vec::new());
    let fatal: Mutex<Option<MutationError>> = Mutex::new(None);
    let jobs = cfg.jobs.max(1).min(mutations.len().max(1));
    std::thread::scope(|s| {
        for _ in 0..jobs {
            s.spawn(|| loop {
                if fatal.lock().unwrap().is_some() {
                    return;
                }
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(m) = mutations.get(i) else { return };
                match run_one(unit, m, &parsed, &graph, sim, testbench, cfg) {
                    Ok(o) => outcomes.lock().unwrap().push(o),
                    Err(e) => {
                        fatal.lock().unwrap().get_or_insert(e);
                    }
                }
            });
        }
    });
    if let Some(e) = fatal.into_inner().unwrap() {
        return Err(e);
    }
    let mut mutants = outcomes.into_inner().unwrap();
    mutants.sort_by(|a, b| a.mutation.id.cmp(&b.mutation.id));
    let simulated = mutants.iter().filter(|m| m.status == MutantStatus::Simulated).count();
    let scores = parsed
        .iter()
        .map(|p| {
            let cycles: Vec<u64> = mutants.iter().filter_map(|m| m.detected_by.get(&p.id).copied()).collect();
            let detected = cycles.len();
            SetScore {
                set_id: p.id.clone(),
                active_assertions: p.asserts.len(),
                detected,
                error_coverage_percent: if simulated == 0 { 0.0 } else { detected as f64 * 100.0 / simulated as f64 },
                median_detect_cycles: median(cycles),
            }
        })
        .collect();
    Ok(CampaignResult {
        schema: CAMPAIGN_SCHEMA.to_string(),
        design: graph.root.clone(),
        mutants_total: mutations.len(),
        mutants_simulated: simulated,
        sets: scores,
        excluded,
        mutants,
    })
}

fn run_one(
    unit: &SourceUnit,
    m: &Mutation,
    sets: &[ParsedSet],
    graph: &DesignGraph,
    sim: &dyn Simulator,
    testbench: &Path,
    cfg: &CampaignConfig,
) -> Result<MutantOutcome, MutationError> {
    let mutant = apply_mutation(unit, m)?;
    let dir = cfg.workdir.join(&m.id);
    let srcs = write_sources(&mutant, &dir)?;
    let vcd = dir.join("trace.vcd");
    let unsimulated = |msg: String| MutantOutcome {
        mutation: m.clone(),
        status: MutantStatus::Unsimulated,
        message: Some(msg),
        detected_by: BTreeMap::new(),
        triggers: Vec::new(),
    };
    match sim.run(&srcs, testbench, &vcd, cfg.timeout) {
        Ok(()) => {}
        Err(e @ SimError::SimulatorNotFound(_)) => return Err(e.into()),
        Err(e) => return Ok(unsimulated(e.to_string())),
    }
    let wave = match parse_vcd(&vcd) {
        Ok(w) => w,
        Err(e) => return Ok(unsimulated(e.to_string())),
    };
    let mut triggers = Vec::new();
    let mut detected_by = BTreeMap::new();
    for set in sets {
        for (aid, ast) in &set.asserts {
            // a mutant may remove a signal the assertion names; that is
            // not a detection
            let Ok(v) = check(aid, ast, &[&wave], Some(graph), &cfg.check) else { continue };
            if let (Verdict::Fail, Some(c)) = (v.verdict, v.first_fail_cycle) {
                triggers.push(Trigger { set_id: set.id.clone(), assertion_id: aid.clone(), cycle: c });
                let e = detected_by.entry(set.id.clone()).or_insert(c);
                *e = (*e).min(c);
            }
        }
    }
    Ok(MutantOutcome { mutation: m.clone(), status: MutantStatus::Simulated, message: None, detected_by, triggers })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetDelta {
    pub design: String,
    pub baseline: String,
    pub augmented: String,
    pub baseline_percent: f64,
    pub augmented_percent: f64,
    pub delta_points: f64,
    pub only_augmented: Vec<String>,
    pub only_baseline: Vec<String>,
}

pub fn compare_sets(result: &CampaignResult, baseline: &str, augmented: &str) -> Result<SetDelta, MutationError> {
    let b = result.set(baseline).ok_or_else(|| MutationError::UnknownSetId(baseline.to_string()))?;
    let a = result.set(augmented).ok_or_else(|| MutationError::UnknownSetId(augmented.to_string()))?;
    let hits = |id: &str| -> BTreeSet<String> {
        result.mutants.iter().filter(|m| m.detected_by.contains_key(id)).map(|m| m.mutation.id.clone()).collect()
    };
    let (hb, ha) = (hits(baseline), hits(augmented));
    Ok(SetDelta {
        design: result.design.clone(),
        baseline: baseline.to_string(),
        augmented: augmented.to_string(),
        baseline_percent: b.error_coverage_percent,
        augmented_percent: a.error_coverage_percent,
        delta_points: a.error_coverage_percent - b.error_coverage_percent,
        only_augmented: ha.difference(&hb).cloned().collect(),
        only_baseline: hb.difference(&ha).cloned().collect(),
    })
}

/// Score of the union of several sets: a mutant counts as detected when
/// any member detects it, at the earliest member trigger cycle.
pub fn union_score(result: &CampaignResult, union_id: &str, members: &[String]) -> Result<SetScore, MutationError> {
    let mut active = 0;
    for m in members {
        active += result.set(m).ok_or_else(|| MutationError::UnknownSetId(m.clone()))?.active_assertions;
    }
    let cycles: Vec<u64> = result
        .mutants
        .iter()
        .filter(|m| m.status == MutantStatus::Simulated)
        .filter_map(|m| members.iter().filter_map(|s| m.detected_by.get(s)).min().copied())
        .collect();
    let detected = cycles.len();
    Ok(SetScore {
        set_id: union_id.to_string(),
        active_assertions: active,
        detected,
        error_coverage_percent: if result.mutants_simulated == 0 {
            0.0
        } else {
            detected as f64 * 100.0 / result.mutants_simulated as f64
        },
        median_detect_cycles: median(cycles),
    })
}

/// Plain-text summary: one line per set, then one line per mutant.
pub fn campaign_table(r: &CampaignResult) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    let _ = writeln!(out, "design {}: {} mutants, {} simulated", r.design, r.mutants_total, r.mutants_simulated);
    let _ = writeln!(out, "{:<20} {:>7} {:>9} {:>10} {:>13}", "set", "active", "detected", "coverage%", "median cycle");
    for s in &r.sets {
        let med = s.median_detect_cycles.map(|m| format!("{m:.1}")).unwrap_or_else(|| "-".into());
        let _ = writeln!(
            out,
            "{:<20} {:>7} {:>9} {:>10.1} {:>13}",
            s.set_id, s.active_assertions, s.detected, s.error_coverage_percent, med
        );
    }
    out.push('\n');
    for m in &r.mutants {
        let mu = &m.mutation;
        let what = format!("{:?} `{}` -> `{}`", mu.operator, mu.original, mu.mutated);
        let det = match m.status {
            MutantStatus::Unsimulated => "unsimulated".to_string(),
            MutantStatus::Simulated if m.detected_by.is_empty() => "undetected".to_string(),
            MutantStatus::Simulated => m.detected_by.iter().map(|(s, c)| format!("{s}@{c}")).collect::<Vec<_>>().join(" "),
        };
        let _ = writeln!(out, "{} {}:{}:{} {} {}", mu.id, mu.site.module, mu.site.line, mu.site.col, what, det);
    }
    out
}
