// SPDX-License-Identifier: Apache-2.0

//! Simulation backends for mutation campaigns.
//!
//! [`BuiltinSimulator`] is a two-state, cycle-based simulator for the
//! synthesizable subset the parser models. [`CommandSimulator`] runs an
//! external tool through a command template.

mod engine;

use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use wait_timeout::ChildExt;

pub use engine::{simulate, Design};

use crate::trace::write_vcd;
use crate::verilog::{parse_verilog, read_sources, resolve_widths, PreprocessOptions};

pub const STIMULUS_SCHEMA: &str = "stimulus.v1";

#[derive(Debug, Error)]
pub enum SimError {
    #[error("simulator not found: {0}")]
    SimulatorNotFound(String),
    #[error("simulation exceeded {0:?}")]
    TimeoutExceeded(Duration),
    #[error("simulation failed: {0}")]
    Crash(String),
    #[error("cannot elaborate design: {0}")]
    Elaboration(String),
    #[error("bad stimulus: {0}")]
    Stimulus(String),
    #[error("I/O error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClockSpec {
    pub signal: String,
    /// Full clock period in time units; must be even.
    pub period: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputSet {
    pub cycle: u64,
    /// Port name → value (integer, or a Verilog literal string).
    pub set: std::collections::BTreeMap<String, serde_json::Value>,
}

/// Clocked stimulus for the built-in simulator. Inputs listed for cycle
/// `k` are applied at `k * period`; the rising clock edge of cycle `k` is
/// at `k * period + period / 2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Stimulus {
    pub schema: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub top: Option<String>,
    pub clock: ClockSpec,
    pub cycles: u64,
    #[serde(default)]
    pub inputs: Vec<InputSet>,
}

impl Stimulus {
    pub fn load(path: &Path) -> Result<Stimulus, SimError> {
        let text = std::fs::read_to_string(path).map_err(|source| SimError::Io { path: path.display().to_string(), source })?;
        let s: Stimulus = serde_json::from_str(&text).map_err(|e| SimError::Stimulus(format!("{}: {e}", path.display())))?;
        if s.schema != STIMULUS_SCHEMA {
            return Err(SimError::Stimulus(format!("expected schema {STIMULUS_SCHEMA}, found {}", s.schema)));
        }
        if s.clock.period < 2 || !s.clock.period.is_multiple_of(2) {
            return Err(SimError::Stimulus("clock period must be even and at least 2".into()));
        }
        Ok(s)
    }
}

pub trait Simulator: Sync {
    /// Simulate `sources` under `testbench`, writing a VCD to `vcd_out`.
    fn run(&self, sources: &[PathBuf], testbench: &Path, vcd_out: &Path, timeout: Duration) -> Result<(), SimError>;
}

/// In-process simulator; the testbench is a `stimulus.v1` JSON file.
#[derive(Debug, Clone, Default)]
pub struct BuiltinSimulator {
    pub root: Option<String>,
    pub preprocess: PreprocessOptions,
}

impl Simulator for BuiltinSimulator {
    fn run(&self, sources: &[PathBuf], testbench: &Path, vcd_out: &Path, timeout: Duration) -> Result<(), SimError> {
        let stim = Stimulus::load(testbench)?;
        let files = read_sources(sources).map_err(|e| SimError::Elaboration(e.to_string()))?;
        let mut unit = parse_verilog(&files, &self.preprocess);
        if let Some(e) = unit.errors().next() {
            return Err(SimError::Elaboration(e.to_string()));
        }
        resolve_widths(&mut unit);
        let top = stim.top.clone().or_else(|| self.root.clone());
        let design = Design::elaborate(&unit, top.as_deref())?;
        let wave = simulate(&design, &stim, Some(Instant::now() + timeout))?;
        std::fs::write(vcd_out, write_vcd(&wave)).map_err(|source| SimError::Io { path: vcd_out.display().to_string(), source })
    }
}

/// External simulator driven by a shell command template with
/// `{sources}`, `{testbench}` and `{vcd_out}` placeholders.
#[derive(Debug, Clone)]
pub struct CommandSimulator {
    pub template: String,
}

fn shell_quote(s: &str) -> String {
    if !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || "/._-+=:,".contains(c)) {
        s.to_string()
    } else {
        format!("'{}'", s.replace('\'', r"'\''"))
    }
}

impl CommandSimulator {
    pub fn command_line(&self, sources: &[PathBuf], testbench: &Path, vcd_out: &Path) -> String {
        let srcs: Vec<String> = sources.iter().map(|p| shell_quote(&p.display().to_string())).collect();
        self.template
            .replace("{sources}", &srcs.join(" "))
            .replace("{testbench}", &shell_quote(&testbench.display().to_string()))
            .replace("{vcd_out}", &shell_quote(&vcd_out.display().to_string()))
    }
}

impl Simulator for CommandSimulator {
    fn run(&self, sources: &[PathBuf], testbench: &Path, vcd_out: &Path, timeout: Duration) -> Result<(), SimError> {
        let cmd = self.command_line(sources, testbench, vcd_out);
        let program = self.template.split_whitespace().next().unwrap_or_default().to_string();
        let workdir = vcd_out.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(&cmd)
            .current_dir(workdir)
            .stdin(Stdio::null())
            .stdout(Stdio::null())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| SimError::SimulatorNotFound(format!("sh: {e}")))?;
        let status = match child.wait_timeout(timeout).map_err(|e| SimError::Crash(e.to_string()))? {
            Some(s) => s,
            None => {
                let _ = child.kill();
                let _ = child.wait();
                return Err(SimError::TimeoutExceeded(timeout));
            }
        };
        let mut stderr = String::new();
        if let Some(mut e) = child.stderr.take() {
            use std::io::Read;
            let _ = e.read_to_string(&mut stderr);
        }
        match status.code() {
            Some(0) => {}
            Some(127) => return Err(SimError::SimulatorNotFound(program)),
            code => return Err(SimError::Crash(format!("exit status {code:?}: {}", stderr.trim()))),
        }
        if !vcd_out.exists() {
            return Err(SimError::Crash(format!("no VCD written to {}", vcd_out.display())));
        }
        Ok(())
    }
}
