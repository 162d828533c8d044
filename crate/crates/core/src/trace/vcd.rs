// SPDX-License-Identifier: Apache-2.0

//! Value change dump reader.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use super::TraceError;
use crate::value::Value;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WaveSignal {
    pub width: u32,
    /// Declared `(msb, lsb)` when the dump gives one.
    pub range: Option<(i64, i64)>,
    /// Index into [`Waveform::changes`]; aliased variables share a slot.
    #[serde(skip)]
    pub slot: usize,
}

#[derive(Debug, Clone, Default)]
pub struct Waveform {
    pub timescale: Option<String>,
    /// Flattened hierarchical name → signal.
    pub signals: BTreeMap<String, WaveSignal>,
    /// Time-sorted change lists, one per identifier code.
    pub changes: Vec<Vec<(u64, Value)>>,
    pub end_time: u64,
}

impl Waveform {
    pub fn signal(&self, name: &str) -> Option<&WaveSignal> {
        self.signals.get(name)
    }

    pub fn changes_of(&self, name: &str) -> Option<&[(u64, Value)]> {
        self.signals.get(name).map(|s| self.changes[s.slot].as_slice())
    }

    /// Value held just before `time` (the preponed sample of an event at
    /// `time`). Unknown if nothing was dumped earlier.
    pub fn value_before(&self, name: &str, time: u64) -> Option<Value> {
        let s = self.signals.get(name)?;
        let list = &self.changes[s.slot];
        let idx = list.partition_point(|(t, _)| *t < time);
        Some(if idx == 0 { Value::unknown(s.width) } else { list[idx - 1].1.clone() })
    }

    /// Value after all changes at `time` have been applied.
    pub fn value_at(&self, name: &str, time: u64) -> Option<Value> {
        let s = self.signals.get(name)?;
        let list = &self.changes[s.slot];
        let idx = list.partition_point(|(t, _)| *t <= time);
        Some(if idx == 0 { Value::unknown(s.width) } else { list[idx - 1].1.clone() })
    }

    /// Times of rising (or falling) edges of a 1-bit signal.
    pub fn edges(&self, name: &str, rising: bool) -> Vec<u64> {
        let mut out = Vec::new();
        let Some(list) = self.changes_of(name) else { return out };
        let mut prev: Option<bool> = None;
        for (t, v) in list {
            let now = v.get_bit(0);
            let hit = if rising { now == Some(true) && prev != Some(true) } else { now == Some(false) && prev != Some(false) };
            // the initial dump is not an edge
            if hit && (*t > 0 || prev.is_some()) {
                out.push(*t);
            }
            prev = now;
        }
        out
    }

    /// All distinct change times.
    pub fn times(&self) -> Vec<u64> {
        let mut t: Vec<u64> = self.changes.iter().flatten().map(|(t, _)| *t).collect();
        t.sort_unstable();
        t.dedup();
        t
    }
}

pub fn parse_vcd(path: &Path) -> Result<Waveform, TraceError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| TraceError::Io { path: path.display().to_string(), message: e.to_string() })?;
    parse_vcd_str(&text)
}

fn malformed(line: usize, message: impl Into<String>) -> TraceError {
    TraceError::VcdMalformed { line, message: message.into() }
}

fn parse_range(text: &str) -> Option<(i64, i64)> {
    let inner = text.strip_prefix('[')?.strip_suffix(']')?;
    match inner.split_once(':') {
        Some((a, b)) => Some((a.trim().parse().ok()?, b.trim().parse().ok()?)),
        None => {
            let i = inner.trim().parse().ok()?;
            Some((i, i))
        }
    }
}

pub fn parse_vcd_str(text: &str) -> Result<Waveform, TraceError> {
    // (line, token) stream
    let tokens: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .flat_map(|(i, l)| l.split_whitespace().map(move |t| (i + 1, t)))
        .collect();
    let mut wave = Waveform::default();
    let mut ids: BTreeMap<String, (usize, u32)> = BTreeMap::new();
    let mut scope: Vec<String> = Vec::new();
    let mut pos = 0;
    let mut in_defs = true;
    let mut time = 0u64;
    let last_line = text.lines().count().max(1);

    let until_end = |pos: &mut usize| -> Result<Vec<&str>, TraceError> {
        let start_line = tokens.get(*pos).map(|t| t.0).unwrap_or(last_line);
        let mut body = Vec::new();
        while let Some((_, t)) = tokens.get(*pos) {
            *pos += 1;
            if *t == "$end" {
                return Ok(body);
            }
            body.push(*t);
        }
        Err(malformed(start_line, "missing $end"))
    };

    while pos < tokens.len() {
        let (line, tok) = tokens[pos];
        pos += 1;
        if in_defs {
            match tok {
                "$timescale" => wave.timescale = Some(until_end(&mut pos)?.join(" ")),
                "$scope" => {
                    let body = until_end(&mut pos)?;
                    if body.len() != 2 {
                        return Err(malformed(line, "$scope needs a type and a name"));
                    }
                    scope.push(body[1].to_string());
                }
                "$upscope" => {
                    until_end(&mut pos)?;
                    if scope.pop().is_none() {
                        return Err(malformed(line, "$upscope without $scope"));
                    }
                }
                "$var" => {
                    let body = until_end(&mut pos)?;
                    if body.len() < 4 {
                        return Err(malformed(line, "$var needs type, size, code and name"));
                    }
                    let width: u32 = body[1].parse().map_err(|_| malformed(line, format!("bad $var size `{}`", body[1])))?;
                    if width == 0 {
                        return Err(malformed(line, "$var size must be positive"));
                    }
                    let code = body[2].to_string();
                    let mut name = body[3].to_string();
                    let mut range = None;
                    if let Some(r) = body.get(4) {
                        range = parse_range(r);
                    } else if let Some(i) = name.find('[') {
                        range = parse_range(&name[i..]);
                        name.truncate(i);
                    }
                    let full = if scope.is_empty() { name } else { format!("{}.{}", scope.join("."), name) };
                    let slot = match ids.get(&code) {
                        Some((slot, w)) => {
                            if *w != width {
                                return Err(malformed(line, format!("code `{code}` redeclared with a different size")));
                            }
                            *slot
                        }
                        None => {
                            wave.changes.push(Vec::new());
                            ids.insert(code, (wave.changes.len() - 1, width));
                            wave.changes.len() - 1
                        }
                    };
                    wave.signals.insert(full, WaveSignal { width, range, slot });
                }
                "$enddefinitions" => {
                    until_end(&mut pos)?;
                    if !scope.is_empty() {
                        return Err(malformed(line, "unclosed $scope at $enddefinitions"));
                    }
                    in_defs = false;
                }
                t if t.starts_with('$') => {
                    until_end(&mut pos)?;
                }
                _ => return Err(malformed(line, format!("unexpected `{tok}` in header"))),
            }
            continue;
        }
        match tok {
            "$dumpvars" | "$dumpon" | "$dumpoff" | "$dumpall" | "$end" => {}
            "$comment" => {
                until_end(&mut pos)?;
            }
            t if t.starts_with('#') => {
                let nt: u64 = t[1..].parse().map_err(|_| malformed(line, format!("bad timestamp `{t}`")))?;
                if nt < time {
                    return Err(malformed(line, "timestamps go backwards"));
                }
                time = nt;
            }
            t if t.starts_with(['b', 'B', 'r', 'R']) => {
                let (_, code) = tokens.get(pos).copied().ok_or_else(|| malformed(line, "vector change without identifier"))?;
                pos += 1;
                let &(slot, width) = ids.get(code).ok_or_else(|| malformed(line, format!("undeclared identifier `{code}`")))?;
                if t.starts_with(['r', 'R']) {
                    // real values carry no bit-level information; skip
                    continue;
                }
                let v = Value::from_vcd(t, width).ok_or_else(|| malformed(line, format!("bad vector value `{t}`")))?;
                push_change(&mut wave.changes[slot], time, v);
            }
            t => {
                let mut chars = t.chars();
                let c = chars.next().unwrap();
                if !matches!(c.to_ascii_lowercase(), '0' | '1' | 'x' | 'z') {
                    return Err(malformed(line, format!("unexpected `{t}`")));
                }
                let code = chars.as_str();
                let &(slot, width) = ids.get(code).ok_or_else(|| malformed(line, format!("undeclared identifier `{code}`")))?;
                let v = Value::from_vcd(&c.to_string(), width).unwrap();
                // scalar change on a vector: VCD extends 0/1 with zeros
                push_change(&mut wave.changes[slot], time, v);
            }
        }
    }
    if in_defs {
        return Err(malformed(last_line, "missing $enddefinitions"));
    }
    wave.end_time = time;
    Ok(wave)
}

fn push_change(list: &mut Vec<(u64, Value)>, time: u64, v: Value) {
    match list.last_mut() {
        Some((t, old)) if *t == time => *old = v,
        Some((_, old)) if *old == v => {}
        _ => list.push((time, v)),
    }
}

/// Serialise a waveform back to VCD text. Identifier codes are assigned
/// in slot order.
pub fn write_vcd(wave: &Waveform) -> String {
    use std::fmt::Write;
    let code = |mut i: usize| {
        let mut s = String::new();
        loop {
            s.push((b'!' + (i % 94) as u8) as char);
            i /= 94;
            if i == 0 {
                break s;
            }
            i -= 1;
        }
    };
    let mut out = String::new();
    if let Some(ts) = &wave.timescale {
        let _ = writeln!(out, "$timescale {ts} $end");
    }
    // group by scope
    let mut current: Vec<&str> = Vec::new();
    for (name, sig) in &wave.signals {
        let parts: Vec<&str> = name.split('.').collect();
        let (scope, leaf) = parts.split_at(parts.len() - 1);
        let common = current.iter().zip(scope).take_while(|(a, b)| a == b).count();
        for _ in common..current.len() {
            out.push_str("$upscope $end\n");
        }
        current.truncate(common);
        for s in &scope[common..] {
            let _ = writeln!(out, "$scope module {s} $end");
            current.push(s);
        }
        let range = match sig.range {
            Some((m, l)) => format!(" [{m}:{l}]"),
            None => String::new(),
        };
        let _ = writeln!(out, "$var wire {} {} {}{} $end", sig.width, code(sig.slot), leaf[0], range);
    }
    for _ in 0..current.len() {
        out.push_str("$upscope $end\n");
    }
    out.push_str("$enddefinitions $end\n");
    let mut events: BTreeMap<u64, Vec<(usize, &Value)>> = BTreeMap::new();
    for (slot, list) in wave.changes.iter().enumerate() {
        for (t, v) in list {
            events.entry(*t).or_default().push((slot, v));
        }
    }
    events.entry(wave.end_time).or_default();
    for (t, list) in events {
        let _ = writeln!(out, "#{t}");
        for (slot, v) in list {
            if v.width == 1 {
                let _ = writeln!(out, "{}{}", v.to_bin(), code(slot));
            } else {
                let _ = writeln!(out, "b{} {}", v.to_bin(), code(slot));
            }
        }
    }
    out
}
