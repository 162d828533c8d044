// SPDX-License-Identifier: Apache-2.0

//! Bounded-trace evaluation of properties over sampled clock cycles.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::sva::{Prop, Seq, SvaAst};
use crate::value::{eval, EvalEnv, EvalError, EvalResult, Value};
use crate::verilog::Expr;

/// Signal values sampled at each clock tick, keyed by the names used in
/// the assertion.
#[derive(Debug, Clone, Default)]
pub struct SampledTrace {
    pub cycles: Vec<BTreeMap<String, Value>>,
    pub ranges: BTreeMap<String, (i64, i64)>,
}

impl SampledTrace {
    pub fn len(&self) -> usize {
        self.cycles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cycles.is_empty()
    }
}

struct SampleEnv<'a> {
    trace: &'a SampledTrace,
    cycle: usize,
}

impl EvalEnv for SampleEnv<'_> {
    fn signal(&self, name: &str) -> Option<Value> {
        self.trace.cycles[self.cycle].get(name).cloned()
    }

    fn range(&self, name: &str) -> Option<(i64, i64)> {
        self.trace.ranges.get(name).copied()
    }

    fn past(&self, e: &Expr, depth: u32, width: u32) -> EvalResult {
        match self.cycle.checked_sub(depth as usize) {
            Some(c) => eval(e, &SampleEnv { trace: self.trace, cycle: c }, width),
            None => Ok(Value::unknown(width.max(1))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    VacuousPass,
    Pending,
}

/// Outcome of one attempt, with the cycle at which it was decided.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttemptResult {
    Holds(usize),
    Vacuous(usize),
    Fails(usize),
    Pending,
    Aborted,
}

/// Aggregate result of checking one property over one sampled trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Evaluation {
    pub verdict: Verdict,
    pub attempts: u64,
    pub aborted: u64,
    pub first_fail_cycle: Option<u64>,
    /// Per start cycle.
    pub results: Vec<AttemptResult>,
}

#[derive(Debug, Default)]
struct Match {
    ends: BTreeSet<usize>,
    overflow: bool,
    unknown: bool,
    last: Option<usize>,
}

impl Match {
    fn merge(&mut self, o: Match) {
        self.ends.extend(o.ends);
        self.overflow |= o.overflow;
        self.unknown |= o.unknown;
        self.last = self.last.max(o.last);
    }
}

struct Checker<'a> {
    trace: &'a SampledTrace,
    cache: RefCell<HashMap<(usize, usize), Option<bool>>>,
    error: RefCell<Option<EvalError>>,
}

impl Checker<'_> {
    fn truth(&self, e: &Expr, cycle: usize) -> Option<bool> {
        let key = (e as *const Expr as usize, cycle);
        if let Some(v) = self.cache.borrow().get(&key) {
            return *v;
        }
        let v = match eval(e, &SampleEnv { trace: self.trace, cycle }, 0) {
            Ok(v) => v.truth(),
            Err(err) => {
                self.error.borrow_mut().get_or_insert(err);
                None
            }
        };
        self.cache.borrow_mut().insert(key, v);
        v
    }

    fn seq(&self, s: &Seq, j: usize) -> Match {
        let n = self.trace.len();
        match s {
            Seq::Bool { expr } => {
                let mut m = Match::default();
                if j >= n {
                    m.overflow = true;
                    return m;
                }
                m.last = Some(j);
                match self.truth(expr, j) {
                    Some(true) => {
                        m.ends.insert(j);
                    }
                    Some(false) => {}
                    None => m.unknown = true,
                }
                m
            }
            Seq::Delay { lhs, min, max, rhs } => {
                let (mut out, starts) = match lhs {
                    None => (Match::default(), BTreeSet::from([j])),
                    Some(l) => {
                        let mut lm = self.seq(l, j);
                        let ends = std::mem::take(&mut lm.ends);
                        (lm, ends)
                    }
                };
                for e in starts {
                    for d in *min..=*max {
                        out.merge(self.seq(rhs, e + d as usize));
                    }
                }
                out
            }
            Seq::Repeat { inner, min, max } => {
                let mut out = Match::default();
                let mut frontier = self.seq(inner, j);
                for k in 1..=*max {
                    let ends = std::mem::take(&mut frontier.ends);
                    let done = ends.is_empty();
                    out.overflow |= frontier.overflow;
                    out.unknown |= frontier.unknown;
                    out.last = out.last.max(frontier.last);
                    if k >= *min {
                        out.ends.extend(ends.iter().copied());
                    }
                    if k == *max || done {
                        break;
                    }
                    frontier = Match::default();
                    for e in ends {
                        frontier.merge(self.seq(inner, e + 1));
                    }
                }
                out
            }
        }
    }

    fn prop(&self, p: &Prop, j: usize) -> AttemptResult {
        use AttemptResult::*;
        match p {
            Prop::Seq { seq } => {
                let m = self.seq(seq, j);
                if let Some(&e) = m.ends.iter().next() {
                    Holds(e)
                } else if m.unknown {
                    Aborted
                } else if m.overflow {
                    Pending
                } else {
                    Fails(m.last.unwrap_or(j))
                }
            }
            Prop::Not { inner } => match self.prop(inner, j) {
                Holds(c) | Vacuous(c) => Fails(c),
                Fails(c) => Holds(c),
                r => r,
            },
            Prop::And { lhs, rhs } => and(self.prop(lhs, j), self.prop(rhs, j)),
            Prop::Or { lhs, rhs } => or(self.prop(lhs, j), self.prop(rhs, j)),
            Prop::Implies { ante, overlapping, cons } => {
                let m = self.seq(ante, j);
                if m.ends.is_empty() {
                    return if m.unknown { Aborted } else { Vacuous(m.last.unwrap_or(j)) };
                }
                let mut acc: Option<AttemptResult> = m.unknown.then_some(Aborted);
                for &e in &m.ends {
                    let r = self.prop(cons, if *overlapping { e } else { e + 1 });
                    acc = Some(match acc {
                        Some(a) => and(a, r),
                        None => r,
                    });
                }
                acc.unwrap()
            }
        }
    }
}

fn rank_and(r: AttemptResult) -> u8 {
    match r {
        AttemptResult::Fails(_) => 4,
        AttemptResult::Aborted => 3,
        AttemptResult::Pending => 2,
        AttemptResult::Holds(_) => 1,
        AttemptResult::Vacuous(_) => 0,
    }
}

fn rank_or(r: AttemptResult) -> u8 {
    match r {
        AttemptResult::Holds(_) => 4,
        AttemptResult::Vacuous(_) => 3,
        AttemptResult::Aborted => 2,
        AttemptResult::Pending => 1,
        AttemptResult::Fails(_) => 0,
    }
}

fn cycle_of(r: AttemptResult) -> Option<usize> {
    match r {
        AttemptResult::Holds(c) | AttemptResult::Vacuous(c) | AttemptResult::Fails(c) => Some(c),
        _ => None,
    }
}

fn with_cycle(r: AttemptResult, c: usize) -> AttemptResult {
    match r {
        AttemptResult::Holds(_) => AttemptResult::Holds(c),
        AttemptResult::Vacuous(_) => AttemptResult::Vacuous(c),
        AttemptResult::Fails(_) => AttemptResult::Fails(c),
        r => r,
    }
}

/// Conjunction: the worst result wins; a failure is reported at its
/// earliest detection, a success once both sides are decided.
fn and(a: AttemptResult, b: AttemptResult) -> AttemptResult {
    let (ra, rb) = (rank_and(a), rank_and(b));
    if ra != rb {
        return if ra > rb { a } else { b };
    }
    match (cycle_of(a), cycle_of(b), a) {
        (Some(x), Some(y), AttemptResult::Fails(_)) => with_cycle(a, x.min(y)),
        (Some(x), Some(y), _) => with_cycle(a, x.max(y)),
        _ => a,
    }
}

/// Disjunction: the best result wins; success at the earliest witness,
/// failure once both sides have failed.
fn or(a: AttemptResult, b: AttemptResult) -> AttemptResult {
    let (ra, rb) = (rank_or(a), rank_or(b));
    if ra != rb {
        return if ra > rb { a } else { b };
    }
    match (cycle_of(a), cycle_of(b), a) {
        (Some(x), Some(y), AttemptResult::Fails(_)) => with_cycle(a, x.max(y)),
        (Some(x), Some(y), _) => with_cycle(a, x.min(y)),
        _ => a,
    }
}

/// Evaluate `ast` (clocking already applied by sampling) over `trace`.
pub fn evaluate(ast: &SvaAst, trace: &SampledTrace) -> Result<Evaluation, EvalError> {
    let ck = Checker { trace, cache: RefCell::new(HashMap::new()), error: RefCell::new(None) };
    let n = trace.len();
    let mut results = Vec::with_capacity(n);
    for j in 0..n {
        let mut r = ck.prop(&ast.property, j);
        if let Some(dis) = &ast.disable {
            let until = match r {
                AttemptResult::Aborted => None,
                AttemptResult::Pending => Some(n - 1),
                other => cycle_of(other).map(|c| c.min(n - 1)),
            };
            if let Some(until) = until {
                if (j..=until).any(|c| ck.truth(dis, c) != Some(false)) {
                    r = AttemptResult::Aborted;
                }
            }
        }
        results.push(r);
    }
    if let Some(e) = ck.error.into_inner() {
        return Err(e);
    }
    Ok(summarize(results))
}

pub(crate) fn summarize(results: Vec<AttemptResult>) -> Evaluation {
    let mut attempts = 0;
    let mut aborted = 0;
    let mut pending = false;
    let mut first_fail: Option<usize> = None;
    for r in &results {
        match r {
            AttemptResult::Holds(_) => attempts += 1,
            AttemptResult::Pending => {
                attempts += 1;
                pending = true;
            }
            AttemptResult::Fails(c) => {
                attempts += 1;
                first_fail = Some(first_fail.map_or(*c, |f| f.min(*c)));
            }
            AttemptResult::Aborted => aborted += 1,
            AttemptResult::Vacuous(_) => {}
        }
    }
    let verdict = if first_fail.is_some() {
        Verdict::Fail
    } else if pending {
        Verdict::Pending
    } else if attempts > 0 {
        Verdict::Pass
    } else {
        Verdict::VacuousPass
    };
    Evaluation { verdict, attempts, aborted, first_fail_cycle: first_fail.map(|c| c as u64), results }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sva::parse_sva;

    fn trace(sigs: &[(&str, &str)]) -> SampledTrace {
        let n = sigs[0].1.len();
        let mut t = SampledTrace::default();
        for c in 0..n {
            let mut m = BTreeMap::new();
            for (name, bits) in sigs {
                let ch = bits.as_bytes()[c];
                m.insert(name.to_string(), if ch == b'x' { Value::unknown(1) } else { Value::bit(ch == b'1') });
            }
            t.cycles.push(m);
        }
        t
    }

    fn run(prop: &str, sigs: &[(&str, &str)]) -> Evaluation {
        let ast = parse_sva(&format!("assert property (@(posedge clk) {prop});")).unwrap();
        evaluate(&ast, &trace(sigs)).unwrap()
    }

    #[test]
    fn never_triggered_is_vacuous() {
        let e = run("a |-> b", &[("a", "000000"), ("b", "010101")]);
        assert_eq!((e.verdict, e.attempts), (Verdict::VacuousPass, 0));
    }

    #[test]
    fn window_past_end_is_pending() {
        let e = run("req |-> ##[1:2] ack", &[("req", "000001"), ("ack", "000000")]);
        assert_eq!((e.verdict, e.attempts), (Verdict::Pending, 1));
    }

    #[test]
    fn unknown_aborts() {
        let e = run("a |-> b", &[("a", "0x10"), ("b", "0010")]);
        assert_eq!((e.verdict, e.attempts, e.aborted), (Verdict::Pass, 1, 1));
    }

    #[test]
    fn fail_reports_detection_cycle() {
        let e = run("a |=> b", &[("a", "0100"), ("b", "0000")]);
        assert_eq!((e.verdict, e.first_fail_cycle), (Verdict::Fail, Some(2)));
        let e = run("a ##1 b[*2]", &[("a", "1000"), ("b", "0100")]);
        assert_eq!(e.results[0], AttemptResult::Fails(2));
        assert_eq!(e.results[1], AttemptResult::Fails(1));
        assert_eq!(e.first_fail_cycle, Some(1));
    }
}
