// SPDX-License-Identifier: Apache-2.0

//! Random properties over 1-bit signals, random traces, and a reference
//! evaluator that unrolls every sequence into its linear paths.

use std::fmt::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const SIGNALS: [&str; 4] = ["a", "b", "c", "d"];

#[derive(Debug, Clone)]
pub enum B {
    Sig(usize),
    Not(Box<B>),
    And(Box<B>, Box<B>),
    Or(Box<B>, Box<B>),
    Eq(Box<B>, Box<B>),
}

#[derive(Debug, Clone)]
pub enum S {
    B(B),
    Delay(Option<Box<S>>, u32, u32, Box<S>),
    Rep(Box<S>, u32, u32),
}

#[derive(Debug, Clone)]
pub enum P {
    S(S),
    Not(Box<P>),
    And(Box<P>, Box<P>),
    Or(Box<P>, Box<P>),
    Implies(S, bool, Box<P>),
}

#[derive(Debug, Clone)]
pub struct Property {
    pub disable: Option<B>,
    pub body: P,
}

impl B {
    fn text(&self) -> String {
        match self {
            B::Sig(i) => SIGNALS[*i].to_string(),
            B::Not(x) => format!("!{}", x.text()),
            B::And(x, y) => format!("({} && {})", x.text(), y.text()),
            B::Or(x, y) => format!("({} || {})", x.text(), y.text()),
            B::Eq(x, y) => format!("({} == {})", x.text(), y.text()),
        }
    }

    fn eval(&self, row: &[bool]) -> bool {
        match self {
            B::Sig(i) => row[*i],
            B::Not(x) => !x.eval(row),
            B::And(x, y) => x.eval(row) && y.eval(row),
            B::Or(x, y) => x.eval(row) || y.eval(row),
            B::Eq(x, y) => x.eval(row) == y.eval(row),
        }
    }
}

fn window(min: u32, max: u32) -> String {
    if min == max {
        format!("{min}")
    } else {
        format!("[{min}:{max}]")
    }
}

impl S {
    fn text(&self) -> String {
        match self {
            S::B(b) => b.text(),
            S::Delay(None, m, n, r) => format!("(##{} {})", window(*m, *n), r.text()),
            S::Delay(Some(l), m, n, r) => format!("({} ##{} {})", l.text(), window(*m, *n), r.text()),
            S::Rep(i, m, n) if m == n => format!("({})[*{m}]", i.text()),
            S::Rep(i, m, n) => format!("({})[*{m}:{n}]", i.text()),
        }
    }

    /// Every linear unrolling as (cycle offset, boolean) checks in order.
    fn paths(&self) -> Vec<Vec<(u32, &B)>> {
        match self {
            S::B(b) => vec![vec![(0, b)]],
            S::Delay(lhs, m, n, r) => {
                let heads = match lhs {
                    None => vec![vec![]],
                    Some(l) => l.paths(),
                };
                let tails = r.paths();
                let mut out = Vec::new();
                for h in &heads {
                    let end = h.last().map_or(0, |x| x.0);
                    for d in *m..=*n {
                        for t in &tails {
                            let mut p = h.clone();
                            p.extend(t.iter().map(|&(o, b)| (o + end + d, b)));
                            out.push(p);
                        }
                    }
                }
                out
            }
            S::Rep(inner, m, n) => {
                let unit = inner.paths();
                let mut out = Vec::new();
                let mut level: Vec<Vec<(u32, &B)>> = unit.clone();
                for k in 1..=*n {
                    if k >= *m {
                        out.extend(level.iter().cloned());
                    }
                    if k == *n {
                        break;
                    }
                    let mut next = Vec::new();
                    for h in &level {
                        let end = h.last().unwrap().0;
                        for t in &unit {
                            let mut p = h.clone();
                            p.extend(t.iter().map(|&(o, b)| (o + end + 1, b)));
                            next.push(p);
                        }
                    }
                    level = next;
                }
                out
            }
        }
    }
}

impl P {
    fn text(&self) -> String {
        match self {
            P::S(s) => s.text(),
            P::Not(p) => format!("not ({})", p.text()),
            P::And(x, y) => format!("({}) and ({})", x.text(), y.text()),
            P::Or(x, y) => format!("({}) or ({})", x.text(), y.text()),
            P::Implies(a, o, c) => format!("{} {} ({})", a.text(), if *o { "|->" } else { "|=>" }, c.text()),
        }
    }
}

impl Property {
    pub fn text(&self) -> String {
        let dis = self.disable.as_ref().map(|d| format!("disable iff ({}) ", d.text())).unwrap_or_default();
        format!("assert property (@(posedge clk) {dis}{});", self.body.text())
    }
}

// generation

fn gen_b(rng: &mut ChaCha8Rng, depth: u32) -> B {
    if depth == 0 || rng.gen_bool(0.55) {
        let s = B::Sig(rng.gen_range(0..SIGNALS.len()));
        return if rng.gen_bool(0.25) { B::Not(Box::new(s)) } else { s };
    }
    let (x, y) = (Box::new(gen_b(rng, depth - 1)), Box::new(gen_b(rng, depth - 1)));
    match rng.gen_range(0..4) {
        0 => B::And(x, y),
        1 => B::Or(x, y),
        2 => B::Eq(x, y),
        _ => B::Not(x),
    }
}

fn gen_window(rng: &mut ChaCha8Rng, lo: u32, span: u32) -> (u32, u32) {
    let m = rng.gen_range(lo..=lo + 2);
    (m, m + rng.gen_range(0..=span))
}

fn gen_s(rng: &mut ChaCha8Rng, depth: u32) -> S {
    if depth == 0 || rng.gen_bool(0.4) {
        return S::B(gen_b(rng, 2));
    }
    match rng.gen_range(0..5) {
        0 => {
            let (m, n) = gen_window(rng, 0, 3);
            S::Delay(None, m.max(1), n.max(1), Box::new(gen_s(rng, depth - 1)))
        }
        1 => {
            let (m, n) = gen_window(rng, 1, 1);
            S::Rep(Box::new(gen_s(rng, depth - 1)), m.min(3), n.min(3))
        }
        _ => {
            let (m, n) = gen_window(rng, 0, 3);
            S::Delay(Some(Box::new(gen_s(rng, depth - 1))), m, n, Box::new(gen_s(rng, depth - 1)))
        }
    }
}

fn gen_p(rng: &mut ChaCha8Rng, depth: u32) -> P {
    if depth == 0 {
        return P::S(gen_s(rng, 2));
    }
    match rng.gen_range(0..8) {
        0 => P::S(gen_s(rng, 2)),
        1 => P::Not(Box::new(gen_p(rng, depth - 1))),
        2 => P::And(Box::new(gen_p(rng, depth - 1)), Box::new(gen_p(rng, depth - 1))),
        3 => P::Or(Box::new(gen_p(rng, depth - 1)), Box::new(gen_p(rng, depth - 1))),
        _ => P::Implies(gen_s(rng, 2), rng.gen_bool(0.5), Box::new(gen_p(rng, depth - 1))),
    }
}

pub fn random_property(rng: &mut ChaCha8Rng) -> Property {
    let disable = rng.gen_bool(0.2).then(|| gen_b(rng, 1));
    Property { disable, body: gen_p(rng, 2) }
}

/// `cycles[k][i]` is the value of `SIGNALS[i]` sampled at clock edge `k`.
pub fn random_trace(rng: &mut ChaCha8Rng, max_len: usize) -> Vec<Vec<bool>> {
    let n = rng.gen_range(1..=max_len);
    let density: Vec<f64> = SIGNALS.iter().map(|_| rng.gen_range(0.15..0.9)).collect();
    (0..n).map(|_| density.iter().map(|&p| rng.gen_bool(p)).collect()).collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Testbench scope `tb`, a 10-unit clock rising at 10k+5, inputs changing
/// at 10k so edge k samples `cycles[k]`.
pub fn to_vcd(cycles: &[Vec<bool>]) -> String {
    let ids = ["!", "\"", "#", "$", "%"];
    let mut s = String::from("$timescale 1ns $end\n$scope module tb $end\n");
    let _ = writeln!(s, "$var wire 1 {} clk $end", ids[0]);
    for (i, n) in SIGNALS.iter().enumerate() {
        let _ = writeln!(s, "$var wire 1 {} {n} $end", ids[i + 1]);
    }
    s.push_str("$upscope $end\n$enddefinitions $end\n");
    for (k, row) in cycles.iter().enumerate() {
        let t = 10 * k;
        let _ = writeln!(s, "#{t}");
        if k == 0 {
            let _ = writeln!(s, "0{}", ids[0]);
        }
        for (i, v) in row.iter().enumerate() {
            let _ = writeln!(s, "{}{}", u8::from(*v), ids[i + 1]);
        }
        let _ = writeln!(s, "#{}\n1{}\n#{}\n0{}", t + 5, ids[0], t + 8, ids[0]);
    }
    s
}

// reference evaluation

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum R {
    Holds(usize),
    Vacuous(usize),
    Fails(usize),
    Pending,
    Aborted,
}

#[derive(Debug, PartialEq, Eq)]
pub struct Outcome {
    /// "pass", "fail", "vacuous-pass" or "pending"
    pub verdict: &'static str,
    pub attempts: u64,
    pub first_fail_cycle: Option<u64>,
}

struct Run {
    ends: Vec<usize>,
    overflow: bool,
    last: Option<usize>,
}

fn run(s: &S, j: usize, tr: &[Vec<bool>]) -> Run {
    let mut out = Run { ends: vec![], overflow: false, last: None };
    for path in s.paths() {
        let mut alive = true;
        for &(off, b) in &path {
            let c = j + off as usize;
            if c >= tr.len() {
                out.overflow = true;
                alive = false;
                break;
            }
            out.last = out.last.max(Some(c));
            if !b.eval(&tr[c]) {
                alive = false;
                break;
            }
        }
        if alive {
            out.ends.push(j + path.last().unwrap().0 as usize);
        }
    }
    out.ends.sort();
    out.ends.dedup();
    out
}

fn cyc(r: &R) -> usize {
    match r {
        R::Holds(c) | R::Vacuous(c) | R::Fails(c) => *c,
        _ => unreachable!(),
    }
}

/// All results must hold: any failure (earliest), else pending, else
/// success once every branch is decided (latest).
fn all_of(rs: &[R]) -> R {
    let fails: Vec<usize> = rs.iter().filter(|r| matches!(r, R::Fails(_))).map(cyc).collect();
    if let Some(&c) = fails.iter().min() {
        return R::Fails(c);
    }
    if rs.contains(&R::Aborted) {
        return R::Aborted;
    }
    if rs.contains(&R::Pending) {
        return R::Pending;
    }
    let holds: Vec<usize> = rs.iter().filter(|r| matches!(r, R::Holds(_))).map(cyc).collect();
    match holds.iter().max() {
        Some(&c) => R::Holds(c),
        None => R::Vacuous(rs.iter().map(cyc).max().unwrap()),
    }
}

fn any_of(rs: &[R]) -> R {
    let pick = |want: fn(&R) -> bool| rs.iter().filter(|r| want(r)).map(cyc).min();
    if let Some(c) = pick(|r| matches!(r, R::Holds(_))) {
        return R::Holds(c);
    }
    if let Some(c) = pick(|r| matches!(r, R::Vacuous(_))) {
        return R::Vacuous(c);
    }
    if rs.contains(&R::Aborted) {
        return R::Aborted;
    }
    if rs.contains(&R::Pending) {
        return R::Pending;
    }
    R::Fails(rs.iter().map(cyc).max().unwrap())
}

fn prop(p: &P, j: usize, tr: &[Vec<bool>]) -> R {
    match p {
        P::S(s) => {
            let r = run(s, j, tr);
            match (r.ends.first(), r.overflow) {
                (Some(&e), _) => R::Holds(e),
                (None, true) => R::Pending,
                (None, false) => R::Fails(r.last.unwrap()),
            }
        }
        P::Not(x) => match prop(x, j, tr) {
            R::Holds(c) | R::Vacuous(c) => R::Fails(c),
            R::Fails(c) => R::Holds(c),
            r => r,
        },
        P::And(x, y) => all_of(&[prop(x, j, tr), prop(y, j, tr)]),
        P::Or(x, y) => any_of(&[prop(x, j, tr), prop(y, j, tr)]),
        P::Implies(a, overlapping, c) => {
            let r = run(a, j, tr);
            if r.ends.is_empty() {
                return R::Vacuous(r.last.unwrap_or(j));
            }
            let shift = usize::from(!*overlapping);
            let rs: Vec<R> = r.ends.iter().map(|&e| prop(c, e + shift, tr)).collect();
            all_of(&rs)
        }
    }
}

pub fn reference(p: &Property, tr: &[Vec<bool>]) -> Outcome {
    let n = tr.len();
    let mut results = Vec::new();
    for j in 0..n {
        let mut r = prop(&p.body, j, tr);
        if let Some(d) = &p.disable {
            let until = match r {
                R::Pending => n - 1,
                R::Aborted => unreachable!(),
                other => cyc(&other).min(n - 1),
            };
            if (j..=until).any(|c| d.eval(&tr[c])) {
                r = R::Aborted;
            }
        }
        results.push(r);
    }
    let attempts = results.iter().filter(|r| matches!(r, R::Holds(_) | R::Fails(_) | R::Pending)).count() as u64;
    let first_fail_cycle = results.iter().filter(|r| matches!(r, R::Fails(_))).map(|r| cyc(r) as u64).min();
    let verdict = if first_fail_cycle.is_some() {
        "fail"
    } else if results.contains(&R::Pending) {
        "pending"
    } else if attempts > 0 {
        "pass"
    } else {
        "vacuous-pass"
    };
    Outcome { verdict, attempts, first_fail_cycle }
}

/// Longest cycle span of any sequence in the property.
pub fn max_window(p: &Property) -> u32 {
    fn seq(s: &S) -> u32 {
        s.paths().iter().map(|p| p.last().unwrap().0).max().unwrap_or(0)
    }
    fn walk(p: &P) -> u32 {
        match p {
            P::S(s) => seq(s),
            P::Not(x) => walk(x),
            P::And(x, y) | P::Or(x, y) => walk(x).max(walk(y)),
            P::Implies(a, _, c) => seq(a).max(walk(c)),
        }
    }
    walk(&p.body)
}

/// A property and trace pair within the bounds used by the suites.
pub fn random_pair(seed: u64) -> (Property, Vec<Vec<bool>>) {
    let mut r = rng(seed);
    let p = loop {
        let p = random_property(&mut r);
        if max_window(&p) <= 8 {
            break p;
        }
    };
    let t = random_trace(&mut r, 64);
    (p, t)
}
