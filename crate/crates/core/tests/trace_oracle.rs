// SPDX-License-Identifier: Apache-2.0

mod common;

use std::collections::BTreeMap;

use modassert::sva::parse_sva;
use modassert::trace::{check, parse_vcd_str, CheckOptions, Verdict};

use common::trace_oracle::{random_pair, reference, Outcome};

fn opts() -> CheckOptions {
    CheckOptions { root_scope: Some("tb".into()), ..Default::default() }
}

fn verdict_name(v: Verdict) -> String {
    serde_json::to_value(v).unwrap().as_str().unwrap().to_string()
}

fn checked(seed: u64) -> (String, Outcome, Outcome) {
    let (p, tr) = random_pair(seed);
    let text = p.text();
    let ast = parse_sva(&text).unwrap_or_else(|e| panic!("{text}: {e}"));
    let wave = parse_vcd_str(&common::trace_oracle::to_vcd(&tr)).unwrap();
    let v = check("p", &ast, &[&wave], None, &opts()).unwrap();
    let expected = reference(&p, &tr);
    let verdict: &'static str = match verdict_name(v.verdict).as_str() {
        "pass" => "pass",
        "fail" => "fail",
        "vacuous-pass" => "vacuous-pass",
        "pending" => "pending",
        other => panic!("unexpected verdict {other}"),
    };
    let got = Outcome { verdict, attempts: v.attempts, first_fail_cycle: v.first_fail_cycle };
    (format!("seed {seed}, {} cycles: {text}", tr.len()), got, expected)
}

#[test]
fn checker_agrees_with_reference_on_random_pairs() {
    let mut tally: BTreeMap<&str, usize> = BTreeMap::new();
    for seed in 0..1500u64 {
        let (what, got, expected) = checked(seed);
        assert_eq!(got, expected, "{what}");
        *tally.entry(expected.verdict).or_default() += 1;
    }
    // the generator must exercise every verdict
    for v in ["pass", "fail", "vacuous-pass", "pending"] {
        assert!(tally.get(v).copied().unwrap_or(0) >= 20, "{tally:?}");
    }
}

#[test]
fn vacuous_exactly_when_nothing_was_attempted() {
    for seed in 0..1500u64 {
        let (what, got, _) = checked(seed);
        let vacuous = got.verdict == "vacuous-pass";
        assert_eq!(vacuous, got.attempts == 0, "{what}");
    }
}
