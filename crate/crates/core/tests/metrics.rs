// SPDX-License-Identifier: Apache-2.0

mod common;

use std::collections::BTreeSet;

use modassert::trace::{nvr_percent, toggle_coverage, Verdict};

use common::metrics::{graph, nvr_report, tfc_sets, wave};

#[test]
fn one_vacuous_pass_among_four_gives_75_percent() {
    let r = nvr_report();
    assert!(r.errors.is_empty(), "{:?}", r.errors);
    let got: Vec<(&str, Verdict, u64, Option<u64>)> =
        r.verdicts.iter().map(|v| (v.id.as_str(), v.verdict, v.attempts, v.first_fail_cycle)).collect();
    assert_eq!(
        got,
        [
            ("and", Verdict::Pass, 4, None),
            ("copy", Verdict::Pass, 4, None),
            ("gated", Verdict::Pass, 2, None),
            ("never", Verdict::VacuousPass, 0, None),
            ("broken", Verdict::Fail, 3, Some(2)),
        ]
    );
    assert_eq!(nvr_percent(&r.verdicts), 75.0);
}

#[test]
fn both_sets_share_the_largest_cone_as_denominator() {
    let r = toggle_coverage(&[&wave()], &graph(), &tfc_sets(), Some("tb.dut"));
    let names = |s: &BTreeSet<String>| s.iter().cloned().collect::<Vec<_>>();
    // y ← w ← {a, b}; the seed a is already in the cone
    assert_eq!(names(&r[0].coi.members), ["m.a", "m.b", "m.w", "m.y"]);
    assert_eq!(names(&r[1].coi.members), ["m.b", "m.z"]);
    // every signal except clk both rises and falls
    assert_eq!(r[0].toggled, r[0].coi.members);
    assert_eq!(r[1].toggled, r[1].coi.members);
    assert_eq!((r[0].denominator, r[1].denominator), (4, 4));
    assert_eq!(r[0].tfc_percent, 100.0);
    // 2 of 4, not 2 of its own 2
    assert_eq!(r[1].tfc_percent, 50.0);
}
