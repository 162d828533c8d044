// SPDX-License-Identifier: Apache-2.0

//! A five-signal design with a hand-written waveform for the NVR and TFC
//! fixtures.

use modassert::graph::{extract_relationships, DesignGraph};
use modassert::sva::{parse_sva, SvaAst};
use modassert::trace::{check_texts, parse_vcd_str, CheckOptions, TraceReport, Waveform};
use modassert::verilog::{parse_verilog, resolve_widths, PreprocessOptions};

const DESIGN: &str = "\
module m(input clk, input a, input b, output y, output z);
  wire w;
  assign w = a & b;
  assign y = w;
  assign z = b;
endmodule
";

/// Four clock edges sampling a = 0101, b = 1101, so w = y = 0101 and
/// z = 1101.
const VCD: &str = "\
$timescale 1ns $end
$scope module tb $end
$scope module dut $end
$var wire 1 ! clk $end
$var wire 1 \" a $end
$var wire 1 # b $end
$var wire 1 $ w $end
$var wire 1 % y $end
$var wire 1 & z $end
$upscope $end
$upscope $end
$enddefinitions $end
#0
0!
0\"
1#
0$
0%
1&
#5
1!
#8
0!
#10
1\"
1$
1%
#15
1!
#18
0!
#20
0\"
0#
0$
0%
0&
#25
1!
#28
0!
#30
1\"
1#
1$
1%
1&
#35
1!
#38
0!
";

pub fn graph() -> DesignGraph {
    let mut unit = parse_verilog(&[("m.v".into(), DESIGN.into())], &PreprocessOptions::default());
    resolve_widths(&mut unit);
    extract_relationships(&unit, None).unwrap()
}

pub fn wave() -> Waveform {
    parse_vcd_str(VCD).unwrap()
}

pub fn opts() -> CheckOptions {
    CheckOptions { root_scope: Some("tb.dut".into()), ..Default::default() }
}

/// Three real passes, one vacuous pass and one failure.
pub const NVR_SET: &[(&str, &str)] = &[
    ("and", "m.y == (m.a && m.b)"),
    ("copy", "m.z == m.b"),
    ("gated", "m.a |-> m.y == m.b"),
    ("never", "m.y && !m.b |-> m.a"),
    ("broken", "m.b |=> m.a"),
];

pub fn clocked(body: &str) -> String {
    format!("assert property (@(posedge clk) {body});")
}

pub fn nvr_report() -> TraceReport {
    let set: Vec<(String, String)> = NVR_SET.iter().map(|(i, t)| (i.to_string(), clocked(t))).collect();
    check_texts(&set, &[&wave()], Some(&graph()), &opts())
}

/// A wide set whose cone is {a, b, w, y} and a narrow one with {b, z}.
pub fn tfc_sets() -> Vec<(String, Vec<SvaAst>)> {
    let ast = |t: &str| parse_sva(&clocked(t)).unwrap();
    vec![("wide".to_string(), vec![ast("m.a |-> m.y")]), ("narrow".to_string(), vec![ast("m.z")])]
}
