// SPDX-License-Identifier: Apache-2.0

//! Hand-written assertion strings for the grammar suite.

/// The bit-width-only check from the I2C byte controller.
pub const BITS_ONLY: &str = "assert property($bits(i2c_master_byte_ctrl.ena)==1);";

pub const POSITIVE: &[&str] = &[
    BITS_ONLY,
    "assert property (@(posedge clk) a |-> b);",
    "assert property (@(posedge clk) a |=> b);",
    "assert property (@(negedge clk) a |-> b);",
    "assert property (@(posedge clk) disable iff (rst) a |-> b);",
    "assert property (@(posedge clk) disable iff (!rst_n) req |=> ack);",
    "assert property (@(posedge clk) a ##1 b |-> c);",
    "assert property (@(posedge clk) a |-> ##2 b);",
    "assert property (@(posedge clk) a |-> ##[1:3] b);",
    "assert property (@(posedge clk) a |-> ##[0:0] b);",
    "assert property (@(posedge clk) a ##[1:2] b ##1 c |=> d);",
    "assert property (@(posedge clk) a[*3] |-> b);",
    "assert property (@(posedge clk) a[*1:4] ##1 b |-> c);",
    "assert property (@(posedge clk) a |-> b[*2]);",
    "assert property (@(posedge clk) (a && b) |-> c);",
    "assert property (@(posedge clk) (a || b) && !c |-> d);",
    "assert property (@(posedge clk) not (a ##1 b));",
    "assert property (@(posedge clk) (a |-> b) and (c |-> d));",
    "assert property (@(posedge clk) (a |-> b) or (c |=> d));",
    "assert property (@(posedge clk) a);",
    "assert property (@(posedge clk) !(a && b));",
    "assert property (@(posedge clk) $rose(req) |-> ##[1:4] ack);",
    "assert property (@(posedge clk) $fell(busy) |=> done);",
    "assert property (@(posedge clk) !en |=> $stable(q));",
    "assert property (@(posedge clk) en |=> q == $past(d));",
    "assert property (@(posedge clk) en |=> q == $past(d, 2));",
    "assert property (@(posedge clk) cnt == 4'hF |=> cnt == 4'h0);",
    "assert property (@(posedge clk) state == 2'b01 |-> out[3:0] != 0);",
    "assert property (@(posedge clk) data[7] |-> parity == ^data);",
    "assert property (@(posedge clk) {a, b} == 2'b11 |-> c);",
    "assert property (@(posedge clk) sel ? x : y);",
    "assert property (@(posedge clk) (cnt + 1) < 8'd200);",
    "assert property (@(posedge clk) a |-> b ##1 c ##1 d);",
    "assert property (@(posedge clk) $bits(m.bus) == 8);",
    "check_ack: assert property (@(posedge clk) req |-> ##[1:2] ack);",
    "assert property (@(posedge clk) a |-> b) else $error(\"a without b\");",
    "assert property (@(posedge m.clk) m.a |-> m.b);",
    "assert property (@(posedge clk) (start | stop | read | write) && !cmd_ack |-> go);",
    "assert property (@(posedge clk) a |-> (b |-> c));",
    "assert property (@(posedge clk) a === 1'b1 |-> b !== 1'bx);",
    "assert property (@(posedge clk) ##1 a |-> b);",
    "assert property (@(posedge clk) x >= 3 && x <= 7 |-> y);",
    "assert property (@(posedge clk) (a ##1 b)[*2] |-> c);",
];

pub const NEGATIVE: &[&str] = &[
    "assert property (@(posedge clk) a |-> ##[2:1] b);",
    "assert property (@(posedge clk) a |-> b)",
    "assert property (@(posedge clk) a |-> b;",
    "assert property @(posedge clk) a |-> b;",
    "assert (@(posedge clk) a |-> b);",
    "property (@(posedge clk) a |-> b);",
    "assert property ();",
    "assert property (@(posedge clk));",
    "assert property (@(clk) a |-> b);",
    "assert property (@(posedge) a |-> b);",
    "assert property (@(posedge clk) a |->);",
    "assert property (@(posedge clk) |-> b);",
    "assert property (@(posedge clk) a |-> |-> b);",
    "assert property (@(posedge clk) a ## b);",
    "assert property (@(posedge clk) a ##[1: b);",
    "assert property (@(posedge clk) a ##[1:$] b);",
    "assert property (@(posedge clk) a[*] |-> b);",
    "assert property (@(posedge clk) a[*3:1] |-> b);",
    "assert property (@(posedge clk) a[*0] |-> b);",
    "assert property (@(posedge clk) $past(a, 0) |-> b);",
    "assert property (@(posedge clk) $past() |-> b);",
    "assert property (@(posedge clk) $countones(a) == 1);",
    "assert property (@(posedge clk) $unknown_fn(a));",
    "assert property (@(posedge clk) disable (rst) a |-> b);",
    "assert property (@(posedge clk) disable iff rst a |-> b);",
    "assert property (@(posedge clk) a && |-> b);",
    "assert property (@(posedge clk) (a |-> b);",
    "assert property (@(posedge clk) a |-> b));",
    "assert property (@(posedge clk) a + |-> b);",
    "assert property (@(posedge clk) a ? b |-> c);",
    "assert property (@(posedge clk) a |=> b |=> );",
    "assert property (@(posedge clk) 8'hZZG == a);",
    "assert property (@(posedge clk) a == 'q1);",
    "assert property (@(posedge clk) a |-> b) c;",
    "assert property (@(posedge clk) a |-> b);;",
    "assert property (@(posedge clk) a |-> b); assert property (@(posedge clk) c);",
    "assume property (@(posedge clk) a |-> b);",
    "cover property (@(posedge clk) a |-> b);",
    "assert property (@(posedge clk) a |-> \"str\" b);",
    "assert property (@(posedge clk) a `b);",
    "",
    "a |-> b",
    "assert property (@(posedge clk) a[ |-> b);",
    "assert property (@(posedge clk) {a, } |-> b);",
    "assert property (@(posedge clk) a |-> ##-1 b);",
];
