// SPDX-License-Identifier: Apache-2.0

mod common;

use modassert::graph::{extract_relationships, GraphError};
use modassert::verilog::{parse_verilog, resolve_widths, PreprocessOptions};

use common::corpus::{corpus, load};
use common::graph_oracle::{brute_force, from_graph};

#[test]
fn small_corpus_designs_match_the_oracle() {
    let mut checked = 0;
    for d in corpus() {
        let unit = load(&d);
        if unit.modules.len() > 5 {
            continue;
        }
        let roots = match extract_relationships(&unit, None) {
            Ok(g) => vec![g.root],
            Err(GraphError::AmbiguousRoot { candidates }) => candidates,
            Err(e) => panic!("{}: {e}", d.name),
        };
        for root in roots {
            let g = extract_relationships(&unit, Some(&root)).unwrap();
            assert_eq!(from_graph(&g), brute_force(&unit, &root), "{} rooted at {root}", d.name);
        }
        checked += 1;
    }
    assert!(checked >= 15, "only {checked} designs with at most five modules");
}

#[test]
fn hand_fixture() {
    let src = "module leaf(input x, output y);\n  assign y = ~x;\nendmodule\n\
               module top(input a, output b);\n  leaf u1(.x(a), .y(b));\nendmodule\n";
    let mut unit = parse_verilog(&[("t.v".into(), src.into())], &PreprocessOptions::default());
    resolve_widths(&mut unit);
    let g = extract_relationships(&unit, None).unwrap();
    let r = from_graph(&g);
    let hop = |f: &str, t: &str, v: &str| (f.to_string(), t.to_string(), v.to_string());
    let expected = [
        hop("top.a", "top.u1.x", "port-connection"),
        hop("top.u1.x", "top.u1.y", "assign"),
        hop("top.u1.y", "top.b", "port-connection"),
    ];
    assert_eq!(r.hops, expected.into_iter().collect());
    assert_eq!(r.edges.len(), 1);
    assert_eq!(r, brute_force(&unit, "top"));
}
