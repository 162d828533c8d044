// SPDX-License-Identifier: Apache-2.0

//! Toggle coverage restricted to assertion cones of influence.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{detect_root_scope, to_wave_name, Waveform};
use crate::graph::{cone_of_influence, ConeOfInfluence, DesignGraph};
use crate::sva::SvaAst;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToggleReport {
    pub set_id: String,
    pub coi: ConeOfInfluence,
    /// COI members that toggled in at least one waveform.
    pub toggled: BTreeSet<String>,
    /// Size of the largest COI among the compared sets.
    pub denominator: usize,
    pub tfc_percent: f64,
}

/// Waveform signals where some bit rose 0→1 and some bit fell 1→0.
pub fn toggled_signals(wave: &Waveform) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for (name, sig) in &wave.signals {
        let list = &wave.changes[sig.slot];
        let (mut rose, mut fell) = (false, false);
        for pair in list.windows(2) {
            let (a, b) = (&pair[0].1, &pair[1].1);
            for i in 0..sig.width {
                match (a.get_bit(i), b.get_bit(i)) {
                    (Some(false), Some(true)) => rose = true,
                    (Some(true), Some(false)) => fell = true,
                    _ => {}
                }
            }
            if rose && fell {
                out.insert(name.clone());
                break;
            }
        }
    }
    out
}

/// TFC for each named assertion set. Every set is measured against the
/// largest cone among them, so a set with a smaller cone cannot score
/// higher just by looking at fewer signals.
pub fn toggle_coverage(
    waves: &[&Waveform],
    graph: &DesignGraph,
    sets: &[(String, Vec<SvaAst>)],
    root_scope: Option<&str>,
) -> Vec<ToggleReport> {
    let mut toggled_hier: BTreeSet<String> = BTreeSet::new();
    let all = graph.all_signals();
    for wave in waves {
        let scope = root_scope.map(str::to_string).or_else(|| detect_root_scope(wave, graph));
        let Some(scope) = scope else { continue };
        let t = toggled_signals(wave);
        for h in &all {
            if t.contains(&to_wave_name(h, &graph.root, &scope)) {
                toggled_hier.insert(h.clone());
            }
        }
    }
    let cones: Vec<ConeOfInfluence> = sets
        .iter()
        .map(|(_, asts)| {
            let mut seeds: Vec<String> = asts.iter().flat_map(|a| a.body_names()).filter(|n| !graph.resolve(n).is_empty()).collect();
            seeds.sort();
            seeds.dedup();
            cone_of_influence(graph, &seeds).expect("seeds resolved")
        })
        .collect();
    let denominator = cones.iter().map(|c| c.size).max().unwrap_or(0);
    sets.iter()
        .zip(cones)
        .map(|((id, _), coi)| {
            let toggled: BTreeSet<String> = coi.members.intersection(&toggled_hier).cloned().collect();
            let tfc_percent = if denominator == 0 { 0.0 } else { toggled.len() as f64 * 100.0 / denominator as f64 };
            ToggleReport { set_id: id.clone(), coi, toggled, denominator, tfc_percent }
        })
        .collect()
}
