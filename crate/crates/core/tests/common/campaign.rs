// SPDX-License-Identifier: Apache-2.0

//! The padder/hash latency fixture and campaign helpers.

use std::path::{Path, PathBuf};
use std::time::Duration;

use modassert::mutation::{enumerate_mutations, run_campaign, AssertionSet, CampaignConfig, CampaignResult, Mutation, Operator};
use modassert::sim::BuiltinSimulator;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use modassert::sva::split_assertions;
use modassert::trace::CheckOptions;
use modassert::verilog::{load_design, PreprocessOptions, SourceUnit};

use super::corpus::fixtures;

pub fn dir() -> PathBuf {
    fixtures().join("latency")
}

pub fn unit() -> SourceUnit {
    load_design(&[dir().join("padder.v"), dir().join("hash_top.v")], &PreprocessOptions::default()).unwrap()
}

pub fn set(id: &str, file: &str) -> AssertionSet {
    let text = std::fs::read_to_string(dir().join(file)).unwrap();
    let assertions = split_assertions(&text).into_iter().enumerate().map(|(i, t)| (format!("{id}:{i}"), t)).collect();
    AssertionSet { id: id.into(), assertions }
}

/// Every mutation the enumerator can produce for the fixture.
pub fn all_mutations(unit: &SourceUnit) -> Vec<Mutation> {
    enumerate_mutations(unit, usize::MAX, 0).unwrap()
}

/// `if (i)` in the padder's pairing branch, inverted.
pub fn planted(unit: &SourceUnit) -> Mutation {
    all_mutations(unit)
        .into_iter()
        .find(|m| m.operator == Operator::ConditionInvert && m.site.module == "padder" && m.site.line == 23)
        .expect("planted mutation site")
}

pub fn campaign(unit: &SourceUnit, mutations: &[Mutation], sets: &[AssertionSet], workdir: &Path) -> CampaignResult {
    let cfg = CampaignConfig {
        jobs: 4,
        timeout: Duration::from_secs(60),
        root: Some("hash_top".into()),
        check: CheckOptions::default(),
        workdir: workdir.to_path_buf(),
    };
    run_campaign(unit, mutations, sets, &BuiltinSimulator::default(), &dir().join("stimulus.json"), &cfg).unwrap()
}

/// Random mutants (with a few from the padder so deep-only detections
/// occur) and random nested assertion subsets.
pub fn random_campaign(seed: u64, all: &[Mutation]) -> (Vec<Mutation>, Vec<AssertionSet>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ms: Vec<Mutation> = all.choose_multiple(&mut rng, 8).cloned().collect();
    let padder: Vec<&Mutation> = all.iter().filter(|m| m.site.module == "padder").collect();
    ms.extend(padder.choose_multiple(&mut rng, 3).map(|m| (*m).clone()));
    ms.sort_by(|a, b| a.id.cmp(&b.id));
    ms.dedup_by(|a, b| a.id == b.id);

    let baseline = set("baseline", "baseline.sv");
    let deep = set("deep", "deep.sv");
    let pool: Vec<(String, String)> = baseline.assertions.iter().chain(&deep.assertions).cloned().collect();
    let small: Vec<(String, String)> = pool.iter().filter(|_| rng.gen_bool(0.4)).cloned().collect();
    let mut large = small.clone();
    large.extend(pool.iter().filter(|a| !small.contains(a) && rng.gen_bool(0.5)).cloned());
    let mut union = baseline.clone();
    union.id = "baseline+deep".into();
    union.assertions.extend(deep.assertions.iter().cloned());
    let sets = vec![
        baseline,
        deep,
        union,
        AssertionSet { id: "small".into(), assertions: small },
        AssertionSet { id: "large".into(), assertions: large },
    ];
    (ms, sets)
}
