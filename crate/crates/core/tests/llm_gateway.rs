// SPDX-License-Identifier: Apache-2.0

use modassert::llm::*;
use serde_json::json;

fn request(module: &str) -> PromptRequest {
    let ctx = json!({"module": module, "clock": "clk", "reset": "rst", "ports": [
        {"name": "clk", "direction": "input", "width": 1},
        {"name": "rst", "direction": "input", "width": 1},
        {"name": "a", "direction": "input", "width": 8},
        {"name": "y", "direction": "output", "width": 8},
    ]});
    PromptRequest {
        stage: Stage::SpecExtract,
        system_text: "You write module specifications.".into(),
        user_text: with_context("Describe this module.", &ctx),
        temperature: 0.2,
        max_tokens: 1024,
        schema_id: "module_spec.v1".into(),
    }
}

#[test]
fn record_then_replay_three_requests() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("transcript.jsonl");
    let reqs: Vec<PromptRequest> = ["m1", "m2", "m3"].iter().map(|m| request(m)).collect();
    let recorded: Vec<ModelResponse> = {
        let gw = Gateway::new(Box::new(RecordBackend::new(Box::new(MockBackend), &path).unwrap()));
        reqs.iter().map(|r| gw.complete(r).unwrap()).collect()
    };
    assert_eq!(read_transcript(&path).unwrap().len(), 3);

    let replay = std::sync::Arc::new(ReplayBackend::open(&path).unwrap());
    struct Shared(std::sync::Arc<ReplayBackend>);
    impl Backend for Shared {
        fn send(&self, req: &PromptRequest) -> Result<RawReply, LlmError> {
            self.0.send(req)
        }
    }
    let gw = Gateway::new(Box::new(Shared(replay.clone())));
    for (r, expected) in reqs.iter().zip(&recorded) {
        assert_eq!(&gw.complete(r).unwrap(), expected);
    }
    assert_eq!((replay.hits(), replay.misses()), (3, 0));

    let mut changed = reqs[0].clone();
    changed.user_text.push(' ');
    match gw.complete(&changed) {
        Err(LlmError::ReplayMiss { hash, stage }) => {
            assert_eq!(hash, changed.hash());
            assert_eq!(stage, "spec_extract");
        }
        other => panic!("expected a replay miss, got {other:?}"),
    }
}

#[test]
fn transcript_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let gw = Gateway::new(Box::new(MockBackend));
    gw.complete(&request("m1")).unwrap();
    gw.complete(&request("m2")).unwrap();
    let log = gw.transcript();
    let path = dir.path().join("t.jsonl");
    write_transcript(&path, &log).unwrap();
    let back = read_transcript(&path).unwrap();
    assert_eq!(back, log);
    assert_eq!(transcript_hash(&back), transcript_hash(&log));
    assert_eq!(back[0].hash, request("m1").hash());
}

#[test]
fn parallel_callers_share_the_gateway() {
    let gw = Gateway::with_limits(Box::new(MockBackend), 2, 2);
    std::thread::scope(|s| {
        for i in 0..8 {
            let gw = &gw;
            s.spawn(move || gw.complete(&request(&format!("m{i}"))).unwrap());
        }
    });
    assert_eq!(gw.transcript().len(), 8);
}
