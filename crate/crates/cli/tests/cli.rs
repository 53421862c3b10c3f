use std::path::PathBuf;
use std::process::Command;

use serde_json::Value;

fn run(args: &[&str]) -> (i32, Value) {
    let out = Command::new(env!("CARGO_BIN_EXE_clopen-lab")).args(args).output().expect("binary runs");
    let v: Value = serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&out.stdout))
    });
    (out.status.code().unwrap_or(-1), v)
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("clopen-lab-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn compare_reports_gap_then_witness() {
    let (code, r) = run(&["compare", "--action", "odometer2.spec", "--A", "[00]", "--B", "[1]", "--depth", "2"]);
    assert_eq!(code, 0);
    assert_eq!(r["schema"], "clopen-lab/1");
    assert_eq!(r["result"]["gap"]["value"], "-1/4");
    assert_eq!(r["verdict"], "leq");
    assert_eq!(r["result"]["search"]["witness"]["verified"], true);
    assert_eq!(r["config"]["depth"], 2);
    assert!(r["tool"]["version"].is_string());
}

#[test]
fn reports_are_deterministic_up_to_timing() {
    let args = ["compare", "--action", "odometer2", "--A", "[00] | [11]", "--B", "[1]", "--depth", "2"];
    let (_, mut a) = run(&args);
    let (_, mut b) = run(&args);
    a.as_object_mut().unwrap().remove("timing");
    b.as_object_mut().unwrap().remove("timing");
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

#[test]
fn monoid_check_finds_perforation() {
    let (code, r) = run(&["monoid-check", "--gens", "2", "--rel", "2 0 = 0 2", "--property", "unperforated", "--bound", "4"]);
    assert_eq!(code, 0);
    assert_eq!(r["verdict"], "fails");
    let cert = &r["result"]["properties"][0]["certificate"];
    assert_eq!(cert["n"], 2);
    let witness: Vec<Value> = cert["witness"].as_array().unwrap().iter().map(|p| p[1].clone()).collect();
    assert!(witness.contains(&serde_json::json!([1, 0])) && witness.contains(&serde_json::json!([0, 1])));
}

#[test]
fn monoid_check_all_in_parallel_matches_serial() {
    let base = ["monoid-check", "--gens", "2", "--rel", "1 1 = 0 1", "--bound", "3"];
    let (_, serial) = run(&base);
    let mut par = base.to_vec();
    par.extend(["--jobs", "4"]);
    let (_, parallel) = run(&par);
    assert_eq!(serial["result"]["properties"], parallel["result"]["properties"]);
    let stably = serial["result"]["properties"].as_array().unwrap().iter().find(|p| p["property"] == "stably-finite").unwrap();
    assert_eq!(stably["verdict"], "fails");
}

#[test]
fn weiss_needs_more_shifts() {
    let (code, r) = run(&["zsubset", "--A", "weiss", "--B", "complement:weiss", "--shifts", "-1,0,1", "--window", "4096"]);
    assert_eq!(code, 0);
    assert_eq!(r["verdict"], "hall-violation");
    assert_eq!(r["result"]["outcome"]["verdict"], "hall-violation");
}

#[test]
fn witnesses_replay_and_tampering_is_caught() {
    let out = scratch("witness.json");
    let dot = scratch("witness.dot");
    let (code, r) = run(&[
        "equidecompose", "--action", "odometer2", "--A", "[0]", "--B", "[1]",
        "--json-out", out.to_str().unwrap(), "--dot", dot.to_str().unwrap(),
    ]);
    assert_eq!((code, r["verdict"].as_str()), (0, Some("found")));
    assert!(std::fs::read_to_string(&dot).unwrap().starts_with("graph witness {"));

    let (code, r) = run(&["equidecompose", "--action", "odometer2", "--A", "[0]", "--B", "[1]", "--verify", out.to_str().unwrap()]);
    assert_eq!((code, r["verdict"].as_str()), (0, Some("verified")));

    let mut doc: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    for p in doc["result"]["witness"]["pieces"].as_array_mut().unwrap() {
        p["word"] = "id".into();
    }
    let bad = scratch("tampered.json");
    std::fs::write(&bad, doc.to_string()).unwrap();
    let (code, r) = run(&["equidecompose", "--action", "odometer2", "--A", "[0]", "--B", "[1]", "--verify", bad.to_str().unwrap()]);
    assert_eq!((code, r["verdict"].as_str()), (0, Some("rejected")));
}

#[test]
fn unknown_is_a_verdict() {
    let (code, r) = run(&["equidecompose", "--action", "odometer2", "--A", "[0]", "--B", "[11]", "--wordlen", "2"]);
    assert_eq!(code, 0);
    assert_eq!(r["verdict"], "unknown");
}

#[test]
fn input_errors_exit_two() {
    let (code, r) = run(&["compare", "--action", "no-such-action", "--A", "[0]", "--B", "[1]"]);
    assert_eq!(code, 2);
    assert_eq!(r["error"]["kind"], "input");
    let (code, _) = run(&["equidecompose", "--action", "odometer2", "--A", "[0"]);
    assert_eq!(code, 2);
}

#[test]
fn spec_files_are_read() {
    let path = scratch("odo3.toml");
    std::fs::write(&path, "kind = \"odometer\"\nbase = [3]\n").unwrap();
    let (code, r) = run(&["coinvariants", "--action", path.to_str().unwrap(), "--depth", "2"]);
    assert_eq!(code, 0);
    assert_eq!((r["result"]["rank"].as_u64(), r["result"]["atoms"].as_u64()), (Some(1), Some(9)));
}

#[test]
fn shifts_refuse_coinvariants() {
    let (code, r) = run(&["coinvariants", "--action", "shift2", "--depth", "2"]);
    assert_eq!((code, r["verdict"].as_str()), (0, Some("refused")));
}

#[test]
fn outer_polytopes_respect_exact_only() {
    let (_, r) = run(&["measures", "--action", "amoo", "--A", "[1]@0", "--depth", "3", "--exact-only"]);
    assert_eq!(r["verdict"], "refused");
    let (_, r) = run(&["measures", "--action", "odometer2", "--A", "[0]", "--depth", "2", "--exact-only"]);
    assert_eq!(r["result"]["max"]["value"], "1/2");
    assert_eq!(r["result"]["min"]["value"], "1/2");
}

#[test]
fn paradox_and_type_leq() {
    let (_, r) = run(&["paradox", "--action", "odometer2", "--B", "[0]", "--bound", "2"]);
    assert_eq!(r["verdict"], "none-found");
    assert_eq!(r["result"]["normalized_state"]["tag"], "EXACT");
    let (_, r) = run(&["type-leq", "--action", "odometer2", "--A", "2*[00]", "--B", "[1]"]);
    assert_eq!(r["verdict"], "found");
}

#[test]
fn ladder_and_krieger() {
    let (_, r) = run(&["unit-ladder", "--action", "odometer2", "--A", "[0]", "--B", "[1]"]);
    assert_eq!(r["verdict"], "realized");
    assert_eq!(r["result"]["element"]["permutation"], serde_json::json!([1, 0]));
    let (_, r) = run(&["krieger", "--action", "odometer2", "--depth", "3", "--wordlen", "4"]);
    assert_eq!(r["verdict"], "extended");
    assert_eq!(r["result"]["steps"].as_array().unwrap().len(), 3);
    let (_, r) = run(&["krieger", "--action", "odometer2", "--depth", "3", "--wordlen", "2"]);
    assert_eq!(r["verdict"], "incomplete");
    assert!(r["result"]["failure"].as_str().unwrap().starts_with("step 3"));
}
