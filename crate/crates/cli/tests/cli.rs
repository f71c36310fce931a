use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_specsheaf");

fn bundled(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/scenarios")
        .join(format!("{name}.json"))
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env_remove("SPECSHEAF_CACHE_DIR")
        .output()
        .expect("binary runs")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "bad report ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn write_scenario(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, body).unwrap();
    path
}

const DIAG_BLOCK: &str = r#"{
  "name": "diag_block",
  "dim": 3,
  "generators": {
    "diag": [{"diag": [1, 2, 3]}],
    "block": [{"diag": [1, 1, 2]}]
  },
  "states": {"mixed": {"density": {"diag": [0.5, 0.3, 0.2]}}},
  "projections": {"e11": {"diag": [1, 0, 0]}, "e33": {"diag": [0, 0, 1]}}
}"#;

#[test]
fn build_single_context() {
    let dir = TempDir::new().unwrap();
    let path = write_scenario(
        &dir,
        "one.json",
        r#"{"name": "one", "dim": 2, "generators": {"z": [{"diag": [1, -1]}]}}"#,
    );
    let out = run(&["build", "--scenario", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["summary"]["contexts"], 1);
    assert_eq!(r["summary"]["arrows"], 0);
    assert_eq!(r["command"], "build");
    assert_eq!(r["cache"], "disabled");
}

#[test]
fn build_block_below_diagonal() {
    let dir = TempDir::new().unwrap();
    let path = write_scenario(&dir, "s.json", DIAG_BLOCK);
    let out = run(&["build", "--scenario", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["summary"]["contexts"], 2);
    assert_eq!(r["summary"]["arrows"], 1);
    assert_eq!(r["summary"]["hasse_edges"].as_array().unwrap().len(), 1);
}

#[test]
fn over_cap_is_an_input_error() {
    let dir = TempDir::new().unwrap();
    let body = DIAG_BLOCK.replace(r#""dim": 3,"#, r#""dim": 3, "caps": {"max_contexts": 1},"#);
    let path = write_scenario(&dir, "s.json", &body);
    let out = run(&["build", "--scenario", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
}

#[test]
fn missing_or_malformed_scenario_is_an_input_error() {
    let dir = TempDir::new().unwrap();
    let bad = write_scenario(&dir, "bad.json", "{\"name\": ");
    assert_eq!(run(&["build", "--scenario", bad.to_str().unwrap()]).status.code(), Some(2));
    let unknown = write_scenario(&dir, "unknown.json", r#"{"name": "x", "dim": 2, "bogus": 1}"#);
    assert_eq!(run(&["build", "--scenario", unknown.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(run(&["build", "--scenario", "/nonexistent.json"]).status.code(), Some(2));
}

#[test]
fn measure_of_top_is_one_everywhere() {
    let s = bundled("qutrit_blocks");
    let out = run(&["measure", "--scenario", s.to_str().unwrap(), "--state", "mixed", "--subobject", "top"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    let values = r["values"].as_object().unwrap();
    assert_eq!(values.len(), 4);
    assert!(values.values().all(|v| (v.as_f64().unwrap() - 1.0).abs() < 1e-12));
}

#[test]
fn measure_of_daseinised_projection_matches_trace() {
    let dir = TempDir::new().unwrap();
    let path = write_scenario(&dir, "s.json", DIAG_BLOCK);
    let out = run(&["measure", "--scenario", path.to_str().unwrap(), "--state", "mixed", "--subobject", "dasein:e11"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    let mut values: Vec<f64> = r["values"].as_object().unwrap().values().map(|v| v.as_f64().unwrap()).collect();
    values.sort_by(f64::total_cmp);
    // in the block context e11 is approximated by e11 + e22
    assert_eq!(values.len(), 2);
    assert!((values[0] - 0.5).abs() < 1e-12 && (values[1] - 0.8).abs() < 1e-12, "{values:?}");

    let out = run(&["measure", "--scenario", path.to_str().unwrap(), "--state", "mixed", "--subobject", "dasein:e33"]);
    let r = report(&out);
    let mut values: Vec<f64> = r["values"].as_object().unwrap().values().map(|v| v.as_f64().unwrap()).collect();
    values.sort_by(f64::total_cmp);
    // e33 lies in both contexts, so the value is tr(rho e33) everywhere
    assert!(values.iter().all(|v| (v - 0.2).abs() < 1e-12), "{values:?}");
}

#[test]
fn bad_subobject_spec_is_an_input_error() {
    let s = bundled("qutrit_blocks");
    for spec in ["nonsense", "dasein:missing", "pseudo:mixed"] {
        let out = run(&["measure", "--scenario", s.to_str().unwrap(), "--state", "mixed", "--subobject", spec]);
        assert_eq!(out.status.code(), Some(2), "{spec}");
    }
}

#[test]
fn reconstruct_round_trip_passes() {
    let s = bundled("qutrit_frame");
    let out = run(&["reconstruct", "--scenario", s.to_str().unwrap(), "--state", "mixed", "--round-trip"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert!(r["round_trip_error"].as_f64().unwrap() < 1e-6);
    assert_eq!(r["passed"], true);
}

#[test]
fn reconstruct_from_table() {
    let s = bundled("qutrit_frame");
    let out = run(&["reconstruct", "--scenario", s.to_str().unwrap(), "--table", "mixed_table"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    let state = r["reconstruction"]["state"].as_array().unwrap();
    assert!((state[0][0][0].as_f64().unwrap() - 0.5).abs() < 1e-6);
}

#[test]
fn reconstruct_without_frame_contexts_is_an_input_error() {
    let s = bundled("qutrit_blocks");
    let out = run(&["reconstruct", "--scenario", s.to_str().unwrap(), "--state", "mixed"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn ks_set_has_no_global_section() {
    let s = bundled("ks_cabello18");
    let out = run(&["ks", "--scenario", s.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["certificate"]["result"], "none");
    assert!(r["certificate"]["nodes"].as_u64().unwrap() < 1_000_000);
}

#[test]
fn ks_budget_exhaustion_is_a_failure() {
    let s = bundled("ks_cabello18");
    let out = run(&["ks", "--scenario", s.to_str().unwrap(), "--budget", "3"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn qubit_has_a_global_section() {
    let s = bundled("qubit_bases");
    let out = run(&["ks", "--scenario", s.to_str().unwrap()]);
    assert_eq!(report(&out)["certificate"]["result"], "found");
}

#[test]
fn expect_without_va_is_degraded() {
    let s = bundled("qubit_bases");
    let out = run(&["expect", "--scenario", s.to_str().unwrap(), "--operator", "h", "--state", "mixed"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["expectation"]["va_in_poset"], false);
    assert_eq!(r["expectation"]["degraded_accuracy"], true);
}

#[test]
fn expect_with_va_is_exact() {
    let s = bundled("qutrit_blocks");
    let out = run(&["expect", "--scenario", s.to_str().unwrap(), "--operator", "degenerate", "--state", "mixed"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert!((r["direct"].as_f64().unwrap() - 1.6).abs() < 1e-12);
    assert!(r["error"].as_f64().unwrap() < 1e-9);
}

#[test]
fn check_axioms_on_state_and_table() {
    let s = bundled("qutrit_blocks");
    let out = run(&["check-axioms", "--scenario", s.to_str().unwrap(), "--state", "mixed", "--pairs", "50"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["report"]["pairs_checked"], 50);
    let out = run(&["check-axioms", "--scenario", s.to_str().unwrap(), "--table", "mixed_table"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn daseinise_reports_exact_contexts() {
    let s = bundled("qutrit_blocks");
    let out = run(&["daseinise", "--scenario", s.to_str().unwrap(), "--projection", "e11"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    // every context except the block one {e11 + e22, e33}
    assert_eq!(r["exact_at"].as_array().unwrap().len(), 3);
}

#[test]
fn tolerance_override_is_validated() {
    let s = bundled("qutrit_blocks");
    let ok = run(&["build", "--scenario", s.to_str().unwrap(), "--tol-override", "tol_order=1e-8"]);
    assert_eq!(ok.status.code(), Some(0));
    for bad in ["tol_order", "tol_unknown=1e-3", "tol_order=abc", "tol_order=-1"] {
        let out = run(&["build", "--scenario", s.to_str().unwrap(), "--tol-override", bad]);
        assert_eq!(out.status.code(), Some(2), "{bad}");
    }
}

#[test]
fn out_flag_writes_identical_reports() {
    let dir = TempDir::new().unwrap();
    let s = bundled("ks_cabello18");
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    for path in [&a, &b] {
        let out = run(&["build", "--scenario", s.to_str().unwrap(), "--out", path.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
        assert!(out.stdout.is_empty());
    }
    let (ta, tb) = (fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(ta, tb);
    let v: Value = serde_json::from_slice(&ta).unwrap();
    assert_eq!(v["summary"]["contexts"], 27);
}

#[test]
fn cache_miss_hit_and_stale() {
    let cache = TempDir::new().unwrap();
    let s = bundled("qutrit_blocks");
    let args = ["build", "--scenario", s.to_str().unwrap(), "--cache-dir", cache.path().to_str().unwrap()];
    let first = run(&args);
    assert_eq!(report(&first)["cache"], "miss");
    let second = run(&args);
    assert_eq!(report(&second)["cache"], "hit");
    let strip = |o: &Output| {
        let mut v = report(o);
        v.as_object_mut().unwrap().remove("cache");
        v
    };
    assert_eq!(strip(&first), strip(&second));

    let entry = fs::read_dir(cache.path()).unwrap().next().unwrap().unwrap().path();
    fs::write(&entry, "{ not json").unwrap();
    assert_eq!(report(&run(&args))["cache"], "stale");
    assert_eq!(report(&run(&args))["cache"], "hit");
}

#[test]
fn cache_dir_from_environment() {
    let cache = TempDir::new().unwrap();
    let s = bundled("qubit_bases");
    let run_env = || {
        Command::new(BIN)
            .args(["build", "--scenario", s.to_str().unwrap()])
            .env("SPECSHEAF_CACHE_DIR", cache.path())
            .output()
            .unwrap()
    };
    assert_eq!(report(&run_env())["cache"], "miss");
    assert_eq!(report(&run_env())["cache"], "hit");
}

#[test]
fn changed_scenario_does_not_reuse_cache() {
    let dir = TempDir::new().unwrap();
    let cache = TempDir::new().unwrap();
    let path = write_scenario(&dir, "s.json", DIAG_BLOCK);
    let args = ["build", "--scenario", path.to_str().unwrap(), "--cache-dir", cache.path().to_str().unwrap()];
    assert_eq!(report(&run(&args))["cache"], "miss");
    fs::write(&path, DIAG_BLOCK.replace("[1, 1, 2]", "[1, 2, 2]")).unwrap();
    let r = report(&run(&args));
    assert_eq!(r["cache"], "miss");
    assert_eq!(r["summary"]["arrows"], 1);
}
