use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_windscale"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("spawn windscale")
}

fn ok(dir: &Path, args: &[&str]) {
    let out = run(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn json(path: PathBuf) -> Value {
    serde_json::from_str(&std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))).unwrap()
}

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/data/cleansing_1000.csv")
}

#[test]
fn simulate_is_byte_identical_for_a_seed() {
    let d = tempfile::tempdir().unwrap();
    for name in ["a.csv", "b.csv"] {
        ok(d.path(), &["simulate", "--hurst", "0.9", "--months", "1", "--seed", "11", "-o", name]);
    }
    let a = std::fs::read(d.path().join("a.csv")).unwrap();
    assert_eq!(a, std::fs::read(d.path().join("b.csv")).unwrap());
    assert_eq!(String::from_utf8_lossy(&a).lines().count(), 4321);

    let meta = json(d.path().join("a.csv.json"));
    assert_eq!(meta["seed"], 11);
    assert_eq!(meta["schema_version"], 1);
    assert_eq!(meta["body"]["params"]["a"], 1235.0);

    ok(d.path(), &["simulate", "--hurst", "0.9", "--months", "1", "--seed", "12", "-o", "c.csv"]);
    assert_ne!(a, std::fs::read(d.path().join("c.csv")).unwrap());
}

#[test]
fn dfa_recovers_fgn_exponent() {
    let d = tempfile::tempdir().unwrap();
    ok(d.path(), &["fgn", "--hurst", "0.8", "-n", "16384", "--seed", "4", "-o", "fgn.csv"]);
    ok(d.path(), &["dfa", "-i", "fgn.csv", "-o", "out"]);
    let r = json(d.path().join("out/dfa.json"));
    let alpha = r["body"]["turbines"][0]["fit"]["alpha"].as_f64().unwrap();
    assert!((0.75..=0.85).contains(&alpha), "{alpha}");
    assert!(d.path().join("out/FGN.fluctuation.csv").exists());
    assert_eq!(r["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn self_comparison_is_zero() {
    let d = tempfile::tempdir().unwrap();
    ok(d.path(), &["simulate", "--hurst", "0.7", "--months", "1", "--seed", "2", "-o", "s.csv"]);
    ok(d.path(), &["compare", "--real", "s.csv", "--sim", "s.csv", "-o", "cmp.json"]);
    let m = &json(d.path().join("cmp.json"))["body"]["metrics"];
    for k in ["qq_max_deviation", "qq_increment_max_deviation", "acf_max_abs_diff", "pdf_l1"] {
        assert_eq!(m[k], 0.0, "{k}");
    }
}

#[test]
fn cleanse_then_analyze() {
    let d = tempfile::tempdir().unwrap();
    let input = fixture();
    ok(d.path(), &["cleanse", "-i", input.to_str().unwrap(), "-o", "clean"]);
    let r = json(d.path().join("clean/cleansing_report.json"));
    let c = &r["body"]["turbines"][0]["counts"];
    assert_eq!((c["consecutive_identical"].as_u64(), c["zero_std"].as_u64(), c["unphysical_ramp"].as_u64()), (Some(21), Some(15), Some(18)));
    assert_eq!(r["body"]["ingest"]["rows_parsed"], 1000);

    ok(d.path(), &["analyze", "-i", "clean/cleaned.csv", "-o", "an", "--seed", "1", "--max-lag", "144", "--n-segments", "2"]);
    let a = json(d.path().join("an/analysis.json"));
    let t = &a["body"]["turbines"][0];
    assert_eq!(t["turbine_id"], "WT07");
    assert!(t["beta"].as_f64().unwrap().is_finite());
    for f in ["WT07.pdf.csv", "WT07.acf.csv", "WT07.spectrum.csv", "WT07.increments_pdf.csv"] {
        assert!(d.path().join("an").join(f).exists(), "{f}");
    }
    let acf = std::fs::read_to_string(d.path().join("an/WT07.acf.csv")).unwrap();
    assert!(acf.starts_with("lag_steps,lag_seconds,theta\n0,0,1\n"), "{}", &acf[..60]);
}

#[test]
fn config_file_supplies_inputs_and_seed() {
    let d = tempfile::tempdir().unwrap();
    ok(d.path(), &["fgn", "--hurst", "0.5", "-n", "4096", "--seed", "8", "-o", "w.csv"]);
    std::fs::create_dir(d.path().join("cfg")).unwrap();
    std::fs::write(
        d.path().join("cfg/run.json"),
        r#"{"inputs": ["../w.csv"], "seed": 5, "output_dir": "../res", "analysis": {"max_lag": 50, "n_segments": 4}}"#,
    )
    .unwrap();
    ok(d.path(), &["--config", "cfg/run.json", "analyze"]);
    let a = json(d.path().join("res/analysis.json"));
    assert_eq!(a["seed"], 5);
    assert_eq!(a["body"]["options"]["max_lag"], 50);

    // Same config, different seed flag: different provenance hash.
    ok(d.path(), &["--config", "cfg/run.json", "--seed", "6", "analyze"]);
    let b = json(d.path().join("res/analysis.json"));
    assert_ne!(a["config_hash"], b["config_hash"]);
}

#[test]
fn calibrate_profile_feeds_simulate() {
    let d = tempfile::tempdir().unwrap();
    ok(d.path(), &["simulate", "--hurst", "0.9", "--months", "6", "--seed", "21", "-o", "data.csv"]);
    ok(d.path(), &["calibrate", "-i", "data.csv", "--seed", "3", "--replicas", "2", "-o", "profile.json"]);
    let p = json(d.path().join("profile.json"));
    assert_eq!(p["kind"], "calibration");
    assert_eq!(p["body"]["result"]["fixed"]["excess_from_config"], true);
    ok(d.path(), &["simulate", "--params", "profile.json", "--steps", "1000", "--seed", "1", "-o", "re.csv"]);
    let meta = json(d.path().join("re.csv.json"));
    assert_eq!(meta["body"]["params"]["a"], p["body"]["model"]["a"]);
}

#[test]
fn exit_codes() {
    let d = tempfile::tempdir().unwrap();
    let code = |args: &[&str]| run(d.path(), args).status.code();
    assert_eq!(code(&["simulate", "--hurst", "0.9", "-o", "x.csv"]), Some(2), "missing seed");
    assert_eq!(code(&["frobnicate"]), Some(2), "unknown subcommand");
    assert_eq!(code(&["dfa", "-i", "missing.csv"]), Some(2), "missing input");
    assert_eq!(code(&["--config", "missing.json", "dfa"]), Some(2), "missing config");
    assert_eq!(code(&["simulate", "--hurst", "0.6", "--seed", "1", "-o", "x.csv"]), Some(2), "no preset");

    std::fs::write(d.path().join("dup.csv"), "timestamp,turbine_id,power_avg_kw\n2014-01-01T00:00:00Z,T,1\n2014-01-01T00:00:00Z,T,2\n").unwrap();
    let out = run(d.path(), &["dfa", "-i", "dup.csv"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("lines 2 and 3"));

    std::fs::write(d.path().join("bad.csv"), "timestamp,turbine_id,power_avg_kw\n2014-01-01T00:00:00Z,T,abc\n").unwrap();
    assert_eq!(code(&["dfa", "-i", "bad.csv"]), Some(3), "malformed row");

    std::fs::write(d.path().join("short.csv"), "timestamp,turbine_id,power_avg_kw\n2014-01-01T00:00:00Z,T,1\n2014-01-01T00:10:00Z,T,2\n").unwrap();
    assert_eq!(code(&["dfa", "-i", "short.csv"]), Some(4), "insufficient data");

    std::fs::write(d.path().join("flat.csv"), "timestamp,turbine_id,power_avg_kw\n2014-01-01T00:00:00Z,T,1\n2014-01-01T00:10:00Z,T,1\n2014-01-01T00:20:00Z,T,1\n").unwrap();
    assert_eq!(code(&["analyze", "-i", "flat.csv", "--seed", "1"]), Some(4), "degenerate series");
}
