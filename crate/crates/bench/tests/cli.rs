use std::path::Path;
use std::process::{Command, Output};

use rdrsom::problems::SnlInstance;
use rdrsom_bench::report::parse_json;

fn rdrsom(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rdrsom")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const KS: &str = r#"{"problem": "kohn-sham", "n": 40, "p": 3, "seeds": [0, 1, 2], "solvers": ["rdrsom", "baseline-bb"]}"#;

#[test]
fn bench_emits_schema_one_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "ks.json", KS);
    let out = rdrsom(&["bench", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let value: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(value["schema"], 1);
    let report = parse_json(&text).unwrap();
    assert_eq!(report.rows.len(), 6);
    assert!(report.rows.iter().all(|r| r.termination == "converged"));
}

#[test]
fn bench_csv_has_exact_header() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "ks.json", KS);
    let csv_path = dir.path().join("out.csv");
    let out = rdrsom(&["bench", "--config", &cfg, "--format", "csv", "--out", csv_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(csv_path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("problem,solver,seed,fval,gradnorm,pfeas,metric,iters,seconds"));
    assert_eq!(lines.count(), 6);
}

#[test]
fn config_output_paths_are_honored() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("r.json");
    let csv = dir.path().join("r.csv");
    let text = format!(
        r#"{{"problem": "maxcut-random", "n": 30, "output_json": {:?}, "output_csv": {:?}}}"#,
        json.to_str().unwrap(),
        csv.to_str().unwrap()
    );
    let cfg = write(dir.path(), "mc.json", &text);
    assert_eq!(rdrsom(&["bench", "--config", &cfg]).status.code(), Some(0));
    assert_eq!(parse_json(&std::fs::read_to_string(json).unwrap()).unwrap().rows.len(), 1);
    assert!(std::fs::read_to_string(csv).unwrap().starts_with("problem,"));
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    for (i, text) in [
        r#"{"problem": "kohn-sham", "n": 40, "p": 3, "seeds": []}"#,
        r#"{"problem": "kohn-sham", "n": 40, "p": 3, "typo": true}"#,
        "not json",
        r#"{"problem": "maxcut-gset", "gset_path": "/nonexistent/g55"}"#,
    ]
    .iter()
    .enumerate()
    {
        let cfg = write(dir.path(), &format!("bad{i}.json"), text);
        assert_eq!(rdrsom(&["bench", "--config", &cfg]).status.code(), Some(1), "{text}");
        assert_eq!(rdrsom(&["solve", "--config", &cfg]).status.code(), Some(1), "{text}");
    }
    assert_eq!(rdrsom(&["bench", "--config", "/nonexistent.json"]).status.code(), Some(1));
    assert_eq!(rdrsom(&["bench"]).status.code(), Some(1));
    assert_eq!(rdrsom(&["gen-snl", "--n", "3"]).status.code(), Some(1));
}

#[test]
fn unwritable_output_exits_with_two() {
    let out = rdrsom(&["gen-snl", "--n", "20", "--out", "/nonexistent/dir/inst.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn gen_snl_roundtrips_at_full_precision() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("snl.json");
    let out = rdrsom(&["gen-snl", "--n", "50", "--seed", "3", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let inst: SnlInstance = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(inst, rdrsom::problems::snl_generate(50, 3).unwrap());
}

#[test]
fn solve_writes_point_that_kkt_certifies() {
    let dir = tempfile::tempdir().unwrap();
    let graph = write(dir.path(), "ring.txt", "6 6\n1 2 1\n2 3 1\n3 4 1\n4 5 1\n5 6 1\n1 6 1\n");
    let cfg = write(
        dir.path(),
        "ring.json",
        &format!(r#"{{"problem": "maxcut-gset", "gset_path": {graph:?}, "solver": {{"eps_grad": 1e-8}}}}"#),
    );
    let point = dir.path().join("x.json");
    let out = rdrsom(&["solve", "--config", &cfg, "--seed", "4", "--point-out", point.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = parse_json(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(report.rows[0].seed, 4);
    assert_eq!(report.rows[0].problem, "ring");

    let out = rdrsom(&["kkt", "--graph", &graph, "--point", point.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let kkt: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    // An even cycle is bipartite: the cut takes every edge, f = -4·6.
    assert!((kkt["fval"].as_f64().unwrap() + 24.0).abs() < 1e-6);
    assert!(kkt["residue"].as_f64().unwrap() < 1e-6);
}

#[test]
fn repeated_bench_runs_differ_only_in_timing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "snl.json",
        r#"{"problem": "snl", "n": 40, "seeds": [5, 6], "solvers": ["rdrsom", "baseline-bb"]}"#,
    );
    let run = || parse_json(&String::from_utf8(rdrsom(&["bench", "--config", &cfg]).stdout).unwrap()).unwrap();
    let (a, b) = (run(), run());
    assert_eq!(a.without_timing(), b.without_timing());
}
