use std::process::{Command, Output};

fn tilepile(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tilepile")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(tilepile(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(tilepile(&["mixing", "l2"]).status.code(), Some(1));
    assert_eq!(tilepile(&["--help"]).status.code(), Some(0));
    assert_eq!(tilepile(&["--version"]).status.code(), Some(0));
}

#[test]
fn runtime_errors_exit_one() {
    let o = tilepile(&["sandpile", "order", "--graph", "no-such-tiling:torus:3"]);
    assert_eq!(o.status.code(), Some(1));
    let o = tilepile(&["mixing", "l2", "--graph", "square:torus:6", "--steps", "1", "--cap", "1000"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("1000"));
}

#[test]
fn validate_builtins_and_files() {
    for name in ["square", "triangular", "hex", "z3", "fcc", "d4"] {
        let o = tilepile(&["tiling", "validate", name]);
        assert!(o.status.success(), "{name}: {}", String::from_utf8_lossy(&o.stderr));
        let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
        assert_eq!(v["name"], name);
    }
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"name":"bad","dim":2,"basis":[[1,0],[0,1]],"cells":[],"edges":[]}"#).unwrap();
    assert_eq!(tilepile(&["tiling", "validate", path.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn group_order_matches_tree_count() {
    // 3×3 torus of the square lattice: 11664 spanning trees.
    let o = tilepile(&["sandpile", "order", "--graph", "square:torus:3"]);
    assert!(stdout(&o).lines().any(|l| l == "11664"));
}

#[test]
fn mc_is_seed_deterministic() {
    let args = ["mixing", "mc", "--graph", "square:torus:5", "--steps", "0:60:20", "--chains", "40", "--seed", "11"];
    let a = tilepile(&args);
    let b = tilepile(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let mut other = args.to_vec();
    other[9] = "12";
    assert_ne!(tilepile(&other).stdout, a.stdout);
}

#[test]
fn csv_header_carries_provenance() {
    let o = tilepile(&["mixing", "l2", "--graph", "square:torus:3", "--steps", "0,5", "--seed", "4"]);
    let text = stdout(&o);
    assert!(text.starts_with("# tool: tilepile "));
    assert!(text.contains("# seed: 4"));
    let body: String = text.lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n");
    let mut r = csv::Reader::from_reader(body.as_bytes());
    assert_eq!(r.headers().unwrap().iter().collect::<Vec<_>>(), ["N", "l2", "tv_upper", "tv_lower", "observable_re", "observable_im", "stderr"]);
    assert_eq!(r.records().count(), 2);
}

#[test]
fn json_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p.json");
    let o = tilepile(&[
        "mixing", "l2", "--graph", "triangular:torus:2", "--steps", "0:20:5", "--format", "json", "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["tool"], "tilepile");
    let profile: tilepile_core::mixing::MixingProfile = serde_json::from_value(v["result"].clone()).unwrap();
    assert_eq!(profile.samples.len(), 5);
    let again = serde_json::to_value(&profile).unwrap();
    assert_eq!(again, v["result"]);
}

#[test]
fn greens_torus_is_harmonic_off_support() {
    let o = tilepile(&["greens", "--spec", "square", "--m", "6", "--eta", "[[0,[0,0],1],[0,[1,0],-1]]", "--format", "json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let t: tilepile_core::greens::GreensTable = serde_json::from_value(v["result"].clone()).unwrap();
    let at = |x: i64, y: i64| t.get(&tilepile_core::Vertex::new(0, vec![x.rem_euclid(6), y.rem_euclid(6)])).unwrap();
    let lap = |x: i64, y: i64| 4.0 * at(x, y) - at(x + 1, y) - at(x - 1, y) - at(x, y + 1) - at(x, y - 1);
    assert!((lap(0, 0) - 1.0).abs() < 1e-9);
    assert!((lap(1, 0) + 1.0).abs() < 1e-9);
    assert!(lap(3, 3).abs() < 1e-9);
}

#[test]
fn reproduce_tolerance_failure_exits_two() {
    let o = tilepile(&["reproduce", "periodic", "--precision", "0"]);
    assert_eq!(o.status.code(), Some(2));
    let text = stdout(&o);
    assert!(text.contains("triangular") && text.contains("FAIL"));
}
