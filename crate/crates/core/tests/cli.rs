use std::process::{Command, Output};

use serde_json::Value;

fn picard(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_picard")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn value_re(out: &Output) -> f64 {
    json(out)["value"][0].as_f64().unwrap()
}

#[test]
fn eval_examples() {
    let o = picard(&["eval", "sigma", "--Z", "0.5,0,0,0", "--Z2", "1,0,0,0"]);
    assert!(o.status.success());
    assert!((value_re(&o) - 1.125).abs() < 1e-15);
    let o = picard(&["eval", "hyp", "--a", "0.5", "--b", "0.5", "--c", "1", "--z", "0"]);
    assert_eq!(value_re(&o), 1.0);
    let o = picard(&["eval", "poisson", "--Z", "0.5,0,0,0", "--W", "0,0,0"]);
    assert!((value_re(&o) - 4.0).abs() < 1e-15);
    assert!(json(&o)["definition"].as_str().is_some());
}

#[test]
fn unknown_names_exit_2() {
    assert_eq!(picard(&["verify", "no-such-suite"]).status.code(), Some(2));
    assert_eq!(picard(&["eval", "bogus"]).status.code(), Some(2));
    assert_eq!(
        picard(&["hyp", "check-relation", "--id", "er99", "--a", "1", "--b", "1", "--c", "2", "--z", "0.1"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn verify_single_suite_json_and_csv() {
    let o = picard(&["verify", "product-formula", "--s", "1.3", "--points", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    let arr = v.as_array().unwrap();
    assert_eq!(arr.len(), 1);
    for key in ["identity_id", "inputs", "lhs", "rhs", "rel_err", "pass", "runtime_ms"] {
        assert!(arr[0].get(key).is_some(), "missing {key}");
    }
    assert!(arr[0]["runtime_ms"].is_null());

    let o = picard(&["verify", "poisson-integral", "--s", "2", "--format", "csv"]);
    let text = String::from_utf8(o.stdout).unwrap();
    // Three radii plus the anchor, and a header.
    assert_eq!(text.lines().count(), 5);
    assert!(text.starts_with("identity_id,"));
}

#[test]
fn failures_set_exit_code() {
    // An impossible tolerance fails every check.
    let o = picard(&["verify", "poisson-integral", "--rel-tol", "1e-300"]);
    assert_eq!(o.status.code(), Some(10));
}

#[test]
fn reports_are_byte_identical() {
    let args = ["verify", "hypergeometric", "--quick", "--seed", "11"];
    let a = picard(&args);
    let b = picard(&args);
    assert_eq!(a.stdout, b.stdout);
    let one = Command::new(env!("CARGO_BIN_EXE_picard")).args(args).env("PICARD_THREADS", "1").output().unwrap();
    assert_eq!(a.stdout, one.stdout);
    let c = picard(&["verify", "hypergeometric", "--quick", "--seed", "12"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn config_files() {
    let dir = std::env::temp_dir().join(format!("picard-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let good = dir.join("good.toml");
    std::fs::write(&good, "seed = 3\nquick = true\n[output]\nformat = \"text\"\n[grid]\ns = \"0.4\"\n").unwrap();
    let o = picard(&["verify", "sl2-product-formula", "--config", good.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8(o.stdout).unwrap().lines().all(|l| l.starts_with("PASS")));
    let bad = dir.join("bad.json");
    std::fs::write(&bad, r#"{"seed": 3, "colour": "blue"}"#).unwrap();
    assert_eq!(picard(&["verify", "sl2-product-formula", "--config", bad.to_str().unwrap()]).status.code(), Some(2));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn lattice_zeta_and_series() {
    let o = picard(&["lattice", "enum", "--height", "1"]);
    assert_eq!(json(&o)["count"], 84);
    let o = picard(&["lattice", "enum", "--height", "1", "--format", "csv"]);
    assert_eq!(String::from_utf8(o.stdout).unwrap().lines().count(), 85);
    let o = picard(&["zeta", "dedekind", "--s", "3,0", "--height", "1"]);
    assert!((json(&o)["value"][0].as_f64().unwrap() - 1.0).abs() < 1e-15);
    let o = picard(&["zeta", "dedekind", "--s", "0.5", "--height", "10"]);
    assert_ne!(o.status.code(), Some(0));
    let o = picard(&["zeta", "epstein", "--s", "2.5", "--height", "4"]);
    assert!(json(&o)["value"][0].as_f64().unwrap() > 0.0);
    let o = picard(&["series", "eisenstein", "--Z", "1,0,0,0", "--s", "2.5", "--height", "4"]);
    assert!(json(&o)["terms"].as_u64().unwrap() > 0);
}

#[test]
fn hyp_kernel_op_ring() {
    let o = picard(&["hyp", "eval", "--a", "1", "--b", "1", "--c", "2", "--z", "0.5"]);
    let v = json(&o)["value"][0].as_f64().unwrap();
    assert!((v - 2.0 * 2f64.ln()).abs() < 1e-14);
    let o = picard(&[
        "hyp",
        "check-relation",
        "--id",
        "connection",
        "--a",
        "0.3",
        "--b",
        "0.2",
        "--c",
        "1.7",
        "--z",
        "0.6,0.1",
    ]);
    assert_eq!(json(&o)["pass"], true);
    let o = picard(&[
        "kernel",
        "eval",
        "--id",
        "poisson-k",
        "--Z",
        "1,0,0,0",
        "--W",
        "0.2,0.1,0.3",
        "--s",
        "1.5",
        "--k",
        "1",
    ]);
    assert!(o.status.success());
    let o =
        picard(&["op", "check", "--target", "poisson", "--Z", "0.6,0.3,0.2,-0.4", "--W", "0.3,0.5,-0.2", "--s", "1.7"]);
    assert!(json(&o)["residual"].as_f64().unwrap() < 1e-5);
    let o = picard(&["ring", "gcd", "(6,0)", "(4,0)"]);
    assert_eq!(json(&o)["value"], "(2,0)");
    let o = picard(&["ring", "mul", "-1/2+1/2*sqrt(-3)", "(-1,1)"]);
    assert_eq!(json(&o)["value"], "(-1,-1)");
    let o = picard(&["invariants", "--Z", "0.5,0,0,0", "--Z2", "1,0,0,0"]);
    assert!((json(&o)["sigma"].as_f64().unwrap() - 1.125).abs() < 1e-15);
}
