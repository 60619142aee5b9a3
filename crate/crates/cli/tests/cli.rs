use serde_json::Value;
use std::process::{Command, Output};

const SUZ: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/fixtures/suz.bundle.json");
const A5: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/fixtures/a5.bundle.json");

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_help-cli"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(args: &[&str]) -> Value {
    let o = run(args);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    serde_json::from_slice(&o.stdout).unwrap()
}

#[test]
fn validate_fixture() {
    let o = run(&["validate", SUZ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("orthogonality: ok"));
    assert_eq!(run(&["validate", "--table", "a5"]).status.code(), Some(0));
}

#[test]
fn validate_truncated() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cut.json");
    let text = std::fs::read_to_string(SUZ).unwrap();
    std::fs::write(&path, &text[..text.len() / 2]).unwrap();
    let o = run(&["validate", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("line ") && err.contains("column "), "{err}");
}

#[test]
fn validate_bad_power_map() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    let mut doc: Value = serde_json::from_str(&std::fs::read_to_string(A5).unwrap()).unwrap();
    // The square of 3a must be a class of order 3.
    doc["classes"][2]["powermap"]["2"] = 1.into();
    std::fs::write(&path, doc.to_string()).unwrap();
    let o = run(&["validate", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let all = stdout(&o) + &stderr(&o);
    assert!(all.contains("classes[2]") || all.contains("3a"), "{all}");
}

#[test]
fn missing_file() {
    let o = run(&["analyze", "--table", "/no/such/bundle.json", "--order", "2"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["analyze", "--table", "suz", "--order", "2", "--profile", "/no/such.json"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bad_flags() {
    for args in [
        &["analyze", "--table", "suz", "--jobs", "0"][..],
        &["analyze", "--table", "suz", "--format", "xml"],
        &["analyze", "--table", "suz", "--orders", "some"],
        &["frobnicate"],
    ] {
        assert_eq!(run(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn order_twenty_two() {
    let doc = json(&[
        "analyze", "--table", SUZ, "--order", "22", "--profile", "builtin:paper-suz", "--format", "json",
    ]);
    let o = &doc["orders"][0];
    assert_eq!(o["k"], 22);
    assert_eq!(o["verdict"], "Excluded");
    assert_eq!(o["cases"], 8);
}

#[test]
fn order_three_rows() {
    let doc = json(&["analyze", "--table", "suz", "--order", "3", "--format", "json"]);
    assert_eq!(doc["orders"][0]["solutions"].as_array().unwrap().len(), 104);
    let text = stdout(&run(&["analyze", "--table", "suz", "--order", "2"]));
    assert!(text.contains("(nu_2a, nu_2b) = (4, -3)"), "{text}");
}

#[test]
fn kc_orders() {
    let doc = json(&["analyze", "--table", "suz", "--orders", "kc", "--format", "json"]);
    let got: Vec<(u64, String)> = doc["orders"]
        .as_array()
        .unwrap()
        .iter()
        .map(|o| (o["k"].as_u64().unwrap(), o["verdict"].as_str().unwrap().to_string()))
        .collect();
    let want: Vec<(u64, String)> = [22, 26, 33, 35, 39, 55, 65, 77, 91, 143]
        .iter()
        .map(|&k| (k, "Excluded".to_string()))
        .collect();
    assert_eq!(got, want);
    assert_eq!(doc["kc"]["verdict"], "KC-holds");
    assert_eq!(doc["exceptions"].as_array().unwrap().len(), 19);
}

#[test]
fn csv_rows() {
    let o = run(&["analyze", "--table", "suz", "--order", "2", "--order", "22", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("k,verdict,cases,unbounded,tuple,class,nu"));
    let rows: Vec<&str> = lines.collect();
    // Eight tuples over two classes, plus one row for the excluded order.
    assert_eq!(rows.len(), 17);
    assert_eq!(rows.last(), Some(&"22,Excluded,8,false,,,"));
}

#[test]
fn json_is_stable() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for (path, jobs) in [(&a, "1"), (&b, "1")] {
        let o = run(&[
            "analyze", "--table", "suz", "--order", "26", "--jobs", jobs, "--format", "json", "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0));
        assert!(o.stdout.is_empty());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let parallel = json(&["analyze", "--table", "suz", "--order", "26", "--jobs", "4", "--format", "json"]);
    let serial: Value = serde_json::from_slice(&std::fs::read(&a).unwrap()).unwrap();
    assert_eq!(parallel, serial);
}

#[test]
fn strict_mode() {
    let dir = tempfile::tempdir().unwrap();
    let profile = dir.path().join("thin.json");
    std::fs::write(
        &profile,
        r#"{"orders": {"2": [{"char": "chi2", "table": "ordinary", "ls": [0]}]}, "fallback": "none"}"#,
    )
    .unwrap();
    let p = profile.to_str().unwrap();
    let base = ["analyze", "--table", "suz", "--order", "2", "--profile", p, "--format", "json"];
    let doc = json(&base);
    assert_eq!(doc["orders"][0]["unbounded"], true);
    assert_eq!(doc["orders"][0]["verdict"], "Inconclusive");
    let mut strict = base.to_vec();
    strict.push("--strict");
    assert_eq!(run(&strict).status.code(), Some(3));
    let fine = run(&["analyze", "--table", "suz", "--order", "2", "--strict"]);
    assert_eq!(fine.status.code(), Some(0));
}

#[test]
fn suz_prime_graph() {
    let doc = json(&["prime-graph", "--table", "suz", "--format", "json"]);
    assert_eq!(doc["vertices"], serde_json::json!([2, 3, 5, 7, 11, 13]));
    let non: Vec<Value> = doc["non_edges"].as_array().unwrap().clone();
    let want = serde_json::json!([
        [2, 11], [2, 13], [3, 11], [3, 13], [5, 7], [5, 11], [5, 13], [7, 11], [7, 13], [11, 13]
    ]);
    assert_eq!(Value::Array(non), want);
    assert_eq!(doc["edges"].as_array().unwrap().len(), 5);
}

#[test]
fn prime_graph_with_units() {
    let o = run(&["prime-graph", "--table", "suz", "--with-units"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("KC holds"));
}

#[test]
fn a5_prime_graph() {
    let doc = json(&["prime-graph", "--table", A5, "--format", "json"]);
    assert_eq!(doc["vertices"], serde_json::json!([2, 3, 5]));
    assert!(doc["edges"].as_array().unwrap().is_empty());
}
