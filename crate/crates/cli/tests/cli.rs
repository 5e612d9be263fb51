use std::process::Command;

use serde_json::Value;

fn data(name: &str) -> String {
    format!("{}/../../data/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn run(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_cat1")).args(args).output().expect("binary runs");
    (out.status.code().expect("exit code"), String::from_utf8(out.stdout).expect("utf-8 output"))
}

fn run_json(args: &[&str]) -> (i32, Value) {
    let (code, text) = run(args);
    (code, serde_json::from_str(&text).unwrap_or_else(|e| panic!("bad report {e}: {text}")))
}

fn residual<'a>(report: &'a Value, property: &str) -> &'a Value {
    report["residuals"]
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["property"] == property)
        .unwrap_or_else(|| panic!("no residual {property}"))
}

#[test]
fn core_suite_passes() {
    let (code, r) = run_json(&["verify", "--suite", "core", "--seed", "42", "--cases", "200"]);
    assert_eq!(code, 0, "{r}");
    assert_eq!(r["status"], "pass");
    assert_eq!(r["seed"], 42);
    assert!(r["residuals"].as_array().unwrap().iter().all(|p| p["pass"] == true && p["cases"].as_u64() >= Some(200)));
}

#[test]
fn classify_suite_agrees_with_trace() {
    let (code, r) = run_json(&["verify", "--suite", "classify", "--seed", "7"]);
    assert_eq!(code, 0, "{r}");
    assert_eq!(r["results"][0]["agreements"], "300/300");
    assert_eq!(residual(&r, "exact parabolic instances")["failures"], 0);
}

#[test]
fn schwarzian_suite_distortion() {
    let (code, r) = run_json(&["verify", "--suite", "schwarzian", "--cases", "100"]);
    assert_eq!(code, 0, "{r}");
    let d = residual(&r, "distortion");
    assert_eq!(d["cases"], 100);
    assert!(d["worst"].as_f64().unwrap() <= 1e-6);
}

#[test]
fn project_spider_leg() {
    let (code, r) = run_json(&["project", "--tree", &data("spider4.txt"), "--metric", &data("spider_leg1.txt")]);
    assert_eq!(code, 0, "{r}");
    let res = &r["results"][0];
    assert_eq!(res["gap"], "0/1");
    assert_eq!(res["point"]["ray"], "e1");
    assert_eq!(res["point"]["offset"], "3/2");
}

#[test]
fn classify_parabolic_matrix() {
    let (code, r) = run_json(&["classify", "--matrix", "1", "1", "0", "1", "--model", "halfplane"]);
    assert_eq!(code, 0, "{r}");
    assert_eq!(r["results"][0]["class"], "parabolic");
    assert_eq!(r["results"][0]["fixed"]["halfplane"], "inf");
}

#[test]
fn classify_hyperbolic_with_negative_entries() {
    let (code, r) = run_json(&["classify", "--matrix", "2", "-1", "-1", "1"]);
    assert_eq!(code, 0, "{r}");
    assert_eq!(r["results"][0]["class"], "hyperbolic");
}

#[test]
fn htree_cross_ratio() {
    let (code, r) = run_json(&["crossratio", "--tree", &data("htree2.txt"), "--quad", "a", "c", "b", "d"]);
    assert_eq!(code, 0, "{r}");
    assert_eq!(r["results"][0]["log_cross_ratio"], "-2/1");
}

#[test]
fn reports_are_deterministic() {
    let args = ["verify", "--suite", "disk", "--seed", "11", "--cases", "30"];
    assert_eq!(run(&args), run(&args));
    let (_, r) = run_json(&args);
    assert!(r.get("wall_time_s").is_none());
    let (_, timed) = run_json(&["--timing", "verify", "--suite", "disk", "--cases", "3"]);
    assert!(timed["wall_time_s"].as_f64().is_some());
}

#[test]
fn parse_errors_name_the_line() {
    let dir = std::env::temp_dir().join(format!("cat1-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("bad.txt");
    std::fs::write(&path, "tree v1\nVERTEX u\nEDGE u u 1/1\n").unwrap();
    let (code, r) = run_json(&["crossratio", "--tree", path.to_str().unwrap(), "--quad", "a", "b", "c", "d"]);
    assert_eq!(code, 2);
    assert_eq!(r["status"], "error");
    assert!(r["error"].as_str().unwrap().contains("line 3"), "{r}");
}

#[test]
fn non_moebius_bijection_reports_witness() {
    let (code, r) = run_json(&[
        "extend",
        "--tree",
        &data("htree1.txt"),
        "--target",
        &data("htree2.txt"),
        "--ends",
        "a",
        "b",
        "c",
        "d",
    ]);
    assert_eq!(code, 2);
    assert!(r["error"].as_str().unwrap().contains("witness"), "{r}");
}

#[test]
fn tree_extension_of_leg_swap() {
    let spider = data("spider4.txt");
    let (code, r) = run_json(&["extend", "--tree", &spider, "--target", &spider, "--ends", "e2", "e1", "e3", "e4"]);
    assert_eq!(code, 0, "{r}");
    assert_eq!(residual(&r, "distance defect")["worst"], 0.0);
}

#[test]
fn failure_reproducer_round_trips() {
    let (code, r) = run_json(&["verify", "--suite", "disk", "--seed", "3", "--cases", "40", "--tol", "1e-15"]);
    assert_eq!(code, 1);
    let failing = r["residuals"].as_array().unwrap().iter().find(|p| p["pass"] == false).unwrap();
    let rerun = failing["reproducer"]["rerun"].as_str().unwrap();
    let args: Vec<&str> = rerun.split_whitespace().skip(1).collect();
    let (code, again) = run_json(&args);
    assert_eq!(code, 1);
    assert_eq!(residual(&again, failing["property"].as_str().unwrap())["pass"], false);
}

#[test]
fn schwarzian_query_profile_columns() {
    let (code, r) = run_json(&[
        "schwarzian", "--diffeo", &data("wobble.txt"), "--pair", "0", "3", "--quad", "0", "1.5", "3", "4.5", "--profile", "1",
        "15",
    ]);
    assert_eq!(code, 0, "{r}");
    assert_eq!(r["results"][2]["rows"].as_array().unwrap().len(), 2);
    assert!(residual(&r, "profile limit")["worst"].as_f64().unwrap() <= 1e-4);
}

#[test]
fn bad_usage_is_an_error() {
    let (code, _) = run(&["project"]);
    assert_eq!(code, 2);
    let (code, _) = run(&["verify", "--suite", "nonsense"]);
    assert_eq!(code, 2);
}
