use serde_json::Value;
use std::path::PathBuf;
use std::process::{Command, Output};

fn corpus(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(name).display().to_string()
}

fn qual(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qual")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn json(o: &Output) -> Value {
    serde_json::from_str(&stdout(o)).unwrap_or_else(|e| panic!("{e}: {}", stdout(o)))
}

fn temp_file(tag: &str, text: &str) -> PathBuf {
    let p = std::env::temp_dir().join(format!("qual-cli-{tag}-{}", std::process::id()));
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn check_exit_codes_follow_the_verdict() {
    assert_eq!(code(&qual(&["check", &corpus("password.imp"), "--mode", "f"])), 0);
    let o = qual(&["check", &corpus("conditional_p1q1.imp"), "--mode", "b", "--pre", "[top;2]", "--post", "[top;0]"]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("Invalid at main: x="), "{}", stdout(&o));
    // Every input can afford one unit, so a smaller precondition is valid.
    let o = qual(&["check", &corpus("conditional_p1q1.imp"), "--mode", "b", "--pre", "[top;1]"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert_eq!(code(&qual(&["check", "/nonexistent/file.imp"])), 3);
    assert_eq!(code(&qual(&["check", &corpus("password.imp"), "--post", "[nope > 0; 0]"])), 3);
}

#[test]
fn argument_errors_exit_with_three() {
    assert_eq!(code(&qual(&["frobnicate"])), 3);
    assert_eq!(code(&qual(&["check", &corpus("password.imp"), "--mode", "q"])), 3);
    assert_eq!(code(&qual(&[])), 3);
    assert_eq!(code(&qual(&["--help"])), 0);
    assert_eq!(code(&qual(&["check", "--help"])), 0);
}

#[test]
fn json_reports_carry_the_schema() {
    let o = qual(&["check", &corpus("password.imp"), "--mode", "f", "--report", "json"]);
    let v = json(&o);
    assert_eq!(v["schema"], "qual-report/1");
    assert_eq!(v["exit_code"], 0);
    assert_eq!(v["vcs"].as_array().unwrap().len(), 3);
    let v = json(&qual(&["--json", "check", &corpus("conditional_p1q1.imp")]));
    assert_eq!(v["exit_code"], 1);
    let e = json(&qual(&["--json", "check", "/nonexistent/file.imp"]));
    assert_eq!(e["exit_code"], 3);
}

#[test]
fn run_follows_the_branch_taken() {
    let v = json(&qual(&["run", &corpus("conditional_p1q1.imp"), "x=42", "--resource", "3"]));
    assert_eq!(v["state"]["x"], 0);
    assert_eq!((v["q"].as_i64(), v["l"].as_i64()), (Some(1), Some(1)));
    let v = json(&qual(&["run", &corpus("conditional_p1q1.imp"), "--resource", "-1"]));
    assert_eq!(v["defaulted"], serde_json::json!(["x"]));
    assert_eq!((v["q"].as_i64(), v["l"].as_i64()), (Some(-2), Some(-2)));
    assert_eq!(code(&qual(&["run", &corpus("conditional_p1q1.imp"), "y=1"])), 3);
}

#[test]
fn enumerate_lists_outcomes() {
    let v = json(&qual(&["--json", "enumerate", &corpus("conditional_p1q1.imp"), "x=1"]));
    assert_eq!(v["truncated"], false);
    let outs = v["outcomes"].as_array().unwrap();
    assert_eq!(outs.len(), 1);
    assert_eq!(outs[0]["q"], -1);
}

#[test]
fn vc_prints_conditions_and_transformers() {
    let o = qual(&["vc", &corpus("conditional_p1q1.imp"), "--mode", "b"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!(text.contains("== main") && text.contains("(check-sat)"), "{text}");
    let o = qual(&["vc", &corpus("conditional_p1q1.imp"), "--transformer", "wp", "--assertion", "[x == 0; 0]"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).starts_with("wp: "), "{}", stdout(&o));
}

#[test]
fn kernel_check_accepts_and_rejects() {
    let good = "(B:Seq {}\n  (B:Tick {P: \"5\", C: \"tick(2);\"})\n  (B:Tick {P: \"5 - 2\", C: \"tick(1);\"}))\n";
    let path = temp_file("good", good);
    let p = path.to_str().unwrap();
    let o = qual(&["kernel-check", p]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(stdout(&o).starts_with("accepted"));
    assert_eq!(code(&qual(&["kernel-check", "--method", "bounded", p])), 0);

    let bad = temp_file("bad", &good.replace("5 - 2", "7"));
    assert_eq!(code(&qual(&["kernel-check", bad.to_str().unwrap()])), 1);
    let garbled = temp_file("garbled", "(B:Tick {P: \"5\"");
    assert_eq!(code(&qual(&["kernel-check", garbled.to_str().unwrap()])), 3);
    for f in [path, bad, garbled] {
        let _ = std::fs::remove_file(f);
    }
}

#[test]
fn fuzz_and_corpus_pass() {
    let v = json(&qual(&["--json", "--seed", "3", "fuzz", "--count", "30"]));
    assert_eq!(v["checked"], 30);
    assert_eq!(v["failures"].as_array().unwrap().len(), 0);
    let o = qual(&["corpus", "--dir", &corpus("")]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(stdout(&o).contains("8/8 entries pass"));
}
