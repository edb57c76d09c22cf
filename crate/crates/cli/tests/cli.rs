use std::process::{Command, Output};

use serde_json::Value;

fn motint(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_motint")).args(args).output().expect("spawn")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{}: {}", e, String::from_utf8_lossy(&out.stdout)))
}

fn corpus(file: &str) -> String {
    format!("{}/../../corpus/{}", env!("CARGO_MANIFEST_DIR"), file)
}

#[test]
fn integrate_shell_character() {
    let out = motint(&["integrate", "--bind", "x", "vf x; [ord(x) >= 1] * E(x)"]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["status"], "Integrable");
    assert_eq!(v["value"], "L^-1");
    assert_eq!(v["schema_version"], 1);
}

#[test]
fn specialize_constant() {
    let v = json(&motint(&["specialize", "--q", "5", "(-1)*L^(-1)"]));
    assert_eq!(v["value"], "-1/5");
}

#[test]
fn fourier_of_ball() {
    let v = json(&motint(&["fourier", "--vars", "x", "--dim", "1", "vf x; [ord(x) >= 2]"]));
    let want = json(&motint(&["parse", "vf x; L^-2 * [ord(x) >= -1]"]));
    assert_eq!(v["value"], want["value"]);
}

#[test]
fn exit_codes() {
    assert_eq!(motint(&["parse", "vf x; [ord(x) >="]).status.code(), Some(1));
    assert_eq!(motint(&["integrate", "--bind", "x", "vf x; [ord(x^2 + 1) >= 0]"]).status.code(), Some(2));
    assert_eq!(motint(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(motint(&["fourier", "--vars", "x,y", "--dim", "3", "vf x, y; 1"]).status.code(), Some(1));
    let err = json(&motint(&["parse", "vf x; [ord(x) >="]));
    assert_eq!(err["error"]["kind"], "usage");
}

#[test]
fn oracle_output_is_byte_identical_across_thread_counts() {
    let args = |n: &'static str| {
        vec!["--threads", n, "oracle", "--p", "5", "--depth", "3", "--box", "x: vmin=-1", "vf x; [ord(x) >= -1] * E(x^2)"]
    };
    let one = motint(&args("1"));
    let four = motint(&args("4"));
    assert!(one.status.success());
    assert_eq!(one.stdout, four.stdout);
    assert_eq!(one.stdout, motint(&args("4")).stdout);
}

#[test]
fn corpus_reports_are_reproducible() {
    let path = corpus("convolution.toml");
    let a = motint(&["corpus", "run", &path]);
    let b = motint(&["--threads", "2", "corpus", "run", &path]);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stdout));
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    assert_eq!(v["failed"], 0);
    assert!(v["passed"].as_u64().unwrap() >= 15);
}

#[test]
fn corpus_root_from_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_motint"))
        .args(["corpus", "run"])
        .env("MOTINT_CORPUS", corpus("residue.toml"))
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(json(&out)["cases"][0]["family"], "residue");
}
