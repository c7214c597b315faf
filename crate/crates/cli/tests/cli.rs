use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use trilogic_cli::corpus::model_blocks;

fn corpus(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus").join(name).join("program.lp")
}

fn trilogic(args: &[&str]) -> Output {
    trilogic_env(args, &[])
}

fn trilogic_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_trilogic"));
    cmd.args(args);
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn temp_program(name: &str, text: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("trilogic-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn code(args: &[&str]) -> i32 {
    trilogic(args).status.code().unwrap()
}

#[test]
fn self_loop_win_is_undefined() {
    let p = temp_program("win-loop.lp", "win(X) :- move(X,Y), not win(Y). move(a,a).");
    let o = trilogic(&["run", p.to_str().unwrap(), "--semantics", "wfs", "--query", "win(a)"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "true:\nundefined:\n  win(a)\n");
}

#[test]
fn two_cycle_has_two_models() {
    let p = corpus("win-two-cycle");
    let o = trilogic(&["run", p.to_str().unwrap(), "--semantics", "stable", "--models", "all"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(model_blocks(&stdout(&o)).len(), 2);
}

#[test]
fn exit_codes() {
    let malformed = temp_program("malformed.lp", "p(X :- q.");
    let unsafe_rule = temp_program("unsafe.lp", "p(X) :- not q(X). q(1).");
    let good = corpus("good-zak");
    let positive = corpus("is-positive-demand");
    let ok = corpus("mother");
    let s = |p: &PathBuf| p.to_str().unwrap().to_string();
    assert_eq!(code(&["run", &s(&ok)]), 0);
    assert_eq!(code(&["run", &s(&malformed)]), 2);
    assert_eq!(code(&["run", &s(&unsafe_rule)]), 3);
    assert_eq!(code(&["run", &s(&good)]), 3);
    assert_eq!(code(&["run", &s(&positive), "--semantics", "wfs"]), 3);
    assert_eq!(code(&["run", &s(&positive), "--query", "is_positive(succ(1))", "--no-demand"]), 4);
    assert_eq!(code(&["run", &s(&positive), "--query", "is_positive(succ(1))"]), 0);
    assert_eq!(code(&["run", &s(&ok), "--query", "nope(X)"]), 3);
    assert_eq!(code(&["run", &s(&ok), "--query", "is_mother(X"]), 2);
    assert_eq!(code(&["run", "/definitely/not/here.lp"]), 1);
    assert_eq!(code(&["run", &s(&ok), "--semantics", "classical"]), 1);
    assert_eq!(code(&["run", &s(&ok), "--models", "0"]), 1);
    assert_eq!(code(&["run", &s(&ok), "--models", "2"]), 1);
    assert_eq!(code(&["frobnicate"]), 1);
}

#[test]
fn output_is_deterministic() {
    for (name, sem) in [("andersen", "stratified"), ("queens-6", "stable"), ("win-two-cycle", "wfs")] {
        let p = corpus(name);
        let args = ["run", p.to_str().unwrap(), "--semantics", sem, "--models", "all"];
        let args = if sem == "stable" { &args[..] } else { &args[..4] };
        assert_eq!(trilogic(args).stdout, trilogic(args).stdout, "{name}");
    }
}

fn strings(v: &Value) -> BTreeSet<String> {
    v.as_array().unwrap().iter().map(|s| s.as_str().unwrap().to_string()).collect()
}

#[test]
fn json_and_text_agree() {
    let p = corpus("rbac-core");
    let p = p.to_str().unwrap();
    let q = "check_access(S,read,O)";
    let text = stdout(&trilogic(&["run", p, "--query", q]));
    let json: Value = serde_json::from_str(&stdout(&trilogic(&["run", p, "--query", q, "--format", "json"]))).unwrap();
    assert_eq!(strings(&json["answers"]), text.lines().map(String::from).collect());

    let p = corpus("win-two-cycle");
    let p = p.to_str().unwrap();
    let text = stdout(&trilogic(&["run", p, "--semantics", "stable", "--models", "all"]));
    let json: Value =
        serde_json::from_str(&stdout(&trilogic(&["run", p, "--semantics", "stable", "--models", "all", "--format", "json"])))
            .unwrap();
    let from_json: Vec<BTreeSet<String>> = json["models"].as_array().unwrap().iter().map(strings).collect();
    assert_eq!(from_json, model_blocks(&text));

    let json: Value = serde_json::from_str(&stdout(&trilogic(&["run", p, "--semantics", "wfs", "--format", "json"]))).unwrap();
    assert_eq!(strings(&json["undefined"]), ["win(a)", "win(b)"].map(String::from).into());
}

#[test]
fn flags_from_environment() {
    let p = corpus("win-two-cycle");
    let o = trilogic_env(
        &["run", p.to_str().unwrap()],
        &[("TRILOGIC_SEMANTICS", "stable"), ("TRILOGIC_MODELS", "all"), ("TRILOGIC_FORMAT", "json")],
    );
    let json: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(json["models"].as_array().unwrap().len(), 2);
}

#[test]
fn stats_file_is_flat_json() {
    let stats = std::env::temp_dir().join(format!("trilogic-stats-{}.json", std::process::id()));
    let p = corpus("ancestor-chain");
    let o = trilogic(&["run", p.to_str().unwrap(), "--naive", "--stats", stats.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&stats).unwrap()).unwrap();
    let obj = v.as_object().unwrap();
    for key in ["rule_firings", "join_probes", "tuples_derived", "duplicates_suppressed", "wall_time_ms"] {
        assert!(obj.contains_key(key), "{key}");
    }
    assert!(obj.values().all(|x| !x.is_object()));
}

#[test]
fn corpus_command_passes() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus");
    let o = trilogic(&["corpus", dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).lines().filter(|l| l.starts_with("PASS")).count() >= 19);
}

#[test]
fn broken_fixture_is_reported() {
    let dir = std::env::temp_dir().join(format!("trilogic-corpus-{}", std::process::id()));
    std::fs::create_dir_all(dir.join("empty")).unwrap();
    let o = trilogic(&["corpus", dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL empty"));
}
