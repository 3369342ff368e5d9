mod common;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use common::*;
use kbmc::cli::CliError;

fn scratch(name: &str, text: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("kbmc-cli-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn check_summarizes_the_corpus() {
    let (code, out, _) = kbmc(&["check", &data("watson.kb")]);
    assert_eq!(code, 0);
    assert!(
        out.contains("statement(s)") && out.contains("local-stat"),
        "{out}"
    );
    let (code, out, err) = kbmc(&["check", &data("example1.kb")]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("1 horn") && out.contains("2 inert"), "{out}");
    assert!(err.contains("warning"), "{err}");
}

#[test]
fn syntax_errors_point_at_the_line() {
    let p = scratch(
        "bad.kb",
        "kbmc-kb 1\nsort Event;\npred P(Event);\n@x: stat [P(e)]_e = .\n",
    );
    let (code, _, err) = kbmc(&["check", s(&p)]);
    assert_eq!(code, 1);
    assert!(err.contains(&format!("{}:4:", p.display())), "{err}");
}

#[test]
fn empty_knowledge_base_is_fine() {
    let p = scratch("empty.kb", "kbmc-kb 1\n");
    let (code, out, _) = kbmc(&["check", s(&p)]);
    assert_eq!(code, 0);
    assert!(out.contains("0 statement(s)"), "{out}");
    let m = scratch("one.model", "kbmc-model 1\ndomain Thing: a\n");
    let (code, out, _) = kbmc(&["oracle", s(&p), s(&m)]);
    assert_eq!(code, 0);
    assert!(out.is_empty());
    // every sort needs an individual
    let m = scratch("empty.model", "kbmc-model 1\n");
    let (code, _, err) = kbmc(&["oracle", s(&p), s(&m)]);
    assert_eq!(code, 1);
    assert_eq!(
        err.trim(),
        format!("error: {}: sort `Thing` has no individuals", m.display())
    );
}

#[test]
fn missing_files_are_user_errors() {
    let (code, _, err) = kbmc(&["check", "/nonexistent/x.kb"]);
    assert_eq!(code, 1);
    assert!(err.contains("/nonexistent/x.kb"), "{err}");
    assert_eq!(kbmc(&["frobnicate"]).0, 1);
    assert_eq!(kbmc(&["--help"]).0, 0);
    assert_eq!(kbmc(&["--version"]).0, 0);
}

#[test]
fn construct_then_infer() {
    let net = scratch("holmes.bn", "");
    let (code, _, err) = kbmc(&[
        "construct",
        &data("holmes.kb"),
        &data("e002_watson.req"),
        "-o",
        s(&net),
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(err.contains("uniform"), "{err}");
    let (code, out, err) = kbmc(&["infer", s(&net), &data("e002_watson.req")]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("# P(evidence) = 27/160 ~ 0.168750"), "{out}");
    assert!(
        out.contains("Burglary(E002,MyHouse)=true\t1\t1.000000"),
        "{out}"
    );
}

#[test]
fn report_cites_statistics() {
    let report = scratch("watson.report", "");
    let (code, _, err) = kbmc(&[
        "construct",
        &data("watson.kb"),
        &data("e002_alarm_watson.req"),
        "--report",
        s(&report),
        "-o",
        s(&scratch("watson.bn", "")),
    ]);
    assert_eq!(code, 0, "{err}");
    let text = fs::read_to_string(&report).unwrap();
    assert!(text.contains("@item1") && text.contains("@item3"), "{text}");
}

#[test]
fn strict_turns_warnings_into_failure() {
    let args = [
        "construct",
        &data("holmes.kb"),
        &data("e002_watson.req"),
        "--strict",
    ];
    let (code, out, err) = kbmc(&args);
    assert_eq!(code, 1);
    assert!(out.is_empty());
    assert!(err.contains("--strict"), "{err}");
    let (code, _, _) = kbmc(&[
        "construct",
        &data("holmes_full.kb"),
        &data("e002_interest.req"),
        "--strict",
    ]);
    assert_eq!(code, 0);
}

#[test]
fn construction_failures_exit_one() {
    let (code, _, err) = kbmc(&["construct", &data("conflict.kb"), &data("e1_ann.req")]);
    assert_eq!(code, 1);
    assert!(
        err.contains("@smokers") && err.contains("@athletes"),
        "{err}"
    );
    let (code, _, err) = kbmc(&["construct", &data("cycle.kb"), &data("e003_monitor.req")]);
    assert_eq!(code, 1);
    assert!(err.contains("cycle"), "{err}");
}

#[test]
fn dot_output() {
    let (code, out, _) = kbmc(&[
        "construct",
        &data("monitor.kb"),
        &data("e003_monitor.req"),
        "--format",
        "dot",
    ]);
    assert_eq!(code, 0);
    assert!(out.starts_with("digraph bn {"), "{out}");
    assert!(out.contains(" -> "), "{out}");
}

#[test]
fn output_is_deterministic() {
    let args = [
        "construct",
        &data("holmes_full.kb"),
        &data("e002_interest.req"),
    ];
    let first = kbmc(&args);
    for _ in 0..3 {
        assert_eq!(kbmc(&args), first);
    }
    let net = scratch("det.bn", &first.1);
    let infer = ["infer", s(&net), &data("e002_interest.req")];
    assert_eq!(kbmc(&infer), kbmc(&infer));
}

#[test]
fn impossible_evidence_exits_one() {
    let net = scratch("det.bn", "kbmc-bn 1\nnode A : true false\nrow : 1 0\nend\nnode B : true false\nparents A\nrow true : 1 0\nrow false : 0 1\nend\n");
    let req = scratch("zero.req", "kbmc-req 1\nevent E;\nevidence ~B;\nquery A;\n");
    let (code, _, err) = kbmc(&["infer", s(&net), s(&req)]);
    assert_eq!(code, 1);
    assert!(err.contains("zero"), "{err}");
}

#[test]
fn joint_cap_skips_the_cross_check_only() {
    let net = scratch("capped.bn", "");
    kbmc(&[
        "construct",
        &data("holmes_full.kb"),
        &data("e002_interest.req"),
        "-o",
        s(&net),
    ]);
    let full = kbmc(&["infer", s(&net), &data("e002_interest.req")]);
    let capped = kbmc(&[
        "infer",
        s(&net),
        &data("e002_interest.req"),
        "--joint-cap",
        "1",
    ]);
    assert_eq!(full.0, 0);
    assert_eq!(full, capped);
}

#[test]
fn oracle_on_the_coin_model() {
    let (code, out, _) = kbmc(&["oracle", &data("example1.kb"), &data("coins.model")]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().count(), 3);
    assert!(out.lines().all(|l| l.ends_with("\ttrue")), "{out}");

    // c05 is still balanced, so dropping it from Fair breaks the biconditional
    let text = fs::read_to_string(data("coins.model")).unwrap();
    let mut in_fair = false;
    let flipped: Vec<&str> = text
        .lines()
        .filter(|l| {
            if l.starts_with("pred Fair") {
                in_fair = true;
            } else if *l == "end" {
                in_fair = false;
            }
            !(in_fair && *l == "c05")
        })
        .collect();
    let m = scratch("flipped.model", &flipped.join("\n"));
    let (code, out, err) = kbmc(&["oracle", &data("example1.kb"), s(&m)]);
    assert_eq!(code, 1);
    assert!(out.contains("@ex1_2\tinert\tfalse"), "{out}");
    assert!(out.contains("@ex1_1\thorn\ttrue"), "{out}");
    assert!(err.contains("do not hold"), "{err}");
}

#[test]
fn translate_round_trip_is_byte_stable() {
    let net = scratch("rt.bn", "");
    kbmc(&[
        "construct",
        &data("holmes_full.kb"),
        &data("e002_interest.req"),
        "-o",
        s(&net),
    ]);
    let kb = scratch("rt.kb", "");
    assert_eq!(kbmc(&["translate", s(&net), "-o", s(&kb)]).0, 0);
    // names are sanitized on the way in, so compare the second pass with the first
    let bn1 = scratch("rt1.bn", "");
    assert_eq!(
        kbmc(&["translate", s(&kb), "-o", s(&bn1), "--to", "bn"]).0,
        0
    );
    let kb2 = scratch("rt2.kb", "");
    assert_eq!(kbmc(&["translate", s(&bn1), "-o", s(&kb2)]).0, 0);
    let bn2 = scratch("rt2.bn", "");
    assert_eq!(kbmc(&["translate", s(&kb2), "-o", s(&bn2)]).0, 0);
    assert_eq!(
        fs::read_to_string(&kb2).unwrap(),
        fs::read_to_string(&kb).unwrap()
    );
    assert_eq!(
        fs::read_to_string(&bn2).unwrap(),
        fs::read_to_string(&bn1).unwrap()
    );
    let (a, b) = (
        kbmc::bn::from_text(&fs::read_to_string(&net).unwrap()).unwrap(),
        kbmc::bn::from_text(&fs::read_to_string(&bn1).unwrap()).unwrap(),
    );
    assert_eq!(
        a.nodes().iter().map(|n| &n.cpt).collect::<Vec<_>>(),
        b.nodes().iter().map(|n| &n.cpt).collect::<Vec<_>>()
    );
    let (code, _, err) = kbmc(&["translate", s(&net), "--to", "bn"]);
    assert_eq!(code, 1);
    assert!(err.contains("already"), "{err}");
}

#[test]
fn internal_failures_have_their_own_status() {
    assert_eq!(CliError::Internal("x".into()).exit_code(), 2);
    assert_eq!(CliError::User("x".into()).exit_code(), 1);
    assert_eq!(CliError::Failed.exit_code(), 1);
}

#[test]
fn binary_reports_status_and_respects_color() {
    let bin = env!("CARGO_BIN_EXE_kbmc");
    let ok = Command::new(bin)
        .args(["check", &data("holmes.kb")])
        .env("KBMC_COLOR", "never")
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(0));
    let bad = Command::new(bin)
        .args(["check", "/nonexistent.kb"])
        .env("KBMC_COLOR", "never")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(1));
    assert!(!String::from_utf8_lossy(&bad.stderr).contains('\x1b'));
    let weird = Command::new(bin)
        .args(["check", &data("holmes.kb")])
        .env("KBMC_COLOR", "sometimes")
        .output()
        .unwrap();
    assert_eq!(weird.status.code(), Some(1));
}
