use std::path::PathBuf;
use std::process::{Command, Output};

use condensing::lp_semantics::Program;
use condensing::subst::{enumerate_carrier, CarrierConfig};

fn fixture(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "tests", "fixtures", name].iter().collect();
    p.display().to_string()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_condense")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// `result.<key>` of a kv report, unescaped.
fn kv(o: &Output, key: &str) -> Option<String> {
    let want = format!("result.{key}=");
    stdout(o).lines().find_map(|l| l.strip_prefix(&want).map(|v| v.replace("\\n", "\n").replace("\\\\", "\\")))
}

#[test]
fn verify_exit_codes() {
    let ok = run(&["verify", &fixture("b4_meet.q"), &fixture("diamond.lat")]);
    assert_eq!(ok.status.code(), Some(0), "{}", stdout(&ok));

    let bad = run(&["--format", "kv", "verify", &fixture("b4_union.q")]);
    assert_eq!(bad.status.code(), Some(1));
    let out = stdout(&bad);
    assert!(out.contains("law.3.name=bottom preservation\n"), "{out}");
    assert!(out.contains("law.3.holds=no\nlaw.3.witness=p\n"), "{out}");

    let malformed = run(&["verify", &fixture("malformed.lat")]);
    assert_eq!(malformed.status.code(), Some(2));
    let err = String::from_utf8_lossy(&malformed.stderr);
    assert!(err.contains("line 2, column 8"), "{err}");

    assert_eq!(run(&["verify", "no/such/file.q"]).status.code(), Some(2));
}

#[test]
fn verify_samples_the_substitution_quantale() {
    let o = run(&["--format", "kv", "--seed", "7", "verify", &fixture("carrier.cfg")]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert_eq!(kv(&o, "file.0.members").as_deref(), Some("35"));
    assert!(stdout(&o).contains("law.0.exhaustive=sampled"));
}

#[test]
fn shells() {
    let o = run(&["--format", "kv", "shell", "--domain", "TOP I(X,Y)", "--mode", "weak"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(kv(&o, "fixpoints").as_deref(), Some("4"));
    let listed: Vec<String> = (0..4).map(|i| kv(&o, &format!("fixpoint.{i}")).unwrap()).collect();
    let mut sorted = listed.clone();
    sorted.sort();
    assert_eq!(sorted, ["G(X,Y)", "G(X,Y)+EG", "I(X,Y)", "TOP"]);

    let o =
        run(&["--format", "kv", "shell", "--quantale", &fixture("b4_meet.q"), "--domain", "top", "--mode", "complete"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(kv(&o, "shell").as_deref(), Some("fixpoints: top"));

    let o = run(&["shell", "--domain", "TOP", "--mode", "complete"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--mode weak"));
}

#[test]
fn condense_and_refine() {
    let prog = fixture("either_ground.lp");
    let o = run(&["--format", "kv", "condense", "--program", &prog, "--domain-file", &fixture("pair_sharing.dom")]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(kv(&o, "condensing").as_deref(), Some("no"));
    assert_eq!(kv(&o, "witness.theta").as_deref(), Some("I(X,Y)"));
    assert_eq!(kv(&o, "witness.phi").as_deref(), Some("TOP"));
    assert_eq!(kv(&o, "witness.lhs").as_deref(), Some("I(X,Y)"));
    assert_eq!(kv(&o, "witness.rhs").as_deref(), Some("TOP"));

    let o = run(&["--format", "kv", "condense", "--program", &prog, "--domain", "TOP I(X,Y)", "--refine"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(kv(&o, "refined.condensing").as_deref(), Some("yes"));
    assert_eq!(kv(&o, "refined.at_witness.lhs").as_deref(), Some("G(X,Y)"));
    assert_eq!(kv(&o, "refined.at_witness.rhs").as_deref(), Some("G(X,Y)"));

    let o = run(&["condense", "--program", &prog, "--domain", "TOP"]);
    assert_eq!(o.status.code(), Some(0));

    let o = run(&["condense", "--program", &prog, "--domain", "TOP", "--goal", "q"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["condense", "--program", &fixture("bad_program.lp"), "--domain", "TOP"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn duplicated_context_is_reported() {
    let o = run(&[
        "--format",
        "kv",
        "condense",
        "--program",
        &fixture("twice.lp"),
        "--domain-file",
        &fixture("duplicated_context.dom"),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!stdout(&o).contains("warning."), "{}", stdout(&o));
    assert_eq!(kv(&o, "condensing").as_deref(), Some("no"));
    assert_eq!(kv(&o, "condensing.idempotent_contexts").as_deref(), Some("yes"));
    assert_eq!(kv(&o, "witness.lhs").as_deref(), Some("TOP"));

    let o = run(&[
        "--format",
        "kv",
        "condense",
        "--program",
        &fixture("either_ground.lp"),
        "--domain-file",
        &fixture("duplicated_context.dom"),
    ]);
    assert_eq!(kv(&o, "condensing").as_deref(), Some("yes"));
    assert_eq!(kv(&o, "condensing.idempotent_contexts"), None);
}

#[test]
fn printed_domains_and_programs_read_back() {
    let c = enumerate_carrier(CarrierConfig::default()).unwrap();
    let prog = fixture("either_ground.lp");
    let o = run(&["--format", "kv", "condense", "--program", &prog, "--domain", "TOP I(X,Y)", "--refine"]);
    let printed = kv(&o, "program").unwrap();
    let original = Program::parse(&c, &std::fs::read_to_string(&prog).unwrap()).unwrap();
    assert_eq!(Program::parse(&c, &printed).unwrap(), original);

    for key in ["domain", "refined.domain"] {
        let text = kv(&o, key).unwrap();
        let d = c.parse_domain(&text).unwrap();
        assert!(d.warnings.is_empty(), "{key}: {:?}", d.warnings);
        assert_eq!(d.domain.len(), text.split_whitespace().count() - 1);
    }
}

#[test]
fn eval_and_residual() {
    let prog = fixture("either_ground.lp");
    let o = run(&["--format", "kv", "eval", "--program", &prog, "--input", "TOP", "--domain", "TOP I(X,Y)"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(kv(&o, "result").as_deref(), Some("I(X,Y)"));

    let o = run(&["--format", "kv", "eval", "--program", &prog, "--input", "{X/Y}"]);
    assert_eq!(kv(&o, "result").as_deref(), Some("{X/a, Y/a}"));

    let o = run(&["--format", "kv", "residual", "TOP", "I(X,Y)"]);
    assert_eq!(kv(&o, "residual").as_deref(), Some("G(X,Y)"));
    let o = run(&["--format", "kv", "residual", "--carrier", &fixture("carrier.cfg"), "I(X,Y)", "I(X,Y)"]);
    assert_eq!(kv(&o, "residual").as_deref(), Some("G(X,Y)+EG"));
    let o = run(&["--format", "kv", "residual", "--quantale", &fixture("chain3_luk.q"), "c1", "c0"]);
    assert_eq!(kv(&o, "residual").as_deref(), Some("c1"));

    assert_eq!(run(&["residual", "TOP", "NOPE"]).status.code(), Some(2));
}

#[test]
fn examples() {
    for name in ["4.2", "4.9"] {
        let o = run(&["example", name]);
        assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    }
    let o = run(&["example", "9.9"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown example"));
}

#[test]
fn kv_output_is_reproducible() {
    let args = ["--format", "kv", "--seed", "3", "verify", &fixture("carrier.cfg"), &fixture("b8_meet.q")];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout(&a).starts_with("format=condense-kv/1\n"));

    let other_seed = run(&["--format", "kv", "--seed", "4", "verify", &fixture("carrier.cfg"), &fixture("b8_meet.q")]);
    let digest = |o: &Output| stdout(o).lines().find(|l| l.starts_with("inputs.sha256=")).unwrap().to_string();
    assert_ne!(digest(&a), digest(&other_seed));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(run(&["shell", "--mode", "weak"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
}
