use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qcsp_core::format::{structure_from_json, structure_to_json};
use qcsp_core::generate::generate;
use tempfile::TempDir;

fn qcsp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qcsp")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn gen(dir: &Path, family: &str) -> PathBuf {
    let path = dir.join(format!("{}.json", family.replace(':', "_")));
    let o = qcsp(&["gen", family, "-o", path.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    path
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn k3_square_onto_h2() {
    let dir = TempDir::new().unwrap();
    let (k3, h2) = (gen(dir.path(), "clique:3"), gen(dir.path(), "h2"));
    let o = qcsp(&["contain", s(&k3), s(&h2), "--witness"]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert!(out.starts_with("yes: r=2"), "{out}");
    assert!(out.contains("\"(0,0)\""));

    let o = qcsp(&["contain", s(&k3), s(&h2), "--witness", "--json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["r"], 2);
    assert_eq!(v["witness"].as_object().unwrap().len(), 9);
}

#[test]
fn containment_exit_codes() {
    let dir = TempDir::new().unwrap();
    let (k2, k3) = (gen(dir.path(), "clique:2"), gen(dir.path(), "clique:3"));
    assert_eq!(code(&qcsp(&["contain", s(&k3), s(&k2)])), 1);
    let h2 = gen(dir.path(), "h2");
    assert_eq!(code(&qcsp(&["contain", s(&k3), s(&h2), "--cap", "1"])), 3);
    assert_eq!(code(&qcsp(&["contain", s(&k3), s(&h2), "--bound", "cardinality"])), 0);
    assert_eq!(code(&qcsp(&["contain", s(&k3), s(&h2), "--bound", "sideways"])), 2);
}

#[test]
fn illustration_entailment() {
    let dir = TempDir::new().unwrap();
    let phi = write(dir.path(), "phi.ph", "# premise\nforall x z exists y : E(x,y) & E(y,z)\n");
    let psi = write(
        dir.path(),
        "psi.ph",
        "forall w1 exists w2 forall w3 exists w4\n  forall w5 exists w6 :\n  E(w1,w2) & E(w1,w4) & E(w4,w3) & E(w6,w3)  # conclusion\n",
    );
    let o = qcsp(&["entail", s(&phi), s(&psi)]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).starts_with("yes"));

    let cycle = write(dir.path(), "cycle.ph", "exists a b : E(a,b) & E(b,a)");
    let succ = write(dir.path(), "succ.ph", "forall x exists y : E(x,y)");
    assert_eq!(code(&qcsp(&["entail", s(&succ), s(&cycle)])), 1);

    let o = qcsp(&["entail", s(&phi), s(&psi), "--trace", "--json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["verdict"], "yes");
    assert!(v["trace"]["elements"].as_array().unwrap().contains(&serde_json::json!("c1")));
}

#[test]
fn entailment_caps_exit_three() {
    let dir = TempDir::new().unwrap();
    let phi = write(dir.path(), "phi.ph", "forall x z exists y : E(x,y) & E(y,z)");
    let psi = write(dir.path(), "psi.ph", "forall a b c exists d : E(d,d)");
    assert_eq!(code(&qcsp(&["entail", s(&phi), s(&psi), "--max-terms", "3"])), 3);
}

#[test]
fn size_one_sentence() {
    let dir = TempDir::new().unwrap();
    let two = gen(dir.path(), "edgeless:2");
    let one = gen(dir.path(), "edgeless:1");
    let sent = write(dir.path(), "one.ph", "exists x forall y : x = y");
    let o = qcsp(&["eval", s(&two), s(&sent)]);
    assert_eq!((code(&o), stdout(&o).trim()), (1, "false"));
    assert_eq!(code(&qcsp(&["eval", s(&one), s(&sent)])), 0);
}

#[test]
fn parse_errors_report_positions() {
    let dir = TempDir::new().unwrap();
    let k2 = gen(dir.path(), "clique:2");
    let bad = write(dir.path(), "bad.ph", "forall x\nexists y : E(x,y) & ?");
    let o = qcsp(&["eval", s(&k2), s(&bad)]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("2:"), "{}", String::from_utf8_lossy(&o.stderr));
    let junk = write(dir.path(), "junk.json", "{\"elements\": [\"a\"], \"extra\": 1}");
    assert_eq!(code(&qcsp(&["eval", s(&junk), s(&bad)])), 2);
    assert_eq!(code(&qcsp(&["frobnicate"])), 2);
}

#[test]
fn qcore_report() {
    let dir = TempDir::new().unwrap();
    let erg = gen(dir.path(), "erg");
    let report = dir.path().join("report.json");
    let o = qcsp(&["qcore", s(&erg), "--report", s(&report)]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("not induced"));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["qcore"]["relations"]["R"]["tuples"], serde_json::json!([["1"]]));
    assert_eq!(v["qcore"]["relations"]["G"]["tuples"], serde_json::json!([["1"]]));
    assert_eq!(v["forward"]["verdict"], "yes");
    assert!(!v["minimality"].as_array().unwrap().is_empty());
}

#[test]
fn small_commands() {
    let dir = TempDir::new().unwrap();
    let (k2, k3, p01) = (gen(dir.path(), "clique:2"), gen(dir.path(), "clique:3"), gen(dir.path(), "p01"));
    assert_eq!(code(&qcsp(&["surhom", s(&k3), s(&k2)])), 1);
    assert_eq!(code(&qcsp(&["surhom", s(&k2), s(&k2)])), 0);
    assert_eq!(code(&qcsp(&["majority", s(&k2)])), 0);
    assert_eq!(code(&qcsp(&["majority", s(&k3)])), 1);
    let o = qcsp(&["orbits", s(&k3), "--arity", "2"]);
    assert_eq!(stdout(&o).trim(), "2");
    let o = qcsp(&["product", s(&p01), "--power", "2"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("\"(1,1)\""));
    assert_eq!(code(&qcsp(&["product", s(&p01)])), 2);
    assert_eq!(code(&qcsp(&["gen", "nonsense:3"])), 2);
}

#[test]
fn gen_round_trips_and_runs_repeat() {
    let dir = TempDir::new().unwrap();
    for family in ["clique:3", "path:0110", "a_k_cycle:3", "erg", "linear_order:4"] {
        let p = gen(dir.path(), family);
        let text = fs::read_to_string(&p).unwrap();
        let parsed = structure_from_json(&text).unwrap();
        assert_eq!(parsed, generate(&family.parse().unwrap()).unwrap(), "{family}");
        assert_eq!(structure_to_json(&parsed), text.trim());
    }
    let (k3, h2) = (gen(dir.path(), "clique:3"), gen(dir.path(), "h2"));
    let a = qcsp(&["contain", s(&k3), s(&h2), "--witness", "--json"]);
    let b = qcsp(&["contain", s(&k3), s(&h2), "--witness", "--json"]);
    assert_eq!(a.stdout, b.stdout);
}
