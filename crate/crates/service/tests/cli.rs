use std::io::{Read, Write};
use std::net::TcpStream;
use std::path::Path;
use std::process::{Command, Output, Stdio};
use std::time::{Duration, Instant};

const BIN: &str = env!("CARGO_BIN_EXE_ontokms");

fn ontokms(data: &Path, args: &[&str]) -> Output {
    Command::new(BIN).arg("--data-dir").arg(data).args(args).env_remove("ONTOKMS_DATA_DIR").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn seed_then_validate() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let seeded = ontokms(&data, &["seed"]);
    assert_eq!(seeded.status.code(), Some(0));
    assert!(data.join("seed.nt").exists());

    let report = ontokms(&data, &["validate"]);
    assert_eq!(report.status.code(), Some(0));
    assert_eq!(stdout(&report), "concepts: 145\nlabels: 290\ncomments: 290\n0 violations\n");

    let again = ontokms(&data, &["seed"]);
    assert_eq!(again.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&again.stderr).contains("refusing to seed"));
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(ontokms(dir.path(), &["frobnicate"]).status.code(), Some(2));
    assert_eq!(ontokms(dir.path(), &["search"]).status.code(), Some(2));
    assert_eq!(ontokms(dir.path(), &["import", "x.nt", "--format", "rdfxml"]).status.code(), Some(2));
    assert_eq!(ontokms(dir.path(), &["serve", "--port", "http"]).status.code(), Some(2));
}

#[test]
fn domain_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.ttl");
    assert_eq!(ontokms(dir.path(), &["import", missing.to_str().unwrap()]).status.code(), Some(1));
    let bad = dir.path().join("bad.ttl");
    std::fs::write(&bad, "<a> <b> .").unwrap();
    let out = ontokms(dir.path(), &["import", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("1:"));
    // An empty store has no roots.
    assert_eq!(ontokms(dir.path(), &["validate"]).status.code(), Some(1));
}

#[test]
fn export_import_round_trip_gives_identical_report() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    ontokms(&a, &["seed"]);
    for name in ["out.nt", "out.ttl"] {
        let file = dir.path().join(name);
        assert_eq!(ontokms(&a, &["export", file.to_str().unwrap()]).status.code(), Some(0));
        let target = b.join(name);
        assert_eq!(ontokms(&target, &["import", file.to_str().unwrap()]).status.code(), Some(0));
        assert_eq!(stdout(&ontokms(&target, &["validate"])), stdout(&ontokms(&a, &["validate"])));
        let again = dir.path().join(format!("again-{name}"));
        ontokms(&target, &["export", again.to_str().unwrap()]);
        assert_eq!(std::fs::read(&file).unwrap(), std::fs::read(&again).unwrap());
    }
    let to_stdout = ontokms(&a, &["export", "-", "--format", "ntriples"]);
    assert_eq!(to_stdout.stdout, std::fs::read(dir.path().join("out.nt")).unwrap());
}

#[test]
fn search_prints_hits_or_suggestions() {
    let dir = tempfile::tempdir().unwrap();
    ontokms(dir.path(), &["seed"]);
    let none = ontokms(dir.path(), &["search", "zzzz"]);
    assert_eq!(none.status.code(), Some(0));
    assert!(stdout(&none).contains("suggestions:"));

    let near = stdout(&ontokms(dir.path(), &["search", "syntetic"]));
    assert!(near.contains("suggestions:\n  syntetic: synthetic (1)"), "{near}");

    let hits = stdout(&ontokms(dir.path(), &["search", "eletroencefalografia", "--lang", "pt", "--k", "2"]));
    assert_eq!(hits.lines().count(), 2, "{hits}");
    assert!(hits.lines().all(|l| l.contains("[pt]")));
}

#[test]
fn query_from_file_and_stdin() {
    let dir = tempfile::tempdir().unwrap();
    ontokms(dir.path(), &["seed"]);
    let text = "SELECT ?c WHERE { ?c <http://www.w3.org/2000/01/rdf-schema#subClassOf> \
                <http://epilepsiae.example.org/onto#SeizureType> }";
    let file = dir.path().join("q.rq");
    std::fs::write(&file, text).unwrap();
    let from_file = ontokms(dir.path(), &["query", file.to_str().unwrap()]);
    let out = stdout(&from_file);
    assert_eq!(out.lines().next(), Some("?c"));
    assert_eq!(out.lines().count(), 6);

    let mut child = Command::new(BIN)
        .arg("--data-dir")
        .arg(dir.path())
        .args(["query", "-"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(text.as_bytes()).unwrap();
    let piped = child.wait_with_output().unwrap();
    assert_eq!(stdout(&piped), out);
}

#[test]
fn ingest_and_changes() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    ontokms(&data, &["seed"]);
    let csv = dir.path().join("notes.csv");
    std::fs::write(&csv, "record_id,table,field,text,patient_ref\nn1,eeg,notes,ictal rhythm,p1\nn2,eeg,notes,\n")
        .unwrap();
    let out = ontokms(&data, &["ingest", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).starts_with("accepted 1, rejected 1\n"));
    assert!(stdout(&ontokms(&data, &["search", "ictal"])).contains("record n1"));

    let changes = stdout(&ontokms(&data, &["changes"]));
    let ops: Vec<String> = changes
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["op"].as_str().unwrap().to_string())
        .collect();
    assert_eq!(ops, ["Import", "Import"]);
    assert_eq!(stdout(&ontokms(&data, &["changes", "--since", "1"])).lines().count(), 1);
}

#[test]
fn environment_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(BIN).arg("seed").env("ONTOKMS_DATA_DIR", dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.path().join("store.nt").exists());
}

#[test]
fn serve_refuses_unwritable_data_dir() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("plain-file");
    std::fs::write(&file, "x").unwrap();
    let out = ontokms(&file, &["serve", "--port", "0"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("plain-file"));
}

#[test]
fn serve_answers_health() {
    let dir = tempfile::tempdir().unwrap();
    let mut child = Command::new(BIN)
        .arg("--data-dir")
        .arg(dir.path())
        .args(["serve", "--port", "0", "--seed"])
        .env("ONTOKMS_LOG", "warn")
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let mut stdout = child.stdout.take().unwrap();
    let mut line = Vec::new();
    let mut byte = [0u8];
    let deadline = Instant::now() + Duration::from_secs(30);
    while Instant::now() < deadline && stdout.read(&mut byte).unwrap_or(0) == 1 && byte[0] != b'\n' {
        line.push(byte[0]);
    }
    let line = String::from_utf8(line).unwrap();
    let addr = line.strip_prefix("listening on http://").unwrap_or_else(|| panic!("unexpected: {line}"));

    let mut stream = TcpStream::connect(addr).unwrap();
    stream.write_all(b"GET /health HTTP/1.1\r\nHost: localhost\r\nConnection: close\r\n\r\n").unwrap();
    let mut response = String::new();
    stream.read_to_string(&mut response).unwrap();
    child.kill().unwrap();
    child.wait().unwrap();
    assert!(response.starts_with("HTTP/1.1 200"), "{response}");
    assert!(response.ends_with(r#"{"data":{"concepts":145,"status":"ok"}}"#), "{response}");
}
