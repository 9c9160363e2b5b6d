use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::Path;
use std::process::{Child, Command, Output, Stdio};
use std::time::{Duration, Instant};

use mofs_core::report::InterpretationReport;

fn mofs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mofs"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn synth(dir: &Path) -> String {
    let csv = dir.join("credit.csv");
    let csv = csv.to_str().unwrap().to_string();
    assert!(mofs(&["synth", "--rows", "200", "--seed", "5", "--out", &csv]).status.success());
    csv
}

fn run_args<'a>(csv: &'a str, out: &'a str) -> Vec<&'a str> {
    vec![
        "run", "--data", csv, "--target", "credit_risk", "--sensitive", "Sex", "--positive", "good", "--classifier", "nb",
        "--seed", "7", "--samples", "50", "--out", out,
    ]
}

#[test]
fn run_is_deterministic_and_tables_match_report() {
    let dir = tempfile::tempdir().unwrap();
    let csv = synth(dir.path());
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let o = mofs(&run_args(&csv, out.to_str().unwrap()));
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let ra = std::fs::read(a.join("report.json")).unwrap();
    assert_eq!(ra, std::fs::read(b.join("report.json")).unwrap());

    let report: InterpretationReport = serde_json::from_slice(&ra).unwrap();
    assert!(report.solutions.len() <= 22);
    let tables = std::fs::read_to_string(a.join("tables.txt")).unwrap();
    // Every ranked row in the text parses back to the stored values exactly.
    let section = tables.split("Solutions by TOPSIS score").nth(1).unwrap();
    let rows: Vec<Vec<&str>> = section
        .lines()
        .skip(4)
        .take_while(|l| !l.is_empty())
        .map(|l| l.split_whitespace().collect())
        .collect();
    assert_eq!(rows.len(), report.ranking.order.len());
    for (row, &id) in rows.iter().zip(&report.ranking.order) {
        assert_eq!(row[1], format!("soln{id}"));
        let s = report.solution(id).unwrap();
        assert_eq!(row[2].parse::<f64>().unwrap(), s.ps.unwrap());
        for (cell, v) in row[3..].iter().zip(s.objectives.to_array()) {
            assert_eq!(cell.parse::<f64>().unwrap(), v);
        }
    }
    let record: serde_json::Value = serde_json::from_slice(&std::fs::read(a.join("record.json")).unwrap()).unwrap();
    assert_eq!(record["ga"]["max_evaluations"], 968);
}

#[test]
fn bad_inputs_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let csv = synth(dir.path());
    let out = dir.path().join("o");
    let mut args = run_args(&csv, out.to_str().unwrap());
    args[4] = "no_such_column";
    let o = mofs(&args);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no_such_column"));

    assert_eq!(mofs(&["run", "--data", &csv]).status.code(), Some(2));
    assert_eq!(mofs(&["run", "--data", "/nonexistent.csv", "--target", "t", "--sensitive", "s", "--positive", "p"]).status.code(), Some(1));
}

#[test]
fn rank_schemes_from_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.csv");
    std::fs::write(
        &path,
        "id,size,ba,f1,vif,sp,eo\nlean,1,0.5,0.8,0,1,1\nrich,8,0.75,0.84,0.1,0.9,0.8\nmid,3,0.7,0.82,0.02,0.95,0.9\n",
    )
    .unwrap();
    let m = path.to_str().unwrap();
    let equal = mofs(&["rank", "--matrix", m, "--scheme", "equal"]);
    let custom = mofs(&["rank", "--matrix", m, "--scheme", "custom", "--weights", "3,3,3,3,3,3"]);
    assert!(equal.status.success() && custom.status.success());
    let body = |o: &Output| {
        let s = String::from_utf8(o.stdout.clone()).unwrap();
        s.split_once('\n').unwrap().1.to_string()
    };
    assert_eq!(body(&equal), body(&custom));

    let neg = mofs(&["rank", "--matrix", m, "--scheme", "custom", "--weights", "1,1,1,-1,1,1"]);
    assert_eq!(neg.status.code(), Some(2));
    assert_eq!(mofs(&["rank", "--matrix", m, "--weights", "1,1,1,1,1,1"]).status.code(), Some(2));

    let cmp = mofs(&["rank", "--matrix", m, "--compare"]);
    let text = String::from_utf8(cmp.stdout).unwrap();
    assert!(text.contains("Weight sensitivity") && text.contains("entropy"));
}

fn free_port() -> u16 {
    TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port()
}

fn get_health(port: u16) -> Option<String> {
    let mut s = TcpStream::connect(("127.0.0.1", port)).ok()?;
    s.write_all(b"GET /health HTTP/1.1\r\nHost: localhost\r\nConnection: close\r\n\r\n").ok()?;
    let mut buf = String::new();
    s.read_to_string(&mut buf).ok()?;
    Some(buf)
}

fn spawn_server(port: u16, data: &Path) -> Child {
    Command::new(env!("CARGO_BIN_EXE_mofs"))
        .args(["serve", "--port", &port.to_string(), "--data-dir", data.to_str().unwrap()])
        .env("RUST_LOG", "warn")
        .stdout(Stdio::null())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap()
}

#[test]
fn serve_health_port_conflict_and_sigint() {
    let dir = tempfile::tempdir().unwrap();
    let port = free_port();
    let mut server = spawn_server(port, dir.path());
    let start = Instant::now();
    let health = loop {
        if let Some(r) = get_health(port) {
            break r;
        }
        assert!(start.elapsed() < Duration::from_secs(20), "server did not start");
        std::thread::sleep(Duration::from_millis(50));
    };
    assert!(health.starts_with("HTTP/1.1 200"), "{health}");

    let second = spawn_server(port, dir.path()).wait_with_output().unwrap();
    assert_eq!(second.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&second.stderr).contains("already in use"));

    let status = Command::new("kill").args(["-INT", &server.id().to_string()]).status().unwrap();
    assert!(status.success());
    let code = server.wait().unwrap();
    assert!(code.success(), "{code:?}");
    let tmp = walk(dir.path()).into_iter().filter(|p| p.extension().is_some_and(|e| e == "tmp")).count();
    assert_eq!(tmp, 0);
}

fn walk(dir: &Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let p = entry.unwrap().path();
        if p.is_dir() {
            out.extend(walk(&p));
        } else {
            out.push(p);
        }
    }
    out
}
