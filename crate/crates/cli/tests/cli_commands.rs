use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};
use std::time::Duration;

use coffeescan::report::{check, ReportSet};
use coffeescan_core::detectors::{Detector, Verdict};
use coffeescan_core::forge::FixtureManifest;
use coffeescan_keyval::{MockServer, Registration, SeedFile, ServerConfig};
use serde_json::Value;
use tempfile::TempDir;

const CASE1: &str = include_str!("../../core/tests/fixtures/case1_ble.js");
const SECRET: &str = "AbCdEfGhIjKlMnOpQrStUvWxYz012345";

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_coffeescan"));
    c.env_remove("COFFEESCAN_ENDPOINT");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn coffeescan")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn unpacked(files: &[(&str, &str)]) -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    for (name, body) in files {
        let p = dir.path().join(name);
        fs::create_dir_all(p.parent().unwrap()).unwrap();
        fs::write(p, body).unwrap();
    }
    dir
}

fn parse_report(o: &Output) -> ReportSet {
    let doc: Value = serde_json::from_slice(&o.stdout).expect("report is JSON");
    check(&doc).expect("report matches schema")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn clean_package_exits_zero() {
    let dir = unpacked(&[
        ("project.config.json", r#"{"appid":"wx0123456789abcdef"}"#),
        ("app.js", "App({ onLaunch: function () { console.log('hi'); } });\n"),
    ]);
    let o = run(&["scan", s(dir.path())]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let set = parse_report(&o);
    assert_eq!(set.finding_count(), 0);
}

#[test]
fn ble_fixture_exits_one_with_single_finding() {
    let dir = unpacked(&[("pages/ble/ble.js", CASE1)]);
    let o = run(&["scan", s(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
    let set = parse_report(&o);
    let f = &set.reports[0].findings;
    assert_eq!(f.len(), 1);
    assert_eq!(f[0].detector, Detector::BleMisconfig);
}

#[test]
fn unreadable_input_exits_two() {
    let o = run(&["scan", "/nonexistent/definitely-missing.mapkg"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("definitely-missing"));
    assert!(o.stdout.is_empty());
}

#[test]
fn corrupt_package_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.mapkg");
    fs::write(&p, b"not a package at all").unwrap();
    assert_eq!(run(&["scan", s(&p)]).status.code(), Some(2));
}

#[test]
fn unknown_detector_exits_two() {
    let dir = unpacked(&[("app.js", "App({});\n")]);
    let o = run(&["scan", "--detectors", "BleMisconfig,NoSuchThing", s(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn detector_filter_limits_findings() {
    let dir = unpacked(&[("pages/ble/ble.js", CASE1)]);
    let o = run(&["scan", "--detectors", "AppSecretString", s(dir.path())]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(parse_report(&o).finding_count(), 0);
}

fn forge_into(dir: &Path, extra: &[&str]) {
    let mut args = vec!["forge", "--out", s(dir)];
    args.extend_from_slice(extra);
    let o = run(&args);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
}

fn dir_bytes(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            let b = fs::read(&p).unwrap();
            (p.file_name().unwrap().into(), b)
        })
        .collect();
    v.sort();
    v
}

#[test]
fn forge_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let small = ["--seed", "9", "--clean", "5", "--planted", "5"];
    forge_into(a.path(), &small);
    forge_into(b.path(), &small);
    let (x, y) = (dir_bytes(a.path()), dir_bytes(b.path()));
    assert_eq!(x.len(), 11);
    assert_eq!(x, y);

    let c = tempfile::tempdir().unwrap();
    forge_into(c.path(), &["--seed", "10", "--clean", "5", "--planted", "5"]);
    assert_ne!(x, dir_bytes(c.path()));
}

fn manifest(dir: &Path) -> FixtureManifest {
    serde_json::from_slice(&fs::read(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn forge_plant_counts_are_exact() {
    let d = tempfile::tempdir().unwrap();
    forge_into(d.path(), &["--clean", "2", "--plants", "BleMisconfig:3"]);
    let m = manifest(d.path());
    let plants: Vec<_> = m.packages.iter().flat_map(|p| &p.plants).collect();
    assert_eq!(plants.len(), 3);
    assert!(plants.iter().all(|p| p.detector == Detector::BleMisconfig));
}

#[test]
fn forge_detached_level_is_still_found() {
    let d = tempfile::tempdir().unwrap();
    forge_into(
        d.path(),
        &["--clean", "0", "--plants", "BleMisconfig:2,AppSecretString:2", "--levels", "detached"],
    );
    let m = manifest(d.path());
    let o = run(&["scan", s(d.path())]);
    assert_eq!(o.status.code(), Some(1));
    let set = parse_report(&o);
    assert_eq!(set.finding_count(), m.plant_count());
}

#[test]
fn jobs_do_not_change_findings() {
    let d = tempfile::tempdir().unwrap();
    forge_into(d.path(), &["--seed", "3", "--clean", "10", "--planted", "10"]);
    let one = run(&["scan", "--jobs", "1", s(d.path())]);
    let many = run(&["scan", "--jobs", "8", s(d.path())]);
    assert_eq!(one.status.code(), Some(1));
    let key = |o: &Output| {
        parse_report(o)
            .reports
            .into_iter()
            .map(|r| (r.package, r.findings))
            .collect::<Vec<_>>()
    };
    assert_eq!(key(&one), key(&many));
}

#[test]
fn report_merges_and_renders_consistently() {
    let corpus = tempfile::tempdir().unwrap();
    forge_into(corpus.path(), &["--seed", "5", "--clean", "3", "--planted", "4"]);
    let work = tempfile::tempdir().unwrap();
    let mut pkgs: Vec<_> = fs::read_dir(corpus.path())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "mapkg"))
        .collect();
    pkgs.sort();
    let (left, right) = pkgs.split_at(3);
    let mut files = Vec::new();
    let mut total = 0;
    for (i, half) in [left, right].iter().enumerate() {
        let mut args = vec!["scan".to_string()];
        args.extend(half.iter().map(|p| s(p).to_string()));
        let o = bin().args(&args).output().unwrap();
        total += parse_report(&o).finding_count();
        let f = work.path().join(format!("r{i}.json"));
        fs::write(&f, &o.stdout).unwrap();
        files.push(f);
    }
    let json = run(&["report", "--format", "json", s(&files[0]), s(&files[1])]);
    assert_eq!(json.status.code(), Some(0));
    let merged = parse_report(&json);
    assert_eq!(merged.reports.len(), 7);
    assert_eq!(merged.finding_count(), total);
    assert_eq!(merged.summary.findings.values().sum::<usize>(), total);

    let text = stdout(&run(&["report", s(&files[0]), s(&files[1])]));
    for (d, n) in &merged.summary.findings {
        let line = text.lines().find(|l| l.split_whitespace().next() == Some(d.as_str())).unwrap();
        assert_eq!(line.split_whitespace().nth(1).unwrap().parse::<usize>().unwrap(), *n, "{d}");
    }
}

#[test]
fn empty_report_set_gives_zero_table() {
    let o = run(&["report"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("packages: 0"));
    for d in Detector::ALL {
        let line = text.lines().find(|l| l.starts_with(d.as_str())).unwrap();
        assert_eq!(line.split_whitespace().nth(1), Some("0"));
    }
}

#[test]
fn schema_mismatch_exits_two() {
    let d = tempfile::tempdir().unwrap();
    let bad = d.path().join("bad.json");
    fs::write(&bad, r#"{"version":2,"reports":[],"summary":{}}"#).unwrap();
    let o = run(&["report", s(&bad)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("schema"));

    let garbled = d.path().join("garbled.json");
    fs::write(&garbled, "{ not json").unwrap();
    assert_eq!(run(&["report", s(&garbled)]).status.code(), Some(2));
}

fn lab(json: &str) -> Output {
    let mut child = bin()
        .arg("lab")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(json.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

#[test]
fn lab_examples() {
    for script in [
        r#"{"scenario":"hijack","leak":"mk","defense":"none","expect":"success"}"#,
        r#"{"scenario":"hijack","leak":"mk","defense":"integrity","expect":"blocked"}"#,
        r#"{"scenario":"replay","expect":"blocked"}"#,
    ] {
        let o = lab(script);
        assert_eq!(o.status.code(), Some(0), "{script}: {}", stdout(&o));
        for line in stdout(&o).lines() {
            serde_json::from_str::<Value>(line).expect("each transcript line is JSON");
        }
    }
}

#[test]
fn lab_scenario_file_and_mismatch() {
    let d = tempfile::tempdir().unwrap();
    let f = d.path().join("hijack.json");
    fs::write(&f, r#"{"scenario":"hijack","leak":"none","expect":"success"}"#).unwrap();
    let o = run(&["lab", "--scenario", s(&f)]);
    assert_eq!(o.status.code(), Some(1));
    let last: Value = serde_json::from_str(stdout(&o).lines().last().unwrap()).unwrap();
    assert_eq!(last["outcome"], "blocked");
    assert_eq!(last["detail"]["reason"], "invalid_mk");
}

#[test]
fn lab_unknown_scenario_exits_two() {
    assert_eq!(lab(r#"{"scenario":"teleport"}"#).status.code(), Some(2));
    assert_eq!(lab("not json").status.code(), Some(2));
}

fn seed_file(dir: &Path, regs: &[Registration]) -> PathBuf {
    let p = dir.join("seed.json");
    let seed = SeedFile {
        seed: 1,
        registrations: regs.to_vec(),
        users: vec![],
    };
    fs::write(&p, serde_json::to_string(&seed).unwrap()).unwrap();
    p
}

#[test]
fn serve_banner_and_graceful_interrupt() {
    let d = tempfile::tempdir().unwrap();
    let regs = [
        Registration::new("wx0123456789abcdef", SECRET),
        Registration::new("wx1111222233334444", "0123456789abcdef0123456789abcdef"),
    ];
    let seed = seed_file(d.path(), &regs);
    let mut child = bin()
        .args(["serve", "--addr", "127.0.0.1:0", "--seed", s(&seed)])
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let mut out = BufReader::new(child.stdout.take().unwrap());
    let mut banner = String::new();
    out.read_line(&mut banner).unwrap();
    assert!(banner.contains("listening on http://127.0.0.1:"), "{banner}");
    assert!(banner.contains("(2 registrations)"), "{banner}");
    let addr = banner.split("http://").nth(1).unwrap().split_whitespace().next().unwrap();

    let mut conn = std::net::TcpStream::connect(addr).unwrap();
    let req = format!(
        "GET /cgi-bin/token?grant_type=client_credential&appid=wx0123456789abcdef&secret={SECRET} HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\n\r\n"
    );
    conn.write_all(req.as_bytes()).unwrap();
    let mut resp = String::new();
    conn.read_to_string(&mut resp).unwrap();
    assert!(resp.contains("access_token"), "{resp}");

    unsafe {
        libc::kill(child.id() as libc::pid_t, libc::SIGINT);
    }
    let status = child.wait().unwrap();
    let mut rest = String::new();
    out.read_to_string(&mut rest).unwrap();
    assert_eq!(status.code(), Some(0));
    assert!(rest.contains("drained"), "{rest}");
}

#[test]
fn serve_on_busy_port_exits_two() {
    let held = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = held.local_addr().unwrap().to_string();
    let mut child = bin().args(["serve", "--addr", &addr]).stderr(Stdio::piped()).spawn().unwrap();
    let deadline = std::time::Instant::now() + Duration::from_secs(20);
    let status = loop {
        if let Some(st) = child.try_wait().unwrap() {
            break st;
        }
        if std::time::Instant::now() > deadline {
            child.kill().unwrap();
            panic!("serve did not exit on a busy port");
        }
        std::thread::sleep(Duration::from_millis(50));
    };
    assert_eq!(status.code(), Some(2));
}

#[test]
fn scan_validate_against_mock_endpoint() {
    let decoy = "0123456789abcdef0123456789abcdef";
    let app = "wx0123456789abcdef";
    let rt = tokio::runtime::Runtime::new().unwrap();
    let seed = SeedFile {
        seed: 1,
        registrations: vec![Registration::new(app, "5f0c1d7e9a2b4c6d8e0f1a3b5c7d9e1f")],
        users: vec![],
    };
    let server = rt.block_on(MockServer::start("127.0.0.1:0", ServerConfig::new(seed))).unwrap();
    let secret = "5f0c1d7e9a2b4c6d8e0f1a3b5c7d9e1f";
    let js = format!("var c = {{ appSecret: \"{secret}\", other: \"{decoy}\" }};\nmodule.exports = c;\n");
    let dir = unpacked(&[
        ("project.config.json", &format!(r#"{{"appid":"{app}"}}"#)),
        ("utils/config.js", &js),
    ]);

    let without = run(&["scan", "--validate", s(dir.path())]);
    assert_eq!(without.status.code(), Some(2));

    let o = bin()
        .args(["scan", "--validate", s(dir.path())])
        .env("COFFEESCAN_ENDPOINT", server.url())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
    let set = parse_report(&o);
    let mut seen = Vec::new();
    for f in &set.reports[0].findings {
        if let Some(c) = &f.candidate_secret {
            seen.push((c.clone(), f.verdict.clone()));
        }
    }
    seen.sort_by(|a, b| a.0.cmp(&b.0));
    assert_eq!(seen.len(), 2, "{seen:?}");
    assert!(matches!(seen[0].1, Some(Verdict::Invalid { .. })));
    assert_eq!(seen[0].0, decoy);
    assert_eq!(seen[1].0, secret);
    assert!(matches!(seen[1].1, Some(Verdict::Valid { .. })));
    assert_eq!(set.summary.verdicts.valid, 1);
    assert_eq!(set.summary.verdicts.invalid, 1);
    rt.block_on(server.shutdown()).unwrap();
}
