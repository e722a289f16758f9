use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn polycontact(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polycontact")).args(args).output().unwrap()
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn write(dir: &TempDir, name: &str, value: &Value) -> String {
    let path = dir.path().join(name);
    std::fs::write(&path, value.to_string()).unwrap();
    path.to_str().unwrap().to_string()
}

fn degenerate_pair() -> Value {
    json!({
        "q": 4, "p": 2,
        "B": [
            [[0, 1, 0, 0], [-1, 0, 0, 0], [0, 0, 0, 0], [0, 0, 0, 0]],
            [[0, 0, 0, 0], [0, 0, 0, 0], [0, 0, 0, 1], [0, 0, -1, 0]]
        ]
    })
}

fn mixed_pair() -> Value {
    json!({
        "q": 4, "p": 2,
        "B": [
            [[0, 1, 0, 0], [-1, 0, 0, 0], [0, 0, 0, 1], [0, 0, -1, 0]],
            [[0, 0, 1, 0], [0, 0, 0, -2], [-1, 0, 0, 0], [0, 2, 0, 0]]
        ]
    })
}

#[test]
fn mindim_prints_the_module_dimension() {
    let out = polycontact(&["mindim", "3", "--format", "text"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "4");
    let r = report(&polycontact(&["mindim", "8"]));
    assert_eq!(r["command"], "mindim");
    assert_eq!(r["result"]["m"], 16);
    assert_eq!(r["inputs_digest"].as_str().unwrap().len(), 64);
}

#[test]
fn degenerate_pair_is_refuted_with_exit_one() {
    let dir = TempDir::new().unwrap();
    let path = write(&dir, "degenerate_pair.json", &degenerate_pair());
    let out = polycontact(&["certify", &path]);
    assert_eq!(out.status.code(), Some(1));
    let r = report(&out);
    assert_eq!(r["result"]["verdict"], "Refuted");
    assert!(r["result"]["witness"].is_array());
}

#[test]
fn malformed_input_exits_64() {
    assert_eq!(polycontact(&["frobnicate"]).status.code(), Some(64));
    assert_eq!(polycontact(&["mindim"]).status.code(), Some(64));
    assert_eq!(polycontact(&["certify", "/nonexistent/bracket.json"]).status.code(), Some(64));
    let dir = TempDir::new().unwrap();
    let not_skew = write(&dir, "bad.json", &json!({ "q": 2, "p": 1, "B": [[[0, 1], [1, 0]]] }));
    assert_eq!(polycontact(&["certify", &not_skew]).status.code(), Some(64));
    let garbage = dir.path().join("garbage.json");
    std::fs::write(&garbage, "{ not json").unwrap();
    assert_eq!(polycontact(&["htype-test", garbage.to_str().unwrap()]).status.code(), Some(64));
    assert_eq!(polycontact(&["szego-verify", "--q", "3"]).status.code(), Some(64));
    assert_eq!(polycontact(&["--help"]).status.code(), Some(0));
}

#[test]
fn emitted_certificates_recheck() {
    let dir = TempDir::new().unwrap();
    let c31 = dir.path().join("c31.json");
    assert_eq!(polycontact(&["build-htype", "3", "1", "--out", c31.to_str().unwrap()]).status.code(), Some(0));
    let brackets = [
        c31.to_str().unwrap().to_string(),
        write(&dir, "pair.json", &degenerate_pair()),
        write(&dir, "mixed.json", &mixed_pair()),
    ];
    for bracket in &brackets {
        let first = report(&polycontact(&["certify", bracket]));
        let cert = write(&dir, "cert.json", &first["result"]);
        let out = polycontact(&["certify", bracket, "--recheck", &cert]);
        assert_eq!(out.status.code(), Some(0), "{bracket}");
        assert_eq!(report(&out)["result"]["valid"], true);
    }
    // A certificate for one bracket does not validate another.
    let cert = report(&polycontact(&["certify", &brackets[2]]));
    let cert = write(&dir, "mixed_cert.json", &cert["result"]);
    let out = polycontact(&["certify", &brackets[1], "--recheck", &cert]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn payloads_are_deterministic() {
    let dir = TempDir::new().unwrap();
    let mixed = write(&dir, "mixed.json", &mixed_pair());
    let runs: [&[&str]; 3] = [
        &["certify", &mixed],
        &["cayley-verify", "--m", "1", "--samples", "20", "--seed", "7"],
        &["hypersurface", "--shape", "perturbed", "--point", "0.3,-0.2,0.5,0.1,0.7,0.2,-0.4,0.3"],
    ];
    for args in runs {
        let a = report(&polycontact(args));
        let b = report(&polycontact(args));
        let workers = Command::new(env!("CARGO_BIN_EXE_polycontact"))
            .args(args)
            .env("POLYCONTACT_WORKERS", "3")
            .output()
            .unwrap();
        let c = report(&workers);
        for other in [&b, &c] {
            assert_eq!(a["result"], other["result"], "{args:?}");
            assert_eq!(a["inputs_digest"], other["inputs_digest"]);
        }
    }
    assert_ne!(
        report(&polycontact(&["cayley-verify", "--seed", "1"]))["inputs_digest"],
        report(&polycontact(&["cayley-verify", "--seed", "2"]))["inputs_digest"],
    );
}

#[test]
fn worker_variable_is_validated() {
    let out = Command::new(env!("CARGO_BIN_EXE_polycontact"))
        .args(["mindim", "2"])
        .env("POLYCONTACT_WORKERS", "0")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(64));
}

#[test]
fn algebra_commands() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("c31.json");
    let built = report(&polycontact(&["build-htype", "3", "1", "--out", path.to_str().unwrap()]));
    let on_disk: Value = serde_json::from_str(&std::fs::read_to_string(Path::new(&path)).unwrap()).unwrap();
    assert_eq!(built["result"], on_disk);
    let p = path.to_str().unwrap();

    let h = polycontact(&["htype-test", p]);
    assert_eq!(h.status.code(), Some(0));
    assert_eq!(report(&h)["result"]["is_htype"], true);

    let n = polycontact(&["normalize7", p]);
    assert_eq!(n.status.code(), Some(0));
    assert!(report(&n)["result"]["residual"].as_f64().unwrap() <= 1e-8);

    let pair = write(&dir, "pair.json", &degenerate_pair());
    let r = report(&polycontact(&["radical", &pair, "--theta", "1,0"]));
    assert_eq!(r["result"]["dim"], 2);
    assert_eq!(r["result"]["rank"], 2);
    assert_eq!(polycontact(&["htype-test", &pair]).status.code(), Some(1));
    assert_eq!(polycontact(&["normalize7", &pair]).status.code(), Some(64));
}

#[test]
fn geometry_commands() {
    let c = polycontact(&["cayley-verify", "--m", "1", "--samples", "100"]);
    assert_eq!(c.status.code(), Some(0));
    let r = report(&c);
    assert!(r["result"]["max_residual"].as_f64().unwrap() <= 1e-6);
    assert_eq!(r["result"]["samples"], 100);

    let s = polycontact(&["hypersurface", "--shape", "sphere"]);
    assert_eq!(s.status.code(), Some(0));
    assert_eq!(report(&s)["result"]["certificate"]["verdict"], "Certified");

    let e = polycontact(&["hypersurface", "--shape", "ellipsoid", "--lambdas", "1,3", "--point", "0.3,-0.2,0.5,0.1,0.7,0.2,-0.4,0.3"]);
    assert_eq!(e.status.code(), Some(0));
    let wrong = polycontact(&["hypersurface", "--shape", "ellipsoid", "--lambdas", "1,2,3"]);
    assert_eq!(wrong.status.code(), Some(64));
}

#[test]
fn fatness_command() {
    let dir = TempDir::new().unwrap();
    let zero = write(&dir, "zero.json", &json!([[[0.0, 0.0], [0.0, 0.0]]]));
    assert_eq!(polycontact(&["fatness", &zero]).status.code(), Some(1));
    let symplectic = write(&dir, "omega.json", &json!([[[0, 1, 0, 0], [-1, 0, 0, 0], [0, 0, 0, 1], [0, 0, -1, 0]]]));
    let out = polycontact(&["fatness", &symplectic]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["result"]["fat"], true);
}

#[test]
fn szego_verify_q2() {
    let out = polycontact(&["szego-verify", "--q", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert!(r["result"]["sup_error"].as_f64().unwrap() <= 1e-5);
    assert_eq!(r["result"]["lattice"]["half_extent"], 8.0);
    assert!(r["result"]["runtime_ms"].is_u64());
}
