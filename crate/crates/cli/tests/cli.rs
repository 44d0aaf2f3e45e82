use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpStream;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use kinesphere::ecl::import_store;
use kinesphere::fixtures;
use kinesphere::resolver::{parse_command, resolve};
use kinesphere::vsam::SizeIndex;
use kinesphere::{Label, Pose};
use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/fixtures")
        .join(format!("{name}.eurdf"))
}

fn run(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kinesphere"))
        .args(args)
        .current_dir(cwd)
        .output()
        .unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Installs `name` into `dir` and returns the databank path.
fn installed(name: &str, dir: &Path) -> PathBuf {
    let ecl = dir.join(format!("{name}.ecl.json"));
    let out = run(&["install", s(&fixture(name)), s(&ecl), "--auto", "--sizes", "3"], dir);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    ecl
}

#[test]
fn validate_reports_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ok = run(&["validate", s(&fixture("fig3_example"))], dir.path());
    assert_eq!(code(&ok), 0);
    assert_eq!(json(&ok)["valid"], true);

    let text = std::fs::read_to_string(fixture("fig3_example")).unwrap();
    let broken = dir.path().join("broken.eurdf");
    std::fs::write(&broken, text.replace("limb_21 limb_22 limb_23", "limb_21 limb_23")).unwrap();
    let bad = run(&["validate", s(&broken)], dir.path());
    assert_eq!(code(&bad), 1);
    let codes: Vec<String> = json(&bad)["violations"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v["code"].as_str().unwrap().to_string())
        .collect();
    assert!(codes.contains(&"NESTING_VIOLATION".to_string()), "{codes:?}");

    assert_eq!(code(&run(&["validate", "missing.eurdf"], dir.path())), 3);
    let garbage = dir.path().join("garbage.eurdf");
    std::fs::write(&garbage, "<robot").unwrap();
    assert_eq!(code(&run(&["validate", s(&garbage)], dir.path())), 3);
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(&["frobnicate"], dir.path())), 2);
    assert_eq!(code(&run(&["install", s(&fixture("youbot"))], dir.path())), 2);
    assert_eq!(code(&run(&["install", s(&fixture("youbot")), "--auto", "--sizes", "0"], dir.path())), 2);
    assert_eq!(code(&run(&["validate", "x", "--format", "yaml"], dir.path())), 2);
}

#[test]
fn derive_labels_reproduces_and_rewrites() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["derive-labels", s(&fixture("fig3_example"))], dir.path());
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["matches_declared"], true);
    let keys = |k: &str| -> Vec<String> { v[k].as_object().unwrap().keys().cloned().collect() };
    assert_eq!(keys("core"), ["c_1", "c_2"]);
    assert_eq!(keys("limbs"), ["limb_11", "limb_21", "limb_22", "limb_23"]);
    assert_eq!(keys("joints"), ["distal_1", "distal_11", "distal_21", "distal_22", "distal_23"]);

    // Strip everything but the core labels and derive them back.
    let mut text = std::fs::read_to_string(fixture("fig3_example")).unwrap();
    for label in [
        "limb_21 limb_22 limb_23",
        "limb_21 limb_22",
        "limb_21",
        "limb_11",
        "distal_11",
        "distal_21",
        "distal_22",
        "distal_23",
    ] {
        text = text.replace(&format!("<body_part>{label}</body_part>"), "<body_part/>");
    }
    let bare = dir.path().join("bare.eurdf");
    std::fs::write(&bare, text).unwrap();
    assert_eq!(code(&run(&["validate", s(&bare)], dir.path())), 1);
    let relabeled = dir.path().join("relabeled.eurdf");
    let out = run(&["derive-labels", s(&bare), "--out", s(&relabeled)], dir.path());
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["matches_declared"], false);
    assert_eq!(code(&run(&["validate", s(&relabeled)], dir.path())), 0);
    let back = kinesphere::parse_eurdf(&std::fs::read_to_string(&relabeled).unwrap()).unwrap();
    assert_eq!(back.labels, fixtures::fig3().labels);
}

#[test]
fn install_is_deterministic_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for out in [&a, &b] {
        let r = run(&["install", s(&fixture("fig3_example")), s(out), "--auto", "--seed", "5"], dir.path());
        assert_eq!(code(&r), 0);
        let summary = json(&r);
        assert_eq!(summary["seed"], 5);
        assert!(summary["stored"].as_u64().unwrap() > 0);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn baxter_install_stores_three_sizes() {
    let dir = tempfile::tempdir().unwrap();
    let ecl = installed("baxter", dir.path());
    let store = import_store(&std::fs::read(&ecl).unwrap()).unwrap();
    assert_eq!(store.spec.s_max, 3);
    let k = store
        .k_id(&Label::distal(1, 1), &Label::limb(1, 1), &"left-high".parse().unwrap())
        .unwrap();
    assert_eq!(store.kmax(k), 3);
}

#[test]
fn khepera_gets_translation_rows_only() {
    let dir = tempfile::tempdir().unwrap();
    let r = run(&["install", s(&fixture("khepera")), "--auto"], dir.path());
    assert_eq!(code(&r), 0);
    let ecl = dir.path().join("khepera.ecl.json");
    let store = import_store(&std::fs::read(ecl).unwrap()).unwrap();
    assert_eq!(store.entry_count(), 8);
    assert_eq!(store.pose_count(), 0);
    assert!(store.vsam_rows().all(|r| r.limb == Label::Core(1) && r.origin == Label::Core(1)));
}

#[test]
fn record_install_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let poses = dir.path().join("poses.json");
    std::fs::write(
        &poses,
        r#"[{"origin": "distal_11", "limb": "limb_11", "direction": "left-middle",
             "poses": [[0.1, null], [0.2, 0.0], [0.3, null]]}]"#,
    )
    .unwrap();
    let ecl = dir.path().join("p.json");
    let r = run(&["install", s(&fixture("planar_1dof")), s(&ecl), "--record", s(&poses)], dir.path());
    assert_eq!(code(&r), 1, "pose rows longer than the platform are rejected");
    std::fs::write(
        &poses,
        r#"[{"origin": "distal_11", "limb": "limb_11", "direction": "left-middle", "poses": [[0.1], [0.2], [0.3]]}]"#,
    )
    .unwrap();
    let r = run(&["install", s(&fixture("planar_1dof")), s(&ecl), "--record", s(&poses)], dir.path());
    assert_eq!(code(&r), 0);
    assert_eq!(json(&r)["poses"], 3);
    let q = run(&["query", s(&fixture("planar_1dof")), s(&ecl), "limb_11 @ distal_11 -> left-middle * 2"], dir.path());
    assert_eq!(json(&q)["pose"], serde_json::json!([0.2]));
    std::fs::write(&poses, "not json").unwrap();
    assert_eq!(code(&run(&["install", s(&fixture("planar_1dof")), s(&ecl), "--record", s(&poses)], dir.path())), 3);
}

#[test]
fn query_stored_and_overflow() {
    let dir = tempfile::tempdir().unwrap();
    let youbot = installed("youbot", dir.path());
    let y = fixture("youbot");
    let r = run(&["query", s(&y), s(&youbot), "limb_11 @ distal_11 -> left-middle * 2"], dir.path());
    assert_eq!(code(&r), 0);
    let v = json(&r);
    assert!(v.get("translate").is_none());

    let store = import_store(&std::fs::read(&youbot).unwrap()).unwrap();
    let platform = fixtures::youbot();
    let cmd = parse_command("limb_11 @ distal_11 -> left-middle * 2").unwrap();
    let want = store.query(&cmd.limb, &cmd.origin, &cmd.direction, SizeIndex::new(2).unwrap()).unwrap();
    assert_eq!(v["pose"], serde_json::to_value(want).unwrap());

    let k = store.k_id(&cmd.origin, &cmd.limb, &cmd.direction).unwrap();
    let kmax = store.kmax(k);
    let size = kmax + 2;
    let text = format!("limb_11 @ distal_11 -> left-middle * {size}");
    let r = run(&["query", s(&y), s(&youbot), &text], dir.path());
    assert_eq!(code(&r), 0);
    let v = json(&r);
    assert_eq!(v["translate"]["x"], 2);
    assert_eq!(v["translate"]["direction"], "left-middle");
    let target = resolve(&store, &platform, &parse_command(&text).unwrap(), &Pose::neutral(&platform)).unwrap();
    assert_eq!(v["pose"], serde_json::to_value(&target.articulation).unwrap());

    let baxter = installed("baxter", dir.path());
    let r = run(&["query", s(&fixture("baxter")), s(&baxter), "limb_11 @ distal_11 -> left-high * 4"], dir.path());
    assert_eq!(code(&r), 1);
    assert_eq!(json(&r)["error"]["kind"], "NoLocomotion");
    let r = run(&["query", s(&fixture("baxter")), s(&baxter), "limb_11 @ distal_11 -> sideways * 1"], dir.path());
    assert_eq!(code(&r), 1);
    assert_eq!(json(&r)["error"]["kind"], "UnknownDirectionName");
    // Databank of another platform.
    let r = run(&["query", s(&fixture("baxter")), s(&youbot), "limb_11 @ distal_11 -> left-high * 1"], dir.path());
    assert_eq!(code(&r), 1);
}

#[test]
fn exec_chains_and_reports_failures() {
    let dir = tempfile::tempdir().unwrap();
    let ecl = installed("baxter", dir.path());
    let b = fixture("baxter");
    let platform = fixtures::baxter();
    let store = import_store(&std::fs::read(&ecl).unwrap()).unwrap();

    let single = dir.path().join("fig8.txt");
    std::fs::write(&single, "limb_11 @ distal_11 -> left-high * 3\n").unwrap();
    let r = run(&["exec", s(&b), s(&ecl), s(&single)], dir.path());
    assert_eq!(code(&r), 0);
    let traj = json(&r);
    let steps = traj.as_array().unwrap();
    assert_eq!(steps.len(), 50);
    let far = store
        .query(&Label::limb(1, 1), &Label::distal(1, 1), &"left-high".parse().unwrap(), SizeIndex::new(3).unwrap())
        .unwrap();
    let last: Vec<f64> = serde_json::from_value(steps[49]["q"].clone()).unwrap();
    let neutral = platform.neutral();
    for i in 0..platform.m() {
        assert_eq!(last[i], far.values[i].unwrap_or(neutral[i]));
    }
    assert_eq!(steps[0]["q"], serde_json::to_value(&neutral).unwrap());

    let phrase = dir.path().join("phrase.txt");
    std::fs::write(
        &phrase,
        "# four movements\nlimb_11 @ distal_11 -> left-high * 3\nlimb_21 @ distal_21 -> right-low * 2\n\
         limb_11 @ distal_11 -> place-middle * 1\nlimb_12 @ distal_12 -> left-low * 1 & limb_21 @ distal_21 -> right-high * 1\n",
    )
    .unwrap();
    let out = dir.path().join("traj.json");
    let r = run(&["exec", s(&b), s(&ecl), s(&phrase), "--steps", "10", "--duration", "1", "--out", s(&out)], dir.path());
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stdout));
    assert_eq!(json(&r)["lines"], 4);
    let traj: Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    let steps = traj.as_array().unwrap();
    assert_eq!(steps.len(), 1 + 4 * 9);
    for seg in 0..4u64 {
        assert!(steps.iter().any(|s| s["segment"] == seg));
    }
    assert_eq!(steps.last().unwrap()["t"], 4.0);

    let unknown = dir.path().join("unknown.txt");
    std::fs::write(&unknown, "limb_11 @ distal_11 -> left-high * 1\nlimb_41 @ distal_41 -> left-high * 1\n").unwrap();
    let r = run(&["exec", s(&b), s(&ecl), s(&unknown)], dir.path());
    assert_eq!(code(&r), 1);
    let v = json(&r);
    assert_eq!(v["error"]["line"], 2);
    assert!(v["error"]["message"].as_str().unwrap().contains("limb_41"));
    assert!(String::from_utf8_lossy(&r.stderr).contains("line 2"));

    // Start from a pose file, and from a state with a base.
    let start = dir.path().join("start.json");
    let mut q = platform.neutral();
    q[0] = 0.5;
    std::fs::write(&start, serde_json::to_string(&q).unwrap()).unwrap();
    let r = run(&["exec", s(&b), s(&ecl), s(&single), "--start", s(&start)], dir.path());
    assert_eq!(json(&r)[0]["q"][0], 0.5);
    q[0] = 99.0;
    std::fs::write(&start, serde_json::to_string(&q).unwrap()).unwrap();
    assert_eq!(code(&run(&["exec", s(&b), s(&ecl), s(&single), "--start", s(&start)], dir.path())), 1);
    assert_eq!(code(&run(&["exec", s(&b), s(&ecl), s(&single), "--steps", "1"], dir.path())), 2);
}

#[test]
fn export_and_import_are_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    let ecl = installed("youbot", dir.path());
    let y = fixture("youbot");
    let r = run(&["export", s(&y), s(&ecl)], dir.path());
    assert_eq!(code(&r), 0);
    assert_eq!(r.stdout, std::fs::read(&ecl).unwrap());
    let copy = dir.path().join("copy.json");
    let r = run(&["import", s(&y), s(&ecl), "--out", s(&copy)], dir.path());
    assert_eq!(code(&r), 0);
    let v = json(&r);
    assert_eq!(v["platform"], "youbot");
    assert_eq!(v["kmax"].as_array().unwrap().len(), v["entries"].as_u64().unwrap() as usize);
    assert_eq!(std::fs::read(&copy).unwrap(), std::fs::read(&ecl).unwrap());

    let text = std::fs::read_to_string(&ecl).unwrap();
    let tampered = dir.path().join("tampered.json");
    std::fs::write(&tampered, text.replacen("\"p_id\": 2", "\"p_id\": 4", 1)).unwrap();
    assert_eq!(code(&run(&["import", s(&y), s(&tampered)], dir.path())), 3);
}

#[test]
fn serve_answers_over_http() {
    let dir = tempfile::tempdir().unwrap();
    let ecl = installed("youbot", dir.path());
    let mut child = Command::new(env!("CARGO_BIN_EXE_kinesphere"))
        .args(["serve", "--load", s(&fixture("youbot")), s(&ecl), "--addr", "127.0.0.1:0", "-q"])
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let mut reader = BufReader::new(child.stdout.take().unwrap());
    let mut text = String::new();
    let banner: Value = loop {
        reader.read_line(&mut text).unwrap();
        if let Ok(v) = serde_json::from_str(&text) {
            break v;
        }
    };
    let addr = banner["listening"].as_str().unwrap().to_string();
    let mut stream = TcpStream::connect(&addr).unwrap();
    write!(stream, "GET /platforms HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\n\r\n").unwrap();
    let mut response = String::new();
    stream.read_to_string(&mut response).unwrap();
    child.kill().unwrap();
    child.wait().unwrap();
    assert!(response.starts_with("HTTP/1.1 200"), "{response}");
    let body: Value = serde_json::from_str(response.split("\r\n\r\n").nth(1).unwrap()).unwrap();
    assert_eq!(body["platforms"][0]["name"], "youbot");
}
