use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use serde_json::{json, Value};

use kinesphere::ecl::{export_store, import_store};
use kinesphere::eurdf::{derive_labels as derive, parse_eurdf_unchecked, EurdfError};
use kinesphere::kinematics::{auto_install, record_install, InstallConfig, KinematicsError};
use kinesphere::resolver::{
    execute_sequence, parse_command, parse_commands, resolve, ExecOptions, ResolveError, SequenceState,
};
use kinesphere::vsam::default_vsam;
use kinesphere::{parse_eurdf, serialize_eurdf, EclStore, Label, PlatformDescription, Pose};
use kinesphere_teleop::{AppState, Loaded, ServiceConfig};

/// Why a subcommand failed, and the exit code that says so.
pub struct Failure {
    pub code: u8,
    pub message: String,
}

type Outcome = Result<(), Failure>;

fn invalid(message: impl Into<String>) -> Failure {
    Failure {
        code: 1,
        message: message.into(),
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

fn io(message: impl Into<String>) -> Failure {
    Failure {
        code: 3,
        message: message.into(),
    }
}

/// Writes to stdout, ignoring a reader that went away.
fn emit(text: &str) {
    let mut stdout = std::io::stdout().lock();
    let _ = stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush());
}

fn print(value: &Value) {
    emit(&(serde_json::to_string_pretty(value).expect("json values serialize") + "\n"));
}

/// Prints a machine-readable error and fails with code 1.
fn rejected(kind: &str, message: String, line: Option<usize>) -> Failure {
    let mut error = json!({"kind": kind, "message": message});
    if let Some(line) = line {
        error["line"] = json!(line);
    }
    print(&json!({"error": error}));
    let prefix = line.map(|l| format!("line {l}: ")).unwrap_or_default();
    invalid(format!("{prefix}{kind}: {message}"))
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| io(format!("{}: {e}", path.display())))
}

fn write(path: &Path, bytes: &[u8]) -> Outcome {
    fs::write(path, bytes).map_err(|e| io(format!("{}: {e}", path.display())))
}

fn load_platform(path: &Path) -> Result<PlatformDescription, Failure> {
    parse_eurdf(&read(path)?).map_err(|e| match e {
        EurdfError::Labeling(_) => invalid(format!("{}: {e}", path.display())),
        _ => io(format!("{}: {e}", path.display())),
    })
}

fn load_store(path: &Path, platform: &PlatformDescription) -> Result<EclStore, Failure> {
    let bytes = fs::read(path).map_err(|e| io(format!("{}: {e}", path.display())))?;
    let store = import_store(&bytes).map_err(|e| io(format!("{}: {e}", path.display())))?;
    store
        .check_against(platform)
        .map_err(|e| invalid(format!("{} does not fit {}: {e}", path.display(), platform.name)))?;
    Ok(store)
}

pub fn validate(path: &Path) -> Outcome {
    let platform = match parse_eurdf_unchecked(&read(path)?) {
        Ok(p) => p,
        Err(EurdfError::MalformedXml(e)) => return Err(io(format!("{}: malformed XML: {e}", path.display()))),
        Err(e) => {
            print(&json!({"valid": false, "violations": [], "error": {"kind": "SchemaViolation", "message": e.to_string()}}));
            return Err(invalid(e.to_string()));
        }
    };
    let report = platform.validate();
    print(&json!({
        "platform": platform.name,
        "m": platform.m(),
        "valid": report.is_empty(),
        "violations": report.violations,
    }));
    if report.is_empty() {
        Ok(())
    } else {
        Err(invalid(format!("{} violation(s): {report}", report.violations.len())))
    }
}

pub fn derive_labels(path: &Path, out: Option<&Path>) -> Outcome {
    let declared = parse_eurdf_unchecked(&read(path)?).map_err(|e| io(format!("{}: {e}", path.display())))?;
    let tree = &declared.tree;
    let labels = derive(tree, &declared.labels.core_links()).map_err(|e| invalid(e.to_string()))?;
    let link_names = |set: &std::collections::BTreeSet<kinesphere::eurdf::LinkId>| -> Vec<String> {
        set.iter().map(|l| tree.link(*l).name.clone()).collect()
    };
    let core: BTreeMap<String, Vec<String>> = labels.core.iter().map(|(k, v)| (k.to_string(), link_names(v))).collect();
    let limbs: BTreeMap<String, Vec<String>> = labels.limbs.iter().map(|(k, v)| (k.to_string(), link_names(v))).collect();
    let joints: BTreeMap<String, String> = labels
        .joints
        .iter()
        .map(|(k, j)| (k.to_string(), tree.joint(*j).name.clone()))
        .collect();
    let same = labels == declared.labels;
    let derived = PlatformDescription::new(declared.name.clone(), declared.tree.clone(), labels, declared.locomotion);
    print(&json!({
        "platform": derived.name,
        "m": derived.m(),
        "core": core,
        "limbs": limbs,
        "joints": joints,
        "matches_declared": same,
    }));
    if let Some(out) = out {
        write(out, serialize_eurdf(&derived).as_bytes())?;
    }
    Ok(())
}

pub fn install(path: &Path, out: Option<&Path>, record: Option<&Path>, sizes: u32, seed: u64) -> Outcome {
    let platform = load_platform(path)?;
    let spec = default_vsam(&platform, sizes).map_err(|e| usage(e.to_string()))?;
    let kin = |e: KinematicsError| match e {
        KinematicsError::Format(_) => io(e.to_string()),
        _ => invalid(e.to_string()),
    };
    let (store, summary) = match record {
        Some(file) => {
            let bytes = fs::read(file).map_err(|e| io(format!("{}: {e}", file.display())))?;
            let (store, warnings) = record_install(&platform, &spec, &bytes).map_err(kin)?;
            let mut per_direction: BTreeMap<String, usize> = BTreeMap::new();
            for row in store.vsam_rows() {
                *per_direction.entry(row.direction.to_string()).or_default() += 1;
            }
            let summary = json!({
                "mode": "record",
                "stored": store.entry_count(),
                "skipped": 0,
                "per_direction": per_direction,
                "warnings": warnings,
            });
            (store, summary)
        }
        None => {
            let config = InstallConfig {
                seed,
                ..InstallConfig::default()
            };
            let (store, report) = auto_install(&platform, &spec, &config).map_err(kin)?;
            let per_direction: BTreeMap<String, usize> = report
                .per_direction()
                .into_iter()
                .map(|(d, n)| (d.to_string(), n))
                .collect();
            let summary = json!({
                "mode": "auto",
                "seed": seed,
                "stored": report.stored(),
                "skipped": report.skipped(),
                "per_direction": per_direction,
                "skipped_origins": report.skipped_origins,
                "pairs": report.pairs,
            });
            (store, summary)
        }
    };
    let out = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from(format!("{}.ecl.json", platform.name)));
    write(&out, &export_store(&store))?;
    let mut summary = summary;
    summary["platform"] = json!(platform.name);
    summary["out"] = json!(out.display().to_string());
    summary["s_max"] = json!(sizes);
    summary["entries"] = json!(store.entry_count());
    summary["poses"] = json!(store.pose_count());
    print(&summary);
    Ok(())
}

fn resolve_failure(e: &ResolveError, line: Option<usize>) -> Failure {
    rejected(e.kind(), e.to_string(), line)
}

pub fn query(eurdf: &Path, ecl: &Path, text: &str) -> Outcome {
    let platform = load_platform(eurdf)?;
    let store = load_store(ecl, &platform)?;
    let cmd = parse_command(text).map_err(|e| rejected(e.kind(), e.to_string(), None))?;
    let target = resolve(&store, &platform, &cmd, &Pose::neutral(&platform)).map_err(|e| resolve_failure(&e, None))?;
    let mut out = json!({
        "command": cmd.to_string(),
        "pose": target.articulation,
    });
    if let Some(t) = target.translation {
        let offset = t.offset();
        out["translate"] = json!({
            "direction": t.direction,
            "x": t.magnitude,
            "quantum": t.quantum,
            "offset": [offset.x, offset.y, offset.z],
        });
    }
    print(&out);
    Ok(())
}

#[derive(Deserialize)]
#[serde(untagged)]
enum StartFile {
    Pose(Pose),
    State(SequenceState),
}

fn start_state(platform: &PlatformDescription, start: &str) -> Result<SequenceState, Failure> {
    if start == "neutral" {
        return Ok(SequenceState::new(Pose::neutral(platform)));
    }
    let text = read(Path::new(start))?;
    let state = match serde_json::from_str(&text).map_err(|e| io(format!("{start}: {e}")))? {
        StartFile::Pose(pose) => SequenceState::new(pose),
        StartFile::State(state) => state,
    };
    state
        .pose
        .check(platform)
        .map_err(|e| invalid(format!("start pose: {e}")))?;
    Ok(state)
}

#[allow(clippy::too_many_arguments)]
pub fn exec(
    eurdf: &Path,
    ecl: &Path,
    commands: &Path,
    start: &str,
    steps: usize,
    duration: f64,
    out: Option<&Path>,
) -> Outcome {
    let platform = load_platform(eurdf)?;
    let store = load_store(ecl, &platform)?;
    let lines = parse_commands(&read(commands)?).map_err(|e| rejected(e.kind(), e.to_string(), Some(e.line())))?;
    let state = start_state(&platform, start)?;
    let options = ExecOptions { steps, duration };
    if steps < 2 || !(duration > 0.0) {
        return Err(usage("--steps must be at least 2 and --duration positive"));
    }
    let traj = execute_sequence(&store, &platform, &lines, state, options)
        .map_err(|e| resolve_failure(&e.error, Some(e.line)))?;
    let text = serde_json::to_string(&traj).expect("trajectories serialize");
    match out {
        None => emit(&(text + "\n")),
        Some(path) => {
            write(path, text.as_bytes())?;
            let last = traj.last().expect("trajectories are never empty");
            print(&json!({
                "out": path.display().to_string(),
                "lines": lines.len(),
                "steps": traj.steps.len(),
                "duration": traj.duration(),
                "final": {"pose": last.q, "base": last.base},
            }));
        }
    }
    Ok(())
}

pub fn export(eurdf: &Path, ecl: &Path, out: Option<&Path>) -> Outcome {
    let platform = load_platform(eurdf)?;
    let store = load_store(ecl, &platform)?;
    let bytes = export_store(&store);
    match out {
        Some(path) => write(path, &bytes),
        None => {
            emit(&String::from_utf8(bytes).expect("store files are UTF-8"));
            Ok(())
        }
    }
}

pub fn import(eurdf: &Path, ecl: &Path, out: Option<&Path>) -> Outcome {
    let platform = load_platform(eurdf)?;
    let store = load_store(ecl, &platform)?;
    let kmax: Vec<Value> = store
        .vsam_rows()
        .map(|r| {
            json!({
                "origin": r.origin,
                "limb": r.limb,
                "direction": r.direction,
                "kmax": store.kmax(r.k_id),
            })
        })
        .collect();
    if let Some(path) = out {
        write(path, &export_store(&store))?;
    }
    print(&json!({
        "platform": store.platform_name,
        "s_max": store.spec.s_max,
        "origins": store.spec.origins.iter().map(Label::to_string).collect::<Vec<_>>(),
        "entries": store.entry_count(),
        "poses": store.pose_count(),
        "kmax": kmax,
    }));
    Ok(())
}

pub fn serve(load: &[PathBuf], addr: &str, tick_hz: f64, steps: usize, duration: f64) -> Outcome {
    if !(tick_hz > 0.0) || steps < 2 || !(duration > 0.0) {
        return Err(usage("--tick-hz and --duration must be positive, --steps at least 2"));
    }
    let mut loaded = Vec::new();
    for pair in load.chunks(2) {
        let platform = load_platform(&pair[0])?;
        let store = load_store(&pair[1], &platform)?;
        loaded.push(Loaded { platform, store });
    }
    let config = ServiceConfig {
        tick_hz,
        exec: ExecOptions { steps, duration },
        ..ServiceConfig::default()
    };
    let state = AppState::new(loaded, config).map_err(|e| invalid(e.to_string()))?;
    let runtime = tokio::runtime::Runtime::new().map_err(|e| io(e.to_string()))?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .map_err(|e| io(format!("{addr}: {e}")))?;
        let local = listener.local_addr().map_err(|e| io(e.to_string()))?;
        print(&json!({"listening": local.to_string(), "platforms": state.catalog().platforms.iter().map(|p| &p.name).collect::<Vec<_>>()}));
        log::warn!("serving on http://{local}");
        kinesphere_teleop::serve(listener, state).await.map_err(|e| io(e.to_string()))
    })
}
