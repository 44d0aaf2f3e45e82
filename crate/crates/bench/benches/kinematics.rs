use criterion::{black_box, criterion_group, criterion_main, BatchSize, Criterion};

use kinesphere::fixtures;
use kinesphere::kinematics::{auto_install, forward_kinematics, limb_endpoint, InstallConfig};
use kinesphere::resolver::{execute_sequence, parse_commands, resolve, ExecOptions, SequenceState};
use kinesphere::vsam::default_vsam;
use kinesphere::{Label, Pose};

fn fk(c: &mut Criterion) {
    let nao = fixtures::nao();
    let q = nao.neutral();
    c.bench_function("forward_kinematics/nao", |b| b.iter(|| forward_kinematics(&nao, black_box(&q)).unwrap()));

    let baxter = fixtures::baxter();
    let q = baxter.neutral();
    let arm = Label::limb(1, 1);
    c.bench_function("limb_endpoint/baxter_limb_11", |b| {
        b.iter(|| limb_endpoint(&baxter, &arm, black_box(&q)).unwrap())
    });
}

fn lookup(c: &mut Criterion) {
    let p = fixtures::youbot();
    let spec = default_vsam(&p, 3).unwrap();
    let (store, _) = auto_install(&p, &spec, &InstallConfig::default()).unwrap();
    let neutral = Pose::neutral(&p);
    let lines = parse_commands("limb_11 @ distal_11 -> left-high * 2").unwrap();
    let far = parse_commands("limb_11 @ distal_11 -> left-high * 6").unwrap();
    c.bench_function("resolve/stored", |b| {
        b.iter(|| resolve(&store, &p, black_box(&lines[0].commands[0]), &neutral).unwrap())
    });
    c.bench_function("resolve/overflow", |b| {
        b.iter(|| resolve(&store, &p, black_box(&far[0].commands[0]), &neutral).unwrap())
    });
    let phrase = parse_commands(
        "limb_11 @ distal_11 -> left-high * 2\nc_1 @ c_1 -> left-middle * 1\nlimb_11 @ distal_11 -> place-middle * 1",
    )
    .unwrap();
    c.bench_function("execute_sequence/youbot_3_lines", |b| {
        b.iter(|| {
            execute_sequence(&store, &p, &phrase, SequenceState::new(neutral.clone()), ExecOptions::default()).unwrap()
        })
    });
}

fn install(c: &mut Criterion) {
    let mut group = c.benchmark_group("auto_install");
    group.sample_size(10);
    for name in ["planar_2dof", "youbot", "baxter"] {
        let p = fixtures::by_name(name).unwrap();
        let spec = default_vsam(&p, 3).unwrap();
        group.bench_function(name, |b| {
            b.iter_batched(
                InstallConfig::default,
                |config| auto_install(&p, &spec, &config).unwrap(),
                BatchSize::SmallInput,
            )
        });
    }
    group.finish();
}

criterion_group!(benches, fk, lookup, install);
criterion_main!(benches);
