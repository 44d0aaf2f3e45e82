//! Forward kinematics against oracles that share no code with the crate.

use kinesphere::fixtures;
use kinesphere::kinematics::{forward_kinematics, limb_endpoint};
use kinesphere::{Label, Pose};
use nalgebra::Point3;
use rand::{Rng, SeedableRng};

/// Link tip positions at neutral, from `oracles/home_frames.py`.
const HOME_FRAMES: &str = include_str!("oracles/home_frames.txt");

#[test]
fn neutral_frames_match_matrix_composition() {
    let mut checked = 0;
    for line in HOME_FRAMES.lines() {
        let f: Vec<&str> = line.split_whitespace().collect();
        let p = fixtures::by_name(f[0]).unwrap();
        let expected: Vec<f64> = f[2..5].iter().map(|v| v.parse().unwrap()).collect();
        let link = p.tree.link_by_name(f[1]).unwrap();
        let frames = forward_kinematics(&p, &Pose::neutral(&p)).unwrap();
        let tip = p.tree.link(link).tip.unwrap_or([0.0; 3]);
        let got = frames[link.0] * Point3::from(tip);
        for k in 0..3 {
            assert!((got[k] - expected[k]).abs() < 1e-9, "{} {}: {got} vs {expected:?}", f[0], f[1]);
        }
        checked += 1;
    }
    assert!(checked > 60);
}

#[test]
fn two_link_matches_trigonometry() {
    let p = fixtures::two_link();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let q: [f64; 2] = [rng.gen_range(-3.14159..=3.14159), rng.gen_range(-3.14159..=3.14159)];
        let x = q[0].cos() + (q[0] + q[1]).cos();
        let y = q[0].sin() + (q[0] + q[1]).sin();
        let e = limb_endpoint(&p, &Label::limb(1, 1), &q).unwrap();
        assert!((e.x - x).abs() < 1e-9 && (e.y - y).abs() < 1e-9 && e.z.abs() < 1e-9, "{q:?}");
    }
}
