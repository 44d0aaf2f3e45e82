//! From commands to platform targets.
//!
//! A [`CommandQuery`] `(limb, origin, direction, size)` is looked up in the
//! databank. Sizes beyond the highest stored one keep the far pose and move the
//! base by the excess, when the platform can locomote. Core-label commands only
//! translate.

mod parse;
mod trajectory;

use std::fmt;
use std::ops::Deref;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::ecl::{join_poses, EclError, EclStore, PartialPose};
use crate::eurdf::{PlatformDescription, DEFAULT_QUANTUM};
use crate::label::Label;
use crate::vsam::{direction_vector, DirectionPull, SizeIndex};

pub use parse::{parse_command, parse_commands, CommandLine, ParseError};
pub use trajectory::{
    execute_line, execute_sequence, interpolate, ExecError, ExecOptions, SequenceState, Trajectory,
    TrajectoryStep, DEFAULT_DURATION, DEFAULT_STEPS,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ResolveError {
    #[error(transparent)]
    Ecl(#[from] EclError),
    #[error("unknown label {0}")]
    UnknownLabel(Label),
    #[error("{0} needs translation but the platform has no locomotion mode")]
    NoLocomotion(String),
    #[error("{0} has no ground-plane component to translate along")]
    GroundProjectionDegenerate(DirectionPull),
    #[error("value {value} for joint `{joint}` is outside [{min}, {max}]")]
    LimitViolation {
        joint: String,
        value: f64,
        min: f64,
        max: f64,
    },
    #[error("compound command asks for more than one base translation")]
    MultipleTranslations,
    #[error("pose has {found} values, expected {expected}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("{0}")]
    InvalidCommand(String),
}

impl ResolveError {
    /// Short variant name, used in wire messages.
    pub fn kind(&self) -> &'static str {
        match self {
            ResolveError::Ecl(e) => match e {
                EclError::NoSuchEntry { .. } => "NoSuchEntry",
                EclError::JointConflict(_) => "JointConflict",
                EclError::SizeOverflow { .. } => "SizeOverflow",
                _ => "StoreError",
            },
            ResolveError::UnknownLabel(_) => "UnknownLabel",
            ResolveError::NoLocomotion(_) => "NoLocomotion",
            ResolveError::GroundProjectionDegenerate(_) => "GroundProjectionDegenerate",
            ResolveError::LimitViolation { .. } => "LimitViolation",
            ResolveError::MultipleTranslations => "MultipleTranslations",
            ResolveError::LengthMismatch { .. } => "LengthMismatch",
            ResolveError::InvalidCommand(_) => "InvalidCommand",
        }
    }
}

/// A full joint configuration in joint-space order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Pose(pub Vec<f64>);

impl Pose {
    pub fn neutral(platform: &PlatformDescription) -> Self {
        Pose(platform.neutral())
    }

    /// Checks length and joint limits.
    pub fn check(&self, platform: &PlatformDescription) -> Result<(), ResolveError> {
        if self.0.len() != platform.m() {
            return Err(ResolveError::LengthMismatch {
                expected: platform.m(),
                found: self.0.len(),
            });
        }
        for (v, dim) in self.0.iter().zip(&platform.joint_space.dims) {
            if !dim.contains(*v) {
                return Err(ResolveError::LimitViolation {
                    joint: platform.tree.joint(dim.joint).name.clone(),
                    value: *v,
                    min: dim.min,
                    max: dim.max,
                });
            }
        }
        Ok(())
    }
}

impl Deref for Pose {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CommandQuery {
    pub limb: Label,
    pub origin: Label,
    pub direction: DirectionPull,
    pub size: SizeIndex,
}

impl fmt::Display for CommandQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} @ {} -> {} * {}",
            self.limb, self.origin, self.direction, self.size
        )
    }
}

/// Base motion: `magnitude` quanta of `quantum` metres along a ground-plane pull.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TranslationDirective {
    pub direction: DirectionPull,
    pub magnitude: u32,
    pub quantum: f64,
}

impl TranslationDirective {
    /// Displacement of the base in the body frame, metres.
    pub fn offset(&self) -> Vector3<f64> {
        let unit = direction_vector(self.direction).expect("translation directions are never place-middle");
        unit * (self.magnitude as f64 * self.quantum)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedTarget {
    pub articulation: PartialPose,
    pub translation: Option<TranslationDirective>,
}

fn require_label(platform: &PlatformDescription, label: &Label) -> Result<(), ResolveError> {
    if platform.labels.contains(label) {
        Ok(())
    } else {
        Err(ResolveError::UnknownLabel(*label))
    }
}

fn translation(
    platform: &PlatformDescription,
    cmd: &CommandQuery,
    magnitude: u32,
    quantum: f64,
) -> Result<TranslationDirective, ResolveError> {
    let locomotion = platform
        .locomotion
        .ok_or_else(|| ResolveError::NoLocomotion(cmd.to_string()))?;
    let direction = cmd
        .direction
        .ground_projected()
        .ok_or(ResolveError::GroundProjectionDegenerate(cmd.direction))?;
    Ok(TranslationDirective {
        direction,
        magnitude,
        quantum: locomotion.quantum.unwrap_or(quantum),
    })
}

/// Maps one command to an articulation and an optional base translation.
pub fn resolve(
    store: &EclStore,
    platform: &PlatformDescription,
    cmd: &CommandQuery,
    current: &Pose,
) -> Result<ResolvedTarget, ResolveError> {
    current.check(platform)?;
    require_label(platform, &cmd.limb)?;
    require_label(platform, &cmd.origin)?;
    if !cmd.limb.is_link_label() {
        return Err(ResolveError::InvalidCommand(format!(
            "{} names a joint, not a body part",
            cmd.limb
        )));
    }

    if cmd.direction.is_place_middle() {
        let support = platform.support(&cmd.limb).expect("label checked above");
        return Ok(ResolvedTarget {
            articulation: PartialPose::restricted(&platform.neutral(), &support),
            translation: None,
        });
    }

    if cmd.limb.is_core() {
        if !cmd.origin.is_core() {
            return Err(ResolveError::InvalidCommand(format!(
                "core commands take a core origin, got {}",
                cmd.origin
            )));
        }
        let t = translation(platform, cmd, cmd.size.get(), DEFAULT_QUANTUM)?;
        if store.k_id(&cmd.origin, &cmd.limb, &t.direction).is_none() {
            return Err(EclError::NoSuchEntry {
                limb: cmd.limb,
                origin: cmd.origin,
                direction: t.direction,
            }
            .into());
        }
        return Ok(ResolvedTarget {
            articulation: PartialPose::empty(platform.m()),
            translation: Some(t),
        });
    }

    let k_id = store
        .k_id(&cmd.origin, &cmd.limb, &cmd.direction)
        .ok_or(EclError::NoSuchEntry {
            limb: cmd.limb,
            origin: cmd.origin,
            direction: cmd.direction,
        })?;
    let kmax = store.kmax(k_id);
    let s = cmd.size.get();
    if s <= kmax {
        let pose = store.query(&cmd.limb, &cmd.origin, &cmd.direction, cmd.size)?;
        return Ok(ResolvedTarget {
            articulation: pose.clone(),
            translation: None,
        });
    }
    let reach = platform.reach_length(&cmd.limb).unwrap_or(DEFAULT_QUANTUM);
    let t = translation(platform, cmd, s - kmax, reach)?;
    let articulation = match SizeIndex::new(kmax) {
        Some(k) => store.query(&cmd.limb, &cmd.origin, &cmd.direction, k)?.clone(),
        None => PartialPose::empty(platform.m()),
    };
    Ok(ResolvedTarget {
        articulation,
        translation: Some(t),
    })
}

/// `current` with the non-null entries of `partial` written over it.
pub fn overlay(
    platform: &PlatformDescription,
    current: &Pose,
    partial: &PartialPose,
) -> Result<Pose, ResolveError> {
    if partial.len() != current.len() {
        return Err(ResolveError::LengthMismatch {
            expected: current.len(),
            found: partial.len(),
        });
    }
    let pose = Pose(
        current
            .iter()
            .zip(&partial.values)
            .map(|(c, p)| p.unwrap_or(*c))
            .collect(),
    );
    pose.check(platform)?;
    Ok(pose)
}

/// Resolves several commands at once: articulations are joined, and at most one
/// distinct translation may result.
pub fn compose(
    store: &EclStore,
    platform: &PlatformDescription,
    cmds: &[CommandQuery],
    current: &Pose,
) -> Result<ResolvedTarget, ResolveError> {
    if cmds.is_empty() {
        return Err(ResolveError::InvalidCommand("empty compound command".into()));
    }
    let mut articulations = Vec::with_capacity(cmds.len());
    let mut translation: Option<TranslationDirective> = None;
    for cmd in cmds {
        let target = resolve(store, platform, cmd, current)?;
        articulations.push(target.articulation);
        match (translation, target.translation) {
            (_, None) => {}
            (None, t) => translation = t,
            (Some(a), Some(b)) if a == b => {}
            (Some(_), Some(_)) => return Err(ResolveError::MultipleTranslations),
        }
    }
    Ok(ResolvedTarget {
        articulation: join_poses(&articulations)?,
        translation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::vsam::{build_vsam, laban26, laban8_middle};

    fn dir(name: &str) -> DirectionPull {
        name.parse().unwrap()
    }

    fn cmd(text: &str) -> CommandQuery {
        parse_command(text).unwrap()
    }

    /// A store with `sizes` poses for `(distal_c1, limb_c1, d)` on every chain and
    /// direction in `dirs`, plus translation rows when the platform locomotes.
    fn store_for(p: &PlatformDescription, dirs: &[&str], sizes: u32) -> EclStore {
        let mut origins = p.labels.j();
        if p.locomotion.is_some() {
            origins.insert(Label::Core(1));
        }
        let spec = build_vsam(p, origins, laban26(), 3).unwrap();
        let mut store = EclStore::new(&p.name, spec);
        let neutral = p.neutral();
        for limb in p.labels.l() {
            let Label::Limb(idx) = limb else { continue };
            if idx.depth != 1 {
                continue;
            }
            let support = p.support(&limb).unwrap();
            for d in dirs {
                let k = store.insert_entry(p, limb.paired().unwrap(), limb, dir(d)).unwrap();
                for s in 1..=sizes {
                    let q: Vec<f64> = neutral
                        .iter()
                        .zip(&p.joint_space.dims)
                        .map(|(n, dim)| (n + 0.05 * s as f64).clamp(dim.min, dim.max))
                        .collect();
                    store.append_pose(p, k, &PartialPose::restricted(&q, &support)).unwrap();
                }
            }
        }
        if p.locomotion.is_some() {
            for d in laban8_middle() {
                store.insert_entry(p, Label::Core(1), Label::Core(1), d).unwrap();
            }
        }
        store
    }

    #[test]
    fn stored_size_resolves_to_stored_pose() {
        let p = fixtures::baxter();
        let store = store_for(&p, &["left-high"], 3);
        let c = cmd("limb_11 @ distal_11 -> left-high * 3");
        let t = resolve(&store, &p, &c, &Pose::neutral(&p)).unwrap();
        assert_eq!(
            &t.articulation,
            store.query(&c.limb, &c.origin, &c.direction, c.size).unwrap()
        );
        assert!(t.translation.is_none());
    }

    #[test]
    fn overflow_translates_on_youbot() {
        let p = fixtures::youbot();
        let store = store_for(&p, &["forward-middle", "forward-high"], 3);
        let c = cmd("limb_11 @ distal_11 -> forward-middle * 5");
        let t = resolve(&store, &p, &c, &Pose::neutral(&p)).unwrap();
        let tr = t.translation.unwrap();
        assert_eq!(tr.direction, dir("forward-middle"));
        assert_eq!(tr.magnitude, 2);
        assert_eq!(tr.quantum, 0.25);
        assert_eq!(tr.offset(), Vector3::new(0.0, 0.5, 0.0));
        let at3 = store
            .query(&c.limb, &c.origin, &c.direction, SizeIndex::new(3).unwrap())
            .unwrap();
        assert_eq!(&t.articulation, at3);

        let high = resolve(&store, &p, &cmd("limb_11 @ distal_11 -> forward-high * 4"), &Pose::neutral(&p)).unwrap();
        assert_eq!(high.translation.unwrap().direction, dir("forward-middle"));
    }

    #[test]
    fn overflow_on_fixed_base_is_no_locomotion() {
        let p = fixtures::baxter();
        let store = store_for(&p, &["left-high"], 3);
        let c = cmd("limb_11 @ distal_11 -> left-high * 4");
        assert!(matches!(
            resolve(&store, &p, &c, &Pose::neutral(&p)),
            Err(ResolveError::NoLocomotion(_))
        ));
    }

    #[test]
    fn core_commands_translate_only() {
        let p = fixtures::youbot();
        let store = store_for(&p, &[], 3);
        let t = resolve(&store, &p, &cmd("c_1 @ c_1 -> forward-middle * 2"), &Pose::neutral(&p)).unwrap();
        assert_eq!(t.articulation.support().len(), 0);
        assert_eq!(t.translation.unwrap().magnitude, 2);
        assert_eq!(
            resolve(&store, &p, &cmd("c_1 @ c_1 -> place-high * 1"), &Pose::neutral(&p)),
            Err(ResolveError::GroundProjectionDegenerate(dir("place-high")))
        );
        let b = fixtures::baxter();
        let bs = store_for(&b, &[], 3);
        assert!(matches!(
            resolve(&bs, &b, &cmd("c_1 @ c_1 -> forward-middle * 1"), &Pose::neutral(&b)),
            Err(ResolveError::NoLocomotion(_))
        ));
    }

    #[test]
    fn place_middle_returns_to_neutral_over_support() {
        let p = fixtures::baxter();
        let store = store_for(&p, &["left-high"], 3);
        let t = resolve(&store, &p, &cmd("limb_12 @ distal_12 -> place-middle * 1"), &Pose::neutral(&p)).unwrap();
        assert_eq!(t.articulation.support(), p.support(&Label::limb(1, 2)).unwrap());
        for i in t.articulation.support() {
            assert_eq!(t.articulation.values[i], Some(p.neutral()[i]));
        }
    }

    #[test]
    fn missing_entries_and_labels() {
        let p = fixtures::baxter();
        let store = store_for(&p, &["left-high"], 3);
        let n = Pose::neutral(&p);
        assert!(matches!(
            resolve(&store, &p, &cmd("limb_11 @ distal_11 -> back-low * 1"), &n),
            Err(ResolveError::Ecl(EclError::NoSuchEntry { .. }))
        ));
        assert_eq!(
            resolve(&store, &p, &cmd("limb_77 @ distal_11 -> left-high * 1"), &n),
            Err(ResolveError::UnknownLabel(Label::limb(7, 7)))
        );
    }

    #[test]
    fn overlay_properties() {
        let p = fixtures::baxter();
        let n = Pose::neutral(&p);
        assert_eq!(overlay(&p, &n, &PartialPose::empty(p.m())).unwrap(), n);
        let q = Pose(p.joint_space.dims.iter().map(|d| d.min).collect());
        assert_eq!(overlay(&p, &n, &PartialPose::full(&q)).unwrap(), q);
        let support = p.support(&Label::limb(1, 1)).unwrap();
        let out = overlay(&p, &n, &PartialPose::restricted(&q, &support)).unwrap();
        for i in 0..p.m() {
            assert_eq!(out[i] != n[i], support.contains(&i) && q[i] != n[i]);
        }
        let mut bad = PartialPose::empty(p.m());
        bad.values[0] = Some(1e3);
        assert!(matches!(overlay(&p, &n, &bad), Err(ResolveError::LimitViolation { .. })));
    }

    #[test]
    fn compose_examples() {
        let p = fixtures::nao();
        let store = store_for(&p, &["left-high", "right-high"], 3);
        let n = Pose::neutral(&p);
        let both = compose(
            &store,
            &p,
            &[
                cmd("limb_11 @ distal_11 -> left-high * 2"),
                cmd("limb_21 @ distal_21 -> right-high * 2"),
            ],
            &n,
        )
        .unwrap();
        let expected: std::collections::BTreeSet<usize> = p
            .support(&Label::limb(1, 1))
            .unwrap()
            .union(&p.support(&Label::limb(2, 1)).unwrap())
            .copied()
            .collect();
        assert_eq!(both.articulation.support(), expected);

        let one = cmd("limb_11 @ distal_11 -> left-high * 2");
        assert_eq!(
            compose(&store, &p, &[one, one], &n).unwrap(),
            resolve(&store, &p, &one, &n).unwrap()
        );

        let a = cmd("limb_11 @ distal_11 -> left-high * 4");
        let b = cmd("limb_21 @ distal_21 -> right-high * 5");
        assert_eq!(compose(&store, &p, &[a, b], &n), Err(ResolveError::MultipleTranslations));
    }
}
