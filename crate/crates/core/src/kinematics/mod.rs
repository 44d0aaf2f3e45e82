//! Forward kinematics, direction verification and automatic databank installation.
//!
//! All positions are in the frame of the root link, which doubles as the body
//! frame of the direction vocabulary (x left, y forward, z high).

mod chain;
mod install;

use nalgebra::{Isometry3, Point3, Translation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::ecl::{EclError, PartialPose};
use crate::eurdf::{JointKind, PlatformDescription};
use crate::label::Label;
use crate::vsam::{direction_vector, DirectionPull};

pub use chain::LimbChain;
pub use install::{
    auto_install, record_install, InstallConfig, InstallReport, PairOutcome, Outcome,
    RecordedEntry,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum KinematicsError {
    #[error("label {0} does not name a limb of this platform")]
    UnknownLabel(Label),
    #[error("pose support does not match {limb}")]
    SupportMismatch { limb: Label },
    #[error("pose has {found} values, expected {expected}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("place-middle has no direction vector")]
    ZeroDirection,
    #[error("no direction moves {0} anywhere: degenerate subtree")]
    InstallFailure(Label),
    #[error("invalid install configuration: {0}")]
    InvalidConfig(String),
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Ecl(#[from] EclError),
}

/// A rigid transform in wire form: row-major rotation and translation in metres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameTransform {
    pub rotation: [[f64; 3]; 3],
    pub translation: [f64; 3],
}

impl From<&Isometry3<f64>> for FrameTransform {
    fn from(iso: &Isometry3<f64>) -> Self {
        let r = iso.rotation.to_rotation_matrix();
        let m = r.matrix();
        Self {
            rotation: std::array::from_fn(|i| std::array::from_fn(|j| m[(i, j)])),
            translation: [iso.translation.x, iso.translation.y, iso.translation.z],
        }
    }
}

/// The motion a joint at value `q` adds on top of its origin transform.
pub(crate) fn joint_motion(kind: JointKind, axis: Vector3<f64>, q: f64) -> Isometry3<f64> {
    match kind {
        JointKind::Revolute => Isometry3::from_parts(
            Translation3::identity(),
            UnitQuaternion::from_scaled_axis(axis * q),
        ),
        JointKind::Prismatic => Isometry3::translation(axis.x * q, axis.y * q, axis.z * q),
        JointKind::Fixed => Isometry3::identity(),
    }
}

fn check_len(platform: &PlatformDescription, q: &[f64]) -> Result<(), KinematicsError> {
    if q.len() != platform.m() {
        return Err(KinematicsError::LengthMismatch {
            expected: platform.m(),
            found: q.len(),
        });
    }
    Ok(())
}

/// Frame of every link, indexed by link id, for joint values `q`.
pub fn forward_kinematics(
    platform: &PlatformDescription,
    q: &[f64],
) -> Result<Vec<Isometry3<f64>>, KinematicsError> {
    check_len(platform, q)?;
    let tree = &platform.tree;
    let mut frames = vec![Isometry3::identity(); tree.links().len()];
    let mut dim = 0;
    // Joints are in preorder, so a parent's frame is final before its children.
    for j in tree.joints() {
        let value = if j.is_actuated() {
            dim += 1;
            q[dim - 1]
        } else {
            0.0
        };
        frames[j.child.0] = frames[j.parent.0] * j.origin.isometry() * joint_motion(j.kind, j.unit_axis(), value);
    }
    Ok(frames)
}

/// Contact point of a limb: the tip of its distal-most link.
pub fn limb_endpoint(
    platform: &PlatformDescription,
    label: &Label,
    q: &[f64],
) -> Result<Vector3<f64>, KinematicsError> {
    let tip = platform
        .limb_tip_link(label)
        .map_err(|_| KinematicsError::UnknownLabel(*label))?;
    let frames = forward_kinematics(platform, q)?;
    let offset = platform.tree.link(tip).tip.unwrap_or([0.0; 3]);
    Ok((frames[tip.0] * Point3::from(offset)).coords)
}

/// How well a stored pose realises a pull: the limb endpoint's motion away from
/// neutral, compared against the pull's unit vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    pub displacement: [f64; 3],
    /// `None` when the endpoint does not move.
    pub cosine: Option<f64>,
    pub magnitude: f64,
}

impl FidelityReport {
    pub(crate) fn new(displacement: Vector3<f64>, unit: &Vector3<f64>) -> Self {
        let magnitude = displacement.norm();
        let cosine = (magnitude > 1e-12).then(|| (displacement.dot(unit) / magnitude).clamp(-1.0, 1.0));
        Self {
            displacement: [displacement.x, displacement.y, displacement.z],
            cosine,
            magnitude,
        }
    }
}

/// Measures `pose` (restricted to limb `l`) against pull `d`. The origin does not
/// enter the measurement; it is accepted so reports can be keyed like entries.
pub fn verify_direction(
    platform: &PlatformDescription,
    neutral: &[f64],
    pose: &PartialPose,
    _origin: &Label,
    limb: &Label,
    direction: &DirectionPull,
) -> Result<FidelityReport, KinematicsError> {
    let unit = direction_vector(*direction).map_err(|_| KinematicsError::ZeroDirection)?;
    check_len(platform, neutral)?;
    let support = platform
        .support(limb)
        .map_err(|_| KinematicsError::UnknownLabel(*limb))?;
    if pose.len() != platform.m() || pose.support() != support {
        return Err(KinematicsError::SupportMismatch { limb: *limb });
    }
    let q: Vec<f64> = neutral
        .iter()
        .zip(&pose.values)
        .map(|(n, v)| v.unwrap_or(*n))
        .collect();
    let moved = limb_endpoint(platform, limb, &q)?;
    let home = limb_endpoint(platform, limb, neutral)?;
    Ok(FidelityReport::new(moved - home, &unit))
}
