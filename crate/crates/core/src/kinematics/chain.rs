use nalgebra::{Isometry3, Point3, Vector3};

use super::{joint_motion, KinematicsError};
use crate::eurdf::{JointKind, PlatformDescription};
use crate::label::Label;

struct Var {
    kind: JointKind,
    axis: Vector3<f64>,
    /// Constant transform from the previous variable's frame (or the root) to
    /// this joint's frame, before its own motion.
    pre: Isometry3<f64>,
}

/// The path from the root to a limb's endpoint, with every joint outside the
/// limb frozen. Evaluating it only costs one rotation per free joint, which is
/// what the installer's inner loop needs.
pub struct LimbChain {
    vars: Vec<Var>,
    /// Joint-space index of each free joint, in path order.
    pub indices: Vec<usize>,
    tail: Point3<f64>,
}

impl LimbChain {
    /// Freezes joints outside `limb` at their values in `frozen`.
    pub fn new(platform: &PlatformDescription, limb: &Label, frozen: &[f64]) -> Result<Self, KinematicsError> {
        let tip = platform
            .limb_tip_link(limb)
            .map_err(|_| KinematicsError::UnknownLabel(*limb))?;
        let support = platform
            .support(limb)
            .map_err(|_| KinematicsError::UnknownLabel(*limb))?;
        let tree = &platform.tree;
        let mut vars = Vec::new();
        let mut indices = Vec::new();
        let mut acc = Isometry3::identity();
        for jid in tree.path_to(tip) {
            let j = tree.joint(jid);
            let index = platform.joint_space.index_of(jid);
            match index.filter(|i| support.contains(i)) {
                Some(i) => {
                    vars.push(Var {
                        kind: j.kind,
                        axis: j.unit_axis(),
                        pre: acc * j.origin.isometry(),
                    });
                    indices.push(i);
                    acc = Isometry3::identity();
                }
                None => {
                    let value = index.map_or(0.0, |i| frozen[i]);
                    acc = acc * j.origin.isometry() * joint_motion(j.kind, j.unit_axis(), value);
                }
            }
        }
        let tail = acc * Point3::from(tree.link(tip).tip.unwrap_or([0.0; 3]));
        Ok(Self { vars, indices, tail })
    }

    pub fn dof(&self) -> usize {
        self.vars.len()
    }

    /// Endpoint for the free joints set to `values` (path order).
    pub fn endpoint(&self, values: &[f64]) -> Vector3<f64> {
        let mut p = self.tail.coords;
        for (var, q) in self.vars.iter().zip(values).rev() {
            p = match var.kind {
                JointKind::Revolute => rotate(&var.axis, *q, &p),
                JointKind::Prismatic => p + var.axis * *q,
                JointKind::Fixed => p,
            };
            p = (var.pre * Point3::from(p)).coords;
        }
        p
    }
}

/// Rodrigues' rotation of `p` about unit `k` by `angle`.
fn rotate(k: &Vector3<f64>, angle: f64, p: &Vector3<f64>) -> Vector3<f64> {
    let (s, c) = angle.sin_cos();
    p * c + k.cross(p) * s + k * (k.dot(p) * (1.0 - c))
}
