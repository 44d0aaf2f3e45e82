//! Labeled platform descriptions (eURDF).
//!
//! A platform is a URDF-style kinematic tree whose links and joints additionally
//! carry overlapping body-part labels: core parts (`c_n`), nested limb subtrees
//! (`limb_cd`) and the joint locations rooting them (`distal_cd`).

mod derive;
mod parse;
mod serialize;
mod tree;
mod validate;

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::Vector3;

pub use derive::{derive_labels, DeriveError};
pub use parse::{parse_eurdf, parse_eurdf_unchecked};
pub use serialize::serialize_eurdf;
pub use tree::{
    Joint, JointId, JointKind, JointLimit, JointSpec, KinematicTree, Link, LinkId, LinkSpec, Origin,
    TreeBuilder,
    TreeError, DEFAULT_INCREMENT,
};
pub use validate::{validate, ValidationReport, Violation, ViolationCode};

use crate::label::{Label, LimbIndex};

#[derive(Debug, thiserror::Error)]
pub enum EurdfError {
    #[error("malformed XML: {0}")]
    MalformedXml(String),
    #[error("schema violation: {0}")]
    SchemaViolation(String),
    #[error("labeling error: {0}")]
    Labeling(ValidationReport),
    #[error("unknown label `{0}`")]
    UnknownLabel(Label),
}

/// How the core moves through the world, if at all.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Locomotion {
    /// Metres per unit of translation magnitude. `None` uses the commanding limb's
    /// reach length (or [`DEFAULT_QUANTUM`] for core-only commands).
    pub quantum: Option<f64>,
}

/// Translation quantum used when neither the platform nor a limb supplies one.
pub const DEFAULT_QUANTUM: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointDim {
    pub joint: JointId,
    pub min: f64,
    pub max: f64,
    pub increment: f64,
}

impl JointDim {
    pub fn contains(&self, value: f64) -> bool {
        value >= self.min && value <= self.max
    }
}

/// The discretised configuration space: one dimension per actuated joint, in tree
/// traversal order. Every pose vector in the crate is interpreted in this order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct JointSpace {
    pub dims: Vec<JointDim>,
}

impl JointSpace {
    pub fn from_tree(tree: &KinematicTree) -> Self {
        let dims = tree
            .joints()
            .iter()
            .filter(|j| j.kind != JointKind::Fixed)
            .map(|j| {
                let limit = j.limit.unwrap_or(JointLimit {
                    min: 0.0,
                    max: 0.0,
                    increment: DEFAULT_INCREMENT,
                });
                JointDim {
                    joint: j.id,
                    min: limit.min,
                    max: limit.max,
                    increment: limit.increment,
                }
            })
            .collect();
        Self { dims }
    }

    /// Number of actuated joints.
    pub fn m(&self) -> usize {
        self.dims.len()
    }

    pub fn index_of(&self, joint: JointId) -> Option<usize> {
        self.dims.iter().position(|d| d.joint == joint)
    }
}

/// The three overlapping label sets. Limb labels are stored with their full member
/// sets as declared, so that descriptions with broken labelings can still be
/// represented and reported on.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LabelSets {
    /// `c_n` → links of that core part.
    pub core: BTreeMap<Label, BTreeSet<LinkId>>,
    /// `limb_cd` → links of the labeled subtree.
    pub limbs: BTreeMap<Label, BTreeSet<LinkId>>,
    /// `distal_cd` and `distal_n` → the joint they name.
    pub joints: BTreeMap<Label, JointId>,
}

impl LabelSets {
    pub fn c(&self) -> BTreeSet<Label> {
        self.core.keys().copied().collect()
    }

    pub fn l(&self) -> BTreeSet<Label> {
        self.limbs.keys().copied().collect()
    }

    pub fn j(&self) -> BTreeSet<Label> {
        self.joints.keys().copied().collect()
    }

    pub fn core_links(&self) -> BTreeSet<LinkId> {
        self.core.values().flatten().copied().collect()
    }

    pub fn contains(&self, label: &Label) -> bool {
        match label {
            Label::Core(_) => self.core.contains_key(label),
            Label::Limb(_) => self.limbs.contains_key(label),
            Label::CoreJoint(_) | Label::Distal(_) => self.joints.contains_key(label),
        }
    }

    /// Labels carried by a link: its core part first, then limb labels in order.
    pub fn link_labels(&self, link: LinkId) -> Vec<Label> {
        self.core
            .iter()
            .chain(self.limbs.iter())
            .filter(|(_, members)| members.contains(&link))
            .map(|(label, _)| *label)
            .collect()
    }

    pub fn joint_labels(&self, joint: JointId) -> Vec<Label> {
        self.joints
            .iter()
            .filter(|(_, j)| **j == joint)
            .map(|(label, _)| *label)
            .collect()
    }

    /// Limb labels of one chain, shallowest first.
    pub fn chain(&self, chain: u32) -> Vec<Label> {
        self.limbs
            .keys()
            .filter(|l| matches!(l, Label::Limb(LimbIndex { chain: c, .. }) if *c == chain))
            .copied()
            .collect()
    }
}

/// Links and actuated joints covered by one label.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Subtree {
    pub links: BTreeSet<LinkId>,
    pub joints: BTreeSet<JointId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlatformDescription {
    pub name: String,
    pub tree: KinematicTree,
    pub joint_space: JointSpace,
    pub labels: LabelSets,
    pub locomotion: Option<Locomotion>,
}

impl PlatformDescription {
    pub fn new(
        name: impl Into<String>,
        tree: KinematicTree,
        labels: LabelSets,
        locomotion: Option<Locomotion>,
    ) -> Self {
        let joint_space = JointSpace::from_tree(&tree);
        Self {
            name: name.into(),
            tree,
            joint_space,
            labels,
            locomotion,
        }
    }

    pub fn m(&self) -> usize {
        self.joint_space.m()
    }

    /// Neutral ("place middle") configuration: each joint's declared neutral value,
    /// or zero clamped into its limits.
    pub fn neutral(&self) -> Vec<f64> {
        self.joint_space
            .dims
            .iter()
            .map(|d| {
                self.tree
                    .joint(d.joint)
                    .neutral
                    .unwrap_or_else(|| 0.0_f64.clamp(d.min, d.max))
            })
            .collect()
    }

    pub fn subtree(&self, label: &Label) -> Result<Subtree, EurdfError> {
        let links = match label {
            Label::Core(_) => self.labels.core.get(label),
            Label::Limb(_) => self.labels.limbs.get(label),
            _ => None,
        }
        .ok_or(EurdfError::UnknownLabel(*label))?;
        let joints = match label {
            // Core parts own the actuated joints joining them to other core parts.
            Label::Core(_) => {
                let core = self.labels.core_links();
                self.tree
                    .joints()
                    .iter()
                    .filter(|j| j.kind != JointKind::Fixed)
                    .filter(|j| core.contains(&j.parent) && core.contains(&j.child))
                    .filter(|j| links.contains(&j.parent) || links.contains(&j.child))
                    .map(|j| j.id)
                    .collect()
            }
            _ => self
                .tree
                .joints()
                .iter()
                .filter(|j| j.kind != JointKind::Fixed && links.contains(&j.child))
                .map(|j| j.id)
                .collect(),
        };
        Ok(Subtree {
            links: links.clone(),
            joints,
        })
    }

    /// Joint-space indices of the actuated joints covered by `label`.
    pub fn support(&self, label: &Label) -> Result<BTreeSet<usize>, EurdfError> {
        let subtree = self.subtree(label)?;
        Ok(subtree
            .joints
            .iter()
            .filter_map(|j| self.joint_space.index_of(*j))
            .collect())
    }

    /// The distal-most link of a limb label (the leaf of its chain).
    pub fn limb_tip_link(&self, label: &Label) -> Result<LinkId, EurdfError> {
        if !matches!(label, Label::Limb(_)) {
            return Err(EurdfError::UnknownLabel(*label));
        }
        let links = self
            .labels
            .limbs
            .get(label)
            .ok_or(EurdfError::UnknownLabel(*label))?;
        links
            .iter()
            .copied()
            .max_by_key(|l| (self.tree.depth(*l), std::cmp::Reverse(*l)))
            .ok_or(EurdfError::UnknownLabel(*label))
    }

    /// Sum of segment lengths from the limb's root joint to its tip: joint offsets
    /// inside the subtree plus the tip offset of the distal-most link.
    pub fn reach_length(&self, label: &Label) -> Result<f64, EurdfError> {
        let tip = self.limb_tip_link(label)?;
        let members = &self.labels.limbs[label];
        let mut length = self.tree.link(tip).geometry_extent().unwrap_or(0.0);
        let mut link = tip;
        while let Some(jid) = self.tree.link(link).parent_joint {
            let joint = self.tree.joint(jid);
            if !members.contains(&joint.parent) {
                break;
            }
            length += Vector3::from(joint.origin.xyz).norm();
            link = joint.parent;
        }
        Ok(length)
    }

    /// Validation report for this description; empty iff every invariant holds.
    pub fn validate(&self) -> ValidationReport {
        validate(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn fig3_subtrees_nest() {
        let p = fixtures::fig3();
        let l21 = p.subtree(&Label::limb(2, 1)).unwrap();
        let l22 = p.subtree(&Label::limb(2, 2)).unwrap();
        assert!(l22.links.is_subset(&l21.links) && l22.links != l21.links);
        assert!(l22.joints.is_subset(&l21.joints) && l22.joints != l21.joints);
        assert_eq!(l21.links.len(), 3);
        assert_eq!(l21.joints.len(), 3);
    }

    #[test]
    fn fig3_core_part_owns_core_joint() {
        let p = fixtures::fig3();
        let c1 = p.subtree(&Label::Core(1)).unwrap();
        let distal_1 = p.labels.joints[&Label::CoreJoint(1)];
        assert!(c1.joints.contains(&distal_1));
    }

    #[test]
    fn subtree_of_unknown_label_errors() {
        let p = fixtures::fig3();
        assert!(matches!(
            p.subtree(&Label::limb(9, 9)),
            Err(EurdfError::UnknownLabel(_))
        ));
        assert!(p.subtree(&Label::distal(1, 1)).is_err());
    }

    #[test]
    fn neutral_respects_limits() {
        for p in fixtures::all() {
            let q = p.neutral();
            assert_eq!(q.len(), p.m());
            for (v, d) in q.iter().zip(&p.joint_space.dims) {
                assert!(d.contains(*v), "{}: {v} outside [{}, {}]", p.name, d.min, d.max);
            }
        }
    }
}
