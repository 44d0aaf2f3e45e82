use std::collections::{BTreeMap, BTreeSet};

use super::{KinematicTree, LabelSets, LinkId};
use crate::label::Label;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DeriveError {
    #[error("core links do not form a connected subtree containing the root (at `{0}`)")]
    DisconnectedCore(String),
    #[error("limb chain branches at link `{0}`")]
    BranchingLimb(String),
    #[error("chain leaving the core at joint `{0}` has no actuated joint")]
    UnactuatedChain(String),
    #[error("more than nine actuated joints inside the core")]
    TooManyCoreJoints,
}

/// Assigns core, limb and distal labels from the tree and a choice of core links.
///
/// The core is split into parts `c_1, c_2, ...` at its internal actuated joints,
/// which become `distal_1, distal_2, ...`. Each joint leaving the core starts chain
/// `c` (numbered in traversal order). Walking outwards, every joint location opens
/// a new depth `d` labeled `distal_cd`, whose subtree is `limb_cd`. Consecutive
/// actuated joints with no offset between them share one location, and joints at
/// or beyond an end-effector link never open a new one.
pub fn derive_labels(
    tree: &KinematicTree,
    core_links: &BTreeSet<LinkId>,
) -> Result<LabelSets, DeriveError> {
    let root = tree.root();
    if !core_links.contains(&root) {
        return Err(DeriveError::DisconnectedCore(tree.link(root).name.clone()));
    }
    for l in core_links {
        if let Some(parent) = tree.parent_link(*l) {
            if !core_links.contains(&parent) {
                return Err(DeriveError::DisconnectedCore(tree.link(*l).name.clone()));
            }
        }
    }

    let mut labels = LabelSets::default();
    let mut part_of: BTreeMap<LinkId, u32> = BTreeMap::new();
    part_of.insert(root, 1);
    let (mut parts, mut core_joints) = (1u32, 0u32);
    let mut exits = Vec::new();
    // Joint ids follow a preorder traversal, so parents are always seen first.
    for j in tree.joints() {
        if !core_links.contains(&j.parent) {
            continue;
        }
        if !core_links.contains(&j.child) {
            exits.push(j.id);
            continue;
        }
        let part = if j.is_actuated() {
            core_joints += 1;
            if core_joints > 9 {
                return Err(DeriveError::TooManyCoreJoints);
            }
            labels.joints.insert(Label::CoreJoint(core_joints), j.id);
            parts += 1;
            parts
        } else {
            part_of[&j.parent]
        };
        part_of.insert(j.child, part);
    }
    for (link, part) in part_of {
        labels
            .core
            .entry(Label::Core(part))
            .or_insert_with(BTreeSet::new)
            .insert(link);
    }

    for (c, exit) in exits.into_iter().enumerate() {
        let chain = c as u32 + 1;
        let exit_link = tree.joint(exit).child;
        let mut sequence = vec![exit];
        let mut link = exit_link;
        loop {
            match tree.child_joints(link) {
                [] => break,
                [next] => {
                    sequence.push(*next);
                    link = tree.joint(*next).child;
                }
                _ => return Err(DeriveError::BranchingLimb(tree.link(link).name.clone())),
            }
        }

        let mut depth = 0u32;
        let mut moved = false;
        let mut in_effector = false;
        for jid in sequence {
            let joint = tree.joint(jid);
            in_effector |= tree.link(joint.child).end_effector;
            moved |= joint.origin.xyz.iter().any(|v| *v != 0.0);
            if !joint.is_actuated() {
                continue;
            }
            if depth == 0 || (moved && !in_effector) {
                depth += 1;
                let root = if depth == 1 { exit_link } else { joint.child };
                labels
                    .limbs
                    .insert(Label::limb(chain, depth), tree.descendants(root).into_iter().collect());
                labels.joints.insert(Label::distal(chain, depth), jid);
            }
            moved = false;
        }
        if depth == 0 {
            return Err(DeriveError::UnactuatedChain(tree.joint(exit).name.clone()));
        }
    }
    Ok(labels)
}
