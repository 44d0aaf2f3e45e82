use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use super::{JointKind, LinkId, PlatformDescription};
use crate::label::{Label, LimbIndex};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ViolationCode {
    MissingLimit,
    EmptyJointRange,
    NonpositiveIncrement,
    ZeroAxis,
    NeutralOutOfRange,
    ComMissing,
    MultipleCom,
    ComNotInCore,
    NoCore,
    CoreMissingRoot,
    CoreDisconnected,
    CoreOverlap,
    CoreLimbOverlap,
    UncoveredLink,
    LimbNotSubtree,
    ChainNotAttachedToCore,
    OrphanLimb,
    OrphanDistal,
    DistalNotRoot,
    DistalOnFixedJoint,
    CoreJointOutsideCore,
    NestingViolation,
    OverlapViolation,
}

impl ViolationCode {
    /// Codes that concern body-part labels rather than the kinematic description.
    pub fn is_labeling(self) -> bool {
        !matches!(
            self,
            ViolationCode::MissingLimit
                | ViolationCode::EmptyJointRange
                | ViolationCode::NonpositiveIncrement
                | ViolationCode::ZeroAxis
                | ViolationCode::NeutralOutOfRange
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub code: ViolationCode,
    pub subject: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, code: ViolationCode) -> bool {
        self.violations.iter().any(|v| v.code == code)
    }

    fn push(&mut self, code: ViolationCode, subject: impl fmt::Display, message: impl Into<String>) {
        self.violations.push(Violation {
            code,
            subject: subject.to_string(),
            message: message.into(),
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .violations
            .iter()
            .map(|v| format!("{:?} {}: {}", v.code, v.subject, v.message))
            .collect();
        f.write_str(&parts.join("; "))
    }
}

/// Checks every structural and labeling invariant of a platform description.
/// Violations are listed in a fixed order (joints, center of mass, core, limbs).
pub fn validate(platform: &PlatformDescription) -> ValidationReport {
    let mut report = ValidationReport::default();
    check_joints(platform, &mut report);
    check_core(platform, &mut report);
    check_limbs(platform, &mut report);
    report
}

fn check_joints(p: &PlatformDescription, report: &mut ValidationReport) {
    use ViolationCode::*;
    for j in p.tree.joints() {
        if j.kind == JointKind::Fixed {
            continue;
        }
        let Some(limit) = j.limit else {
            report.push(MissingLimit, &j.name, "actuated joint without limits");
            continue;
        };
        if !(limit.min < limit.max) {
            report.push(
                EmptyJointRange,
                &j.name,
                format!("limit min {} is not below max {}", limit.min, limit.max),
            );
        }
        if !(limit.increment > 0.0) {
            report.push(NonpositiveIncrement, &j.name, format!("increment {}", limit.increment));
        }
        if j.axis.iter().all(|a| *a == 0.0) {
            report.push(ZeroAxis, &j.name, "joint axis is the zero vector");
        }
        if let Some(n) = j.neutral {
            if n < limit.min || n > limit.max {
                report.push(NeutralOutOfRange, &j.name, format!("neutral {n} outside limits"));
            }
        }
    }
    for (label, jid) in &p.labels.joints {
        if p.tree.joint(*jid).kind == JointKind::Fixed {
            report.push(DistalOnFixedJoint, label, format!("names fixed joint `{}`", p.tree.joint(*jid).name));
        }
    }
}

fn check_core(p: &PlatformDescription, report: &mut ValidationReport) {
    use ViolationCode::*;
    let tree = &p.tree;
    let core = p.labels.core_links();
    let com: Vec<LinkId> = tree.links().iter().filter(|l| l.center_of_mass).map(|l| l.id).collect();
    match com.as_slice() {
        [] => report.push(ComMissing, &p.name, "no link designated as center of mass"),
        [c] if !core.contains(c) => report.push(
            ComNotInCore,
            &tree.link(*c).name,
            "center-of-mass link carries no core label",
        ),
        [_] => {}
        many => report.push(
            MultipleCom,
            &p.name,
            format!("{} links designated as center of mass", many.len()),
        ),
    }
    if p.labels.core.is_empty() {
        report.push(NoCore, &p.name, "no core label");
        return;
    }
    if !core.contains(&tree.root()) {
        report.push(CoreMissingRoot, &tree.link(tree.root()).name, "root link is not part of the core");
    }
    for l in &core {
        if *l == tree.root() {
            continue;
        }
        if let Some(parent) = tree.parent_link(*l) {
            if !core.contains(&parent) {
                report.push(CoreDisconnected, &tree.link(*l).name, "core link whose parent is not core");
            }
        }
    }
    let mut owner: BTreeMap<LinkId, Label> = BTreeMap::new();
    for (label, links) in &p.labels.core {
        for l in links {
            if let Some(prev) = owner.insert(*l, *label) {
                report.push(
                    CoreOverlap,
                    &tree.link(*l).name,
                    format!("in both {prev} and {label}"),
                );
            }
        }
    }
    for (label, links) in &p.labels.limbs {
        for l in links.intersection(&core) {
            report.push(CoreLimbOverlap, &tree.link(*l).name, format!("core link also labeled {label}"));
        }
    }
    for (label, jid) in &p.labels.joints {
        if let Label::CoreJoint(_) = label {
            let j = tree.joint(*jid);
            if !(core.contains(&j.parent) && core.contains(&j.child)) {
                report.push(CoreJointOutsideCore, label, format!("joint `{}` leaves the core", j.name));
            }
        }
    }
}

fn check_limbs(p: &PlatformDescription, report: &mut ValidationReport) {
    use ViolationCode::*;
    let tree = &p.tree;
    let core = p.labels.core_links();

    let covered: BTreeSet<LinkId> = p.labels.limbs.values().flatten().copied().collect();
    for link in tree.links() {
        if !core.contains(&link.id) && !covered.contains(&link.id) {
            report.push(UncoveredLink, &link.name, "link carries neither a core nor a limb label");
        }
    }

    let mut roots: BTreeMap<Label, LinkId> = BTreeMap::new();
    for (label, members) in &p.labels.limbs {
        let tops: Vec<LinkId> = members
            .iter()
            .copied()
            .filter(|l| tree.parent_link(*l).map_or(true, |pl| !members.contains(&pl)))
            .collect();
        let closed = match tops.as_slice() {
            [top] => {
                let below: BTreeSet<LinkId> = tree.descendants(*top).into_iter().collect();
                if &below == members {
                    roots.insert(*label, *top);
                    true
                } else {
                    false
                }
            }
            _ => false,
        };
        if !closed {
            report.push(LimbNotSubtree, label, "members do not form one closed subtree");
        }
    }

    for (label, root) in &roots {
        if let Label::Limb(LimbIndex { depth: 1, .. }) = label {
            if tree.parent_link(*root).is_some_and(|pl| !core.contains(&pl)) {
                report.push(ChainNotAttachedToCore, label, "depth-1 limb does not leave the core");
            }
        }
    }

    for label in p.labels.limbs.keys() {
        let distal = label.paired().expect("limb label");
        if !p.labels.joints.contains_key(&distal) {
            report.push(OrphanLimb, label, format!("no joint labeled {distal}"));
        }
    }
    for (label, jid) in &p.labels.joints {
        let Some(limb) = label.paired() else { continue };
        if !p.labels.limbs.contains_key(&limb) {
            report.push(OrphanDistal, label, format!("no links labeled {limb}"));
            continue;
        }
        if roots.contains_key(&limb) {
            let sub = p.subtree(&limb).expect("label present");
            let proximal = sub
                .joints
                .iter()
                .copied()
                .min_by_key(|j| (tree.depth(tree.joint(*j).child), *j));
            if proximal != Some(*jid) {
                report.push(
                    DistalNotRoot,
                    label,
                    format!("`{}` is not the proximal-most joint of {limb}", tree.joint(*jid).name),
                );
            }
        }
    }

    for (label, members) in &p.labels.limbs {
        let Label::Limb(idx) = label else { continue };
        if idx.depth == 1 {
            continue;
        }
        let outer = Label::limb(idx.chain, idx.depth - 1);
        match p.labels.limbs.get(&outer) {
            None => report.push(NestingViolation, label, format!("{outer} is missing")),
            Some(outer_members) => {
                if !(members.is_subset(outer_members) && members != outer_members) {
                    report.push(
                        NestingViolation,
                        label,
                        format!("subtree is not strictly inside {outer}"),
                    );
                }
            }
        }
    }

    let limbs: Vec<(&Label, &BTreeSet<LinkId>)> = p.labels.limbs.iter().collect();
    for (i, (a, am)) in limbs.iter().enumerate() {
        for (b, bm) in &limbs[i + 1..] {
            if am.is_disjoint(bm) || am.is_subset(bm) || bm.is_subset(am) {
                continue;
            }
            report.push(OverlapViolation, a, format!("partially overlaps {b}"));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eurdf::{parse_eurdf_unchecked, serialize_eurdf};
    use crate::fixtures;

    #[test]
    fn fixtures_are_valid() {
        for p in fixtures::all() {
            let report = validate(&p);
            assert!(report.is_empty(), "{}: {report}", p.name);
        }
    }

    #[test]
    fn limb_outside_its_parent_is_nesting_violation() {
        // Move limb_22 onto chain 1's link so it is no longer inside limb_21.
        let mut p = fixtures::fig3();
        let arm1 = p.tree.link_by_name("arm1").unwrap();
        p.labels.limbs.insert(Label::limb(1, 2), [arm1].into());
        let d22 = p.labels.joints[&Label::distal(2, 2)];
        p.labels.joints.insert(Label::distal(1, 2), d22);
        let report = validate(&p);
        assert!(report.has(ViolationCode::NestingViolation), "{report}");
    }

    #[test]
    fn empty_joint_range_is_reported() {
        let text = serialize_eurdf(&fixtures::fig3()).replacen("upper=\"1.5\"", "upper=\"-1.5\"", 1);
        let p = parse_eurdf_unchecked(&text).unwrap();
        assert!(validate(&p).has(ViolationCode::EmptyJointRange));
    }

    #[test]
    fn uncovered_and_orphans() {
        let mut p = fixtures::fig3();
        p.labels.limbs.remove(&Label::limb(1, 1));
        let report = validate(&p);
        assert!(report.has(ViolationCode::UncoveredLink));
        assert!(report.has(ViolationCode::OrphanDistal));
    }

    #[test]
    fn com_must_sit_in_core() {
        let mut p = fixtures::fig3();
        p.labels.core.clear();
        assert!(validate(&p).has(ViolationCode::NoCore));
    }
}
