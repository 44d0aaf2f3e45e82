//! The embodied configuration library: a pose databank keyed by
//! `(origin, limb, direction)` and reach size.
//!
//! Two tables, as in a relational store. `vsam` rows hold the key triple under a
//! surrogate [`KId`]; `pose` rows hold one partial pose per `(p_id, k_id)`, where
//! `p_id` is the reach size. A pose only carries values for the joints of its
//! limb; every other joint is null.

mod format;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::eurdf::PlatformDescription;
use crate::label::Label;
use crate::vsam::{DirectionPull, EntryKey, SizeIndex, VsamSpec};

pub use format::{export_store, import_store, FORMAT_VERSION};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EclError {
    #[error("entry ({0}, {1}, {2}) already exists")]
    DuplicateEntry(Label, Label, DirectionPull),
    #[error("label {0} is not usable here")]
    UnknownLabel(Label),
    #[error("origin {0} is not part of the store's model")]
    OriginNotInSpec(Label),
    #[error("direction {0} is not part of the store's model")]
    DirectionNotInSpec(DirectionPull),
    #[error("no vsam row with k_id {0}")]
    UnknownKId(KId),
    #[error("pose support does not match {limb}: {detail}")]
    SupportMismatch { limb: Label, detail: String },
    #[error("value {value} for joint `{joint}` is outside [{min}, {max}]")]
    LimitViolation {
        joint: String,
        value: f64,
        min: f64,
        max: f64,
    },
    #[error("size {requested} exceeds the highest stored size {kmax}")]
    SizeOverflow { requested: u32, kmax: u32 },
    #[error("no entry for ({limb} @ {origin} -> {direction})")]
    NoSuchEntry {
        limb: Label,
        origin: Label,
        direction: DirectionPull,
    },
    #[error("joint {0} is set to different values")]
    JointConflict(usize),
    #[error("pose has {found} values, expected {expected}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("nothing to join")]
    EmptyJoin,
    #[error("store belongs to platform `{store}`, not `{platform}`")]
    PlatformMismatch { store: String, platform: String },
    #[error("format error: {0}")]
    Format(String),
    #[error("integrity error: {0}")]
    Integrity(String),
}

/// Surrogate key of a vsam row. Allocated monotonically, never reused.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct KId(pub u64);

impl fmt::Display for KId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VsamRow {
    pub k_id: KId,
    pub origin: Label,
    pub limb: Label,
    pub direction: DirectionPull,
}

impl VsamRow {
    pub fn key(&self) -> EntryKey {
        (self.origin, self.limb, self.direction)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoseRow {
    pub p_id: u32,
    pub k_id: KId,
    pub values: Vec<Option<f64>>,
}

/// A joint-space vector with nulls for joints it does not constrain.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PartialPose {
    pub values: Vec<Option<f64>>,
}

impl PartialPose {
    /// All-null pose of length `m`.
    pub fn empty(m: usize) -> Self {
        Self {
            values: vec![None; m],
        }
    }

    pub fn full(values: &[f64]) -> Self {
        Self {
            values: values.iter().copied().map(Some).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Indices of the non-null entries.
    pub fn support(&self) -> BTreeSet<usize> {
        self.values
            .iter()
            .enumerate()
            .filter_map(|(i, v)| v.map(|_| i))
            .collect()
    }

    /// Keeps the values at `support` and nulls the rest.
    pub fn restricted(values: &[f64], support: &BTreeSet<usize>) -> Self {
        Self {
            values: values
                .iter()
                .enumerate()
                .map(|(i, v)| support.contains(&i).then_some(*v))
                .collect(),
        }
    }
}

impl From<Vec<Option<f64>>> for PartialPose {
    fn from(values: Vec<Option<f64>>) -> Self {
        Self { values }
    }
}

/// Rounds to nine significant digits, the precision the store keeps. Negative
/// zero becomes zero.
pub fn canonical_value(x: f64) -> f64 {
    let v: f64 = format!("{x:.8e}").parse().expect("formatted float parses");
    if v == 0.0 {
        0.0
    } else {
        v
    }
}

/// Union of the inputs' supports. A joint set by several inputs must carry the
/// same value in each.
pub fn join_poses(poses: &[PartialPose]) -> Result<PartialPose, EclError> {
    let first = poses.first().ok_or(EclError::EmptyJoin)?;
    let mut out = PartialPose::empty(first.len());
    for p in poses {
        if p.len() != out.len() {
            return Err(EclError::LengthMismatch {
                expected: out.len(),
                found: p.len(),
            });
        }
        for (i, v) in p.values.iter().enumerate() {
            let Some(v) = v else { continue };
            match out.values[i] {
                None => out.values[i] = Some(*v),
                Some(prev) if prev == *v => {}
                Some(_) => return Err(EclError::JointConflict(i)),
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EclStore {
    pub platform_name: String,
    pub spec: VsamSpec,
    rows: BTreeMap<KId, VsamRow>,
    by_key: BTreeMap<EntryKey, KId>,
    /// Poses per row; element `i` has `p_id = i + 1`.
    poses: BTreeMap<KId, Vec<PartialPose>>,
    next_k_id: u64,
}

impl EclStore {
    pub fn new(platform_name: impl Into<String>, spec: VsamSpec) -> Self {
        Self {
            platform_name: platform_name.into(),
            spec,
            rows: BTreeMap::new(),
            by_key: BTreeMap::new(),
            poses: BTreeMap::new(),
            next_k_id: 1,
        }
    }

    pub fn vsam_rows(&self) -> impl Iterator<Item = &VsamRow> {
        self.rows.values()
    }

    /// Pose rows ordered by `(k_id, p_id)`.
    pub fn pose_rows(&self) -> impl Iterator<Item = PoseRow> + '_ {
        self.poses.iter().flat_map(|(k, list)| {
            list.iter().enumerate().map(|(i, p)| PoseRow {
                p_id: i as u32 + 1,
                k_id: *k,
                values: p.values.clone(),
            })
        })
    }

    pub fn row(&self, k_id: KId) -> Option<&VsamRow> {
        self.rows.get(&k_id)
    }

    pub fn k_id(&self, origin: &Label, limb: &Label, direction: &DirectionPull) -> Option<KId> {
        self.by_key.get(&(*origin, *limb, *direction)).copied()
    }

    /// Number of stored poses for a row (its highest size).
    pub fn kmax(&self, k_id: KId) -> u32 {
        self.poses.get(&k_id).map_or(0, |p| p.len() as u32)
    }

    pub fn poses(&self, k_id: KId) -> &[PartialPose] {
        self.poses.get(&k_id).map_or(&[], |p| p.as_slice())
    }

    pub fn entry_count(&self) -> usize {
        self.rows.len()
    }

    pub fn pose_count(&self) -> usize {
        self.poses.values().map(Vec::len).sum()
    }

    /// Directions stored for an `(origin, limb)` pair.
    pub fn directions(&self, origin: &Label, limb: &Label) -> BTreeSet<DirectionPull> {
        self.rows
            .values()
            .filter(|r| r.origin == *origin && r.limb == *limb)
            .map(|r| r.direction)
            .collect()
    }

    /// Adds a vsam row. Origins are joint labels, or a core label for translation
    /// rows (whose limb is then a core label too).
    pub fn insert_entry(
        &mut self,
        platform: &PlatformDescription,
        origin: Label,
        limb: Label,
        direction: DirectionPull,
    ) -> Result<KId, EclError> {
        self.check_platform(platform)?;
        if !platform.labels.contains(&origin) || origin.is_link_label() && !origin.is_core() {
            return Err(EclError::UnknownLabel(origin));
        }
        if !platform.labels.contains(&limb) || !limb.is_link_label() {
            return Err(EclError::UnknownLabel(limb));
        }
        if origin.is_core() != limb.is_core() {
            return Err(EclError::UnknownLabel(limb));
        }
        if !self.spec.origins.contains(&origin) {
            return Err(EclError::OriginNotInSpec(origin));
        }
        if !self.spec.directions.contains(&direction) {
            return Err(EclError::DirectionNotInSpec(direction));
        }
        let key = (origin, limb, direction);
        if self.by_key.contains_key(&key) {
            return Err(EclError::DuplicateEntry(origin, limb, direction));
        }
        let k_id = KId(self.next_k_id);
        self.next_k_id += 1;
        self.rows.insert(
            k_id,
            VsamRow {
                k_id,
                origin,
                limb,
                direction,
            },
        );
        self.by_key.insert(key, k_id);
        Ok(k_id)
    }

    /// Appends the next size for a row. Values are rounded to the store's
    /// precision; the stored pose is returned alongside its `p_id`.
    pub fn append_pose(
        &mut self,
        platform: &PlatformDescription,
        k_id: KId,
        pose: &PartialPose,
    ) -> Result<(u32, PartialPose), EclError> {
        self.check_platform(platform)?;
        let row = self.rows.get(&k_id).ok_or(EclError::UnknownKId(k_id))?.clone();
        if pose.len() != platform.m() {
            return Err(EclError::LengthMismatch {
                expected: platform.m(),
                found: pose.len(),
            });
        }
        let support = platform
            .support(&row.limb)
            .map_err(|_| EclError::UnknownLabel(row.limb))?;
        let given = pose.support();
        if given != support {
            let extra: Vec<usize> = given.difference(&support).copied().collect();
            let missing: Vec<usize> = support.difference(&given).copied().collect();
            return Err(EclError::SupportMismatch {
                limb: row.limb,
                detail: format!("extra joints {extra:?}, missing joints {missing:?}"),
            });
        }
        check_limits(platform, pose)?;
        let p_id = self.kmax(k_id) + 1;
        if p_id > self.spec.s_max {
            return Err(EclError::SizeOverflow {
                requested: p_id,
                kmax: self.spec.s_max,
            });
        }
        let stored = PartialPose {
            values: pose.values.iter().map(|v| v.map(canonical_value)).collect(),
        };
        self.poses.entry(k_id).or_default().push(stored.clone());
        self.spec.kmax.insert(row.key(), p_id);
        Ok((p_id, stored))
    }

    /// The stored pose for `(limb, origin, direction)` at size `s`.
    pub fn query(
        &self,
        limb: &Label,
        origin: &Label,
        direction: &DirectionPull,
        s: SizeIndex,
    ) -> Result<&PartialPose, EclError> {
        let k_id = self
            .k_id(origin, limb, direction)
            .ok_or(EclError::NoSuchEntry {
                limb: *limb,
                origin: *origin,
                direction: *direction,
            })?;
        let poses = self.poses(k_id);
        poses
            .get(s.get() as usize - 1)
            .ok_or(EclError::SizeOverflow {
                requested: s.get(),
                kmax: poses.len() as u32,
            })
    }

    /// Checks every stored pose against the platform: length, support equal to
    /// the row's limb, values within limits.
    pub fn check_against(&self, platform: &PlatformDescription) -> Result<(), EclError> {
        self.check_platform(platform)?;
        for row in self.rows.values() {
            for label in [row.origin, row.limb] {
                if !platform.labels.contains(&label) {
                    return Err(EclError::UnknownLabel(label));
                }
            }
            let support = platform
                .support(&row.limb)
                .map_err(|_| EclError::UnknownLabel(row.limb))?;
            for pose in self.poses(row.k_id) {
                if pose.len() != platform.m() {
                    return Err(EclError::LengthMismatch {
                        expected: platform.m(),
                        found: pose.len(),
                    });
                }
                if pose.support() != support {
                    return Err(EclError::SupportMismatch {
                        limb: row.limb,
                        detail: format!("stored pose of k_id {}", row.k_id),
                    });
                }
                check_limits(platform, pose)?;
            }
        }
        Ok(())
    }

    fn check_platform(&self, platform: &PlatformDescription) -> Result<(), EclError> {
        if platform.name != self.platform_name {
            return Err(EclError::PlatformMismatch {
                store: self.platform_name.clone(),
                platform: platform.name.clone(),
            });
        }
        Ok(())
    }
}

fn check_limits(platform: &PlatformDescription, pose: &PartialPose) -> Result<(), EclError> {
    for (v, dim) in pose.values.iter().zip(&platform.joint_space.dims) {
        if let Some(v) = v {
            if !dim.contains(*v) {
                return Err(EclError::LimitViolation {
                    joint: platform.tree.joint(dim.joint).name.clone(),
                    value: *v,
                    min: dim.min,
                    max: dim.max,
                });
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::vsam::{build_vsam, laban26, laban8_middle};
    use proptest::prelude::*;

    fn dir(name: &str) -> DirectionPull {
        name.parse().unwrap()
    }

    fn size(s: u32) -> SizeIndex {
        SizeIndex::new(s).unwrap()
    }

    fn baxter_store() -> (PlatformDescription, EclStore) {
        let p = fixtures::baxter();
        let spec = build_vsam(&p, p.labels.j(), laban26(), 3).unwrap();
        let store = EclStore::new(&p.name, spec);
        (p, store)
    }

    fn limb_pose(p: &PlatformDescription, limb: &Label, value: f64) -> PartialPose {
        let support = p.support(limb).unwrap();
        let q: Vec<f64> = p
            .joint_space
            .dims
            .iter()
            .map(|d| value.clamp(d.min, d.max))
            .collect();
        PartialPose::restricted(&q, &support)
    }

    #[test]
    fn insert_allocates_fresh_keys_and_rejects_duplicates() {
        let (p, mut store) = baxter_store();
        let (o, l) = (Label::distal(1, 1), Label::limb(1, 1));
        let a = store.insert_entry(&p, o, l, dir("left-high")).unwrap();
        assert_eq!(store.entry_count(), 1);
        let b = store.insert_entry(&p, o, l, dir("right-high")).unwrap();
        assert!(b > a);
        assert_eq!(
            store.insert_entry(&p, o, l, dir("left-high")),
            Err(EclError::DuplicateEntry(o, l, dir("left-high")))
        );
        assert!(matches!(
            store.insert_entry(&p, Label::limb(1, 1), l, dir("left-high")),
            Err(EclError::UnknownLabel(_))
        ));
    }

    #[test]
    fn translation_rows_on_youbot() {
        let p = fixtures::youbot();
        let spec = build_vsam(&p, [Label::Core(1)], laban8_middle(), 3).unwrap();
        let mut store = EclStore::new(&p.name, spec);
        let k = store
            .insert_entry(&p, Label::Core(1), Label::Core(1), dir("left-middle"))
            .unwrap();
        assert_eq!(store.kmax(k), 0);
    }

    #[test]
    fn appends_are_sequential() {
        let (p, mut store) = baxter_store();
        let (o, l, d) = (Label::distal(1, 1), Label::limb(1, 1), dir("left-high"));
        let k = store.insert_entry(&p, o, l, d).unwrap();
        for s in 1..=3 {
            let (p_id, _) = store.append_pose(&p, k, &limb_pose(&p, &l, 0.1 * s as f64)).unwrap();
            assert_eq!(p_id, s);
        }
        assert_eq!(store.kmax(k), 3);
        assert_eq!(store.spec.kmax(&o, &l, &d), Some(3));
        assert!(matches!(
            store.append_pose(&p, k, &limb_pose(&p, &l, 0.4)),
            Err(EclError::SizeOverflow { kmax: 3, .. })
        ));
    }

    #[test]
    fn support_and_limits_are_enforced() {
        let (p, mut store) = baxter_store();
        let l = Label::limb(1, 2);
        let k = store.insert_entry(&p, Label::distal(1, 2), l, dir("left-high")).unwrap();
        let mut pose = limb_pose(&p, &l, 0.1);
        let outside = (0..p.m()).find(|i| pose.values[*i].is_none()).unwrap();
        pose.values[outside] = Some(0.0);
        assert!(matches!(
            store.append_pose(&p, k, &pose),
            Err(EclError::SupportMismatch { .. })
        ));
        let mut pose = limb_pose(&p, &l, 0.1);
        let inside = *p.support(&l).unwrap().iter().next().unwrap();
        pose.values[inside] = Some(100.0);
        assert!(matches!(
            store.append_pose(&p, k, &pose),
            Err(EclError::LimitViolation { .. })
        ));
        let mut pose = limb_pose(&p, &l, 0.1);
        pose.values[inside] = None;
        assert!(matches!(
            store.append_pose(&p, k, &pose),
            Err(EclError::SupportMismatch { .. })
        ));
        assert_eq!(store.kmax(k), 0);
    }

    #[test]
    fn query_returns_stored_pose_or_errors() {
        let (p, mut store) = baxter_store();
        let (o, l, d) = (Label::distal(1, 1), Label::limb(1, 1), dir("left-high"));
        let k = store.insert_entry(&p, o, l, d).unwrap();
        let mut stored = Vec::new();
        for s in 1..=3 {
            stored.push(store.append_pose(&p, k, &limb_pose(&p, &l, 0.25 * s as f64)).unwrap().1);
        }
        assert_eq!(store.query(&l, &o, &d, size(3)).unwrap(), &stored[2]);
        assert_eq!(
            store.query(&l, &o, &d, size(5)),
            Err(EclError::SizeOverflow { requested: 5, kmax: 3 })
        );
        let back_low = dir("back-low");
        assert!(matches!(
            store.query(&Label::limb(1, 3), &Label::distal(1, 3), &back_low, size(1)),
            Err(EclError::NoSuchEntry { .. })
        ));
    }

    #[test]
    fn canonical_values() {
        assert_eq!(canonical_value(0.1), 0.1);
        assert_eq!(canonical_value(1.0 / 3.0), 0.333333333);
        assert_eq!(canonical_value(-0.0).to_bits(), 0.0f64.to_bits());
        assert_eq!(canonical_value(0.1 + 0.2), 0.3);
        assert_eq!(canonical_value(123456789012.0), 123456789000.0);
    }

    #[test]
    fn join_examples() {
        let p = fixtures::baxter();
        let left = limb_pose(&p, &Label::limb(1, 1), 0.2);
        let right = limb_pose(&p, &Label::limb(2, 1), 0.3);
        let both = join_poses(&[left.clone(), right.clone()]).unwrap();
        let expected: BTreeSet<usize> = left.support().union(&right.support()).copied().collect();
        assert_eq!(both.support(), expected);
        assert_eq!(join_poses(&[left.clone()]).unwrap(), left);
        assert_eq!(join_poses(&[left.clone(), left.clone()]).unwrap(), left);
        assert_eq!(join_poses(&[left.clone(), PartialPose::empty(p.m())]).unwrap(), left);

        let outer = limb_pose(&p, &Label::limb(2, 1), 0.1);
        let inner = limb_pose(&p, &Label::limb(2, 2), 0.2);
        assert!(matches!(join_poses(&[outer, inner]), Err(EclError::JointConflict(_))));
        assert_eq!(join_poses(&[]), Err(EclError::EmptyJoin));
    }

    fn partial(m: usize) -> impl Strategy<Value = PartialPose> {
        proptest::collection::vec(proptest::option::of(-3i32..3), m)
            .prop_map(|v| PartialPose::from(v.into_iter().map(|x| x.map(f64::from)).collect::<Vec<_>>()))
    }

    proptest! {
        #[test]
        fn join_is_commutative_where_defined(a in partial(6), b in partial(6)) {
            let ab = join_poses(&[a.clone(), b.clone()]);
            let ba = join_poses(&[b, a]);
            prop_assert_eq!(ab.is_ok(), ba.is_ok());
            if let (Ok(x), Ok(y)) = (ab, ba) {
                prop_assert_eq!(x, y);
            }
        }
    }
}
