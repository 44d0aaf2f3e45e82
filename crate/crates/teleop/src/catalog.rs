//! What the service can drive: platforms, their labels and available commands.

use serde::{Deserialize, Serialize};

use kinesphere::eurdf::DEFAULT_QUANTUM;
use kinesphere::{DirectionPull, EclStore, Label, PlatformDescription};

use crate::WIRE_VERSION;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Catalog {
    pub v: u32,
    pub platforms: Vec<PlatformInfo>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlatformInfo {
    pub name: String,
    /// Actuated joints in pose order.
    pub joints: Vec<JointInfo>,
    /// Links in frame order of the state stream.
    pub links: Vec<LinkInfo>,
    pub core: Vec<Label>,
    pub limbs: Vec<Label>,
    pub origins: Vec<Label>,
    pub s_max: u32,
    /// Metres per translation quantum for core commands; absent on fixed-base
    /// platforms.
    pub locomotion: Option<f64>,
    pub entries: Vec<EntryInfo>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointInfo {
    pub name: String,
    pub min: f64,
    pub max: f64,
    pub neutral: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkInfo {
    pub name: String,
    pub parent: Option<usize>,
    pub labels: Vec<Label>,
}

/// Directions stored for one `(origin, limb)` pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryInfo {
    pub origin: Label,
    pub limb: Label,
    pub directions: Vec<DirectionInfo>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionInfo {
    pub direction: DirectionPull,
    /// Highest stored size; larger sizes translate the base.
    pub kmax: u32,
}

pub fn platform_info(platform: &PlatformDescription, store: &EclStore) -> PlatformInfo {
    let tree = &platform.tree;
    let joints = platform
        .joint_space
        .dims
        .iter()
        .zip(platform.neutral())
        .map(|(d, neutral)| JointInfo {
            name: tree.joint(d.joint).name.clone(),
            min: d.min,
            max: d.max,
            neutral,
        })
        .collect();
    let links = tree
        .links()
        .iter()
        .map(|l| LinkInfo {
            name: l.name.clone(),
            parent: tree.parent_link(l.id).map(|p| p.0),
            labels: platform.labels.link_labels(l.id),
        })
        .collect();

    let mut entries: Vec<EntryInfo> = Vec::new();
    for row in store.vsam_rows() {
        let kmax = store.kmax(row.k_id);
        let info = DirectionInfo {
            direction: row.direction,
            kmax,
        };
        match entries.iter_mut().find(|e| e.origin == row.origin && e.limb == row.limb) {
            Some(e) => e.directions.push(info),
            None => entries.push(EntryInfo {
                origin: row.origin,
                limb: row.limb,
                directions: vec![info],
            }),
        }
    }
    entries.sort_by_key(|e| (e.origin, e.limb));
    for e in &mut entries {
        e.directions.sort_by_key(|d| d.direction);
    }

    PlatformInfo {
        name: platform.name.clone(),
        joints,
        links,
        core: platform.labels.c().into_iter().collect(),
        limbs: platform.labels.l().into_iter().collect(),
        origins: store.spec.origins.iter().copied().collect(),
        s_max: store.spec.s_max,
        locomotion: platform.locomotion.map(|l| l.quantum.unwrap_or(DEFAULT_QUANTUM)),
        entries,
    }
}

pub fn catalog<'a>(loaded: impl IntoIterator<Item = (&'a PlatformDescription, &'a EclStore)>) -> Catalog {
    Catalog {
        v: WIRE_VERSION,
        platforms: loaded.into_iter().map(|(p, s)| platform_info(p, s)).collect(),
    }
}
