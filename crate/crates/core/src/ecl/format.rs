//! Portable store files: one JSON document with explicit `vsam` and `pose` tables.
//!
//! The output is canonical. Object keys are sorted, rows are ordered by key and
//! every joint value is written with nine significant digits, so equal stores
//! export to identical bytes.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use serde::Deserialize;

use super::{EclError, EclStore, KId, PartialPose, VsamRow};
use crate::label::Label;
use crate::vsam::{DirectionPull, VsamSpec};

pub const FORMAT_VERSION: u64 = 1;

enum Json {
    Null,
    Int(u64),
    Float(f64),
    Str(String),
    Arr(Vec<Json>),
    Obj(BTreeMap<&'static str, Json>),
}

impl Json {
    fn is_scalar(&self) -> bool {
        !matches!(self, Json::Arr(_) | Json::Obj(_))
    }

    fn is_flat(&self) -> bool {
        match self {
            Json::Arr(items) => items.iter().all(Json::is_scalar),
            // Table rows: objects of scalars and scalar arrays.
            Json::Obj(fields) => fields.values().all(|v| v.is_scalar() || matches!(v, Json::Arr(_)) && v.is_flat()),
            _ => true,
        }
    }

    /// Arrays of scalars and table rows go on one line; anything else is indented.
    fn write(&self, out: &mut String, indent: usize) {
        match self {
            Json::Null => out.push_str("null"),
            Json::Int(i) => write!(out, "{i}").unwrap(),
            Json::Float(x) => write!(out, "{x:.8e}").unwrap(),
            Json::Str(s) => out.push_str(&serde_json::to_string(s).unwrap()),
            Json::Arr(items) if items.is_empty() => out.push_str("[]"),
            Json::Obj(fields) if fields.is_empty() => out.push_str("{}"),
            Json::Arr(items) if self.is_flat() => {
                out.push('[');
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    item.write(out, indent);
                }
                out.push(']');
            }
            Json::Obj(fields) if self.is_flat() => {
                out.push('{');
                for (i, (k, v)) in fields.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    write!(out, "\"{k}\": ").unwrap();
                    v.write(out, indent);
                }
                out.push('}');
            }
            Json::Arr(items) => {
                out.push_str("[\n");
                for (i, item) in items.iter().enumerate() {
                    pad(out, indent + 1);
                    item.write(out, indent + 1);
                    out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
                }
                pad(out, indent);
                out.push(']');
            }
            Json::Obj(fields) => {
                out.push_str("{\n");
                for (i, (k, v)) in fields.iter().enumerate() {
                    pad(out, indent + 1);
                    write!(out, "\"{k}\": ").unwrap();
                    v.write(out, indent + 1);
                    out.push_str(if i + 1 < fields.len() { ",\n" } else { "\n" });
                }
                pad(out, indent);
                out.push('}');
            }
        }
    }
}

fn pad(out: &mut String, indent: usize) {
    for _ in 0..indent {
        out.push_str("  ");
    }
}

fn string(s: impl ToString) -> Json {
    Json::Str(s.to_string())
}

pub fn export_store(store: &EclStore) -> Vec<u8> {
    let spec = Json::Obj(BTreeMap::from([
        ("directions", Json::Arr(store.spec.directions.iter().map(string).collect())),
        ("origins", Json::Arr(store.spec.origins.iter().map(string).collect())),
        ("s_max", Json::Int(store.spec.s_max as u64)),
    ]));
    let vsam = store
        .vsam_rows()
        .map(|r| {
            Json::Obj(BTreeMap::from([
                ("direction", string(r.direction)),
                ("k_id", Json::Int(r.k_id.0)),
                ("limb", string(r.limb)),
                ("origin", string(r.origin)),
            ]))
        })
        .collect();
    let pose = store
        .pose_rows()
        .map(|r| {
            let values = r
                .values
                .iter()
                .map(|v| v.map_or(Json::Null, Json::Float))
                .collect();
            Json::Obj(BTreeMap::from([
                ("k_id", Json::Int(r.k_id.0)),
                ("p_id", Json::Int(r.p_id as u64)),
                ("values", Json::Arr(values)),
            ]))
        })
        .collect();
    let doc = Json::Obj(BTreeMap::from([
        ("platform", string(&store.platform_name)),
        ("pose", Json::Arr(pose)),
        ("spec", spec),
        ("version", Json::Int(FORMAT_VERSION)),
        ("vsam", Json::Arr(vsam)),
    ]));
    let mut out = String::new();
    doc.write(&mut out, 0);
    out.push('\n');
    out.into_bytes()
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    version: u64,
    platform: String,
    spec: SpecDoc,
    vsam: Vec<VsamDoc>,
    pose: Vec<PoseDoc>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecDoc {
    origins: BTreeSet<Label>,
    directions: BTreeSet<DirectionPull>,
    s_max: u32,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct VsamDoc {
    k_id: u64,
    origin: Label,
    limb: Label,
    direction: DirectionPull,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PoseDoc {
    k_id: u64,
    p_id: u32,
    values: Vec<Option<f64>>,
}

/// Reads a store file. Checks the file's own consistency (keys, sizes, row
/// lengths); checks against a platform are left to [`EclStore::check_against`].
pub fn import_store(bytes: &[u8]) -> Result<EclStore, EclError> {
    let doc: Document = serde_json::from_slice(bytes).map_err(|e| EclError::Format(e.to_string()))?;
    if doc.version != FORMAT_VERSION {
        return Err(EclError::Format(format!("unsupported version {}", doc.version)));
    }
    let integrity = |msg: String| Err(EclError::Integrity(msg));
    if doc.spec.s_max < 1 {
        return integrity("s_max must be at least 1".into());
    }
    let spec = VsamSpec {
        origins: doc.spec.origins,
        directions: doc.spec.directions,
        s_max: doc.spec.s_max,
        kmax: BTreeMap::new(),
    };
    let mut store = EclStore::new(doc.platform, spec);

    for row in doc.vsam {
        let k_id = KId(row.k_id);
        if row.k_id == 0 || store.rows.contains_key(&k_id) {
            return integrity(format!("invalid or repeated k_id {}", row.k_id));
        }
        let key = (row.origin, row.limb, row.direction);
        if store.by_key.contains_key(&key) {
            return integrity(format!(
                "repeated entry ({}, {}, {})",
                row.origin, row.limb, row.direction
            ));
        }
        if !store.spec.origins.contains(&row.origin) || !store.spec.directions.contains(&row.direction) {
            return integrity(format!("k_id {} lies outside the model", row.k_id));
        }
        store.rows.insert(
            k_id,
            VsamRow {
                k_id,
                origin: row.origin,
                limb: row.limb,
                direction: row.direction,
            },
        );
        store.by_key.insert(key, k_id);
        store.next_k_id = store.next_k_id.max(row.k_id + 1);
    }

    let mut grouped: BTreeMap<KId, BTreeMap<u32, Vec<Option<f64>>>> = BTreeMap::new();
    let mut width = None;
    for row in doc.pose {
        let k_id = KId(row.k_id);
        if !store.rows.contains_key(&k_id) {
            return integrity(format!("pose row references missing k_id {}", row.k_id));
        }
        if *width.get_or_insert(row.values.len()) != row.values.len() {
            return integrity("pose rows differ in length".into());
        }
        if grouped.entry(k_id).or_default().insert(row.p_id, row.values).is_some() {
            return integrity(format!("repeated pose key ({}, {})", row.p_id, row.k_id));
        }
    }
    for (k_id, by_size) in grouped {
        let kmax = by_size.len() as u32;
        if by_size.keys().copied().ne(1..=kmax) {
            return integrity(format!("p_id values of k_id {k_id} are not 1..{kmax}"));
        }
        if kmax > store.spec.s_max {
            return integrity(format!("k_id {k_id} stores more than s_max sizes"));
        }
        let key = store.rows[&k_id].key();
        store.spec.kmax.insert(key, kmax);
        store
            .poses
            .insert(k_id, by_size.into_values().map(PartialPose::from).collect());
    }
    Ok(store)
}
