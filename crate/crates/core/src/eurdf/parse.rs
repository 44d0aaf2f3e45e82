use std::collections::{BTreeMap, BTreeSet};

use roxmltree::{Document, Node};

use super::tree::{JointKind, JointLimit, JointSpec, LinkSpec, Origin, DEFAULT_INCREMENT};
use super::{EurdfError, KinematicTree, LabelSets, Locomotion, PlatformDescription};
use crate::label::Label;

fn schema(msg: impl Into<String>) -> EurdfError {
    EurdfError::SchemaViolation(msg.into())
}

fn parse_f64(text: &str, what: &str) -> Result<f64, EurdfError> {
    let v: f64 = text
        .trim()
        .parse()
        .map_err(|_| schema(format!("{what}: `{text}` is not a number")))?;
    if !v.is_finite() {
        return Err(schema(format!("{what}: `{text}` is not finite")));
    }
    Ok(v)
}

fn parse_vec3(text: &str, what: &str) -> Result<[f64; 3], EurdfError> {
    let parts: Vec<&str> = text.split_whitespace().collect();
    if parts.len() != 3 {
        return Err(schema(format!("{what}: expected three numbers, got `{text}`")));
    }
    Ok([
        parse_f64(parts[0], what)?,
        parse_f64(parts[1], what)?,
        parse_f64(parts[2], what)?,
    ])
}

fn parse_bool(node: Node, attr: &str) -> Result<bool, EurdfError> {
    match node.attribute(attr) {
        None | Some("false") => Ok(false),
        Some("true") => Ok(true),
        Some(other) => Err(schema(format!("attribute {attr}=`{other}` is not a boolean"))),
    }
}

fn child<'a, 'i>(node: Node<'a, 'i>, tag: &str) -> Option<Node<'a, 'i>> {
    node.children().find(|c| c.has_tag_name(tag))
}

fn required_attr<'a>(node: Node<'a, '_>, attr: &str, ctx: &str) -> Result<&'a str, EurdfError> {
    node.attribute(attr)
        .ok_or_else(|| schema(format!("{ctx}: missing attribute `{attr}`")))
}

fn body_part_tokens(node: Node, ctx: &str) -> Result<Vec<Label>, EurdfError> {
    let bp = child(node, "body_part").ok_or_else(|| schema(format!("{ctx}: missing body_part")))?;
    bp.text()
        .unwrap_or("")
        .split_whitespace()
        .map(|t| t.parse::<Label>().map_err(|e| schema(format!("{ctx}: {e}"))))
        .collect()
}

/// Parses an eURDF document without checking the labeling invariants. Structural
/// problems (bad XML, missing elements, dangling references, non-tree topology) are
/// still errors; label problems are left for [`super::validate`].
pub fn parse_eurdf_unchecked(document: &str) -> Result<PlatformDescription, EurdfError> {
    let doc = Document::parse(document).map_err(|e| EurdfError::MalformedXml(e.to_string()))?;
    let robot = doc.root_element();
    if !robot.has_tag_name("robot") {
        return Err(schema(format!(
            "root element is <{}>, expected <robot>",
            robot.tag_name().name()
        )));
    }
    let name = required_attr(robot, "name", "robot")?.to_string();

    let mut locomotion = None;
    let mut builder = KinematicTree::builder();
    let mut link_labels: Vec<(String, Vec<Label>)> = Vec::new();
    let mut joint_labels: Vec<(String, Vec<Label>)> = Vec::new();

    for node in robot.children().filter(|n| n.is_element()) {
        match node.tag_name().name() {
            "locomotion" => {
                if locomotion.is_some() {
                    return Err(schema("more than one <locomotion> element"));
                }
                match node.attribute("mode") {
                    Some("ground") => {}
                    other => {
                        return Err(schema(format!(
                            "unsupported locomotion mode {other:?} (only `ground`)"
                        )))
                    }
                }
                let quantum = node
                    .attribute("quantum")
                    .map(|q| parse_f64(q, "locomotion quantum"))
                    .transpose()?;
                if quantum.is_some_and(|q| q <= 0.0) {
                    return Err(schema("locomotion quantum must be positive"));
                }
                locomotion = Some(Locomotion { quantum });
            }
            "link" => {
                let lname = required_attr(node, "name", "link")?.to_string();
                let ctx = format!("link `{lname}`");
                let tip = child(node, "tip")
                    .map(|t| parse_vec3(required_attr(t, "xyz", &ctx)?, &ctx))
                    .transpose()?;
                link_labels.push((lname.clone(), body_part_tokens(node, &ctx)?));
                builder = builder.link_spec(LinkSpec {
                    name: lname,
                    tip,
                    center_of_mass: parse_bool(node, "center_of_mass")?,
                    end_effector: parse_bool(node, "end_effector")?,
                });
            }
            "joint" => {
                let jname = required_attr(node, "name", "joint")?.to_string();
                let ctx = format!("joint `{jname}`");
                let kind = match required_attr(node, "type", &ctx)? {
                    "revolute" => JointKind::Revolute,
                    "prismatic" => JointKind::Prismatic,
                    "fixed" => JointKind::Fixed,
                    other => return Err(schema(format!("{ctx}: unsupported type `{other}`"))),
                };
                let link_ref = |tag: &str| -> Result<String, EurdfError> {
                    let n = child(node, tag)
                        .ok_or_else(|| schema(format!("{ctx}: missing <{tag}>")))?;
                    Ok(required_attr(n, "link", &ctx)?.to_string())
                };
                let (parent, child_link) = (link_ref("parent")?, link_ref("child")?);
                let origin = match child(node, "origin") {
                    None => Origin::default(),
                    Some(o) => Origin {
                        xyz: o
                            .attribute("xyz")
                            .map(|v| parse_vec3(v, &ctx))
                            .transpose()?
                            .unwrap_or_default(),
                        rpy: o
                            .attribute("rpy")
                            .map(|v| parse_vec3(v, &ctx))
                            .transpose()?
                            .unwrap_or_default(),
                    },
                };
                let axis = child(node, "axis")
                    .map(|a| parse_vec3(required_attr(a, "xyz", &ctx)?, &ctx))
                    .transpose()?
                    .unwrap_or([1.0, 0.0, 0.0]);
                let limit = match (kind, child(node, "limit")) {
                    (JointKind::Fixed, _) => None,
                    (_, None) => return Err(schema(format!("{ctx}: actuated joint without <limit>"))),
                    (_, Some(l)) => Some(JointLimit {
                        min: parse_f64(required_attr(l, "lower", &ctx)?, &ctx)?,
                        max: parse_f64(required_attr(l, "upper", &ctx)?, &ctx)?,
                        increment: l
                            .attribute("resolution")
                            .map(|r| parse_f64(r, &ctx))
                            .transpose()?
                            .unwrap_or(DEFAULT_INCREMENT),
                    }),
                };
                let neutral = child(node, "neutral")
                    .filter(|_| kind != JointKind::Fixed)
                    .map(|n| parse_f64(required_attr(n, "position", &ctx)?, &ctx))
                    .transpose()?;
                joint_labels.push((jname.clone(), body_part_tokens(node, &ctx)?));
                builder = builder.joint_spec(JointSpec {
                    name: jname,
                    kind,
                    axis,
                    origin,
                    parent,
                    child: child_link,
                    limit,
                    neutral,
                });
            }
            // plain URDF content we do not interpret
            _ => {}
        }
    }

    let tree = builder.build().map_err(|e| schema(e.to_string()))?;
    let mut labels = LabelSets::default();
    for (lname, tokens) in link_labels {
        let id = tree.link_by_name(&lname).expect("link was declared");
        for label in tokens {
            match label {
                Label::Core(_) => {
                    labels.core.entry(label).or_insert_with(BTreeSet::new).insert(id);
                }
                Label::Limb(_) => {
                    labels.limbs.entry(label).or_insert_with(BTreeSet::new).insert(id);
                }
                _ => return Err(schema(format!("link `{lname}`: joint label {label} on a link"))),
            }
        }
    }
    let mut assigned: BTreeMap<Label, String> = BTreeMap::new();
    for (jname, tokens) in joint_labels {
        let id = tree.joint_by_name(&jname).expect("joint was declared");
        for label in tokens {
            if !label.is_joint_label() {
                return Err(schema(format!("joint `{jname}`: link label {label} on a joint")));
            }
            if let Some(prev) = assigned.insert(label, jname.clone()) {
                return Err(schema(format!(
                    "label {label} assigned to both `{prev}` and `{jname}`"
                )));
            }
            labels.joints.insert(label, id);
        }
    }
    Ok(PlatformDescription::new(name, tree, labels, locomotion))
}

/// Parses and validates an eURDF document.
pub fn parse_eurdf(document: &str) -> Result<PlatformDescription, EurdfError> {
    let platform = parse_eurdf_unchecked(document)?;
    let report = platform.validate();
    if report.is_empty() {
        return Ok(platform);
    }
    if report.violations.iter().any(|v| v.code.is_labeling()) {
        Err(EurdfError::Labeling(report))
    } else {
        Err(EurdfError::SchemaViolation(report.to_string()))
    }
}
