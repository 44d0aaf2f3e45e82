use std::fmt::Write;

use super::{JointKind, PlatformDescription};

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn vec3(v: [f64; 3]) -> String {
    format!("{} {} {}", v[0], v[1], v[2])
}

fn body_part(labels: &[crate::label::Label]) -> String {
    if labels.is_empty() {
        return "<body_part/>".to_string();
    }
    let tokens: Vec<String> = labels.iter().map(|l| l.to_string()).collect();
    format!("<body_part>{}</body_part>", tokens.join(" "))
}

/// Canonical eURDF text: links then joints, each in id order; body-part tokens
/// ordered core, limb, distal. Floats use the shortest representation that parses
/// back to the same value.
pub fn serialize_eurdf(platform: &PlatformDescription) -> String {
    let mut out = String::new();
    let tree = &platform.tree;
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(out, "<robot name=\"{}\">", escape(&platform.name));
    if let Some(loco) = platform.locomotion {
        match loco.quantum {
            Some(q) => {
                let _ = writeln!(out, "  <locomotion mode=\"ground\" quantum=\"{q}\"/>");
            }
            None => out.push_str("  <locomotion mode=\"ground\"/>\n"),
        }
    }
    for link in tree.links() {
        let mut attrs = format!("name=\"{}\"", escape(&link.name));
        if link.center_of_mass {
            attrs.push_str(" center_of_mass=\"true\"");
        }
        if link.end_effector {
            attrs.push_str(" end_effector=\"true\"");
        }
        let _ = writeln!(out, "  <link {attrs}>");
        if let Some(tip) = link.tip {
            let _ = writeln!(out, "    <tip xyz=\"{}\"/>", vec3(tip));
        }
        let _ = writeln!(out, "    {}", body_part(&platform.labels.link_labels(link.id)));
        out.push_str("  </link>\n");
    }
    for joint in tree.joints() {
        let _ = writeln!(
            out,
            "  <joint name=\"{}\" type=\"{}\">",
            escape(&joint.name),
            joint.kind.as_str()
        );
        let _ = writeln!(
            out,
            "    <parent link=\"{}\"/>",
            escape(&tree.link(joint.parent).name)
        );
        let _ = writeln!(
            out,
            "    <child link=\"{}\"/>",
            escape(&tree.link(joint.child).name)
        );
        let _ = writeln!(
            out,
            "    <origin xyz=\"{}\" rpy=\"{}\"/>",
            vec3(joint.origin.xyz),
            vec3(joint.origin.rpy)
        );
        let _ = writeln!(out, "    <axis xyz=\"{}\"/>", vec3(joint.axis));
        if joint.kind != JointKind::Fixed {
            if let Some(l) = joint.limit {
                let _ = writeln!(
                    out,
                    "    <limit lower=\"{}\" upper=\"{}\" resolution=\"{}\"/>",
                    l.min, l.max, l.increment
                );
            }
            if let Some(n) = joint.neutral {
                let _ = writeln!(out, "    <neutral position=\"{n}\"/>");
            }
        }
        let _ = writeln!(out, "    {}", body_part(&platform.labels.joint_labels(joint.id)));
        out.push_str("  </joint>\n");
    }
    out.push_str("</robot>\n");
    out
}
