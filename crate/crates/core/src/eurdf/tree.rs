use std::collections::{BTreeMap, HashMap};

use nalgebra::{Isometry3, Translation3, UnitQuaternion, Vector3};

/// Joint resolution used when a description does not state one (rad or m).
pub const DEFAULT_INCREMENT: f64 = 0.001;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinkId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct JointId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum JointKind {
    Revolute,
    Prismatic,
    Fixed,
}

impl JointKind {
    pub fn as_str(self) -> &'static str {
        match self {
            JointKind::Revolute => "revolute",
            JointKind::Prismatic => "prismatic",
            JointKind::Fixed => "fixed",
        }
    }
}

/// Rigid offset of a joint frame in its parent link frame (URDF `xyz`/`rpy`).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Origin {
    pub xyz: [f64; 3],
    pub rpy: [f64; 3],
}

impl Origin {
    pub fn translation(xyz: [f64; 3]) -> Self {
        Self {
            xyz,
            rpy: [0.0; 3],
        }
    }

    pub fn isometry(&self) -> Isometry3<f64> {
        let [r, p, y] = self.rpy;
        Isometry3::from_parts(
            Translation3::new(self.xyz[0], self.xyz[1], self.xyz[2]),
            UnitQuaternion::from_euler_angles(r, p, y),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointLimit {
    pub min: f64,
    pub max: f64,
    pub increment: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub id: LinkId,
    pub name: String,
    /// Offset of the link's contact point in its own frame. Its length is the
    /// link's geometric extent beyond the frame origin.
    pub tip: Option<[f64; 3]>,
    pub parent_joint: Option<JointId>,
    pub center_of_mass: bool,
    /// Links at or beyond a terminal effector do not open new joint locations.
    pub end_effector: bool,
}

impl Link {
    pub fn geometry_extent(&self) -> Option<f64> {
        self.tip.map(|t| Vector3::from(t).norm())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Joint {
    pub id: JointId,
    pub name: String,
    pub kind: JointKind,
    pub axis: [f64; 3],
    pub origin: Origin,
    pub parent: LinkId,
    pub child: LinkId,
    pub limit: Option<JointLimit>,
    pub neutral: Option<f64>,
}

impl Joint {
    pub fn is_actuated(&self) -> bool {
        self.kind != JointKind::Fixed
    }

    pub fn unit_axis(&self) -> Vector3<f64> {
        let a = Vector3::from(self.axis);
        let n = a.norm();
        if n > 0.0 {
            a / n
        } else {
            Vector3::z()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TreeError {
    #[error("duplicate link `{0}`")]
    DuplicateLink(String),
    #[error("duplicate joint `{0}`")]
    DuplicateJoint(String),
    #[error("joint `{joint}` references unknown link `{link}`")]
    UnknownLink { joint: String, link: String },
    #[error("link `{0}` has more than one parent joint")]
    MultipleParents(String),
    #[error("no root link (every link has a parent)")]
    NoRoot,
    #[error("multiple root links: {0:?}")]
    MultipleRoots(Vec<String>),
    #[error("links not reachable from the root (cycle): {0:?}")]
    Unreachable(Vec<String>),
}

/// A rooted tree of links and joints. Ids are assigned by a depth-first traversal
/// from the root visiting child joints in name order, so they are independent of
/// declaration order; the root link is always `LinkId(0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KinematicTree {
    links: Vec<Link>,
    joints: Vec<Joint>,
    children: Vec<Vec<JointId>>,
    depth: Vec<usize>,
}

impl KinematicTree {
    pub fn builder() -> TreeBuilder {
        TreeBuilder::default()
    }

    pub fn root(&self) -> LinkId {
        LinkId(0)
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn joints(&self) -> &[Joint] {
        &self.joints
    }

    pub fn link(&self, id: LinkId) -> &Link {
        &self.links[id.0]
    }

    pub fn joint(&self, id: JointId) -> &Joint {
        &self.joints[id.0]
    }

    pub fn child_joints(&self, link: LinkId) -> &[JointId] {
        &self.children[link.0]
    }

    pub fn parent_link(&self, link: LinkId) -> Option<LinkId> {
        self.link(link).parent_joint.map(|j| self.joint(j).parent)
    }

    /// Number of joints between the root and `link`.
    pub fn depth(&self, link: LinkId) -> usize {
        self.depth[link.0]
    }

    pub fn link_by_name(&self, name: &str) -> Option<LinkId> {
        self.links.iter().find(|l| l.name == name).map(|l| l.id)
    }

    pub fn joint_by_name(&self, name: &str) -> Option<JointId> {
        self.joints.iter().find(|j| j.name == name).map(|j| j.id)
    }

    /// `link` and everything below it.
    pub fn descendants(&self, link: LinkId) -> Vec<LinkId> {
        let mut out = vec![link];
        let mut i = 0;
        while i < out.len() {
            for j in self.child_joints(out[i]) {
                out.push(self.joint(*j).child);
            }
            i += 1;
        }
        out
    }

    /// Joints on the path from the root down to `link`, root first.
    pub fn path_to(&self, link: LinkId) -> Vec<JointId> {
        let mut path = Vec::with_capacity(self.depth(link));
        let mut cur = link;
        while let Some(j) = self.link(cur).parent_joint {
            path.push(j);
            cur = self.joint(j).parent;
        }
        path.reverse();
        path
    }
}

/// Link as declared, before ids are assigned.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinkSpec {
    pub name: String,
    pub tip: Option<[f64; 3]>,
    pub center_of_mass: bool,
    pub end_effector: bool,
}

/// Joint as declared, before ids are assigned.
#[derive(Debug, Clone, PartialEq)]
pub struct JointSpec {
    pub name: String,
    pub kind: JointKind,
    pub axis: [f64; 3],
    pub origin: Origin,
    pub parent: String,
    pub child: String,
    pub limit: Option<JointLimit>,
    pub neutral: Option<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct TreeBuilder {
    links: Vec<LinkSpec>,
    joints: Vec<JointSpec>,
}

impl TreeBuilder {
    pub fn link(mut self, name: &str) -> Self {
        self.links.push(LinkSpec {
            name: name.to_string(),
            ..LinkSpec::default()
        });
        self
    }

    pub fn link_spec(mut self, spec: LinkSpec) -> Self {
        self.links.push(spec);
        self
    }

    /// Sets the tip offset of the most recently added link.
    pub fn tip(mut self, xyz: [f64; 3]) -> Self {
        if let Some(l) = self.links.last_mut() {
            l.tip = Some(xyz);
        }
        self
    }

    pub fn center_of_mass(mut self) -> Self {
        if let Some(l) = self.links.last_mut() {
            l.center_of_mass = true;
        }
        self
    }

    pub fn revolute(
        self,
        name: &str,
        parent: &str,
        child: &str,
        xyz: [f64; 3],
        axis: [f64; 3],
        (min, max): (f64, f64),
    ) -> Self {
        self.joint_spec(JointSpec {
            name: name.to_string(),
            kind: JointKind::Revolute,
            axis,
            origin: Origin::translation(xyz),
            parent: parent.to_string(),
            child: child.to_string(),
            limit: Some(JointLimit {
                min,
                max,
                increment: DEFAULT_INCREMENT,
            }),
            neutral: None,
        })
    }

    pub fn fixed(self, name: &str, parent: &str, child: &str, xyz: [f64; 3]) -> Self {
        self.joint_spec(JointSpec {
            name: name.to_string(),
            kind: JointKind::Fixed,
            axis: [1.0, 0.0, 0.0],
            origin: Origin::translation(xyz),
            parent: parent.to_string(),
            child: child.to_string(),
            limit: None,
            neutral: None,
        })
    }

    pub fn joint_spec(mut self, spec: JointSpec) -> Self {
        self.joints.push(spec);
        self
    }

    pub fn build(self) -> Result<KinematicTree, TreeError> {
        let mut link_index: HashMap<&str, usize> = HashMap::new();
        for (i, l) in self.links.iter().enumerate() {
            if link_index.insert(l.name.as_str(), i).is_some() {
                return Err(TreeError::DuplicateLink(l.name.clone()));
            }
        }
        let mut seen_joints: HashMap<&str, ()> = HashMap::new();
        let mut parent_of: Vec<Option<usize>> = vec![None; self.links.len()];
        // child joints per declared link, ordered by joint name
        let mut children: Vec<BTreeMap<&str, usize>> = vec![BTreeMap::new(); self.links.len()];
        for (ji, j) in self.joints.iter().enumerate() {
            if seen_joints.insert(j.name.as_str(), ()).is_some() {
                return Err(TreeError::DuplicateJoint(j.name.clone()));
            }
            let lookup = |name: &str| {
                link_index
                    .get(name)
                    .copied()
                    .ok_or_else(|| TreeError::UnknownLink {
                        joint: j.name.clone(),
                        link: name.to_string(),
                    })
            };
            let (p, c) = (lookup(&j.parent)?, lookup(&j.child)?);
            if parent_of[c].replace(ji).is_some() {
                return Err(TreeError::MultipleParents(j.child.clone()));
            }
            children[p].insert(j.name.as_str(), ji);
        }
        let roots: Vec<usize> = (0..self.links.len())
            .filter(|i| parent_of[*i].is_none())
            .collect();
        let root = match roots.as_slice() {
            [] => return Err(TreeError::NoRoot),
            [r] => *r,
            many => {
                return Err(TreeError::MultipleRoots(
                    many.iter().map(|i| self.links[*i].name.clone()).collect(),
                ))
            }
        };

        // Depth-first preorder; ids follow visit order.
        let mut link_order = Vec::with_capacity(self.links.len());
        let mut joint_order = Vec::with_capacity(self.joints.len());
        let mut stack = vec![root];
        while let Some(l) = stack.pop() {
            link_order.push(l);
            let kids: Vec<usize> = children[l].values().copied().collect();
            for ji in kids.iter().rev() {
                stack.push(link_index[self.joints[*ji].child.as_str()]);
            }
        }
        if link_order.len() != self.links.len() {
            let reached: std::collections::HashSet<usize> = link_order.iter().copied().collect();
            return Err(TreeError::Unreachable(
                (0..self.links.len())
                    .filter(|i| !reached.contains(i))
                    .map(|i| self.links[i].name.clone())
                    .collect(),
            ));
        }
        let mut new_link_id = vec![0usize; self.links.len()];
        for (new, old) in link_order.iter().enumerate() {
            new_link_id[*old] = new;
        }
        // joints in order of their child links (preorder, root has none)
        for old_link in link_order.iter().skip(1) {
            joint_order.push(parent_of[*old_link].expect("non-root link has a parent"));
        }
        let mut new_joint_id = vec![0usize; self.joints.len()];
        for (new, old) in joint_order.iter().enumerate() {
            new_joint_id[*old] = new;
        }

        let links: Vec<Link> = link_order
            .iter()
            .enumerate()
            .map(|(new, old)| {
                let spec = &self.links[*old];
                Link {
                    id: LinkId(new),
                    name: spec.name.clone(),
                    tip: spec.tip,
                    parent_joint: parent_of[*old].map(|j| JointId(new_joint_id[j])),
                    center_of_mass: spec.center_of_mass,
                    end_effector: spec.end_effector,
                }
            })
            .collect();
        let joints: Vec<Joint> = joint_order
            .iter()
            .enumerate()
            .map(|(new, old)| {
                let spec = &self.joints[*old];
                Joint {
                    id: JointId(new),
                    name: spec.name.clone(),
                    kind: spec.kind,
                    axis: spec.axis,
                    origin: spec.origin,
                    parent: LinkId(new_link_id[link_index[spec.parent.as_str()]]),
                    child: LinkId(new_link_id[link_index[spec.child.as_str()]]),
                    limit: spec.limit,
                    neutral: spec.neutral,
                }
            })
            .collect();
        let mut child_lists = vec![Vec::new(); links.len()];
        let mut depth = vec![0usize; links.len()];
        for j in &joints {
            child_lists[j.parent.0].push(j.id);
            depth[j.child.0] = depth[j.parent.0] + 1;
        }
        Ok(KinematicTree {
            links,
            joints,
            children: child_lists,
            depth,
        })
    }
}
