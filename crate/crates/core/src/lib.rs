//! Platform-invariant spatial commands for articulated robots.
//!
//! A command names a body part, an origin joint, one of Laban's spatial pulls and
//! a reach size: `limb_11 @ distal_11 -> left-high * 3`. The crate maps such
//! commands onto full joint configurations of any platform whose description
//! carries overlapping body-part labels:
//!
//! * [`eurdf`]: labeled platform descriptions (parse, validate, derive, serialize),
//! * [`vsam`]: the direction vocabulary and size model,
//! * [`ecl`]: the pose databank keyed by `(origin, limb, direction)` and size,
//! * [`resolver`]: command parsing, resolution, composition and interpolation,
//! * [`kinematics`]: forward kinematics, direction verification and databank
//!   installation.

pub mod ecl;
pub mod eurdf;
pub mod fixtures;
pub mod kinematics;
pub mod label;
pub mod resolver;
pub mod vsam;

pub use ecl::{join_poses, EclError, EclStore, KId, PartialPose};
pub use eurdf::{parse_eurdf, serialize_eurdf, PlatformDescription};
pub use label::{Label, LimbIndex};
pub use resolver::{CommandQuery, Pose, ResolvedTarget, Trajectory};
pub use vsam::{DirectionPull, VsamSpec};
