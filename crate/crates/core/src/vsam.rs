//! Virtual space-access models: origins, Laban spatial pulls and reach sizes.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use nalgebra::Vector3;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::eurdf::PlatformDescription;
use crate::label::Label;

/// One of Laban's 27 direction symbols, as a sign triple in the body frame
/// (x = left, y = forward, z = high). `(0, 0, 0)` is place-middle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DirectionPull {
    pub lateral: i8,
    pub sagittal: i8,
    pub vertical: i8,
}

pub const PLACE_MIDDLE: DirectionPull = DirectionPull {
    lateral: 0,
    sagittal: 0,
    vertical: 0,
};

impl DirectionPull {
    /// Panics unless every component is -1, 0 or 1.
    pub fn new(lateral: i8, sagittal: i8, vertical: i8) -> Self {
        assert!(
            [lateral, sagittal, vertical].iter().all(|c| (-1..=1).contains(c)),
            "direction components must be in {{-1, 0, 1}}"
        );
        Self {
            lateral,
            sagittal,
            vertical,
        }
    }

    pub fn is_place_middle(&self) -> bool {
        *self == PLACE_MIDDLE
    }

    pub fn negated(&self) -> Self {
        Self::new(-self.lateral, -self.sagittal, -self.vertical)
    }

    /// The pull with its vertical component dropped, or `None` for the pure
    /// vertical pulls (place-high, place-middle, place-low).
    pub fn ground_projected(&self) -> Option<Self> {
        if self.lateral == 0 && self.sagittal == 0 {
            return None;
        }
        Some(Self::new(self.lateral, self.sagittal, 0))
    }

    pub fn name(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for DirectionPull {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lateral = match self.lateral {
            1 => Some("left"),
            -1 => Some("right"),
            _ => None,
        };
        let sagittal = match self.sagittal {
            1 => Some("forward"),
            -1 => Some("back"),
            _ => None,
        };
        let vertical = match self.vertical {
            1 => "high",
            -1 => "low",
            _ => "middle",
        };
        match (lateral, sagittal) {
            (None, None) => write!(f, "place-{vertical}"),
            (Some(l), None) => write!(f, "{l}-{vertical}"),
            (None, Some(s)) => write!(f, "{s}-{vertical}"),
            (Some(l), Some(s)) => write!(f, "{l}-{s}-{vertical}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown direction name `{0}`")]
pub struct UnknownDirectionName(pub String);

impl FromStr for DirectionPull {
    type Err = UnknownDirectionName;

    /// Accepts the canonical hyphenated names, case-insensitively.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || UnknownDirectionName(s.to_string());
        let lower = s.to_ascii_lowercase();
        let mut tokens: Vec<&str> = lower.split('-').collect();
        let vertical = match tokens.pop().ok_or_else(err)? {
            "high" => 1,
            "middle" => 0,
            "low" => -1,
            _ => return Err(err()),
        };
        let (mut lateral, mut sagittal) = (0, 0);
        match tokens.as_slice() {
            ["place"] => {}
            [l] if *l == "left" || *l == "right" => lateral = if *l == "left" { 1 } else { -1 },
            [s] if *s == "forward" || *s == "back" => sagittal = if *s == "forward" { 1 } else { -1 },
            [l, s] => {
                lateral = match *l {
                    "left" => 1,
                    "right" => -1,
                    _ => return Err(err()),
                };
                sagittal = match *s {
                    "forward" => 1,
                    "back" => -1,
                    _ => return Err(err()),
                };
            }
            _ => return Err(err()),
        }
        Ok(Self::new(lateral, sagittal, vertical))
    }
}

impl Serialize for DirectionPull {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for DirectionPull {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// All 27 direction symbols, place-middle included.
pub fn laban27() -> BTreeSet<DirectionPull> {
    let mut out = BTreeSet::new();
    for l in -1..=1 {
        for s in -1..=1 {
            for v in -1..=1 {
                out.insert(DirectionPull::new(l, s, v));
            }
        }
    }
    out
}

/// Laban's 26 spatial pulls (every direction except place-middle).
pub fn laban26() -> BTreeSet<DirectionPull> {
    let mut all = laban27();
    all.remove(&PLACE_MIDDLE);
    all
}

/// The eight middle-level pulls used for base translation.
pub fn laban8_middle() -> BTreeSet<DirectionPull> {
    laban26().into_iter().filter(|d| d.vertical == 0).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VsamError {
    #[error("place-middle has no direction vector")]
    ZeroDirection,
    #[error("unknown origin {}", .0.map_or("(none given)".to_string(), |l| l.to_string()))]
    UnknownOrigin(Option<Label>),
    #[error("size count must be at least 1, got {0}")]
    InvalidSizeCount(u32),
    #[error("place-middle is not a stored direction")]
    NeutralDirection,
}

/// Unit vector of a pull in the body frame; diagonals are normalised.
pub fn direction_vector(d: DirectionPull) -> Result<Vector3<f64>, VsamError> {
    if d.is_place_middle() {
        return Err(VsamError::ZeroDirection);
    }
    let v = Vector3::new(d.lateral as f64, d.sagittal as f64, d.vertical as f64);
    Ok(v / v.norm())
}

/// A reach size, starting at 1 (near).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct SizeIndex(u32);

impl SizeIndex {
    pub fn new(s: u32) -> Option<Self> {
        (s >= 1).then_some(Self(s))
    }

    pub fn get(self) -> u32 {
        self.0
    }
}

impl TryFrom<u32> for SizeIndex {
    type Error = String;

    fn try_from(s: u32) -> Result<Self, Self::Error> {
        Self::new(s).ok_or_else(|| "size must be at least 1".to_string())
    }
}

impl From<SizeIndex> for u32 {
    fn from(s: SizeIndex) -> u32 {
        s.0
    }
}

impl fmt::Display for SizeIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Key of one databank entry: `(origin, limb, direction)`.
pub type EntryKey = (Label, Label, DirectionPull);

/// Origins, directions and sizes of a space-access model, plus the highest stored
/// size per entry (filled in as poses are recorded).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VsamSpec {
    pub origins: BTreeSet<Label>,
    pub directions: BTreeSet<DirectionPull>,
    pub s_max: u32,
    pub kmax: BTreeMap<EntryKey, u32>,
}

impl VsamSpec {
    /// Sizes `1..=s_max`.
    pub fn sizes(&self) -> impl Iterator<Item = u32> {
        1..=self.s_max
    }

    pub fn kmax(&self, origin: &Label, limb: &Label, direction: &DirectionPull) -> Option<u32> {
        self.kmax.get(&(*origin, *limb, *direction)).copied()
    }
}

/// Builds a model over `platform`. Origins must be joint labels (or core labels,
/// for base translation) present in the platform.
pub fn build_vsam(
    platform: &PlatformDescription,
    origins: impl IntoIterator<Item = Label>,
    directions: impl IntoIterator<Item = DirectionPull>,
    s_max: u32,
) -> Result<VsamSpec, VsamError> {
    let origins: BTreeSet<Label> = origins.into_iter().collect();
    if origins.is_empty() {
        return Err(VsamError::UnknownOrigin(None));
    }
    for o in &origins {
        let known = match o {
            Label::Core(_) | Label::CoreJoint(_) | Label::Distal(_) => platform.labels.contains(o),
            Label::Limb(_) => false,
        };
        if !known {
            return Err(VsamError::UnknownOrigin(Some(*o)));
        }
    }
    if s_max < 1 {
        return Err(VsamError::InvalidSizeCount(s_max));
    }
    let directions: BTreeSet<DirectionPull> = directions.into_iter().collect();
    if directions.contains(&PLACE_MIDDLE) {
        return Err(VsamError::NeutralDirection);
    }
    Ok(VsamSpec {
        origins,
        directions,
        s_max,
        kmax: BTreeMap::new(),
    })
}

/// The default model for a platform: every joint label as an origin, all 26 pulls,
/// plus `c_1` as a translation origin when the platform can locomote.
pub fn default_vsam(platform: &PlatformDescription, s_max: u32) -> Result<VsamSpec, VsamError> {
    let mut origins: BTreeSet<Label> = platform.labels.j();
    if platform.locomotion.is_some() {
        origins.insert(Label::Core(1));
    }
    build_vsam(platform, origins, laban26(), s_max)
}
