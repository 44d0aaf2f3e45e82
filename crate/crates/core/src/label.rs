//! Body-part labels.
//!
//! Labels come in four flavours:
//!
//! * `c_<n>`: a core part (the linkage that translates when the platform locomotes),
//! * `distal_<n>`: an actuated joint internal to the core,
//! * `limb_<c><d>`: the subtree of chain `c` starting at nesting depth `d`,
//! * `distal_<c><d>`: the joint location that roots `limb_<c><d>`.
//!
//! Chain and depth indices are single digits in the common case (`limb_23`). When
//! either index reaches 10 the two are separated by an underscore (`limb_12_3`).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Chain number and nesting depth of a limb or distal label, both starting at 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LimbIndex {
    pub chain: u32,
    pub depth: u32,
}

impl LimbIndex {
    pub fn new(chain: u32, depth: u32) -> Self {
        Self { chain, depth }
    }

    /// The index one level deeper in the same chain.
    pub fn deeper(self) -> Self {
        Self {
            chain: self.chain,
            depth: self.depth + 1,
        }
    }

    fn suffix(self) -> String {
        if self.chain < 10 && self.depth < 10 {
            format!("{}{}", self.chain, self.depth)
        } else {
            format!("{}_{}", self.chain, self.depth)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    Core(u32),
    CoreJoint(u32),
    Limb(LimbIndex),
    Distal(LimbIndex),
}

impl Label {
    pub fn limb(chain: u32, depth: u32) -> Self {
        Label::Limb(LimbIndex::new(chain, depth))
    }

    pub fn distal(chain: u32, depth: u32) -> Self {
        Label::Distal(LimbIndex::new(chain, depth))
    }

    /// Labels that name sets of links (`c_*` and `limb_*`).
    pub fn is_link_label(&self) -> bool {
        matches!(self, Label::Core(_) | Label::Limb(_))
    }

    /// Labels that name joint locations (`distal_*`).
    pub fn is_joint_label(&self) -> bool {
        matches!(self, Label::CoreJoint(_) | Label::Distal(_))
    }

    pub fn is_core(&self) -> bool {
        matches!(self, Label::Core(_))
    }

    /// The distal label paired with a limb label, and vice versa.
    pub fn paired(&self) -> Option<Label> {
        match *self {
            Label::Limb(i) => Some(Label::Distal(i)),
            Label::Distal(i) => Some(Label::Limb(i)),
            _ => None,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Label::Core(n) => write!(f, "c_{n}"),
            Label::CoreJoint(n) => write!(f, "distal_{n}"),
            Label::Limb(i) => write!(f, "limb_{}", i.suffix()),
            Label::Distal(i) => write!(f, "distal_{}", i.suffix()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid body-part label `{0}`")]
pub struct LabelParseError(pub String);

fn parse_positive(s: &str) -> Option<u32> {
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) || s.starts_with('0') {
        return None;
    }
    s.parse().ok().filter(|&n| n > 0)
}

fn parse_index(s: &str) -> Option<LimbIndex> {
    if let Some((c, d)) = s.split_once('_') {
        let (chain, depth) = (parse_positive(c)?, parse_positive(d)?);
        // The underscore form is only canonical when a component has two digits.
        if chain < 10 && depth < 10 {
            return None;
        }
        return Some(LimbIndex::new(chain, depth));
    }
    let b = s.as_bytes();
    if b.len() != 2 {
        return None;
    }
    let chain = parse_positive(&s[..1])?;
    let depth = parse_positive(&s[1..])?;
    Some(LimbIndex::new(chain, depth))
}

impl FromStr for Label {
    type Err = LabelParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || LabelParseError(s.to_string());
        if let Some(rest) = s.strip_prefix("c_") {
            return parse_positive(rest).map(Label::Core).ok_or_else(err);
        }
        if let Some(rest) = s.strip_prefix("limb_") {
            return parse_index(rest).map(Label::Limb).ok_or_else(err);
        }
        if let Some(rest) = s.strip_prefix("distal_") {
            if rest.len() == 1 {
                return parse_positive(rest).map(Label::CoreJoint).ok_or_else(err);
            }
            return parse_index(rest).map(Label::Distal).ok_or_else(err);
        }
        Err(err())
    }
}

impl Serialize for Label {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_compact_and_separated_labels() {
        assert_eq!("c_1".parse::<Label>().unwrap(), Label::Core(1));
        assert_eq!("distal_1".parse::<Label>().unwrap(), Label::CoreJoint(1));
        assert_eq!("limb_23".parse::<Label>().unwrap(), Label::limb(2, 3));
        assert_eq!("distal_51".parse::<Label>().unwrap(), Label::distal(5, 1));
        assert_eq!("limb_12_3".parse::<Label>().unwrap(), Label::limb(12, 3));
    }

    #[test]
    fn rejects_malformed_labels() {
        for bad in ["", "c_", "c_0", "limb_1", "limb_123", "limb_1_2", "limb_01", "arm", "distal_", "distal_0"] {
            assert!(bad.parse::<Label>().is_err(), "{bad}");
        }
    }

    #[test]
    fn pairing() {
        assert_eq!(Label::limb(2, 1).paired(), Some(Label::distal(2, 1)));
        assert_eq!(Label::Core(1).paired(), None);
    }

    proptest! {
        #[test]
        fn display_round_trips(kind in 0u8..4, a in 1u32..40, b in 1u32..40) {
            let label = match kind {
                0 => Label::Core(a),
                1 => Label::CoreJoint(a.min(9)),
                2 => Label::limb(a, b),
                _ => Label::distal(a, b),
            };
            prop_assert_eq!(label.to_string().parse::<Label>().unwrap(), label);
        }
    }
}
