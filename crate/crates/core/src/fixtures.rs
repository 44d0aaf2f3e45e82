//! Platform descriptions shipped with the crate.
//!
//! `fig3_example`, `baxter`, `nao`, `youbot` and `khepera` are the reference
//! platforms; `two_link`, `planar_1dof` and `planar_2dof` are small chains used as
//! closed-form and brute-force oracles.

use crate::eurdf::{parse_eurdf, PlatformDescription};

pub const FIG3_EXAMPLE: &str = include_str!("../fixtures/fig3_example.eurdf");
pub const BAXTER: &str = include_str!("../fixtures/baxter.eurdf");
pub const NAO: &str = include_str!("../fixtures/nao.eurdf");
pub const YOUBOT: &str = include_str!("../fixtures/youbot.eurdf");
pub const KHEPERA: &str = include_str!("../fixtures/khepera.eurdf");
pub const TWO_LINK: &str = include_str!("../fixtures/two_link.eurdf");
pub const PLANAR_1DOF: &str = include_str!("../fixtures/planar_1dof.eurdf");
pub const PLANAR_2DOF: &str = include_str!("../fixtures/planar_2dof.eurdf");

/// `(file stem, document)` for every shipped fixture.
pub const SOURCES: [(&str, &str); 8] = [
    ("fig3_example", FIG3_EXAMPLE),
    ("baxter", BAXTER),
    ("nao", NAO),
    ("youbot", YOUBOT),
    ("khepera", KHEPERA),
    ("two_link", TWO_LINK),
    ("planar_1dof", PLANAR_1DOF),
    ("planar_2dof", PLANAR_2DOF),
];

fn load(doc: &str) -> PlatformDescription {
    parse_eurdf(doc).expect("shipped fixture is valid")
}

pub fn by_name(name: &str) -> Option<PlatformDescription> {
    SOURCES
        .iter()
        .find(|(stem, _)| *stem == name)
        .map(|(_, doc)| load(doc))
}

pub fn fig3() -> PlatformDescription {
    load(FIG3_EXAMPLE)
}

pub fn baxter() -> PlatformDescription {
    load(BAXTER)
}

pub fn nao() -> PlatformDescription {
    load(NAO)
}

pub fn youbot() -> PlatformDescription {
    load(YOUBOT)
}

pub fn khepera() -> PlatformDescription {
    load(KHEPERA)
}

pub fn two_link() -> PlatformDescription {
    load(TWO_LINK)
}

pub fn planar_1dof() -> PlatformDescription {
    load(PLANAR_1DOF)
}

pub fn planar_2dof() -> PlatformDescription {
    load(PLANAR_2DOF)
}

/// The five reference platforms.
pub fn reference() -> Vec<PlatformDescription> {
    SOURCES[..5].iter().map(|(_, d)| load(d)).collect()
}

/// Every shipped fixture, reference platforms first.
pub fn all() -> Vec<PlatformDescription> {
    SOURCES.iter().map(|(_, d)| load(d)).collect()
}
