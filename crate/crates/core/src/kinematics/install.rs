//! Filling a databank without a human in the loop.
//!
//! For every `(limb, direction)` the installer searches the limb's joint grid for
//! the configuration that pushes the limb endpoint furthest along the pull while
//! straying little from it, then picks nested poses along the way there as the
//! smaller sizes. Pulls the limb can barely follow are left out, which is how
//! short distal limbs end up with restricted direction sets.

use std::collections::{BTreeMap, BTreeSet};

use log::{debug, warn};
use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::chain::LimbChain;
use super::KinematicsError;
use crate::ecl::{canonical_value, EclError, EclStore, PartialPose};
use crate::eurdf::PlatformDescription;
use crate::label::Label;
use crate::vsam::{direction_vector, laban8_middle, DirectionPull, VsamSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstallConfig {
    pub restarts: usize,
    pub iterations: usize,
    /// Weight of the displacement component orthogonal to the pull.
    pub orthogonal_penalty: f64,
    pub seed: u64,
    /// Target fraction of the maximal projection per size; empty means
    /// `s / s_max`.
    pub size_fractions: Vec<f64>,
    /// Minimal projection, as a fraction of the chain's reach length.
    pub reach_floor: f64,
    /// Minimal cosine between a stored pose's displacement and its pull.
    pub fidelity_floor: f64,
}

impl Default for InstallConfig {
    fn default() -> Self {
        Self {
            restarts: 16,
            iterations: 200,
            orthogonal_penalty: 0.5,
            seed: 0,
            size_fractions: Vec::new(),
            reach_floor: 0.05,
            fidelity_floor: 0.7,
        }
    }
}

impl InstallConfig {
    fn fractions(&self, s_max: u32) -> Result<Vec<f64>, KinematicsError> {
        if self.size_fractions.is_empty() {
            return Ok((1..=s_max).map(|s| s as f64 / s_max as f64).collect());
        }
        let f = &self.size_fractions;
        let increasing = f.windows(2).all(|w| w[0] < w[1]) && f[0] > 0.0;
        if f.len() != s_max as usize || !increasing || f[f.len() - 1] != 1.0 {
            return Err(KinematicsError::InvalidConfig(format!(
                "size fractions {f:?} must be {s_max} strictly increasing values ending at 1"
            )));
        }
        Ok(f.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Outcome {
    Stored { sizes: u32, max_projection: f64 },
    BelowReach { max_projection: f64, floor: f64 },
    LowFidelity { cosine: f64, max_projection: f64 },
    Translation,
}

impl Outcome {
    /// Projection of the optimiser's best pose onto the pull, when it ran.
    pub fn max_projection(&self) -> Option<f64> {
        match self {
            Outcome::Stored { max_projection, .. }
            | Outcome::BelowReach { max_projection, .. }
            | Outcome::LowFidelity { max_projection, .. } => Some(*max_projection),
            Outcome::Translation => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairOutcome {
    pub origin: Label,
    pub limb: Label,
    pub direction: DirectionPull,
    #[serde(flatten)]
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct InstallReport {
    pub pairs: Vec<PairOutcome>,
    /// Origins the installer has no procedure for (core-internal joints, or core
    /// origins on platforms without locomotion).
    pub skipped_origins: Vec<Label>,
}

impl InstallReport {
    pub fn stored(&self) -> usize {
        self.pairs
            .iter()
            .filter(|p| matches!(p.outcome, Outcome::Stored { .. } | Outcome::Translation))
            .count()
    }

    pub fn skipped(&self) -> usize {
        self.pairs.len() - self.stored()
    }

    /// Number of stored entries per direction.
    pub fn per_direction(&self) -> BTreeMap<DirectionPull, usize> {
        let mut out = BTreeMap::new();
        for p in &self.pairs {
            if matches!(p.outcome, Outcome::Stored { .. } | Outcome::Translation) {
                *out.entry(p.direction).or_insert(0) += 1;
            }
        }
        out
    }
}

/// Relative margin by which each size must out-reach the one below it.
const SIZE_SEPARATION: f64 = 1e-6;

struct Grid {
    min: f64,
    max: f64,
    inc: f64,
    n: i64,
}

impl Grid {
    fn value(&self, k: i64) -> f64 {
        (self.min + k as f64 * self.inc).min(self.max)
    }
}

/// Search problem for one `(limb, direction)`.
struct Problem {
    chain: LimbChain,
    grids: Vec<Grid>,
    home: Vector3<f64>,
    unit: Vector3<f64>,
    penalty: f64,
    /// Neutral values of the free joints.
    neutral: Vec<f64>,
}

#[derive(Clone, Copy)]
struct Eval {
    objective: f64,
    projection: f64,
    cosine: f64,
    magnitude: f64,
}

impl Problem {
    fn eval_values(&self, values: &[f64]) -> Eval {
        let d = self.chain.endpoint(values) - self.home;
        let projection = d.dot(&self.unit);
        let orth = (d - self.unit * projection).norm();
        let magnitude = d.norm();
        Eval {
            objective: projection - self.penalty * orth,
            projection,
            cosine: if magnitude > 1e-12 { projection / magnitude } else { 0.0 },
            magnitude,
        }
    }

    fn values(&self, k: &[i64]) -> Vec<f64> {
        k.iter().zip(&self.grids).map(|(k, g)| g.value(*k)).collect()
    }

    fn eval(&self, k: &[i64]) -> f64 {
        self.eval_values(&self.values(k)).objective
    }

    /// Pattern search on the grid: best single-axis move, then best two-axis
    /// move, halving the step when neither improves. Returns the visited points.
    fn ascend(&self, start: Vec<i64>, iterations: usize) -> (Vec<Vec<i64>>, f64) {
        let dof = self.grids.len();
        let mut steps: Vec<i64> = self.grids.iter().map(|g| (g.n / 4).max(1)).collect();
        let mut cur = start;
        let mut best = self.eval(&cur);
        let mut path = vec![cur.clone()];
        let moved = |cur: &[i64], moves: &[(usize, i64)]| -> Option<Vec<i64>> {
            let mut next = cur.to_vec();
            for (j, delta) in moves {
                next[*j] = (next[*j] + delta).clamp(0, self.grids[*j].n);
            }
            (next != cur).then_some(next)
        };
        for _ in 0..iterations {
            let mut found: Option<(Vec<i64>, f64)> = None;
            let consider = |next: Option<Vec<i64>>, found: &mut Option<(Vec<i64>, f64)>| {
                if let Some(next) = next {
                    let v = self.eval(&next);
                    if v > found.as_ref().map_or(best, |f| f.1) {
                        *found = Some((next, v));
                    }
                }
            };
            for j in 0..dof {
                for sign in [1, -1] {
                    consider(moved(&cur, &[(j, sign * steps[j])]), &mut found);
                }
            }
            if found.is_none() {
                for a in 0..dof {
                    for b in a + 1..dof {
                        for (sa, sb) in [(1, 1), (1, -1), (-1, 1), (-1, -1)] {
                            consider(moved(&cur, &[(a, sa * steps[a]), (b, sb * steps[b])]), &mut found);
                        }
                    }
                }
            }
            match found {
                Some((next, v)) => {
                    cur = next;
                    best = v;
                    path.push(cur.clone());
                }
                None if steps.iter().any(|s| *s > 1) => {
                    for s in &mut steps {
                        *s = (*s / 2).max(1);
                    }
                }
                None => break,
            }
        }
        (path, best)
    }
}

/// Stable per-job seed, so results do not depend on scheduling.
fn job_seed(seed: u64, limb: &Label, direction: &DirectionPull) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for b in format!("{limb}/{direction}").bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h ^ seed.wrapping_mul(0x9e3779b97f4a7c15)
}

struct DirectionResult {
    max_projection: f64,
    outcome: Outcome,
    /// Free-joint values per size, smallest first.
    poses: Vec<Vec<f64>>,
}

struct LimbJob<'a> {
    platform: &'a PlatformDescription,
    limb: Label,
    direction: DirectionPull,
}

fn solve(job: &LimbJob, config: &InstallConfig, fractions: &[f64]) -> Result<DirectionResult, KinematicsError> {
    let p = job.platform;
    let neutral_full = p.neutral();
    let chain = LimbChain::new(p, &job.limb, &neutral_full)?;
    let grids: Vec<Grid> = chain
        .indices
        .iter()
        .map(|i| {
            let d = p.joint_space.dims[*i];
            Grid {
                min: d.min,
                max: d.max,
                inc: d.increment,
                n: ((d.max - d.min) / d.increment + 1e-9).floor() as i64,
            }
        })
        .collect();
    let neutral: Vec<f64> = chain.indices.iter().map(|i| neutral_full[*i]).collect();
    let problem = Problem {
        home: chain.endpoint(&neutral),
        unit: direction_vector(job.direction).map_err(|_| KinematicsError::ZeroDirection)?,
        penalty: config.orthogonal_penalty,
        chain,
        grids,
        neutral,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(job_seed(config.seed, &job.limb, &job.direction));
    let near_neutral: Vec<i64> = problem
        .neutral
        .iter()
        .zip(&problem.grids)
        .map(|(v, g)| (((v - g.min) / g.inc).round() as i64).clamp(0, g.n))
        .collect();
    let mut best: Option<(Vec<Vec<i64>>, f64)> = None;
    for r in 0..config.restarts.max(1) {
        let start = if r == 0 {
            near_neutral.clone()
        } else {
            problem.grids.iter().map(|g| rng.gen_range(0..=g.n)).collect()
        };
        let (path, value) = problem.ascend(start, config.iterations);
        if best.as_ref().map_or(true, |b| value > b.1) {
            best = Some((path, value));
        }
    }
    let (path, _) = best.expect("at least one restart");
    let top = problem.values(path.last().expect("path holds its start"));
    let top_eval = problem.eval_values(&top);
    let max_projection = top_eval.projection;

    let floor = config.reach_floor * reach_of_chain(p, &job.limb);
    if max_projection < floor {
        return Ok(DirectionResult {
            max_projection,
            outcome: Outcome::BelowReach { max_projection, floor },
            poses: Vec::new(),
        });
    }
    if top_eval.cosine < config.fidelity_floor {
        return Ok(DirectionResult {
            max_projection,
            outcome: Outcome::LowFidelity {
                cosine: top_eval.cosine,
                max_projection,
            },
            poses: Vec::new(),
        });
    }

    // Candidates: the ascent's visited points plus the straight joint-space path
    // from neutral to the optimum, sampled at grid resolution.
    let mut candidates: Vec<Vec<f64>> = path.iter().map(|k| problem.values(k)).collect();
    let samples = top
        .iter()
        .zip(&problem.neutral)
        .zip(&problem.grids)
        .map(|((t, n), g)| ((t - n).abs() / g.inc).ceil() as usize)
        .max()
        .unwrap_or(0)
        .clamp(1, 4000);
    for s in 1..=samples {
        let tau = s as f64 / samples as f64;
        candidates.push(
            problem
                .neutral
                .iter()
                .zip(&top)
                .map(|(n, t)| if s == samples { *t } else { n + tau * (t - n) })
                .collect(),
        );
    }
    // Scored as the store will keep them, so the size ordering survives rounding.
    for c in &mut candidates {
        for v in c.iter_mut() {
            *v = canonical_value(*v);
        }
    }
    let scored: Vec<(Eval, f64, &Vec<f64>)> = candidates
        .iter()
        .map(|c| {
            let dist = c
                .iter()
                .zip(&problem.neutral)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>();
            (problem.eval_values(c), dist, c)
        })
        .collect();

    let mut chosen: Vec<Vec<f64>> = Vec::new();
    let mut ceiling = f64::INFINITY;
    for f in fractions.iter().rev() {
        let target = f * max_projection;
        let pick = scored
            .iter()
            .filter(|(e, _, _)| {
                e.projection > 0.0 && e.cosine >= config.fidelity_floor && e.magnitude < ceiling * (1.0 - SIZE_SEPARATION)
            })
            .min_by(|a, b| {
                let da = (a.0.projection - target).abs();
                let db = (b.0.projection - target).abs();
                da.total_cmp(&db).then(a.1.total_cmp(&b.1))
            });
        let Some((e, _, c)) = pick else { break };
        ceiling = e.magnitude;
        chosen.push((*c).clone());
    }
    chosen.reverse();
    Ok(DirectionResult {
        max_projection,
        outcome: Outcome::Stored {
            sizes: chosen.len() as u32,
            max_projection,
        },
        poses: chosen,
    })
}

/// Reach length of the whole chain a limb label belongs to.
fn reach_of_chain(platform: &PlatformDescription, limb: &Label) -> f64 {
    let outer = match limb {
        Label::Limb(idx) => Label::limb(idx.chain, 1),
        other => *other,
    };
    platform
        .reach_length(&outer)
        .or_else(|_| platform.reach_length(limb))
        .unwrap_or(0.0)
}

/// Limb labels an origin is paired with: its own limb and every deeper one in the
/// same chain.
fn limbs_for_origin(platform: &PlatformDescription, origin: &Label) -> Vec<Label> {
    let Label::Distal(idx) = origin else {
        return Vec::new();
    };
    platform
        .labels
        .l()
        .into_iter()
        .filter(|l| matches!(l, Label::Limb(i) if i.chain == idx.chain && i.depth >= idx.depth))
        .collect()
}

/// Builds a databank for `spec` by optimisation.
pub fn auto_install(
    platform: &PlatformDescription,
    spec: &VsamSpec,
    config: &InstallConfig,
) -> Result<(EclStore, InstallReport), KinematicsError> {
    let fractions = config.fractions(spec.s_max)?;
    let mut spec = spec.clone();
    spec.kmax.clear();
    let mut store = EclStore::new(&platform.name, spec.clone());
    let mut report = InstallReport::default();

    let mut pairs: Vec<(Label, Label)> = Vec::new();
    for origin in &spec.origins {
        match origin {
            Label::Distal(_) => pairs.extend(limbs_for_origin(platform, origin).into_iter().map(|l| (*origin, l))),
            Label::Core(_) if platform.locomotion.is_some() => {}
            _ => report.skipped_origins.push(*origin),
        }
    }
    let limbs: BTreeSet<Label> = pairs.iter().map(|(_, l)| *l).collect();
    let jobs: Vec<LimbJob> = limbs
        .iter()
        .flat_map(|l| {
            spec.directions.iter().map(move |d| LimbJob {
                platform,
                limb: *l,
                direction: *d,
            })
        })
        .collect();
    let results: Vec<DirectionResult> = jobs
        .par_iter()
        .map(|job| solve(job, config, &fractions))
        .collect::<Result<_, _>>()?;
    let results: BTreeMap<(Label, DirectionPull), DirectionResult> = jobs
        .iter()
        .map(|j| (j.limb, j.direction))
        .zip(results)
        .collect();

    for limb in &limbs {
        let any_positive = spec
            .directions
            .iter()
            .any(|d| results[&(*limb, *d)].max_projection > 0.0);
        if !any_positive {
            return Err(KinematicsError::InstallFailure(*limb));
        }
    }

    let neutral = platform.neutral();
    for origin in &spec.origins {
        if origin.is_core() && platform.locomotion.is_some() {
            for d in laban8_middle().intersection(&spec.directions) {
                store.insert_entry(platform, *origin, *origin, *d)?;
                report.pairs.push(PairOutcome {
                    origin: *origin,
                    limb: *origin,
                    direction: *d,
                    outcome: Outcome::Translation,
                });
            }
            continue;
        }
        for (o, limb) in pairs.iter().filter(|(o, _)| o == origin) {
            let support = platform.support(limb).map_err(|_| KinematicsError::UnknownLabel(*limb))?;
            let chain = LimbChain::new(platform, limb, &neutral)?;
            for d in &spec.directions {
                let result = &results[&(*limb, *d)];
                let outcome = result.outcome.clone();
                // The optimum itself always qualifies as the largest size, so a
                // stored outcome never comes with an empty pose list.
                if !result.poses.is_empty() {
                    let k = store.insert_entry(platform, *o, *limb, *d)?;
                    for free in &result.poses {
                        let mut q = neutral.clone();
                        for (i, v) in chain.indices.iter().zip(free) {
                            q[*i] = *v;
                        }
                        store.append_pose(platform, k, &PartialPose::restricted(&q, &support))?;
                    }
                }
                debug!("{limb} @ {o} -> {d}: {outcome:?}");
                report.pairs.push(PairOutcome {
                    origin: *o,
                    limb: *limb,
                    direction: *d,
                    outcome,
                });
            }
        }
    }
    Ok((store, report))
}

/// One entry of a recorded-poses file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordedEntry {
    pub origin: Label,
    pub limb: Label,
    pub direction: DirectionPull,
    /// Poses in increasing size order, in joint-space order.
    pub poses: Vec<Vec<Option<f64>>>,
}

/// Builds a databank from poses recorded by hand. Values outside the limb's
/// support are dropped with a warning; the returned strings list those drops.
pub fn record_install(
    platform: &PlatformDescription,
    spec: &VsamSpec,
    bytes: &[u8],
) -> Result<(EclStore, Vec<String>), KinematicsError> {
    let entries: Vec<RecordedEntry> =
        serde_json::from_slice(bytes).map_err(|e| KinematicsError::Format(e.to_string()))?;
    let mut spec = spec.clone();
    spec.kmax.clear();
    let mut store = EclStore::new(&platform.name, spec);
    let mut warnings = Vec::new();
    for entry in entries {
        let k = store.insert_entry(platform, entry.origin, entry.limb, entry.direction)?;
        let support = platform
            .support(&entry.limb)
            .map_err(|_| KinematicsError::UnknownLabel(entry.limb))?;
        for (n, values) in entry.poses.into_iter().enumerate() {
            if values.len() != platform.m() {
                return Err(EclError::LengthMismatch {
                    expected: platform.m(),
                    found: values.len(),
                }
                .into());
            }
            let mut pose = PartialPose::from(values);
            for (i, v) in pose.values.iter_mut().enumerate() {
                if v.is_some() && !support.contains(&i) {
                    let joint = &platform.tree.joint(platform.joint_space.dims[i].joint).name;
                    let msg = format!(
                        "{} @ {} -> {} size {}: dropped value for `{joint}` outside {}",
                        entry.limb,
                        entry.origin,
                        entry.direction,
                        n + 1,
                        entry.limb
                    );
                    warn!("{msg}");
                    warnings.push(msg);
                    *v = None;
                }
            }
            store.append_pose(platform, k, &pose)?;
        }
    }
    Ok((store, warnings))
}
