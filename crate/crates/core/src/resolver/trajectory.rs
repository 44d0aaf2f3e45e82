use serde::{Deserialize, Serialize};

use super::{compose, overlay, CommandLine, Pose, ResolveError, ResolvedTarget};
use crate::ecl::EclStore;
use crate::eurdf::PlatformDescription;

pub const DEFAULT_DURATION: f64 = 2.0;
pub const DEFAULT_STEPS: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryStep {
    /// Seconds from the start of the trajectory.
    pub t: f64,
    pub q: Pose,
    /// Base position, metres, in the body frame of the starting configuration.
    pub base: [f64; 3],
    /// Index of the command line this step belongs to.
    pub segment: usize,
}

/// Serialized as the bare array of steps.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Trajectory {
    pub steps: Vec<TrajectoryStep>,
}

impl Trajectory {
    pub fn duration(&self) -> f64 {
        self.steps.last().map_or(0.0, |s| s.t)
    }

    pub fn first(&self) -> Option<&TrajectoryStep> {
        self.steps.first()
    }

    pub fn last(&self) -> Option<&TrajectoryStep> {
        self.steps.last()
    }

    /// Appends `next`, dropping its first step when it repeats this trajectory's
    /// last one, and shifting its times to follow on.
    pub fn extend(&mut self, next: Trajectory) {
        let offset = self.duration();
        let skip = usize::from(!self.steps.is_empty());
        self.steps.extend(next.steps.into_iter().skip(skip).map(|mut s| {
            s.t += offset;
            s
        }));
    }

    /// Pose and base at time `t`, linearly interpolated between the bracketing
    /// steps and clamped to the trajectory's span.
    pub fn sample(&self, t: f64) -> Option<(Pose, [f64; 3])> {
        let first = self.steps.first()?;
        if t <= first.t {
            return Some((first.q.clone(), first.base));
        }
        let i = self.steps.partition_point(|s| s.t <= t);
        if i >= self.steps.len() {
            let last = self.steps.last()?;
            return Some((last.q.clone(), last.base));
        }
        let (a, b) = (&self.steps[i - 1], &self.steps[i]);
        let tau = (t - a.t) / (b.t - a.t);
        Some((
            Pose(lerp_clamped(&a.q, &b.q, tau)),
            std::array::from_fn(|k| a.base[k] + tau * (b.base[k] - a.base[k])),
        ))
    }
}

/// Per-joint linear blend, kept inside the interval spanned by the endpoints.
fn lerp_clamped(a: &[f64], b: &[f64], tau: f64) -> Vec<f64> {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let v = (1.0 - tau) * x + tau * y;
            v.clamp(x.min(*y), x.max(*y))
        })
        .collect()
}

/// Samples `steps` uniformly spaced states from `start` to the target applied over
/// it. The first and last states are the endpoints themselves.
pub fn interpolate(
    platform: &PlatformDescription,
    start: &Pose,
    target: &ResolvedTarget,
    steps: usize,
    duration: f64,
) -> Result<Trajectory, ResolveError> {
    if steps < 2 || !(duration > 0.0) || !duration.is_finite() {
        return Err(ResolveError::InvalidCommand(format!(
            "need at least 2 steps and a positive duration, got {steps} steps over {duration} s"
        )));
    }
    start.check(platform)?;
    let goal = overlay(platform, start, &target.articulation)?;
    let offset = target.translation.map(|t| t.offset());
    let last = steps - 1;
    let steps = (0..steps)
        .map(|k| {
            let tau = k as f64 / last as f64;
            let q = match k {
                0 => start.clone(),
                k if k == last => goal.clone(),
                _ => Pose(lerp_clamped(start, &goal, tau)),
            };
            let base = match offset {
                None => [0.0; 3],
                Some(o) if k == last => [o.x, o.y, o.z],
                Some(o) => [tau * o.x, tau * o.y, tau * o.z],
            };
            TrajectoryStep {
                t: if k == last { duration } else { tau * duration },
                q,
                base,
                segment: 0,
            }
        })
        .collect();
    Ok(Trajectory { steps })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExecOptions {
    pub steps: usize,
    pub duration: f64,
}

impl Default for ExecOptions {
    fn default() -> Self {
        Self {
            steps: DEFAULT_STEPS,
            duration: DEFAULT_DURATION,
        }
    }
}

/// Where a command sequence has got to: the current pose and base position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceState {
    pub pose: Pose,
    pub base: [f64; 3],
}

impl SequenceState {
    pub fn new(pose: Pose) -> Self {
        Self {
            pose,
            base: [0.0; 3],
        }
    }
}

/// Resolves one (possibly compound) line against `state` and returns the
/// target with its trajectory, in absolute base coordinates. The trajectory's
/// last step is the next state.
pub fn execute_line(
    store: &EclStore,
    platform: &PlatformDescription,
    line: &CommandLine,
    state: &SequenceState,
    options: ExecOptions,
) -> Result<(ResolvedTarget, Trajectory), ResolveError> {
    let target = compose(store, platform, &line.commands, &state.pose)?;
    let mut traj = interpolate(platform, &state.pose, &target, options.steps, options.duration)?;
    for s in &mut traj.steps {
        for k in 0..3 {
            s.base[k] += state.base[k];
        }
    }
    Ok((target, traj))
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("line {line}: {error}")]
pub struct ExecError {
    pub line: usize,
    pub error: ResolveError,
}

/// Runs lines one after another, each starting where the previous one ended,
/// and concatenates their trajectories.
pub fn execute_sequence(
    store: &EclStore,
    platform: &PlatformDescription,
    lines: &[CommandLine],
    start: SequenceState,
    options: ExecOptions,
) -> Result<Trajectory, ExecError> {
    let mut state = start;
    let mut out = Trajectory::default();
    if lines.is_empty() {
        out.steps.push(TrajectoryStep {
            t: 0.0,
            q: state.pose,
            base: state.base,
            segment: 0,
        });
        return Ok(out);
    }
    for (i, line) in lines.iter().enumerate() {
        let (_, mut traj) = execute_line(store, platform, line, &state, options).map_err(|error| ExecError {
            line: line.line,
            error,
        })?;
        for s in &mut traj.steps {
            s.segment = i;
        }
        let last = traj.last().expect("at least two steps");
        state = SequenceState {
            pose: last.q.clone(),
            base: last.base,
        };
        out.extend(traj);
    }
    Ok(out)
}
