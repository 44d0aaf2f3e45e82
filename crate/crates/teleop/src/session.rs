//! One operator's view of a platform: a pose that commands move, played out
//! over time on a fixed tick.

use std::collections::VecDeque;
use std::sync::{Arc, Mutex, MutexGuard, Weak};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use tokio::sync::watch;
use uuid::Uuid;

use kinesphere::kinematics::{forward_kinematics, FrameTransform};
use kinesphere::resolver::{
    execute_line, parse_commands, CommandLine, ExecOptions, SequenceState, TranslationDirective,
};
use kinesphere::{CommandQuery, EclStore, PartialPose, PlatformDescription, Pose, Trajectory};

use crate::WIRE_VERSION;

/// A platform together with the databank that drives it. Shared read-only by
/// every session on it.
#[derive(Debug)]
pub struct Loaded {
    pub platform: PlatformDescription,
    pub store: EclStore,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServiceConfig {
    /// State messages per second of session time.
    pub tick_hz: f64,
    /// Session seconds per wall-clock second. Tests run faster than real time.
    pub speed: f64,
    pub exec: ExecOptions,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            tick_hz: 20.0,
            speed: 1.0,
            exec: ExecOptions::default(),
        }
    }
}

impl ServiceConfig {
    fn period(&self) -> Duration {
        Duration::from_secs_f64(1.0 / (self.tick_hz * self.speed))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateMessage {
    pub v: u32,
    pub seq: u64,
    /// Session time, seconds.
    pub t: f64,
    pub pose: Pose,
    pub base: [f64; 3],
    /// Link frames for `pose`, indexed like the catalog's `links`, relative to
    /// the base.
    pub frames: Vec<FrameTransform>,
    /// Command lines not yet finished, including the one playing.
    pub queued: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub t: f64,
    pub text: String,
    pub commands: Vec<CommandQuery>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireError {
    pub kind: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineResolution {
    pub line: usize,
    pub text: String,
    pub articulation: PartialPose,
    pub translation: Option<TranslationDirective>,
    pub goal: Pose,
    pub base: [f64; 3],
    pub duration: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Resolution {
    pub lines: Vec<LineResolution>,
    /// Where the session ends up once everything queued has played.
    pub goal: Pose,
    pub base: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommandResponse {
    pub v: u32,
    pub accepted: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<WireError>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<Resolution>,
}

impl CommandResponse {
    fn rejected(error: WireError) -> Self {
        Self {
            v: WIRE_VERSION,
            accepted: false,
            error: Some(error),
            resolution: None,
        }
    }
}

struct Playback {
    traj: Trajectory,
    elapsed: f64,
}

struct Core {
    clock: f64,
    seq: u64,
    current: SequenceState,
    /// State after every accepted command has played; new commands resolve
    /// against it.
    goal: SequenceState,
    active: Option<Playback>,
    queue: VecDeque<Trajectory>,
    history: Vec<HistoryEntry>,
}

impl Core {
    fn queued(&self) -> usize {
        self.queue.len() + usize::from(self.active.is_some())
    }

    fn advance(&mut self, dt: f64) {
        self.clock += dt;
        let mut left = dt;
        while let Some(play) = self.active.as_mut() {
            play.elapsed += left;
            let duration = play.traj.duration();
            if play.elapsed < duration {
                let (pose, base) = play.traj.sample(play.elapsed).expect("non-empty trajectory");
                self.current = SequenceState { pose, base };
                return;
            }
            left = play.elapsed - duration;
            let last = play.traj.last().expect("non-empty trajectory");
            self.current = SequenceState {
                pose: last.q.clone(),
                base: last.base,
            };
            self.active = self.queue.pop_front().map(|traj| Playback { traj, elapsed: 0.0 });
        }
    }
}

pub struct Session {
    pub id: Uuid,
    pub loaded: Arc<Loaded>,
    config: ServiceConfig,
    core: Mutex<Core>,
    states: watch::Sender<Arc<StateMessage>>,
}

impl Session {
    /// A session at the neutral pose with its base at the origin. Call
    /// [`spawn_ticker`] to start playback.
    pub fn new(loaded: Arc<Loaded>, config: ServiceConfig) -> Arc<Self> {
        let start = SequenceState::new(Pose::neutral(&loaded.platform));
        let core = Core {
            clock: 0.0,
            seq: 0,
            current: start.clone(),
            goal: start,
            active: None,
            queue: VecDeque::new(),
            history: Vec::new(),
        };
        let first = state_message(&loaded.platform, &core);
        Arc::new(Self {
            id: Uuid::new_v4(),
            loaded,
            config,
            core: Mutex::new(core),
            states: watch::channel(Arc::new(first)).0,
        })
    }

    fn lock(&self) -> MutexGuard<'_, Core> {
        self.core.lock().unwrap_or_else(|e| e.into_inner())
    }

    fn publish(&self, core: &mut Core) {
        core.seq += 1;
        self.states
            .send_replace(Arc::new(state_message(&self.loaded.platform, core)));
    }

    /// Advances session time by one tick and publishes the new state.
    pub fn tick(&self) {
        let mut core = self.lock();
        core.advance(1.0 / self.config.tick_hz);
        self.publish(&mut core);
    }

    pub fn latest(&self) -> Arc<StateMessage> {
        self.states.borrow().clone()
    }

    /// Receiver whose current value is the latest state.
    pub fn subscribe(&self) -> watch::Receiver<Arc<StateMessage>> {
        self.states.subscribe()
    }

    pub fn history(&self) -> Vec<HistoryEntry> {
        self.lock().history.clone()
    }

    pub fn submit_text(&self, text: &str) -> CommandResponse {
        match parse_commands(text) {
            Ok(lines) => self.submit(&lines),
            Err(e) => CommandResponse::rejected(WireError {
                kind: e.kind().into(),
                message: e.to_string(),
                line: Some(e.line()),
            }),
        }
    }

    /// Resolves every line in order, each from the goal of the one before.
    /// Either all lines are queued or none is.
    pub fn submit(&self, lines: &[CommandLine]) -> CommandResponse {
        if lines.is_empty() {
            return CommandResponse::rejected(WireError {
                kind: "InvalidCommand".into(),
                message: "no commands".into(),
                line: None,
            });
        }
        let Loaded { platform, store } = &*self.loaded;
        let mut core = self.lock();
        let mut state = core.goal.clone();
        let mut trajectories = Vec::with_capacity(lines.len());
        let mut resolved = Vec::with_capacity(lines.len());
        for line in lines {
            let (target, traj) = match execute_line(store, platform, line, &state, self.config.exec) {
                Ok(r) => r,
                Err(e) => {
                    return CommandResponse::rejected(WireError {
                        kind: e.kind().into(),
                        message: e.to_string(),
                        line: Some(line.line),
                    })
                }
            };
            let last = traj.last().expect("at least two steps");
            state = SequenceState {
                pose: last.q.clone(),
                base: last.base,
            };
            resolved.push(LineResolution {
                line: line.line,
                text: line.to_string(),
                articulation: target.articulation,
                translation: target.translation,
                goal: state.pose.clone(),
                base: state.base,
                duration: traj.duration(),
            });
            trajectories.push(traj);
        }

        let t = core.clock;
        core.history.extend(lines.iter().map(|l| HistoryEntry {
            t,
            text: l.to_string(),
            commands: l.commands.clone(),
        }));
        core.queue.extend(trajectories);
        if core.active.is_none() {
            core.active = core.queue.pop_front().map(|traj| Playback { traj, elapsed: 0.0 });
        }
        core.goal = state.clone();
        self.publish(&mut core);
        CommandResponse {
            v: WIRE_VERSION,
            accepted: true,
            error: None,
            resolution: Some(Resolution {
                lines: resolved,
                goal: state.pose,
                base: state.base,
            }),
        }
    }

    /// Drops everything queued and stops where playback currently is. Returns
    /// the number of command lines dropped.
    pub fn cancel(&self) -> usize {
        let mut core = self.lock();
        let dropped = core.queued();
        core.active = None;
        core.queue.clear();
        core.goal = core.current.clone();
        self.publish(&mut core);
        dropped
    }
}

fn state_message(platform: &PlatformDescription, core: &Core) -> StateMessage {
    let frames = forward_kinematics(platform, &core.current.pose)
        .expect("session pose has the platform's length")
        .iter()
        .map(FrameTransform::from)
        .collect();
    StateMessage {
        v: WIRE_VERSION,
        seq: core.seq,
        t: core.clock,
        pose: core.current.pose.clone(),
        base: core.current.base,
        frames,
        queued: core.queued(),
    }
}

/// Ticks `session` on the configured schedule until it is dropped.
pub fn spawn_ticker(session: &Arc<Session>) -> tokio::task::JoinHandle<()> {
    let weak: Weak<Session> = Arc::downgrade(session);
    let mut interval = tokio::time::interval(session.config.period());
    interval.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Delay);
    tokio::spawn(async move {
        interval.tick().await;
        loop {
            interval.tick().await;
            match weak.upgrade() {
                Some(s) => s.tick(),
                None => break,
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use kinesphere::fixtures;
    use kinesphere::kinematics::{record_install, RecordedEntry};
    use kinesphere::resolver::{execute_sequence, parse_commands};
    use kinesphere::vsam::{build_vsam, laban26};
    use kinesphere::Label;

    fn planar() -> Arc<Loaded> {
        let platform = fixtures::planar_2dof();
        let spec = build_vsam(&platform, platform.labels.j(), laban26(), 2).unwrap();
        let entries = vec![RecordedEntry {
            origin: Label::distal(1, 1),
            limb: Label::limb(1, 1),
            direction: "left-middle".parse().unwrap(),
            poses: vec![vec![Some(0.5), Some(0.2)], vec![Some(1.0), Some(-0.4)]],
        }];
        let (store, _) = record_install(&platform, &spec, &serde_json::to_vec(&entries).unwrap()).unwrap();
        Arc::new(Loaded { platform, store })
    }

    fn config(steps: usize) -> ServiceConfig {
        ServiceConfig {
            exec: ExecOptions { steps, duration: 1.0 },
            ..ServiceConfig::default()
        }
    }

    const TWO: &str = "limb_11 @ distal_11 -> left-middle * 1\nlimb_11 @ distal_11 -> left-middle * 2\n";

    #[test]
    fn plays_to_the_sequence_result() {
        let loaded = planar();
        let s = Session::new(loaded.clone(), config(11));
        assert!(s.submit_text(TWO).accepted);
        assert_eq!(s.latest().queued, 2);
        for _ in 0..40 {
            s.tick();
        }
        let end = s.latest();
        let lines = parse_commands(TWO).unwrap();
        let start = SequenceState::new(Pose::neutral(&loaded.platform));
        let traj = execute_sequence(&loaded.store, &loaded.platform, &lines, start, config(11).exec).unwrap();
        assert_eq!(end.pose, traj.last().unwrap().q);
        assert_eq!(end.queued, 0);
        assert_eq!(s.history().len(), 2);
    }

    #[test]
    fn ticks_sample_the_trajectory() {
        let s = Session::new(planar(), config(11));
        let before = s.latest().pose.clone();
        s.submit_text("limb_11 @ distal_11 -> left-middle * 2");
        s.tick();
        s.tick();
        // 0.1 s into a 1 s move.
        let q = &s.latest().pose;
        for i in 0..2 {
            let want = before[i] + 0.1 * ([1.0, -0.4][i] - before[i]);
            assert!((q[i] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn rejection_leaves_state_alone() {
        let s = Session::new(planar(), config(5));
        let seq = s.latest().seq;
        let r = s.submit_text("limb_11 @ distal_11 -> right-middle * 1");
        assert!(!r.accepted);
        assert_eq!(r.error.unwrap().kind, "NoSuchEntry");
        let r = s.submit_text("limb_11 @ distal_11 -> left-middle * 1\nlimb_11 @ distal_11 -> left-middle * 3");
        assert_eq!(r.error.as_ref().unwrap().kind, "NoLocomotion");
        assert_eq!(r.error.unwrap().line, Some(2));
        assert_eq!(s.submit_text("limb_11 @ -> left").error.unwrap().kind, "SyntaxError");
        assert_eq!(s.latest().seq, seq);
        assert!(s.history().is_empty());
    }

    #[test]
    fn cancel_freezes_mid_move() {
        let s = Session::new(planar(), config(11));
        s.submit_text(TWO);
        for _ in 0..5 {
            s.tick();
        }
        let frozen = s.latest().pose.clone();
        assert_eq!(s.cancel(), 2);
        for _ in 0..40 {
            s.tick();
        }
        assert_eq!(s.latest().pose, frozen);
        assert_eq!(s.latest().queued, 0);
        // Later commands start from the frozen pose.
        let r = s.submit_text("limb_11 @ distal_11 -> left-middle * 1").resolution.unwrap();
        assert_eq!(r.goal.0, vec![0.5, 0.2]);
    }

    #[test]
    fn frames_follow_the_pose() {
        let loaded = planar();
        let s = Session::new(loaded.clone(), config(11));
        s.submit_text("limb_11 @ distal_11 -> left-middle * 2");
        for _ in 0..7 {
            s.tick();
            let m = s.latest();
            let fk = forward_kinematics(&loaded.platform, &m.pose).unwrap();
            let want: Vec<FrameTransform> = fk.iter().map(FrameTransform::from).collect();
            assert_eq!(m.frames, want);
        }
    }
}
