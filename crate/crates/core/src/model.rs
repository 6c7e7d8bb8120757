//! Episode data model: agents, trajectories, obstacles and metric parameters,
//! together with the kinematic helpers every other module builds on.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{wrap_angle, Segment, Vec2};

/// Default sanity cap on implied speed between consecutive samples (m/s).
pub const DEFAULT_SPEED_CAP: f64 = 10.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("agent `{0}` has fewer than two states")]
    SingleStateAgent(String),
    #[error("time {t} is outside the agent span [{start}, {end}]")]
    OutOfRange { t: f64, start: f64, end: f64 },
    #[error("time step must be positive and finite, got {0}")]
    InvalidStep(f64),
    #[error("robot under test `{0}` not found")]
    MissingRobot(String),
    #[error("invalid episode: {path}: {message}")]
    Invariant { path: String, message: String },
}

/// Pose (and optionally velocity) of one agent at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentState {
    pub t: f64,
    pub position: Vec2,
    /// Radians in (-π, π].
    pub heading: f64,
    pub velocity: Option<Vec2>,
}

impl AgentState {
    pub fn new(t: f64, position: Vec2, heading: f64) -> Self {
        Self {
            t,
            position,
            heading,
            velocity: None,
        }
    }

    pub fn with_velocity(mut self, v: Vec2) -> Self {
        self.velocity = Some(v);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgentKind {
    Robot,
    Human,
}

impl AgentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AgentKind::Robot => "robot",
            AgentKind::Human => "human",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Goal {
    pub position: Vec2,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentRecord {
    pub id: String,
    pub kind: AgentKind,
    pub radius: f64,
    pub goal: Option<Goal>,
    pub states: Vec<AgentState>,
}

impl AgentRecord {
    pub fn start_time(&self) -> f64 {
        self.states.first().map_or(f64::NAN, |s| s.t)
    }

    pub fn end_time(&self) -> f64 {
        self.states.last().map_or(f64::NAN, |s| s.t)
    }

    pub fn spans(&self, t: f64) -> bool {
        t >= self.start_time() && t <= self.end_time()
    }

    /// First time the agent is within its goal tolerance, scanning its own
    /// samples.
    pub fn first_goal_reach(&self) -> Option<f64> {
        let goal = self.goal?;
        self.states
            .iter()
            .find(|s| s.position.distance(goal.position) <= goal.tolerance)
            .map(|s| s.t)
    }
}

/// Set of wall segments that becomes active at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObstacleFrame {
    pub t: f64,
    pub segments: Vec<Segment>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ObstacleMap {
    pub segments: Vec<Segment>,
    /// Timestamped dynamic segment sets, sorted by time.
    pub dynamic: Vec<ObstacleFrame>,
}

impl ObstacleMap {
    pub fn is_empty(&self) -> bool {
        self.segments.is_empty() && self.dynamic.iter().all(|f| f.segments.is_empty())
    }

    /// Static segments plus the dynamic set with the latest timestamp at or
    /// before `t`.
    pub fn active_at(&self, t: f64) -> impl Iterator<Item = &Segment> {
        let idx = self.dynamic.partition_point(|f| f.t <= t);
        let dynamic = if idx == 0 {
            &[][..]
        } else {
            &self.dynamic[idx - 1].segments[..]
        };
        self.segments.iter().chain(dynamic.iter())
    }
}

/// Ground-truth or annotated scenario window carried inside an episode.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLabel {
    pub scenario: String,
    pub t_start: f64,
    pub t_end: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    pub episode_id: String,
    pub agents: Vec<AgentRecord>,
    pub robot_under_test: String,
    pub obstacles: ObstacleMap,
    pub labels: Vec<EpisodeLabel>,
    pub metadata: BTreeMap<String, String>,
}

impl Episode {
    pub fn agent(&self, id: &str) -> Option<&AgentRecord> {
        self.agents.iter().find(|a| a.id == id)
    }

    pub fn robot(&self) -> Result<&AgentRecord, ModelError> {
        self.agent(&self.robot_under_test)
            .ok_or_else(|| ModelError::MissingRobot(self.robot_under_test.clone()))
    }

    /// Every agent other than the robot under test.
    pub fn others(&self) -> impl Iterator<Item = &AgentRecord> {
        self.agents
            .iter()
            .filter(move |a| a.id != self.robot_under_test)
    }

    /// Checks every model invariant and returns the violations, each naming
    /// the offending field with a JSON-pointer path.
    pub fn violations(&self, speed_cap: f64) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut seen = BTreeSet::new();
        for (i, agent) in self.agents.iter().enumerate() {
            if !seen.insert(agent.id.as_str()) {
                out.push(Violation::new(
                    format!("/agents/{i}/id"),
                    format!("duplicate agent id `{}`", agent.id),
                ));
            }
            out.extend(agent_violations(agent, i, speed_cap));
        }
        match self
            .agents
            .iter()
            .position(|a| a.id == self.robot_under_test)
        {
            None => out.push(Violation::new(
                "/robot_under_test",
                format!("`{}` does not name an agent", self.robot_under_test),
            )),
            Some(ri) => {
                let robot = &self.agents[ri];
                if robot.kind != AgentKind::Robot {
                    out.push(Violation::new(
                        "/robot_under_test",
                        format!("agent `{}` is not a robot", robot.id),
                    ));
                }
                if !robot.states.is_empty() {
                    let (r0, r1) = (robot.start_time(), robot.end_time());
                    for (i, a) in self.agents.iter().enumerate() {
                        if a.states.is_empty() || i == ri {
                            continue;
                        }
                        if a.end_time() < r0 || a.start_time() > r1 {
                            out.push(Violation::new(
                                format!("/agents/{i}/states"),
                                "time span does not overlap the robot under test",
                            ));
                        }
                    }
                }
            }
        }
        for (i, s) in self.obstacles.segments.iter().enumerate() {
            out.extend(segment_violation(s, format!("/obstacles/segments/{i}")));
        }
        for (i, f) in self.obstacles.dynamic.iter().enumerate() {
            if !f.t.is_finite() {
                out.push(Violation::new(
                    format!("/obstacles/dynamic/{i}/t"),
                    "timestamp must be finite",
                ));
            }
            if i > 0 && f.t <= self.obstacles.dynamic[i - 1].t {
                out.push(Violation::new(
                    format!("/obstacles/dynamic/{i}/t"),
                    "dynamic obstacle timestamps must be strictly increasing",
                ));
            }
            for (j, s) in f.segments.iter().enumerate() {
                out.extend(segment_violation(
                    s,
                    format!("/obstacles/dynamic/{i}/segments/{j}"),
                ));
            }
        }
        for (i, l) in self.labels.iter().enumerate() {
            if !(l.t_start.is_finite() && l.t_end.is_finite()) || l.t_start > l.t_end {
                out.push(Violation::new(
                    format!("/labels/{i}"),
                    "label window must satisfy t_start <= t_end",
                ));
            }
        }
        out
    }

    pub fn validate(&self, speed_cap: f64) -> Result<(), ModelError> {
        match self.violations(speed_cap).into_iter().next() {
            None => Ok(()),
            Some(v) => Err(ModelError::Invariant {
                path: v.path,
                message: v.message,
            }),
        }
    }
}

/// One violated invariant.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl Violation {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

fn segment_violation(s: &Segment, path: String) -> Option<Violation> {
    if !(s.a.is_finite() && s.b.is_finite()) {
        Some(Violation::new(path, "segment coordinates must be finite"))
    } else if s.a == s.b {
        Some(Violation::new(path, "segment endpoints must be distinct"))
    } else {
        None
    }
}

fn agent_violations(agent: &AgentRecord, i: usize, speed_cap: f64) -> Vec<Violation> {
    let mut out = Vec::new();
    if !(agent.radius > 0.0 && agent.radius.is_finite()) {
        out.push(Violation::new(
            format!("/agents/{i}/radius"),
            format!("radius must be positive, got {}", agent.radius),
        ));
    }
    if let Some(g) = agent.goal {
        if !g.position.is_finite() {
            out.push(Violation::new(
                format!("/agents/{i}/goal"),
                "goal coordinates must be finite",
            ));
        }
        if !(g.tolerance > 0.0 && g.tolerance.is_finite()) {
            out.push(Violation::new(
                format!("/agents/{i}/goal/tolerance"),
                "goal tolerance must be positive",
            ));
        }
    }
    if agent.states.is_empty() {
        out.push(Violation::new(
            format!("/agents/{i}/states"),
            "agent must have at least one state",
        ));
    }
    for (k, s) in agent.states.iter().enumerate() {
        let base = format!("/agents/{i}/states/{k}");
        if !s.t.is_finite() {
            out.push(Violation::new(
                format!("{base}/t"),
                "timestamp must be finite",
            ));
            continue;
        }
        if !s.position.is_finite() {
            out.push(Violation::new(base.clone(), "position must be finite"));
        }
        if !s.heading.is_finite() {
            out.push(Violation::new(
                format!("{base}/theta"),
                "heading must be finite",
            ));
        }
        if let Some(v) = s.velocity {
            if !v.is_finite() {
                out.push(Violation::new(
                    format!("{base}/vx"),
                    "velocity must be finite",
                ));
            }
        }
        if k > 0 {
            let prev = &agent.states[k - 1];
            if s.t <= prev.t {
                out.push(Violation::new(
                    format!("{base}/t"),
                    format!(
                        "timestamps must be strictly increasing ({} after {})",
                        s.t, prev.t
                    ),
                ));
            } else {
                let speed = s.position.distance(prev.position) / (s.t - prev.t);
                if speed > speed_cap {
                    out.push(Violation::new(
                        base,
                        format!("implied speed {speed:.3} m/s exceeds cap {speed_cap} m/s"),
                    ));
                }
            }
        }
    }
    out
}

/// Fills in missing velocities: central differences at interior samples,
/// one-sided differences at the endpoints. Velocities already present are
/// kept as they are.
pub fn derive_velocities(agent: &AgentRecord) -> Result<AgentRecord, ModelError> {
    let n = agent.states.len();
    if n < 2 {
        return Err(ModelError::SingleStateAgent(agent.id.clone()));
    }
    let mut out = agent.clone();
    for (k, state) in out.states.iter_mut().enumerate() {
        if state.velocity.is_none() {
            state.velocity = Some(finite_difference(&agent.states, k));
        }
    }
    Ok(out)
}

/// Finite-difference velocity at sample `k` (requires at least two samples).
pub(crate) fn finite_difference(states: &[AgentState], k: usize) -> Vec2 {
    let n = states.len();
    let (lo, hi) = if k == 0 {
        (0, 1)
    } else if k == n - 1 {
        (n - 2, n - 1)
    } else {
        (k - 1, k + 1)
    };
    (states[hi].position - states[lo].position) / (states[hi].t - states[lo].t)
}

/// Heading for states that arrived without one: direction of motion, or the
/// previous heading while stationary (0 before any motion).
pub(crate) fn synthesize_headings(states: &mut [AgentState], missing: &[bool]) {
    let n = states.len();
    let mut previous = 0.0;
    for k in 0..n {
        if missing[k] {
            let v = match states[k].velocity {
                Some(v) => v,
                None if n >= 2 => finite_difference(states, k),
                None => Vec2::ZERO,
            };
            if v.norm() > 1e-9 {
                previous = wrap_angle(v.angle());
            }
            states[k].heading = previous;
        } else {
            previous = states[k].heading;
        }
    }
}

/// State of `agent` at time `t`, linearly interpolated between samples.
/// Heading follows the shorter arc. Velocity is interpolated when both
/// neighbouring samples carry one.
pub fn interpolate_state(agent: &AgentRecord, t: f64) -> Result<AgentState, ModelError> {
    let states = &agent.states;
    let (start, end) = (agent.start_time(), agent.end_time());
    if states.is_empty() || !(t >= start && t <= end) {
        return Err(ModelError::OutOfRange { t, start, end });
    }
    let idx = states.partition_point(|s| s.t < t);
    if idx < states.len() && states[idx].t == t {
        return Ok(states[idx]);
    }
    let (a, b) = (&states[idx - 1], &states[idx]);
    let s = (t - a.t) / (b.t - a.t);
    let velocity = match (a.velocity, b.velocity) {
        (Some(va), Some(vb)) => Some(va.lerp(vb, s)),
        _ => None,
    };
    Ok(AgentState {
        t,
        position: a.position.lerp(b.position, s),
        heading: wrap_angle(a.heading + wrap_angle(b.heading - a.heading) * s),
        velocity,
    })
}

/// Uniform grid over the robot-under-test time span with step `dt`; the span
/// end is always the last sample.
pub fn common_timeline(episode: &Episode, dt: f64) -> Result<Vec<f64>, ModelError> {
    let robot = episode.robot()?;
    timeline_over(robot.start_time(), robot.end_time(), dt)
}

pub(crate) fn timeline_over(start: f64, end: f64, dt: f64) -> Result<Vec<f64>, ModelError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(ModelError::InvalidStep(dt));
    }
    let mut out = Vec::new();
    let eps = 1e-9 * dt;
    let mut k = 0u64;
    loop {
        let t = start + k as f64 * dt;
        if t >= end - eps {
            break;
        }
        out.push(t);
        k += 1;
    }
    out.push(end);
    Ok(out)
}

/// Median interval between consecutive robot samples.
pub fn median_interval(agent: &AgentRecord) -> Option<f64> {
    let mut gaps: Vec<f64> = agent.states.windows(2).map(|w| w[1].t - w[0].t).collect();
    if gaps.is_empty() {
        return None;
    }
    gaps.sort_by(f64::total_cmp);
    let n = gaps.len();
    Some(if n % 2 == 1 {
        gaps[n / 2]
    } else {
        0.5 * (gaps[n / 2 - 1] + gaps[n / 2])
    })
}

fn default_space_threshold() -> f64 {
    0.5
}
fn default_intimate_radius() -> f64 {
    0.45
}
fn default_personal_radius() -> f64 {
    1.2
}
fn default_timeout() -> f64 {
    100.0
}
fn default_fp_distance_eps() -> f64 {
    0.1
}
fn default_fp_window() -> f64 {
    5.0
}
fn default_stall_speed() -> f64 {
    0.05
}
fn default_stall_min_duration() -> f64 {
    1.0
}

/// Thresholds and parameters used by the metric suite. Every field has a
/// default so partial parameter files are accepted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricParams {
    #[serde(default = "default_space_threshold")]
    pub space_threshold: f64,
    #[serde(default = "default_intimate_radius")]
    pub intimate_radius: f64,
    #[serde(default = "default_personal_radius")]
    pub personal_radius: f64,
    /// Number of collisions that ends the episode, if any.
    #[serde(default)]
    pub collision_terminate_count: Option<u32>,
    #[serde(default = "default_timeout")]
    pub timeout: f64,
    #[serde(default = "default_fp_distance_eps")]
    pub fp_distance_eps: f64,
    #[serde(default = "default_fp_window")]
    pub fp_window: f64,
    #[serde(default = "default_stall_speed")]
    pub stall_speed: f64,
    #[serde(default = "default_stall_min_duration")]
    pub stall_min_duration: f64,
    #[serde(default)]
    pub cooperative_agent_ids: Option<BTreeSet<String>>,
    /// Report space compliance as the violation ratio instead of the
    /// compliance ratio.
    #[serde(default)]
    pub sc_complement: bool,
}

impl Default for MetricParams {
    fn default() -> Self {
        Self {
            space_threshold: default_space_threshold(),
            intimate_radius: default_intimate_radius(),
            personal_radius: default_personal_radius(),
            collision_terminate_count: None,
            timeout: default_timeout(),
            fp_distance_eps: default_fp_distance_eps(),
            fp_window: default_fp_window(),
            stall_speed: default_stall_speed(),
            stall_min_duration: default_stall_min_duration(),
            cooperative_agent_ids: None,
            sc_complement: false,
        }
    }
}

impl MetricParams {
    /// Returns the name of the first parameter that is not strictly positive.
    pub fn invalid_field(&self) -> Option<&'static str> {
        let checks = [
            ("space_threshold", self.space_threshold),
            ("intimate_radius", self.intimate_radius),
            ("personal_radius", self.personal_radius),
            ("timeout", self.timeout),
            ("fp_distance_eps", self.fp_distance_eps),
            ("fp_window", self.fp_window),
            ("stall_speed", self.stall_speed),
            ("stall_min_duration", self.stall_min_duration),
        ];
        if self.collision_terminate_count == Some(0) {
            return Some("collision_terminate_count");
        }
        checks
            .into_iter()
            .find(|(_, v)| !(*v > 0.0 && v.is_finite()))
            .map(|(name, _)| name)
    }
}
