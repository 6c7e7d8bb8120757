//! Deterministic 2D pedestrian simulator.
//!
//! Agents are discs driven by one of four policies. Social-force agents
//! follow
//!
//! ```text
//! a_i = (v0_i e_i - v_i) / tau
//!     + sum_j A exp((r_i + r_j - d_ij) / B) n_ij
//!     + sum_w A_w exp((r_i - d_iw) / B_w) n_iw
//!     + noise
//! ```
//!
//! with unit mass, integrated with semi-implicit Euler at a fixed step and
//! the speed clamped to `v_max`. All randomness comes from one seeded ChaCha
//! stream consumed in agent order, so a configuration and seed fully
//! determine the output.

mod generate;

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::geometry::{Segment, Vec2};
use crate::model::{AgentKind, AgentRecord, AgentState, Episode, Goal, ObstacleMap};

pub use generate::{generate_scenario, junction_walls, FRONTAL_CORRIDOR_WIDTH, SCENARIOS};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
}

/// Look-ahead beyond the summed radii at which a stop-at-obstacle agent halts.
pub const STOP_LOOKAHEAD: f64 = 0.1;

/// Distance at which an intermediate waypoint counts as passed.
const WAYPOINT_REACH: f64 = 0.5;

/// Distance to the final goal below which desired speed ramps down linearly.
const ARRIVAL_RADIUS: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct SfmParams {
    pub relaxation_time: f64,
    pub agent_strength: f64,
    pub agent_range: f64,
    pub obstacle_strength: f64,
    pub obstacle_range: f64,
    pub v_max: f64,
    /// Standard deviation of the per-axis random acceleration (m/s^2).
    pub noise: f64,
}

impl Default for SfmParams {
    fn default() -> Self {
        Self {
            relaxation_time: 0.5,
            agent_strength: 2.0,
            agent_range: 0.3,
            obstacle_strength: 5.0,
            obstacle_range: 0.1,
            v_max: 2.0,
            noise: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Policy {
    Sfm,
    /// Heads straight for the next target and halts while anything is
    /// directly ahead within stopping distance.
    StraightLineStop,
    /// Plays back recorded states, holding the last pose after the end.
    Replay(Vec<AgentState>),
    /// Walks the polyline at desired speed without reacting to anyone.
    ScriptedWaypoints(Vec<Vec2>),
}

impl Policy {
    pub fn name(&self) -> &'static str {
        match self {
            Policy::Sfm => "sfm",
            Policy::StraightLineStop => "straight_line_stop",
            Policy::Replay(_) => "replay",
            Policy::ScriptedWaypoints(_) => "scripted_waypoints",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentSpec {
    pub id: String,
    pub kind: AgentKind,
    pub position: Vec2,
    pub goal: Option<Goal>,
    /// Intermediate targets visited in order before the goal.
    pub waypoints: Vec<Vec2>,
    pub desired_speed: f64,
    pub radius: f64,
    pub policy: Policy,
}

impl AgentSpec {
    pub fn new(
        id: impl Into<String>,
        kind: AgentKind,
        position: Vec2,
        goal: Vec2,
        desired_speed: f64,
    ) -> Self {
        Self {
            id: id.into(),
            kind,
            position,
            goal: Some(Goal {
                position: goal,
                tolerance: 0.3,
            }),
            waypoints: Vec::new(),
            desired_speed,
            radius: 0.3,
            policy: Policy::Sfm,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    pub max_duration: f64,
    pub seed: u64,
    pub sfm: SfmParams,
    pub scene: ObstacleMap,
    /// The first robot in the list becomes the robot under test.
    pub agents: Vec<AgentSpec>,
    pub episode_id: String,
    pub metadata: BTreeMap<String, String>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 0.05,
            max_duration: 60.0,
            seed: 0,
            sfm: SfmParams::default(),
            scene: ObstacleMap::default(),
            agents: Vec::new(),
            episode_id: "sim".into(),
            metadata: BTreeMap::new(),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidConfig(m));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.max_duration >= 0.0 && self.max_duration.is_finite()) {
            return bad(format!(
                "max_duration must be non-negative, got {}",
                self.max_duration
            ));
        }
        let s = &self.sfm;
        for (name, v) in [
            ("relaxation_time", s.relaxation_time),
            ("agent_strength", s.agent_strength),
            ("agent_range", s.agent_range),
            ("obstacle_strength", s.obstacle_strength),
            ("obstacle_range", s.obstacle_range),
            ("v_max", s.v_max),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("sfm.{name} must be positive, got {v}"));
            }
        }
        if !(s.noise >= 0.0 && s.noise.is_finite()) {
            return bad(format!("sfm.noise must be non-negative, got {}", s.noise));
        }
        if !self.agents.iter().any(|a| a.kind == AgentKind::Robot) {
            return bad("no robot agent".into());
        }
        let mut ids = std::collections::BTreeSet::new();
        for a in &self.agents {
            if !ids.insert(&a.id) {
                return bad(format!("duplicate agent id `{}`", a.id));
            }
            if !(a.desired_speed > 0.0 && a.desired_speed.is_finite()) {
                return bad(format!("agent `{}`: desired_speed must be positive", a.id));
            }
            if !(a.radius > 0.0 && a.radius.is_finite()) {
                return bad(format!("agent `{}`: radius must be positive", a.id));
            }
            if !a.position.is_finite() {
                return bad(format!("agent `{}`: position must be finite", a.id));
            }
            if let Policy::Replay(states) = &a.policy {
                if states.is_empty() || states.windows(2).any(|w| !(w[1].t > w[0].t)) {
                    return bad(format!(
                        "agent `{}`: replay needs increasing timestamps",
                        a.id
                    ));
                }
            }
        }
        Ok(())
    }

    /// Replaces the policy of every robot agent.
    pub fn set_robot_policy(&mut self, policy: Policy) {
        for a in self
            .agents
            .iter_mut()
            .filter(|a| a.kind == AgentKind::Robot)
        {
            a.policy = policy.clone();
        }
    }
}

/// Dynamic state of one agent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Body {
    pub position: Vec2,
    pub velocity: Vec2,
    pub heading: f64,
    /// Index of the next waypoint (or scripted vertex) to visit.
    pub next_waypoint: usize,
    pub arrived: bool,
}

/// A running simulation.
pub struct Simulation {
    config: SimConfig,
    bodies: Vec<Body>,
    replays: Vec<Option<AgentRecord>>,
    step: u64,
    rng: ChaCha8Rng,
}

impl Simulation {
    pub fn new(config: SimConfig) -> Result<Self, SimError> {
        config.validate()?;
        let replays = config
            .agents
            .iter()
            .map(|a| match &a.policy {
                Policy::Replay(states) => {
                    let record = AgentRecord {
                        id: a.id.clone(),
                        kind: a.kind,
                        radius: a.radius,
                        goal: None,
                        states: states.clone(),
                    };
                    Some(if states.len() >= 2 {
                        crate::model::derive_velocities(&record).expect("two or more states")
                    } else {
                        record
                    })
                }
                _ => None,
            })
            .collect();
        let rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut sim = Simulation {
            bodies: Vec::with_capacity(config.agents.len()),
            config,
            replays,
            step: 0,
            rng,
        };
        for i in 0..sim.config.agents.len() {
            let spec = &sim.config.agents[i];
            let mut body = Body {
                position: spec.position,
                velocity: Vec2::ZERO,
                heading: 0.0,
                next_waypoint: 0,
                arrived: false,
            };
            if let Some(replay) = &sim.replays[i] {
                let s = sample_replay(replay, 0.0);
                body.position = s.position;
                body.velocity = s.velocity.unwrap_or(Vec2::ZERO);
                body.heading = s.heading;
            } else if let Some(dir) = sim
                .target(i, &body)
                .and_then(|t| (t - body.position).normalized())
            {
                body.heading = dir.angle();
                body.velocity = dir * spec.desired_speed.min(sim.config.sfm.v_max);
            }
            body.arrived = reached(spec, body.position);
            sim.bodies.push(body);
        }
        Ok(sim)
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn bodies(&self) -> &[Body] {
        &self.bodies
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.config.dt
    }

    /// True once every agent that has a goal has reached it.
    pub fn all_arrived(&self) -> bool {
        self.config
            .agents
            .iter()
            .zip(&self.bodies)
            .all(|(a, b)| a.goal.is_none() || b.arrived)
    }

    /// Current target of agent `i`: next waypoint, else the goal.
    fn target(&self, i: usize, body: &Body) -> Option<Vec2> {
        let spec = &self.config.agents[i];
        match &spec.policy {
            Policy::ScriptedWaypoints(points) => points.get(body.next_waypoint).copied(),
            Policy::Replay(_) => None,
            _ => spec
                .waypoints
                .get(body.next_waypoint)
                .copied()
                .or(spec.goal.map(|g| g.position)),
        }
    }

    fn is_final_target(&self, i: usize, body: &Body) -> bool {
        let spec = &self.config.agents[i];
        match &spec.policy {
            Policy::ScriptedWaypoints(points) => body.next_waypoint + 1 >= points.len(),
            _ => body.next_waypoint >= spec.waypoints.len(),
        }
    }

    /// Whether anything lies ahead of agent `i` (along `dir`) within the
    /// summed radii plus look-ahead.
    fn blocked(&self, i: usize, body: &Body, dir: Vec2, t: f64) -> bool {
        let r = self.config.agents[i].radius;
        let agents = self.bodies.iter().enumerate().filter(|&(j, _)| j != i);
        for (j, other) in agents {
            let offset = other.position - body.position;
            let reach = r + self.config.agents[j].radius + STOP_LOOKAHEAD;
            if offset.norm() < reach && offset.dot(dir) > 0.0 {
                return true;
            }
        }
        self.config.scene.active_at(t).any(|s| {
            let offset = s.closest_point(body.position) - body.position;
            offset.norm() < r + STOP_LOOKAHEAD && offset.dot(dir) > 0.0
        })
    }

    fn social_force(&mut self, i: usize, t: f64, desired: Vec2) -> Vec2 {
        let sfm = &self.config.sfm;
        let me = self.bodies[i];
        let r = self.config.agents[i].radius;
        let mut f = (desired - me.velocity) / sfm.relaxation_time;
        for (j, other) in self.bodies.iter().enumerate() {
            if j == i {
                continue;
            }
            let diff = me.position - other.position;
            let d = diff.norm();
            // coincident centres push apart along a fixed, index-ordered axis
            let n = diff.normalized().unwrap_or(if i < j {
                Vec2::new(0.0, -1.0)
            } else {
                Vec2::new(0.0, 1.0)
            });
            let reach = r + self.config.agents[j].radius;
            f += n * (sfm.agent_strength * ((reach - d) / sfm.agent_range).exp());
        }
        for s in self.config.scene.active_at(t) {
            let diff = me.position - s.closest_point(me.position);
            if let Some(n) = diff.normalized() {
                f += n * (sfm.obstacle_strength * ((r - diff.norm()) / sfm.obstacle_range).exp());
            }
        }
        if sfm.noise > 0.0 {
            let normal = Normal::new(0.0, sfm.noise).expect("finite noise");
            f += Vec2::new(normal.sample(&mut self.rng), normal.sample(&mut self.rng));
        }
        f
    }

    /// Advances every agent by one step. Velocities are computed from the
    /// current state of all agents before any position is updated.
    pub fn step(&mut self) {
        let dt = self.config.dt;
        let t = self.time();
        let t_next = (self.step + 1) as f64 * dt;
        let v_max = self.config.sfm.v_max;
        let mut velocities = Vec::with_capacity(self.bodies.len());
        let mut positions = Vec::with_capacity(self.bodies.len());
        for i in 0..self.bodies.len() {
            let mut body = self.bodies[i];
            let spec = self.config.agents[i].clone();
            if let Some(replay) = &self.replays[i] {
                let s = sample_replay(replay, t_next);
                velocities.push(s.velocity.unwrap_or(Vec2::ZERO));
                positions.push(s.position);
                continue;
            }
            // skip waypoints already reached
            while !matches!(spec.policy, Policy::ScriptedWaypoints(_))
                && !self.is_final_target(i, &body)
                && self
                    .target(i, &body)
                    .is_some_and(|w| w.distance(body.position) < WAYPOINT_REACH)
            {
                body.next_waypoint += 1;
            }
            self.bodies[i].next_waypoint = body.next_waypoint;
            let target = self.target(i, &body);
            let to = target.map_or(Vec2::ZERO, |p| p - body.position);
            let dist = to.norm();
            let dir = to.normalized();
            let v0 = spec.desired_speed.min(v_max);
            let v = match spec.policy {
                Policy::Sfm => {
                    let speed = if self.is_final_target(i, &body) {
                        v0 * (dist / ARRIVAL_RADIUS).min(1.0)
                    } else {
                        v0
                    };
                    let desired = dir.map_or(Vec2::ZERO, |d| d * speed);
                    let f = self.social_force(i, t, desired);
                    (body.velocity + f * dt).clamp_norm(v_max)
                }
                Policy::StraightLineStop => match dir {
                    Some(d) if !(body.arrived && self.is_final_target(i, &body)) => {
                        if self.blocked(i, &body, d, t) {
                            Vec2::ZERO
                        } else {
                            d * v0.min(dist / dt)
                        }
                    }
                    _ => Vec2::ZERO,
                },
                Policy::ScriptedWaypoints(_) => match (dir, target) {
                    (Some(d), Some(_)) => d * v0.min(dist / dt),
                    _ => Vec2::ZERO,
                },
                Policy::Replay(_) => unreachable!("handled above"),
            };
            velocities.push(v);
            positions.push(body.position + v * dt);
        }
        for (i, (v, p)) in velocities.into_iter().zip(positions).enumerate() {
            let body = &mut self.bodies[i];
            let spec = &self.config.agents[i];
            body.velocity = v;
            body.position = p;
            if v.norm() > 1e-6 {
                body.heading = v.angle();
            }
            if let Policy::ScriptedWaypoints(points) = &spec.policy {
                if points
                    .get(body.next_waypoint)
                    .is_some_and(|w| w.distance(p) < 1e-6)
                {
                    body.next_waypoint += 1;
                }
            }
            body.arrived |= reached(spec, p);
        }
        self.step += 1;
    }

    fn snapshot(&self, t: f64) -> impl Iterator<Item = AgentState> + '_ {
        self.bodies.iter().map(move |b| AgentState {
            t,
            position: b.position,
            heading: b.heading,
            velocity: Some(b.velocity),
        })
    }

    /// Runs to `max_duration` or until every goal-bearing agent arrived.
    pub fn run(mut self) -> Episode {
        let max_steps = (self.config.max_duration / self.config.dt + 1e-9).floor() as u64;
        let mut tracks: Vec<Vec<AgentState>> = vec![Vec::new(); self.bodies.len()];
        loop {
            let t = self.time();
            for (track, s) in tracks.iter_mut().zip(self.snapshot(t)) {
                track.push(s);
            }
            if self.step >= max_steps || self.all_arrived() {
                break;
            }
            self.step();
        }
        let agents: Vec<AgentRecord> = self
            .config
            .agents
            .iter()
            .zip(tracks)
            .map(|(spec, states)| AgentRecord {
                id: spec.id.clone(),
                kind: spec.kind,
                radius: spec.radius,
                goal: spec.goal,
                states,
            })
            .collect();
        let robot = self
            .config
            .agents
            .iter()
            .find(|a| a.kind == AgentKind::Robot)
            .expect("validated config has a robot");
        let mut metadata = self.config.metadata.clone();
        metadata.insert("robot_policy".into(), robot.policy.name().into());
        metadata.insert("seed".into(), self.config.seed.to_string());
        Episode {
            episode_id: self.config.episode_id.clone(),
            robot_under_test: robot.id.clone(),
            agents,
            obstacles: self.config.scene.clone(),
            labels: Vec::new(),
            metadata,
        }
    }
}

fn reached(spec: &AgentSpec, p: Vec2) -> bool {
    spec.goal
        .is_some_and(|g| g.position.distance(p) <= g.tolerance)
}

fn sample_replay(replay: &AgentRecord, t: f64) -> AgentState {
    let t = t.clamp(replay.start_time(), replay.end_time());
    let mut s = crate::model::interpolate_state(replay, t).expect("clamped into span");
    if replay.states.len() < 2 || t >= replay.end_time() {
        s.velocity = Some(Vec2::ZERO);
    }
    s
}

/// Simulates `config` to completion.
pub fn run(config: &SimConfig) -> Result<Episode, SimError> {
    Ok(Simulation::new(config.clone())?.run())
}

/// Corridor walls along the x axis between `x0` and `x1`, centred on `y`.
pub fn corridor(x0: f64, x1: f64, y: f64, width: f64) -> Vec<Segment> {
    let h = width / 2.0;
    vec![
        Segment::new(Vec2::new(x0, y - h), Vec2::new(x1, y - h)),
        Segment::new(Vec2::new(x0, y + h), Vec2::new(x1, y + h)),
    ]
}
