//! The hand-crafted metric suite.
//!
//! An [`Evaluator`] resamples every agent onto the common timeline of the
//! robot under test once, then each metric is a cheap scan over that grid.
//! Geometry conventions:
//!
//! * agent overlap is circle/circle (`d < r1 + r2`), wall overlap is
//!   circle/segment (`d < r`);
//! * a collision event is a maximal run of consecutive overlapping steps.
//!   Each other agent is its own collision target; all walls together form a
//!   single target, so sliding along connected wall pieces is one event;
//! * space compliance and distance-to-human use center-to-center distances;
//! * degenerate minima (no humans, no obstacles) are `+inf`, undefined
//!   averages are `None`.

pub mod catalogue;
mod report;
pub mod taxonomy;

use std::collections::BTreeMap;

use serde_json::{json, Value};
use thiserror::Error;

use crate::geometry::Vec2;
use crate::model::{
    derive_velocities, interpolate_state, median_interval, timeline_over, AgentKind, AgentRecord,
    Episode, Goal, MetricParams, ModelError,
};

pub use catalogue::{MetricSpec, TASKWISE};
pub use report::{MetricReport, MetricValue, Scalar, StepSeries};
pub use taxonomy::TaxonomyCode;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("the robot under test has no goal")]
    MissingGoal,
    #[error("need at least {needed} timeline samples, have {got}")]
    TooFewStates { needed: usize, got: usize },
    #[error("metric parameter `{0}` must be positive")]
    InvalidParams(&'static str),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("malformed metric report: {0}")]
    BadReport(String),
}

/// Position and velocity of one agent at one timeline step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kinematics {
    pub position: Vec2,
    pub velocity: Vec2,
}

struct Track<'e> {
    agent: &'e AgentRecord,
    /// `None` where the timeline step lies outside the agent's span.
    steps: Vec<Option<Kinematics>>,
}

/// Min / mean / max of a per-step quantity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Features {
    pub min: f64,
    pub avg: f64,
    pub max: f64,
}

impl Features {
    fn of(values: &[f64]) -> Option<Features> {
        if values.is_empty() {
            return None;
        }
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let avg = values.iter().sum::<f64>() / values.len() as f64;
        Some(Features {
            min,
            // rounding can push the mean a hair outside [min, max]
            avg: avg.clamp(min, max),
            max,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CollisionTarget {
    Wall,
    Agent { index: usize, kind: AgentKind },
}

/// A maximal run of overlapping steps `[start, end]` (inclusive step indices).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CollisionEvent {
    pub target: CollisionTarget,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CollisionCounts {
    pub total: u32,
    pub wall: u32,
    pub agent: u32,
    pub human: u32,
}

/// Earliest `τ >= 0` with `|dp + τ dv| = radius_sum`, i.e. when two discs
/// moving at constant velocity first touch. Zero if they already overlap,
/// `+inf` if they never touch.
pub fn time_to_collision(dp: Vec2, dv: Vec2, radius_sum: f64) -> f64 {
    let c = dp.norm_sq() - radius_sum * radius_sum;
    if c <= 0.0 {
        return 0.0;
    }
    let a = dv.norm_sq();
    let b = 2.0 * dp.dot(dv);
    if a <= 0.0 || b >= 0.0 {
        return f64::INFINITY;
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return f64::INFINITY;
    }
    // numerically stable smaller root: 2c / (-b + sqrt(disc))
    let tau = 2.0 * c / (-b + disc.sqrt());
    if tau >= 0.0 {
        tau
    } else {
        f64::INFINITY
    }
}

/// Evaluates the metric suite on one episode.
pub struct Evaluator<'e> {
    episode: &'e Episode,
    params: &'e MetricParams,
    dt: f64,
    timeline: Vec<f64>,
    robot: Track<'e>,
    others: Vec<Track<'e>>,
    events: Vec<CollisionEvent>,
}

pub(crate) fn resample(
    agent: &AgentRecord,
    timeline: &[f64],
) -> Result<Vec<Option<Kinematics>>, ModelError> {
    let derived;
    let source = if agent.states.len() >= 2 {
        derived = derive_velocities(agent)?;
        &derived
    } else {
        agent
    };
    timeline
        .iter()
        .map(|&t| {
            if !source.spans(t) {
                return Ok(None);
            }
            let s = interpolate_state(source, t)?;
            Ok(Some(Kinematics {
                position: s.position,
                velocity: s.velocity.unwrap_or(Vec2::ZERO),
            }))
        })
        .collect()
}

impl<'e> Evaluator<'e> {
    /// `dt` defaults to the median sampling interval of the robot.
    pub fn new(
        episode: &'e Episode,
        params: &'e MetricParams,
        dt: Option<f64>,
    ) -> Result<Self, MetricError> {
        if let Some(field) = params.invalid_field() {
            return Err(MetricError::InvalidParams(field));
        }
        let robot = episode.robot()?;
        if robot.states.is_empty() {
            return Err(MetricError::TooFewStates { needed: 1, got: 0 });
        }
        let dt = dt.or_else(|| median_interval(robot)).unwrap_or(1.0);
        let timeline = timeline_over(robot.start_time(), robot.end_time(), dt)?;
        let robot_track = Track {
            agent: robot,
            steps: resample(robot, &timeline)?,
        };
        let others = episode
            .others()
            .map(|a| {
                Ok(Track {
                    agent: a,
                    steps: resample(a, &timeline)?,
                })
            })
            .collect::<Result<Vec<_>, ModelError>>()?;
        let mut ev = Evaluator {
            episode,
            params,
            dt,
            timeline,
            robot: robot_track,
            others,
            events: Vec::new(),
        };
        ev.events = ev.find_collision_events();
        Ok(ev)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn timeline(&self) -> &[f64] {
        &self.timeline
    }

    fn robot_at(&self, k: usize) -> Kinematics {
        self.robot.steps[k].expect("robot spans the whole timeline")
    }

    fn goal(&self) -> Result<Goal, MetricError> {
        self.robot.agent.goal.ok_or(MetricError::MissingGoal)
    }

    fn start_time(&self) -> f64 {
        self.timeline[0]
    }

    fn find_collision_events(&self) -> Vec<CollisionEvent> {
        let n = self.timeline.len();
        let r = self.robot.agent.radius;
        let mut events = Vec::new();
        let mut push_runs = |target: CollisionTarget, overlap: &dyn Fn(usize) -> bool| {
            let mut start = None;
            for k in 0..=n {
                let hit = k < n && overlap(k);
                match (hit, start) {
                    (true, None) => start = Some(k),
                    (false, Some(s)) => {
                        events.push(CollisionEvent {
                            target,
                            start: s,
                            end: k - 1,
                        });
                        start = None;
                    }
                    _ => {}
                }
            }
        };
        push_runs(CollisionTarget::Wall, &|k| {
            let p = self.robot_at(k).position;
            self.episode
                .obstacles
                .active_at(self.timeline[k])
                .any(|s| s.distance_to(p) < r)
        });
        for (index, other) in self.others.iter().enumerate() {
            let reach = r + other.agent.radius;
            push_runs(
                CollisionTarget::Agent {
                    index,
                    kind: other.agent.kind,
                },
                &|k| {
                    other.steps[k]
                        .is_some_and(|o| o.position.distance(self.robot_at(k).position) < reach)
                },
            );
        }
        events.sort_by_key(|e| (e.start, e.end));
        events
    }

    /// Step index at which the episode terminates due to collisions, if
    /// `collision_terminate_count` is set and reached.
    fn termination_step(&self) -> Option<usize> {
        let k = self.params.collision_terminate_count? as usize;
        self.events.get(k - 1).map(|e| e.start)
    }

    /// Collision events counted by the C/WC/AC/HC metrics, in start order.
    pub fn collision_events(&self) -> &[CollisionEvent] {
        let limit = self.termination_step();
        let cut = match limit {
            None => self.events.len(),
            Some(step) => self.events.partition_point(|e| e.start <= step),
        };
        &self.events[..cut]
    }

    pub fn collisions(&self) -> CollisionCounts {
        let mut c = CollisionCounts::default();
        for e in self.collision_events() {
            match e.target {
                CollisionTarget::Wall => c.wall += 1,
                CollisionTarget::Agent { kind, .. } => {
                    c.agent += 1;
                    if kind == AgentKind::Human {
                        c.human += 1;
                    }
                }
            }
        }
        c.total = c.wall + c.agent;
        c
    }

    /// Step of first goal reach that counts as success.
    fn success_step(&self) -> Result<Option<usize>, MetricError> {
        let goal = self.goal()?;
        let t0 = self.start_time();
        let term = self.termination_step();
        for (k, &t) in self.timeline.iter().enumerate() {
            if t - t0 > self.params.timeout || term.is_some_and(|s| k >= s) {
                return Ok(None);
            }
            if self.robot_at(k).position.distance(goal.position) <= goal.tolerance {
                return Ok(Some(k));
            }
        }
        Ok(None)
    }

    pub fn success(&self) -> Result<bool, MetricError> {
        Ok(self.success_step()?.is_some())
    }

    pub fn time_to_goal(&self) -> Result<Option<f64>, MetricError> {
        Ok(self
            .success_step()?
            .map(|k| self.timeline[k] - self.start_time()))
    }

    pub fn timeout(&self) -> Result<bool, MetricError> {
        let span = self.robot.agent.end_time() - self.robot.agent.start_time();
        Ok(!self.success()? && span >= self.params.timeout)
    }

    /// Number of disjoint windows of at least `fp_window` seconds in which the
    /// distance to goal never drops more than `fp_distance_eps` below its
    /// value at the window start. The scan stops at the first success.
    pub fn failure_to_progress(&self) -> Result<u32, MetricError> {
        let goal = self.goal()?;
        let end = self.success_step()?.unwrap_or(self.timeline.len());
        let d: Vec<f64> = (0..end)
            .map(|k| self.robot_at(k).position.distance(goal.position))
            .collect();
        let t = &self.timeline[..end];
        let eps = self.params.fp_distance_eps;
        let window = self.params.fp_window;
        let mut count = 0;
        let mut i = 0;
        while i < d.len() {
            let mut completed = None;
            for k in i..d.len() {
                if d[k] < d[i] - eps {
                    break;
                }
                if t[k] - t[i] >= window - 1e-9 {
                    completed = Some(k);
                    break;
                }
            }
            match completed {
                Some(k) => {
                    count += 1;
                    i = k;
                }
                None => i += 1,
            }
        }
        Ok(count)
    }

    fn speeds(&self) -> Vec<f64> {
        (0..self.timeline.len())
            .map(|k| self.robot_at(k).velocity.norm())
            .collect()
    }

    /// Total time spent below `stall_speed`, counting only runs that last at
    /// least `stall_min_duration`.
    pub fn stalled_time(&self) -> f64 {
        let speeds = self.speeds();
        let t = &self.timeline;
        let mut total = 0.0;
        let mut run_start = None;
        for k in 0..=speeds.len() {
            let stalled = k < speeds.len() && speeds[k] < self.params.stall_speed;
            match (stalled, run_start) {
                (true, None) => run_start = Some(k),
                (false, Some(s)) => {
                    let dur = t[k - 1] - t[s];
                    if dur >= self.params.stall_min_duration - 1e-9 {
                        total += dur;
                    }
                    run_start = None;
                }
                _ => {}
            }
        }
        total
    }

    /// Length of the recorded robot polyline.
    pub fn path_length(&self) -> f64 {
        self.robot
            .agent
            .states
            .windows(2)
            .map(|w| w[0].position.distance(w[1].position))
            .sum()
    }

    pub fn spl(&self) -> Result<f64, MetricError> {
        let goal = self.goal()?;
        if !self.success()? {
            return Ok(0.0);
        }
        let shortest = self.robot.agent.states[0].position.distance(goal.position);
        let taken = self.path_length();
        // a robot starting on the goal centre completes an empty task optimally
        Ok(if shortest > 0.0 {
            shortest / shortest.max(taken)
        } else {
            1.0
        })
    }

    pub fn velocity_features(&self) -> Features {
        Features::of(&self.speeds()).expect("timeline is never empty")
    }

    /// d(speed)/dt at interior steps (central differences).
    fn acceleration_series(&self) -> Vec<(f64, f64)> {
        let s = self.speeds();
        let t = &self.timeline;
        (1..s.len().saturating_sub(1))
            .map(|i| (t[i], (s[i + 1] - s[i - 1]) / (t[i + 1] - t[i - 1])))
            .collect()
    }

    /// d²(speed)/dt² at interior steps (three-point second difference, exact
    /// for quadratics on non-uniform grids).
    fn jerk_series(&self) -> Vec<(f64, f64)> {
        let s = self.speeds();
        let t = &self.timeline;
        (1..s.len().saturating_sub(1))
            .map(|i| {
                let h1 = t[i] - t[i - 1];
                let h2 = t[i + 1] - t[i];
                let j = 2.0 * ((s[i + 1] - s[i]) / h2 - (s[i] - s[i - 1]) / h1) / (h1 + h2);
                (t[i], j)
            })
            .collect()
    }

    pub fn acceleration_features(&self) -> Result<Features, MetricError> {
        let n = self.timeline.len();
        if n < 3 {
            return Err(MetricError::TooFewStates { needed: 3, got: n });
        }
        let a: Vec<f64> = self
            .acceleration_series()
            .into_iter()
            .map(|p| p.1)
            .collect();
        Ok(Features::of(&a).expect("n >= 3"))
    }

    pub fn jerk_features(&self) -> Result<Features, MetricError> {
        let n = self.timeline.len();
        if n < 4 {
            return Err(MetricError::TooFewStates { needed: 4, got: n });
        }
        let j: Vec<f64> = self.jerk_series().into_iter().map(|p| p.1).collect();
        Ok(Features::of(&j).expect("n >= 4"))
    }

    /// Per-step robot clearance to the nearest active wall (surface distance,
    /// clamped at zero; `+inf` with no walls).
    fn clearance_series(&self) -> Vec<f64> {
        let r = self.robot.agent.radius;
        (0..self.timeline.len())
            .map(|k| {
                let p = self.robot_at(k).position;
                let d = self
                    .episode
                    .obstacles
                    .active_at(self.timeline[k])
                    .map(|s| s.distance_to(p))
                    .fold(f64::INFINITY, f64::min);
                (d - r).max(0.0)
            })
            .collect()
    }

    /// `(CD_min, CD_avg)`.
    pub fn clearing_distance(&self) -> (f64, Option<f64>) {
        let c = self.clearance_series();
        let finite: Vec<f64> = c.iter().copied().filter(|v| v.is_finite()).collect();
        let min = finite.iter().copied().fold(f64::INFINITY, f64::min);
        let avg = (!finite.is_empty()).then(|| finite.iter().sum::<f64>() / finite.len() as f64);
        (min, avg)
    }

    fn humans(&self) -> impl Iterator<Item = &Track<'e>> {
        self.others
            .iter()
            .filter(|o| o.agent.kind == AgentKind::Human)
    }

    /// Center distance to the closest human present at each step.
    fn human_distance_series(&self) -> Vec<f64> {
        (0..self.timeline.len())
            .map(|k| {
                let p = self.robot_at(k).position;
                self.humans()
                    .filter_map(|h| h.steps[k])
                    .map(|h| h.position.distance(p))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect()
    }

    /// Fraction of steps whose closest human is at least `threshold` away
    /// (or the complement when `sc_complement` is set).
    pub fn space_compliance_at(&self, threshold: f64) -> f64 {
        let d = self.human_distance_series();
        let compliant = d.iter().filter(|&&x| x >= threshold).count() as f64 / d.len() as f64;
        if self.params.sc_complement {
            1.0 - compliant
        } else {
            compliant
        }
    }

    pub fn space_compliance(&self) -> f64 {
        self.space_compliance_at(self.params.space_threshold)
    }

    pub fn min_distance_to_human(&self) -> f64 {
        self.human_distance_series()
            .into_iter()
            .fold(f64::INFINITY, f64::min)
    }

    fn ttc_series(&self) -> Vec<f64> {
        let r = self.robot.agent.radius;
        (0..self.timeline.len())
            .map(|k| {
                let me = self.robot_at(k);
                self.humans()
                    .filter_map(|h| h.steps[k].map(|s| (s, h.agent.radius)))
                    .map(|(h, rh)| {
                        time_to_collision(
                            h.position - me.position,
                            h.velocity - me.velocity,
                            r + rh,
                        )
                    })
                    .fold(f64::INFINITY, f64::min)
            })
            .collect()
    }

    pub fn min_time_to_collision(&self) -> f64 {
        self.ttc_series().into_iter().fold(f64::INFINITY, f64::min)
    }

    /// Latest first-goal-reach time (relative to the episode start) over the
    /// cooperative set; `None` when the set is empty or unset, a member is
    /// missing or goal-less, or any member never reaches its goal.
    pub fn aggregated_time(&self) -> Option<f64> {
        let ids = self.params.cooperative_agent_ids.as_ref()?;
        if ids.is_empty() {
            return None;
        }
        let t0 = self.start_time();
        let mut latest = f64::NEG_INFINITY;
        for id in ids {
            let agent = self.episode.agent(id)?;
            let reach = agent.first_goal_reach()?;
            latest = latest.max(reach - t0);
        }
        Some(latest)
    }

    /// Named per-step series: speed `V`, acceleration `A`, jerk `J`,
    /// clearance `CD`, closest human `DH`, time to collision `TTC`, space
    /// compliance indicator `SC`, proxemic zone `PZ` (0 intimate, 1 personal,
    /// 2 beyond) and distance to goal `DG` when a goal exists.
    pub fn stepwise(&self) -> BTreeMap<String, StepSeries> {
        let mut out = BTreeMap::new();
        let t = self.timeline.clone();
        let mut add = |name: &str, timeline: Vec<f64>, values: Vec<f64>| {
            out.insert(
                name.to_string(),
                StepSeries {
                    name: name.to_string(),
                    unit: catalogue::step_unit(name).to_string(),
                    timeline,
                    values,
                },
            );
        };
        add("V", t.clone(), self.speeds());
        let (ta, va): (Vec<f64>, Vec<f64>) = self.acceleration_series().into_iter().unzip();
        add("A", ta, va);
        let (tj, vj): (Vec<f64>, Vec<f64>) = self.jerk_series().into_iter().unzip();
        add("J", tj, vj);
        add("CD", t.clone(), self.clearance_series());
        let dh = self.human_distance_series();
        let threshold = self.params.space_threshold;
        let sc = dh
            .iter()
            .map(|&d| {
                let ok = d >= threshold;
                if ok != self.params.sc_complement {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        let pz = dh
            .iter()
            .map(|&d| {
                if d < self.params.intimate_radius {
                    0.0
                } else if d < self.params.personal_radius {
                    1.0
                } else {
                    2.0
                }
            })
            .collect();
        add("SC", t.clone(), sc);
        add("PZ", t.clone(), pz);
        add("DH", t.clone(), dh);
        add("TTC", t.clone(), self.ttc_series());
        if let Ok(goal) = self.goal() {
            let dg = (0..t.len())
                .map(|k| self.robot_at(k).position.distance(goal.position))
                .collect();
            add("DG", t, dg);
        }
        out
    }

    fn params_used(&self, keys: &[&str]) -> BTreeMap<String, Value> {
        let all = serde_json::to_value(self.params).expect("params serialize");
        let mut out: BTreeMap<String, Value> = keys
            .iter()
            .map(|k| (k.to_string(), all.get(*k).cloned().unwrap_or(Value::Null)))
            .collect();
        out.insert("dt".into(), json!(self.dt));
        out
    }

    /// Every taskwise metric, with codes and parameters attached. Metrics that
    /// are undefined for this episode (no goal, too few samples) are `Null`.
    pub fn report(&self, with_stepwise: bool) -> MetricReport {
        let mut values: BTreeMap<&'static str, (Scalar, Vec<&str>)> = BTreeMap::new();
        let success_params = vec!["timeout", "collision_terminate_count"];
        let success = self.success().ok();
        values.insert(
            "S",
            (
                success.map_or(Scalar::Null, Scalar::Bool),
                success_params.clone(),
            ),
        );
        let c = self.collisions();
        for (k, v) in [
            ("C", c.total),
            ("WC", c.wall),
            ("AC", c.agent),
            ("HC", c.human),
        ] {
            values.insert(
                k,
                (Scalar::Int(v as i64), vec!["collision_terminate_count"]),
            );
        }
        values.insert(
            "TO",
            (
                self.timeout().map_or(Scalar::Null, Scalar::Bool),
                vec!["timeout", "collision_terminate_count"],
            ),
        );
        values.insert(
            "FP",
            (
                self.failure_to_progress()
                    .map_or(Scalar::Null, |v| Scalar::Int(v as i64)),
                vec!["fp_distance_eps", "fp_window"],
            ),
        );
        values.insert(
            "ST",
            (
                Scalar::Real(self.stalled_time()),
                vec!["stall_speed", "stall_min_duration"],
            ),
        );
        values.insert(
            "T",
            (
                self.time_to_goal().ok().flatten().into(),
                success_params.clone(),
            ),
        );
        values.insert("PL", (Scalar::Real(self.path_length()), vec![]));
        values.insert(
            "SPL",
            (
                self.spl().map_or(Scalar::Null, Scalar::Real),
                success_params,
            ),
        );
        let v = self.velocity_features();
        values.insert("V_min", (v.min.into(), vec![]));
        values.insert("V_avg", (v.avg.into(), vec![]));
        values.insert("V_max", (v.max.into(), vec![]));
        let a = self.acceleration_features().ok();
        values.insert("A_min", (a.map(|f| f.min).into(), vec![]));
        values.insert("A_avg", (a.map(|f| f.avg).into(), vec![]));
        values.insert("A_max", (a.map(|f| f.max).into(), vec![]));
        let j = self.jerk_features().ok();
        values.insert("J_min", (j.map(|f| f.min).into(), vec![]));
        values.insert("J_avg", (j.map(|f| f.avg).into(), vec![]));
        values.insert("J_max", (j.map(|f| f.max).into(), vec![]));
        let (cd_min, cd_avg) = self.clearing_distance();
        values.insert("CD_min", (cd_min.into(), vec![]));
        values.insert("CD_avg", (cd_avg.into(), vec![]));
        values.insert(
            "SC",
            (
                self.space_compliance().into(),
                vec!["space_threshold", "sc_complement"],
            ),
        );
        values.insert("DH_min", (self.min_distance_to_human().into(), vec![]));
        values.insert("TTC", (self.min_time_to_collision().into(), vec![]));
        values.insert(
            "AT",
            (self.aggregated_time().into(), vec!["cooperative_agent_ids"]),
        );

        let taskwise = TASKWISE
            .iter()
            .map(|spec| {
                let (value, keys) = values.remove(spec.key).expect("every metric computed");
                (
                    spec.key.to_string(),
                    MetricValue {
                        name: spec.key.to_string(),
                        value,
                        unit: spec.unit.to_string(),
                        code: spec.code,
                        params_used: self.params_used(&keys),
                    },
                )
            })
            .collect();
        MetricReport {
            episode_id: self.episode.episode_id.clone(),
            params: self.params.clone(),
            taskwise,
            stepwise: with_stepwise.then(|| self.stepwise()),
        }
    }
}

/// Computes the full suite for one episode.
pub fn compute_all(
    episode: &Episode,
    params: &MetricParams,
    dt: Option<f64>,
    with_stepwise: bool,
) -> Result<MetricReport, MetricError> {
    Ok(Evaluator::new(episode, params, dt)?.report(with_stepwise))
}
