#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use socnav::geometry::{Segment, Vec2};
use socnav::model::{
    AgentKind, AgentRecord, AgentState, Episode, EpisodeLabel, Goal, ObstacleFrame, ObstacleMap,
    DEFAULT_SPEED_CAP,
};

pub const DT: f64 = 0.1;

pub struct Fuzz {
    /// Side of the square arena (m); smaller is denser.
    pub arena: f64,
    pub max_agents: usize,
    pub max_steps: usize,
    pub max_walls: usize,
    pub with_goal: bool,
    /// Also fuzz labels, metadata and omitted velocities.
    pub decorate: bool,
}

impl Fuzz {
    pub fn dense() -> Self {
        Fuzz {
            arena: 3.0,
            max_agents: 6,
            max_steps: 80,
            max_walls: 4,
            with_goal: true,
            decorate: false,
        }
    }

    pub fn varied() -> Self {
        Fuzz {
            arena: 10.0,
            max_agents: 5,
            max_steps: 40,
            max_walls: 3,
            with_goal: false,
            decorate: true,
        }
    }
}

fn point(rng: &mut ChaCha8Rng, half: f64) -> Vec2 {
    Vec2::new(rng.random_range(-half..half), rng.random_range(-half..half))
}

fn segment(rng: &mut ChaCha8Rng, half: f64) -> Segment {
    let a = point(rng, half);
    let mut b = point(rng, half);
    while b.distance(a) < 1e-3 {
        b = point(rng, half);
    }
    Segment::new(a, b)
}

/// Random walk sampled at `k * DT` for `k` in `k0..=k1`.
fn walk(
    rng: &mut ChaCha8Rng,
    half: f64,
    k0: usize,
    k1: usize,
    explicit_velocity: bool,
) -> Vec<AgentState> {
    let mut p = point(rng, half);
    let mut v = Vec2::from_angle(rng.random_range(-3.0..3.0)) * rng.random_range(0.0..1.5);
    let mut out = Vec::new();
    for k in k0..=k1 {
        let t = k as f64 * DT;
        let mut s = AgentState::new(t, p, if v.norm() > 0.0 { v.angle() } else { 0.0 });
        if explicit_velocity {
            s = s.with_velocity(v);
        }
        out.push(s);
        v += Vec2::new(rng.random_range(-0.4..0.4), rng.random_range(-0.4..0.4));
        if v.norm() > 2.0 {
            v = v * (2.0 / v.norm());
        }
        // steer back towards the arena
        if p.norm() > half {
            v -= p * (0.2 / p.norm());
        }
        p += v * DT;
    }
    out
}

/// A valid episode; `seed` fixes every random choice.
pub fn episode(seed: u64, f: &Fuzz) -> Episode {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = f.arena / 2.0;
    let n = rng.random_range(4..=f.max_steps.max(4));
    let explicit = |rng: &mut ChaCha8Rng| !f.decorate || rng.random_bool(0.5);
    let e = explicit(&mut rng);
    let robot_states = walk(&mut rng, half, 0, n - 1, e);
    // half the goals lie on the walk so that successes are common
    let goal = (f.with_goal || rng.random_bool(0.5)).then(|| {
        let position = if rng.random_bool(0.5) {
            robot_states[rng.random_range(1..n)].position + point(&mut rng, 0.2)
        } else {
            point(&mut rng, half)
        };
        Goal {
            position,
            tolerance: rng.random_range(0.1..0.6),
        }
    });
    let mut agents = vec![AgentRecord {
        id: "robot".into(),
        kind: AgentKind::Robot,
        radius: rng.random_range(0.15..0.5),
        goal,
        states: robot_states,
    }];
    let others = rng.random_range(1..f.max_agents.max(2));
    for i in 0..others {
        let k0 = rng.random_range(0..n / 2);
        let k1 = rng.random_range(n / 2..n);
        let kind = if rng.random_bool(0.8) {
            AgentKind::Human
        } else {
            AgentKind::Robot
        };
        let e = explicit(&mut rng);
        let states = walk(&mut rng, half, k0, k1, e);
        let goal = rng.random_bool(0.5).then(|| Goal {
            position: point(&mut rng, half),
            tolerance: rng.random_range(0.1..0.6),
        });
        agents.push(AgentRecord {
            id: format!("a{i}"),
            kind,
            radius: rng.random_range(0.15..0.5),
            goal,
            states,
        });
    }
    let walls = rng.random_range(0..=f.max_walls);
    let segments = (0..walls).map(|_| segment(&mut rng, half)).collect();
    let mut dynamic = Vec::new();
    if rng.random_bool(0.3) {
        let frames = rng.random_range(1..=3);
        let mut t = 0.0;
        for _ in 0..frames {
            t += rng.random_range(0.05..(n as f64 * DT / 2.0).max(0.1));
            let count = rng.random_range(0..=2);
            dynamic.push(ObstacleFrame {
                t,
                segments: (0..count).map(|_| segment(&mut rng, half)).collect(),
            });
        }
    }
    let mut labels = Vec::new();
    let mut metadata = BTreeMap::new();
    if f.decorate {
        for i in 0..rng.random_range(0..3) {
            let a = rng.random_range(0.0..n as f64 * DT);
            labels.push(EpisodeLabel {
                scenario: format!("scenario_{i}"),
                t_start: a,
                t_end: a + rng.random_range(0.0..2.0),
            });
        }
        for i in 0..rng.random_range(0..3) {
            metadata.insert(
                format!("key{i}"),
                format!("value \"{}\" é", rng.random_range(0..1000)),
            );
        }
    }
    let ep = Episode {
        episode_id: format!("fuzz_{seed}"),
        agents,
        robot_under_test: "robot".into(),
        obstacles: ObstacleMap { segments, dynamic },
        labels,
        metadata,
    };
    ep.validate(DEFAULT_SPEED_CAP)
        .expect("fuzzed episode is valid");
    ep
}

/// Straight line from `start` to `goal` at `speed`, stopping on arrival.
pub fn straight_episode(start: Vec2, goal: Vec2, speed: f64, extra_steps: usize) -> Episode {
    let d = goal - start;
    let dir = d.normalized().unwrap_or(Vec2::ZERO);
    let travel = d.norm() / speed;
    let n = (travel / DT).ceil() as usize;
    let mut states = Vec::new();
    for k in 0..=n + extra_steps {
        let t = k as f64 * DT;
        let along = (speed * t).min(d.norm());
        let v = if k < n { dir * speed } else { Vec2::ZERO };
        states.push(AgentState::new(t, start + dir * along, dir.angle()).with_velocity(v));
    }
    Episode {
        episode_id: "straight".into(),
        agents: vec![AgentRecord {
            id: "robot".into(),
            kind: AgentKind::Robot,
            radius: 0.3,
            goal: Some(Goal {
                position: goal,
                tolerance: 0.2,
            }),
            states,
        }],
        robot_under_test: "robot".into(),
        obstacles: ObstacleMap::default(),
        labels: Vec::new(),
        metadata: BTreeMap::new(),
    }
}

/// Distance from `p` to segment `ab`, by projection.
pub fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let (abx, aby) = (b.x - a.x, b.y - a.y);
    let (apx, apy) = (p.x - a.x, p.y - a.y);
    let len2 = abx * abx + aby * aby;
    let u = if len2 == 0.0 {
        0.0
    } else {
        ((apx * abx + apy * aby) / len2).clamp(0.0, 1.0)
    };
    let (cx, cy) = (a.x + u * abx - p.x, a.y + u * aby - p.y);
    (cx * cx + cy * cy).sqrt()
}

/// Counts `(C, WC, AC, HC)` by per-step overlap tests and run merging, with
/// agents matched by sample index.
pub fn collision_oracle(ep: &Episode, terminate_after: Option<usize>) -> (u32, u32, u32, u32) {
    let robot = &ep.agents[0];
    let n = robot.states.len();
    let step_of = |t: f64| (t / DT).round() as usize;
    // per target: overlap flag per step
    let mut series: Vec<(Option<AgentKind>, Vec<bool>)> = Vec::new();
    let wall_hits: Vec<bool> = (0..n)
        .map(|k| {
            let s = &robot.states[k];
            let mut active: Vec<&Segment> = ep.obstacles.segments.iter().collect();
            if let Some(frame) = ep.obstacles.dynamic.iter().rfind(|f| f.t <= s.t) {
                active.extend(frame.segments.iter());
            }
            active
                .iter()
                .any(|w| point_segment_distance(s.position, w.a, w.b) < robot.radius)
        })
        .collect();
    series.push((None, wall_hits));
    for other in &ep.agents[1..] {
        let mut hits = vec![false; n];
        for s in &other.states {
            let k = step_of(s.t);
            let r = &robot.states[k];
            let (dx, dy) = (s.position.x - r.position.x, s.position.y - r.position.y);
            hits[k] = (dx * dx + dy * dy).sqrt() < robot.radius + other.radius;
        }
        series.push((Some(other.kind), hits));
    }
    // events as (start step, kind)
    let mut events: Vec<(usize, usize, Option<AgentKind>)> = Vec::new();
    for (kind, hits) in &series {
        let mut k = 0;
        while k < n {
            if hits[k] {
                let start = k;
                while k < n && hits[k] {
                    k += 1;
                }
                events.push((start, k - 1, *kind));
            } else {
                k += 1;
            }
        }
    }
    events.sort_by_key(|e| (e.0, e.1));
    if let Some(limit) = terminate_after {
        if events.len() >= limit {
            let stop = events[limit - 1].0;
            events.retain(|e| e.0 <= stop);
        }
    }
    let wc = events.iter().filter(|e| e.2.is_none()).count() as u32;
    let ac = events.iter().filter(|e| e.2.is_some()).count() as u32;
    let hc = events
        .iter()
        .filter(|e| e.2 == Some(AgentKind::Human))
        .count() as u32;
    (wc + ac, wc, ac, hc)
}
