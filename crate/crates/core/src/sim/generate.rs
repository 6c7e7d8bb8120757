//! Seeded scenario layouts.
//!
//! Every generator places the robot travelling towards +x. Jitter: start
//! offsets up to 0.5 m along the travel axis, speeds up to 20%. Lateral lane
//! offsets are jittered by at most 0.1 m so that lanes stay separated by more
//! than the summed radii; the isotropic force model alone does not resolve
//! exact head-on conflicts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{corridor, AgentSpec, SimConfig, SimError};
use crate::geometry::{Segment, Vec2};
use crate::model::{AgentKind, ObstacleMap};

pub const SCENARIOS: [&str; 8] = [
    "frontal_approach",
    "robot_overtaking",
    "pedestrian_overtaking",
    "intersection",
    "blind_corner",
    "parallel_traffic",
    "perpendicular_traffic",
    "random_crossing",
];

/// Corridor width for the head-on layout (m).
pub const FRONTAL_CORRIDOR_WIDTH: f64 = 2.5;
const OVERTAKE_CORRIDOR_WIDTH: f64 = 3.0;
const JUNCTION_WIDTH: f64 = 2.5;

struct Jitter(ChaCha8Rng);

impl Jitter {
    fn along(&mut self) -> f64 {
        self.0.random_range(-0.5..=0.5)
    }
    fn lateral(&mut self) -> f64 {
        self.0.random_range(-0.1..=0.1)
    }
    fn speed(&mut self, v: f64) -> f64 {
        v * (1.0 + self.0.random_range(-0.2..=0.2))
    }
    fn range(&mut self, lo: f64, hi: f64) -> f64 {
        self.0.random_range(lo..=hi)
    }
    fn coin(&mut self) -> bool {
        self.0.random_bool(0.5)
    }
}

fn v(x: f64, y: f64) -> Vec2 {
    Vec2::new(x, y)
}

fn robot(position: Vec2, goal: Vec2, speed: f64) -> AgentSpec {
    AgentSpec::new("robot", AgentKind::Robot, position, goal, speed)
}

fn human(i: usize, position: Vec2, goal: Vec2, speed: f64) -> AgentSpec {
    AgentSpec::new(format!("h{i}"), AgentKind::Human, position, goal, speed)
}

/// Builds the configuration for scenario `name`. The same
/// `(name, variation_seed)` always yields the same configuration; the seed
/// also drives the simulation noise.
pub fn generate_scenario(name: &str, variation_seed: u64) -> Result<SimConfig, SimError> {
    let mut rng = ChaCha8Rng::seed_from_u64(variation_seed);
    // keep layout jitter independent of the simulation noise stream
    rng.set_stream(1);
    let mut j = Jitter(rng);
    let (agents, segments, max_duration) = match name {
        "frontal_approach" => frontal(&mut j),
        "robot_overtaking" => overtaking(&mut j, true),
        "pedestrian_overtaking" => overtaking(&mut j, false),
        "intersection" => crossing(&mut j, false),
        "blind_corner" => crossing(&mut j, true),
        "parallel_traffic" => parallel(&mut j),
        "perpendicular_traffic" => perpendicular(&mut j),
        "random_crossing" => random_crossing(&mut j),
        other => return Err(SimError::UnknownScenario(other.to_string())),
    };
    let mut config = SimConfig {
        max_duration,
        seed: variation_seed,
        agents,
        scene: ObstacleMap {
            segments,
            dynamic: Vec::new(),
        },
        episode_id: format!("{name}_{variation_seed}"),
        ..Default::default()
    };
    config.metadata.insert("scenario".into(), name.into());
    config
        .metadata
        .insert("variation_seed".into(), variation_seed.to_string());
    Ok(config)
}

type Layout = (Vec<AgentSpec>, Vec<Segment>, f64);

fn frontal(j: &mut Jitter) -> Layout {
    let lane = 0.45;
    let ry = -lane + j.lateral();
    let hy = lane + j.lateral();
    let agents = vec![
        robot(v(-7.0 + j.along(), ry), v(8.0, ry), j.speed(1.0)),
        human(0, v(7.0 + j.along(), hy), v(-8.0, hy), j.speed(1.2)),
    ];
    (
        agents,
        corridor(-10.0, 10.0, 0.0, FRONTAL_CORRIDOR_WIDTH),
        40.0,
    )
}

/// The faster agent starts about 2.5 m behind in the neighbouring lane. The
/// slower agent's goal lies short of the faster one's so that it never
/// catches up again after arriving.
fn overtaking(j: &mut Jitter, robot_passes: bool) -> Layout {
    let (fast, slow) = (j.speed(1.4), j.speed(0.7));
    let rear = v(-6.0 + j.along(), -0.5 + j.lateral());
    let front = v(-3.5 + j.along(), 0.5 + j.lateral());
    let agents = if robot_passes {
        vec![
            robot(rear, v(24.0, rear.y), fast),
            human(0, front, v(20.0, front.y), slow),
        ]
    } else {
        vec![
            robot(front, v(20.0, front.y), slow),
            human(0, rear, v(24.0, rear.y), fast),
        ]
    };
    (
        agents,
        corridor(-10.0, 28.0, 0.0, OVERTAKE_CORRIDOR_WIDTH),
        60.0,
    )
}

/// Perpendicular paths meeting at the origin. The second agent reaches the
/// crossing 1.2 to 1.6 s after the first, so undisturbed paths pass at
/// `v_r v_h lag / |(v_r, v_h)|`, which stays between the summed radii and 2 m.
fn crossing(j: &mut Jitter, walled: bool) -> Layout {
    let (vr, vh) = (j.speed(1.0), j.speed(1.0));
    let ry = j.lateral();
    let hx = j.lateral();
    let lag = j.range(1.2, 1.6);
    let dr = 6.0 + j.along();
    let tr = dr / vr;
    let th = if j.coin() { tr + lag } else { tr - lag };
    let dh = vh * th;
    let agents = vec![
        robot(v(-dr, ry), v(7.0, ry), vr),
        human(0, v(hx, -dh), v(hx, 7.0), vh),
    ];
    let segments = if walled {
        junction_walls(JUNCTION_WIDTH, 12.0)
    } else {
        Vec::new()
    };
    (agents, segments, 40.0)
}

/// Four L-shaped wall pieces forming a cross junction of two corridors.
pub fn junction_walls(width: f64, arm: f64) -> Vec<Segment> {
    let h = width / 2.0;
    let mut out = Vec::new();
    for (sx, sy) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
        let corner = v(sx * h, sy * h);
        out.push(Segment::new(corner, v(sx * arm, sy * h)));
        out.push(Segment::new(corner, v(sx * h, sy * arm)));
    }
    out
}

/// Five pedestrians walk alongside the robot, three walk the other way in
/// interleaved lanes.
fn parallel(j: &mut Jitter) -> Layout {
    let vr = j.speed(1.0);
    let x0 = -8.0 + j.along();
    let ry = j.lateral();
    let mut agents = vec![robot(v(x0, ry), v(12.0, ry), vr)];
    let with_flow = [
        (-1.0, -1.0),
        (1.0, -2.6),
        (1.0, 1.0),
        (-1.0, 2.6),
        (2.5, 0.0),
    ];
    for (i, (dx, y)) in with_flow.into_iter().enumerate() {
        let x = x0 + dx + j.range(-0.3, 0.3);
        let speed = vr * (1.0 + j.range(-0.05, 0.05));
        agents.push(human(i, v(x, y), v(12.0 + dx, y), speed));
    }
    let against = [(8.0, -1.8), (9.5, 1.8), (11.0, 3.4)];
    for (i, (x, y)) in against.into_iter().enumerate() {
        let speed = j.speed(1.0);
        agents.push(human(
            5 + i,
            v(x + j.range(-0.3, 0.3), y),
            v(-12.0, y),
            speed,
        ));
    }
    (agents, Vec::new(), 40.0)
}

/// A block of eight pedestrians crosses the robot's path; the robot is timed
/// to be 2 m short of the crossing line when the first row reaches it.
fn perpendicular(j: &mut Jitter) -> Layout {
    let vr = j.speed(1.0);
    let vc = j.speed(1.0);
    let sign = if j.coin() { 1.0 } else { -1.0 };
    let ry = j.lateral();
    let x0 = -2.0 - 6.0 * vr / vc + j.along();
    let mut agents = vec![robot(v(x0, ry), v(12.0, ry), vr)];
    let mut i = 0;
    for y0 in [6.0, 7.5] {
        for x in [0.0, 1.2, 2.4, 3.6] {
            let speed = vc * (1.0 + j.range(-0.05, 0.05));
            let x = x + j.range(-0.1, 0.1);
            agents.push(human(i, v(x, -sign * y0), v(x, sign * 10.0), speed));
            i += 1;
        }
    }
    (agents, Vec::new(), 40.0)
}

/// One to three pedestrians cross the open space between random antipodal
/// points.
fn random_crossing(j: &mut Jitter) -> Layout {
    let mut agents = vec![robot(
        v(-8.0 + j.along(), j.lateral()),
        v(8.0, 0.0),
        j.speed(1.0),
    )];
    let n = 1 + (j.range(0.0, 2.999) as usize);
    for i in 0..n {
        let a = j.range(-std::f64::consts::PI, std::f64::consts::PI);
        let r = j.range(6.0, 8.0);
        let start = Vec2::from_angle(a) * r;
        agents.push(human(i, start, -start, j.speed(1.1)));
    }
    (agents, Vec::new(), 40.0)
}
