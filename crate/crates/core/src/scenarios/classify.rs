//! Trajectory detectors.
//!
//! Pairwise detectors work on encounters between the robot and one human. An
//! encounter is a proximity interval (`d <= proximity_max`, gaps shorter than
//! [`MERGE_GAP`] bridged) together with the closing run that leads to its
//! closest approach. Motion directions are averaged over that closing run and
//! decide which pairwise scenario, if any, the encounter is:
//!
//! * opposed directions: frontal approach;
//! * aligned directions: overtaking, by whoever starts behind and ends ahead;
//! * perpendicular directions: intersection, or blind corner when a wall cut
//!   the sightline during the approach.
//!
//! Encounters that happen inside a crowd (at least `crowd_min_humans` moving
//! humans within `crowd_radius` of the robot at any step of the encounter)
//! are left to the crowd detectors, which label runs of steps where such a
//! crowd flows parallel or perpendicular to the robot.

use std::f64::consts::FRAC_PI_2;

use super::{CardRegistry, ClassifierParams, ScenarioError, ScenarioLabel, DETECTORS};
use crate::geometry::{angle_between, Segment, Vec2};
use crate::metrics::{resample, Kinematics};
use crate::model::{common_timeline, median_interval, AgentKind, Episode};

/// Proximity intervals separated by less than this many seconds are merged.
const MERGE_GAP: f64 = 0.5;

/// Half-width of the window used to smooth the robot heading (s).
const HEADING_SMOOTHING: f64 = 0.5;

struct Track {
    id: String,
    radius: f64,
    steps: Vec<Option<Kinematics>>,
}

struct Scene<'e> {
    episode: &'e Episode,
    t: Vec<f64>,
    dt: f64,
    robot: Track,
    humans: Vec<Track>,
}

impl<'e> Scene<'e> {
    fn build(episode: &'e Episode) -> Result<Option<Self>, ScenarioError> {
        let robot = episode.robot()?;
        let Some(dt) = median_interval(robot) else {
            return Ok(None);
        };
        let t = common_timeline(episode, dt)?;
        let track = |a: &crate::model::AgentRecord| -> Result<Track, ScenarioError> {
            Ok(Track {
                id: a.id.clone(),
                radius: a.radius,
                steps: resample(a, &t)?,
            })
        };
        let robot = track(robot)?;
        let humans = episode
            .others()
            .filter(|a| a.kind == AgentKind::Human)
            .map(track)
            .collect::<Result<_, _>>()?;
        Ok(Some(Scene {
            episode,
            t,
            dt,
            robot,
            humans,
        }))
    }

    fn robot_at(&self, k: usize) -> Kinematics {
        self.robot.steps[k].expect("robot spans the timeline")
    }

    fn walls(&self, k: usize) -> impl Iterator<Item = &Segment> {
        self.episode.obstacles.active_at(self.t[k])
    }

    fn crowd_at(&self, k: usize, p: &ClassifierParams) -> Vec<usize> {
        let me = self.robot_at(k).position;
        self.humans
            .iter()
            .enumerate()
            .filter_map(|(i, h)| {
                let s = h.steps[k]?;
                (s.velocity.norm() >= p.approach_speed_min
                    && s.position.distance(me) <= p.crowd_radius)
                    .then_some(i)
            })
            .collect()
    }
}

/// Runs every classifiable card of `registry` on `episode`. `overrides`
/// replaces the labeling criteria of all cards.
pub fn classify(
    episode: &Episode,
    registry: &CardRegistry,
    overrides: Option<&ClassifierParams>,
) -> Result<Vec<ScenarioLabel>, ScenarioError> {
    let cards: Vec<_> = registry.cards().filter(|c| c.is_classifiable()).collect();
    for c in &cards {
        if !DETECTORS.contains(&c.name.as_str()) {
            return Err(ScenarioError::UnknownCard(c.name.clone()));
        }
    }
    let Some(scene) = Scene::build(episode)? else {
        return Ok(Vec::new());
    };
    let mut out = Vec::new();
    for c in cards {
        let params = overrides.unwrap_or_else(|| {
            c.usage_guide
                .labeling_criteria
                .as_ref()
                .expect("classifiable")
        });
        out.extend(detect(&scene, &c.name, params)?);
    }
    sort_labels(&mut out);
    Ok(out)
}

/// Runs the detector for one scenario name.
pub fn classify_with_card(
    episode: &Episode,
    scenario: &str,
    params: &ClassifierParams,
) -> Result<Vec<ScenarioLabel>, ScenarioError> {
    if !DETECTORS.contains(&scenario) {
        return Err(ScenarioError::UnknownCard(scenario.to_string()));
    }
    let Some(scene) = Scene::build(episode)? else {
        return Ok(Vec::new());
    };
    let mut out = detect(&scene, scenario, params)?;
    sort_labels(&mut out);
    Ok(out)
}

fn sort_labels(labels: &mut [ScenarioLabel]) {
    labels.sort_by(|a, b| {
        a.t_start
            .total_cmp(&b.t_start)
            .then_with(|| a.scenario.cmp(&b.scenario))
            .then_with(|| a.agent_ids.cmp(&b.agent_ids))
    });
}

fn detect(
    scene: &Scene,
    scenario: &str,
    p: &ClassifierParams,
) -> Result<Vec<ScenarioLabel>, ScenarioError> {
    p.validate()?;
    Ok(match scenario {
        "parallel_traffic" => crowd_windows(scene, p, Flow::Parallel),
        "perpendicular_traffic" => crowd_windows(scene, p, Flow::Perpendicular),
        _ => encounters(scene, p)
            .into_iter()
            .filter(|e| e.scenario == scenario)
            .map(|e| ScenarioLabel {
                scenario: e.scenario.to_string(),
                agent_ids: vec![scene.robot.id.clone(), scene.humans[e.human].id.clone()],
                t_start: scene.t[e.start],
                t_end: scene.t[e.end],
                confidence: e.confidence,
            })
            .collect(),
    })
}

struct Encounter {
    human: usize,
    scenario: &'static str,
    start: usize,
    end: usize,
    confidence: f64,
}

fn margin(value: f64) -> f64 {
    value.clamp(0.0, 1.0)
}

/// Maximal step runs with `d <= proximity_max`, bridging short gaps.
fn proximity_intervals(d: &[Option<f64>], p: &ClassifierParams, dt: f64) -> Vec<(usize, usize)> {
    let max_gap = (MERGE_GAP / dt).round() as usize;
    let mut out: Vec<(usize, usize)> = Vec::new();
    let mut k = 0;
    while k < d.len() {
        if d[k].is_some_and(|x| x <= p.proximity_max) {
            let start = k;
            while k + 1 < d.len() && d[k + 1].is_some_and(|x| x <= p.proximity_max) {
                k += 1;
            }
            match out.last_mut() {
                Some(last)
                    if start - last.1 <= max_gap + 1
                        && d[last.1..start].iter().all(Option::is_some) =>
                {
                    last.1 = k
                }
                _ => out.push((start, k)),
            }
        }
        k += 1;
    }
    out
}

/// Mean unit motion direction over `range` using steps at or above
/// `min_speed`; `None` unless at least half the steps qualify.
fn mean_direction(steps: impl Iterator<Item = Kinematics> + Clone, min_speed: f64) -> Option<Vec2> {
    let total = steps.clone().count();
    let moving: Vec<Vec2> = steps
        .filter(|s| s.velocity.norm() >= min_speed)
        .filter_map(|s| s.velocity.normalized())
        .collect();
    if total == 0 || 2 * moving.len() < total {
        return None;
    }
    moving
        .into_iter()
        .fold(Vec2::ZERO, |a, b| a + b)
        .normalized()
}

fn mean_speed(steps: impl Iterator<Item = Kinematics>) -> f64 {
    let (sum, n) = steps.fold((0.0, 0usize), |(s, n), k| (s + k.velocity.norm(), n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Free width across `dir` at `centre`: distance to the nearest wall on each
/// side, summed (`+inf` if either side is open).
fn passing_width(scene: &Scene, k: usize, centre: Vec2, dir: Vec2) -> f64 {
    let n = dir.perp();
    let side = |d: Vec2| {
        scene
            .walls(k)
            .filter_map(|s| s.ray_hit(centre, d))
            .fold(f64::INFINITY, f64::min)
    };
    side(n) + side(-n)
}

fn encounters(scene: &Scene, p: &ClassifierParams) -> Vec<Encounter> {
    let mut out = Vec::new();
    for (hi, human) in scene.humans.iter().enumerate() {
        let d: Vec<Option<f64>> = (0..scene.t.len())
            .map(|k| human.steps[k].map(|h| h.position.distance(scene.robot_at(k).position)))
            .collect();
        let mut previous_end = 0;
        for (a, b) in proximity_intervals(&d, p, scene.dt) {
            let closest = (a..=b)
                .min_by(|&i, &j| d[i].unwrap().total_cmp(&d[j].unwrap()))
                .expect("non-empty interval");
            // closing run leading into the closest approach
            let mut s = closest;
            while s > previous_end && d[s - 1].is_some_and(|x| x > d[s].unwrap()) {
                s -= 1;
            }
            let window_start = s.max(previous_end);
            previous_end = b;
            if b <= window_start {
                continue;
            }
            let in_crowd = (window_start..=b)
                .any(|k| scene.crowd_at(k, p).len() >= p.crowd_min_humans as usize);
            if in_crowd {
                continue;
            }
            if let Some(e) = classify_encounter(scene, p, hi, &d, window_start, closest, b) {
                out.push(e);
            }
        }
    }
    out
}

fn classify_encounter(
    scene: &Scene,
    p: &ClassifierParams,
    hi: usize,
    d: &[Option<f64>],
    s: usize,
    closest: usize,
    end: usize,
) -> Option<Encounter> {
    let human = &scene.humans[hi];
    // short approaches fall back to the whole window for direction estimates
    let span = if closest - s >= 2 {
        s..=closest
    } else {
        s..=end
    };
    let robot_steps = span.clone().map(|k| scene.robot_at(k));
    let human_steps = span
        .clone()
        .map(|k| human.steps[k].expect("present in interval"));
    let u_r = mean_direction(robot_steps, p.approach_speed_min)?;
    let u_h = mean_direction(human_steps, p.approach_speed_min)?;
    let theta = angle_between(u_r, u_h);
    let r_at = |k: usize| scene.robot_at(k);
    let h_at = |k: usize| human.steps[k].expect("present in interval");
    let encounter = |scenario, confidence| Encounter {
        human: hi,
        scenario,
        start: s,
        end,
        confidence,
    };

    if theta >= std::f64::consts::PI - p.facing_angle_max {
        let offset = h_at(s).position - r_at(s).position;
        if offset.dot(u_r) <= 0.0 || (-offset).dot(u_h) <= 0.0 {
            return None;
        }
        if closest == s {
            return None;
        }
        let closing = (d[s].unwrap() - d[closest].unwrap()) / (scene.t[closest] - scene.t[s]);
        if closing < p.approach_speed_min {
            return None;
        }
        let centre = (r_at(closest).position + h_at(closest).position) * 0.5;
        let width = passing_width(scene, closest, centre, u_r);
        let needed = 2.0 * (human.radius + scene.robot.radius) + p.min_clearance;
        if width < needed {
            return None;
        }
        let facing = (theta - (std::f64::consts::PI - p.facing_angle_max)) / p.facing_angle_max;
        let speed = (closing - p.approach_speed_min) / p.approach_speed_min;
        let room = (width - needed) / needed;
        return Some(encounter(
            "frontal_approach",
            margin(facing).min(margin(speed)).min(margin(room)),
        ));
    }

    if theta <= p.facing_angle_max {
        let axis = (u_r + u_h).normalized()?;
        let lead_before = (h_at(s).position - r_at(s).position).dot(axis);
        let lead_after = (h_at(end).position - r_at(end).position).dot(axis);
        let v_r = mean_speed((s..=end).map(r_at));
        let v_h = mean_speed((s..=end).map(h_at));
        let (scenario, ratio) = if lead_before > 0.0 && lead_after < 0.0 {
            ("robot_overtaking", v_r / v_h)
        } else if lead_before < 0.0 && lead_after > 0.0 {
            ("pedestrian_overtaking", v_h / v_r)
        } else {
            return None;
        };
        if !(ratio >= p.overtake_speed_ratio_min) {
            return None;
        }
        let aligned = (p.facing_angle_max - theta) / p.facing_angle_max;
        let faster = (ratio - p.overtake_speed_ratio_min) / p.overtake_speed_ratio_min;
        let passed = lead_after.abs() / (human.radius + scene.robot.radius);
        return Some(encounter(
            scenario,
            margin(aligned).min(margin(faster)).min(margin(passed)),
        ));
    }

    if (theta - FRAC_PI_2).abs() <= p.crossing_angle_window {
        let d_min = d[closest].unwrap();
        let blocked = (s..=closest).any(|k| {
            let sight = Segment::new(r_at(k).position, h_at(k).position);
            scene.walls(k).any(|w| w.intersects(&sight))
        });
        let square =
            (p.crossing_angle_window - (theta - FRAC_PI_2).abs()) / p.crossing_angle_window;
        let near = (p.proximity_max - d_min) / p.proximity_max;
        let scenario = if blocked {
            "blind_corner"
        } else {
            "intersection"
        };
        return Some(encounter(scenario, margin(square).min(margin(near))));
    }
    None
}

#[derive(Clone, Copy, PartialEq)]
enum Flow {
    Parallel,
    Perpendicular,
}

/// Angle in [0, π/2] between the crowd's flow axis and the robot heading
/// axis. Flow is averaged on doubled angles so opposite walking directions
/// share one axis.
fn flow_offset(heading: Vec2, crowd: &[Vec2]) -> f64 {
    let (c, s) = crowd.iter().fold((0.0, 0.0), |(c, s), v| {
        let a = 2.0 * v.angle();
        (c + a.cos(), s + a.sin())
    });
    let axis = 0.5 * s.atan2(c);
    let diff = crate::geometry::wrap_angle(2.0 * (heading.angle() - axis)).abs() / 2.0;
    diff.min(FRAC_PI_2)
}

fn crowd_windows(scene: &Scene, p: &ClassifierParams, flow: Flow) -> Vec<ScenarioLabel> {
    let n = scene.t.len();
    let h = (HEADING_SMOOTHING / scene.dt).round() as usize;
    let mut hits: Vec<Option<(f64, Vec<usize>)>> = vec![None; n];
    for (k, hit) in hits.iter_mut().enumerate() {
        let lo = k.saturating_sub(h);
        let hi = (k + h).min(n - 1);
        let heading = (lo..=hi).fold(Vec2::ZERO, |acc, j| acc + scene.robot_at(j).velocity);
        if heading.norm() / ((hi - lo + 1) as f64) < p.approach_speed_min {
            continue;
        }
        let crowd = scene.crowd_at(k, p);
        if crowd.len() < p.crowd_min_humans as usize {
            continue;
        }
        let dirs: Vec<Vec2> = crowd
            .iter()
            .map(|&i| scene.humans[i].steps[k].unwrap().velocity)
            .collect();
        let offset = flow_offset(heading, &dirs);
        let margin_angle = match flow {
            Flow::Parallel => (p.facing_angle_max - offset) / p.facing_angle_max,
            Flow::Perpendicular => {
                (p.crossing_angle_window - (FRAC_PI_2 - offset)) / p.crossing_angle_window
            }
        };
        if margin_angle >= 0.0 {
            let count =
                (crowd.len() + 1 - p.crowd_min_humans as usize) as f64 / p.crowd_min_humans as f64;
            *hit = Some((margin(margin_angle).min(margin(count)), crowd));
        }
    }

    let max_gap = (MERGE_GAP / scene.dt).round() as usize;
    let mut runs: Vec<(usize, usize)> = Vec::new();
    for k in (0..n).filter(|&k| hits[k].is_some()) {
        match runs.last_mut() {
            Some(last) if k - last.1 <= max_gap + 1 => last.1 = k,
            _ => runs.push((k, k)),
        }
    }
    let name = match flow {
        Flow::Parallel => "parallel_traffic",
        Flow::Perpendicular => "perpendicular_traffic",
    };
    runs.into_iter()
        .filter(|&(a, b)| scene.t[b] - scene.t[a] >= p.min_duration - 1e-9)
        .map(|(a, b)| {
            let mut members = std::collections::BTreeSet::new();
            let mut confidence = 0.0_f64;
            let mut hit_steps = 0;
            for (c, crowd) in hits[a..=b].iter().flatten() {
                confidence += c;
                hit_steps += 1;
                members.extend(crowd.iter().copied());
            }
            let mut agent_ids = vec![scene.robot.id.clone()];
            agent_ids.extend(members.into_iter().map(|i| scene.humans[i].id.clone()));
            ScenarioLabel {
                scenario: name.to_string(),
                agent_ids,
                t_start: scene.t[a],
                t_end: scene.t[b],
                confidence: confidence / hit_steps as f64,
            }
        })
        .collect()
}
