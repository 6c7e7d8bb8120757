//! Import of bird's-eye-view pedestrian tables (`frame agent x y` rows), the
//! layout used by the ETH/UCY family of datasets.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashSet};

use super::{IngestError, DEFAULT_AGENT_RADIUS};
use crate::geometry::Vec2;
use crate::model::{
    synthesize_headings, AgentKind, AgentRecord, AgentState, Episode, ObstacleMap,
    DEFAULT_SPEED_CAP,
};

#[derive(Debug, Clone, PartialEq)]
pub struct TsvOptions {
    pub frame_rate: f64,
    pub robot_id: Option<String>,
    pub radius: f64,
    pub episode_id: String,
}

impl TsvOptions {
    pub fn new(frame_rate: f64) -> Self {
        Self {
            frame_rate,
            robot_id: None,
            radius: DEFAULT_AGENT_RADIUS,
            episode_id: "imported".into(),
        }
    }
}

/// Imports rows `frame_id<TAB>agent_id<TAB>x<TAB>y`; see [`import_tsv_with`].
pub fn import_tsv(
    rows: &str,
    frame_rate: f64,
    robot_id: Option<&str>,
) -> Result<Episode, IngestError> {
    let mut opts = TsvOptions::new(frame_rate);
    opts.robot_id = robot_id.map(str::to_string);
    import_tsv_with(rows, &opts)
}

/// Builds an episode from a trajectory table. States are placed at
/// `t = frame_id / frame_rate`. Every agent is a human except `robot_id`;
/// without a robot id the first agent (in id order) is promoted to the robot
/// under test and recorded under the `proxy_robot` metadata key. Agents whose
/// time span never overlaps the robot's are dropped and listed under
/// `dropped_agents`.
pub fn import_tsv_with(rows: &str, opts: &TsvOptions) -> Result<Episode, IngestError> {
    if !(opts.frame_rate > 0.0 && opts.frame_rate.is_finite()) {
        return Err(IngestError::Schema {
            path: "frame_rate".into(),
            message: format!("frame rate must be positive, got {}", opts.frame_rate),
        });
    }
    let mut tracks: BTreeMap<AgentKey, Vec<(f64, Vec2)>> = BTreeMap::new();
    let mut seen = HashSet::new();
    for (idx, line) in rows.lines().enumerate() {
        let row = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(IngestError::MalformedRow {
                row,
                message: format!("expected 4 fields, found {}", fields.len()),
            });
        }
        let num = |s: &str, what: &str| -> Result<f64, IngestError> {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| IngestError::MalformedRow {
                    row,
                    message: format!("{what} `{s}` is not a finite number"),
                })
        };
        let frame = num(fields[0], "frame id")?;
        let agent = fields[1].to_string();
        let position = Vec2::new(num(fields[2], "x")?, num(fields[3], "y")?);
        if !seen.insert((agent.clone(), frame.to_bits())) {
            return Err(IngestError::MalformedRow {
                row,
                message: format!("duplicate entry for agent `{agent}` at frame {}", fields[0]),
            });
        }
        tracks
            .entry(AgentKey(agent))
            .or_default()
            .push((frame, position));
    }
    if tracks.is_empty() {
        return Err(IngestError::Empty);
    }

    let robot_id = match &opts.robot_id {
        Some(id) => {
            if !tracks.contains_key(&AgentKey(id.clone())) {
                return Err(IngestError::NoRobot(id.clone()));
            }
            id.clone()
        }
        None => tracks.keys().next().expect("non-empty").0.clone(),
    };

    let mut agents = Vec::with_capacity(tracks.len());
    for (AgentKey(id), mut samples) in tracks {
        samples.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut states: Vec<AgentState> = samples
            .iter()
            .map(|&(frame, p)| AgentState::new(frame / opts.frame_rate, p, 0.0))
            .collect();
        let missing = vec![true; states.len()];
        synthesize_headings(&mut states, &missing);
        let kind = if id == robot_id {
            AgentKind::Robot
        } else {
            AgentKind::Human
        };
        agents.push(AgentRecord {
            id,
            kind,
            radius: opts.radius,
            goal: None,
            states,
        });
    }

    let robot = agents
        .iter()
        .find(|a| a.id == robot_id)
        .expect("robot present");
    let (r0, r1) = (robot.start_time(), robot.end_time());
    let mut dropped = Vec::new();
    agents.retain(|a| {
        let keep = a.end_time() >= r0 && a.start_time() <= r1;
        if !keep {
            dropped.push(a.id.clone());
        }
        keep
    });

    let mut metadata = BTreeMap::new();
    metadata.insert("source".into(), "tsv".into());
    metadata.insert("frame_rate".into(), opts.frame_rate.to_string());
    if opts.robot_id.is_none() {
        metadata.insert("proxy_robot".into(), robot_id.clone());
    }
    if !dropped.is_empty() {
        metadata.insert("dropped_agents".into(), dropped.join(","));
    }
    let episode = Episode {
        episode_id: opts.episode_id.clone(),
        agents,
        robot_under_test: robot_id,
        obstacles: ObstacleMap::default(),
        labels: Vec::new(),
        metadata,
    };
    episode.validate(DEFAULT_SPEED_CAP).map_err(|e| match e {
        crate::model::ModelError::Invariant { path, message } => {
            IngestError::Invariant { path, message }
        }
        other => IngestError::Invariant {
            path: String::new(),
            message: other.to_string(),
        },
    })?;
    Ok(episode)
}

/// Agent ids order numerically when both parse as numbers, else
/// lexicographically.
#[derive(Debug, Clone, PartialEq, Eq)]
struct AgentKey(String);

impl Ord for AgentKey {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self.0.parse::<f64>(), other.0.parse::<f64>()) {
            (Ok(a), Ok(b)) => a.total_cmp(&b).then_with(|| self.0.cmp(&other.0)),
            (Ok(_), Err(_)) => Ordering::Less,
            (Err(_), Ok(_)) => Ordering::Greater,
            (Err(_), Err(_)) => self.0.cmp(&other.0),
        }
    }
}

impl PartialOrd for AgentKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
