//! Scenario cards and trajectory classifiers.

mod builtin;
mod classify;

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::json::to_canonical_bytes;
use crate::model::ModelError;

pub use builtin::builtin_cards;
pub use classify::{classify, classify_with_card};

/// Names of the scenarios with a trajectory detector.
pub const DETECTORS: [&str; 7] = [
    "frontal_approach",
    "robot_overtaking",
    "pedestrian_overtaking",
    "intersection",
    "blind_corner",
    "parallel_traffic",
    "perpendicular_traffic",
];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("malformed card: {0}")]
    Syntax(String),
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
    #[error("no detector for card `{0}`")]
    UnknownCard(String),
    #[error("duplicate card name `{0}`")]
    DuplicateCard(String),
    #[error("labeling criterion `{0}` must be positive")]
    InvalidParams(&'static str),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

fn deg(d: f64) -> f64 {
    d.to_radians()
}
fn default_facing_angle_max() -> f64 {
    deg(30.0)
}
fn default_approach_speed_min() -> f64 {
    0.1
}
fn default_min_clearance() -> f64 {
    0.2
}
fn default_proximity_max() -> f64 {
    2.0
}
fn default_crossing_angle_window() -> f64 {
    deg(30.0)
}
fn default_overtake_speed_ratio_min() -> f64 {
    1.2
}
fn default_crowd_min_humans() -> u32 {
    5
}
fn default_crowd_radius() -> f64 {
    5.0
}
fn default_min_duration() -> f64 {
    1.0
}

/// Machine-checkable labeling thresholds. Angles are radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifierParams {
    /// Largest deviation from exactly opposed (or exactly aligned) motion.
    #[serde(default = "default_facing_angle_max")]
    pub facing_angle_max: f64,
    #[serde(default = "default_approach_speed_min")]
    pub approach_speed_min: f64,
    /// Free width required beyond both bodies side by side.
    #[serde(default = "default_min_clearance")]
    pub min_clearance: f64,
    #[serde(default = "default_proximity_max")]
    pub proximity_max: f64,
    /// Tolerance around a right angle for crossing paths.
    #[serde(default = "default_crossing_angle_window")]
    pub crossing_angle_window: f64,
    #[serde(default = "default_overtake_speed_ratio_min")]
    pub overtake_speed_ratio_min: f64,
    #[serde(default = "default_crowd_min_humans")]
    pub crowd_min_humans: u32,
    /// Humans within this distance of the robot count towards a crowd.
    #[serde(default = "default_crowd_radius")]
    pub crowd_radius: f64,
    /// Shortest crowd-traffic window that is reported (s).
    #[serde(default = "default_min_duration")]
    pub min_duration: f64,
}

impl Default for ClassifierParams {
    fn default() -> Self {
        Self {
            facing_angle_max: default_facing_angle_max(),
            approach_speed_min: default_approach_speed_min(),
            min_clearance: default_min_clearance(),
            proximity_max: default_proximity_max(),
            crossing_angle_window: default_crossing_angle_window(),
            overtake_speed_ratio_min: default_overtake_speed_ratio_min(),
            crowd_min_humans: default_crowd_min_humans(),
            crowd_radius: default_crowd_radius(),
            min_duration: default_min_duration(),
        }
    }
}

impl ClassifierParams {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let checks = [
            ("facing_angle_max", self.facing_angle_max),
            ("approach_speed_min", self.approach_speed_min),
            ("min_clearance", self.min_clearance),
            ("proximity_max", self.proximity_max),
            ("crossing_angle_window", self.crossing_angle_window),
            ("overtake_speed_ratio_min", self.overtake_speed_ratio_min),
            ("crowd_min_humans", self.crowd_min_humans as f64),
            ("crowd_radius", self.crowd_radius),
            ("min_duration", self.min_duration),
        ];
        match checks
            .into_iter()
            .find(|(_, v)| !(*v > 0.0 && v.is_finite()))
        {
            Some((name, _)) => Err(ScenarioError::InvalidParams(name)),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ResearchContext {
    pub location: String,
    pub density: String,
    pub task: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Definition {
    pub geometric_layout: String,
    pub intended_robot_task: String,
    pub intended_human_behavior: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct UsageGuide {
    pub success_metrics: Vec<String>,
    pub quality_metrics: Vec<String>,
    pub ideal_outcome: String,
    pub failure_modes: Vec<String>,
    /// Absent for documentation-only cards.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labeling_criteria: Option<ClassifierParams>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ScenarioCard {
    pub name: String,
    pub description: String,
    pub scenario_type: String,
    pub research_context: ResearchContext,
    pub definition: Definition,
    pub usage_guide: UsageGuide,
}

impl ScenarioCard {
    pub fn is_classifiable(&self) -> bool {
        self.usage_guide.labeling_criteria.is_some()
    }

    /// Non-fatal remarks about the card.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.is_classifiable() {
            out.push(format!(
                "card `{}` has no labeling_criteria; it is documentation only",
                self.name
            ));
        }
        out
    }
}

pub fn parse_card(document: &[u8]) -> Result<ScenarioCard, ScenarioError> {
    let mut de = serde_json::Deserializer::from_slice(document);
    let card: ScenarioCard = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if inner.is_syntax() || inner.is_eof() {
            ScenarioError::Syntax(inner.to_string())
        } else {
            ScenarioError::Schema {
                path: pointer(&path),
                message: inner.to_string(),
            }
        }
    })?;
    de.end().map_err(|e| ScenarioError::Syntax(e.to_string()))?;
    if card.name.trim().is_empty() {
        return Err(ScenarioError::Schema {
            path: "/name".into(),
            message: "card name must not be empty".into(),
        });
    }
    if let Some(p) = &card.usage_guide.labeling_criteria {
        p.validate().map_err(|e| ScenarioError::Schema {
            path: "/usage_guide/labeling_criteria".into(),
            message: e.to_string(),
        })?;
    }
    Ok(card)
}

/// Converts a dotted serde path (`a.b[2].c`) to a JSON pointer.
fn pointer(dotted: &str) -> String {
    if dotted == "." || dotted.is_empty() {
        return String::new();
    }
    let mut out = String::new();
    for part in dotted.split('.') {
        let (key, rest) = part.split_once('[').unwrap_or((part, ""));
        if !key.is_empty() {
            out.push('/');
            out.push_str(key);
        }
        for idx in rest.split('[') {
            let idx = idx.trim_end_matches(']');
            if !idx.is_empty() {
                out.push('/');
                out.push_str(idx);
            }
        }
    }
    out
}

pub fn serialize_card(card: &ScenarioCard) -> Vec<u8> {
    to_canonical_bytes(&serde_json::to_value(card).expect("card serializes"))
}

/// Cards indexed by unique name.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CardRegistry {
    cards: BTreeMap<String, ScenarioCard>,
}

impl CardRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// The seven built-in cards with default labeling criteria.
    pub fn builtin() -> Self {
        let mut r = Self::new();
        for card in builtin_cards() {
            r.insert(card).expect("built-in names are unique");
        }
        r
    }

    pub fn insert(&mut self, card: ScenarioCard) -> Result<(), ScenarioError> {
        if self.cards.contains_key(&card.name) {
            return Err(ScenarioError::DuplicateCard(card.name));
        }
        self.cards.insert(card.name.clone(), card);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&ScenarioCard> {
        self.cards.get(name)
    }

    pub fn cards(&self) -> impl Iterator<Item = &ScenarioCard> {
        self.cards.values()
    }

    pub fn len(&self) -> usize {
        self.cards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cards.is_empty()
    }

    /// Loads every `*.json` card in `dir` (sorted by file name). Returns the
    /// registry and the warnings of the loaded cards.
    pub fn load_dir(dir: &Path) -> Result<(Self, Vec<String>), ScenarioError> {
        let io = |e: std::io::Error| ScenarioError::Io {
            path: dir.display().to_string(),
            message: e.to_string(),
        };
        let mut paths: Vec<_> = std::fs::read_dir(dir)
            .map_err(io)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        paths.sort();
        let mut reg = Self::new();
        let mut warnings = Vec::new();
        for p in paths {
            let bytes = std::fs::read(&p).map_err(|e| ScenarioError::Io {
                path: p.display().to_string(),
                message: e.to_string(),
            })?;
            let card = parse_card(&bytes).map_err(|e| ScenarioError::Io {
                path: p.display().to_string(),
                message: e.to_string(),
            })?;
            warnings.extend(card.warnings());
            reg.insert(card)?;
        }
        Ok((reg, warnings))
    }
}

/// One detected scenario occurrence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioLabel {
    pub scenario: String,
    pub agent_ids: Vec<String>,
    pub t_start: f64,
    pub t_end: f64,
    /// Normalized margin by which the criteria were met, in [0, 1]: the
    /// smallest margin for pairwise scenarios, its mean over the window for
    /// crowd scenarios.
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioCoverage {
    /// Episodes with at least one label of this scenario.
    pub episodes: usize,
    pub labels: usize,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub episodes: usize,
    pub scenarios: BTreeMap<String, ScenarioCoverage>,
    pub labeled_fraction: f64,
    pub unlabeled_fraction: f64,
}

/// Per-scenario counts over a corpus given the labels of each episode.
pub fn coverage_report(corpus: &[Vec<ScenarioLabel>]) -> CoverageReport {
    let n = corpus.len();
    let mut scenarios: BTreeMap<String, ScenarioCoverage> = BTreeMap::new();
    for labels in corpus {
        let mut seen = std::collections::BTreeSet::new();
        for l in labels {
            let entry = scenarios
                .entry(l.scenario.clone())
                .or_insert(ScenarioCoverage {
                    episodes: 0,
                    labels: 0,
                    fraction: 0.0,
                });
            entry.labels += 1;
            if seen.insert(l.scenario.as_str()) {
                entry.episodes += 1;
            }
        }
    }
    let frac = |k: usize| if n == 0 { 0.0 } else { k as f64 / n as f64 };
    for c in scenarios.values_mut() {
        c.fraction = frac(c.episodes);
    }
    let labeled = corpus.iter().filter(|l| !l.is_empty()).count();
    CoverageReport {
        episodes: n,
        scenarios,
        labeled_fraction: frac(labeled),
        unlabeled_fraction: frac(n - labeled),
    }
}

#[cfg(test)]
mod tests;
