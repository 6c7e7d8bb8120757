use std::collections::BTreeMap;

use serde_json::{json, Map, Value};

use super::{IngestError, Severity, ValidationIssue, DEFAULT_AGENT_RADIUS};
use crate::geometry::{Segment, Vec2};
use crate::json::{real, to_canonical_bytes};
use crate::model::{
    finite_difference, synthesize_headings, AgentKind, AgentRecord, AgentState, Episode,
    EpisodeLabel, Goal, ObstacleFrame, ObstacleMap, DEFAULT_SPEED_CAP,
};

pub const FORMAT_VERSION: &str = "1.0";

/// Metadata key under which unrecognized document fields are kept, as a
/// canonical JSON object mapping JSON pointers to their values.
pub const UNKNOWN_FIELDS_KEY: &str = "x-unknown";

/// Relative disagreement between a supplied velocity and the finite
/// difference of positions above which a warning is raised.
const VELOCITY_MISMATCH: f64 = 0.2;

/// Absolute disagreement (m/s) below which no warning is raised, so that
/// near-stationary agents do not warn on rounding and integration noise.
const VELOCITY_NOISE_FLOOR: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParseOptions {
    pub speed_cap: f64,
    pub default_radius: f64,
}

impl Default for ParseOptions {
    fn default() -> Self {
        Self {
            speed_cap: DEFAULT_SPEED_CAP,
            default_radius: DEFAULT_AGENT_RADIUS,
        }
    }
}

pub fn parse_episode(document: &[u8]) -> Result<Episode, IngestError> {
    parse_episode_with(document, &ParseOptions::default())
}

pub fn parse_episode_with(document: &[u8], opts: &ParseOptions) -> Result<Episode, IngestError> {
    let (episode, issues) = decode(document, opts);
    if let Some((class, issue)) = issues.into_iter().find(|(_, i)| i.is_error()) {
        return Err(match class {
            Class::Syntax { line, column } => IngestError::Syntax {
                line,
                column,
                message: issue.message,
            },
            Class::Schema => IngestError::Schema {
                path: issue.path,
                message: issue.message,
            },
            Class::Invariant => IngestError::Invariant {
                path: issue.path,
                message: issue.message,
            },
            Class::Recoverable => unreachable!("recoverable issues are warnings"),
        });
    }
    Ok(episode.expect("no errors implies a decoded episode"))
}

/// All problems in `document`. It contains no error-severity issue exactly
/// when [`parse_episode`] succeeds; warnings flag recoverable issues.
pub fn validate(document: &[u8]) -> Vec<ValidationIssue> {
    validate_with(document, &ParseOptions::default())
}

pub fn validate_with(document: &[u8], opts: &ParseOptions) -> Vec<ValidationIssue> {
    decode(document, opts)
        .1
        .into_iter()
        .map(|(_, i)| i)
        .collect()
}

/// Canonical bytes for `episode`.
pub fn serialize_episode(episode: &Episode) -> Vec<u8> {
    to_canonical_bytes(&episode_to_value(episode))
}

pub fn episode_to_value(episode: &Episode) -> Value {
    let agents: Vec<Value> = episode.agents.iter().map(agent_to_value).collect();
    let mut obstacles = Map::new();
    obstacles.insert(
        "segments".into(),
        Value::Array(
            episode
                .obstacles
                .segments
                .iter()
                .map(segment_to_value)
                .collect(),
        ),
    );
    if !episode.obstacles.dynamic.is_empty() {
        let frames = episode
            .obstacles
            .dynamic
            .iter()
            .map(|f| {
                json!({
                    "t": real(f.t),
                    "segments": f.segments.iter().map(segment_to_value).collect::<Vec<_>>(),
                })
            })
            .collect();
        obstacles.insert("dynamic".into(), Value::Array(frames));
    }
    let mut doc = Map::new();
    doc.insert("format_version".into(), FORMAT_VERSION.into());
    doc.insert("episode_id".into(), episode.episode_id.clone().into());
    doc.insert(
        "robot_under_test".into(),
        episode.robot_under_test.clone().into(),
    );
    doc.insert("agents".into(), Value::Array(agents));
    doc.insert("obstacles".into(), Value::Object(obstacles));
    if !episode.labels.is_empty() {
        let labels = episode
            .labels
            .iter()
            .map(|l| json!({"scenario": l.scenario, "t_start": real(l.t_start), "t_end": real(l.t_end)}))
            .collect();
        doc.insert("labels".into(), Value::Array(labels));
    }
    doc.insert(
        "metadata".into(),
        Value::Object(
            episode
                .metadata
                .iter()
                .map(|(k, v)| (k.clone(), Value::String(v.clone())))
                .collect(),
        ),
    );
    Value::Object(doc)
}

fn agent_to_value(agent: &AgentRecord) -> Value {
    let mut a = Map::new();
    a.insert("id".into(), agent.id.clone().into());
    a.insert("kind".into(), agent.kind.as_str().into());
    a.insert("radius".into(), real(agent.radius));
    if let Some(g) = agent.goal {
        a.insert(
            "goal".into(),
            json!({"x": real(g.position.x), "y": real(g.position.y), "tolerance": real(g.tolerance)}),
        );
    }
    let states = agent
        .states
        .iter()
        .map(|s| {
            let mut m = Map::new();
            m.insert("t".into(), real(s.t));
            m.insert("x".into(), real(s.position.x));
            m.insert("y".into(), real(s.position.y));
            m.insert("theta".into(), real(s.heading));
            if let Some(v) = s.velocity {
                m.insert("vx".into(), real(v.x));
                m.insert("vy".into(), real(v.y));
            }
            Value::Object(m)
        })
        .collect();
    a.insert("states".into(), Value::Array(states));
    Value::Object(a)
}

fn segment_to_value(s: &Segment) -> Value {
    json!([real(s.a.x), real(s.a.y), real(s.b.x), real(s.b.y)])
}

#[derive(Debug, Clone, Copy)]
enum Class {
    Syntax { line: usize, column: usize },
    Schema,
    Invariant,
    Recoverable,
}

struct Decoder<'o> {
    opts: &'o ParseOptions,
    issues: Vec<(Class, ValidationIssue)>,
    unknown: BTreeMap<String, Value>,
}

fn decode(
    document: &[u8],
    opts: &ParseOptions,
) -> (Option<Episode>, Vec<(Class, ValidationIssue)>) {
    let mut d = Decoder {
        opts,
        issues: Vec::new(),
        unknown: BTreeMap::new(),
    };
    let text = match std::str::from_utf8(document) {
        Ok(t) => t,
        Err(e) => {
            d.push(
                Class::Syntax { line: 0, column: 0 },
                Severity::Error,
                "",
                format!("document is not UTF-8: {e}"),
            );
            return (None, d.issues);
        }
    };
    let root: Value = match serde_json::from_str(text) {
        Ok(v) => v,
        Err(e) => {
            let (line, column) = (e.line(), e.column());
            d.push(
                Class::Syntax { line, column },
                Severity::Error,
                "",
                e.to_string(),
            );
            return (None, d.issues);
        }
    };
    let episode = d.episode(&root);
    let episode = match episode {
        Some(ep) if !d.has_errors() => {
            let violations = ep.violations(opts.speed_cap);
            for v in violations {
                d.push(Class::Invariant, Severity::Error, v.path, v.message);
            }
            d.velocity_warnings(&ep);
            Some(ep)
        }
        _ => None,
    };
    let ok = !d.has_errors();
    (if ok { episode } else { None }, d.issues)
}

impl Decoder<'_> {
    fn push(
        &mut self,
        class: Class,
        severity: Severity,
        path: impl Into<String>,
        message: impl Into<String>,
    ) {
        self.issues.push((
            class,
            ValidationIssue {
                severity,
                path: path.into(),
                message: message.into(),
            },
        ));
    }

    fn schema(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.push(Class::Schema, Severity::Error, path, message);
    }

    fn has_errors(&self) -> bool {
        self.issues.iter().any(|(_, i)| i.is_error())
    }

    fn object<'v>(&mut self, v: &'v Value, path: &str) -> Option<&'v Map<String, Value>> {
        match v.as_object() {
            Some(m) => Some(m),
            None => {
                self.schema(path, "expected an object");
                None
            }
        }
    }

    fn array<'v>(&mut self, v: &'v Value, path: &str) -> Option<&'v Vec<Value>> {
        match v.as_array() {
            Some(a) => Some(a),
            None => {
                self.schema(path, "expected an array");
                None
            }
        }
    }

    fn note_unknown(&mut self, obj: &Map<String, Value>, path: &str, known: &[&str]) {
        for (k, v) in obj {
            if !known.contains(&k.as_str()) {
                self.unknown
                    .insert(format!("{path}/{}", escape_pointer(k)), v.clone());
            }
        }
    }

    fn number(&mut self, obj: &Map<String, Value>, key: &str, path: &str) -> Option<f64> {
        let p = format!("{path}/{key}");
        match obj.get(key) {
            None => {
                self.schema(p, format!("missing required number `{key}`"));
                None
            }
            Some(v) => self.number_value(v, &p),
        }
    }

    fn opt_number(
        &mut self,
        obj: &Map<String, Value>,
        key: &str,
        path: &str,
    ) -> Option<Option<f64>> {
        match obj.get(key) {
            None | Some(Value::Null) => Some(None),
            Some(v) => self.number_value(v, &format!("{path}/{key}")).map(Some),
        }
    }

    fn number_value(&mut self, v: &Value, path: &str) -> Option<f64> {
        match v.as_f64() {
            Some(x) if x.is_finite() => Some(x),
            _ => {
                self.schema(path, "expected a finite number");
                None
            }
        }
    }

    fn string(&mut self, obj: &Map<String, Value>, key: &str, path: &str) -> Option<String> {
        let p = format!("{path}/{key}");
        match obj.get(key) {
            Some(Value::String(s)) => Some(s.clone()),
            Some(_) => {
                self.schema(p, format!("`{key}` must be a string"));
                None
            }
            None => {
                self.schema(p, format!("missing required string `{key}`"));
                None
            }
        }
    }

    fn episode(&mut self, root: &Value) -> Option<Episode> {
        let obj = self.object(root, "")?;
        self.note_unknown(
            obj,
            "",
            &[
                "format_version",
                "episode_id",
                "robot_under_test",
                "agents",
                "obstacles",
                "labels",
                "metadata",
            ],
        );
        if let Some(version) = self.string(obj, "format_version", "") {
            if version.split('.').next() != Some("1") {
                self.schema(
                    "/format_version",
                    format!("unsupported format version `{version}`"),
                );
            } else if version != FORMAT_VERSION {
                self.push(
                    Class::Recoverable,
                    Severity::Warning,
                    "/format_version",
                    format!("minor version `{version}` read as {FORMAT_VERSION}"),
                );
            }
        }
        let episode_id = self.string(obj, "episode_id", "");
        let robot_under_test = self.string(obj, "robot_under_test", "");
        let agents = match obj.get("agents") {
            Some(v) => self.array(v, "/agents").map(|items| {
                items
                    .iter()
                    .enumerate()
                    .filter_map(|(i, a)| self.agent(a, &format!("/agents/{i}")))
                    .collect::<Vec<_>>()
            }),
            None => {
                self.schema("/agents", "missing required array `agents`");
                None
            }
        };
        let obstacles = match obj.get("obstacles") {
            Some(v) => self.obstacles(v),
            None => Some(ObstacleMap::default()),
        };
        let labels = match obj.get("labels") {
            None | Some(Value::Null) => Some(Vec::new()),
            Some(v) => self.labels(v),
        };
        let mut metadata = match obj.get("metadata") {
            None | Some(Value::Null) => Some(BTreeMap::new()),
            Some(v) => self.metadata(v),
        };
        if let Some(meta) = metadata.as_mut() {
            self.stash_unknown(meta);
        }
        Some(Episode {
            episode_id: episode_id?,
            agents: agents?,
            robot_under_test: robot_under_test?,
            obstacles: obstacles?,
            labels: labels?,
            metadata: metadata?,
        })
    }

    fn stash_unknown(&mut self, meta: &mut BTreeMap<String, String>) {
        if self.unknown.is_empty() {
            return;
        }
        let mut merged = match meta.get(UNKNOWN_FIELDS_KEY) {
            None => Map::new(),
            Some(existing) => match serde_json::from_str::<Value>(existing) {
                Ok(Value::Object(m)) => m,
                _ => {
                    self.push(
                        Class::Recoverable,
                        Severity::Warning,
                        format!("/metadata/{UNKNOWN_FIELDS_KEY}"),
                        "existing entry is not a JSON object; unknown fields dropped",
                    );
                    return;
                }
            },
        };
        for (k, v) in std::mem::take(&mut self.unknown) {
            merged.insert(k, v);
        }
        let text = String::from_utf8(to_canonical_bytes(&Value::Object(merged)))
            .expect("canonical JSON is UTF-8");
        meta.insert(UNKNOWN_FIELDS_KEY.into(), text.trim_end().to_string());
    }

    fn agent(&mut self, v: &Value, path: &str) -> Option<AgentRecord> {
        let obj = self.object(v, path)?;
        self.note_unknown(obj, path, &["id", "kind", "radius", "goal", "states"]);
        let id = self.string(obj, "id", path);
        let kind = match obj.get("kind").and_then(Value::as_str) {
            Some("robot") => Some(AgentKind::Robot),
            Some("human") => Some(AgentKind::Human),
            _ => {
                self.schema(
                    format!("{path}/kind"),
                    "`kind` must be \"robot\" or \"human\"",
                );
                None
            }
        };
        let radius = match obj.get("radius") {
            None | Some(Value::Null) => {
                self.push(
                    Class::Recoverable,
                    Severity::Warning,
                    format!("{path}/radius"),
                    format!(
                        "missing radius; default {} m applied",
                        self.opts.default_radius
                    ),
                );
                Some(self.opts.default_radius)
            }
            Some(r) => self.number_value(r, &format!("{path}/radius")),
        };
        let goal = match obj.get("goal") {
            None | Some(Value::Null) => Some(None),
            Some(g) => self.goal(g, &format!("{path}/goal")).map(Some),
        };
        let states = match obj.get("states") {
            None => {
                self.schema(format!("{path}/states"), "missing required array `states`");
                None
            }
            Some(s) => self.states(s, &format!("{path}/states")),
        };
        Some(AgentRecord {
            id: id?,
            kind: kind?,
            radius: radius?,
            goal: goal?,
            states: states?,
        })
    }

    fn goal(&mut self, v: &Value, path: &str) -> Option<Goal> {
        let obj = self.object(v, path)?;
        self.note_unknown(obj, path, &["x", "y", "tolerance"]);
        let x = self.number(obj, "x", path);
        let y = self.number(obj, "y", path);
        let tolerance = self.number(obj, "tolerance", path);
        Some(Goal {
            position: Vec2::new(x?, y?),
            tolerance: tolerance?,
        })
    }

    fn states(&mut self, v: &Value, path: &str) -> Option<Vec<AgentState>> {
        let items = self.array(v, path)?;
        let mut states = Vec::with_capacity(items.len());
        let mut missing_heading = Vec::with_capacity(items.len());
        let mut ok = true;
        for (k, item) in items.iter().enumerate() {
            let p = format!("{path}/{k}");
            let Some(obj) = self.object(item, &p) else {
                ok = false;
                continue;
            };
            self.note_unknown(obj, &p, &["t", "x", "y", "theta", "vx", "vy"]);
            let t = self.number(obj, "t", &p);
            let x = self.number(obj, "x", &p);
            let y = self.number(obj, "y", &p);
            let theta = self.opt_number(obj, "theta", &p);
            let vx = self.opt_number(obj, "vx", &p);
            let vy = self.opt_number(obj, "vy", &p);
            let velocity = match (vx, vy) {
                (Some(Some(vx)), Some(Some(vy))) => Some(Some(Vec2::new(vx, vy))),
                (Some(None), Some(None)) => Some(None),
                (Some(_), Some(_)) => {
                    self.schema(p.clone(), "`vx` and `vy` must be given together");
                    None
                }
                _ => None,
            };
            match (t, x, y, theta, velocity) {
                (Some(t), Some(x), Some(y), Some(theta), Some(velocity)) => {
                    missing_heading.push(theta.is_none());
                    states.push(AgentState {
                        t,
                        position: Vec2::new(x, y),
                        heading: theta.map_or(0.0, crate::geometry::wrap_angle),
                        velocity,
                    });
                }
                _ => ok = false,
            }
        }
        if !ok {
            return None;
        }
        if missing_heading.iter().any(|&m| m) && monotone(&states) {
            synthesize_headings(&mut states, &missing_heading);
        }
        Some(states)
    }

    fn segments(&mut self, v: &Value, path: &str) -> Option<Vec<Segment>> {
        let items = self.array(v, path)?;
        let mut out = Vec::with_capacity(items.len());
        let mut ok = true;
        for (i, item) in items.iter().enumerate() {
            let p = format!("{path}/{i}");
            let coords: Option<Vec<f64>> = item
                .as_array()
                .filter(|a| a.len() == 4)
                .and_then(|a| a.iter().map(Value::as_f64).collect());
            match coords {
                Some(c) => out.push(Segment::new(Vec2::new(c[0], c[1]), Vec2::new(c[2], c[3]))),
                None => {
                    self.schema(p, "segment must be an array [x1, y1, x2, y2]");
                    ok = false;
                }
            }
        }
        ok.then_some(out)
    }

    fn obstacles(&mut self, v: &Value) -> Option<ObstacleMap> {
        let obj = self.object(v, "/obstacles")?;
        self.note_unknown(obj, "/obstacles", &["segments", "dynamic"]);
        let segments = match obj.get("segments") {
            None => Some(Vec::new()),
            Some(s) => self.segments(s, "/obstacles/segments"),
        };
        let dynamic = match obj.get("dynamic") {
            None | Some(Value::Null) => Some(Vec::new()),
            Some(d) => {
                let items = self.array(d, "/obstacles/dynamic")?;
                let mut frames = Vec::new();
                let mut ok = true;
                for (i, f) in items.iter().enumerate() {
                    let p = format!("/obstacles/dynamic/{i}");
                    let Some(fo) = self.object(f, &p) else {
                        ok = false;
                        continue;
                    };
                    self.note_unknown(fo, &p, &["t", "segments"]);
                    let t = self.number(fo, "t", &p);
                    let segs = match fo.get("segments") {
                        Some(s) => self.segments(s, &format!("{p}/segments")),
                        None => {
                            self.schema(format!("{p}/segments"), "missing `segments`");
                            None
                        }
                    };
                    match (t, segs) {
                        (Some(t), Some(segments)) => frames.push(ObstacleFrame { t, segments }),
                        _ => ok = false,
                    }
                }
                ok.then_some(frames)
            }
        };
        Some(ObstacleMap {
            segments: segments?,
            dynamic: dynamic?,
        })
    }

    fn labels(&mut self, v: &Value) -> Option<Vec<EpisodeLabel>> {
        let items = self.array(v, "/labels")?;
        let mut out = Vec::new();
        let mut ok = true;
        for (i, item) in items.iter().enumerate() {
            let p = format!("/labels/{i}");
            let Some(obj) = self.object(item, &p) else {
                ok = false;
                continue;
            };
            self.note_unknown(obj, &p, &["scenario", "t_start", "t_end"]);
            let scenario = self.string(obj, "scenario", &p);
            let t_start = self.number(obj, "t_start", &p);
            let t_end = self.number(obj, "t_end", &p);
            match (scenario, t_start, t_end) {
                (Some(scenario), Some(t_start), Some(t_end)) => out.push(EpisodeLabel {
                    scenario,
                    t_start,
                    t_end,
                }),
                _ => ok = false,
            }
        }
        ok.then_some(out)
    }

    fn metadata(&mut self, v: &Value) -> Option<BTreeMap<String, String>> {
        let obj = self.object(v, "/metadata")?;
        let mut out = BTreeMap::new();
        let mut ok = true;
        for (k, v) in obj {
            match v.as_str() {
                Some(s) => {
                    out.insert(k.clone(), s.to_string());
                }
                None => {
                    self.schema(
                        format!("/metadata/{}", escape_pointer(k)),
                        "metadata values must be strings",
                    );
                    ok = false;
                }
            }
        }
        ok.then_some(out)
    }

    fn velocity_warnings(&mut self, ep: &Episode) {
        for (i, agent) in ep.agents.iter().enumerate() {
            if agent.states.len() < 2 {
                continue;
            }
            for (k, s) in agent.states.iter().enumerate() {
                let Some(v) = s.velocity else { continue };
                let fd = finite_difference(&agent.states, k);
                let diff = (v - fd).norm();
                let scale = v.norm().max(fd.norm());
                if diff > VELOCITY_NOISE_FLOOR && diff > VELOCITY_MISMATCH * scale {
                    self.push(
                        Class::Recoverable,
                        Severity::Warning,
                        format!("/agents/{i}/states/{k}"),
                        format!(
                            "velocity ({:.3}, {:.3}) differs from finite difference ({:.3}, {:.3}) by more than 20%",
                            v.x, v.y, fd.x, fd.y
                        ),
                    );
                }
            }
        }
    }
}

fn monotone(states: &[AgentState]) -> bool {
    states.windows(2).all(|w| w[1].t > w[0].t)
}

fn escape_pointer(key: &str) -> String {
    key.replace('~', "~0").replace('/', "~1")
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "format_version": "1.0",
        "episode_id": "ep",
        "robot_under_test": "r",
        "agents": [{"id": "r", "kind": "robot", "radius": 0.3,
                    "goal": {"x": 1, "y": 0, "tolerance": 0.2},
                    "states": [{"t": 0, "x": 0, "y": 0}, {"t": 1, "x": 1, "y": 0}]}],
        "obstacles": {"segments": []},
        "metadata": {}
    }"#;

    #[test]
    fn minimal_document_parses() {
        let ep = parse_episode(MINIMAL.as_bytes()).unwrap();
        assert_eq!(ep.agents.len(), 1);
        assert_eq!(ep.agents[0].goal.unwrap().tolerance, 0.2);
        assert!(validate(MINIMAL.as_bytes()).is_empty());
    }

    #[test]
    fn repeated_timestamp_is_an_invariant_error() {
        let doc = MINIMAL.replace(
            r#"{"t": 1, "x": 1, "y": 0}]"#,
            r#"{"t": 1, "x": 1, "y": 0}, {"t": 1, "x": 1.5, "y": 0}]"#,
        );
        match parse_episode(doc.as_bytes()) {
            Err(IngestError::Invariant { path, .. }) => assert_eq!(path, "/agents/0/states/2/t"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn negative_radius_reported_once() {
        let doc = MINIMAL.replace("\"radius\": 0.3", "\"radius\": -1");
        let issues = validate(doc.as_bytes());
        assert_eq!(issues.len(), 1);
        assert_eq!(issues[0].path, "/agents/0/radius");
        assert!(issues[0].is_error());
    }

    #[test]
    fn malformed_json_is_a_syntax_error() {
        assert!(matches!(
            parse_episode(b"{\"episode_id\": "),
            Err(IngestError::Syntax { .. })
        ));
        assert!(matches!(
            parse_episode(&[0xff, 0xfe]),
            Err(IngestError::Syntax { .. })
        ));
    }

    #[test]
    fn ill_typed_field_is_a_schema_error_with_path() {
        let doc = MINIMAL.replace(r#""kind": "robot""#, r#""kind": 3"#);
        match parse_episode(doc.as_bytes()) {
            Err(IngestError::Schema { path, .. }) => assert_eq!(path, "/agents/0/kind"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_radius_is_a_warning() {
        let doc = MINIMAL.replace("\"radius\": 0.3,", "");
        let issues = validate(doc.as_bytes());
        assert_eq!(issues.len(), 1);
        assert_eq!(issues[0].severity, Severity::Warning);
        assert_eq!(parse_episode(doc.as_bytes()).unwrap().agents[0].radius, 0.3);
    }

    #[test]
    fn inconsistent_velocity_is_a_warning() {
        // finite difference says 1 m/s along x; the document claims 1.5 m/s
        let doc = MINIMAL.replace(
            r#"{"t": 0, "x": 0, "y": 0}"#,
            r#"{"t": 0, "x": 0, "y": 0, "vx": 1.5, "vy": 0}"#,
        );
        let issues = validate(doc.as_bytes());
        assert_eq!(issues.len(), 1);
        assert_eq!(issues[0].severity, Severity::Warning);
        assert_eq!(issues[0].path, "/agents/0/states/0");
        assert!(parse_episode(doc.as_bytes()).is_ok());

        let close = MINIMAL.replace(
            r#"{"t": 0, "x": 0, "y": 0}"#,
            r#"{"t": 0, "x": 0, "y": 0, "vx": 1.1, "vy": 0}"#,
        );
        assert!(validate(close.as_bytes()).is_empty());
    }

    #[test]
    fn unknown_fields_survive_in_metadata() {
        let doc = MINIMAL.replace(
            "\"metadata\": {}",
            "\"metadata\": {}, \"simulator\": {\"name\": \"x\"}",
        );
        let ep = parse_episode(doc.as_bytes()).unwrap();
        assert_eq!(
            ep.metadata.get(UNKNOWN_FIELDS_KEY).unwrap(),
            r#"{"/simulator":{"name":"x"}}"#
        );
        let again = parse_episode(&serialize_episode(&ep)).unwrap();
        assert_eq!(again, ep);
    }

    #[test]
    fn empty_obstacles_written_explicitly() {
        let ep = parse_episode(MINIMAL.as_bytes()).unwrap();
        let text = String::from_utf8(serialize_episode(&ep)).unwrap();
        assert!(text.contains(r#""obstacles":{"segments":[]}"#));
        assert!(text.ends_with('\n'));
        assert_eq!(serialize_episode(&ep), serialize_episode(&ep));
    }

    #[test]
    fn heading_synthesized_when_absent() {
        let ep = parse_episode(MINIMAL.as_bytes()).unwrap();
        assert_eq!(ep.agents[0].states[0].heading, 0.0);
        let doc = MINIMAL.replace(r#""x": 1, "y": 0}]"#, r#""x": 0, "y": 1}]"#);
        let ep = parse_episode(doc.as_bytes()).unwrap();
        assert!((ep.agents[0].states[1].heading - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }
}
