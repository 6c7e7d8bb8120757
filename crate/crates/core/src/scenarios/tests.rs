use super::*;
use crate::geometry::Vec2;
use crate::model::{AgentKind, AgentRecord, AgentState, Episode, ObstacleMap};
use crate::sim::{generate_scenario, run};

fn straight(id: &str, kind: AgentKind, p0: Vec2, v: Vec2, n: usize, dt: f64) -> AgentRecord {
    AgentRecord {
        id: id.into(),
        kind,
        radius: 0.3,
        goal: None,
        states: (0..n)
            .map(|k| {
                let t = k as f64 * dt;
                AgentState::new(t, p0 + v * t, v.angle()).with_velocity(v)
            })
            .collect(),
    }
}

fn pair(robot: AgentRecord, human: AgentRecord) -> Episode {
    Episode {
        episode_id: "e".into(),
        robot_under_test: robot.id.clone(),
        agents: vec![robot, human],
        obstacles: ObstacleMap::default(),
        labels: vec![],
        metadata: Default::default(),
    }
}

fn scenarios(labels: &[ScenarioLabel]) -> Vec<&str> {
    labels.iter().map(|l| l.scenario.as_str()).collect()
}

#[test]
fn stationary_pair_has_no_labels() {
    let r = straight("r", AgentKind::Robot, Vec2::ZERO, Vec2::ZERO, 50, 0.1);
    let h = straight(
        "h",
        AgentKind::Human,
        Vec2::new(1.0, 0.0),
        Vec2::ZERO,
        50,
        0.1,
    );
    let labels = classify(&pair(r, h), &CardRegistry::builtin(), None).unwrap();
    assert!(labels.is_empty());
}

#[test]
fn right_angle_crossing_is_an_intersection() {
    // robot passes the origin at t=5, human 1 s later: closest approach 0.71 m
    let r = straight(
        "r",
        AgentKind::Robot,
        Vec2::new(-5.0, 0.0),
        Vec2::new(1.0, 0.0),
        120,
        0.1,
    );
    let h = straight(
        "h",
        AgentKind::Human,
        Vec2::new(0.0, -6.0),
        Vec2::new(0.0, 1.0),
        120,
        0.1,
    );
    let ep = pair(r, h);
    let labels = classify(&ep, &CardRegistry::builtin(), None).unwrap();
    assert_eq!(scenarios(&labels), ["intersection"]);
    let l = &labels[0];
    assert_eq!(l.agent_ids, ["r", "h"]);
    assert!(l.t_start < 5.0 && l.t_end > 6.0);
    assert!(l.confidence > 0.0 && l.confidence <= 1.0);
}

#[test]
fn occluded_crossing_is_a_blind_corner() {
    let r = straight(
        "r",
        AgentKind::Robot,
        Vec2::new(-5.0, 0.0),
        Vec2::new(1.0, 0.0),
        120,
        0.1,
    );
    let h = straight(
        "h",
        AgentKind::Human,
        Vec2::new(0.0, -6.0),
        Vec2::new(0.0, 1.0),
        120,
        0.1,
    );
    let mut ep = pair(r, h);
    ep.obstacles.segments = crate::sim::junction_walls(2.5, 10.0);
    let labels = classify(&ep, &CardRegistry::builtin(), None).unwrap();
    assert_eq!(scenarios(&labels), ["blind_corner"]);
}

#[test]
fn head_on_pair_is_frontal_unless_corridor_too_narrow() {
    let r = straight(
        "r",
        AgentKind::Robot,
        Vec2::new(-5.0, -0.4),
        Vec2::new(1.0, 0.0),
        100,
        0.1,
    );
    let h = straight(
        "h",
        AgentKind::Human,
        Vec2::new(5.0, 0.4),
        Vec2::new(-1.0, 0.0),
        100,
        0.1,
    );
    let mut ep = pair(r, h);
    let labels = classify(&ep, &CardRegistry::builtin(), None).unwrap();
    assert_eq!(scenarios(&labels), ["frontal_approach"]);
    // 1.5 m between walls is less than 2 * 0.6 + 0.2... plus nothing: 1.4 needed, so passable
    ep.obstacles.segments = crate::sim::corridor(-10.0, 10.0, 0.0, 1.5);
    assert_eq!(
        scenarios(&classify(&ep, &CardRegistry::builtin(), None).unwrap()),
        ["frontal_approach"]
    );
    ep.obstacles.segments = crate::sim::corridor(-10.0, 10.0, 0.0, 1.3);
    assert!(classify(&ep, &CardRegistry::builtin(), None)
        .unwrap()
        .is_empty());
}

#[test]
fn overtaking_direction_follows_who_passes() {
    let fast = Vec2::new(1.5, 0.0);
    let slow = Vec2::new(0.7, 0.0);
    let r = straight("r", AgentKind::Robot, Vec2::new(-3.0, -0.5), fast, 150, 0.1);
    let h = straight("h", AgentKind::Human, Vec2::new(0.0, 0.5), slow, 150, 0.1);
    let labels = classify(&pair(r, h), &CardRegistry::builtin(), None).unwrap();
    assert_eq!(scenarios(&labels), ["robot_overtaking"]);
    let r = straight("r", AgentKind::Robot, Vec2::new(0.0, -0.5), slow, 150, 0.1);
    let h = straight("h", AgentKind::Human, Vec2::new(-3.0, 0.5), fast, 150, 0.1);
    let labels = classify(&pair(r, h), &CardRegistry::builtin(), None).unwrap();
    assert_eq!(scenarios(&labels), ["pedestrian_overtaking"]);
}

#[test]
fn classification_is_invariant_under_rigid_motion() {
    let ep = run(&generate_scenario("intersection", 4).unwrap()).unwrap();
    let base = classify(&ep, &CardRegistry::builtin(), None).unwrap();
    let (c, s) = (0.7f64.cos(), 0.7f64.sin());
    let tf = |p: Vec2| Vec2::new(c * p.x - s * p.y + 3.0, s * p.x + c * p.y - 8.0);
    let rot = |v: Vec2| Vec2::new(c * v.x - s * v.y, s * v.x + c * v.y);
    let mut moved = ep.clone();
    for a in &mut moved.agents {
        for st in &mut a.states {
            st.position = tf(st.position);
            st.velocity = st.velocity.map(rot);
        }
    }
    let a = scenarios(&base);
    let moved_labels = classify(&moved, &CardRegistry::builtin(), None).unwrap();
    assert_eq!(a, scenarios(&moved_labels));
    for (x, y) in base.iter().zip(&moved_labels) {
        assert_eq!((x.t_start, x.t_end), (y.t_start, y.t_end));
    }
}

#[test]
fn generated_frontal_episode_gets_one_frontal_label() {
    let ep = run(&generate_scenario("frontal_approach", 2).unwrap()).unwrap();
    let labels = classify(&ep, &CardRegistry::builtin(), None).unwrap();
    assert_eq!(scenarios(&labels), ["frontal_approach"]);
}

#[test]
fn unknown_card_with_criteria_is_rejected() {
    let mut reg = CardRegistry::builtin();
    let mut card = builtin_cards().remove(0);
    card.name = "narrow_doorway".into();
    reg.insert(card.clone()).unwrap();
    let ep = run(&generate_scenario("frontal_approach", 2).unwrap()).unwrap();
    assert_eq!(
        classify(&ep, &reg, None).unwrap_err(),
        ScenarioError::UnknownCard("narrow_doorway".into())
    );
    // documentation-only cards are skipped
    let mut reg = CardRegistry::builtin();
    card.usage_guide.labeling_criteria = None;
    reg.insert(card).unwrap();
    assert!(classify(&ep, &reg, None).is_ok());
}

#[test]
fn frontal_card_carries_the_published_structure() {
    let card = CardRegistry::builtin()
        .get("frontal_approach")
        .unwrap()
        .clone();
    let parsed = parse_card(&serialize_card(&card)).unwrap();
    assert_eq!(parsed.name, "frontal_approach");
    assert_eq!(parsed.usage_guide.success_metrics, ["S", "C"]);
    assert_eq!(parsed.usage_guide.failure_modes.len(), 2);
    assert!(parsed.is_classifiable());
}

#[test]
fn cards_round_trip() {
    for card in builtin_cards() {
        let bytes = serialize_card(&card);
        assert_eq!(parse_card(&bytes).unwrap(), card);
        assert_eq!(serialize_card(&parse_card(&bytes).unwrap()), bytes);
    }
}

#[test]
fn card_without_criteria_warns() {
    let mut card = builtin_cards().remove(3);
    card.usage_guide.labeling_criteria = None;
    let parsed = parse_card(&serialize_card(&card)).unwrap();
    assert!(!parsed.is_classifiable());
    assert_eq!(parsed.warnings().len(), 1);
}

#[test]
fn card_schema_errors_carry_paths() {
    let doc = br#"{"name":"x","description":"","scenario_type":"","research_context":{"location":"","density":"","task":""},
        "definition":{"geometric_layout":"","intended_robot_task":"","intended_human_behavior":""},
        "usage_guide":{"success_metrics":[1],"quality_metrics":[],"ideal_outcome":"","failure_modes":[]}}"#;
    match parse_card(doc) {
        Err(ScenarioError::Schema { path, .. }) => {
            assert_eq!(path, "/usage_guide/success_metrics/0")
        }
        other => panic!("{other:?}"),
    }
    assert!(matches!(parse_card(b"{"), Err(ScenarioError::Syntax(_))));
    let bad = String::from_utf8(serialize_card(&builtin_cards()[0]))
        .unwrap()
        .replace("\"proximity_max\":2.0", "\"proximity_max\":-1.0");
    assert!(matches!(
        parse_card(bad.as_bytes()),
        Err(ScenarioError::Schema { .. })
    ));
}

#[test]
fn duplicate_card_names_rejected() {
    let mut reg = CardRegistry::builtin();
    assert!(matches!(
        reg.insert(builtin_cards().remove(0)),
        Err(ScenarioError::DuplicateCard(_))
    ));
}

#[test]
fn coverage_counts() {
    let label = |s: &str| ScenarioLabel {
        scenario: s.into(),
        agent_ids: vec![],
        t_start: 0.0,
        t_end: 1.0,
        confidence: 1.0,
    };
    let mut corpus: Vec<Vec<ScenarioLabel>> =
        (0..10).map(|_| vec![label("frontal_approach")]).collect();
    corpus.extend((0..10).map(|_| vec![label("intersection"), label("intersection")]));
    let c = coverage_report(&corpus);
    assert_eq!(c.scenarios["frontal_approach"].episodes, 10);
    assert_eq!(c.scenarios["intersection"].episodes, 10);
    assert_eq!(c.scenarios["intersection"].labels, 20);
    assert_eq!(c.unlabeled_fraction, 0.0);
    let empty = coverage_report(&[]);
    assert!(empty.scenarios.is_empty());
    let c = coverage_report(&[vec![], vec![label("intersection")]]);
    assert_eq!(c.unlabeled_fraction, 0.5);
}
