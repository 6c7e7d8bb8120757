use super::{ClassifierParams, Definition, ResearchContext, ScenarioCard, UsageGuide};

struct Spec {
    name: &'static str,
    description: &'static str,
    scenario_type: &'static str,
    location: &'static str,
    density: &'static str,
    layout: &'static str,
    robot_task: &'static str,
    human_behavior: &'static str,
    ideal: &'static str,
    failures: &'static [&'static str],
}

const SPECS: [Spec; 7] = [
    Spec {
        name: "frontal_approach",
        description: "Robot and pedestrian walk towards each other on opposite headings.",
        scenario_type: "pedestrian_interaction",
        location: "generic",
        density: "low",
        layout: "Open area or corridor with room for both to pass side by side.",
        robot_task: "Travel from one end of the area to the other.",
        human_behavior: "Travel the same line in the opposite direction.",
        ideal: "Robot sidesteps early and passes at a comfortable distance.",
        failures: &["collision with the pedestrian", "time limit exceeded"],
    },
    Spec {
        name: "robot_overtaking",
        description: "Robot catches up with and passes a slower pedestrian going its way.",
        scenario_type: "pedestrian_interaction",
        location: "generic",
        density: "low",
        layout: "Corridor or walkway wide enough for two abreast.",
        robot_task: "Travel from one end to the other faster than the pedestrian.",
        human_behavior: "Walk the same way at a slower pace.",
        ideal: "Robot passes with lateral margin and does not cut in close.",
        failures: &[
            "collision with the pedestrian",
            "robot tailgates without passing",
        ],
    },
    Spec {
        name: "pedestrian_overtaking",
        description: "A faster pedestrian passes the robot from behind.",
        scenario_type: "pedestrian_interaction",
        location: "generic",
        density: "low",
        layout: "Corridor or walkway wide enough for two abreast.",
        robot_task: "Travel from one end to the other.",
        human_behavior: "Walk the same way faster than the robot.",
        ideal: "Robot keeps a predictable line and leaves room to pass.",
        failures: &[
            "robot blocks the passing lane",
            "collision with the pedestrian",
        ],
    },
    Spec {
        name: "intersection",
        description: "Robot and pedestrian cross paths at roughly a right angle.",
        scenario_type: "pedestrian_interaction",
        location: "indoor",
        density: "low",
        layout: "Two walkways meeting at a junction with clear sightlines.",
        robot_task: "Cross the junction along one walkway.",
        human_behavior: "Cross the junction along the other walkway.",
        ideal: "Both cross without collision; the robot yields when needed.",
        failures: &[
            "collision with the pedestrian",
            "robot freezes in the junction",
        ],
    },
    Spec {
        name: "blind_corner",
        description:
            "Robot and pedestrian meet at a junction whose walls hide them from each other.",
        scenario_type: "pedestrian_interaction",
        location: "indoor",
        density: "low",
        layout: "Corridor junction with occluding walls at the corners.",
        robot_task: "Pass through the junction.",
        human_behavior: "Enter the junction from the perpendicular corridor.",
        ideal: "Robot slows before the corner and avoids a late conflict.",
        failures: &["collision with the pedestrian", "obstruction at the corner"],
    },
    Spec {
        name: "parallel_traffic",
        description: "Robot travels within a crowd flowing along its direction of travel.",
        scenario_type: "crowd_navigation",
        location: "generic",
        density: "high",
        layout: "Wide walkway carrying bidirectional pedestrian flow.",
        robot_task: "Travel along the walkway.",
        human_behavior: "Walk with or against the robot in lanes.",
        ideal: "Robot merges into the flow without collisions or obstruction.",
        failures: &["collision with a pedestrian", "robot obstructs the flow"],
    },
    Spec {
        name: "perpendicular_traffic",
        description: "Robot crosses a crowd flowing across its path.",
        scenario_type: "crowd_navigation",
        location: "generic",
        density: "high",
        layout: "Open area where a pedestrian stream crosses the robot's route.",
        robot_task: "Cross the pedestrian stream.",
        human_behavior: "Walk as a group across the robot's route.",
        ideal: "Robot finds gaps or waits rather than pushing through.",
        failures: &["collision with a pedestrian", "robot stalls indefinitely"],
    },
];

/// Built-in cards for every scenario with a detector, all carrying default
/// labeling criteria.
pub fn builtin_cards() -> Vec<ScenarioCard> {
    SPECS
        .iter()
        .map(|s| ScenarioCard {
            name: s.name.into(),
            description: s.description.into(),
            scenario_type: s.scenario_type.into(),
            research_context: ResearchContext {
                location: s.location.into(),
                density: s.density.into(),
                task: "navigate_a_to_b".into(),
            },
            definition: Definition {
                geometric_layout: s.layout.into(),
                intended_robot_task: s.robot_task.into(),
                intended_human_behavior: s.human_behavior.into(),
            },
            usage_guide: UsageGuide {
                success_metrics: vec!["S".into(), "C".into()],
                quality_metrics: vec!["SC".into(), "DH_min".into(), "J_avg".into()],
                ideal_outcome: s.ideal.into(),
                failure_modes: s.failures.iter().map(|f| f.to_string()).collect(),
                labeling_criteria: Some(ClassifierParams::default()),
            },
        })
        .collect()
}
