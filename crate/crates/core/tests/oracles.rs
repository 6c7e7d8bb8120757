//! Metric values against direct recomputations on the raw samples. Fuzzed
//! episodes sample every agent at `k * DT`, so step `k` of the evaluation
//! timeline is sample `k` of the robot.

mod common;

use socnav::geometry::Vec2;
use socnav::metrics::{time_to_collision, Evaluator};
use socnav::model::{AgentKind, Episode, MetricParams};

use common::{episode, point_segment_distance, Fuzz, DT};

fn close(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()))
}

/// Human center distances at robot sample `k`.
fn human_distances(ep: &Episode, k: usize) -> Vec<(f64, Vec2, Vec2, f64)> {
    let robot = &ep.agents[0];
    let r = &robot.states[k];
    ep.agents[1..]
        .iter()
        .filter(|a| a.kind == AgentKind::Human)
        .filter_map(|a| {
            a.states
                .iter()
                .find(|s| (s.t / DT).round() as usize == k)
                .map(|s| {
                    let dp = s.position - r.position;
                    let dv = s.velocity.unwrap() - r.velocity.unwrap();
                    (
                        (dp.x * dp.x + dp.y * dp.y).sqrt(),
                        dp,
                        dv,
                        robot.radius + a.radius,
                    )
                })
        })
        .collect()
}

/// First contact time by bisection on the distance function.
fn bisect_ttc(dp: Vec2, dv: Vec2, rs: f64) -> f64 {
    let gap = |tau: f64| {
        let (x, y) = (dp.x + tau * dv.x, dp.y + tau * dv.y);
        (x * x + y * y).sqrt() - rs
    };
    if gap(0.0) <= 0.0 {
        return 0.0;
    }
    let vv = dv.x * dv.x + dv.y * dv.y;
    if vv == 0.0 {
        return f64::INFINITY;
    }
    let closest = (-(dp.x * dv.x + dp.y * dv.y) / vv).max(0.0);
    if gap(closest) > 0.0 {
        return f64::INFINITY;
    }
    let (mut lo, mut hi) = (0.0, closest);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if gap(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

#[test]
fn ttc_matches_bisection() {
    let params = MetricParams::default();
    let mut finite = 0;
    for seed in 0..300 {
        let ep = episode(seed, &Fuzz::dense());
        let ev = Evaluator::new(&ep, &params, Some(DT)).unwrap();
        let want = (0..ep.agents[0].states.len())
            .flat_map(|k| human_distances(&ep, k))
            .map(|(_, dp, dv, rs)| bisect_ttc(dp, dv, rs))
            .fold(f64::INFINITY, f64::min);
        let got = ev.min_time_to_collision();
        finite += want.is_finite() as u32;
        assert!(
            got == want || (got - want).abs() <= 1e-9,
            "seed {seed}: {got} vs {want}"
        );
    }
    assert!(finite > 50);
}

#[test]
fn ttc_spot_values() {
    assert_eq!(
        time_to_collision(Vec2::new(10.0, 0.0), Vec2::new(-2.0, 0.0), 0.6),
        4.7
    );
    assert_eq!(
        time_to_collision(Vec2::new(0.3, 0.0), Vec2::new(5.0, 0.0), 0.6),
        0.0
    );
    assert_eq!(
        time_to_collision(Vec2::new(10.0, 0.0), Vec2::new(2.0, 0.0), 0.6),
        f64::INFINITY
    );
    assert_eq!(
        time_to_collision(Vec2::new(10.0, 1.0), Vec2::new(-1.0, 0.0), 0.6),
        f64::INFINITY
    );
    assert_eq!(
        time_to_collision(Vec2::new(3.0, 0.0), Vec2::ZERO, 0.6),
        f64::INFINITY
    );
}

#[test]
fn distance_to_humans_and_space_compliance() {
    for seed in 0..200 {
        let ep = episode(seed, &Fuzz::dense());
        let params = MetricParams::default();
        let ev = Evaluator::new(&ep, &params, Some(DT)).unwrap();
        let n = ep.agents[0].states.len();
        let closest: Vec<f64> = (0..n)
            .map(|k| {
                human_distances(&ep, k)
                    .iter()
                    .map(|h| h.0)
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let dh = closest.iter().copied().fold(f64::INFINITY, f64::min);
        assert!(close(ev.min_distance_to_human(), dh), "seed {seed}");
        for threshold in [0.5, 1.2, 2.0] {
            let sc = closest.iter().filter(|&&d| d >= threshold).count() as f64 / n as f64;
            assert!(close(ev.space_compliance_at(threshold), sc), "seed {seed}");
        }
    }
}

#[test]
fn clearing_distance_and_path_length() {
    for seed in 0..200 {
        let ep = episode(seed, &Fuzz::dense());
        let params = MetricParams::default();
        let ev = Evaluator::new(&ep, &params, Some(DT)).unwrap();
        let robot = &ep.agents[0];
        let clearance: Vec<f64> = robot
            .states
            .iter()
            .map(|s| {
                let mut walls: Vec<_> = ep.obstacles.segments.iter().collect();
                if let Some(f) = ep.obstacles.dynamic.iter().rfind(|f| f.t <= s.t) {
                    walls.extend(&f.segments);
                }
                walls
                    .iter()
                    .map(|w| (point_segment_distance(s.position, w.a, w.b) - robot.radius).max(0.0))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let finite: Vec<f64> = clearance
            .iter()
            .copied()
            .filter(|c| c.is_finite())
            .collect();
        let (min, avg) = ev.clearing_distance();
        assert!(
            close(min, finite.iter().copied().fold(f64::INFINITY, f64::min)),
            "seed {seed}"
        );
        match avg {
            Some(a) => assert!(close(a, finite.iter().sum::<f64>() / finite.len() as f64)),
            None => assert!(finite.is_empty()),
        }
        let pl: f64 = robot
            .states
            .windows(2)
            .map(|w| {
                let (dx, dy) = (
                    w[1].position.x - w[0].position.x,
                    w[1].position.y - w[0].position.y,
                );
                (dx * dx + dy * dy).sqrt()
            })
            .sum();
        assert!(close(ev.path_length(), pl), "seed {seed}");
    }
}
