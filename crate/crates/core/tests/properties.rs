mod common;

use proptest::prelude::*;
use socnav::geometry::{wrap_angle, Segment, Vec2};
use socnav::metrics::{compute_all, time_to_collision, Evaluator, MetricReport, Scalar};
use socnav::model::{Episode, MetricParams};
use socnav::report::{distribution, summarize};

use common::{episode, Fuzz, DT};

fn report(ep: &Episode) -> MetricReport {
    compute_all(ep, &MetricParams::default(), Some(DT), false).unwrap()
}

fn real(r: &MetricReport, key: &str) -> f64 {
    r.get(key).and_then(Scalar::as_f64).unwrap_or(f64::NAN)
}

fn rigid(ep: &Episode, angle: f64, shift: Vec2) -> Episode {
    let (c, s) = (angle.cos(), angle.sin());
    let rot = |v: Vec2| Vec2::new(c * v.x - s * v.y, s * v.x + c * v.y);
    let place = |p: Vec2| rot(p) + shift;
    let seg = |w: &Segment| Segment::new(place(w.a), place(w.b));
    let mut out = ep.clone();
    for a in &mut out.agents {
        if let Some(g) = &mut a.goal {
            g.position = place(g.position);
        }
        for st in &mut a.states {
            st.position = place(st.position);
            st.velocity = st.velocity.map(rot);
            st.heading = wrap_angle(st.heading + angle);
        }
    }
    out.obstacles.segments = ep.obstacles.segments.iter().map(seg).collect();
    for f in &mut out.obstacles.dynamic {
        f.segments = f.segments.iter().map(seg).collect();
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn spl_is_a_ratio_that_vanishes_exactly_on_failure(seed in any::<u64>()) {
        let r = report(&episode(seed, &Fuzz::dense()));
        let spl = real(&r, "SPL");
        let success = r.get("S") == Some(Scalar::Bool(true));
        prop_assert!((0.0..=1.0).contains(&spl));
        prop_assert_eq!(spl > 0.0, success);
    }

    #[test]
    fn space_compliance_falls_with_threshold(seed in any::<u64>(), a in 0.0f64..4.0, b in 0.0f64..4.0) {
        let ep = episode(seed, &Fuzz::dense());
        let params = MetricParams::default();
        let ev = Evaluator::new(&ep, &params, Some(DT)).unwrap();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(ev.space_compliance_at(lo) >= ev.space_compliance_at(hi));
        prop_assert_eq!(ev.space_compliance_at(0.0), 1.0);
        let complement = MetricParams { sc_complement: true, ..MetricParams::default() };
        let ev2 = Evaluator::new(&ep, &complement, Some(DT)).unwrap();
        prop_assert!((ev.space_compliance() + ev2.space_compliance() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn collision_counts_decompose(seed in any::<u64>(), limit in 1u32..4) {
        let ep = episode(seed, &Fuzz::dense());
        let all = report(&ep);
        let (c, wc, ac, hc) = (real(&all, "C"), real(&all, "WC"), real(&all, "AC"), real(&all, "HC"));
        prop_assert_eq!(c, wc + ac);
        prop_assert!(hc <= ac);
        let params = MetricParams { collision_terminate_count: Some(limit), ..MetricParams::default() };
        let cut = Evaluator::new(&ep, &params, Some(DT)).unwrap().collisions();
        prop_assert!(cut.total as f64 <= c);
        prop_assert!(cut.total >= limit.min(c as u32));
    }

    #[test]
    fn aggregate_features_are_ordered(seed in any::<u64>()) {
        let r = report(&episode(seed, &Fuzz::dense()));
        for f in ["V", "A", "J"] {
            let (lo, avg, hi) = (real(&r, &format!("{f}_min")), real(&r, &format!("{f}_avg")), real(&r, &format!("{f}_max")));
            prop_assert!(lo <= avg + 1e-12 && avg <= hi + 1e-12, "{}: {} {} {}", f, lo, avg, hi);
        }
        let (cd_min, cd_avg) = (real(&r, "CD_min"), real(&r, "CD_avg"));
        if cd_avg.is_finite() {
            prop_assert!(cd_min <= cd_avg + 1e-12);
        }
        prop_assert!(real(&r, "SC") >= 0.0 && real(&r, "SC") <= 1.0);
        prop_assert!(real(&r, "TTC") >= 0.0 && real(&r, "DH_min") >= 0.0);
    }

    #[test]
    fn metrics_ignore_rigid_motion(seed in any::<u64>(), angle in -3.1f64..3.1, dx in -50.0f64..50.0, dy in -50.0f64..50.0) {
        let ep = episode(seed, &Fuzz::dense());
        let a = report(&ep);
        let b = report(&rigid(&ep, angle, Vec2::new(dx, dy)));
        for (key, m) in &a.taskwise {
            let other = &b.taskwise[key].value;
            match (m.value.as_f64(), other.as_f64()) {
                (Some(x), Some(y)) => prop_assert!(
                    x == y || (x - y).abs() <= 1e-6 * (1.0 + x.abs()),
                    "{}: {} vs {}", key, x, y
                ),
                (x, y) => prop_assert_eq!(x, y, "{}", key),
            }
        }
    }

    #[test]
    fn ttc_is_symmetric_and_non_negative(
        px in -9.0f64..9.0, py in -9.0f64..9.0, vx in -3.0f64..3.0, vy in -3.0f64..3.0, rs in 0.1f64..1.5,
    ) {
        let (dp, dv) = (Vec2::new(px, py), Vec2::new(vx, vy));
        let t = time_to_collision(dp, dv, rs);
        prop_assert!(t >= 0.0);
        prop_assert_eq!(t, time_to_collision(-dp, -dv, rs));
        if t.is_finite() {
            let gap = (dp + dv * t).norm();
            prop_assert!(gap <= rs + 1e-9);
        }
    }

    #[test]
    fn histogram_counts_every_finite_value(
        values in prop::collection::vec(prop_oneof![
            8 => (-1e3f64..1e3).prop_map(Some),
            1 => Just(None),
            1 => Just(Some(f64::INFINITY)),
            1 => Just(Some(f64::NEG_INFINITY)),
        ], 1..200),
        bins in 1usize..40,
    ) {
        let (d, overflow) = distribution(&values, bins).unwrap();
        let finite = values.iter().filter(|v| v.is_some_and(f64::is_finite)).count() as u64;
        prop_assert_eq!(d.n, finite);
        prop_assert_eq!(d.histogram.counts.iter().sum::<u64>(), finite);
        prop_assert_eq!(d.n + d.n_excluded, values.len() as u64);
        prop_assert_eq!(overflow.total(), d.n_excluded);
        if finite > 0 {
            prop_assert!(d.min.unwrap() <= d.median.unwrap() && d.median.unwrap() <= d.max.unwrap());
            prop_assert!(d.min.unwrap() <= d.mean.unwrap() + 1e-9 && d.mean.unwrap() <= d.max.unwrap() + 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn summaries_do_not_depend_on_report_order(seed in any::<u64>(), rotate in 1usize..19) {
        let mut reports: Vec<MetricReport> = (0..20).map(|i| report(&episode(seed.wrapping_add(i), &Fuzz::dense()))).collect();
        let a = summarize(&reports, 10).unwrap().to_bytes();
        reports.rotate_left(rotate);
        reports.swap(0, 7);
        prop_assert_eq!(summarize(&reports, 10).unwrap().to_bytes(), a);
    }
}
