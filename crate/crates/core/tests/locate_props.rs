use proptest::prelude::*;

use transwave_core::locate::{
    estimate_speed_and_locate, forward_arrivals, jitter_arrivals, locate, Bounds, LocationEstimate, SensorArrival,
};

const SPEED: f64 = 350.0;

/// Twice the signed area of the triangle `a b c`.
fn area2(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

/// Sensors whose first three points span a fat triangle, plus an event
/// drawn as a convex combination of that triangle.
fn geometry(min_sensors: usize) -> impl Strategy<Value = (Vec<(String, [f64; 2])>, [f64; 2])> {
    (
        prop::collection::vec((0.0f64..500.0, 0.0f64..500.0), min_sensors..9),
        (0.05f64..1.0, 0.05f64..1.0, 0.05f64..1.0),
    )
        .prop_filter("sensors too close to collinear", |(pts, _)| {
            let p = |i: usize| [pts[i].0, pts[i].1];
            area2(p(0), p(1), p(2)).abs() > 2.0 * 0.1 * 500.0 * 500.0 / 2.0
        })
        .prop_map(|(pts, (a, b, c))| {
            let sensors: Vec<_> = pts
                .iter()
                .enumerate()
                .map(|(i, &(x, y))| (format!("s{i}"), [x, y]))
                .collect();
            let s = a + b + c;
            let event = [
                (a * pts[0].0 + b * pts[1].0 + c * pts[2].0) / s,
                (a * pts[0].1 + b * pts[1].1 + c * pts[2].1) / s,
            ];
            (sensors, event)
        })
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn positions(arrivals: &[SensorArrival]) -> Vec<[f64; 2]> {
    arrivals.iter().map(|a| a.position).collect()
}

fn shifted(arrivals: &[SensorArrival], dx: f64, dy: f64, dt: f64) -> Vec<SensorArrival> {
    arrivals
        .iter()
        .map(|a| SensorArrival {
            position: [a.position[0] + dx, a.position[1] + dy],
            arrival_t: a.arrival_t + dt,
            ..a.clone()
        })
        .collect()
}

fn same_fix(a: &LocationEstimate, b: &LocationEstimate, tol_km: f64) -> bool {
    dist(a.position, b.position) <= tol_km
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn forward_then_inverse_recovers_the_event((sensors, event) in geometry(3), t0 in -10.0f64..10.0) {
        let arrivals = forward_arrivals(&sensors, event, t0, SPEED);
        let est = locate(&arrivals, SPEED, None).unwrap();
        prop_assert!(est.refined);
        if sensors.len() == 3 {
            // two hyperbolas may cross twice; either crossing fits exactly
            prop_assert!(est.residual_rms < 1e-9, "{}", est.residual_rms);
        } else {
            prop_assert!(dist(est.position, event) < 1e-3, "{:?} vs {:?}", est.position, event);
            prop_assert!((est.origin_t - t0).abs() < 1e-6);
        }
    }

    #[test]
    fn joint_fit_recovers_speed((sensors, event) in geometry(5), speed in 100.0f64..1000.0) {
        let arrivals = forward_arrivals(&sensors, event, 0.0, speed);
        let est = estimate_speed_and_locate(&arrivals, None).unwrap();
        prop_assume!(!est.degenerate);
        prop_assert!((est.speed_used / speed - 1.0).abs() < 1e-3, "{} vs {}", est.speed_used, speed);
        prop_assert!(dist(est.position, event) < 1e-2);
    }

    #[test]
    fn translation_moves_the_estimate(
        (sensors, event) in geometry(4),
        dx in -1e4f64..1e4,
        dy in -1e4f64..1e4,
        seed in any::<u64>(),
    ) {
        let arrivals = jitter_arrivals(&forward_arrivals(&sensors, event, 0.0, SPEED), 0.05, seed);
        let bounds = Bounds::around(&positions(&arrivals));
        let base = locate(&arrivals, SPEED, Some(bounds)).unwrap();
        let moved = locate(&shifted(&arrivals, dx, dy, 0.0), SPEED, Some(bounds.translated(dx, dy))).unwrap();
        let expect = [base.position[0] + dx, base.position[1] + dy];
        prop_assert!(dist(moved.position, expect) < 1e-6, "{:?} vs {:?}", moved.position, expect);
        prop_assert!((moved.origin_t - base.origin_t).abs() < 1e-9);
    }

    #[test]
    fn time_shift_moves_only_the_origin_time(
        (sensors, event) in geometry(4),
        dt in -1e3f64..1e3,
        seed in any::<u64>(),
    ) {
        let arrivals = jitter_arrivals(&forward_arrivals(&sensors, event, 0.0, SPEED), 0.05, seed);
        let base = locate(&arrivals, SPEED, None).unwrap();
        let moved = locate(&shifted(&arrivals, 0.0, 0.0, dt), SPEED, None).unwrap();
        prop_assert!(same_fix(&base, &moved, 1e-6), "{:?} vs {:?}", base.position, moved.position);
        prop_assert!((moved.origin_t - base.origin_t - dt).abs() < 1e-9 * (1.0 + dt.abs()));
    }

    #[test]
    fn refinement_never_loses_to_the_grid((sensors, event) in geometry(3), seed in any::<u64>(), noise in 0.0f64..0.5) {
        let arrivals = jitter_arrivals(&forward_arrivals(&sensors, event, 0.0, SPEED), noise, seed);
        let est = locate(&arrivals, SPEED, None).unwrap();
        prop_assert!(est.cost <= est.grid_cost, "{} > {}", est.cost, est.grid_cost);
        if arrivals.len() >= 4 {
            let joint = estimate_speed_and_locate(&arrivals, None).unwrap();
            prop_assert!(joint.cost <= joint.grid_cost, "{} > {}", joint.cost, joint.grid_cost);
        }
    }

    #[test]
    fn zero_weight_sensor_is_ignored(
        (sensors, event) in geometry(4),
        extra in (0.0f64..500.0, 0.0f64..500.0, -5.0f64..5.0),
        seed in any::<u64>(),
    ) {
        let arrivals = jitter_arrivals(&forward_arrivals(&sensors, event, 0.0, SPEED), 0.05, seed);
        let bounds = Bounds::around(&positions(&arrivals));
        let mut padded = arrivals.clone();
        padded.insert(1, SensorArrival { weight: 0.0, ..SensorArrival::new("ghost", [extra.0, extra.1], extra.2) });
        let kept = locate(&arrivals, SPEED, Some(bounds)).unwrap();
        let with_ghost = locate(&padded, SPEED, Some(bounds)).unwrap();
        prop_assert!(same_fix(&kept, &with_ghost, 1e-9), "{:?} vs {:?}", kept.position, with_ghost.position);
        prop_assert!((kept.origin_t - with_ghost.origin_t).abs() < 1e-12);
        prop_assert!((kept.residual_rms - with_ghost.residual_rms).abs() < 1e-12);
    }
}
