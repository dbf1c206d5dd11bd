use proptest::prelude::*;

use transwave_core::model::{
    build_mesh, build_ring, presets, BusTemplate, Disturbance, LengthUnit, LineTemplate, NetworkModel, SystemBases,
};
use transwave_core::series::Quantity;
use transwave_core::swing::{run_swing, Conditions, SwingConfig, SwingState, SwingStepper, SwingSystem};

fn ring(n: usize) -> NetworkModel {
    build_ring(
        SystemBases::default(),
        n,
        100.0,
        &presets::ring23_bus(),
        &presets::ring23_line(),
    )
    .unwrap()
}

/// Two identical machines, H = 1 s on the system base, joined by a 0.5 pu
/// line. Linearized, the angle difference oscillates at
/// `omega^2 = omega_s * Pmax * (1/(2H) + 1/(2H))`.
fn oscillator() -> NetworkModel {
    let bases = SystemBases::default();
    let bus = BusTemplate {
        gen_rating: Some(100.0),
        inertia_h: Some(1.0),
        coherent_count: 1,
        load_p: 50.0,
        emf_pu: 1.0,
    };
    let line = LineTemplate {
        r_per_len: 0.5 * bases.z_base(),
        l_per_len: 1e-6,
        c_per_len: 1e-11,
        len_unit_em: LengthUnit::M,
    };
    let mut m = build_ring(bases, 3, 1.0, &bus, &line).unwrap();
    m.buses.truncate(2);
    m.lines.truncate(1);
    m
}

fn oscillator_error(dt: f64) -> f64 {
    let m = oscillator();
    let sys = SwingSystem::new(&m).unwrap();
    let amp = 1e-5;
    let omega = (sys.omega_s() * 2.0 * (1.0 / 2.0 + 1.0 / 2.0)).sqrt();
    let cfg = SwingConfig {
        dt,
        damping_d: 0.0,
        ..SwingConfig::default()
    };
    let cond = Conditions::nominal(2, 1);
    let mut state = SwingState::flat(2);
    state.delta = vec![amp / 2.0, -amp / 2.0];
    let mut stepper = SwingStepper::new(&sys);
    let steps = (1.0 / dt).round() as usize;
    for _ in 0..steps {
        state = stepper.step(&state, &cfg, &cond).unwrap();
    }
    let t = steps as f64 * dt;
    let exact = amp * (omega * t).cos();
    (state.delta[0] - state.delta[1] - exact).abs()
}

#[test]
fn rk4_error_shrinks_sixteenfold() {
    let ratio = oscillator_error(0.01) / oscillator_error(0.005);
    assert!((12.0..=20.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn disturbance_signs() {
    let m = ring(23);
    let cfg = SwingConfig::default();
    let tail_min = |d: Disturbance| {
        let s = run_swing(&m, &cfg, &[d]).unwrap();
        let start = s.len() * 3 / 4;
        s.channels
            .iter()
            .filter(|c| c.quantity == Quantity::Domega)
            .map(|c| c.values[start..].iter().sum::<f64>() / (s.len() - start) as f64)
            .collect::<Vec<f64>>()
    };
    let trip = tail_min(Disturbance::generation_trip(3, 0.0, 100.0));
    assert!(trip.iter().cloned().fold(f64::INFINITY, f64::min) < 0.0);
    let shed = tail_min(Disturbance::load_shed(3, 0.0, 100.0));
    assert!(shed.iter().cloned().fold(f64::NEG_INFINITY, f64::max) > 0.0);
}

#[test]
fn line_trip_leaves_no_net_speed_change() {
    // a ring with uneven loads so the tripped line carries flow
    let mut m = ring(23);
    for (k, b) in m.buses.iter_mut().enumerate() {
        b.load_p = 1000.0 + 300.0 * (2.0 * std::f64::consts::PI * k as f64 / 23.0).cos();
    }
    let s = run_swing(&m, &SwingConfig::default(), &[Disturbance::line_trip(4, 0.0)]).unwrap();
    let last = s.len() - 1;
    let total: f64 = (0..23).map(|b| s.values(b, Quantity::Domega).unwrap()[last]).sum();
    assert!(total.abs() < 1e-4, "{total}");
    let peak = (0..23)
        .flat_map(|b| s.values(b, Quantity::Domega).unwrap().iter().map(|v| v.abs()))
        .fold(0.0f64, f64::max);
    assert!(peak > 1e-6, "the trip should disturb the rotors");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn quiet_network_stays_at_rest(n in 3usize..30, mesh in any::<bool>(), h in 1.0f64..20.0) {
        let mut m = if mesh {
            build_mesh(SystemBases::default(), 2 + n % 4, 2 + n / 8, 100.0, &presets::ring23_bus(), &presets::ring23_line()).unwrap()
        } else {
            ring(n)
        };
        for b in &mut m.buses {
            b.inertia_h = Some(h);
        }
        let cfg = SwingConfig { t_end: 5.0, ..SwingConfig::default() };
        let s = run_swing(&m, &cfg, &[]).unwrap();
        let worst = s.channels.iter()
            .filter(|c| c.quantity == Quantity::Domega)
            .flat_map(|c| c.values.iter())
            .fold(0.0f64, |a, v| a.max(v.abs()));
        prop_assert!(worst < 1e-8, "{}", worst);
    }

    #[test]
    fn ring_responses_mirror(n in 4usize..16, kind in 0u8..3, mw in 10.0f64..120.0) {
        let m = ring(n);
        let d = match kind {
            0 => Disturbance::fault(0, 0.05),
            1 => Disturbance::generation_trip(0, 0.05, mw),
            _ => Disturbance::load_shed(0, 0.05, mw),
        };
        let cfg = SwingConfig { t_end: 3.0, ..SwingConfig::default() };
        let s = run_swing(&m, &cfg, &[d]).unwrap();
        for k in 1..n {
            for q in [Quantity::Domega, Quantity::Delta] {
                let a = s.values(k, q).unwrap();
                let b = s.values(n - k, q).unwrap();
                for (x, y) in a.iter().zip(b) {
                    prop_assert!((x - y).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn undamped_momentum_follows_imbalance(n in 3usize..12, bus in 0usize..3, trip in 1.0f64..120.0, shed in 0.0f64..500.0) {
        let m = ring(n);
        let sys = SwingSystem::new(&m).unwrap();
        let cfg = SwingConfig { damping_d: 0.0, ..SwingConfig::default() };
        let ds = [
            Disturbance::generation_trip(bus, 0.0, trip),
            Disturbance::load_shed((bus + 1) % n, 0.0, shed),
        ];
        let imbalance = (shed - trip) / m.bases.s_base;
        let mut state = SwingState { t: 0.0, delta: sys.equilibrium_angles().unwrap(), domega: vec![0.0; n] };
        let mut stepper = SwingStepper::new(&sys);
        for k in 0..200 {
            let t = k as f64 * cfg.dt;
            let cond = sys.conditions_at(&ds, t + 0.5 * cfg.dt);
            let before = sys.momentum(&state);
            state = stepper.step(&state, &cfg, &cond).unwrap();
            let rate = (sys.momentum(&state) - before) / cfg.dt;
            prop_assert!((rate - imbalance).abs() < 1e-6, "step {}: {} vs {}", k, rate, imbalance);
        }
    }
}
