use proptest::prelude::*;

use transwave_core::analysis::{default_threshold, detect_arrivals};
use transwave_core::emt::circuit::{Circuit, Transient};
use transwave_core::emt::{propagation_speed_em_kms, run_emt, EmtConfig};
use transwave_core::model::{build_ring, presets, Disturbance, SystemBases};
use transwave_core::series::Quantity;

const DT: f64 = 1e-6;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn matched_line_delays_pulses_exactly(
        q in 1usize..80,
        zc in 5.0f64..800.0,
        pulse in prop::collection::vec(-1e5f64..1e5, 1..12),
    ) {
        let mut c = Circuit::new();
        let e = c.add_driven_node();
        let k = c.add_node();
        let m = c.add_node();
        c.add_resistor(Some(e), Some(k), Some(zc));
        c.add_line(k, m, zc, q as f64 * DT);
        c.add_resistor(Some(m), None, Some(zc));
        let mut sim = Transient::new(c, DT).unwrap();
        let drive = |n: usize| pulse.get(n).copied().unwrap_or(0.0);
        let scale = pulse.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for n in 0..q + pulse.len() + 20 {
            sim.step(&[drive(n)]).unwrap();
            let sent = if n >= q { drive(n - q) / 2.0 } else { 0.0 };
            prop_assert!((sim.voltage(m) - sent).abs() <= 1e-9 * scale, "step {}", n);
        }
    }

    #[test]
    fn resistive_network_never_gains_line_energy(
        taus in prop::collection::vec(3usize..40, 1..4),
        shunts in prop::collection::vec(0.05f64..20.0, 4),
        charge in 1.0f64..1e4,
    ) {
        // lines in cascade with whole-step delays, a resistor to ground at
        // every junction; the source is charged, then frozen at zero
        let zc = 50.0;
        let mut c = Circuit::new();
        let e = c.add_driven_node();
        let mut node = c.add_node();
        c.add_resistor(Some(e), Some(node), Some(shunts[0] * zc));
        let mut lines = Vec::new();
        for (i, &q) in taus.iter().enumerate() {
            let next = c.add_node();
            lines.push(c.add_line(node, next, zc, q as f64 * DT));
            c.add_resistor(Some(next), None, Some(shunts[i + 1] * zc));
            node = next;
        }
        let mut sim = Transient::new(c, DT).unwrap();
        for _ in 0..60 {
            sim.step(&[charge]).unwrap();
        }
        let energy = |s: &Transient| lines.iter().map(|l| s.line_energy(*l)).sum::<f64>();
        let mut last = energy(&sim);
        for n in 0..500 {
            sim.step(&[0.0]).unwrap();
            let now = energy(&sim);
            prop_assert!(now <= last * (1.0 + 1e-12) + 1e-300, "step {}: {} > {}", n, now, last);
            last = now;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn arrivals_follow_path_distance_and_speed(
        n in 5usize..16,
        origin in 0usize..5,
        l_scale in 0.5f64..2.0,
        c_scale in 0.5f64..4.0,
    ) {
        let mut line = presets::ring23_line();
        line.l_per_len *= l_scale;
        line.c_per_len *= c_scale;
        let m = build_ring(SystemBases::default(), n, 100.0, &presets::ring23_bus(), &line).unwrap();
        let cfg = EmtConfig { t_end: 0.01, record_every: 1, ..EmtConfig::default() };
        let dt = cfg.resolve_dt(&m).unwrap();
        prop_assert!(dt <= m.lines[0].travel_time() / 10.0);
        let s = run_emt(&m, &cfg, &[Disturbance::fault(origin, 0.0)]).unwrap();
        let rep = detect_arrivals(&s, Quantity::Voltage, origin, &m, default_threshold(Quantity::Voltage, &m), 0.0).unwrap();
        let mut seen: Vec<(f64, f64)> = rep.buses.iter()
            .filter_map(|b| b.arrival_t.map(|t| (b.distance_km, t)))
            .collect();
        prop_assert_eq!(seen.len(), n);
        seen.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in seen.windows(2) {
            prop_assert!(w[1].1 >= w[0].1, "{:?}", w);
        }
        let exact = propagation_speed_em_kms(&m.lines[0]).unwrap();
        prop_assert!((rep.fitted_speed / exact - 1.0).abs() < 0.05, "{} vs {}", rep.fitted_speed, exact);
    }
}
