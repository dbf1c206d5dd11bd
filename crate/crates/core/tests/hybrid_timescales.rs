//! One co-simulated fault on the ring-23 preset, inspected for the two
//! transient families.

use std::sync::OnceLock;

use transwave_core::analysis::{default_threshold, detect_arrivals};
use transwave_core::emt::propagation_speed_em_kms;
use transwave_core::hybrid::{run_hybrid, HybridConfig};
use transwave_core::model::{presets, Disturbance, NetworkModel};
use transwave_core::series::{Quantity, TimeSeriesSet};

const T_END: f64 = 6.0;
const FAULT_BUS: usize = 1;

fn model() -> NetworkModel {
    presets::ring23()
}

fn run() -> &'static TimeSeriesSet {
    static RUN: OnceLock<TimeSeriesSet> = OnceLock::new();
    RUN.get_or_init(|| {
        let cfg = HybridConfig {
            t_end: T_END,
            ..HybridConfig::default()
        };
        run_hybrid(&model(), &cfg, &[Disturbance::fault(FAULT_BUS, 0.0)]).unwrap()
    })
}

/// `|v(t) - v(t - T)|`: zero for a steady sinusoid, so what remains is the
/// electromagnetic transient (plus a slow phase drift far below it).
fn cycle_difference(s: &TimeSeriesSet, bus: usize, period: f64) -> Vec<(f64, f64)> {
    let v = s.values(bus, Quantity::Voltage).unwrap();
    let dt = s.sample_period().unwrap();
    let lag = (period / dt).round() as usize;
    (lag..s.len()).map(|i| (s.time[i], (v[i] - v[i - lag]).abs())).collect()
}

fn peak_in(samples: impl Iterator<Item = (f64, f64)>, from: f64, to: f64) -> f64 {
    samples
        .filter(|(t, _)| (from..to).contains(t))
        .fold(0.0, |a, (_, x)| a.max(x))
}

#[test]
fn output_grid_is_uniform_and_complete() {
    let s = run();
    let dt = s.sample_period().unwrap();
    assert!(s.time.windows(2).all(|w| ((w[1] - w[0]) - dt).abs() < 1e-9 * dt));
    for q in [Quantity::Voltage, Quantity::Domega, Quantity::Delta] {
        assert_eq!(s.buses_with(q).len(), 23);
    }
    assert!(s.channels.iter().all(|c| c.values.len() == s.len()));
}

#[test]
fn electromagnetic_arrival_precedes_electromechanical_at_every_bus() {
    let m = model();
    let s = run();
    let em = detect_arrivals(
        s,
        Quantity::Voltage,
        FAULT_BUS,
        &m,
        default_threshold(Quantity::Voltage, &m),
        0.0,
    )
    .unwrap();
    let mech = detect_arrivals(
        s,
        Quantity::Domega,
        FAULT_BUS,
        &m,
        default_threshold(Quantity::Domega, &m),
        0.0,
    )
    .unwrap();
    assert_eq!(em.detected(), 23);
    assert_eq!(mech.detected(), 23);
    for bus in 0..23 {
        let (a, b) = (em.arrival(bus).unwrap(), mech.arrival(bus).unwrap());
        assert!(a < b, "bus {bus}: em {a} mech {b}");
    }
}

#[test]
fn far_bus_sees_both_fronts_at_their_own_speeds() {
    // bus 12 is 1100 km from the fault along either direction
    let m = model();
    let s = run();
    let far = 12;
    let distance = m.line_distances(FAULT_BUS)[far].unwrap();
    let em = detect_arrivals(
        s,
        Quantity::Voltage,
        FAULT_BUS,
        &m,
        default_threshold(Quantity::Voltage, &m),
        0.0,
    )
    .unwrap();
    let mech = detect_arrivals(
        s,
        Quantity::Domega,
        FAULT_BUS,
        &m,
        default_threshold(Quantity::Domega, &m),
        0.0,
    )
    .unwrap();
    let t_em = em.arrival(far).unwrap();
    let t_mech = mech.arrival(far).unwrap();
    let flight = distance / propagation_speed_em_kms(&m.lines[0]).unwrap();
    assert!(
        t_em >= flight * 0.95 && t_em < flight * 1.1 + 1e-3,
        "em {t_em} vs {flight}"
    );
    // the constant-impedance loads see the voltage dip at once, so a small
    // rotor precursor reaches the far side before the swing front proper
    assert!(t_mech > 0.5, "mech {t_mech}");
    assert!(t_mech / t_em > 100.0, "ratio {}", t_mech / t_em);
}

#[test]
fn electromagnetic_transient_dies_while_the_swing_lives_on() {
    let s = run();
    let period = 1.0 / model().bases.f_nominal;
    for bus in 0..23 {
        let diff = cycle_difference(s, bus, period);
        let em_peak = peak_in(diff.iter().copied(), 0.0, 0.5);
        let em_late = peak_in(diff.iter().copied(), 0.5, T_END);
        assert!(em_late < 0.1 * em_peak, "bus {bus}: {em_late} vs peak {em_peak}");

        let w = s.values(bus, Quantity::Domega).unwrap();
        let samples = || s.time.iter().copied().zip(w.iter().map(|x| x.abs()));
        let mech_peak = peak_in(samples(), 0.0, T_END);
        let mech_late = peak_in(samples(), 5.0, T_END);
        assert!(
            mech_late > 0.1 * mech_peak,
            "bus {bus}: {mech_late} vs peak {mech_peak}"
        );
    }
}
