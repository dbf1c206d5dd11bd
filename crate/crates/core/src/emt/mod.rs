//! Electromagnetic transient engine for a [`NetworkModel`].
//!
//! Each bus becomes a node. Lines are lossless Bergeron models, loads are
//! constant resistances at nominal voltage, and each generator is an ideal
//! sinusoidal EMF behind a series R-L branch. Faults close a resistance to
//! ground. Waveforms are single-phase equivalents in volts. Runs start from
//! the network's AC steady state.

pub mod circuit;

use nalgebra::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Engine, Error, Result};
use crate::model::{Disturbance, DisturbanceKind, Line, NetworkModel, Target};
use crate::series::{Quantity, TimeSeriesSet};
use circuit::{Circuit, LineId, ResistorId, RlId, Transient};

/// Smallest fault resistance used in the network, ohm.
const MIN_FAULT_OHM: f64 = 1e-9;

/// Generator source impedance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SourceConfig {
    /// Series resistance, ohm.
    pub r_ohm: f64,
    /// Series reactance at nominal frequency, pu on the system base.
    pub x_pu: f64,
}

impl Default for SourceConfig {
    fn default() -> Self {
        Self { r_ohm: 0.1, x_pu: 0.01 }
    }
}

impl SourceConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.r_ohm >= 0.0) || !(self.x_pu >= 0.0) {
            return Err(Error::Config("source r_ohm and x_pu must be >= 0".into()));
        }
        if self.r_ohm == 0.0 && self.x_pu == 0.0 {
            return Err(Error::Config("source impedance must be nonzero".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmtConfig {
    /// Step, s. Defaults to `min(tau_min / 10, 1 us)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    /// s, measured from the end of the pre-roll.
    pub t_end: f64,
    /// Fundamental cycles simulated before t = 0 to settle the steady state.
    pub pre_roll_cycles: f64,
    pub record_every: usize,
    pub sources: SourceConfig,
}

impl Default for EmtConfig {
    fn default() -> Self {
        Self {
            dt: None,
            t_end: 0.02,
            pre_roll_cycles: 5.0,
            record_every: 1,
            sources: SourceConfig::default(),
        }
    }
}

impl EmtConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_end > 0.0) || !self.t_end.is_finite() {
            return Err(Error::Config(format!("t_end must be > 0, got {}", self.t_end)));
        }
        if !(self.pre_roll_cycles >= 0.0) {
            return Err(Error::Config("pre_roll_cycles must be >= 0".into()));
        }
        if self.record_every == 0 {
            return Err(Error::Config("record_every must be >= 1".into()));
        }
        self.sources.validate()
    }

    /// The effective step for `model`.
    pub fn resolve_dt(&self, model: &NetworkModel) -> Result<f64> {
        let tau_min = min_travel_time(model)?;
        let dt = self.dt.unwrap_or((tau_min / 10.0).min(1e-6));
        if !(dt > 0.0) {
            return Err(Error::Config(format!("dt must be > 0, got {dt}")));
        }
        if dt > tau_min * (1.0 + 1e-9) {
            return Err(Error::Config(format!(
                "dt {dt:e} s exceeds the shortest line travel time {tau_min:e} s"
            )));
        }
        Ok(dt)
    }
}

fn min_travel_time(model: &NetworkModel) -> Result<f64> {
    model
        .lines
        .iter()
        .map(Line::travel_time)
        .fold(None, |acc: Option<f64>, t| Some(acc.map_or(t, |a| a.min(t))))
        .ok_or_else(|| Error::Config("network has no lines".into()))
}

/// Propagation speed `1/sqrt(LC)` in `len_unit_em` per second.
pub fn propagation_speed_em(line: &Line) -> Result<f64> {
    if !(line.l_per_len > 0.0) || !(line.c_per_len > 0.0) {
        return Err(Error::Domain(format!(
            "inductance and capacitance must be > 0, got L={} C={}",
            line.l_per_len, line.c_per_len
        )));
    }
    Ok(1.0 / (line.l_per_len * line.c_per_len).sqrt())
}

/// Propagation speed in km/s regardless of the line's unit length.
pub fn propagation_speed_em_kms(line: &Line) -> Result<f64> {
    Ok(line.len_unit_em.to_km(propagation_speed_em(line)?))
}

#[derive(Debug, Clone)]
struct Source {
    slot: usize,
    rl: RlId,
    r: f64,
    l: f64,
    amplitude: f64,
}

/// A model compiled into a circuit, plus the switching state needed to
/// apply disturbances.
#[derive(Debug, Clone)]
pub struct EmtNetwork {
    sim: Transient,
    omega: f64,
    bus_nodes: Vec<usize>,
    sources: Vec<Option<Source>>,
    loads: Vec<Option<ResistorId>>,
    load_p: Vec<f64>,
    capacity: Vec<f64>,
    v_ll: f64,
    line_ids: Vec<LineId>,
    disturbances: Vec<Disturbance>,
    fault_switches: Vec<Option<ResistorId>>,
    electrical_trips: bool,
    drive: Vec<f64>,
    /// EMF quadrature (90 degrees ahead of the drive), per slot
    quadrature: Vec<f64>,
    shed: Vec<f64>,
    tripped: Vec<f64>,
}

impl EmtNetwork {
    /// Compile `model`. When `electrical_trips` is false, generation trips
    /// are left to the caller (the hybrid engine applies them mechanically).
    pub fn new(
        model: &NetworkModel,
        sources: &SourceConfig,
        dt: f64,
        disturbances: &[Disturbance],
        electrical_trips: bool,
    ) -> Result<Self> {
        sources.validate()?;
        let bases = &model.bases;
        let omega = bases.omega_s();
        let v_ll = bases.v_base * 1e3;
        let n = model.n_buses();
        let mut c = Circuit::new();
        let bus_nodes: Vec<usize> = (0..n).map(|_| c.add_node()).collect();

        let l_src = sources.x_pu * bases.z_base() / omega;
        let mut src = Vec::with_capacity(n);
        let mut slot = 0;
        for (bus, &node) in model.buses.iter().zip(&bus_nodes) {
            if bus.has_generator() {
                let emf = c.add_driven_node();
                let rl = c.add_series_rl(Some(emf), Some(node), sources.r_ohm, l_src);
                src.push(Some(Source {
                    slot,
                    rl,
                    r: sources.r_ohm,
                    l: l_src,
                    amplitude: bus.emf_pu * bases.phase_peak_volts(),
                }));
                slot += 1;
            } else {
                src.push(None);
            }
        }

        let loads = model
            .buses
            .iter()
            .zip(&bus_nodes)
            .map(|(bus, &node)| {
                (bus.load_p > 0.0).then(|| c.add_resistor(Some(node), None, Some(load_ohm(v_ll, bus.load_p))))
            })
            .collect();

        let mut line_ids = Vec::with_capacity(model.lines.len());
        for (idx, line) in model.lines.iter().enumerate() {
            let zc = line.surge_impedance();
            let tau = line.travel_time();
            if !(zc > 0.0) || !(tau > 0.0) || !zc.is_finite() {
                return Err(Error::SingularLine { line: idx });
            }
            line_ids.push(c.add_line(bus_nodes[line.from_bus], bus_nodes[line.to_bus], zc, tau));
        }

        let fault_switches = disturbances
            .iter()
            .map(|d| match (d.kind, d.target) {
                (DisturbanceKind::Fault, Target::Bus(b)) => Some(c.add_resistor(Some(bus_nodes[b]), None, None)),
                _ => None,
            })
            .collect();

        Ok(Self {
            sim: Transient::new(c, dt)?,
            omega,
            bus_nodes,
            sources: src,
            loads,
            load_p: model.buses.iter().map(|b| b.load_p).collect(),
            capacity: model.buses.iter().map(|b| b.capacity_mw()).collect(),
            v_ll,
            line_ids,
            disturbances: disturbances.to_vec(),
            fault_switches,
            electrical_trips,
            drive: vec![0.0; slot],
            quadrature: vec![0.0; slot],
            shed: vec![0.0; n],
            tripped: vec![0.0; n],
        })
    }

    pub fn dt(&self) -> f64 {
        self.sim.dt()
    }

    pub fn n_buses(&self) -> usize {
        self.bus_nodes.len()
    }

    pub fn bus_voltage(&self, bus: usize) -> f64 {
        self.sim.voltage(self.bus_nodes[bus])
    }

    /// Current delivered by the generator at `bus` into the network, A.
    pub fn source_current(&self, bus: usize) -> Option<f64> {
        self.sources[bus].as_ref().map(|s| self.sim.rl_current(s.rl))
    }

    /// Present EMF value at `bus`, V.
    pub fn source_emf(&self, bus: usize) -> Option<f64> {
        self.sources[bus].as_ref().map(|s| self.drive[s.slot])
    }

    /// Balanced three-phase instantaneous power delivered by the generator at
    /// `bus`, W, rebuilt from the single-phase equivalent as
    /// `1.5 (e i + e_q i_q)`. The current quadrature `i_q = -(di/dt) / omega`
    /// comes from the source inductance. Without inductance it falls back
    /// to `3 e i`.
    pub fn source_power(&self, bus: usize) -> Option<f64> {
        let s = self.sources[bus].as_ref()?;
        let e = self.drive[s.slot];
        let i = self.sim.rl_current(s.rl);
        match self.sim.series_rl(s.rl) {
            Some((r, l)) if l > 0.0 => {
                let didt = (e - self.bus_voltage(bus) - r * i) / l;
                let i_q = -didt / self.omega;
                Some(1.5 * (e * i + self.quadrature[s.slot] * i_q))
            }
            Some(_) => Some(3.0 * e * i),
            None => Some(0.0),
        }
    }

    pub fn transient(&self) -> &Transient {
        &self.sim
    }

    fn apply_disturbances(&mut self, t: f64) {
        self.shed.iter_mut().for_each(|x| *x = 0.0);
        self.tripped.iter_mut().for_each(|x| *x = 0.0);
        for (j, d) in self.disturbances.iter().enumerate() {
            let active = d.is_active(t);
            match (d.kind, d.target) {
                (DisturbanceKind::Fault, _) => {
                    if let Some(sw) = self.fault_switches[j] {
                        self.sim
                            .set_resistor(sw, active.then_some(d.magnitude.max(MIN_FAULT_OHM)));
                    }
                }
                (DisturbanceKind::LineTrip, Target::Line(l)) => {
                    self.sim.set_line_open(self.line_ids[l], active);
                }
                (DisturbanceKind::LoadShed, Target::Bus(b)) if active => self.shed[b] += d.magnitude,
                (DisturbanceKind::GenerationTrip, Target::Bus(b)) if active => self.tripped[b] += d.magnitude,
                _ => {}
            }
        }
        for bus in 0..self.bus_nodes.len() {
            if let Some(id) = self.loads[bus] {
                let p = self.load_p[bus] - self.shed[bus];
                let r = (p > 0.0).then(|| load_ohm(self.v_ll, p));
                self.sim.set_resistor(id, r);
            }
            if self.electrical_trips {
                if let Some(s) = &self.sources[bus] {
                    let keep = 1.0 - self.tripped[bus] / self.capacity[bus];
                    let params = if self.tripped[bus] == 0.0 {
                        Some((s.r, s.l))
                    } else {
                        (keep > 0.0).then(|| (s.r / keep, s.l / keep))
                    };
                    self.sim.set_series_rl(s.rl, params);
                }
            }
        }
    }

    /// Start from the AC steady state with the latest solution at `t_last`
    /// and EMF phase offsets `phase`, with the disturbances as they stand at
    /// `t_last`.
    pub fn start_steady(&mut self, t_last: f64, phase: &[f64]) -> Result<()> {
        self.apply_disturbances(t_last);
        let mut drive = vec![Complex::new(0.0, 0.0); self.drive.len()];
        for (bus, s) in self.sources.iter().enumerate() {
            if let Some(s) = s {
                drive[s.slot] = Complex::from_polar(s.amplitude, phase[bus]);
                let (sin, cos) = (self.omega * t_last + phase[bus]).sin_cos();
                self.drive[s.slot] = s.amplitude * cos;
                self.quadrature[s.slot] = s.amplitude * sin;
            }
        }
        self.sim.start_sinusoidal(self.omega, &drive, t_last)
    }

    /// Solve the network at time `t` with EMF phase offsets `phase` (rad,
    /// one per bus; ignored where there is no generator).
    pub fn step(&mut self, t: f64, phase: &[f64]) -> Result<()> {
        self.apply_disturbances(t + 0.5 * self.dt());
        for (bus, s) in self.sources.iter().enumerate() {
            if let Some(s) = s {
                let (sin, cos) = (self.omega * t + phase[bus]).sin_cos();
                self.drive[s.slot] = s.amplitude * cos;
                self.quadrature[s.slot] = s.amplitude * sin;
            }
        }
        self.sim.step(&self.drive)?;
        if let Some(bus) = self.bus_nodes.iter().position(|&nd| !self.sim.voltage(nd).is_finite()) {
            return Err(Error::Divergence {
                engine: Engine::Emt,
                bus,
                t,
            });
        }
        Ok(())
    }
}

fn load_ohm(v_ll: f64, p_mw: f64) -> f64 {
    v_ll * v_ll / (p_mw * 1e6)
}

/// Number of pre-roll steps and post-roll steps for a run.
pub(crate) fn step_counts(pre_roll_cycles: f64, f_nominal: f64, t_end: f64, dt: f64) -> (usize, usize) {
    let pre = (pre_roll_cycles / f_nominal / dt).round() as usize;
    let post = (t_end / dt).round() as usize;
    (pre, post)
}

/// Bus-voltage waveforms. The returned time axis starts at minus the
/// pre-roll so the settled pre-event waveform is part of the record.
pub fn run_emt(model: &NetworkModel, config: &EmtConfig, disturbances: &[Disturbance]) -> Result<TimeSeriesSet> {
    model.ensure_valid()?;
    config.validate()?;
    for d in disturbances {
        d.validate(model)?;
    }
    let dt = config.resolve_dt(model)?;
    let mut net = EmtNetwork::new(model, &config.sources, dt, disturbances, true)?;
    let n = model.n_buses();
    let (pre, post) = step_counts(config.pre_roll_cycles, model.bases.f_nominal, config.t_end, dt);
    let phase = vec![0.0; n];
    net.start_steady(-(pre as f64 + 1.0) * dt, &phase)?;
    let every = config.record_every as i64;

    let cap = (pre + post) / config.record_every + 2;
    let mut time = Vec::with_capacity(cap);
    let mut rec: Vec<Vec<f64>> = vec![Vec::with_capacity(cap); n];
    for step in 0..=(pre + post) {
        let k = step as i64 - pre as i64;
        let t = k as f64 * dt;
        net.step(t, &phase)?;
        if k.rem_euclid(every) == 0 {
            time.push(t);
            for (bus, r) in rec.iter_mut().enumerate() {
                r.push(net.bus_voltage(bus));
            }
        }
    }
    let mut out = TimeSeriesSet::new(time);
    for (bus, values) in rec.into_iter().enumerate() {
        out.push(bus, Quantity::Voltage, values);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::presets;

    #[test]
    fn speed_of_preset_line() {
        let line = &presets::ring23().lines[0];
        let v = propagation_speed_em(line).unwrap();
        assert!((v / 2.92e8 - 1.0).abs() < 0.005, "{v}");
        let mut wide = line.clone();
        wide.c_per_len = 0.8e-9;
        assert!((propagation_speed_em(&wide).unwrap() / 1.107e8 - 1.0).abs() < 0.005);
        let mut unit = line.clone();
        unit.l_per_len = 1.0;
        unit.c_per_len = 1.0;
        assert_eq!(propagation_speed_em(&unit).unwrap(), 1.0);
        unit.c_per_len = 0.0;
        assert!(matches!(propagation_speed_em(&unit), Err(Error::Domain(_))));
    }

    #[test]
    fn default_step_on_ring23() {
        let m = presets::ring23();
        let dt = EmtConfig::default().resolve_dt(&m).unwrap();
        assert_eq!(dt, 1e-6);
        let too_big = EmtConfig {
            dt: Some(1e-3),
            ..EmtConfig::default()
        };
        assert!(matches!(too_big.resolve_dt(&m), Err(Error::Config(_))));
    }

    #[test]
    fn undisturbed_ring_settles_to_constant_sinusoid() {
        let m = presets::ring23();
        let cfg = EmtConfig {
            t_end: 1.0 / 60.0 * 2.0,
            dt: Some(2e-6),
            ..EmtConfig::default()
        };
        let s = run_emt(&m, &cfg, &[]).unwrap();
        let t0 = s.time.iter().position(|&t| t >= -1e-12).unwrap();
        let period = (1.0f64 / 60.0 / 2e-6).round() as usize;
        for bus in [0, 7, 19] {
            let v = &s.values(bus, Quantity::Voltage).unwrap()[t0..];
            let peak = |w: &[f64]| w.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
            let a1 = peak(&v[..period]);
            let a2 = peak(&v[period..2 * period]);
            assert!((a1 / a2 - 1.0).abs() < 1e-3, "bus {bus}: {a1} vs {a2}");
            // line charging lifts the bus above the EMF through the source reactance
            assert!(a1 > 408_248.0 && a1 < 1.2 * 408_248.0, "{a1}");
        }
    }
}
