//! Multi-rate co-simulation: the EMT network runs at the fine step while
//! the swing equations advance once every `rate_ratio` steps and steer the
//! generator EMF phases.
//!
//! The electrical power handed to each rotor is the one-cycle sliding mean
//! of the source's instantaneous three-phase power. Between rotor updates
//! the EMF phase ramps linearly from one rotor angle to the next.

use serde::{Deserialize, Serialize};

use crate::emt::{step_counts, EmtNetwork, SourceConfig};
use crate::error::{Engine, Error, Result};
use crate::model::{Disturbance, DisturbanceKind, NetworkModel, Target};
use crate::series::{Quantity, TimeSeriesSet};
use crate::swing::{SwingState, SwingStepper, SwingSystem};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HybridConfig {
    /// EMT step, s. Defaults as for the EMT engine.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt_em: Option<f64>,
    /// Rotor step as a multiple of `dt_em`.
    pub rate_ratio: usize,
    pub t_end: f64,
    /// Output decimation in EMT steps.
    pub record_every: usize,
    pub damping_d: f64,
    pub pre_roll_cycles: f64,
    /// Extrapolate the averaged power by half a window to cancel the lag of
    /// the sliding mean.
    pub delay_compensation: bool,
    pub sources: SourceConfig,
}

impl Default for HybridConfig {
    fn default() -> Self {
        Self {
            dt_em: None,
            rate_ratio: 1000,
            t_end: 2.0,
            record_every: 100,
            damping_d: 0.5,
            pre_roll_cycles: 5.0,
            delay_compensation: true,
            sources: SourceConfig::default(),
        }
    }
}

impl HybridConfig {
    /// Validate and return `(dt_em, dt_mech)` for `model`.
    pub fn resolve_steps(&self, model: &NetworkModel) -> Result<(f64, f64)> {
        let em = crate::emt::EmtConfig {
            dt: self.dt_em,
            t_end: self.t_end,
            pre_roll_cycles: self.pre_roll_cycles,
            record_every: self.record_every,
            sources: self.sources,
        };
        em.validate()?;
        let dt_em = em.resolve_dt(model)?;
        if self.rate_ratio == 0 {
            return Err(Error::Config("rate_ratio must be >= 1".into()));
        }
        let dt_mech = dt_em * self.rate_ratio as f64;
        if dt_mech > 0.01 * (1.0 + 1e-9) {
            return Err(Error::Config(format!(
                "rotor step rate_ratio * dt_em = {dt_mech:e} s exceeds 0.01 s"
            )));
        }
        if !(self.damping_d >= 0.0) {
            return Err(Error::Config("damping_d must be >= 0".into()));
        }
        Ok((dt_em, dt_mech))
    }
}

/// Running one-cycle mean of instantaneous source power per generator.
///
/// The mean is the trapezoidal integral of the sampled power over exactly
/// one period, including a fractional sample interval at the far end.
struct PowerMeter {
    /// whole steps per period
    whole: usize,
    /// leftover fraction of a step
    frac: f64,
    /// last `whole + 2` samples per bus, newest at `pos`
    buf: Vec<Vec<f64>>,
    /// sum of the newest `whole + 1` samples
    sum: Vec<f64>,
    pos: usize,
}

impl PowerMeter {
    fn new(n: usize, period_steps: f64) -> Self {
        let whole = period_steps.floor().max(1.0) as usize;
        Self {
            whole,
            frac: (period_steps - whole as f64).max(0.0),
            buf: vec![vec![0.0; whole + 2]; n],
            sum: vec![0.0; n],
            pos: 0,
        }
    }

    fn at(&self, bus: usize, age: usize) -> f64 {
        let len = self.whole + 2;
        self.buf[bus][(self.pos + len - age) % len]
    }

    fn push(&mut self, net: &EmtNetwork) {
        let len = self.whole + 2;
        self.pos = (self.pos + 1) % len;
        for bus in 0..self.sum.len() {
            let p = net.source_power(bus).unwrap_or(0.0);
            // the sample now aging out of the summed span
            let leaving = self.at(bus, self.whole + 1);
            self.buf[bus][self.pos] = p;
            self.sum[bus] += p - leaving;
        }
    }

    /// Mean power per bus, W.
    fn mean(&self, bus: usize) -> f64 {
        let w = self.whole;
        let f = self.frac;
        let newest = self.at(bus, 0);
        let edge = self.at(bus, w);
        let beyond = self.at(bus, w + 1);
        let inner = self.sum[bus] - newest - edge;
        let integral = inner + 0.5 * (newest + edge) + f * (edge * (1.0 - 0.5 * f) + beyond * 0.5 * f);
        integral / (w as f64 + f)
    }

    /// Recompute sums to shed accumulated rounding.
    fn resum(&mut self) {
        for bus in 0..self.sum.len() {
            self.sum[bus] = (0..=self.whole).map(|age| self.at(bus, age)).sum();
        }
    }
}

fn wrap(engine: Engine, e: Error) -> Error {
    match e {
        Error::Divergence { .. } => Error::Hybrid {
            engine,
            source: Box::new(e),
        },
        other => other,
    }
}

/// Co-simulated waveforms: `v`, `domega` and `delta` for every bus on one
/// uniform grid that starts at minus the pre-roll. Rotor channels are held
/// at the operating point during the pre-roll.
pub fn run_hybrid(model: &NetworkModel, config: &HybridConfig, disturbances: &[Disturbance]) -> Result<TimeSeriesSet> {
    model.ensure_valid()?;
    if disturbances.is_empty() {
        return Err(Error::Config("the hybrid engine needs at least one disturbance".into()));
    }
    for d in disturbances {
        d.validate(model)?;
    }
    let (dt_em, dt_mech) = config.resolve_steps(model)?;
    let system = SwingSystem::new(model)?;
    let n = model.n_buses();
    let s_base_w = model.bases.s_base * 1e6;
    let delta0 = system.equilibrium_angles()?;

    let mut net = EmtNetwork::new(model, &config.sources, dt_em, disturbances, false)?;
    let (pre, post) = step_counts(config.pre_roll_cycles, model.bases.f_nominal, config.t_end, dt_em);
    let ratio = config.rate_ratio;
    let n_mech = post.div_ceil(ratio);
    let post = n_mech * ratio;
    let period_steps = (1.0 / model.bases.f_nominal) / dt_em;
    let mut meter = PowerMeter::new(n, period_steps);

    let every = config.record_every as i64;
    let cap = (pre + post) / config.record_every + 2;
    let mut time = Vec::with_capacity(cap);
    let mut rec_v: Vec<Vec<f64>> = vec![Vec::with_capacity(cap); n];
    let mut rec_w: Vec<Vec<f64>> = vec![Vec::with_capacity(cap); n];
    let mut rec_d: Vec<Vec<f64>> = vec![Vec::with_capacity(cap); n];
    let mut record = |k: i64, t: f64, net: &EmtNetwork, delta: &[f64], domega: &[f64]| {
        if k.rem_euclid(every) == 0 {
            time.push(t);
            for bus in 0..n {
                rec_v[bus].push(net.bus_voltage(bus));
                rec_d[bus].push(delta[bus]);
                rec_w[bus].push(domega[bus]);
            }
        }
    };

    let zeros = vec![0.0; n];
    net.start_steady(-(pre as f64 + 1.0) * dt_em, &delta0)?;
    for step in 0..=pre {
        let k = step as i64 - pre as i64;
        let t = k as f64 * dt_em;
        net.step(t, &delta0).map_err(|e| wrap(Engine::Emt, e))?;
        meter.push(&net);
        record(k, t, &net, &delta0, &zeros);
    }

    // the rotors start in balance with what the network draws
    meter.resum();
    let p_mech0: Vec<f64> = (0..n).map(|b| meter.mean(b) / s_base_w).collect();
    let mut p_prev: Vec<f64> = p_mech0.clone();
    let mut state = SwingState {
        t: 0.0,
        delta: delta0.clone(),
        domega: vec![0.0; n],
    };
    let mut stepper = SwingStepper::new(&system);
    let mut p_mech = p_mech0.clone();
    let mut p_elec = vec![0.0; n];
    let mut phase = vec![0.0; n];
    let mut domega = vec![0.0; n];
    let lead = if config.delay_compensation {
        0.5 * period_steps * dt_em / dt_mech
    } else {
        0.0
    };

    for k in 0..n_mech {
        let t_k = k as f64 * dt_mech;
        for bus in 0..n {
            let p_avg = meter.mean(bus) / s_base_w;
            p_elec[bus] = p_avg + lead * (p_avg - p_prev[bus]);
            p_prev[bus] = p_avg;
        }
        p_mech.copy_from_slice(&p_mech0);
        for d in disturbances {
            if let (DisturbanceKind::GenerationTrip, Target::Bus(b)) = (d.kind, d.target) {
                if d.is_active(t_k + 0.5 * dt_mech) {
                    p_mech[b] -= d.magnitude / model.bases.s_base;
                }
            }
        }
        let start = state.clone();
        stepper
            .step_with_power(&mut state, &p_mech, &p_elec, config.damping_d, dt_mech)
            .map_err(|e| wrap(Engine::Swing, e))?;
        state.t = (k + 1) as f64 * dt_mech;

        for j in 1..=ratio {
            let w = j as f64 / ratio as f64;
            for bus in 0..n {
                phase[bus] = start.delta[bus] + w * (state.delta[bus] - start.delta[bus]);
                domega[bus] = start.domega[bus] + w * (state.domega[bus] - start.domega[bus]);
            }
            let kk = (k * ratio + j) as i64;
            let t = kk as f64 * dt_em;
            net.step(t, &phase).map_err(|e| wrap(Engine::Emt, e))?;
            meter.push(&net);
            record(kk, t, &net, &phase, &domega);
        }
        if k % 1000 == 999 {
            meter.resum();
        }
    }

    let mut out = TimeSeriesSet::new(time);
    for (bus, ((v, w), d)) in rec_v.into_iter().zip(rec_w).zip(rec_d).enumerate() {
        out.push(bus, Quantity::Voltage, v);
        out.push(bus, Quantity::Domega, w);
        out.push(bus, Quantity::Delta, d);
    }
    Ok(out)
}
