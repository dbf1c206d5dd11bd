//! Electromechanical transient engine: classical machine model at every bus,
//! sine power-flow law on each line, fixed-step RK4.
//!
//! State per bus is the rotor angle `delta` (rad) and the speed deviation
//! `domega` (pu of nominal). With `H` the aggregated inertia on the system
//! base:
//!
//! ```text
//! d delta / dt  = omega_s * domega
//! d domega / dt = (P_m - P_load - P_e - D * domega) / (2 H)
//! P_e[i]        = sum over lines (i, j) of V_i V_j / X_ij * sin(delta_i - delta_j)
//! ```
//!
//! A faulted bus has its voltage forced to zero for the fault window, so its
//! line flows and local load vanish and the machine there sees only `P_m`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Engine, Error, Result};
use crate::model::{Disturbance, DisturbanceKind, NetworkModel, Target};
use crate::ode::Rk4;
use crate::series::{Quantity, TimeSeriesSet};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SwingConfig {
    /// Integration step, s.
    pub dt: f64,
    /// s
    pub t_end: f64,
    /// pu power per pu speed deviation, per bus.
    pub damping_d: f64,
    /// Record one sample every this many steps.
    pub record_every: usize,
}

impl Default for SwingConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_end: 20.0,
            damping_d: 0.5,
            record_every: 10,
        }
    }
}

impl SwingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt <= 0.01) {
            return Err(Error::Config(format!(
                "swing dt must be in (0, 0.01] s, got {}",
                self.dt
            )));
        }
        if !(self.t_end > 0.0) {
            return Err(Error::Config(format!("swing t_end must be > 0, got {}", self.t_end)));
        }
        if !(self.damping_d >= 0.0) {
            return Err(Error::Config(format!("damping_d must be >= 0, got {}", self.damping_d)));
        }
        if self.record_every < 1 {
            return Err(Error::Config("record_every must be >= 1".into()));
        }
        Ok(())
    }

    /// Spacing of recorded samples, s.
    pub fn sample_period(&self) -> f64 {
        self.dt * self.record_every as f64
    }

    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwingState {
    pub t: f64,
    pub delta: Vec<f64>,
    pub domega: Vec<f64>,
}

impl SwingState {
    pub fn flat(n: usize) -> Self {
        Self {
            t: 0.0,
            delta: vec![0.0; n],
            domega: vec![0.0; n],
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Branch {
    from: usize,
    to: usize,
    /// 1 / X, pu
    susceptance: f64,
}

/// Network conditions in force during one step.
#[derive(Debug, Clone, PartialEq)]
pub struct Conditions {
    pub faulted: Vec<bool>,
    pub line_open: Vec<bool>,
    /// Change in mechanical power, pu.
    pub dp_mech: Vec<f64>,
    /// Change in load, pu.
    pub dp_load: Vec<f64>,
}

impl Conditions {
    pub fn nominal(n_buses: usize, n_lines: usize) -> Self {
        Self {
            faulted: vec![false; n_buses],
            line_open: vec![false; n_lines],
            dp_mech: vec![0.0; n_buses],
            dp_load: vec![0.0; n_buses],
        }
    }
}

/// Precomputed swing-equation coefficients for one network.
#[derive(Debug, Clone)]
pub struct SwingSystem {
    omega_s: f64,
    s_base: f64,
    emf: Vec<f64>,
    /// Aggregated inertia constant per bus on the system base, s.
    pub inertia: Vec<f64>,
    /// Mechanical power per bus, pu.
    pub p_mech: Vec<f64>,
    /// Constant-power load per bus, pu.
    pub p_load: Vec<f64>,
    branches: Vec<Branch>,
}

impl SwingSystem {
    /// Requires a machine at every bus. Mechanical power is dispatched by
    /// scaling every capacity by the same factor so that generation matches
    /// total load.
    pub fn new(model: &NetworkModel) -> Result<Self> {
        model.ensure_valid()?;
        let bases = &model.bases;
        let mut inertia = Vec::with_capacity(model.n_buses());
        for bus in &model.buses {
            let h = bus.aggregated_inertia(bases).ok_or_else(|| {
                Error::Config(format!(
                    "bus {} has no generator; the swing engine needs a machine at every bus",
                    bus.id
                ))
            })?;
            inertia.push(h);
        }
        let branches = model
            .lines
            .iter()
            .enumerate()
            .map(|(i, l)| {
                let x = l.swing_reactance_pu(bases);
                if !(x > 0.0) {
                    return Err(Error::SingularLine { line: i });
                }
                Ok(Branch {
                    from: l.from_bus,
                    to: l.to_bus,
                    susceptance: 1.0 / x,
                })
            })
            .collect::<Result<Vec<_>>>()?;

        let p_load: Vec<f64> = model.buses.iter().map(|b| b.load_p / bases.s_base).collect();
        let total_load: f64 = p_load.iter().sum();
        let capacity: Vec<f64> = model.buses.iter().map(|b| b.capacity_mw() / bases.s_base).collect();
        let total_cap: f64 = capacity.iter().sum();
        let scale = if total_cap > 0.0 { total_load / total_cap } else { 0.0 };
        let p_mech = capacity.iter().map(|c| c * scale).collect();

        Ok(Self {
            omega_s: bases.omega_s(),
            s_base: bases.s_base,
            emf: model.buses.iter().map(|b| b.emf_pu).collect(),
            inertia,
            p_mech,
            p_load,
            branches,
        })
    }

    pub fn n_buses(&self) -> usize {
        self.inertia.len()
    }

    pub fn omega_s(&self) -> f64 {
        self.omega_s
    }

    /// Line flows out of every bus, pu.
    pub fn electrical_power(&self, delta: &[f64], cond: &Conditions, out: &mut [f64]) {
        out.iter_mut().for_each(|p| *p = 0.0);
        for (i, br) in self.branches.iter().enumerate() {
            if cond.line_open[i] || cond.faulted[br.from] || cond.faulted[br.to] {
                continue;
            }
            let flow = self.emf[br.from] * self.emf[br.to] * br.susceptance * (delta[br.from] - delta[br.to]).sin();
            out[br.from] += flow;
            out[br.to] -= flow;
        }
    }

    /// Conditions in force over a step whose midpoint is `t_mid`.
    pub fn conditions_at(&self, disturbances: &[Disturbance], t_mid: f64) -> Conditions {
        let mut cond = Conditions::nominal(self.n_buses(), self.branches.len());
        for d in disturbances.iter().filter(|d| d.is_active(t_mid)) {
            match (d.kind, d.target) {
                (DisturbanceKind::GenerationTrip, Target::Bus(b)) => cond.dp_mech[b] -= d.magnitude / self.s_base,
                (DisturbanceKind::LoadShed, Target::Bus(b)) => cond.dp_load[b] -= d.magnitude / self.s_base,
                (DisturbanceKind::LineTrip, Target::Line(l)) => cond.line_open[l] = true,
                (DisturbanceKind::Fault, Target::Bus(b)) => cond.faulted[b] = true,
                _ => {}
            }
        }
        cond
    }

    /// Net accelerating power per bus (before damping), pu.
    pub fn accelerating_power(&self, delta: &[f64], cond: &Conditions, out: &mut [f64]) {
        self.electrical_power(delta, cond, out);
        for i in 0..out.len() {
            let pm = self.p_mech[i] + cond.dp_mech[i];
            out[i] = if cond.faulted[i] {
                pm
            } else {
                pm - (self.p_load[i] + cond.dp_load[i]) - out[i]
            };
        }
    }

    /// Stacked state derivative: `y = [delta; domega]`.
    fn derivative(&self, cond: &Conditions, damping: f64, y: &[f64], dy: &mut [f64]) {
        let n = self.n_buses();
        let (delta, domega) = y.split_at(n);
        let (d_delta, d_domega) = dy.split_at_mut(n);
        self.accelerating_power(delta, cond, d_domega);
        for i in 0..n {
            d_delta[i] = self.omega_s * domega[i];
            d_domega[i] = (d_domega[i] - damping * domega[i]) / (2.0 * self.inertia[i]);
        }
    }

    /// Total angular momentum proxy `sum 2 H domega`, pu * s.
    pub fn momentum(&self, state: &SwingState) -> f64 {
        self.inertia.iter().zip(&state.domega).map(|(h, w)| 2.0 * h * w).sum()
    }

    /// Steady angles for the dispatch with bus 0 as reference, by Newton
    /// iteration from flat start. Balanced buses return exactly zero.
    pub fn equilibrium_angles(&self) -> Result<Vec<f64>> {
        let n = self.n_buses();
        let cond = Conditions::nominal(n, self.branches.len());
        let injection: Vec<f64> = (0..n).map(|i| self.p_mech[i] - self.p_load[i]).collect();
        let mut delta = vec![0.0; n];
        let mut flow = vec![0.0; n];
        for _ in 0..50 {
            self.electrical_power(&delta, &cond, &mut flow);
            let mismatch: Vec<f64> = (1..n).map(|i| injection[i] - flow[i]).collect();
            if mismatch.iter().all(|m| m.abs() < 1e-12) {
                return Ok(delta);
            }
            let mut jac = DMatrix::<f64>::zeros(n - 1, n - 1);
            for br in &self.branches {
                let k = self.emf[br.from] * self.emf[br.to] * br.susceptance * (delta[br.from] - delta[br.to]).cos();
                for (a, b) in [(br.from, br.to), (br.to, br.from)] {
                    if a > 0 {
                        jac[(a - 1, a - 1)] += k;
                        if b > 0 {
                            jac[(a - 1, b - 1)] -= k;
                        }
                    }
                }
            }
            let step = jac
                .lu()
                .solve(&DVector::from_vec(mismatch))
                .ok_or_else(|| Error::Config("power-flow Jacobian is singular".into()))?;
            for i in 1..n {
                delta[i] += step[i - 1];
            }
        }
        Err(Error::Config(
            "no steady operating point: power flow did not converge".into(),
        ))
    }
}

/// Line flows out of every bus for the intact, unfaulted network, pu.
pub fn electrical_power(model: &NetworkModel, delta: &[f64]) -> Result<Vec<f64>> {
    if delta.len() != model.n_buses() {
        return Err(Error::Config(format!(
            "angle vector has {} entries for {} buses",
            delta.len(),
            model.n_buses()
        )));
    }
    let bases = &model.bases;
    let mut out = vec![0.0; model.n_buses()];
    for (i, l) in model.lines.iter().enumerate() {
        let x = l.swing_reactance_pu(bases);
        if !(x > 0.0) {
            return Err(Error::SingularLine { line: i });
        }
        let vi = model.buses[l.from_bus].emf_pu;
        let vj = model.buses[l.to_bus].emf_pu;
        let flow = vi * vj / x * (delta[l.from_bus] - delta[l.to_bus]).sin();
        out[l.from_bus] += flow;
        out[l.to_bus] -= flow;
    }
    Ok(out)
}

/// Stateful stepper wrapping a [`SwingSystem`] with its scratch space.
#[derive(Debug, Clone)]
pub struct SwingStepper<'a> {
    pub system: &'a SwingSystem,
    rk: Rk4,
    y: Vec<f64>,
}

impl<'a> SwingStepper<'a> {
    pub fn new(system: &'a SwingSystem) -> Self {
        let n = system.n_buses();
        Self {
            system,
            rk: Rk4::new(2 * n),
            y: vec![0.0; 2 * n],
        }
    }

    pub fn step(&mut self, state: &SwingState, config: &SwingConfig, cond: &Conditions) -> Result<SwingState> {
        let n = self.system.n_buses();
        self.y[..n].copy_from_slice(&state.delta);
        self.y[n..].copy_from_slice(&state.domega);
        let sys = self.system;
        let damping = config.damping_d;
        self.rk
            .step(&mut self.y, config.dt, |y, dy| sys.derivative(cond, damping, y, dy));
        let t = state.t + config.dt;
        if let Some(i) = self.y.iter().position(|v| !v.is_finite()) {
            return Err(Error::Divergence {
                engine: Engine::Swing,
                bus: i % n,
                t,
            });
        }
        Ok(SwingState {
            t,
            delta: self.y[..n].to_vec(),
            domega: self.y[n..].to_vec(),
        })
    }

    /// Advance with an externally supplied electrical output per machine
    /// (pu, including local load), held constant over the step.
    pub fn step_with_power(
        &mut self,
        state: &mut SwingState,
        p_mech: &[f64],
        p_elec: &[f64],
        damping: f64,
        dt: f64,
    ) -> Result<()> {
        let n = self.system.n_buses();
        self.y[..n].copy_from_slice(&state.delta);
        self.y[n..].copy_from_slice(&state.domega);
        let sys = self.system;
        self.rk.step(&mut self.y, dt, |y, dy| {
            for i in 0..n {
                dy[i] = sys.omega_s * y[n + i];
                dy[n + i] = (p_mech[i] - p_elec[i] - damping * y[n + i]) / (2.0 * sys.inertia[i]);
            }
        });
        state.t += dt;
        if let Some(i) = self.y.iter().position(|v| !v.is_finite()) {
            return Err(Error::Divergence {
                engine: Engine::Swing,
                bus: i % n,
                t: state.t,
            });
        }
        state.delta.copy_from_slice(&self.y[..n]);
        state.domega.copy_from_slice(&self.y[n..]);
        Ok(())
    }
}

/// One RK4 step of the swing equations under `cond`.
pub fn swing_step(
    system: &SwingSystem,
    state: &SwingState,
    config: &SwingConfig,
    cond: &Conditions,
) -> Result<SwingState> {
    SwingStepper::new(system).step(state, config, cond)
}

/// Full trajectory from the steady operating point, recording `delta` and
/// `domega` for every bus every `record_every` steps.
pub fn run_swing(model: &NetworkModel, config: &SwingConfig, disturbances: &[Disturbance]) -> Result<TimeSeriesSet> {
    config.validate()?;
    for d in disturbances {
        d.validate(model)?;
    }
    let system = SwingSystem::new(model)?;
    let n = system.n_buses();
    let mut state = SwingState {
        t: 0.0,
        delta: system.equilibrium_angles()?,
        domega: vec![0.0; n],
    };

    let steps = config.n_steps();
    let n_records = steps / config.record_every + 1;
    let mut time = Vec::with_capacity(n_records);
    let mut delta_rec: Vec<Vec<f64>> = vec![Vec::with_capacity(n_records); n];
    let mut domega_rec: Vec<Vec<f64>> = vec![Vec::with_capacity(n_records); n];
    let mut record = |s: &SwingState, time: &mut Vec<f64>| {
        time.push(s.t);
        for i in 0..n {
            delta_rec[i].push(s.delta[i]);
            domega_rec[i].push(s.domega[i]);
        }
    };
    record(&state, &mut time);

    let mut stepper = SwingStepper::new(&system);
    for k in 0..steps {
        let t0 = k as f64 * config.dt;
        let cond = system.conditions_at(disturbances, t0 + 0.5 * config.dt);
        state.t = t0;
        state = stepper.step(&state, config, &cond)?;
        state.t = (k + 1) as f64 * config.dt;
        if (k + 1) % config.record_every == 0 {
            record(&state, &mut time);
        }
    }

    let mut out = TimeSeriesSet::new(time);
    for (i, (d, w)) in delta_rec.into_iter().zip(domega_rec).enumerate() {
        out.push(i, Quantity::Delta, d);
        out.push(i, Quantity::Domega, w);
    }
    Ok(out)
}
