//! Parameter sweeps pairing fitted wave speeds with theory.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::emt::{propagation_speed_em_kms, run_emt, EmtConfig};
use crate::error::{Engine, Error, Result};
use crate::hybrid::{run_hybrid, HybridConfig};
use crate::model::{Disturbance, NetworkModel};
use crate::series::{format_value, Quantity};
use crate::swing::{run_swing, SwingConfig};

use super::arrivals::{default_threshold, detect_arrivals};
use super::theory::theory_report;

/// Environment variable capping sweep parallelism.
pub const THREADS_ENV: &str = "TRANSWAVE_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    /// Per-machine inertia constant on every generator, s.
    InertiaH,
    /// Line inductance per unit length. The series impedance seen by the
    /// swing engine (`r_per_len`) scales by the same factor.
    LPerLen,
    /// Line capacitance per unit length.
    CPerLen,
}

fn default_disturbance() -> Disturbance {
    Disturbance::fault(1, 0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
    pub engine: Engine,
    #[serde(default = "default_disturbance")]
    pub disturbance: Disturbance,
    /// Detection threshold; the quantity's default when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(default)]
    pub swing: SwingConfig,
    #[serde(default)]
    pub emt: EmtConfig,
    #[serde(default)]
    pub hybrid: HybridConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub param_value: f64,
    /// km/s
    pub fitted_speed: Option<f64>,
    /// km/s
    pub theory_speed: Option<f64>,
    /// `ok` or the failure message.
    pub status: String,
}

impl SweepPoint {
    pub fn ok(&self) -> bool {
        self.fitted_speed.is_some()
    }
}

/// Copy of `model` with `parameter` set to `value` everywhere.
pub fn apply_parameter(model: &NetworkModel, parameter: SweepParameter, value: f64) -> NetworkModel {
    let mut m = model.clone();
    match parameter {
        SweepParameter::InertiaH => {
            for b in m.buses.iter_mut().filter(|b| b.has_generator()) {
                b.inertia_h = Some(value);
            }
        }
        SweepParameter::LPerLen => {
            for l in &mut m.lines {
                l.r_per_len *= value / l.l_per_len;
                l.l_per_len = value;
            }
        }
        SweepParameter::CPerLen => {
            for l in &mut m.lines {
                l.c_per_len = value;
            }
        }
    }
    m
}

fn quantity_for(engine: Engine) -> Quantity {
    match engine {
        Engine::Emt => Quantity::Voltage,
        Engine::Swing | Engine::Hybrid => Quantity::Domega,
    }
}

/// Closed-form speed for the engine's wave family, km/s.
pub fn theory_speed(model: &NetworkModel, engine: Engine) -> Result<f64> {
    match engine {
        Engine::Emt => {
            let line = model
                .lines
                .first()
                .ok_or_else(|| Error::InvalidModel("no lines".into()))?;
            propagation_speed_em_kms(line)
        }
        Engine::Swing | Engine::Hybrid => Ok(theory_report(model)?.v_mech_kms),
    }
}

/// Simulate `model` with the spec's engine and fit the arrival speed, km/s.
pub fn fitted_speed(model: &NetworkModel, spec: &SweepSpec) -> Result<f64> {
    let d = std::slice::from_ref(&spec.disturbance);
    let series = match spec.engine {
        Engine::Swing => run_swing(model, &spec.swing, d)?,
        Engine::Emt => run_emt(model, &spec.emt, d)?,
        Engine::Hybrid => run_hybrid(model, &spec.hybrid, d)?,
    };
    let q = quantity_for(spec.engine);
    let origin = spec
        .disturbance
        .origin_bus(model)
        .ok_or_else(|| Error::InvalidDisturbance("target does not exist".into()))?;
    let threshold = spec.threshold.unwrap_or_else(|| default_threshold(q, model));
    Ok(detect_arrivals(&series, q, origin, model, threshold, spec.disturbance.t_onset)?.fitted_speed)
}

fn run_point(model: &NetworkModel, spec: &SweepSpec, value: f64) -> SweepPoint {
    let m = apply_parameter(model, spec.parameter, value);
    let theory = theory_speed(&m, spec.engine).ok();
    let fitted = if value > 0.0 && value.is_finite() {
        m.ensure_valid().and_then(|_| fitted_speed(&m, spec))
    } else {
        Err(Error::Config(format!("parameter value must be > 0, got {value}")))
    };
    match fitted {
        Ok(v) => SweepPoint {
            param_value: value,
            fitted_speed: Some(v),
            theory_speed: theory,
            status: "ok".into(),
        },
        Err(e) => SweepPoint {
            param_value: value,
            fitted_speed: None,
            theory_speed: theory,
            status: format!("error: {e}"),
        },
    }
}

/// Thread count from [`THREADS_ENV`], if set to a positive integer.
pub fn thread_cap() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|&n| n > 0)
}

/// Run every point, in parallel. Failed points are reported, not raised;
/// the result is in the order of `spec.values`.
pub fn run_sensitivity_sweep(model: &NetworkModel, spec: &SweepSpec) -> Result<Vec<SweepPoint>> {
    if spec.values.is_empty() {
        return Err(Error::Config("sweep needs at least one value".into()));
    }
    let work = || spec.values.par_iter().map(|&v| run_point(model, spec, v)).collect();
    match thread_cap() {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            Ok(pool.install(work))
        }
        None => Ok(work()),
    }
}

/// `param_value,fitted_speed,theory_speed,status`, speeds in km/s.
pub fn write_sweep_csv<W: Write>(points: &[SweepPoint], writer: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    w.write_record(["param_value", "fitted_speed", "theory_speed", "status"])?;
    for p in points {
        w.write_record([
            format_value(p.param_value),
            p.fitted_speed.map(format_value).unwrap_or_default(),
            p.theory_speed.map(format_value).unwrap_or_default(),
            p.status.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
