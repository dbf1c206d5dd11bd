//! Closed-form wave-speed estimates.

use std::f64::consts::FRAC_PI_2;

use crate::emt::propagation_speed_em_kms;
use crate::error::{Error, Result};
use crate::model::NetworkModel;

/// Speed of light in vacuum, m/s, as the upper bound for line waves.
pub const LIGHT_SPEED: f64 = 2.998e8;

/// Aggregated inertia per unit line length, s/km:
/// `H * coh * N * G / (s_base * line_km * (N - 1))`.
pub fn inertia_density(h: f64, coh: f64, n_groups: usize, g: f64, s_base: f64, line_km: f64) -> Result<f64> {
    if n_groups < 2 {
        return Err(Error::Domain(format!("n_groups must be >= 2, got {n_groups}")));
    }
    for (name, v) in [
        ("H", h),
        ("coherent_count", coh),
        ("G", g),
        ("s_base", s_base),
        ("line_km", line_km),
    ] {
        if !(v > 0.0) {
            return Err(Error::Domain(format!("{name} must be > 0, got {v}")));
        }
    }
    let n = n_groups as f64;
    Ok(h * coh * n * g / (s_base * line_km * (n - 1.0)))
}

/// Inputs of the continuum electromechanical speed formula.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryInputs {
    /// rad/s
    pub omega: f64,
    /// pu
    pub v_pu: f64,
    /// line impedance angle, rad
    pub theta: f64,
    /// inertia density, s/km
    pub h: f64,
    /// series impedance magnitude, pu/km
    pub z_abs: f64,
}

/// `sqrt(omega V^2 sin(theta) / (2 h |z|))`, km/s.
pub fn speed_mech_theory(inputs: &TheoryInputs) -> Result<f64> {
    let TheoryInputs {
        omega,
        v_pu,
        theta,
        h,
        z_abs,
    } = *inputs;
    if !(theta > 0.0 && theta <= std::f64::consts::PI) {
        return Err(Error::Domain(format!("theta must be in (0, pi], got {theta}")));
    }
    for (name, v) in [("omega", omega), ("v_pu", v_pu), ("h", h), ("z_abs", z_abs)] {
        if !(v > 0.0) {
            return Err(Error::Domain(format!("{name} must be > 0, got {v}")));
        }
    }
    let radicand = omega * v_pu * v_pu * theta.sin() / (2.0 * h * z_abs);
    if !(radicand > 0.0) {
        return Err(Error::Domain(format!("nonpositive radicand {radicand}")));
    }
    Ok(radicand.sqrt())
}

/// Theory figures for a model, from its averaged machine and line data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryReport {
    /// s/km
    pub inertia_density: f64,
    /// km/s
    pub v_mech_kms: f64,
    /// m/s
    pub v_em_ms: f64,
    /// m/s
    pub light_speed_ms: f64,
    pub inputs: TheoryInputs,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

impl TheoryInputs {
    /// Inputs for a model with identical machines; values are averaged over
    /// generator buses and lines. Lines are treated as purely reactive.
    pub fn from_model(model: &NetworkModel) -> Result<Self> {
        let gens: Vec<_> = model.buses.iter().filter(|b| b.has_generator()).collect();
        if gens.is_empty() {
            return Err(Error::InvalidModel(
                "no generator buses: gen_rating and inertia_h are required for the speed formula".into(),
            ));
        }
        let h_machine = mean(gens.iter().filter_map(|b| b.inertia_h))
            .ok_or_else(|| Error::InvalidModel("generator buses lack inertia_h".into()))?;
        let coh = mean(gens.iter().map(|b| f64::from(b.coherent_count))).unwrap_or(1.0);
        let g = mean(gens.iter().filter_map(|b| b.gen_rating)).unwrap_or(0.0);
        let v_pu = mean(gens.iter().map(|b| b.emf_pu)).unwrap_or(1.0);
        let line_km = mean(model.lines.iter().map(|l| l.length))
            .ok_or_else(|| Error::InvalidModel("no lines: line length and r_per_len are required".into()))?;
        let r = mean(model.lines.iter().map(|l| l.r_per_len)).unwrap_or(0.0);
        let h = inertia_density(h_machine, coh, gens.len(), g, model.bases.s_base, line_km)?;
        Ok(Self {
            omega: model.bases.omega_s(),
            v_pu,
            theta: FRAC_PI_2,
            h,
            z_abs: r / model.bases.z_base(),
        })
    }
}

pub fn theory_report(model: &NetworkModel) -> Result<TheoryReport> {
    let inputs = TheoryInputs::from_model(model)?;
    let v_mech = speed_mech_theory(&inputs)?;
    let line = model
        .lines
        .first()
        .ok_or_else(|| Error::InvalidModel("no lines: l_per_len and c_per_len are required".into()))?;
    Ok(TheoryReport {
        inertia_density: inputs.h,
        v_mech_kms: v_mech,
        v_em_ms: propagation_speed_em_kms(line)? * 1e3,
        light_speed_ms: LIGHT_SPEED,
        inputs,
    })
}
