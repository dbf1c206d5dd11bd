//! Wave arrival detection and speed regression.

use std::io::Write;

use crate::error::{Error, Result};
use crate::model::NetworkModel;
use crate::series::{format_value, Quantity, TimeSeriesSet};

/// Default threshold on `domega`, pu.
pub const DEFAULT_DOMEGA_THRESHOLD: f64 = 5e-5;
/// Default threshold on `delta`, rad.
pub const DEFAULT_DELTA_THRESHOLD: f64 = 1e-3;
/// Default voltage threshold as a fraction of the nominal phase peak.
pub const DEFAULT_VOLTAGE_FRACTION: f64 = 0.02;

/// Default detection threshold for a quantity on `model`.
pub fn default_threshold(quantity: Quantity, model: &NetworkModel) -> f64 {
    match quantity {
        Quantity::Domega => DEFAULT_DOMEGA_THRESHOLD,
        Quantity::Delta => DEFAULT_DELTA_THRESHOLD,
        Quantity::Voltage => DEFAULT_VOLTAGE_FRACTION * model.bases.phase_peak_volts(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BusArrival {
    pub bus: usize,
    /// Shortest along-line distance from the origin, km.
    pub distance_km: f64,
    /// s; `None` when the threshold is never crossed.
    pub arrival_t: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArrivalReport {
    pub quantity: Quantity,
    pub origin: usize,
    pub onset: f64,
    pub threshold: f64,
    /// Sorted by bus id.
    pub buses: Vec<BusArrival>,
    /// Slope of distance on arrival time, km/s.
    pub fitted_speed: f64,
    pub fit_r2: f64,
}

impl ArrivalReport {
    pub fn arrival(&self, bus: usize) -> Option<f64> {
        self.buses.iter().find(|b| b.bus == bus).and_then(|b| b.arrival_t)
    }

    pub fn detected(&self) -> usize {
        self.buses.iter().filter(|b| b.arrival_t.is_some()).count()
    }

    /// `bus,distance_km,arrival_s` rows followed by `speed,<v>,r2,<r2>`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .flexible(true)
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(writer);
        w.write_record(["bus", "distance_km", "arrival_s"])?;
        for b in &self.buses {
            w.write_record([
                b.bus.to_string(),
                format_value(b.distance_km),
                b.arrival_t.map(format_value).unwrap_or_default(),
            ])?;
        }
        w.write_record([
            "speed".to_string(),
            format_value(self.fitted_speed),
            "r2".to_string(),
            format_value(self.fit_r2),
        ])?;
        w.flush()?;
        Ok(())
    }
}

/// Least-squares line `y = a + b x`; returns `(a, b, r2)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64)> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return Err(Error::InsufficientArrivals { found: n });
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("all arrival times are equal; speed is undefined".into()));
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok((my - slope * mx, slope, r2))
}

/// Value of `values` at time `t` by linear interpolation on `time`.
fn sample_at(time: &[f64], values: &[f64], t: f64) -> f64 {
    let idx = time.partition_point(|&x| x <= t);
    if idx == 0 {
        return values[0];
    }
    if idx >= time.len() {
        return values[time.len() - 1];
    }
    let (t0, t1) = (time[idx - 1], time[idx]);
    let w = if t1 > t0 { (t - t0) / (t1 - t0) } else { 0.0 };
    values[idx - 1] + w * (values[idx] - values[idx - 1])
}

/// First time at or after `onset` where `|x(t) - baseline(t)| > threshold`.
///
/// Without a `period` the baseline is the last pre-onset value. With a
/// period (AC waveforms) it is the pre-onset waveform extended periodically,
/// `x(t - mT)` for the smallest `m` that lands before the onset.
pub fn first_crossing(time: &[f64], values: &[f64], onset: f64, threshold: f64, period: Option<f64>) -> Option<f64> {
    let start = time.partition_point(|&t| t < onset);
    if time.is_empty() {
        return None;
    }
    let hold = values[start.saturating_sub(1).min(values.len() - 1)];
    let periodic = period.filter(|&p| p > 0.0 && time[0] <= onset - p);
    for i in start..time.len() {
        let base = match periodic {
            Some(p) => {
                let m = ((time[i] - onset) / p).floor() + 1.0;
                sample_at(time, values, time[i] - m * p)
            }
            None => hold,
        };
        if (values[i] - base).abs() > threshold {
            return Some(time[i]);
        }
    }
    None
}

/// Per-bus arrival times of the `quantity` channels relative to the event
/// at `origin` starting at `onset`, and the regression speed through them.
pub fn detect_arrivals(
    series: &TimeSeriesSet,
    quantity: Quantity,
    origin: usize,
    model: &NetworkModel,
    threshold: f64,
    onset: f64,
) -> Result<ArrivalReport> {
    if !(threshold > 0.0) {
        return Err(Error::Config(format!("threshold must be > 0, got {threshold}")));
    }
    if origin >= model.n_buses() {
        return Err(Error::Config(format!("origin bus {origin} does not exist")));
    }
    let distances = model.line_distances(origin);
    let period = (quantity == Quantity::Voltage).then(|| 1.0 / model.bases.f_nominal);
    let mut buses = Vec::new();
    for bus in series.buses_with(quantity) {
        let Some(Some(distance_km)) = distances.get(bus).copied() else {
            continue;
        };
        let values = series.values(bus, quantity).expect("listed channel");
        buses.push(BusArrival {
            bus,
            distance_km,
            arrival_t: first_crossing(&series.time, values, onset, threshold, period),
        });
    }
    let (t, d): (Vec<f64>, Vec<f64>) = buses
        .iter()
        .filter_map(|b| b.arrival_t.map(|t| (t, b.distance_km)))
        .unzip();
    if t.len() < 2 {
        return Err(Error::InsufficientArrivals { found: t.len() });
    }
    let (_, speed, r2) = linear_fit(&t, &d)?;
    Ok(ArrivalReport {
        quantity,
        origin,
        onset,
        threshold,
        buses,
        fitted_speed: speed,
        fit_r2: r2,
    })
}
