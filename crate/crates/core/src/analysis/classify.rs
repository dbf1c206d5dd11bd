//! Disturbance type from the sign of the post-event frequency drift.

use serde::{Deserialize, Serialize};

use crate::series::{Quantity, TimeSeriesSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventClass {
    GenerationTrip,
    LoadShed,
    LineTrip,
    NoEvent,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifyOptions {
    /// Band on the quasi-steady mean `domega`, pu.
    pub epsilon: f64,
    /// Minimum `sum_i integral(domega_i^2) dt` counted as an event, pu^2 s.
    pub noise_floor: f64,
    /// Trailing fraction of the record treated as quasi-steady.
    pub tail_fraction: f64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self {
            epsilon: 1e-4,
            noise_floor: 1e-12,
            tail_fraction: 0.25,
        }
    }
}

/// Classify from the `domega` channels. Only sample indices and spacing are
/// used, so the result does not depend on where the time axis starts.
pub fn classify_event(series: &TimeSeriesSet, opts: &ClassifyOptions) -> EventClass {
    let buses = series.buses_with(Quantity::Domega);
    let n = series.len();
    if buses.is_empty() || n < 2 {
        return EventClass::NoEvent;
    }
    let tail_start = ((1.0 - opts.tail_fraction.clamp(0.0, 1.0)) * n as f64).floor() as usize;
    let tail_start = tail_start.min(n - 1);
    let mut energy = 0.0;
    let mut tail_sum = 0.0;
    for &bus in &buses {
        let w = series.values(bus, Quantity::Domega).expect("listed channel");
        for k in 1..n {
            let h = series.time[k] - series.time[k - 1];
            energy += 0.5 * h * (w[k] * w[k] + w[k - 1] * w[k - 1]);
        }
        tail_sum += w[tail_start..].iter().sum::<f64>() / (n - tail_start) as f64;
    }
    let mean = tail_sum / buses.len() as f64;
    if !(energy > opts.noise_floor) {
        EventClass::NoEvent
    } else if mean < -opts.epsilon {
        EventClass::GenerationTrip
    } else if mean > opts.epsilon {
        EventClass::LoadShed
    } else {
        EventClass::LineTrip
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(f: impl Fn(f64) -> f64) -> TimeSeriesSet {
        let time: Vec<f64> = (0..1000).map(|k| k as f64 * 0.01).collect();
        let mut s = TimeSeriesSet::new(time.clone());
        for bus in 0..3 {
            s.push(bus, Quantity::Domega, time.iter().map(|&t| f(t)).collect());
        }
        s
    }

    #[test]
    fn zero_series_is_no_event() {
        assert_eq!(
            classify_event(&series(|_| 0.0), &ClassifyOptions::default()),
            EventClass::NoEvent
        );
    }

    #[test]
    fn signs_map_to_kinds() {
        let o = ClassifyOptions::default();
        assert_eq!(classify_event(&series(|t| -1e-3 * t), &o), EventClass::GenerationTrip);
        assert_eq!(classify_event(&series(|t| 1e-3 * t), &o), EventClass::LoadShed);
        assert_eq!(
            classify_event(&series(|t| 1e-3 * (3.0 * t).sin() * (-t).exp()), &o),
            EventClass::LineTrip
        );
    }
}
