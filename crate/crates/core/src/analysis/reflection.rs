//! Meeting of the two counter-propagating fronts on a ring.

use crate::error::{Error, Result};
use crate::model::NetworkModel;
use crate::series::{Quantity, TimeSeriesSet};

use super::arrivals::first_crossing;

#[derive(Debug, Clone, PartialEq)]
pub struct ReflectionReport {
    /// Buses at maximal along-ring distance from the origin (one or two).
    pub meeting_buses: Vec<usize>,
    /// Arrival of the front travelling in ring order (away from the origin
    /// through its first neighbour), s.
    pub forward_arrival: f64,
    /// Arrival of the front travelling the other way, s.
    pub backward_arrival: f64,
    /// Time the fronts meet, s.
    pub meeting_time: f64,
    /// Whether the two arrivals agree within one sample.
    pub fronts_agree: bool,
}

/// Locate where and when the two fronts launched from `origin` meet.
///
/// For an odd ring the fronts reach the two antipodal buses, one each; for
/// an even ring they meet at the single antipode and the comparison uses its
/// two neighbours.
pub fn detect_reflection(
    series: &TimeSeriesSet,
    quantity: Quantity,
    origin: usize,
    model: &NetworkModel,
    threshold: f64,
    onset: f64,
) -> Result<ReflectionReport> {
    let order = model.ring_order(origin)?;
    let n = order.len();
    let arrival = |bus: usize| -> Result<f64> {
        let v = series
            .values(bus, quantity)
            .ok_or_else(|| Error::Config(format!("series lacks bus{bus}.{quantity}")))?;
        first_crossing(&series.time, v, onset, threshold, None).ok_or(Error::InsufficientArrivals { found: 0 })
    };
    let (meeting_buses, fwd_bus, bwd_bus) = if n % 2 == 1 {
        let (a, b) = (order[(n - 1) / 2], order[n.div_ceil(2)]);
        (vec![a, b], a, b)
    } else {
        (vec![order[n / 2]], order[n / 2 - 1], order[n / 2 + 1])
    };
    let forward_arrival = arrival(fwd_bus)?;
    let backward_arrival = arrival(bwd_bus)?;
    let meeting_time = if n % 2 == 1 {
        0.5 * (forward_arrival + backward_arrival)
    } else {
        arrival(order[n / 2])?
    };
    let tol = series.sample_period().unwrap_or(0.0) * (1.0 + 1e-9);
    Ok(ReflectionReport {
        meeting_buses,
        forward_arrival,
        backward_arrival,
        meeting_time,
        fronts_agree: (forward_arrival - backward_arrival).abs() <= tol,
    })
}
