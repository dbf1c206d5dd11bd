//! Uniformly sampled multi-channel waveforms keyed by bus and quantity.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quantity {
    /// Rotor angle, rad.
    Delta,
    /// Rotor speed deviation, pu.
    Domega,
    /// Bus voltage, V.
    #[serde(rename = "v")]
    Voltage,
}

impl Quantity {
    pub fn suffix(self) -> &'static str {
        match self {
            Quantity::Delta => "delta",
            Quantity::Domega => "domega",
            Quantity::Voltage => "v",
        }
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.suffix())
    }
}

impl FromStr for Quantity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "delta" => Ok(Quantity::Delta),
            "domega" => Ok(Quantity::Domega),
            "v" => Ok(Quantity::Voltage),
            other => Err(Error::Parse(format!("unknown quantity '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    pub bus: usize,
    pub quantity: Quantity,
    pub values: Vec<f64>,
}

impl Channel {
    pub fn name(&self) -> String {
        format!("bus{}.{}", self.bus, self.quantity)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TimeSeriesSet {
    pub time: Vec<f64>,
    pub channels: Vec<Channel>,
}

impl TimeSeriesSet {
    pub fn new(time: Vec<f64>) -> Self {
        Self {
            time,
            channels: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.time.is_empty()
    }

    /// Sample spacing, assuming a uniform grid.
    pub fn sample_period(&self) -> Option<f64> {
        if self.time.len() < 2 {
            return None;
        }
        Some((self.time[self.time.len() - 1] - self.time[0]) / (self.time.len() - 1) as f64)
    }

    pub fn push(&mut self, bus: usize, quantity: Quantity, values: Vec<f64>) {
        debug_assert_eq!(values.len(), self.time.len());
        self.channels.push(Channel { bus, quantity, values });
    }

    pub fn channel(&self, bus: usize, quantity: Quantity) -> Option<&Channel> {
        self.channels.iter().find(|c| c.bus == bus && c.quantity == quantity)
    }

    pub fn values(&self, bus: usize, quantity: Quantity) -> Option<&[f64]> {
        self.channel(bus, quantity).map(|c| c.values.as_slice())
    }

    /// Buses carrying `quantity`, ascending.
    pub fn buses_with(&self, quantity: Quantity) -> Vec<usize> {
        let mut buses: Vec<usize> = self
            .channels
            .iter()
            .filter(|c| c.quantity == quantity)
            .map(|c| c.bus)
            .collect();
        buses.sort_unstable();
        buses.dedup();
        buses
    }

    /// Keep every `every`-th sample.
    pub fn decimate(&self, every: usize) -> TimeSeriesSet {
        let every = every.max(1);
        let pick = |v: &[f64]| v.iter().step_by(every).copied().collect::<Vec<_>>();
        TimeSeriesSet {
            time: pick(&self.time),
            channels: self
                .channels
                .iter()
                .map(|c| Channel {
                    bus: c.bus,
                    quantity: c.quantity,
                    values: pick(&c.values),
                })
                .collect(),
        }
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(writer);
        let mut header = vec!["t".to_string()];
        header.extend(self.channels.iter().map(Channel::name));
        w.write_record(&header)?;
        let mut row = Vec::with_capacity(header.len());
        for (i, t) in self.time.iter().enumerate() {
            row.clear();
            row.push(format_value(*t));
            row.extend(self.channels.iter().map(|c| format_value(c.values[i])));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<TimeSeriesSet> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let headers = r.headers()?.clone();
        if headers.get(0) != Some("t") {
            return Err(Error::Parse("first column must be 't'".into()));
        }
        let mut keys = Vec::with_capacity(headers.len() - 1);
        for name in headers.iter().skip(1) {
            keys.push(parse_channel_name(name)?);
        }
        let mut set = TimeSeriesSet::default();
        let mut columns: Vec<Vec<f64>> = vec![Vec::new(); keys.len()];
        for (line, record) in r.records().enumerate() {
            let record = record?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("row {}: '{s}' is not a number", line + 2)))
            };
            set.time.push(parse(&record[0])?);
            for (col, field) in record.iter().skip(1).enumerate() {
                columns[col].push(parse(field)?);
            }
        }
        for ((bus, quantity), values) in keys.into_iter().zip(columns) {
            set.channels.push(Channel { bus, quantity, values });
        }
        Ok(set)
    }
}

fn parse_channel_name(name: &str) -> Result<(usize, Quantity)> {
    let bad = || Error::Parse(format!("bad channel name '{name}', expected bus<i>.<quantity>"));
    let rest = name.strip_prefix("bus").ok_or_else(bad)?;
    let (idx, q) = rest.split_once('.').ok_or_else(bad)?;
    let bus = idx.parse().map_err(|_| bad())?;
    Ok((bus, q.parse()?))
}

/// Ten significant digits in scientific notation.
pub fn format_value(x: f64) -> String {
    format!("{x:.9e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_keeps_schema() {
        let mut s = TimeSeriesSet::new(vec![0.0, 0.001, 0.002]);
        s.push(0, Quantity::Delta, vec![0.0, 1e-3, 2.5e-3]);
        s.push(0, Quantity::Domega, vec![0.0, -1.234567891e-5, 3.0]);
        s.push(1, Quantity::Voltage, vec![408248.29, 1.0, -2.0]);
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,bus0.delta,bus0.domega,bus1.v\n"));
        assert!(!text.contains('\r'));
        let back = TimeSeriesSet::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.channels.len(), 3);
        let v = back.values(0, Quantity::Domega).unwrap();
        assert!((v[1] - -1.234567891e-5).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_header() {
        assert!(TimeSeriesSet::read_csv("time,bus0.v\n0,1\n".as_bytes()).is_err());
        assert!(TimeSeriesSet::read_csv("t,node0.v\n0,1\n".as_bytes()).is_err());
        assert!(TimeSeriesSet::read_csv("t,bus0.q\n0,1\n".as_bytes()).is_err());
    }
}
