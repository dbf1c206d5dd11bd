//! Network model, per-unit bases and the disturbance vocabulary shared by
//! every engine.
//!
//! Electromechanical quantities live on [`SystemBases`]; electromagnetic line
//! parameters stay in SI with the unit length recorded on each [`Line`].

use std::collections::HashSet;
use std::f64::consts::PI;
use std::fmt;

use petgraph::graph::{NodeIndex, UnGraph};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemBases {
    /// Apparent power base, MVA.
    pub s_base: f64,
    /// Line-to-line voltage base, kV.
    pub v_base: f64,
    /// Nominal frequency, Hz.
    pub f_nominal: f64,
}

impl SystemBases {
    pub fn new(s_base: f64, v_base: f64, f_nominal: f64) -> Self {
        Self {
            s_base,
            v_base,
            f_nominal,
        }
    }

    /// Nominal angular frequency, rad/s.
    pub fn omega_s(&self) -> f64 {
        2.0 * PI * self.f_nominal
    }

    /// Impedance base in ohms.
    pub fn z_base(&self) -> f64 {
        self.v_base * self.v_base / self.s_base
    }

    /// Peak phase-to-neutral voltage at 1 pu, volts.
    pub fn phase_peak_volts(&self) -> f64 {
        self.v_base * 1e3 * (2.0f64 / 3.0).sqrt()
    }
}

impl Default for SystemBases {
    fn default() -> Self {
        Self::new(100.0, 500.0, 60.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bus {
    pub id: usize,
    /// Planar position (km, km).
    pub coord: [f64; 2],
    /// Per-machine rating, MW.
    #[serde(default)]
    pub gen_rating: Option<f64>,
    /// Per-machine inertia constant, s.
    #[serde(default)]
    pub inertia_h: Option<f64>,
    /// Number of aggregated coherent machines behind this bus.
    pub coherent_count: u32,
    /// Active load, MW.
    pub load_p: f64,
    /// Internal EMF magnitude, pu.
    pub emf_pu: f64,
}

impl Bus {
    pub fn has_generator(&self) -> bool {
        self.gen_rating.is_some()
    }

    /// Total generator capacity behind the bus, MW.
    pub fn capacity_mw(&self) -> f64 {
        self.gen_rating.unwrap_or(0.0) * f64::from(self.coherent_count)
    }

    /// Aggregated inertia on the system base, s.
    pub fn aggregated_inertia(&self, bases: &SystemBases) -> Option<f64> {
        let h = self.inertia_h?;
        let g = self.gen_rating?;
        Some(h * f64::from(self.coherent_count) * g / bases.s_base)
    }
}

/// Unit length that `l_per_len` and `c_per_len` refer to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LengthUnit {
    M,
    Km,
}

impl LengthUnit {
    pub fn from_km(self, km: f64) -> f64 {
        match self {
            LengthUnit::M => km * 1e3,
            LengthUnit::Km => km,
        }
    }

    pub fn to_km(self, value: f64) -> f64 {
        match self {
            LengthUnit::M => value * 1e-3,
            LengthUnit::Km => value,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Line {
    pub from_bus: usize,
    pub to_bus: usize,
    /// km
    pub length: f64,
    /// Series resistance figure, ohm/km. Carries the series impedance used by
    /// the swing engine.
    pub r_per_len: f64,
    /// Inductance, H per `len_unit_em`.
    pub l_per_len: f64,
    /// Capacitance, F per `len_unit_em`.
    pub c_per_len: f64,
    pub len_unit_em: LengthUnit,
}

impl Line {
    /// Length expressed in `len_unit_em`.
    pub fn em_length(&self) -> f64 {
        self.len_unit_em.from_km(self.length)
    }

    /// Surge impedance, ohm.
    pub fn surge_impedance(&self) -> f64 {
        (self.l_per_len / self.c_per_len).sqrt()
    }

    /// One-way travel time, s.
    pub fn travel_time(&self) -> f64 {
        self.em_length() * (self.l_per_len * self.c_per_len).sqrt()
    }

    /// Per-unit series reactance used by the swing engine.
    pub fn swing_reactance_pu(&self, bases: &SystemBases) -> f64 {
        self.r_per_len * self.length / bases.z_base()
    }

    pub fn other_end(&self, bus: usize) -> Option<usize> {
        if self.from_bus == bus {
            Some(self.to_bus)
        } else if self.to_bus == bus {
            Some(self.from_bus)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkModel {
    pub bases: SystemBases,
    pub buses: Vec<Bus>,
    pub lines: Vec<Line>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DisturbanceKind {
    GenerationTrip,
    LoadShed,
    LineTrip,
    Fault,
}

impl fmt::Display for DisturbanceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DisturbanceKind::GenerationTrip => "generation_trip",
            DisturbanceKind::LoadShed => "load_shed",
            DisturbanceKind::LineTrip => "line_trip",
            DisturbanceKind::Fault => "fault",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Bus(usize),
    Line(usize),
}

/// Default fault duration, s.
pub const DEFAULT_FAULT_DURATION: f64 = 0.1;
/// Default fault resistance, ohm.
pub const DEFAULT_FAULT_RESISTANCE: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Disturbance {
    pub kind: DisturbanceKind,
    pub target: Target,
    /// s
    pub t_onset: f64,
    /// MW for trips and sheds, fault resistance in ohm for faults.
    pub magnitude: f64,
    /// s; faults only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration: Option<f64>,
}

impl Disturbance {
    pub fn fault(bus: usize, t_onset: f64) -> Self {
        Self {
            kind: DisturbanceKind::Fault,
            target: Target::Bus(bus),
            t_onset,
            magnitude: DEFAULT_FAULT_RESISTANCE,
            duration: Some(DEFAULT_FAULT_DURATION),
        }
    }

    pub fn generation_trip(bus: usize, t_onset: f64, mw: f64) -> Self {
        Self {
            kind: DisturbanceKind::GenerationTrip,
            target: Target::Bus(bus),
            t_onset,
            magnitude: mw,
            duration: None,
        }
    }

    pub fn load_shed(bus: usize, t_onset: f64, mw: f64) -> Self {
        Self {
            kind: DisturbanceKind::LoadShed,
            target: Target::Bus(bus),
            t_onset,
            magnitude: mw,
            duration: None,
        }
    }

    pub fn line_trip(line: usize, t_onset: f64) -> Self {
        Self {
            kind: DisturbanceKind::LineTrip,
            target: Target::Line(line),
            t_onset,
            magnitude: 0.0,
            duration: None,
        }
    }

    pub fn bus(&self) -> Option<usize> {
        match self.target {
            Target::Bus(b) => Some(b),
            Target::Line(_) => None,
        }
    }

    /// End of the active window; `None` for permanent events.
    pub fn t_clear(&self) -> Option<f64> {
        match self.kind {
            DisturbanceKind::Fault => Some(self.t_onset + self.duration.unwrap_or(DEFAULT_FAULT_DURATION)),
            _ => None,
        }
    }

    /// Whether the event is in effect at time `t`.
    pub fn is_active(&self, t: f64) -> bool {
        t >= self.t_onset && self.t_clear().is_none_or(|end| t < end)
    }

    /// A bus representing the event's origin; for line trips, the from-bus.
    pub fn origin_bus(&self, model: &NetworkModel) -> Option<usize> {
        match self.target {
            Target::Bus(b) => Some(b),
            Target::Line(l) => model.lines.get(l).map(|line| line.from_bus),
        }
    }

    pub fn validate(&self, model: &NetworkModel) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidDisturbance(msg));
        if !(self.t_onset >= 0.0) || !self.t_onset.is_finite() {
            return bad(format!("t_onset must be >= 0, got {}", self.t_onset));
        }
        if !(self.magnitude >= 0.0) || !self.magnitude.is_finite() {
            return bad(format!("magnitude must be >= 0, got {}", self.magnitude));
        }
        match (self.kind, self.target) {
            (DisturbanceKind::LineTrip, Target::Line(l)) => {
                if l >= model.lines.len() {
                    return bad(format!("line {l} does not exist"));
                }
            }
            (DisturbanceKind::LineTrip, Target::Bus(_)) => {
                return bad("line_trip must target a line".into());
            }
            (_, Target::Line(_)) => {
                return bad(format!("{} must target a bus", self.kind));
            }
            (kind, Target::Bus(b)) => {
                let Some(bus) = model.buses.get(b) else {
                    return bad(format!("bus {b} does not exist"));
                };
                match kind {
                    DisturbanceKind::GenerationTrip => {
                        let Some(rating) = bus.gen_rating else {
                            return bad(format!("bus {b} has no generator to trip"));
                        };
                        if self.magnitude > rating {
                            return bad(format!(
                                "generation trip of {} MW exceeds bus {b} rating {rating} MW",
                                self.magnitude
                            ));
                        }
                    }
                    DisturbanceKind::LoadShed => {
                        if self.magnitude > bus.load_p {
                            return bad(format!(
                                "load shed of {} MW exceeds bus {b} load {} MW",
                                self.magnitude, bus.load_p
                            ));
                        }
                    }
                    DisturbanceKind::Fault => {}
                    DisturbanceKind::LineTrip => unreachable!(),
                }
            }
        }
        if self.kind == DisturbanceKind::Fault {
            if let Some(d) = self.duration {
                if !(d > 0.0) {
                    return bad(format!("fault duration must be > 0, got {d}"));
                }
            }
        } else if self.duration.is_some() {
            return bad(format!("{} is permanent and takes no duration", self.kind));
        }
        Ok(())
    }
}

/// A single broken model invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NonPositiveBase(&'static str),
    DuplicateBusId(usize),
    BusIdMismatch { position: usize, id: usize },
    MissingInertia { bus: usize },
    NonPositiveInertia { bus: usize },
    ZeroCoherentCount { bus: usize },
    NonPositiveEmf { bus: usize },
    NegativeLoad { bus: usize },
    NonFiniteCoord { bus: usize },
    DanglingLine { line: usize, bus: usize },
    SelfLoop { line: usize },
    LineParameter { line: usize, field: &'static str },
    Disconnected { buses: Vec<usize> },
    Empty,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonPositiveBase(name) => write!(f, "base {name} must be > 0"),
            Violation::DuplicateBusId(id) => write!(f, "duplicate bus id {id}"),
            Violation::BusIdMismatch { position, id } => {
                write!(f, "bus at position {position} has id {id}; ids must be 0..n-1 in order")
            }
            Violation::MissingInertia { bus } => {
                write!(f, "bus {bus} has a generator but no inertia_h")
            }
            Violation::NonPositiveInertia { bus } => write!(f, "bus {bus} inertia_h must be > 0"),
            Violation::ZeroCoherentCount { bus } => {
                write!(f, "bus {bus} coherent_count must be >= 1")
            }
            Violation::NonPositiveEmf { bus } => write!(f, "bus {bus} emf_pu must be > 0"),
            Violation::NegativeLoad { bus } => write!(f, "bus {bus} load_p must be >= 0"),
            Violation::NonFiniteCoord { bus } => write!(f, "bus {bus} has non-finite coordinates"),
            Violation::DanglingLine { line, bus } => {
                write!(f, "line {line} references missing bus {bus}")
            }
            Violation::SelfLoop { line } => write!(f, "line {line} connects a bus to itself"),
            Violation::LineParameter { line, field } => {
                write!(f, "line {line} has out-of-range {field}")
            }
            Violation::Disconnected { buses } => {
                write!(f, "network is not connected; unreachable from bus 0: {buses:?}")
            }
            Violation::Empty => write!(f, "network has no buses"),
        }
    }
}

/// Outcome of [`NetworkModel::validate`]; empty means valid.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msgs: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        f.write_str(&msgs.join("; "))
    }
}

impl NetworkModel {
    pub fn n_buses(&self) -> usize {
        self.buses.len()
    }

    pub fn validate(&self) -> ValidationReport {
        let mut v = Vec::new();
        let b = &self.bases;
        for (name, value) in [("s_base", b.s_base), ("v_base", b.v_base), ("f_nominal", b.f_nominal)] {
            if !(value > 0.0) || !value.is_finite() {
                v.push(Violation::NonPositiveBase(name));
            }
        }
        if self.buses.is_empty() {
            v.push(Violation::Empty);
        }

        let mut seen = HashSet::new();
        for (pos, bus) in self.buses.iter().enumerate() {
            if !seen.insert(bus.id) {
                v.push(Violation::DuplicateBusId(bus.id));
            } else if bus.id != pos {
                v.push(Violation::BusIdMismatch {
                    position: pos,
                    id: bus.id,
                });
            }
            if bus.gen_rating.is_some() {
                match bus.inertia_h {
                    None => v.push(Violation::MissingInertia { bus: bus.id }),
                    Some(h) if !(h > 0.0) => v.push(Violation::NonPositiveInertia { bus: bus.id }),
                    _ => {}
                }
            }
            if bus.coherent_count < 1 {
                v.push(Violation::ZeroCoherentCount { bus: bus.id });
            }
            if !(bus.emf_pu > 0.0) {
                v.push(Violation::NonPositiveEmf { bus: bus.id });
            }
            if !(bus.load_p >= 0.0) {
                v.push(Violation::NegativeLoad { bus: bus.id });
            }
            if !bus.coord.iter().all(|c| c.is_finite()) {
                v.push(Violation::NonFiniteCoord { bus: bus.id });
            }
        }

        let n = self.buses.len();
        let mut endpoints_ok = true;
        for (i, line) in self.lines.iter().enumerate() {
            for end in [line.from_bus, line.to_bus] {
                if end >= n {
                    v.push(Violation::DanglingLine { line: i, bus: end });
                    endpoints_ok = false;
                }
            }
            if line.from_bus == line.to_bus {
                v.push(Violation::SelfLoop { line: i });
            }
            for (field, value, allow_zero) in [
                ("length", line.length, false),
                ("l_per_len", line.l_per_len, false),
                ("c_per_len", line.c_per_len, false),
                ("r_per_len", line.r_per_len, true),
            ] {
                let ok = value.is_finite() && if allow_zero { value >= 0.0 } else { value > 0.0 };
                if !ok {
                    v.push(Violation::LineParameter { line: i, field });
                }
            }
        }

        if n > 0 && endpoints_ok {
            let reach = self.reachable_from(0, &[]);
            let missing: Vec<usize> = (0..n).filter(|&i| !reach[i]).collect();
            if !missing.is_empty() {
                v.push(Violation::Disconnected { buses: missing });
            }
        }

        ValidationReport { violations: v }
    }

    /// Validate and convert a non-empty report into an error.
    pub fn ensure_valid(&self) -> Result<()> {
        let report = self.validate();
        if report.is_valid() {
            Ok(())
        } else {
            Err(Error::InvalidModel(report.to_string()))
        }
    }

    /// Reachability by breadth-first traversal, skipping `open_lines`.
    pub fn reachable_from(&self, start: usize, open_lines: &[usize]) -> Vec<bool> {
        let adj = self.adjacency(open_lines);
        let mut seen = vec![false; self.buses.len()];
        let mut queue = std::collections::VecDeque::from([start]);
        seen[start] = true;
        while let Some(b) = queue.pop_front() {
            for &(nb, _) in &adj[b] {
                if !seen[nb] {
                    seen[nb] = true;
                    queue.push_back(nb);
                }
            }
        }
        seen
    }

    /// Neighbour lists `(bus, line index)` per bus.
    pub fn adjacency(&self, open_lines: &[usize]) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.buses.len()];
        for (i, line) in self.lines.iter().enumerate() {
            if open_lines.contains(&i) {
                continue;
            }
            adj[line.from_bus].push((line.to_bus, i));
            adj[line.to_bus].push((line.from_bus, i));
        }
        adj
    }

    pub fn degree(&self, bus: usize) -> usize {
        self.lines
            .iter()
            .filter(|l| l.from_bus == bus || l.to_bus == bus)
            .count()
    }

    /// Shortest along-line distance (km) from `origin` to every bus.
    pub fn line_distances(&self, origin: usize) -> Vec<Option<f64>> {
        let mut graph: UnGraph<(), f64> = UnGraph::with_capacity(self.buses.len(), self.lines.len());
        let nodes: Vec<NodeIndex> = (0..self.buses.len()).map(|_| graph.add_node(())).collect();
        for line in &self.lines {
            graph.add_edge(nodes[line.from_bus], nodes[line.to_bus], line.length);
        }
        let dist = petgraph::algo::dijkstra(&graph, nodes[origin], None, |e| *e.weight());
        nodes.iter().map(|n| dist.get(n).copied()).collect()
    }

    /// Euclidean distance between two buses, km.
    pub fn straight_distance(&self, a: usize, b: usize) -> f64 {
        let [xa, ya] = self.buses[a].coord;
        let [xb, yb] = self.buses[b].coord;
        (xa - xb).hypot(ya - yb)
    }

    /// Bus sequence around a ring starting at `start`, or a topology error
    /// when the network is not a single cycle.
    pub fn ring_order(&self, start: usize) -> Result<Vec<usize>> {
        let n = self.buses.len();
        if n < 3 || self.lines.len() != n {
            return Err(Error::Topology(format!(
                "not a ring: {n} buses and {} lines",
                self.lines.len()
            )));
        }
        let adj = self.adjacency(&[]);
        if let Some(b) = (0..n).find(|&b| adj[b].len() != 2) {
            return Err(Error::Topology(format!(
                "not a ring: bus {b} has degree {}",
                adj[b].len()
            )));
        }
        let mut order = vec![start];
        let mut prev = start;
        let mut cur = adj[start][0].0;
        while cur != start {
            order.push(cur);
            let next = if adj[cur][0].0 == prev {
                adj[cur][1].0
            } else {
                adj[cur][0].0
            };
            prev = cur;
            cur = next;
            if order.len() > n {
                break;
            }
        }
        if order.len() != n {
            return Err(Error::Topology("not a ring: graph is not a single cycle".into()));
        }
        Ok(order)
    }
}

/// Per-bus parameters stamped onto every bus by the builders.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BusTemplate {
    pub gen_rating: Option<f64>,
    pub inertia_h: Option<f64>,
    pub coherent_count: u32,
    pub load_p: f64,
    pub emf_pu: f64,
}

impl BusTemplate {
    fn stamp(&self, id: usize, coord: [f64; 2]) -> Bus {
        Bus {
            id,
            coord,
            gen_rating: self.gen_rating,
            inertia_h: self.inertia_h,
            coherent_count: self.coherent_count,
            load_p: self.load_p,
            emf_pu: self.emf_pu,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineTemplate {
    pub r_per_len: f64,
    pub l_per_len: f64,
    pub c_per_len: f64,
    pub len_unit_em: LengthUnit,
}

impl LineTemplate {
    fn stamp(&self, from_bus: usize, to_bus: usize, length: f64) -> Line {
        Line {
            from_bus,
            to_bus,
            length,
            r_per_len: self.r_per_len,
            l_per_len: self.l_per_len,
            c_per_len: self.c_per_len,
            len_unit_em: self.len_unit_em,
        }
    }
}

/// Closed ring of `n_buses` identical buses; line `k` joins bus `k` to bus
/// `k + 1 (mod n)`. Buses sit on a circle whose arc between neighbours equals
/// `line_km`.
pub fn build_ring(
    bases: SystemBases,
    n_buses: usize,
    line_km: f64,
    bus: &BusTemplate,
    line: &LineTemplate,
) -> Result<NetworkModel> {
    if n_buses < 3 {
        return Err(Error::Topology(format!("a ring needs at least 3 buses, got {n_buses}")));
    }
    if !(line_km > 0.0) {
        return Err(Error::Topology(format!("line length must be > 0, got {line_km}")));
    }
    let radius = n_buses as f64 * line_km / (2.0 * PI);
    let buses = (0..n_buses)
        .map(|k| {
            let theta = 2.0 * PI * k as f64 / n_buses as f64;
            bus.stamp(k, [radius * theta.cos(), radius * theta.sin()])
        })
        .collect();
    let lines = (0..n_buses)
        .map(|k| line.stamp(k, (k + 1) % n_buses, line_km))
        .collect();
    Ok(NetworkModel { bases, buses, lines })
}

/// Rectangular grid; bus `r * cols + c` sits at `(c, r) * spacing_km`.
/// Horizontal lines are listed first, then vertical ones.
pub fn build_mesh(
    bases: SystemBases,
    rows: usize,
    cols: usize,
    spacing_km: f64,
    bus: &BusTemplate,
    line: &LineTemplate,
) -> Result<NetworkModel> {
    if rows < 2 || cols < 2 {
        return Err(Error::Topology(format!(
            "a mesh needs at least 2 rows and 2 columns, got {rows}x{cols}"
        )));
    }
    if !(spacing_km > 0.0) {
        return Err(Error::Topology(format!("spacing must be > 0, got {spacing_km}")));
    }
    let id = |r: usize, c: usize| r * cols + c;
    let mut buses = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            buses.push(bus.stamp(id(r, c), [c as f64 * spacing_km, r as f64 * spacing_km]));
        }
    }
    let mut lines = Vec::with_capacity(rows * (cols - 1) + cols * (rows - 1));
    for r in 0..rows {
        for c in 0..cols - 1 {
            lines.push(line.stamp(id(r, c), id(r, c + 1), spacing_km));
        }
    }
    for r in 0..rows - 1 {
        for c in 0..cols {
            lines.push(line.stamp(id(r, c), id(r + 1, c), spacing_km));
        }
    }
    Ok(NetworkModel { bases, buses, lines })
}

pub mod presets {
    use super::*;

    pub const RING23_BUSES: usize = 23;
    pub const RING23_LINE_KM: f64 = 100.0;

    pub fn ring23_bus() -> BusTemplate {
        BusTemplate {
            gen_rating: Some(120.0),
            inertia_h: Some(10.0),
            coherent_count: 100,
            load_p: 1000.0,
            emf_pu: 1.0,
        }
    }

    pub fn ring23_line() -> LineTemplate {
        LineTemplate {
            r_per_len: 0.325,
            l_per_len: 0.102e-6,
            c_per_len: 0.115e-9,
            len_unit_em: LengthUnit::M,
        }
    }

    /// The 23-bus ring: 100 km lines, one 120 MW x 100 coherent-machine
    /// generator and a 1000 MW load per bus, 100 MVA / 500 kV / 60 Hz bases.
    pub fn ring23() -> NetworkModel {
        build_ring(
            SystemBases::default(),
            RING23_BUSES,
            RING23_LINE_KM,
            &ring23_bus(),
            &ring23_line(),
        )
        .expect("preset parameters are valid")
    }
}
