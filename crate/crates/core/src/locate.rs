//! Least-squares location of a disturbance from wave arrival times.
//!
//! The objective is
//!
//! ```text
//! J(x, y, t0) = sum_i w_i (t_i - t0 - d_i(x, y) / v)^2
//! ```
//!
//! with `d_i` the planar distance to sensor `i`. A coarse grid over the
//! search bounds, with `t0` (and the slowness `1 / v` when the speed is
//! fitted) eliminated in closed form at every candidate, seeds a
//! Gauss-Newton refinement. Every local minimum of the grid is refined, in
//! ascending cost order up to [`MAX_STARTS`], and the lowest refined cost
//! wins; the joint speed fit has long shallow valleys where the best grid
//! cell can sit in the wrong basin. Refinement never leaves the bounds.
//!
//! Positions are handled relative to the centre of the bounds and times
//! relative to the mean arrival, so shifted inputs give shifted outputs.

use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::analysis::ArrivalReport;
use crate::error::{Error, Result};
use crate::model::NetworkModel;
use crate::series::format_value;

pub const GRID_CELLS: usize = 50;
/// Grid padding on each side as a fraction of the sensor span.
const GRID_PAD: f64 = 0.1;
pub const MAX_ITERATIONS: usize = 100;
/// Position step below which the refinement stops, km.
pub const STEP_TOL_KM: f64 = 1e-6;
const MAX_HALVINGS: usize = 40;
/// Grid local minima refined per solve.
pub const MAX_STARTS: usize = 8;
/// Smallest slowness kept when the speed is fitted, s/km.
const MIN_SLOWNESS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SensorArrival {
    pub sensor_id: String,
    /// km
    pub position: [f64; 2],
    /// s
    pub arrival_t: f64,
    pub weight: f64,
}

impl SensorArrival {
    pub fn new(sensor_id: impl Into<String>, position: [f64; 2], arrival_t: f64) -> Self {
        Self {
            sensor_id: sensor_id.into(),
            position,
            arrival_t,
            weight: 1.0,
        }
    }
}

/// Rectangular search region, km.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl Bounds {
    pub fn new(min: [f64; 2], max: [f64; 2]) -> Result<Self> {
        if !(min[0] < max[0] && min[1] < max[1]) || min.iter().chain(&max).any(|v| !v.is_finite()) {
            return Err(Error::Config(format!(
                "search bounds need min < max, got ({}, {}) .. ({}, {})",
                min[0], min[1], max[0], max[1]
            )));
        }
        Ok(Self { min, max })
    }

    /// Bounding box of the points, grown by 20 %. A flat extent borrows the
    /// other axis' span.
    pub fn around(points: &[[f64; 2]]) -> Self {
        let mut min = [f64::INFINITY; 2];
        let mut max = [f64::NEG_INFINITY; 2];
        for p in points {
            for a in 0..2 {
                min[a] = min[a].min(p[a]);
                max[a] = max[a].max(p[a]);
            }
        }
        let span = [max[0] - min[0], max[1] - min[1]];
        let fallback = span[0].max(span[1]).max(1.0);
        for a in 0..2 {
            let s = if span[a] > 0.0 { span[a] } else { fallback };
            let centre = 0.5 * (min[a] + max[a]);
            min[a] = centre - s * (0.5 + GRID_PAD);
            max[a] = centre + s * (0.5 + GRID_PAD);
        }
        Self { min, max }
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Self {
        Self {
            min: [self.min[0] + dx, self.min[1] + dy],
            max: [self.max[0] + dx, self.max[1] + dy],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocationEstimate {
    /// km
    pub position: [f64; 2],
    /// s
    pub origin_t: f64,
    /// km/s
    pub speed_used: f64,
    /// weighted RMS of the timing residuals, s
    pub residual_rms: f64,
    pub abs_error_km: Option<f64>,
    /// Sensors are collinear, or speed and origin time cannot be told apart.
    pub degenerate: bool,
    /// False when the refinement did not converge and the grid minimum was
    /// returned.
    pub refined: bool,
    /// Value of the objective at the estimate, s^2.
    pub cost: f64,
    /// Objective at the best grid candidate, s^2.
    pub grid_cost: f64,
}

/// JSON record of an estimate.
#[derive(Debug, Clone, Serialize)]
pub struct LocationJson {
    pub x_km: f64,
    pub y_km: f64,
    pub t0_s: f64,
    pub speed_kms: f64,
    pub residual_rms_s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub abs_error_km: Option<f64>,
}

impl LocationEstimate {
    pub fn with_truth(mut self, truth: [f64; 2]) -> Self {
        self.abs_error_km = Some(distance(self.position, truth));
        self
    }

    pub fn to_json(&self) -> LocationJson {
        LocationJson {
            x_km: self.position[0],
            y_km: self.position[1],
            t0_s: self.origin_t,
            speed_kms: self.speed_used,
            residual_rms_s: self.residual_rms,
            abs_error_km: self.abs_error_km,
        }
    }

    /// Human-readable notes for flagged estimates.
    pub fn warnings(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if self.degenerate {
            out.push("degenerate sensor geometry: estimate is not unique");
        }
        if !self.refined {
            out.push("refinement did not converge: returning the grid minimum");
        }
        out
    }
}

fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Arrival times a point event at `event`, starting at `t0` and spreading at
/// `speed` km/s, produces at each sensor.
pub fn forward_arrivals(sensors: &[(String, [f64; 2])], event: [f64; 2], t0: f64, speed: f64) -> Vec<SensorArrival> {
    sensors
        .iter()
        .map(|(id, p)| SensorArrival::new(id.clone(), *p, t0 + distance(*p, event) / speed))
        .collect()
}

/// Add independent uniform timing noise in `[-amplitude, amplitude]` s.
pub fn jitter_arrivals(arrivals: &[SensorArrival], amplitude: f64, seed: u64) -> Vec<SensorArrival> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    arrivals
        .iter()
        .map(|a| {
            let mut a = a.clone();
            if amplitude > 0.0 {
                a.arrival_t += rng.gen_range(-amplitude..=amplitude);
            }
            a
        })
        .collect()
}

/// Sensor arrivals for the detected buses among `sensors`, positioned at
/// the bus coordinates.
pub fn sensor_arrivals(report: &ArrivalReport, model: &NetworkModel, sensors: &[usize]) -> Vec<SensorArrival> {
    sensors
        .iter()
        .filter_map(|&bus| {
            let t = report.arrival(bus)?;
            let b = model.buses.get(bus)?;
            Some(SensorArrival::new(format!("bus{bus}"), b.coord, t))
        })
        .collect()
}

/// Locate with a known, uniform speed (km/s).
pub fn locate(arrivals: &[SensorArrival], speed: f64, bounds: Option<Bounds>) -> Result<LocationEstimate> {
    if !(speed > 0.0 && speed.is_finite()) {
        return Err(Error::Domain(format!("speed must be > 0, got {speed}")));
    }
    Problem::new(arrivals, 3, bounds)?.solve(Some(1.0 / speed))
}

/// Locate with the speed as a fourth unknown.
pub fn estimate_speed_and_locate(arrivals: &[SensorArrival], bounds: Option<Bounds>) -> Result<LocationEstimate> {
    Problem::new(arrivals, 4, bounds)?.solve(None)
}

struct Problem {
    pos: Vec<[f64; 2]>,
    t: Vec<f64>,
    w: Vec<f64>,
    bounds: Bounds,
    collinear: bool,
    /// Subtracted from all positions and times.
    origin: [f64; 2],
    t_ref: f64,
}

/// Candidate solution: position, origin time, slowness (s/km).
#[derive(Debug, Clone, Copy)]
struct Point {
    x: f64,
    y: f64,
    t0: f64,
    s: f64,
}

impl Problem {
    fn new(arrivals: &[SensorArrival], needed: usize, bounds: Option<Bounds>) -> Result<Self> {
        for a in arrivals {
            if !a.arrival_t.is_finite() || !a.position.iter().all(|v| v.is_finite()) {
                return Err(Error::Domain(format!("sensor {} has a non-finite entry", a.sensor_id)));
            }
            if !(a.weight >= 0.0 && a.weight.is_finite()) {
                return Err(Error::Domain(format!("sensor {} has weight {}", a.sensor_id, a.weight)));
            }
        }
        let used: Vec<&SensorArrival> = arrivals.iter().filter(|a| a.weight > 0.0).collect();
        if used.len() < needed {
            return Err(Error::Underdetermined {
                needed,
                found: used.len(),
            });
        }
        let raw: Vec<[f64; 2]> = used.iter().map(|a| a.position).collect();
        let w: Vec<f64> = used.iter().map(|a| a.weight).collect();
        let bounds = bounds.unwrap_or_else(|| Bounds::around(&raw));
        let origin = [
            0.5 * (bounds.min[0] + bounds.max[0]),
            0.5 * (bounds.min[1] + bounds.max[1]),
        ];
        let pos: Vec<[f64; 2]> = raw.iter().map(|p| [p[0] - origin[0], p[1] - origin[1]]).collect();
        let sw: f64 = w.iter().sum();
        let t_ref = used.iter().zip(&w).map(|(a, w)| w * a.arrival_t).sum::<f64>() / sw;
        let collinear = is_collinear(&pos, &w);
        Ok(Self {
            t: used.iter().map(|a| a.arrival_t - t_ref).collect(),
            pos,
            w,
            bounds: bounds.translated(-origin[0], -origin[1]),
            collinear,
            origin,
            t_ref,
        })
    }

    fn distances(&self, x: f64, y: f64) -> Vec<f64> {
        self.pos.iter().map(|p| distance(*p, [x, y])).collect()
    }

    fn cost(&self, p: &Point) -> f64 {
        self.pos
            .iter()
            .zip(&self.t)
            .zip(&self.w)
            .map(|((q, t), w)| {
                let r = t - p.t0 - p.s * distance(*q, [p.x, p.y]);
                w * r * r
            })
            .sum()
    }

    /// Best origin time (and slowness when free) at a fixed position.
    fn profile(&self, x: f64, y: f64, slowness: Option<f64>) -> Point {
        let d = self.distances(x, y);
        let sw: f64 = self.w.iter().sum();
        let mean = |v: &dyn Fn(usize) -> f64| (0..d.len()).map(|i| self.w[i] * v(i)).sum::<f64>() / sw;
        let s = match slowness {
            Some(s) => s,
            None => {
                let dm = mean(&|i| d[i]);
                let tm = mean(&|i| self.t[i]);
                let var = mean(&|i| (d[i] - dm).powi(2));
                let cov = mean(&|i| (d[i] - dm) * (self.t[i] - tm));
                if var > 0.0 {
                    (cov / var).max(MIN_SLOWNESS)
                } else {
                    MIN_SLOWNESS
                }
            }
        };
        let t0 = mean(&|i| self.t[i] - s * d[i]);
        Point { x, y, t0, s }
    }

    /// Grid local minima (no neighbour strictly lower), cheapest first.
    /// The first entry is the global grid minimum; ties go to the lowest x,
    /// then the lowest y.
    fn grid_minima(&self, slowness: Option<f64>) -> Vec<(Point, f64)> {
        let b = &self.bounds;
        let hx = (b.max[0] - b.min[0]) / GRID_CELLS as f64;
        let hy = (b.max[1] - b.min[1]) / GRID_CELLS as f64;
        // x outermost, so the index order is the tie-break order
        let cells: Vec<(Point, f64)> = (0..GRID_CELLS * GRID_CELLS)
            .map(|k| {
                let x = b.min[0] + ((k / GRID_CELLS) as f64 + 0.5) * hx;
                let y = b.min[1] + ((k % GRID_CELLS) as f64 + 0.5) * hy;
                let p = self.profile(x, y, slowness);
                (p, self.cost(&p))
            })
            .collect();
        let n = GRID_CELLS as isize;
        let mut minima: Vec<usize> = (0..cells.len())
            .filter(|&k| {
                let (i, j) = ((k / GRID_CELLS) as isize, (k % GRID_CELLS) as isize);
                let c = cells[k].1;
                (-1..=1).all(|di| {
                    (-1..=1).all(|dj| {
                        let (a, b) = (i + di, j + dj);
                        !(0..n).contains(&a) || !(0..n).contains(&b) || cells[(a * n + b) as usize].1 >= c
                    })
                })
            })
            .collect();
        // stable, so equal costs keep the index order
        minima.sort_by(|&a, &b| cells[a].1.total_cmp(&cells[b].1));
        minima.into_iter().map(|k| cells[k]).collect()
    }

    /// Residuals and Jacobian over the free parameters `(x, y, t0[, s])`.
    fn linearize(&self, p: &Point, fit_speed: bool) -> (DMatrix<f64>, DVector<f64>) {
        let n = self.pos.len();
        let cols = if fit_speed { 4 } else { 3 };
        let mut jac = DMatrix::zeros(n, cols);
        let mut res = DVector::zeros(n);
        for i in 0..n {
            let sw = self.w[i].sqrt();
            let dx = p.x - self.pos[i][0];
            let dy = p.y - self.pos[i][1];
            let d = dx.hypot(dy);
            res[i] = sw * (self.t[i] - p.t0 - p.s * d);
            if d > 0.0 {
                jac[(i, 0)] = -sw * p.s * dx / d;
                jac[(i, 1)] = -sw * p.s * dy / d;
            }
            jac[(i, 2)] = -sw;
            if fit_speed {
                jac[(i, 3)] = -sw * d;
            }
        }
        (jac, res)
    }

    /// Gauss-Newton with step halving, projected onto the bounds. Returns the refined point, whether
    /// the step tolerance was reached, and whether the normal matrix lost
    /// rank on the way. Once within tolerance the iteration keeps going while
    /// the steps still shrink, which pins the answer to the minimizer rather
    /// than to wherever the path crossed the tolerance.
    fn refine(&self, start: Point, fit_speed: bool) -> (Point, bool, bool) {
        let mut p = start;
        let mut cost = self.cost(&p);
        let mut rank_deficient = false;
        let mut converged = false;
        let mut last_move = f64::INFINITY;
        for _ in 0..MAX_ITERATIONS {
            let (jac, res) = self.linearize(&p, fit_speed);
            let svd = jac.clone().svd(true, true);
            let smax = svd.singular_values.max();
            let tol = smax * 1e-10 * jac.nrows().max(jac.ncols()) as f64;
            if svd.rank(tol) < jac.ncols() {
                rank_deficient = true;
            }
            // J delta = -r in the least-squares sense
            let step = match svd.solve(&(-&res), tol) {
                Ok(s) => s,
                Err(_) => return (p, false, true),
            };
            let mut alpha = 1.0;
            let mut accepted = None;
            for _ in 0..MAX_HALVINGS {
                let b = &self.bounds;
                let trial = Point {
                    x: (p.x + alpha * step[0]).clamp(b.min[0], b.max[0]),
                    y: (p.y + alpha * step[1]).clamp(b.min[1], b.max[1]),
                    t0: p.t0 + alpha * step[2],
                    s: if fit_speed { p.s + alpha * step[3] } else { p.s },
                };
                if trial.s > 0.0 {
                    let c = self.cost(&trial);
                    // rounding noise in the cost must not veto a step
                    if c <= cost * (1.0 + 1e-12) {
                        accepted = Some((trial, c));
                        break;
                    }
                }
                alpha *= 0.5;
            }
            let Some((next, c)) = accepted else {
                // no descent left along the Gauss-Newton direction
                return (p, true, rank_deficient);
            };
            let moved = (next.x - p.x).hypot(next.y - p.y);
            p = next;
            cost = c;
            if converged && !(moved < last_move) {
                break;
            }
            if moved < STEP_TOL_KM && (alpha * step.norm()) < STEP_TOL_KM.max(1e-12 * (1.0 + p.t0.abs())) {
                converged = true;
            }
            last_move = moved;
        }
        (p, converged, rank_deficient)
    }

    fn solve(&self, slowness: Option<f64>) -> Result<LocationEstimate> {
        let fit_speed = slowness.is_none();
        let minima = self.grid_minima(slowness);
        let (grid, grid_cost) = minima[0];
        let mut best = grid;
        let mut converged = false;
        let mut rank_deficient = false;
        let mut cost = grid_cost;
        for &(start, _) in minima.iter().take(MAX_STARTS) {
            let (p, ok, rank) = self.refine(start, fit_speed);
            let c = self.cost(&p);
            if ok && c <= grid_cost && (!converged || c < cost) {
                (best, converged, rank_deficient, cost) = (p, true, rank, c);
            }
        }
        if !converged {
            cost = grid_cost;
        }

        let mut degenerate = self.collinear;
        if fit_speed {
            let d = self.distances(best.x, best.y);
            let sw: f64 = self.w.iter().sum();
            let dm = d.iter().zip(&self.w).map(|(d, w)| w * d).sum::<f64>() / sw;
            let var = d.iter().zip(&self.w).map(|(d, w)| w * (d - dm).powi(2)).sum::<f64>() / sw;
            let scale = d.iter().fold(0.0f64, |a, &b| a.max(b)).max(1.0);
            degenerate |= rank_deficient || var <= 1e-12 * scale * scale || best.s <= MIN_SLOWNESS * (1.0 + 1e-9);
        }
        let sw: f64 = self.w.iter().sum();
        Ok(LocationEstimate {
            position: [best.x + self.origin[0], best.y + self.origin[1]],
            origin_t: best.t0 + self.t_ref,
            speed_used: 1.0 / best.s,
            residual_rms: (cost / sw).sqrt(),
            abs_error_km: None,
            degenerate,
            refined: converged,
            cost,
            grid_cost,
        })
    }
}

/// Weighted scatter of the positions is (numerically) rank one.
fn is_collinear(pos: &[[f64; 2]], w: &[f64]) -> bool {
    let sw: f64 = w.iter().sum();
    let cx = pos.iter().zip(w).map(|(p, w)| w * p[0]).sum::<f64>() / sw;
    let cy = pos.iter().zip(w).map(|(p, w)| w * p[1]).sum::<f64>() / sw;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (p, w) in pos.iter().zip(w) {
        let (dx, dy) = (p[0] - cx, p[1] - cy);
        sxx += w * dx * dx;
        syy += w * dy * dy;
        sxy += w * dx * dy;
    }
    let tr = sxx + syy;
    let det = sxx * syy - sxy * sxy;
    let disc = (0.25 * tr * tr - det).max(0.0).sqrt();
    let (big, small) = (0.5 * tr + disc, 0.5 * tr - disc);
    big <= 0.0 || small <= 1e-9 * big
}

const HEADER: [&str; 4] = ["sensor_id", "x_km", "y_km", "arrival_s"];

/// Read `sensor_id,x_km,y_km,arrival_s[,weight]`. A missing weight is 1.
pub fn read_arrivals_csv<R: Read>(reader: R) -> Result<Vec<SensorArrival>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = r.headers()?.clone();
    let names: Vec<&str> = headers.iter().collect();
    let weighted = match names.as_slice() {
        [a, b, c, d] if [*a, *b, *c, *d] == HEADER => false,
        [a, b, c, d, "weight"] if [*a, *b, *c, *d] == HEADER => true,
        _ => {
            return Err(Error::Parse(format!(
                "line 1: expected header 'sensor_id,x_km,y_km,arrival_s[,weight]', got '{}'",
                names.join(",")
            )))
        }
    };
    let mut out = Vec::new();
    for (row, record) in r.records().enumerate() {
        let record = record?;
        let line = row + 2;
        let num = |col: usize| -> Result<f64> {
            let field = record.get(col).unwrap_or("");
            field
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("line {line}, column {}: '{field}' is not a number", col + 1)))
        };
        out.push(SensorArrival {
            sensor_id: record[0].to_string(),
            position: [num(1)?, num(2)?],
            arrival_t: num(3)?,
            weight: if weighted { num(4)? } else { 1.0 },
        });
    }
    Ok(out)
}

pub fn write_arrivals_csv<W: Write>(arrivals: &[SensorArrival], writer: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(writer);
    w.write_record(HEADER.iter().chain(&["weight"]))?;
    for a in arrivals {
        w.write_record([
            a.sensor_id.clone(),
            format_value(a.position[0]),
            format_value(a.position[1]),
            format_value(a.arrival_t),
            format_value(a.weight),
        ])?;
    }
    w.flush()?;
    Ok(())
}
