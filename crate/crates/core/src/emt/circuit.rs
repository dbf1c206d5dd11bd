//! Nodal transient solver: trapezoidal companion models for lumped branches
//! and lossless Bergeron models for distributed lines.
//!
//! Every branch reduces to a conductance in parallel with a history current
//! source, so each step solves `G v = i` over the free nodes. Driven nodes
//! carry an imposed voltage (ideal sources) and are eliminated from `G`.
//! `G` is factorized once and again only after a switching event.

use nalgebra::{Complex, DMatrix, DVector, Dyn, LU};

use crate::error::{Error, Result};

/// A branch terminal; `None` is ground.
pub type Terminal = Option<usize>;

#[derive(Debug, Clone)]
struct Resistor {
    a: Terminal,
    b: Terminal,
    /// `None` when open.
    r: Option<f64>,
}

#[derive(Debug, Clone)]
struct SeriesRl {
    a: Terminal,
    b: Terminal,
    /// `(r, l)`, `None` when open.
    params: Option<(f64, f64)>,
    current: f64,
}

#[derive(Debug, Clone)]
struct Capacitor {
    a: Terminal,
    b: Terminal,
    c: f64,
    current: f64,
}

/// Past history terms of one line end, addressed by absolute step index.
#[derive(Debug, Clone)]
struct History {
    buf: Vec<f64>,
}

impl History {
    fn new(depth: usize) -> Self {
        Self { buf: vec![0.0; depth] }
    }

    fn get(&self, step: i64) -> f64 {
        if step < 0 {
            0.0
        } else {
            self.buf[(step as usize) % self.buf.len()]
        }
    }

    fn set(&mut self, step: usize, value: f64) {
        let len = self.buf.len();
        self.buf[step % len] = value;
    }
}

#[derive(Debug, Clone)]
struct Bergeron {
    k: usize,
    m: usize,
    zc: f64,
    /// travel time in steps
    delay: f64,
    /// `Some(n)` when the delay is an integer number of steps
    whole: Option<i64>,
    open: bool,
    hist_k: History,
    hist_m: History,
    i_k: f64,
    i_m: f64,
    v_end_k: f64,
    v_end_m: f64,
}

impl Bergeron {
    /// History current seen at one end at step `n`, drawn from the far end.
    fn incoming(&self, far: &History, n: usize) -> f64 {
        let n = n as i64;
        match self.whole {
            Some(d) => far.get(n - d),
            None => {
                let pos = n as f64 - self.delay;
                let lo = pos.floor();
                let frac = pos - lo;
                let lo = lo as i64;
                (1.0 - frac) * far.get(lo) + frac * far.get(lo + 1)
            }
        }
    }
}

/// Index handles returned by the [`Circuit`] builder.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResistorId(pub usize);
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RlId(pub usize);
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CapacitorId(pub usize);
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LineId(pub usize);

#[derive(Debug, Clone, Default)]
pub struct Circuit {
    driven: Vec<bool>,
    resistors: Vec<Resistor>,
    rls: Vec<SeriesRl>,
    caps: Vec<Capacitor>,
    lines: Vec<(usize, usize, f64, f64)>,
}

impl Circuit {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self) -> usize {
        self.driven.push(false);
        self.driven.len() - 1
    }

    /// A node whose voltage is imposed every step.
    pub fn add_driven_node(&mut self) -> usize {
        self.driven.push(true);
        self.driven.len() - 1
    }

    pub fn n_nodes(&self) -> usize {
        self.driven.len()
    }

    pub fn add_resistor(&mut self, a: Terminal, b: Terminal, r: Option<f64>) -> ResistorId {
        self.resistors.push(Resistor { a, b, r });
        ResistorId(self.resistors.len() - 1)
    }

    pub fn add_series_rl(&mut self, a: Terminal, b: Terminal, r: f64, l: f64) -> RlId {
        self.rls.push(SeriesRl {
            a,
            b,
            params: Some((r, l)),
            current: 0.0,
        });
        RlId(self.rls.len() - 1)
    }

    pub fn add_capacitor(&mut self, a: Terminal, b: Terminal, c: f64) -> CapacitorId {
        self.caps.push(Capacitor { a, b, c, current: 0.0 });
        CapacitorId(self.caps.len() - 1)
    }

    /// Lossless line between nodes `k` and `m` with surge impedance `zc`
    /// (ohm) and travel time `tau` (s).
    pub fn add_line(&mut self, k: usize, m: usize, zc: f64, tau: f64) -> LineId {
        self.lines.push((k, m, zc, tau));
        LineId(self.lines.len() - 1)
    }
}

/// Time-stepping state of a [`Circuit`] at a fixed step.
#[derive(Debug, Clone)]
pub struct Transient {
    dt: f64,
    step: usize,
    /// steps of synthetic history placed by `start_sinusoidal`
    start: usize,
    driven_nodes: Vec<usize>,
    free_nodes: Vec<usize>,
    v: Vec<f64>,
    resistors: Vec<Resistor>,
    rls: Vec<SeriesRl>,
    caps: Vec<Capacitor>,
    lines: Vec<Bergeron>,
    g_full: DMatrix<f64>,
    lu: Option<LU<f64, Dyn, Dyn>>,
    rhs: DVector<f64>,
    inj: Vec<f64>,
    rl_hist: Vec<f64>,
    cap_hist: Vec<f64>,
    line_in: Vec<(f64, f64)>,
}

impl Transient {
    pub fn new(circuit: Circuit, dt: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::Config(format!("time step must be > 0, got {dt}")));
        }
        let n = circuit.n_nodes();
        let mut lines = Vec::with_capacity(circuit.lines.len());
        for (idx, &(k, m, zc, tau)) in circuit.lines.iter().enumerate() {
            if !(zc > 0.0) || !(tau > 0.0) {
                return Err(Error::Config(format!("line {idx}: zc and tau must be > 0")));
            }
            let delay = tau / dt;
            if delay < 1.0 - 1e-9 {
                return Err(Error::Config(format!(
                    "line {idx}: travel time {tau:e} s is shorter than the step {dt:e} s"
                )));
            }
            let rounded = delay.round();
            let whole = ((delay - rounded).abs() < 1e-6 * delay.max(1.0)).then_some(rounded as i64);
            let depth = delay.ceil() as usize + 2;
            lines.push(Bergeron {
                k,
                m,
                zc,
                delay,
                whole,
                open: false,
                hist_k: History::new(depth),
                hist_m: History::new(depth),
                i_k: 0.0,
                i_m: 0.0,
                v_end_k: 0.0,
                v_end_m: 0.0,
            });
        }
        let mut free_nodes = Vec::new();
        let mut driven_nodes = Vec::new();
        for (node, &driven) in circuit.driven.iter().enumerate() {
            if driven {
                driven_nodes.push(node);
            } else {
                free_nodes.push(node);
            }
        }
        let nf = free_nodes.len();
        Ok(Self {
            dt,
            step: 0,
            start: 0,
            driven_nodes,
            free_nodes,
            v: vec![0.0; n],
            rl_hist: vec![0.0; circuit.rls.len()],
            cap_hist: vec![0.0; circuit.caps.len()],
            line_in: vec![(0.0, 0.0); lines.len()],
            resistors: circuit.resistors,
            rls: circuit.rls,
            caps: circuit.caps,
            lines,
            g_full: DMatrix::zeros(n, n),
            lu: None,
            rhs: DVector::zeros(nf),
            inj: vec![0.0; n],
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Number of completed steps.
    pub fn steps_done(&self) -> usize {
        self.step - self.start
    }

    /// Driven nodes in creation order; `step` takes their voltages in this order.
    pub fn driven_nodes(&self) -> &[usize] {
        &self.driven_nodes
    }

    pub fn voltage(&self, node: usize) -> f64 {
        self.v[node]
    }

    pub fn voltages(&self) -> &[f64] {
        &self.v
    }

    pub fn set_resistor(&mut self, id: ResistorId, r: Option<f64>) {
        let el = &mut self.resistors[id.0];
        if el.r != r {
            el.r = r;
            self.lu = None;
        }
    }

    pub fn resistor(&self, id: ResistorId) -> Option<f64> {
        self.resistors[id.0].r
    }

    /// Change or open (`None`) a series R-L branch. Opening forces its
    /// current to zero.
    pub fn set_series_rl(&mut self, id: RlId, params: Option<(f64, f64)>) {
        let el = &mut self.rls[id.0];
        if el.params != params {
            el.params = params;
            if params.is_none() {
                el.current = 0.0;
            }
            self.lu = None;
        }
    }

    pub fn series_rl(&self, id: RlId) -> Option<(f64, f64)> {
        self.rls[id.0].params
    }

    /// Branch current from terminal `a` to terminal `b`.
    pub fn rl_current(&self, id: RlId) -> f64 {
        self.rls[id.0].current
    }

    pub fn capacitor_current(&self, id: CapacitorId) -> f64 {
        self.caps[id.0].current
    }

    /// Disconnect (or reconnect) a line at both ends. An open line keeps its
    /// trapped waves, bouncing between open ends.
    pub fn set_line_open(&mut self, id: LineId, open: bool) {
        let line = &mut self.lines[id.0];
        if line.open != open {
            line.open = open;
            self.lu = None;
        }
    }

    /// Currents flowing into the line at its `k` and `m` ends.
    pub fn line_currents(&self, id: LineId) -> (f64, f64) {
        let l = &self.lines[id.0];
        (l.i_k, l.i_m)
    }

    /// Terminal voltages of the line itself (differs from the nodes when open).
    pub fn line_end_voltages(&self, id: LineId) -> (f64, f64) {
        let l = &self.lines[id.0];
        (l.v_end_k, l.v_end_m)
    }

    /// Energy of the traveling waves currently in flight on a line, J.
    ///
    /// Each stored history term equals `-2 a / zc` for the launched voltage
    /// wave `a`, which carries power `a^2 / zc`. Exact for whole-step
    /// delays; an interpolated delay counts its partial step in full.
    pub fn line_energy(&self, id: LineId) -> f64 {
        let l = &self.lines[id.0];
        let in_flight = l.whole.unwrap_or(l.delay.ceil() as i64);
        let last = self.step as i64 - 1;
        let sum: f64 = (0..in_flight)
            .map(|j| {
                let hk = l.hist_k.get(last - j);
                let hm = l.hist_m.get(last - j);
                hk * hk + hm * hm
            })
            .sum();
        sum * self.dt * l.zc / 4.0
    }

    /// Place the circuit in the sinusoidal steady state it reaches when the
    /// driven nodes carry `Re(drive[i] exp(j omega t))` forever, with the
    /// latest solution at time `t_last`. Must be called before the first step.
    pub fn start_sinusoidal(&mut self, omega: f64, drive: &[Complex<f64>], t_last: f64) -> Result<()> {
        if self.step != 0 {
            return Err(Error::Config("steady-state start after stepping".into()));
        }
        debug_assert_eq!(drive.len(), self.driven_nodes.len());
        let n = self.v.len();
        let j = Complex::new(0.0, 1.0);
        let mut y = DMatrix::<Complex<f64>>::zeros(n, n);
        let mut stamp = |a: Terminal, b: Terminal, adm: Complex<f64>| {
            if let Some(a) = a {
                y[(a, a)] += adm;
            }
            if let Some(b) = b {
                y[(b, b)] += adm;
            }
            if let (Some(a), Some(b)) = (a, b) {
                y[(a, b)] -= adm;
                y[(b, a)] -= adm;
            }
        };
        for el in &self.resistors {
            if let Some(r) = el.r {
                stamp(el.a, el.b, Complex::from(1.0 / r));
            }
        }
        for el in &self.rls {
            if let Some((r, l)) = el.params {
                stamp(el.a, el.b, (Complex::new(r, omega * l)).inv());
            }
        }
        for c in &self.caps {
            stamp(c.a, c.b, j * omega * c.c);
        }
        // exact pi equivalent of each lossless line
        let mut line_adm = Vec::with_capacity(self.lines.len());
        for (idx, l) in self.lines.iter().enumerate() {
            let theta = omega * l.delay * self.dt;
            if theta.sin().abs() < 1e-9 {
                return Err(Error::Config(format!(
                    "line {idx} is a whole number of half wavelengths"
                )));
            }
            let series = (j * l.zc * theta.sin()).inv();
            let shunt = j * (0.5 * theta).tan() / l.zc;
            line_adm.push((series, shunt));
            if !l.open {
                stamp(Some(l.k), Some(l.m), series);
                stamp(Some(l.k), None, shunt);
                stamp(Some(l.m), None, shunt);
            }
        }

        let mut phasor = vec![Complex::new(0.0, 0.0); n];
        for (&node, &d) in self.driven_nodes.iter().zip(drive) {
            phasor[node] = d;
        }
        let nf = self.free_nodes.len();
        if nf > 0 {
            let mut yff = DMatrix::zeros(nf, nf);
            let mut rhs = DVector::zeros(nf);
            for (a, &na) in self.free_nodes.iter().enumerate() {
                for (b, &nb) in self.free_nodes.iter().enumerate() {
                    yff[(a, b)] = y[(na, nb)];
                }
                rhs[a] = -self
                    .driven_nodes
                    .iter()
                    .map(|&d| y[(na, d)] * phasor[d])
                    .sum::<Complex<f64>>();
            }
            let sol = yff.lu().solve(&rhs).ok_or(Error::IsolatedNode {
                node: self.free_nodes[0],
            })?;
            for (a, &na) in self.free_nodes.iter().enumerate() {
                phasor[na] = sol[a];
            }
        }

        let at = |x: Complex<f64>, t: f64| (x * Complex::from_polar(1.0, omega * t)).re;
        let pv = |t: Terminal| t.map_or(Complex::new(0.0, 0.0), |i| phasor[i]);
        for (node, v) in self.v.iter_mut().enumerate() {
            *v = at(phasor[node], t_last);
        }
        for el in &mut self.rls {
            if let Some((r, l)) = el.params {
                el.current = at((pv(el.a) - pv(el.b)) / Complex::new(r, omega * l), t_last);
            }
        }
        for c in &mut self.caps {
            c.current = at(j * omega * c.c * (pv(c.a) - pv(c.b)), t_last);
        }
        let start = self.lines.iter().map(|l| l.hist_k.buf.len()).max().unwrap_or(0);
        for (l, (series, shunt)) in self.lines.iter_mut().zip(line_adm) {
            if l.open {
                continue;
            }
            let (vk, vm) = (phasor[l.k], phasor[l.m]);
            let ik = shunt * vk + series * (vk - vm);
            let im = shunt * vm + series * (vm - vk);
            let depth = l.hist_k.buf.len();
            for s in start - depth..start {
                let t = t_last - (start - 1 - s) as f64 * self.dt;
                l.hist_k.set(s, -at(vk, t) / l.zc - at(ik, t));
                l.hist_m.set(s, -at(vm, t) / l.zc - at(im, t));
            }
            l.v_end_k = at(vk, t_last);
            l.v_end_m = at(vm, t_last);
            l.i_k = at(ik, t_last);
            l.i_m = at(im, t_last);
        }
        self.step = start;
        self.start = start;
        Ok(())
    }

    fn stamp(g: &mut DMatrix<f64>, a: Terminal, b: Terminal, cond: f64) {
        if let Some(a) = a {
            g[(a, a)] += cond;
        }
        if let Some(b) = b {
            g[(b, b)] += cond;
        }
        if let (Some(a), Some(b)) = (a, b) {
            g[(a, b)] -= cond;
            g[(b, a)] -= cond;
        }
    }

    fn factorize(&mut self) -> Result<()> {
        let dt = self.dt;
        let g = &mut self.g_full;
        g.fill(0.0);
        for r in &self.resistors {
            if let Some(r_val) = r.r {
                Self::stamp(g, r.a, r.b, 1.0 / r_val);
            }
        }
        for el in &self.rls {
            if let Some((r, l)) = el.params {
                Self::stamp(g, el.a, el.b, 1.0 / (r + 2.0 * l / dt));
            }
        }
        for c in &self.caps {
            Self::stamp(g, c.a, c.b, 2.0 * c.c / dt);
        }
        for l in &self.lines {
            if !l.open {
                g[(l.k, l.k)] += 1.0 / l.zc;
                g[(l.m, l.m)] += 1.0 / l.zc;
            }
        }
        let nf = self.free_nodes.len();
        let mut gff = DMatrix::zeros(nf, nf);
        for (i, &ni) in self.free_nodes.iter().enumerate() {
            if g[(ni, ni)] == 0.0 {
                return Err(Error::IsolatedNode { node: ni });
            }
            for (j, &nj) in self.free_nodes.iter().enumerate() {
                gff[(i, j)] = g[(ni, nj)];
            }
        }
        let lu = gff.lu();
        if !lu.is_invertible() {
            return Err(Error::IsolatedNode {
                node: self.free_nodes.first().copied().unwrap_or(0),
            });
        }
        self.lu = Some(lu);
        Ok(())
    }

    /// Advance one step with the given driven-node voltages.
    pub fn step(&mut self, drive: &[f64]) -> Result<()> {
        debug_assert_eq!(drive.len(), self.driven_nodes.len());
        if self.lu.is_none() {
            self.factorize()?;
        }
        let dt = self.dt;
        let n = self.step;

        // history sources from the previous solution
        self.inj.iter_mut().for_each(|x| *x = 0.0);
        let vt = |v: &[f64], t: Terminal| t.map_or(0.0, |i| v[i]);
        let add = |inj: &mut [f64], a: Terminal, b: Terminal, h: f64| {
            if let Some(a) = a {
                inj[a] -= h;
            }
            if let Some(b) = b {
                inj[b] += h;
            }
        };
        for (idx, el) in self.rls.iter().enumerate() {
            self.rl_hist[idx] = match el.params {
                Some((r, l)) => {
                    let g = 1.0 / (r + 2.0 * l / dt);
                    let v_prev = vt(&self.v, el.a) - vt(&self.v, el.b);
                    g * (v_prev - (r - 2.0 * l / dt) * el.current)
                }
                None => 0.0,
            };
            add(&mut self.inj, el.a, el.b, self.rl_hist[idx]);
        }
        for (idx, c) in self.caps.iter().enumerate() {
            let g = 2.0 * c.c / dt;
            let v_prev = vt(&self.v, c.a) - vt(&self.v, c.b);
            self.cap_hist[idx] = -g * v_prev - c.current;
            add(&mut self.inj, c.a, c.b, self.cap_hist[idx]);
        }
        for (idx, l) in self.lines.iter().enumerate() {
            let in_k = l.incoming(&l.hist_m, n);
            let in_m = l.incoming(&l.hist_k, n);
            self.line_in[idx] = (in_k, in_m);
            if !l.open {
                self.inj[l.k] -= in_k;
                self.inj[l.m] -= in_m;
            }
        }

        for (&node, &value) in self.driven_nodes.iter().zip(drive) {
            self.v[node] = value;
        }

        // G_ff v_f = i_f - G_fd v_d
        for (i, &node) in self.free_nodes.iter().enumerate() {
            let mut r = self.inj[node];
            for &d in &self.driven_nodes {
                r -= self.g_full[(node, d)] * self.v[d];
            }
            self.rhs[i] = r;
        }
        let lu = self.lu.as_ref().expect("factorized above");
        if !self.free_nodes.is_empty() && !lu.solve_mut(&mut self.rhs) {
            return Err(Error::IsolatedNode {
                node: self.free_nodes[0],
            });
        }
        for (i, &node) in self.free_nodes.iter().enumerate() {
            self.v[node] = self.rhs[i];
        }

        // branch currents and new history
        let v = &self.v;
        for (idx, el) in self.rls.iter_mut().enumerate() {
            el.current = match el.params {
                Some((r, l)) => {
                    let g = 1.0 / (r + 2.0 * l / dt);
                    g * (vt(v, el.a) - vt(v, el.b)) + self.rl_hist[idx]
                }
                None => 0.0,
            };
        }
        for (idx, c) in self.caps.iter_mut().enumerate() {
            let g = 2.0 * c.c / dt;
            c.current = g * (vt(v, c.a) - vt(v, c.b)) + self.cap_hist[idx];
        }
        for (idx, l) in self.lines.iter_mut().enumerate() {
            let (in_k, in_m) = self.line_in[idx];
            if l.open {
                l.v_end_k = -l.zc * in_k;
                l.v_end_m = -l.zc * in_m;
                l.i_k = 0.0;
                l.i_m = 0.0;
            } else {
                l.v_end_k = v[l.k];
                l.v_end_m = v[l.m];
                l.i_k = l.v_end_k / l.zc + in_k;
                l.i_m = l.v_end_m / l.zc + in_m;
            }
            l.hist_k.set(n, -l.v_end_k / l.zc - l.i_k);
            l.hist_m.set(n, -l.v_end_m / l.zc - l.i_m);
        }
        self.step += 1;
        Ok(())
    }
}
