//! Explicit finite-volume integration of the Airy shallow-water system.
//!
//! The scheme evolves depth `w = Γ - b` and discharge `m = w u` with an HLL
//! flux and hydrostatic reconstruction of the bed at each face, so that still
//! water over any bed is an exact discrete steady state. Gravity is one.
//!
//! An optional second-order mode reconstructs `w`, `Γ` and `u` linearly with
//! a minmod limiter, adds the centred bed source of the reconstruction, and
//! advances with two-stage Heun (SSP-RK2) stepping.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::bathymetry::Bathymetry;
use crate::detector::{self, CriticalEvent, DetectorConfig, EventTracker};
use crate::error::{Error, Result};
use crate::fields::{FlowState, Grid, DEFAULT_H_MIN};

const GHOSTS: usize = 2;

/// Surface elevation and velocity imposed outside the domain at time `t`.
pub trait BoundaryValues: fmt::Debug + Send + Sync {
    /// `(Γ, u)` at abscissa `x`, which lies just outside the grid.
    fn values(&self, t: f64, x: f64) -> (f64, f64);
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Periodic,
    /// Zero-gradient ghost cells (open sea).
    #[default]
    Transmissive,
    /// Mirrored depth, negated velocity (solid wall).
    Reflective,
    /// Time-dependent ghost values from a closed form.
    #[serde(skip)]
    Prescribed(Arc<dyn BoundaryValues>),
}

impl PartialEq for Boundary {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Boundary::Periodic, Boundary::Periodic)
            | (Boundary::Transmissive, Boundary::Transmissive)
            | (Boundary::Reflective, Boundary::Reflective) => true,
            (Boundary::Prescribed(a), Boundary::Prescribed(b)) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Order {
    #[default]
    First,
    Second,
}

/// Numerical flux. `Unbalanced` drops the hydrostatic bed terms entirely and
/// is only useful as a negative control for convergence checks.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FluxKind {
    #[default]
    Hll,
    Unbalanced,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub cfl: f64,
    pub t_end: f64,
    pub boundary: Boundary,
    pub h_min: f64,
    /// Time between recorded snapshots; `<= 0` records only the initial and
    /// final states.
    pub snapshot_interval: f64,
    pub order: Order,
    pub flux: FluxKind,
    /// Stop the run at the first inland/offshore rush event instead of
    /// integrating on past the singularity.
    pub stop_at_first_event: bool,
    pub max_steps: Option<usize>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            cfl: 0.45,
            t_end: 1.0,
            boundary: Boundary::Transmissive,
            h_min: DEFAULT_H_MIN,
            snapshot_interval: 0.0,
            order: Order::First,
            flux: FluxKind::Hll,
            stop_at_first_event: false,
            max_steps: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::InvalidConfig(format!("cfl must lie in (0, 1], got {}", self.cfl)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidConfig(format!("t_end must be >= 0, got {}", self.t_end)));
        }
        if !(self.h_min > 0.0) {
            return Err(Error::InvalidConfig(format!("h_min must be > 0, got {}", self.h_min)));
        }
        if !self.snapshot_interval.is_finite() {
            return Err(Error::InvalidConfig("snapshot_interval must be finite".into()));
        }
        Ok(())
    }
}

/// Conservative state `(w, m)` on a fixed grid and bed, advanced in place.
#[derive(Debug, Clone)]
pub struct Integrator {
    grid: Grid,
    config: SolverConfig,
    bed: Vec<f64>,
    ghost_bed: [f64; 2 * GHOSTS],
    t: f64,
    depth: Vec<f64>,
    discharge: Vec<f64>,
    scratch: Scratch,
}

#[derive(Debug, Clone, Default)]
struct Scratch {
    w: Vec<f64>,
    u: Vec<f64>,
    b: Vec<f64>,
    dw: Vec<f64>,
    dm: Vec<f64>,
}

impl Integrator {
    pub fn new(state: &FlowState, bathy: &Bathymetry, grid: &Grid, config: &SolverConfig) -> Result<Self> {
        config.validate()?;
        if state.len() != grid.n {
            return Err(Error::LengthMismatch { expected: grid.n, got: state.len() });
        }
        let xs = grid.coords();
        let bed = bathy.sample(&xs)?;
        state.check_wet(&bed, grid, config.h_min)?;
        let depth = state.depth(&bed);
        let discharge = depth.iter().zip(&state.velocity).map(|(w, u)| w * u).collect();
        let ghost_bed = ghost_bed(bathy, grid, &bed, &config.boundary);
        Ok(Self {
            grid: *grid,
            config: config.clone(),
            bed,
            ghost_bed,
            t: state.t,
            depth,
            discharge,
            scratch: Scratch::default(),
        })
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn bed(&self) -> &[f64] {
        &self.bed
    }

    pub fn depth(&self) -> &[f64] {
        &self.depth
    }

    /// Total water volume `Σ w_i dx`.
    pub fn mass(&self) -> f64 {
        self.depth.iter().sum::<f64>() * self.grid.dx
    }

    pub fn state(&self) -> FlowState {
        FlowState {
            t: self.t,
            gamma_surface: self.depth.iter().zip(&self.bed).map(|(w, b)| w + b).collect(),
            velocity: self.depth.iter().zip(&self.discharge).map(|(w, m)| m / w).collect(),
        }
    }

    /// CFL-limited time step `cfl * dx / max(|u| + sqrt(w))`.
    pub fn stable_dt(&self) -> f64 {
        let smax = self
            .depth
            .iter()
            .zip(&self.discharge)
            .map(|(w, m)| (m / w).abs() + w.sqrt())
            .fold(0.0, f64::max);
        if smax > 0.0 {
            self.config.cfl * self.grid.dx / smax
        } else {
            f64::INFINITY
        }
    }

    /// Advances by the stable step, and returns the step taken.
    pub fn advance(&mut self) -> Result<f64> {
        let dt = self.stable_dt();
        self.advance_by(dt)?;
        Ok(dt)
    }

    /// Advances by exactly `dt`, which the caller keeps within the CFL bound.
    pub fn advance_by(&mut self, dt: f64) -> Result<()> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::NumericBlowUp { t: self.t, node: 0, x: self.grid.x0 });
        }
        match self.config.order {
            Order::First => {
                let (dw, dm) = self.rates(&self.depth.clone(), &self.discharge.clone(), self.t);
                for i in 0..self.grid.n {
                    self.depth[i] += dt * dw[i];
                    self.discharge[i] += dt * dm[i];
                }
            }
            Order::Second => {
                let (w0, m0) = (self.depth.clone(), self.discharge.clone());
                let (dw, dm) = self.rates(&w0, &m0, self.t);
                let w1: Vec<f64> = (0..self.grid.n).map(|i| w0[i] + dt * dw[i]).collect();
                let m1: Vec<f64> = (0..self.grid.n).map(|i| m0[i] + dt * dm[i]).collect();
                self.check(&w1, &m1, self.t + dt)?;
                let (dw1, dm1) = self.rates(&w1, &m1, self.t + dt);
                for i in 0..self.grid.n {
                    self.depth[i] = 0.5 * (w0[i] + w1[i] + dt * dw1[i]);
                    self.discharge[i] = 0.5 * (m0[i] + m1[i] + dt * dm1[i]);
                }
            }
        }
        self.t += dt;
        self.check(&self.depth, &self.discharge, self.t)
    }

    fn check(&self, w: &[f64], m: &[f64], t: f64) -> Result<()> {
        for i in 0..self.grid.n {
            if !w[i].is_finite() || !m[i].is_finite() {
                return Err(Error::NumericBlowUp { t, node: i, x: self.grid.x(i) });
            }
        }
        for (i, &wi) in w.iter().enumerate() {
            if !(wi >= self.config.h_min) {
                return Err(Error::NearDry {
                    t,
                    node: i,
                    x: self.grid.x(i),
                    depth: wi,
                    h_min: self.config.h_min,
                });
            }
        }
        Ok(())
    }

    /// Fills the ghost-extended `w`, `u`, `b` scratch arrays.
    fn extend(&mut self, w: &[f64], m: &[f64], t: f64) {
        let n = self.grid.n;
        let total = n + 2 * GHOSTS;
        let s = &mut self.scratch;
        s.w.resize(total, 0.0);
        s.u.resize(total, 0.0);
        s.b.resize(total, 0.0);
        for i in 0..n {
            s.w[i + GHOSTS] = w[i];
            s.u[i + GHOSTS] = m[i] / w[i];
            s.b[i + GHOSTS] = self.bed[i];
        }
        for k in 0..GHOSTS {
            // k = 0 is the ghost adjacent to the domain
            let left = GHOSTS - 1 - k;
            let right = n + GHOSTS + k;
            s.b[left] = self.ghost_bed[GHOSTS - 1 - k];
            s.b[right] = self.ghost_bed[GHOSTS + k];
            let (src_l, src_r, sign) = match &self.config.boundary {
                Boundary::Periodic => (n - 1 - k, k, 1.0),
                Boundary::Transmissive => (0, n - 1, 1.0),
                Boundary::Reflective => (k, n - 1 - k, -1.0),
                Boundary::Prescribed(values) => {
                    let xl = self.grid.x0 - (k + 1) as f64 * self.grid.dx;
                    let xr = self.grid.x_last() + (k + 1) as f64 * self.grid.dx;
                    let (gl, ul) = values.values(t, xl);
                    let (gr, ur) = values.values(t, xr);
                    s.w[left] = gl - s.b[left];
                    s.u[left] = ul;
                    s.w[right] = gr - s.b[right];
                    s.u[right] = ur;
                    continue;
                }
            };
            s.w[left] = w[src_l];
            s.u[left] = sign * m[src_l] / w[src_l];
            s.w[right] = w[src_r];
            s.u[right] = sign * m[src_r] / w[src_r];
        }
    }

    /// Semi-discrete right-hand side `(dw/dt, dm/dt)`.
    fn rates(&mut self, w: &[f64], m: &[f64], t: f64) -> (Vec<f64>, Vec<f64>) {
        self.extend(w, m, t);
        let n = self.grid.n;
        let inv_dx = 1.0 / self.grid.dx;
        let order = self.config.order;
        let flux_kind = self.config.flux;
        let s = &mut self.scratch;
        s.dw.clear();
        s.dw.resize(n, 0.0);
        s.dm.clear();
        s.dm.resize(n, 0.0);

        // Face values inside each extended cell: (west, east) for w, Γ, u.
        let total = n + 2 * GHOSTS;
        let mut faces = vec![CellFaces::default(); total];
        for c in 0..total {
            let gamma = s.w[c] + s.b[c];
            let mut cf = CellFaces {
                w: (s.w[c], s.w[c]),
                gamma: (gamma, gamma),
                u: (s.u[c], s.u[c]),
            };
            if order == Order::Second && c > 0 && c + 1 < total {
                let gl = s.w[c - 1] + s.b[c - 1];
                let gr = s.w[c + 1] + s.b[c + 1];
                let sw = minmod(s.w[c] - s.w[c - 1], s.w[c + 1] - s.w[c]);
                let sg = minmod(gamma - gl, gr - gamma);
                let su = minmod(s.u[c] - s.u[c - 1], s.u[c + 1] - s.u[c]);
                cf.w = (s.w[c] - 0.5 * sw, s.w[c] + 0.5 * sw);
                cf.gamma = (gamma - 0.5 * sg, gamma + 0.5 * sg);
                cf.u = (s.u[c] - 0.5 * su, s.u[c] + 0.5 * su);
            }
            faces[c] = cf;
        }

        // Face j sits between extended cells j and j + 1; faces GHOSTS - 1
        // through n + GHOSTS - 1 bound the physical cells.
        let mut east_mom = vec![0.0; n]; // momentum flux leaving cell i eastward
        let mut west_mom = vec![0.0; n];
        for j in GHOSTS - 1..n + GHOSTS {
            let (l, r) = (&faces[j], &faces[j + 1]);
            let wl = l.w.1;
            let wr = r.w.0;
            let bl = l.gamma.1 - wl;
            let br = r.gamma.0 - wr;
            let ul = l.u.1;
            let ur = r.u.0;
            let (f_mass, f_mom, corr_l, corr_r) = match flux_kind {
                FluxKind::Hll => {
                    let b_face = bl.max(br);
                    let hl = (l.gamma.1 - b_face).max(0.0);
                    let hr = (r.gamma.0 - b_face).max(0.0);
                    let (fm, fp) = hll(hl, hl * ul, hr, hr * ur);
                    // ½(w² - h*²) returns the hydrostatic pressure lost by
                    // lowering the state to the face bed level.
                    (fm, fp, 0.5 * (wl - hl) * (wl + hl), 0.5 * (wr - hr) * (wr + hr))
                }
                FluxKind::Unbalanced => {
                    let (fm, fp) = hll(wl, wl * ul, wr, wr * ur);
                    (fm, fp, 0.0, 0.0)
                }
            };
            if j >= GHOSTS {
                let i = j - GHOSTS;
                s.dw[i] -= f_mass * inv_dx;
                east_mom[i] = f_mom + corr_l;
            }
            if j + 1 < n + GHOSTS {
                let i = j + 1 - GHOSTS;
                s.dw[i] += f_mass * inv_dx;
                west_mom[i] = f_mom + corr_r;
            }
        }
        for i in 0..n {
            let mut dm = -(east_mom[i] - west_mom[i]) * inv_dx;
            if order == Order::Second && flux_kind == FluxKind::Hll {
                let f = &faces[i + GHOSTS];
                let (bw, be) = (f.gamma.0 - f.w.0, f.gamma.1 - f.w.1);
                dm -= 0.5 * (f.w.0 + f.w.1) * (be - bw) * inv_dx;
            }
            s.dm[i] = dm;
        }
        (s.dw.clone(), s.dm.clone())
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct CellFaces {
    w: (f64, f64),
    gamma: (f64, f64),
    u: (f64, f64),
}

#[inline]
fn minmod(a: f64, b: f64) -> f64 {
    if a * b <= 0.0 {
        0.0
    } else if a.abs() < b.abs() {
        a
    } else {
        b
    }
}

/// HLL flux for `(w, m)` with unit gravity and Davis wave-speed bounds.
fn hll(wl: f64, ml: f64, wr: f64, mr: f64) -> (f64, f64) {
    if wl <= 0.0 && wr <= 0.0 {
        return (0.0, 0.0);
    }
    let ul = if wl > 0.0 { ml / wl } else { 0.0 };
    let ur = if wr > 0.0 { mr / wr } else { 0.0 };
    let fl = (ml, ml * ul + 0.5 * wl * wl);
    let fr = (mr, mr * ur + 0.5 * wr * wr);
    if wl == wr && ml == mr {
        return fl;
    }
    let (cl, cr) = (wl.sqrt(), wr.sqrt());
    let sl = (ul - cl).min(ur - cr);
    let sr = (ul + cl).max(ur + cr);
    if sl >= 0.0 {
        fl
    } else if sr <= 0.0 {
        fr
    } else {
        let inv = 1.0 / (sr - sl);
        (
            (sr * fl.0 - sl * fr.0 + sl * sr * (wr - wl)) * inv,
            (sr * fl.1 - sl * fr.1 + sl * sr * (mr - ml)) * inv,
        )
    }
}

fn ghost_bed(bathy: &Bathymetry, grid: &Grid, bed: &[f64], boundary: &Boundary) -> [f64; 2 * GHOSTS] {
    let n = grid.n;
    let mut g = [0.0; 2 * GHOSTS];
    for k in 0..GHOSTS {
        let (left, right) = match boundary {
            Boundary::Periodic => (bed[n - 1 - k], bed[k]),
            Boundary::Transmissive => (bed[0], bed[n - 1]),
            Boundary::Reflective => (bed[k], bed[n - 1 - k]),
            Boundary::Prescribed(_) => {
                let xl = grid.x0 - (k + 1) as f64 * grid.dx;
                let xr = grid.x_last() + (k + 1) as f64 * grid.dx;
                (bathy.eval(xl).unwrap_or(bed[0]), bathy.eval(xr).unwrap_or(bed[n - 1]))
            }
        };
        g[GHOSTS - 1 - k] = left;
        g[GHOSTS + k] = right;
    }
    g
}

/// Advances `state` by one CFL-limited step.
pub fn step(state: &FlowState, bathy: &Bathymetry, grid: &Grid, config: &SolverConfig) -> Result<FlowState> {
    let mut integ = Integrator::new(state, bathy, grid, config)?;
    integ.advance()?;
    Ok(integ.state())
}

/// A recorded state and the step index at which it was taken.
#[derive(Debug, Clone, PartialEq)]
pub struct Recorded {
    pub step: usize,
    pub state: FlowState,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub snapshots: Vec<Recorded>,
    pub events: Vec<CriticalEvent>,
    pub steps: usize,
    pub final_state: FlowState,
    /// Set once a rush event has been seen; the continuum model no longer
    /// holds past that point.
    pub post_singular: bool,
    /// `true` when the run ended early on `stop_at_first_event`.
    pub stopped_early: bool,
}

/// Integrates to `config.t_end`, recording snapshots and passing every state
/// to the detector. Only onsets of events are reported: an event that
/// persists across steps at about the same place is logged once.
pub fn run(
    initial: &FlowState,
    bathy: &Bathymetry,
    grid: &Grid,
    config: &SolverConfig,
    detector_config: &DetectorConfig,
) -> Result<RunOutput> {
    run_with(initial, bathy, grid, config, detector_config, |_, _, _| {})
}

/// As [`run`], calling `observe` with the step index, every state including
/// the initial one, and the events that state starts.
pub fn run_with(
    initial: &FlowState,
    bathy: &Bathymetry,
    grid: &Grid,
    config: &SolverConfig,
    detector_config: &DetectorConfig,
    mut observe: impl FnMut(usize, &FlowState, &[CriticalEvent]),
) -> Result<RunOutput> {
    detector_config.validate()?;
    let mut integ = Integrator::new(initial, bathy, grid, config)?;
    let mut det = detector_config.clone();
    if det.gamma_ref.is_none() {
        det.gamma_ref = Some(integ.depth().iter().map(|w| w.sqrt()).fold(0.0, f64::max));
    }
    let mut tracker = EventTracker::new(3.0 * grid.dx);
    let mut events = Vec::new();
    let mut snapshots = vec![Recorded { step: 0, state: initial.clone() }];
    let mut post_singular = false;
    let mut stopped_early = false;
    let mut steps = 0usize;

    let mut current = initial.clone();
    let mut analyse = |step: usize, state: &FlowState, events: &mut Vec<CriticalEvent>| -> Result<bool> {
        let found = detector::detect(state, bathy, grid, &det)?;
        let fresh = tracker.update(found);
        observe(step, state, &fresh);
        let rush = fresh.iter().any(|e| e.classification.is_rush());
        events.extend(fresh);
        Ok(rush)
    };
    post_singular |= analyse(0, &current, &mut events)?;
    if post_singular && config.stop_at_first_event {
        stopped_early = true;
    }

    let t_end = config.t_end;
    let interval = config.snapshot_interval;
    let mut next_snap = if interval > 0.0 { interval } else { f64::INFINITY };
    // Relative slack so that accumulated round-off does not produce a
    // vanishing final step.
    let t_eps = 1e-12 * t_end.abs().max(1.0);
    while !stopped_early && integ.time() < t_end - t_eps {
        if config.max_steps.is_some_and(|m| steps >= m) {
            break;
        }
        let t = integ.time();
        let mut dt = integ.stable_dt();
        let target = next_snap.min(t_end);
        let mut hit_snapshot = false;
        if t + dt >= target - t_eps {
            dt = target - t;
            hit_snapshot = target == next_snap;
        }
        integ
            .advance_by(dt)
            .map_err(|e| Error::AtStep { step: steps + 1, source: Box::new(e) })?;
        steps += 1;
        current = integ.state();
        if hit_snapshot {
            snapshots.push(Recorded { step: steps, state: current.clone() });
            while next_snap <= integ.time() + t_eps {
                next_snap += interval;
            }
        }
        let rush = analyse(steps, &current, &mut events)
            .map_err(|e| Error::AtStep { step: steps, source: Box::new(e) })?;
        post_singular |= rush;
        if rush && config.stop_at_first_event {
            stopped_early = true;
        }
    }
    if snapshots.last().map(|r| r.step) != Some(steps) {
        snapshots.push(Recorded { step: steps, state: current.clone() });
    }
    Ok(RunOutput {
        snapshots,
        events,
        steps,
        final_state: current,
        post_singular,
        stopped_early,
    })
}
