//! Uniform grids, flow states and the finite-difference operators shared by
//! the solver and the analysis modules.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::bathymetry::Bathymetry;
use crate::error::{Error, Result};

/// Smallest grid the derivative stencils support.
pub const MIN_NODES: usize = 8;

/// Default wet-depth floor (nondimensional).
pub const DEFAULT_H_MIN: f64 = 1e-6;

/// Uniform 1D grid; node `i` sits at `x0 + i * dx`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub x0: f64,
    pub dx: f64,
    pub n: usize,
}

impl Grid {
    pub fn new(x0: f64, dx: f64, n: usize) -> Result<Self> {
        if !(dx > 0.0 && dx.is_finite()) {
            return Err(Error::InvalidGrid(format!("dx must be positive and finite, got {dx}")));
        }
        if !x0.is_finite() {
            return Err(Error::InvalidGrid(format!("x0 must be finite, got {x0}")));
        }
        if n < MIN_NODES {
            return Err(Error::InvalidGrid(format!("need at least {MIN_NODES} nodes, got {n}")));
        }
        Ok(Self { x0, dx, n })
    }

    /// `n` cell centres tiling `(lo, hi)`.
    pub fn cell_centered(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(hi > lo) {
            return Err(Error::InvalidGrid(format!("empty interval ({lo}, {hi})")));
        }
        let dx = (hi - lo) / n as f64;
        Self::new(lo + 0.5 * dx, dx, n)
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.dx
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.x(i)).collect()
    }

    pub fn x_last(&self) -> f64 {
        self.x(self.n - 1)
    }

    /// Cell faces bounding the nodes, `x0 - dx/2 .. x_last + dx/2`.
    pub fn extent(&self) -> (f64, f64) {
        (self.x0 - 0.5 * self.dx, self.x_last() + 0.5 * self.dx)
    }
}

/// Surface elevation `Γ` and velocity `u` at every node at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    pub t: f64,
    pub gamma_surface: Vec<f64>,
    pub velocity: Vec<f64>,
}

impl FlowState {
    pub fn new(t: f64, gamma_surface: Vec<f64>, velocity: Vec<f64>, grid: &Grid) -> Result<Self> {
        for len in [gamma_surface.len(), velocity.len()] {
            if len != grid.n {
                return Err(Error::LengthMismatch { expected: grid.n, got: len });
            }
        }
        Ok(Self { t, gamma_surface, velocity })
    }

    /// Still water at surface level `level`.
    pub fn lake_at_rest(level: f64, grid: &Grid) -> Self {
        Self {
            t: 0.0,
            gamma_surface: vec![level; grid.n],
            velocity: vec![0.0; grid.n],
        }
    }

    pub fn len(&self) -> usize {
        self.gamma_surface.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gamma_surface.is_empty()
    }

    /// Water depth `Γ - b` at every node.
    pub fn depth(&self, bed: &[f64]) -> Vec<f64> {
        self.gamma_surface.iter().zip(bed).map(|(g, b)| g - b).collect()
    }

    /// Checks the wetness invariant `Γ - b >= h_min` and finiteness.
    pub fn check_wet(&self, bed: &[f64], grid: &Grid, h_min: f64) -> Result<()> {
        if self.len() != grid.n {
            return Err(Error::LengthMismatch { expected: grid.n, got: self.len() });
        }
        for (i, ((g, u), b)) in self.gamma_surface.iter().zip(&self.velocity).zip(bed).enumerate() {
            if !g.is_finite() || !u.is_finite() {
                return Err(Error::NumericBlowUp { t: self.t, node: i, x: grid.x(i) });
            }
            let depth = g - b;
            if !(depth >= h_min) {
                return Err(Error::NearDry { t: self.t, node: i, x: grid.x(i), depth, h_min });
            }
        }
        Ok(())
    }

    /// Writes the `x,gamma_surface,u,b` snapshot CSV.
    pub fn write_csv<W: Write>(&self, grid: &Grid, bathy: &Bathymetry, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "gamma_surface", "u", "b"])?;
        for i in 0..grid.n {
            let x = grid.x(i);
            w.write_record([
                x.to_string(),
                self.gamma_surface[i].to_string(),
                self.velocity[i].to_string(),
                bathy.eval(x)?.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Contents of a snapshot file.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub grid: Grid,
    pub state: FlowState,
    /// Bed elevation column as stored in the file.
    pub bed: Vec<f64>,
}

impl Snapshot {
    /// Parses a `x,gamma_surface,u,b` CSV. The abscissae must be uniformly
    /// spaced; the snapshot time is not stored in the file and is set to 0.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
        let headers = rdr.headers()?.clone();
        let expected = ["x", "gamma_surface", "u", "b"];
        if headers.len() != expected.len() || headers.iter().zip(expected).any(|(a, b)| a != b) {
            return Err(Error::Parse(format!(
                "snapshot header must be `x,gamma_surface,u,b`, got `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut cols: [Vec<f64>; 4] = Default::default();
        for (row, record) in rdr.records().enumerate() {
            let record = record?;
            if record.len() != 4 {
                return Err(Error::Parse(format!("row {}: expected 4 fields", row + 2)));
            }
            for (c, col) in cols.iter_mut().enumerate() {
                let v = record[c].parse::<f64>().map_err(|e| {
                    Error::Parse(format!("row {}: `{}`: {e}", row + 2, &record[c]))
                })?;
                col.push(v);
            }
        }
        let [xs, gamma_surface, velocity, bed] = cols;
        if xs.len() < MIN_NODES {
            return Err(Error::Parse(format!("snapshot has {} rows, need {MIN_NODES}", xs.len())));
        }
        let n = xs.len();
        let dx = (xs[n - 1] - xs[0]) / (n - 1) as f64;
        let grid = Grid::new(xs[0], dx, n).map_err(|e| Error::Parse(e.to_string()))?;
        for (i, x) in xs.iter().enumerate() {
            if (x - grid.x(i)).abs() > 1e-6 * dx {
                return Err(Error::Parse(format!("abscissa x[{i}] = {x} is not on a uniform grid")));
            }
        }
        let state = FlowState::new(0.0, gamma_surface, velocity, &grid)?;
        Ok(Self { grid, state, bed })
    }
}

/// First derivative: three-point central differences inside, second-order
/// one-sided stencils at the two end nodes.
pub fn ddx(field: &[f64], grid: &Grid) -> Vec<f64> {
    assert_eq!(field.len(), grid.n, "field length must match the grid");
    let n = grid.n;
    let inv2dx = 0.5 / grid.dx;
    let mut out = vec![0.0; n];
    out[0] = (-3.0 * field[0] + 4.0 * field[1] - field[2]) * inv2dx;
    for i in 1..n - 1 {
        out[i] = (field[i + 1] - field[i - 1]) * inv2dx;
    }
    out[n - 1] = (3.0 * field[n - 1] - 4.0 * field[n - 2] + field[n - 3]) * inv2dx;
    out
}

/// Second derivative with the same stencil layout as [`ddx`].
pub fn d2dx2(field: &[f64], grid: &Grid) -> Vec<f64> {
    assert_eq!(field.len(), grid.n, "field length must match the grid");
    let n = grid.n;
    let inv = 1.0 / (grid.dx * grid.dx);
    let mut out = vec![0.0; n];
    out[0] = (2.0 * field[0] - 5.0 * field[1] + 4.0 * field[2] - field[3]) * inv;
    for i in 1..n - 1 {
        out[i] = (field[i + 1] - 2.0 * field[i] + field[i - 1]) * inv;
    }
    out[n - 1] = (2.0 * field[n - 1] - 5.0 * field[n - 2] + 4.0 * field[n - 3] - field[n - 4]) * inv;
    out
}

/// Linear interpolation of nodal `values` at `x`. `None` outside the nodes.
pub fn interpolate(values: &[f64], grid: &Grid, x: f64) -> Option<f64> {
    let s = (x - grid.x0) / grid.dx;
    if !(s >= 0.0 && s <= (grid.n - 1) as f64) {
        return None;
    }
    let i = (s.floor() as usize).min(grid.n - 2);
    let frac = s - i as f64;
    Some(values[i] + frac * (values[i + 1] - values[i]))
}
