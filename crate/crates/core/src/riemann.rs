//! Riemann invariants `P = u + 2γ`, `Q = u - 2γ` and the transport speeds of
//! the bed-corrected characteristic system
//!
//! ```text
//! P_t + (γ + u + b_x / P_x) P_x = 0
//! Q_t - (γ - u - b_x / Q_x) Q_x = 0
//! ```
//!
//! Derivatives of the invariants use the chain rule on discrete derivatives of
//! the primitive fields, `P_x = u_x + (Γ_x - b_x) / γ`, so that
//! `γ P_x = (Γ_x - b_x) + γ u_x` holds node by node to round-off.

use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::bathymetry::Bathymetry;
use crate::error::{Error, Result};
use crate::fields::{ddx, FlowState, Grid};

/// Characteristic transport speed; infinite where the bed correction
/// `b_x / P_x` is singular.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Speed {
    Finite(f64),
    PosInfinity,
    NegInfinity,
}

impl Speed {
    pub fn is_infinite(&self) -> bool {
        !matches!(self, Speed::Finite(_))
    }

    pub fn finite(&self) -> Option<f64> {
        match self {
            Speed::Finite(v) => Some(*v),
            _ => None,
        }
    }

    /// Numeric value with the markers mapped to `±f64::INFINITY`.
    pub fn value(&self) -> f64 {
        match self {
            Speed::Finite(v) => *v,
            Speed::PosInfinity => f64::INFINITY,
            Speed::NegInfinity => f64::NEG_INFINITY,
        }
    }

    fn marker(sign: f64) -> Self {
        if sign >= 0.0 {
            Speed::PosInfinity
        } else {
            Speed::NegInfinity
        }
    }
}

impl fmt::Display for Speed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Speed::Finite(v) => write!(f, "{v}"),
            Speed::PosInfinity => f.write_str("+inf"),
            Speed::NegInfinity => f.write_str("-inf"),
        }
    }
}

/// Invariants, their slopes and transport speeds at every node.
#[derive(Debug, Clone, PartialEq)]
pub struct RiemannFields {
    pub gamma: Vec<f64>,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub p_x: Vec<f64>,
    pub q_x: Vec<f64>,
    /// `γ + u + b_x / P_x`.
    pub speed_p: Vec<Speed>,
    /// Transport speed of `Q`, i.e. `-(γ - u - b_x / Q_x)`.
    pub speed_q: Vec<Speed>,
    pub u_x: Vec<f64>,
    /// `Γ_x - b_x`, the gap between surface and seabed slopes.
    pub slope_gap: Vec<f64>,
    pub b_x: Vec<f64>,
    /// Threshold below which `|P_x|`, `|Q_x|` and `|b_x|` count as zero.
    pub eps_px: f64,
}

/// Scale-aware zero threshold `1e-8 * max|P| / dx`.
pub fn default_eps_px(p: &[f64], grid: &Grid) -> f64 {
    let pmax = p.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    1e-8 * pmax / grid.dx
}

/// Derives the invariant fields of `state`. `eps_px = None` selects
/// [`default_eps_px`].
pub fn compute(state: &FlowState, bathy: &Bathymetry, grid: &Grid, eps_px: Option<f64>) -> Result<RiemannFields> {
    if state.len() != grid.n {
        return Err(Error::LengthMismatch { expected: grid.n, got: state.len() });
    }
    let xs = grid.coords();
    let bed = bathy.sample(&xs)?;
    let b_x = bathy.sample_slope(&xs)?;
    let n = grid.n;

    let mut gamma = Vec::with_capacity(n);
    for i in 0..n {
        let depth = state.gamma_surface[i] - bed[i];
        if !(depth > 0.0) {
            return Err(Error::NearDry { t: state.t, node: i, x: xs[i], depth, h_min: 0.0 });
        }
        gamma.push(depth.sqrt());
    }
    let u = &state.velocity;
    let p: Vec<f64> = (0..n).map(|i| u[i] + 2.0 * gamma[i]).collect();
    let q: Vec<f64> = (0..n).map(|i| u[i] - 2.0 * gamma[i]).collect();

    let u_x = ddx(u, grid);
    let surf_x = ddx(&state.gamma_surface, grid);
    let slope_gap: Vec<f64> = (0..n).map(|i| surf_x[i] - b_x[i]).collect();
    let p_x: Vec<f64> = (0..n).map(|i| u_x[i] + slope_gap[i] / gamma[i]).collect();
    let q_x: Vec<f64> = (0..n).map(|i| u_x[i] - slope_gap[i] / gamma[i]).collect();

    let eps = eps_px.unwrap_or_else(|| default_eps_px(&p, grid));

    let speed_p = (0..n)
        .map(|i| {
            let base = gamma[i] + u[i];
            if p_x[i].abs() > eps {
                Speed::Finite(base + b_x[i] / p_x[i])
            } else if b_x[i].abs() > eps {
                // one-sided limit from upstream (P travels towards +x)
                let side = (0..i).rev().map(|j| p_x[j]).chain((i + 1..n).map(|j| p_x[j])).find(|v| v.abs() > eps);
                Speed::marker(b_x[i].signum() * side.map_or(1.0, f64::signum))
            } else {
                Speed::Finite(base)
            }
        })
        .collect();
    let speed_q = (0..n)
        .map(|i| {
            let base = -(gamma[i] - u[i]);
            if q_x[i].abs() > eps {
                Speed::Finite(base + b_x[i] / q_x[i])
            } else if b_x[i].abs() > eps {
                // Q travels towards -x, so upstream is the +x side
                let side = (i + 1..n).map(|j| q_x[j]).chain((0..i).rev().map(|j| q_x[j])).find(|v| v.abs() > eps);
                Speed::marker(b_x[i].signum() * side.map_or(1.0, f64::signum))
            } else {
                Speed::Finite(base)
            }
        })
        .collect();

    Ok(RiemannFields {
        gamma,
        p,
        q,
        p_x,
        q_x,
        speed_p,
        speed_q,
        u_x,
        slope_gap,
        b_x,
        eps_px: eps,
    })
}

/// Recovers `u = (P + Q) / 2` and `γ = (P - Q) / 4`.
pub fn reconstruct(p: &[f64], q: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch { expected: p.len(), got: q.len() });
    }
    let mut u = Vec::with_capacity(p.len());
    let mut gamma = Vec::with_capacity(p.len());
    for (i, (&pi, &qi)) in p.iter().zip(q).enumerate() {
        if !(pi > qi) {
            return Err(Error::InvalidInvariants { node: i, p: pi, q: qi });
        }
        u.push(0.5 * (pi + qi));
        gamma.push(0.25 * (pi - qi));
    }
    Ok((u, gamma))
}

/// Discrete residuals of `P_t + (γ + u) P_x = -b_x` and
/// `Q_t - (γ - u) Q_x = -b_x` between two consecutive states, with spatial
/// terms averaged over both time levels.
pub fn characteristic_residual(
    before: &FlowState,
    after: &FlowState,
    bathy: &Bathymetry,
    grid: &Grid,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if before.len() != grid.n || after.len() != grid.n {
        return Err(Error::GridMismatch);
    }
    let dt = after.t - before.t;
    if !(dt > 0.0) {
        return Err(Error::InvalidConfig(format!("states must advance in time, got dt = {dt}")));
    }
    // Thresholds do not matter here: only p, q and their slopes are used.
    let f0 = compute(before, bathy, grid, Some(0.0))?;
    let f1 = compute(after, bathy, grid, Some(0.0))?;
    let n = grid.n;
    let mut res_p = Vec::with_capacity(n);
    let mut res_q = Vec::with_capacity(n);
    for i in 0..n {
        let gamma = 0.5 * (f0.gamma[i] + f1.gamma[i]);
        let u = 0.5 * (before.velocity[i] + after.velocity[i]);
        let p_x = 0.5 * (f0.p_x[i] + f1.p_x[i]);
        let q_x = 0.5 * (f0.q_x[i] + f1.q_x[i]);
        let b_x = f0.b_x[i];
        res_p.push((f1.p[i] - f0.p[i]) / dt + (gamma + u) * p_x + b_x);
        res_q.push((f1.q[i] - f0.q[i]) / dt - (gamma - u) * q_x + b_x);
    }
    Ok((res_p, res_q))
}

impl RiemannFields {
    /// Writes the `x,gamma,p,q,p_x,q_x,speed_p,speed_q` CSV.
    pub fn write_csv<W: Write>(&self, grid: &Grid, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "gamma", "p", "q", "p_x", "q_x", "speed_p", "speed_q"])?;
        for i in 0..self.gamma.len() {
            w.write_record([
                grid.x(i).to_string(),
                self.gamma[i].to_string(),
                self.p[i].to_string(),
                self.q[i].to_string(),
                self.p_x[i].to_string(),
                self.q_x[i].to_string(),
                self.speed_p[i].to_string(),
                self.speed_q[i].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}
