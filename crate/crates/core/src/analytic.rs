//! Closed-form flow over a linear bed `b(x) = B0 + B1 x` on `(x1, x2)`:
//!
//! ```text
//! u(t, x) = a(t) = A0 - B1 t
//! γ       = sqrt(c0 - B0)
//! Γ(t, x) = c0 + B1 x
//! ```
//!
//! The surface runs parallel to the bed and the current is uniform, so
//! `u_x = 0`, `Γ_x - b_x = 0` and hence `P_x ≡ 0` while `b_x = B1`. It serves
//! both as a solver oracle and as the canonical degenerate-plateau fixture.

use serde::Serialize;

use crate::bathymetry::Bathymetry;
use crate::error::{Error, Result};
use crate::fields::{FlowState, Grid};
use crate::solver::{Boundary, BoundaryValues, Integrator, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearBottomSolution {
    pub a0: f64,
    pub b0: f64,
    pub b1: f64,
    pub c0: f64,
    /// Surface drift `c'(t)`; zero for genuine solutions. A nonzero value
    /// turns the family into a non-solution the residuals must detect.
    pub c1: f64,
    pub x1: f64,
    pub x2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolutionPoint {
    pub u: f64,
    pub surface: f64,
    pub gamma: f64,
}

impl LinearBottomSolution {
    pub fn new(a0: f64, b0: f64, b1: f64, c0: f64, x1: f64, x2: f64) -> Result<Self> {
        if !(x1 < x2) {
            return Err(Error::InvalidConfig(format!("validity interval ({x1}, {x2}) is empty")));
        }
        if !(c0 - b0 > 0.0) {
            return Err(Error::InvalidConfig(format!("need c0 - B0 > 0, got c0 = {c0}, B0 = {b0}")));
        }
        Ok(Self { a0, b0, b1, c0, c1: 0.0, x1, x2 })
    }

    pub fn with_surface_drift(mut self, c1: f64) -> Self {
        self.c1 = c1;
        self
    }

    pub fn bathymetry(&self) -> Bathymetry {
        Bathymetry::linear(self.b0, self.b1)
    }

    /// `a(t) = A0 - B1 t`
    pub fn current(&self, t: f64) -> f64 {
        self.a0 - self.b1 * t
    }

    fn level(&self, t: f64) -> f64 {
        self.c0 + self.c1 * t
    }

    fn check(&self, x: f64) -> Result<()> {
        if x > self.x1 && x < self.x2 {
            Ok(())
        } else {
            Err(Error::Domain { x, lo: self.x1, hi: self.x2 })
        }
    }

    pub fn eval(&self, t: f64, x: f64) -> Result<SolutionPoint> {
        self.check(x)?;
        let c = self.level(t);
        Ok(SolutionPoint {
            u: self.current(t),
            surface: c + self.b1 * x,
            gamma: (c - self.b0).sqrt(),
        })
    }

    /// Residuals of
    ///
    /// ```text
    /// γ_t + (γ + a) γ_x + (a' + b') / 2
    /// γ_t - (γ - a) γ_x - (a' + b') / 2
    /// γ_t + a γ_x
    /// ```
    ///
    /// with `γ² = c(t) - a'(t) x - b(x)` differentiated in closed form.
    pub fn residuals(&self, t: f64, x: f64) -> Result<(f64, f64, f64)> {
        self.check(x)?;
        let bathy = self.bathymetry();
        let a = self.current(t);
        let a_prime = -self.b1;
        let a_second = 0.0;
        let b_prime = bathy.slope(x)?;
        let gamma2 = self.level(t) - a_prime * x - bathy.eval(x)?;
        if !(gamma2 > 0.0) {
            return Err(Error::NearDry { t, node: 0, x, depth: gamma2, h_min: 0.0 });
        }
        let gamma = gamma2.sqrt();
        let forcing = a_prime + b_prime;
        let gamma_x = -forcing / (2.0 * gamma);
        let gamma_t = (self.c1 - a_second * x) / (2.0 * gamma);
        Ok((
            gamma_t + (gamma + a) * gamma_x + 0.5 * forcing,
            gamma_t - (gamma - a) * gamma_x - 0.5 * forcing,
            gamma_t + a * gamma_x,
        ))
    }

    /// Samples the solution at `t = 0` on `grid`, whose nodes must lie
    /// inside `(x1, x2)`.
    pub fn initial_state(&self, grid: &Grid, h_min: f64) -> Result<FlowState> {
        self.check(grid.x0)?;
        self.check(grid.x_last())?;
        if self.c0 - self.b0 < h_min {
            return Err(Error::NearDry {
                t: 0.0,
                node: 0,
                x: grid.x0,
                depth: self.c0 - self.b0,
                h_min,
            });
        }
        let xs = grid.coords();
        let mut surface = Vec::with_capacity(grid.n);
        let mut velocity = Vec::with_capacity(grid.n);
        for &x in &xs {
            let p = self.eval(0.0, x)?;
            surface.push(p.surface);
            velocity.push(p.u);
        }
        FlowState::new(0.0, surface, velocity, grid)
    }

    /// Largest deviation of `state` from the closed form, over `u` and `Γ`.
    pub fn linf_error(&self, state: &FlowState, grid: &Grid) -> Result<f64> {
        let mut err = 0.0f64;
        for i in 0..grid.n {
            let p = self.eval(state.t, grid.x(i))?;
            err = err
                .max((state.velocity[i] - p.u).abs())
                .max((state.gamma_surface[i] - p.surface).abs());
        }
        Ok(err)
    }
}

impl BoundaryValues for LinearBottomSolution {
    fn values(&self, t: f64, x: f64) -> (f64, f64) {
        (self.level(t) + self.b1 * x, self.current(t))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceLevel {
    pub n: usize,
    pub dx: f64,
    pub linf_error: f64,
    /// Observed order against the previous (coarser) level.
    pub order: Option<f64>,
}

/// Errors at or below this are treated as exact reproduction.
pub const EXACT_ERROR: f64 = 1e-12;

/// Runs the solver from the closed form at each resolution on `(x1, x2)`,
/// with ghost cells fed by the closed form, and compares at `t_end`.
pub fn convergence_study(
    sol: &LinearBottomSolution,
    resolutions: &[usize],
    t_end: f64,
    base: &SolverConfig,
) -> Result<Vec<ConvergenceLevel>> {
    let bathy = sol.bathymetry();
    let config = SolverConfig {
        t_end,
        boundary: Boundary::Prescribed(std::sync::Arc::new(*sol)),
        snapshot_interval: 0.0,
        ..base.clone()
    };
    let mut levels: Vec<ConvergenceLevel> = Vec::with_capacity(resolutions.len());
    for &n in resolutions {
        let grid = Grid::cell_centered(sol.x1, sol.x2, n)?;
        let state = sol.initial_state(&grid, config.h_min)?;
        let final_state = integrate_to(&state, &bathy, &grid, &config)?;
        let linf_error = sol.linf_error(&final_state, &grid)?;
        let order = levels.last().map(|prev| {
            if prev.linf_error <= EXACT_ERROR && linf_error <= EXACT_ERROR {
                f64::INFINITY
            } else {
                (prev.linf_error / linf_error).ln() / (prev.dx / grid.dx).ln()
            }
        });
        levels.push(ConvergenceLevel { n, dx: grid.dx, linf_error, order });
    }
    Ok(levels)
}

fn integrate_to(state: &FlowState, bathy: &Bathymetry, grid: &Grid, config: &SolverConfig) -> Result<FlowState> {
    let mut integ = Integrator::new(state, bathy, grid, config)?;
    let t_eps = 1e-12 * config.t_end.max(1.0);
    let mut steps = 0usize;
    while integ.time() < config.t_end - t_eps {
        let dt = integ.stable_dt().min(config.t_end - integ.time());
        steps += 1;
        integ
            .advance_by(dt)
            .map_err(|e| Error::AtStep { step: steps, source: Box::new(e) })?;
    }
    Ok(integ.state())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::ddx;
    use approx::assert_abs_diff_eq;

    fn reference() -> LinearBottomSolution {
        LinearBottomSolution::new(0.0, -1.0, 0.1, 0.0, -1.0, 1.0).unwrap()
    }

    #[test]
    fn closed_form_values() {
        let p = reference().eval(0.0, 0.0).unwrap();
        assert_eq!((p.u, p.gamma, p.surface), (0.0, 1.0, 0.0));
        let p = reference().eval(2.0, 0.5).unwrap();
        assert_abs_diff_eq!(p.u, -0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(p.surface, 0.05, epsilon = 1e-15);
    }

    #[test]
    fn flat_bed_is_steady_uniform_flow() {
        let sol = LinearBottomSolution::new(0.3, -2.0, 0.0, 0.5, -1.0, 1.0).unwrap();
        for t in [0.0, 1.0, 7.5] {
            for x in [-0.9, 0.0, 0.7] {
                let p = sol.eval(t, x).unwrap();
                assert_eq!(p.u, 0.3);
                assert_eq!(p.surface, 0.5);
                assert_eq!(p.gamma, 2.5f64.sqrt());
                assert_eq!(sol.residuals(t, x).unwrap(), (0.0, 0.0, 0.0));
            }
        }
    }

    #[test]
    fn surface_parallels_bed() {
        let sol = reference();
        let bathy = sol.bathymetry();
        let h = 1e-3;
        for x in [-0.5, 0.0, 0.25] {
            let surf_x = (sol.eval(0.3, x + h).unwrap().surface - sol.eval(0.3, x - h).unwrap().surface) / (2.0 * h);
            assert_abs_diff_eq!(surf_x - bathy.slope(x).unwrap(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn residuals_vanish_on_members() {
        let sol = LinearBottomSolution::new(0.4, -1.5, -0.3, 0.2, -2.0, 3.0).unwrap();
        for t in [0.0, 0.5, 2.0] {
            for x in [-1.9, 0.0, 2.9] {
                let (r1, r2, r3) = sol.residuals(t, x).unwrap();
                assert!(r1.abs() <= 1e-14 && r2.abs() <= 1e-14 && r3.abs() <= 1e-14);
            }
        }
    }

    #[test]
    fn residuals_flag_surface_drift() {
        let sol = reference().with_surface_drift(0.1);
        let (_, _, r3) = sol.residuals(0.0, 0.3).unwrap();
        assert_abs_diff_eq!(r3, 0.1 / 2.0, epsilon = 1e-15);
        let (_, _, r3) = sol.residuals(1.0, 0.3).unwrap();
        assert_abs_diff_eq!(r3, 0.1 / (2.0 * 1.1f64.sqrt()), epsilon = 1e-15);
    }

    #[test]
    fn domain_is_open_interval() {
        let sol = reference();
        assert!(sol.eval(0.0, 1.0).is_err());
        assert!(sol.eval(0.0, -1.0).is_err());
        assert!(sol.residuals(0.0, 2.0).is_err());
    }

    #[test]
    fn sampled_initial_state() {
        let sol = reference();
        let grid = Grid::cell_centered(-1.0, 1.0, 20).unwrap();
        let s = sol.initial_state(&grid, 1e-6).unwrap();
        assert!(s.velocity.iter().all(|&u| u == 0.0));
        assert_abs_diff_eq!(s.gamma_surface[0], 0.1 * grid.x0, epsilon = 1e-15);
        let d = ddx(&s.gamma_surface, &grid);
        assert!(d.iter().all(|v| (v - 0.1).abs() < 1e-12));

        let outside = Grid::new(0.5, 0.1, 10).unwrap();
        assert!(matches!(sol.initial_state(&outside, 1e-6), Err(Error::Domain { .. })));
        let shallow = LinearBottomSolution::new(0.0, -1e-8, 0.1, 0.0, -1.0, 1.0).unwrap();
        assert!(shallow.initial_state(&grid, 1e-6).unwrap_err().is_near_dry());
    }

    #[test]
    fn invalid_parameters() {
        assert!(LinearBottomSolution::new(0.0, 1.0, 0.1, 0.0, -1.0, 1.0).is_err());
        assert!(LinearBottomSolution::new(0.0, -1.0, 0.1, 0.0, 1.0, -1.0).is_err());
    }

    #[test]
    fn solver_converges_first_order() {
        let levels = convergence_study(&reference(), &[100, 200], 0.5, &SolverConfig::default()).unwrap();
        let order = levels[1].order.unwrap();
        assert!(levels[1].linf_error < levels[0].linf_error);
        assert!((0.9..=2.2).contains(&order), "order {order}, levels {levels:?}");
    }

    #[test]
    fn flat_case_is_reproduced_exactly() {
        let sol = LinearBottomSolution::new(0.2, -1.0, 0.0, 0.0, -1.0, 1.0).unwrap();
        let levels = convergence_study(&sol, &[50, 100], 0.5, &SolverConfig::default()).unwrap();
        assert!(levels.iter().all(|l| l.linf_error <= EXACT_ERROR), "{levels:?}");
        assert_eq!(levels[1].order, Some(f64::INFINITY));
    }
}
