//! Browser bindings: a shoaling pulse over the safe seabed with live rush
//! detection, the degenerate-limit classifier and the long-wave speed.

use shoalwave::detector::{self, classify_degenerate, DegenerateSpec, EventTracker};
use shoalwave::nondim::sound_speed;
use shoalwave::solver::Integrator;
use shoalwave::{riemann, Bathymetry, Boundary, CriticalEvent, DetectorConfig, Error, FlowState, Grid, SolverConfig};
use wasm_bindgen::prelude::*;

const DOMAIN: (f64, f64) = (-4.0, 4.0);
const PULSE_CENTER: f64 = -2.0;
const PULSE_WIDTH: f64 = 0.5;

fn to_js(e: Error) -> JsValue {
    JsValue::from_str(&e.to_string())
}

/// A pulse running up the seabed `-h + k (tanh x - 1)` towards a wall at
/// the right end of `[-4, 4]`.
#[wasm_bindgen]
pub struct Shoaling {
    integ: Integrator,
    bathy: Bathymetry,
    grid: Grid,
    detector: DetectorConfig,
    tracker: EventTracker,
    events: Vec<CriticalEvent>,
    current: FlowState,
}

impl Shoaling {
    pub fn try_new(shelf_depth: f64, slope_height: f64, amplitude: f64, n: usize) -> Result<Self, Error> {
        let bathy = Bathymetry::tanh_safe(shelf_depth, slope_height)?;
        let grid = Grid::cell_centered(DOMAIN.0, DOMAIN.1, n)?;
        let xs = grid.coords();
        let bed = bathy.sample(&xs)?;
        let eta: Vec<f64> = xs.iter().map(|x| amplitude * (-((x - PULSE_CENTER) / PULSE_WIDTH).powi(2)).exp()).collect();
        let u = eta.iter().zip(&bed).map(|(e, b)| e / (-b).sqrt()).collect();
        let state = FlowState::new(0.0, eta, u, &grid)?;
        let config = SolverConfig { boundary: Boundary::Reflective, t_end: f64::MAX, ..SolverConfig::default() };
        let integ = Integrator::new(&state, &bathy, &grid, &config)?;
        let gamma_ref = integ.depth().iter().map(|w| w.sqrt()).fold(0.0, f64::max);
        let detector = DetectorConfig { gamma_ref: Some(gamma_ref), ..DetectorConfig::default() };
        let mut sim = Self {
            integ,
            bathy,
            grid,
            detector,
            tracker: EventTracker::new(3.0 * grid.dx),
            events: Vec::new(),
            current: state,
        };
        sim.analyse()?;
        Ok(sim)
    }

    fn analyse(&mut self) -> Result<(), Error> {
        let found = detector::detect(&self.current, &self.bathy, &self.grid, &self.detector)?;
        self.events.extend(self.tracker.update(found));
        Ok(())
    }

    /// Integrates for `duration`, analysing every step.
    pub fn try_advance(&mut self, duration: f64) -> Result<(), Error> {
        let target = self.integ.time() + duration;
        while self.integ.time() < target - 1e-12 {
            let dt = self.integ.stable_dt().min(target - self.integ.time());
            self.integ.advance_by(dt)?;
            self.current = self.integ.state();
            self.analyse()?;
        }
        Ok(())
    }

    pub fn try_p_x(&self) -> Result<Vec<f64>, Error> {
        Ok(riemann::compute(&self.current, &self.bathy, &self.grid, None)?.p_x)
    }

    pub fn events(&self) -> &[CriticalEvent] {
        &self.events
    }
}

#[wasm_bindgen]
impl Shoaling {
    #[wasm_bindgen(constructor)]
    pub fn new(shelf_depth: f64, slope_height: f64, amplitude: f64, n: usize) -> Result<Shoaling, JsValue> {
        Self::try_new(shelf_depth, slope_height, amplitude, n).map_err(to_js)
    }

    pub fn advance(&mut self, duration: f64) -> Result<(), JsValue> {
        self.try_advance(duration).map_err(to_js)
    }

    pub fn time(&self) -> f64 {
        self.integ.time()
    }

    pub fn x(&self) -> Vec<f64> {
        self.grid.coords()
    }

    pub fn surface(&self) -> Vec<f64> {
        self.current.gamma_surface.clone()
    }

    pub fn bed(&self) -> Vec<f64> {
        self.integ.bed().to_vec()
    }

    pub fn velocity(&self) -> Vec<f64> {
        self.current.velocity.clone()
    }

    /// `P_x = u_x + (Γ_x - b_x) / γ` at every node.
    #[wasm_bindgen(js_name = pX)]
    pub fn p_x(&self) -> Result<Vec<f64>, JsValue> {
        self.try_p_x().map_err(to_js)
    }

    /// Events so far as a JSON array.
    #[wasm_bindgen(js_name = eventsJson)]
    pub fn events_json(&self) -> String {
        serde_json::to_string(&self.events).unwrap_or_else(|_| "[]".into())
    }

    #[wasm_bindgen(js_name = eventCount)]
    pub fn event_count(&self) -> usize {
        self.events.len()
    }
}

/// Limit regime of `b_x / P_x` where the bed flattens.
pub fn degenerate_regime(p: u32, q: u32, b1: f64, c1: f64) -> Result<String, Error> {
    let spec = DegenerateSpec { p_exp: p, q_exp: q, b1, c1, gamma_local: 1.0 };
    Ok(format!("{:?}", classify_degenerate(&spec)?))
}

#[wasm_bindgen(js_name = classifyDegenerate)]
pub fn classify_degenerate_js(p: u32, q: u32, b1: f64, c1: f64) -> Result<String, JsValue> {
    degenerate_regime(p, q, b1, c1).map_err(to_js)
}

/// `sqrt(g * depth)` in km/h.
#[wasm_bindgen(js_name = soundSpeedKmh)]
pub fn sound_speed_kmh(depth: f64, gravity: f64) -> Result<f64, JsValue> {
    sound_speed(depth, gravity).map(|s| s.kilometers_per_hour).map_err(to_js)
}
