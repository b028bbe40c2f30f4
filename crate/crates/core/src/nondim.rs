//! Dimensional scales and the shallow-water criterion `δ² ≪ ε`.
//!
//! Lengths scale with the wavelength `λ` horizontally and the depth `h`
//! vertically, time with `λ / c` where `c = sqrt(g h)`, and the velocity
//! potential with `c λ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default bound on `δ² / ε` below which waves count as shallow.
pub const DEFAULT_RATIO_MAX: f64 = 0.1;

const MS_TO_KMH: f64 = 3.6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NondimParams {
    wavelength: f64,
    depth: f64,
    gravity: f64,
    amplitude: f64,
}

impl NondimParams {
    pub fn new(wavelength: f64, depth: f64, gravity: f64, amplitude: f64) -> Result<Self> {
        for (name, v) in [("wavelength", wavelength), ("depth", depth), ("gravity", gravity)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        if !(amplitude >= 0.0 && amplitude.is_finite()) {
            return Err(Error::InvalidConfig(format!("amplitude must be >= 0, got {amplitude}")));
        }
        Ok(Self { wavelength, depth, gravity, amplitude })
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn depth(&self) -> f64 {
        self.depth
    }

    pub fn gravity(&self) -> f64 {
        self.gravity
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    /// `δ = h / λ`
    pub fn delta(&self) -> f64 {
        self.depth / self.wavelength
    }

    /// `ε = a / h`
    pub fn epsilon(&self) -> f64 {
        self.amplitude / self.depth
    }

    /// `c = sqrt(g h)`
    pub fn sound_speed(&self) -> f64 {
        (self.gravity * self.depth).sqrt()
    }

    pub fn to_dimensionless(&self, p: FlowPoint) -> FlowPoint {
        let c = self.sound_speed();
        FlowPoint {
            t: p.t * c / self.wavelength,
            x: p.x / self.wavelength,
            y: p.y / self.depth,
            surface: p.surface / self.depth,
            potential: p.potential / (c * self.wavelength),
        }
    }

    pub fn to_dimensional(&self, p: FlowPoint) -> FlowPoint {
        let c = self.sound_speed();
        FlowPoint {
            t: p.t * self.wavelength / c,
            x: p.x * self.wavelength,
            y: p.y * self.depth,
            surface: p.surface * self.depth,
            potential: p.potential * c * self.wavelength,
        }
    }
}

/// Time, position, surface elevation `Γ` and velocity potential `Φ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowPoint {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub surface: f64,
    pub potential: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShallownessReport {
    pub delta: f64,
    pub delta2: f64,
    pub epsilon: f64,
    /// `δ² / ε`, infinite when `ε = 0`.
    pub ratio: f64,
    pub ratio_max: f64,
    pub is_shallow: bool,
}

/// Shallow when `δ² <= ratio_max * ε`.
pub fn shallowness_report(params: &NondimParams, ratio_max: f64) -> ShallownessReport {
    let delta = params.delta();
    let delta2 = delta * delta;
    let epsilon = params.epsilon();
    ShallownessReport {
        delta,
        delta2,
        epsilon,
        ratio: if epsilon > 0.0 { delta2 / epsilon } else { f64::INFINITY },
        ratio_max,
        is_shallow: delta2 <= ratio_max * epsilon,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SoundSpeed {
    pub meters_per_second: f64,
    pub kilometers_per_hour: f64,
}

/// Linear long-wave speed `sqrt(g * depth)`.
pub fn sound_speed(depth: f64, gravity: f64) -> Result<SoundSpeed> {
    if !(depth > 0.0 && depth.is_finite()) {
        return Err(Error::InvalidConfig(format!("depth must be positive, got {depth}")));
    }
    if !(gravity > 0.0 && gravity.is_finite()) {
        return Err(Error::InvalidConfig(format!("gravity must be positive, got {gravity}")));
    }
    let v = (gravity * depth).sqrt();
    Ok(SoundSpeed { meters_per_second: v, kilometers_per_hour: v * MS_TO_KMH })
}
