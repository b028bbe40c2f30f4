//! Locating and classifying the points where `P_x` vanishes over a sloping
//! bed, the tangent-match alert residual, and deep-water diagnostics.
//!
//! Orientation: waves are taken to travel towards `+x` (the shore). "Before
//! the crest" is the converging side `u_x < 0`; "after the trough" the
//! diverging side `u_x > 0`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::bathymetry::Bathymetry;
use crate::error::{Error, Result};
use crate::fields::{d2dx2, ddx, interpolate, FlowState, Grid};
use crate::riemann::{self, RiemannFields};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Classification {
    /// `P` gains a `+∞` speed just before the crest.
    InlandRush,
    /// `P` gains a `-∞` speed just after the trough.
    OffshoreRush,
    Indeterminate,
    /// `P_x` vanishes over a whole stretch of sloping bed.
    DegeneratePlateau,
}

impl Classification {
    pub fn is_rush(self) -> bool {
        matches!(self, Classification::InlandRush | Classification::OffshoreRush)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    CrestSide,
    TroughSide,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DepthRegime {
    Deep,
    Shallow,
    Intermediate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Info,
    Warning,
    Alert,
}

/// Local field values at a critical point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub u_x: f64,
    pub u_xx: f64,
    /// `Γ_x - b_x`
    pub slope_gap: f64,
    /// `(Γ_x - b_x)_x`
    pub slope_gap_x: f64,
    pub gamma: f64,
    pub b_x: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalEvent {
    pub t: f64,
    pub x_star: f64,
    pub classification: Classification,
    pub side: Side,
    pub depth_regime: DepthRegime,
    pub diagnostics: Diagnostics,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub degenerate: Option<DegenerateRegime>,
}

impl CriticalEvent {
    /// Rush events in shallow water raise an alert; deep water downgrades
    /// them since the long heavy waves there do not break apart.
    pub fn severity(&self) -> Severity {
        match (self.classification.is_rush(), self.depth_regime) {
            (true, DepthRegime::Shallow) => Severity::Alert,
            (true, DepthRegime::Intermediate) => Severity::Warning,
            _ => Severity::Info,
        }
    }

    pub fn is_alert(&self) -> bool {
        self.severity() == Severity::Alert
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorConfig {
    /// Zero threshold for `P_x`; `None` selects the scale-aware default.
    pub eps_px: Option<f64>,
    pub alert_eps_r: f64,
    pub alert_eps_gamma: f64,
    /// Shallow if `γ <= shallow_ratio * γ_ref`.
    pub shallow_ratio: f64,
    /// Deep if `γ >= deep_ratio * γ_ref`.
    pub deep_ratio: f64,
    /// Reference `γ`; `None` uses the largest `γ` of the first analysed state.
    pub gamma_ref: Option<f64>,
    pub report_plateaus: bool,
    /// Zero runs of at least this many nodes are plateaus, shorter ones are
    /// crossings.
    pub min_plateau_nodes: usize,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            eps_px: None,
            alert_eps_r: 1e-3,
            alert_eps_gamma: 0.1,
            shallow_ratio: 0.1,
            deep_ratio: 0.7,
            gamma_ref: None,
            report_plateaus: false,
            min_plateau_nodes: 3,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")))
            }
        };
        if let Some(e) = self.eps_px {
            positive("eps_px", e)?;
        }
        if let Some(g) = self.gamma_ref {
            positive("gamma_ref", g)?;
        }
        positive("alert_eps_r", self.alert_eps_r)?;
        positive("alert_eps_gamma", self.alert_eps_gamma)?;
        positive("shallow_ratio", self.shallow_ratio)?;
        positive("deep_ratio", self.deep_ratio)?;
        if self.shallow_ratio >= self.deep_ratio {
            return Err(Error::InvalidConfig("shallow_ratio must be below deep_ratio".into()));
        }
        if self.min_plateau_nodes < 2 {
            return Err(Error::InvalidConfig("min_plateau_nodes must be at least 2".into()));
        }
        Ok(())
    }

    pub fn depth_regime(&self, gamma: f64, gamma_ref: f64) -> DepthRegime {
        if gamma <= self.shallow_ratio * gamma_ref {
            DepthRegime::Shallow
        } else if gamma >= self.deep_ratio * gamma_ref {
            DepthRegime::Deep
        } else {
            DepthRegime::Intermediate
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PointKind {
    /// `P_x` changes sign between neighbouring nodes.
    Crossing,
    /// `|P_x| <= eps` on nodes `first..=last`.
    Plateau { first: usize, last: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalPoint {
    pub x_star: f64,
    pub node_index: usize,
    pub kind: PointKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Sign {
    Neg,
    Zero,
    Pos,
}

/// Finds sign changes and zero plateaus of `P_x`, skipping points where the
/// bed is (numerically) flat.
pub fn find_critical_points(
    fields: &RiemannFields,
    bathy: &Bathymetry,
    grid: &Grid,
    min_plateau_nodes: usize,
) -> Result<Vec<CriticalPoint>> {
    let px = &fields.p_x;
    let eps = fields.eps_px;
    let n = px.len();
    if n != grid.n {
        return Err(Error::LengthMismatch { expected: grid.n, got: n });
    }
    let sign = |v: f64| {
        if v.abs() <= eps {
            Sign::Zero
        } else if v > 0.0 {
            Sign::Pos
        } else {
            Sign::Neg
        }
    };
    let mut points = Vec::new();
    let mut i = 0;
    while i < n {
        let s = sign(px[i]);
        if s == Sign::Zero {
            let first = i;
            while i + 1 < n && sign(px[i + 1]) == Sign::Zero {
                i += 1;
            }
            let last = i;
            let x_star = 0.5 * (grid.x(first) + grid.x(last));
            let node_index = (first + last) / 2;
            if last - first + 1 >= min_plateau_nodes {
                points.push(CriticalPoint {
                    x_star,
                    node_index,
                    kind: PointKind::Plateau { first, last },
                });
            } else if first > 0 && last + 1 < n {
                let before = sign(px[first - 1]);
                let after = sign(px[last + 1]);
                if before != after {
                    points.push(CriticalPoint { x_star, node_index, kind: PointKind::Crossing });
                }
            }
        } else if i + 1 < n {
            let next = sign(px[i + 1]);
            if next != Sign::Zero && next != s {
                let frac = px[i] / (px[i] - px[i + 1]);
                let x_star = grid.x(i) + frac * grid.dx;
                let node_index = if frac <= 0.5 { i } else { i + 1 };
                points.push(CriticalPoint { x_star, node_index, kind: PointKind::Crossing });
            }
        }
        i += 1;
    }
    let mut kept = Vec::with_capacity(points.len());
    for p in points {
        if bathy.slope(p.x_star)?.abs() > eps {
            kept.push(p);
        }
    }
    Ok(kept)
}

/// Side, classification and depth regime from local diagnostics.
pub fn classify_diagnostics(
    d: &Diagnostics,
    gamma_ref: f64,
    config: &DetectorConfig,
) -> (Classification, Side, DepthRegime) {
    let side = if d.u_x < 0.0 && d.slope_gap > 0.0 {
        Side::CrestSide
    } else if d.u_x > 0.0 && d.slope_gap < 0.0 {
        Side::TroughSide
    } else {
        Side::Unknown
    };
    let classification = match side {
        Side::CrestSide if d.u_xx < 0.0 && d.slope_gap_x < 0.0 => Classification::InlandRush,
        Side::TroughSide if d.u_xx > 0.0 && d.slope_gap_x > 0.5 * d.u_x * d.u_x => Classification::OffshoreRush,
        _ => Classification::Indeterminate,
    };
    (classification, side, config.depth_regime(d.gamma, gamma_ref))
}

/// Interpolates the diagnostics of `state` at `x_star`.
pub fn diagnostics_at(
    x_star: f64,
    fields: &RiemannFields,
    state: &FlowState,
    bathy: &Bathymetry,
    grid: &Grid,
) -> Result<Diagnostics> {
    let (lo, hi) = (grid.x0, grid.x_last());
    let outside = || Error::Domain { x: x_star, lo, hi };
    let u_xx = d2dx2(&state.velocity, grid);
    let curvature = bathy.sample_curvature(&grid.coords())?;
    let surf_xx = d2dx2(&state.gamma_surface, grid);
    let gap_x: Vec<f64> = surf_xx.iter().zip(&curvature).map(|(s, c)| s - c).collect();
    Ok(Diagnostics {
        u_x: interpolate(&fields.u_x, grid, x_star).ok_or_else(outside)?,
        u_xx: interpolate(&u_xx, grid, x_star).ok_or_else(outside)?,
        slope_gap: interpolate(&fields.slope_gap, grid, x_star).ok_or_else(outside)?,
        slope_gap_x: interpolate(&gap_x, grid, x_star).ok_or_else(outside)?,
        gamma: interpolate(&fields.gamma, grid, x_star).ok_or_else(outside)?,
        b_x: bathy.slope(x_star)?,
    })
}

/// Builds the event for a critical point at `x_star`.
pub fn classify(
    x_star: f64,
    fields: &RiemannFields,
    state: &FlowState,
    bathy: &Bathymetry,
    grid: &Grid,
    gamma_ref: f64,
    config: &DetectorConfig,
) -> Result<CriticalEvent> {
    let diagnostics = diagnostics_at(x_star, fields, state, bathy, grid)?;
    let (classification, side, depth_regime) = classify_diagnostics(&diagnostics, gamma_ref, config);
    Ok(CriticalEvent {
        t: state.t,
        x_star,
        classification,
        side,
        depth_regime,
        diagnostics,
        degenerate: None,
    })
}

/// Full analysis of one state: invariants, critical points, classification.
/// Plateaus appear only with `config.report_plateaus`.
pub fn detect(state: &FlowState, bathy: &Bathymetry, grid: &Grid, config: &DetectorConfig) -> Result<Vec<CriticalEvent>> {
    let fields = riemann::compute(state, bathy, grid, config.eps_px)?;
    let gamma_ref = config
        .gamma_ref
        .unwrap_or_else(|| fields.gamma.iter().copied().fold(0.0, f64::max));
    let mut events = Vec::new();
    for point in find_critical_points(&fields, bathy, grid, config.min_plateau_nodes)? {
        match point.kind {
            PointKind::Crossing => {
                events.push(classify(point.x_star, &fields, state, bathy, grid, gamma_ref, config)?);
            }
            PointKind::Plateau { .. } if config.report_plateaus => {
                let mut event = classify(point.x_star, &fields, state, bathy, grid, gamma_ref, config)?;
                event.classification = Classification::DegeneratePlateau;
                events.push(event);
            }
            PointKind::Plateau { .. } => {}
        }
    }
    Ok(events)
}

/// Keeps only events that were not already present, with the same
/// classification within `radius`, at the previous update.
#[derive(Debug, Clone)]
pub struct EventTracker {
    radius: f64,
    active: Vec<(f64, Classification)>,
}

impl EventTracker {
    pub fn new(radius: f64) -> Self {
        Self { radius, active: Vec::new() }
    }

    pub fn update(&mut self, found: Vec<CriticalEvent>) -> Vec<CriticalEvent> {
        let current: Vec<(f64, Classification)> = found.iter().map(|e| (e.x_star, e.classification)).collect();
        let fresh = found
            .into_iter()
            .filter(|e| {
                !self
                    .active
                    .iter()
                    .any(|&(x, c)| c == e.classification && (x - e.x_star).abs() <= self.radius)
            })
            .collect();
        self.active = current;
        fresh
    }
}

/// Vanishing orders and leading coefficients of `b_x` and of
/// `u_x γ + Γ_x` at a point where both vanish.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegenerateSpec {
    pub p_exp: u32,
    pub q_exp: u32,
    pub b1: f64,
    pub c1: f64,
    pub gamma_local: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DegenerateRegime {
    /// `b_x / P_x ~ const * sqrt(Γ - b)`
    OrderSqrtDepth,
    /// `b_x / P_x ~ 0`
    VanishingCorrection,
    /// `b_x / P_x ~ ±∞`
    SignedInfinity,
}

/// Limit of `b_x / P_x` near a point where the bed flattens, from the
/// vanishing orders `p` (of `b_x`) and `q` (of `u_x γ + Γ_x`).
pub fn classify_degenerate(spec: &DegenerateSpec) -> Result<DegenerateRegime> {
    if spec.p_exp < 1 || spec.q_exp < 1 {
        return Err(Error::InvalidDegenerateSpec("exponents must be at least 1".into()));
    }
    if spec.b1 == 0.0 || !spec.b1.is_finite() {
        return Err(Error::InvalidDegenerateSpec(format!("B1 must be finite and nonzero, got {}", spec.b1)));
    }
    if !spec.c1.is_finite() {
        return Err(Error::InvalidDegenerateSpec(format!("C1 must be finite, got {}", spec.c1)));
    }
    if !(spec.gamma_local > 0.0) {
        return Err(Error::InvalidDegenerateSpec(format!(
            "local gamma must be positive, got {}",
            spec.gamma_local
        )));
    }
    Ok(match spec.q_exp.cmp(&spec.p_exp) {
        std::cmp::Ordering::Greater => DegenerateRegime::OrderSqrtDepth,
        std::cmp::Ordering::Less => DegenerateRegime::VanishingCorrection,
        std::cmp::Ordering::Equal if spec.c1 == spec.b1 => DegenerateRegime::SignedInfinity,
        std::cmp::Ordering::Equal => DegenerateRegime::OrderSqrtDepth,
    })
}

/// Tangent-match residual `r = (Γ_x - b_x) + u_x sqrt(Γ - b)`, equal to
/// `γ P_x`; it vanishes where the surface runs parallel to the seabed
/// corrected by the current.
pub fn tangent_match_residual(state: &FlowState, bathy: &Bathymetry, grid: &Grid) -> Result<Vec<f64>> {
    if state.len() != grid.n {
        return Err(Error::LengthMismatch { expected: grid.n, got: state.len() });
    }
    let xs = grid.coords();
    let bed = bathy.sample(&xs)?;
    let b_x = bathy.sample_slope(&xs)?;
    let surf_x = ddx(&state.gamma_surface, grid);
    let u_x = ddx(&state.velocity, grid);
    (0..grid.n)
        .map(|i| {
            let depth = state.gamma_surface[i] - bed[i];
            if !(depth > 0.0) {
                return Err(Error::NearDry { t: state.t, node: i, x: xs[i], depth, h_min: 0.0 });
            }
            Ok((surf_x[i] - b_x[i]) + u_x[i] * depth.sqrt())
        })
        .collect()
}

/// Nodes where the alert condition holds: `|r| <= alert_eps_r` on water no
/// deeper than `γ <= alert_eps_gamma`.
pub fn tangent_match_alerts(
    residual: &[f64],
    gamma: &[f64],
    config: &DetectorConfig,
) -> Vec<usize> {
    residual
        .iter()
        .zip(gamma)
        .enumerate()
        .filter(|(_, (r, g))| r.abs() <= config.alert_eps_r && **g <= config.alert_eps_gamma)
        .map(|(i, _)| i)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeepSeaDiagnostics {
    /// `sqrt(Γ - b)` per node.
    pub sound_speed: Vec<f64>,
    /// `|Γ - H| / sqrt(Γ - b)` per node.
    pub amplitude_indicator: Vec<f64>,
    pub max_sound_speed: f64,
    pub max_amplitude_indicator: f64,
}

/// Long-wave speed and relative amplitude against the still-water surface
/// level `rest_level` (the `H` of the indicator).
pub fn deep_sea_diagnostics(
    state: &FlowState,
    bathy: &Bathymetry,
    grid: &Grid,
    rest_level: f64,
) -> Result<DeepSeaDiagnostics> {
    if state.len() != grid.n {
        return Err(Error::LengthMismatch { expected: grid.n, got: state.len() });
    }
    let xs = grid.coords();
    let mut sound_speed = Vec::with_capacity(grid.n);
    let mut amplitude_indicator = Vec::with_capacity(grid.n);
    for (i, &x) in xs.iter().enumerate() {
        let surf = state.gamma_surface[i];
        let depth = surf - bathy.eval(x)?;
        if !(depth > 0.0) {
            return Err(Error::NearDry { t: state.t, node: i, x, depth, h_min: 0.0 });
        }
        let c = depth.sqrt();
        sound_speed.push(c);
        amplitude_indicator.push((surf - rest_level).abs() / c);
    }
    let max = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
    Ok(DeepSeaDiagnostics {
        max_sound_speed: max(&sound_speed),
        max_amplitude_indicator: max(&amplitude_indicator),
        sound_speed,
        amplitude_indicator,
    })
}

#[derive(Serialize)]
struct EventLine<'a> {
    run_id: &'a str,
    severity: Severity,
    #[serde(flatten)]
    event: &'a CriticalEvent,
}

/// Writes one JSON object per event and line.
pub fn write_event_log<W: Write>(events: &[CriticalEvent], run_id: &str, mut out: W) -> Result<()> {
    for event in events {
        let line = EventLine { run_id, severity: event.severity(), event };
        serde_json::to_writer(&mut out, &line).map_err(|e| Error::Parse(e.to_string()))?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
