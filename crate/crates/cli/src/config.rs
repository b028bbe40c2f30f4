//! Scenario files: TOML with nested tables, one scenario per file.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use shoalwave::bathymetry::SampledProfile;
use shoalwave::fields::Snapshot;
use shoalwave::{Bathymetry, DetectorConfig, Error, FlowState, Grid, SolverConfig};

use shoalwave::analytic::LinearBottomSolution;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub bathymetry: BathymetrySpec,
    pub initial: InitialCondition,
    /// Required unless the initial state is read from a file, whose grid it
    /// must then match.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub detector: DetectorConfig,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BathymetrySpec {
    Flat { level: f64 },
    Linear { b0: f64, b1: f64 },
    TanhSafe { h: f64, k: f64 },
    /// `x,b` CSV; relative paths resolve against the config file.
    Sampled { path: PathBuf },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Linear right-going wave, `u = η / sqrt(depth)`.
    #[default]
    Right,
    Left,
    /// `u = 0`: splits into two half-height waves.
    Standing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialCondition {
    LakeAtRest {
        #[serde(default)]
        level: f64,
    },
    GaussianPulse {
        center: f64,
        width: f64,
        amplitude: f64,
        #[serde(default)]
        level: f64,
        #[serde(default)]
        direction: Direction,
    },
    /// Closed-form flow over `b = b0 + b1 x`; ghost cells follow the closed
    /// form, overriding the configured boundary.
    LinearBottomAnalytic { a0: f64, b0: f64, b1: f64, c0: f64 },
    FromFile { path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub x0: f64,
    pub dx: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    /// Run directory; relative paths resolve against the config file.
    /// Unset means `<output root>/<name>`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    /// Also dump `riemann_<step>.csv` next to every snapshot.
    pub riemann: bool,
    /// Also write `onset_<step>.csv` for every step that starts an event.
    pub event_snapshots: bool,
}

/// A scenario resolved into solver inputs.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub grid: Grid,
    pub bathymetry: Bathymetry,
    pub initial: FlowState,
    pub solver: SolverConfig,
    pub detector: DetectorConfig,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, Error> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario configs always serialize")
    }

    pub fn load(path: &Path) -> Result<Self, Error> {
        Self::from_toml(&fs::read_to_string(path)?)
    }

    /// Checks field-level invariants that do not need the file system.
    pub fn validate(&self) -> Result<(), Error> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(Error::InvalidConfig(format!("name `{}` is not a valid directory name", self.name)));
        }
        self.solver.validate()?;
        self.detector.validate()?;
        match (&self.initial, &self.grid) {
            (InitialCondition::FromFile { .. }, _) => {}
            (_, None) => return Err(Error::InvalidConfig("a [grid] table is required".into())),
            (_, Some(g)) => {
                Grid::new(g.x0, g.dx, g.n)?;
            }
        }
        match self.bathymetry {
            BathymetrySpec::TanhSafe { h, k } => {
                Bathymetry::tanh_safe(h, k)?;
            }
            BathymetrySpec::Flat { level } if !level.is_finite() => {
                return Err(Error::InvalidConfig("bed level must be finite".into()));
            }
            _ => {}
        }
        if let InitialCondition::GaussianPulse { width, .. } = self.initial {
            if !(width > 0.0) {
                return Err(Error::InvalidConfig(format!("pulse width must be positive, got {width}")));
            }
        }
        if let InitialCondition::LinearBottomAnalytic { b0, b1, .. } = self.initial {
            if self.bathymetry != (BathymetrySpec::Linear { b0, b1 }) {
                return Err(Error::InvalidConfig(
                    "linear_bottom_analytic needs a linear bathymetry with the same b0, b1".into(),
                ));
            }
        }
        Ok(())
    }

    /// Resolves files relative to `base_dir` and builds the solver inputs.
    pub fn build(&self, base_dir: &Path) -> Result<Scenario, Error> {
        self.validate()?;
        let bathymetry = self.bathymetry.build(base_dir)?;
        let mut solver = self.solver.clone();
        let (grid, initial) = match &self.initial {
            InitialCondition::FromFile { path } => {
                let path = resolve(base_dir, path);
                let snap = Snapshot::read_csv(fs::File::open(&path).map_err(|e| missing(&path, e))?)?;
                if let Some(g) = self.grid {
                    let same = g.n == snap.grid.n
                        && (g.dx - snap.grid.dx).abs() <= 1e-9 * g.dx
                        && (g.x0 - snap.grid.x0).abs() <= 1e-9 * g.dx;
                    if !same {
                        return Err(Error::InvalidConfig(format!("{} does not match the [grid] table", path.display())));
                    }
                }
                let bed = bathymetry.sample(&snap.grid.coords())?;
                for (i, (a, b)) in bed.iter().zip(&snap.bed).enumerate() {
                    if (a - b).abs() > 1e-9 * a.abs().max(1.0) {
                        return Err(Error::InvalidConfig(format!(
                            "bed column of {} differs from the bathymetry at row {i}",
                            path.display()
                        )));
                    }
                }
                (snap.grid, snap.state)
            }
            other => {
                let g = self.grid.expect("validated");
                let grid = Grid::new(g.x0, g.dx, g.n)?;
                let (lo, hi) = grid.extent();
                for x in [lo, hi] {
                    if !bathymetry.contains(x) {
                        let (dlo, dhi) = bathymetry.domain();
                        return Err(Error::Domain { x, lo: dlo, hi: dhi });
                    }
                }
                let state = initial_state(other, &bathymetry, &grid, solver.h_min)?;
                if let InitialCondition::LinearBottomAnalytic { a0, b0, b1, c0 } = *other {
                    // the validity interval only needs to contain the ghost cells
                    let span = hi - lo;
                    let sol = LinearBottomSolution::new(a0, b0, b1, c0, lo - span, hi + span)?;
                    solver.boundary = shoalwave::Boundary::Prescribed(std::sync::Arc::new(sol));
                }
                (grid, state)
            }
        };
        Ok(Scenario { grid, bathymetry, initial, solver, detector: self.detector.clone() })
    }
}

impl BathymetrySpec {
    pub fn build(&self, base_dir: &Path) -> Result<Bathymetry, Error> {
        Ok(match *self {
            BathymetrySpec::Flat { level } => Bathymetry::flat(level),
            BathymetrySpec::Linear { b0, b1 } => Bathymetry::linear(b0, b1),
            BathymetrySpec::TanhSafe { h, k } => Bathymetry::tanh_safe(h, k)?,
            BathymetrySpec::Sampled { ref path } => {
                let path = resolve(base_dir, path);
                if !path.is_file() {
                    return Err(Error::InvalidConfig(format!("bathymetry file {} does not exist", path.display())));
                }
                Bathymetry::Sampled(SampledProfile::from_csv_path(&path)?)
            }
        })
    }

    /// Parses the command-line form `kind:p1,p2`, e.g. `tanh_safe:0.005,0.5`
    /// or `sampled:bed.csv`.
    pub fn parse_arg(arg: &str) -> Result<Self, Error> {
        let (kind, rest) = arg.split_once(':').unwrap_or((arg, ""));
        let nums = || -> Result<Vec<f64>, Error> {
            rest.split(',')
                .filter(|s| !s.trim().is_empty())
                .map(|s| s.trim().parse::<f64>().map_err(|e| Error::Parse(format!("`{s}`: {e}"))))
                .collect()
        };
        let want = |v: Vec<f64>, n: usize| -> Result<Vec<f64>, Error> {
            if v.len() == n {
                Ok(v)
            } else {
                Err(Error::Parse(format!("`{kind}` takes {n} parameter(s), got {}", v.len())))
            }
        };
        Ok(match kind {
            "flat" => BathymetrySpec::Flat { level: want(nums()?, 1)?[0] },
            "linear" => {
                let v = want(nums()?, 2)?;
                BathymetrySpec::Linear { b0: v[0], b1: v[1] }
            }
            "tanh_safe" => {
                let v = want(nums()?, 2)?;
                BathymetrySpec::TanhSafe { h: v[0], k: v[1] }
            }
            "sampled" if !rest.is_empty() => BathymetrySpec::Sampled { path: rest.into() },
            _ => {
                return Err(Error::Parse(format!(
                    "unknown bathymetry `{arg}`; expected flat:L, linear:B0,B1, tanh_safe:H,K or sampled:PATH"
                )))
            }
        })
    }
}

fn initial_state(ic: &InitialCondition, bathy: &Bathymetry, grid: &Grid, h_min: f64) -> Result<FlowState, Error> {
    let xs = grid.coords();
    let bed = bathy.sample(&xs)?;
    match *ic {
        InitialCondition::LakeAtRest { level } => Ok(FlowState::lake_at_rest(level, grid)),
        InitialCondition::GaussianPulse { center, width, amplitude, level, direction } => {
            let mut surface = Vec::with_capacity(grid.n);
            let mut velocity = Vec::with_capacity(grid.n);
            for (i, (&x, &b)) in xs.iter().zip(&bed).enumerate() {
                let still = level - b;
                if !(still >= h_min) {
                    return Err(Error::NearDry { t: 0.0, node: i, x, depth: still, h_min });
                }
                let eta = amplitude * (-((x - center) / width).powi(2)).exp();
                let c = still.sqrt();
                surface.push(level + eta);
                velocity.push(match direction {
                    Direction::Right => eta / c,
                    Direction::Left => -eta / c,
                    Direction::Standing => 0.0,
                });
            }
            FlowState::new(0.0, surface, velocity, grid)
        }
        InitialCondition::LinearBottomAnalytic { a0, b0, b1, c0 } => {
            let (lo, hi) = grid.extent();
            LinearBottomSolution::new(a0, b0, b1, c0, lo, hi)?.initial_state(grid, h_min)
        }
        InitialCondition::FromFile { .. } => unreachable!("handled by the caller"),
    }
}

fn resolve(base_dir: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base_dir.join(path)
    }
}

fn missing(path: &Path, e: std::io::Error) -> Error {
    Error::InvalidConfig(format!("cannot open {}: {e}", path.display()))
}
