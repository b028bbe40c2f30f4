//! Subcommand implementations.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};
use shoalwave::analytic::{convergence_study, LinearBottomSolution, EXACT_ERROR};
use shoalwave::detector::{
    self, classify_degenerate, tangent_match_alerts, tangent_match_residual, write_event_log, DegenerateSpec,
};
use shoalwave::fields::Snapshot;
use shoalwave::nondim::{self, NondimParams};
use shoalwave::riemann;
use shoalwave::solver::{self, FluxKind, Order};
use shoalwave::{Boundary, CriticalEvent, DepthRegime, DetectorConfig, Error, Grid, SolverConfig};

use crate::config::{BathymetrySpec, ScenarioConfig};
use crate::OUTPUT_ROOT_ENV;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ExitStatus {
    Success = 0,
    Failure = 1,
    NearDry = 2,
    BlowUp = 3,
    Alert = 4,
}

impl ExitStatus {
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_error(e: &Error) -> Self {
        if e.is_near_dry() {
            ExitStatus::NearDry
        } else if e.is_blow_up() {
            ExitStatus::BlowUp
        } else {
            ExitStatus::Failure
        }
    }

    fn label(self) -> &'static str {
        match self {
            ExitStatus::Success => "completed",
            ExitStatus::Failure => "failed",
            ExitStatus::NearDry => "near_dry",
            ExitStatus::BlowUp => "blow_up",
            ExitStatus::Alert => "alert",
        }
    }
}

/// Command-line values that replace the corresponding config fields.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOverrides {
    pub t_end: Option<f64>,
    pub cfl: Option<f64>,
    pub boundary: Option<Boundary>,
    pub order: Option<Order>,
    pub h_min: Option<f64>,
    pub snapshot_interval: Option<f64>,
    pub max_steps: Option<usize>,
    pub stop_at_first_event: bool,
}

impl RunOverrides {
    pub fn apply(&self, config: &mut ScenarioConfig) {
        let s = &mut config.solver;
        if let Some(v) = self.t_end {
            s.t_end = v;
        }
        if let Some(v) = self.cfl {
            s.cfl = v;
        }
        if let Some(v) = &self.boundary {
            s.boundary = v.clone();
        }
        if let Some(v) = self.order {
            s.order = v;
        }
        if let Some(v) = self.h_min {
            s.h_min = v;
        }
        if let Some(v) = self.snapshot_interval {
            s.snapshot_interval = v;
        }
        if self.max_steps.is_some() {
            s.max_steps = self.max_steps;
        }
        if self.stop_at_first_event {
            s.stop_at_first_event = true;
        }
    }
}

/// Deterministic run identifier: the leading 16 hex digits of the SHA-256
/// of the effective config.
pub fn run_id(config: &ScenarioConfig) -> String {
    let digest = Sha256::digest(config.to_toml().as_bytes());
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// Output root: the explicit argument, else the environment variable, else
/// `./runs`.
pub fn output_root(explicit: Option<&Path>) -> PathBuf {
    explicit
        .map(Path::to_path_buf)
        .or_else(|| std::env::var_os(OUTPUT_ROOT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("runs"))
}

fn run_dir(config: &ScenarioConfig, base_dir: &Path, root: &Path) -> PathBuf {
    match &config.output.dir {
        Some(d) if d.is_absolute() => d.clone(),
        Some(d) => base_dir.join(d),
        None => root.join(&config.name),
    }
}

#[derive(Serialize)]
struct SnapshotEntry {
    step: usize,
    t: f64,
    file: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    riemann_file: Option<String>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    name: &'a str,
    run_id: &'a str,
    version: &'static str,
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    config: &'a ScenarioConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    grid: Option<Grid>,
    steps: usize,
    t_final: f64,
    post_singular: bool,
    stopped_early: bool,
    snapshots: Vec<SnapshotEntry>,
    onsets: Vec<SnapshotEntry>,
    events_file: &'static str,
    event_count: usize,
    rush_events: usize,
    alerts: usize,
}

const EVENTS_FILE: &str = "events.jsonl";

fn write_file(path: &Path, fill: impl FnOnce(&mut BufWriter<fs::File>) -> Result<(), Error>) -> Result<(), Error> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    fill(&mut w)?;
    w.flush()?;
    Ok(())
}

fn event_line(e: &CriticalEvent) -> String {
    format!(
        "event t={:.6} x*={:.6} {:?} side={:?} regime={:?} severity={:?} gamma={:.4e}",
        e.t,
        e.x_star,
        e.classification,
        e.side,
        e.depth_regime,
        e.severity(),
        e.diagnostics.gamma
    )
}

/// Runs one scenario file. `base_dir` defaults to the file's directory.
pub fn cmd_run(
    config_path: &Path,
    out_root: Option<&Path>,
    overrides: &RunOverrides,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> ExitStatus {
    let mut config = match ScenarioConfig::load(config_path) {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(err, "error: {}: {e}", config_path.display());
            return ExitStatus::Failure;
        }
    };
    overrides.apply(&mut config);
    let base_dir = config_path.parent().map(Path::to_path_buf).unwrap_or_default();
    run_config(&config, &base_dir, &output_root(out_root), out, err)
}

/// Runs an already parsed scenario and writes its run directory.
pub fn run_config(
    config: &ScenarioConfig,
    base_dir: &Path,
    root: &Path,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> ExitStatus {
    let id = run_id(config);
    let dir = run_dir(config, base_dir, root);
    if let Err(e) = fs::create_dir_all(&dir) {
        let _ = writeln!(err, "error: cannot create {}: {e}", dir.display());
        return ExitStatus::Failure;
    }
    let mut manifest = Manifest {
        name: &config.name,
        run_id: &id,
        version: env!("CARGO_PKG_VERSION"),
        status: ExitStatus::Success.label(),
        error: None,
        config,
        grid: None,
        steps: 0,
        t_final: 0.0,
        post_singular: false,
        stopped_early: false,
        snapshots: Vec::new(),
        onsets: Vec::new(),
        events_file: EVENTS_FILE,
        event_count: 0,
        rush_events: 0,
        alerts: 0,
    };
    let status = match execute(config, base_dir, &dir, &id, &mut manifest, out) {
        Ok(()) => ExitStatus::Success,
        Err(e) => {
            let status = ExitStatus::from_error(&e);
            let _ = writeln!(err, "error: {}: {e}", config.name);
            manifest.status = status.label();
            manifest.error = Some(e.to_string());
            status
        }
    };
    let written = write_file(&dir.join("run.json"), |w| {
        serde_json::to_writer_pretty(&mut *w, &manifest).map_err(|e| Error::Parse(e.to_string()))?;
        w.write_all(b"\n")?;
        Ok(())
    });
    if let Err(e) = written {
        let _ = writeln!(err, "error: writing manifest: {e}");
        return status.max(ExitStatus::Failure);
    }
    status
}

fn execute(
    config: &ScenarioConfig,
    base_dir: &Path,
    dir: &Path,
    id: &str,
    manifest: &mut Manifest,
    out: &mut dyn Write,
) -> Result<(), Error> {
    let scenario = config.build(base_dir)?;
    let grid = scenario.grid;
    let bathy = &scenario.bathymetry;
    manifest.grid = Some(grid);

    let mut onsets = Vec::new();
    let mut write_error = None;
    let result = solver::run_with(
        &scenario.initial,
        bathy,
        &grid,
        &scenario.solver,
        &scenario.detector,
        |step, state, fresh| {
            if !config.output.event_snapshots || fresh.is_empty() || write_error.is_some() {
                return;
            }
            let file = format!("onset_{step:06}.csv");
            match write_file(&dir.join(&file), |w| state.write_csv(&grid, bathy, w)) {
                Ok(()) => onsets.push(SnapshotEntry { step, t: state.t, file, riemann_file: None }),
                Err(e) => write_error = Some(e),
            }
        },
    )?;
    if let Some(e) = write_error {
        return Err(e);
    }

    for rec in &result.snapshots {
        let file = format!("snap_{:06}.csv", rec.step);
        write_file(&dir.join(&file), |w| rec.state.write_csv(&grid, bathy, w))?;
        let riemann_file = if config.output.riemann {
            let name = format!("riemann_{:06}.csv", rec.step);
            let fields = riemann::compute(&rec.state, bathy, &grid, scenario.detector.eps_px)?;
            write_file(&dir.join(&name), |w| fields.write_csv(&grid, w))?;
            Some(name)
        } else {
            None
        };
        manifest.snapshots.push(SnapshotEntry { step: rec.step, t: rec.state.t, file, riemann_file });
    }
    write_file(&dir.join(EVENTS_FILE), |w| write_event_log(&result.events, id, w))?;

    for e in &result.events {
        writeln!(out, "{}", event_line(e))?;
    }
    let rush = result.events.iter().filter(|e| e.classification.is_rush()).count();
    let alerts = result.events.iter().filter(|e| e.is_alert()).count();
    writeln!(
        out,
        "{}: {} steps to t = {:.6}, {} events ({} rush, {} alerts){}{} -> {}",
        config.name,
        result.steps,
        result.final_state.t,
        result.events.len(),
        rush,
        alerts,
        if result.post_singular { ", post-singular" } else { "" },
        if result.stopped_early { ", stopped at first event" } else { "" },
        dir.display()
    )?;

    manifest.onsets = onsets;
    manifest.steps = result.steps;
    manifest.t_final = result.final_state.t;
    manifest.post_singular = result.post_singular;
    manifest.stopped_early = result.stopped_early;
    manifest.event_count = result.events.len();
    manifest.rush_events = rush;
    manifest.alerts = alerts;
    Ok(())
}

/// Runs several scenario files on up to `jobs` threads, each in its own run
/// directory. Reports are printed in argument order; the exit status is the
/// largest of the individual ones.
pub fn cmd_run_batch(
    config_paths: &[PathBuf],
    out_root: Option<&Path>,
    overrides: &RunOverrides,
    jobs: usize,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> ExitStatus {
    use rayon::prelude::*;

    let mut configs = Vec::with_capacity(config_paths.len());
    for path in config_paths {
        match ScenarioConfig::load(path) {
            Ok(mut c) => {
                overrides.apply(&mut c);
                configs.push((c, path.parent().map(Path::to_path_buf).unwrap_or_default()));
            }
            Err(e) => {
                let _ = writeln!(err, "error: {}: {e}", path.display());
                return ExitStatus::Failure;
            }
        }
    }
    let root = output_root(out_root);
    let dirs: Vec<PathBuf> = configs.iter().map(|(c, base)| run_dir(c, base, &root)).collect();
    for (i, d) in dirs.iter().enumerate() {
        if dirs[..i].contains(d) {
            let _ = writeln!(err, "error: two scenarios would write to {}", d.display());
            return ExitStatus::Failure;
        }
    }
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build() {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return ExitStatus::Failure;
        }
    };
    let results: Vec<(ExitStatus, Vec<u8>, Vec<u8>)> = pool.install(|| {
        configs
            .par_iter()
            .map(|(c, base)| {
                let (mut o, mut e) = (Vec::new(), Vec::new());
                let status = run_config(c, base, &root, &mut o, &mut e);
                (status, o, e)
            })
            .collect()
    });
    let mut worst = ExitStatus::Success;
    for (status, o, e) in results {
        let _ = out.write_all(&o);
        let _ = err.write_all(&e);
        worst = worst.max(status);
    }
    worst
}

/// Parameters of the analytic convergence check.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyArgs {
    pub a0: f64,
    pub b0: f64,
    pub b1: f64,
    pub c0: f64,
    pub x1: f64,
    pub x2: f64,
    pub n: usize,
    pub t_end: f64,
    pub threshold: f64,
    pub order: Order,
    pub cfl: f64,
    /// Negative control: drop the bed terms from the flux.
    pub broken_flux: bool,
}

impl Default for VerifyArgs {
    fn default() -> Self {
        Self {
            a0: 0.2,
            b0: -1.0,
            b1: 0.1,
            c0: 0.0,
            x1: -1.0,
            x2: 1.0,
            n: 400,
            t_end: 0.5,
            threshold: 0.9,
            order: Order::First,
            cfl: 0.45,
            broken_flux: false,
        }
    }
}

/// Outcome of [`verify_analytic`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub levels: Vec<shoalwave::analytic::ConvergenceLevel>,
    /// `None` when both levels reproduce the closed form exactly.
    pub order: Option<f64>,
    pub exact: bool,
    /// Largest closed-form residual over the nodes at `t = 0` and `t_end`.
    pub max_residual: f64,
    pub passed: bool,
}

pub fn verify_analytic(args: &VerifyArgs) -> Result<VerifyReport, Error> {
    let sol = LinearBottomSolution::new(args.a0, args.b0, args.b1, args.c0, args.x1, args.x2)?;
    let base = SolverConfig {
        cfl: args.cfl,
        order: args.order,
        flux: if args.broken_flux { FluxKind::Unbalanced } else { FluxKind::Hll },
        ..SolverConfig::default()
    };
    let levels = convergence_study(&sol, &[args.n, 2 * args.n], args.t_end, &base)?;
    let exact = levels.iter().all(|l| l.linf_error <= EXACT_ERROR);
    let order = if exact { None } else { levels[1].order };
    let grid = Grid::cell_centered(args.x1, args.x2, args.n)?;
    let mut max_residual = 0.0f64;
    for t in [0.0, args.t_end] {
        for x in grid.coords() {
            let (r1, r2, r3) = sol.residuals(t, x)?;
            max_residual = max_residual.max(r1.abs()).max(r2.abs()).max(r3.abs());
        }
    }
    let passed = exact || order.is_some_and(|p| p >= args.threshold);
    Ok(VerifyReport { levels, order, exact, max_residual, passed })
}

pub fn cmd_verify_analytic(args: &VerifyArgs, out: &mut dyn Write, err: &mut dyn Write) -> ExitStatus {
    let report = match verify_analytic(args) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return ExitStatus::from_error(&e).max(ExitStatus::Failure);
        }
    };
    let mut print = || -> io::Result<()> {
        for l in &report.levels {
            writeln!(out, "n = {:5}  dx = {:.6e}  linf_error = {:.6e}", l.n, l.dx, l.linf_error)?;
        }
        match report.order {
            _ if report.exact => writeln!(out, "order: exact")?,
            Some(p) => writeln!(out, "order: {p:.4} (threshold {})", args.threshold)?,
            None => writeln!(out, "order: undefined")?,
        }
        writeln!(out, "closed-form residual: {:.3e}", report.max_residual)?;
        writeln!(out, "{}", if report.passed { "PASS" } else { "FAIL" })
    };
    if print().is_err() {
        return ExitStatus::Failure;
    }
    if report.passed {
        ExitStatus::Success
    } else {
        ExitStatus::Failure
    }
}

/// Where `cmd_detect` takes the bathymetry from.
#[derive(Debug, Clone, PartialEq)]
pub enum BathySource {
    Spec(BathymetrySpec),
    /// The bathymetry of a scenario file.
    Scenario(PathBuf),
}

/// One-shot analysis of a snapshot file. Exit status 4 when any rush event
/// lies in shallow water.
pub fn cmd_detect(
    state_file: &Path,
    source: &BathySource,
    config: &DetectorConfig,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> ExitStatus {
    match detect_report(state_file, source, config, out) {
        Ok(status) => status,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            ExitStatus::Failure
        }
    }
}

fn detect_report(
    state_file: &Path,
    source: &BathySource,
    config: &DetectorConfig,
    out: &mut dyn Write,
) -> Result<ExitStatus, Error> {
    config.validate()?;
    let bathy = match source {
        BathySource::Spec(spec) => spec.build(Path::new("."))?,
        BathySource::Scenario(path) => {
            let scenario = ScenarioConfig::load(path)?;
            scenario.bathymetry.build(path.parent().unwrap_or(Path::new("")))?
        }
    };
    let snap = Snapshot::read_csv(fs::File::open(state_file)?)?;
    let grid = snap.grid;
    let state = snap.state;

    let fields = riemann::compute(&state, &bathy, &grid, config.eps_px)?;
    let residual = tangent_match_residual(&state, &bathy, &grid)?;
    let (mut lo, mut hi) = (0usize, 0usize);
    for i in 0..residual.len() {
        if residual[i].abs() < residual[lo].abs() {
            lo = i;
        }
        if residual[i].abs() > residual[hi].abs() {
            hi = i;
        }
    }
    writeln!(out, "nodes: {}  dx = {:.6e}", grid.n, grid.dx)?;
    writeln!(
        out,
        "tangent-match residual: min |r| = {:.3e} at x = {:.6}, max |r| = {:.3e} at x = {:.6}",
        residual[lo].abs(),
        grid.x(lo),
        residual[hi].abs(),
        grid.x(hi)
    )?;
    let alert_nodes = tangent_match_alerts(&residual, &fields.gamma, config);
    writeln!(
        out,
        "tangent-match nodes (|r| <= {}, gamma <= {}): {}",
        config.alert_eps_r,
        config.alert_eps_gamma,
        alert_nodes.len()
    )?;

    let points = detector::find_critical_points(&fields, &bathy, &grid, config.min_plateau_nodes)?;
    writeln!(out, "critical points: {}", points.len())?;
    let events = detector::detect(&state, &bathy, &grid, config)?;
    for e in &events {
        writeln!(out, "{}", event_line(e))?;
    }
    let shallow_rush = events
        .iter()
        .filter(|e| e.classification.is_rush() && e.depth_regime == DepthRegime::Shallow)
        .count();
    writeln!(out, "shallow-water rush events: {shallow_rush}")?;
    Ok(if shallow_rush > 0 { ExitStatus::Alert } else { ExitStatus::Success })
}

pub fn cmd_classify_degenerate(
    p: u32,
    q: u32,
    b1: f64,
    c1: f64,
    gamma_local: f64,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> ExitStatus {
    let spec = DegenerateSpec { p_exp: p, q_exp: q, b1, c1, gamma_local };
    match classify_degenerate(&spec) {
        Ok(regime) => {
            let _ = writeln!(out, "{regime:?}");
            ExitStatus::Success
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            ExitStatus::Failure
        }
    }
}

pub fn cmd_nondim(
    wavelength: f64,
    depth: f64,
    gravity: f64,
    amplitude: f64,
    ratio_max: f64,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> ExitStatus {
    let params = match NondimParams::new(wavelength, depth, gravity, amplitude) {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return ExitStatus::Failure;
        }
    };
    let r = nondim::shallowness_report(&params, ratio_max);
    let _ = writeln!(
        out,
        "delta={:.6e} delta2={:.6e} epsilon={:.6e} ratio={:.6e} ratio_max={} sound_speed={:.6} is_shallow={}",
        r.delta,
        r.delta2,
        r.epsilon,
        r.ratio,
        r.ratio_max,
        params.sound_speed(),
        r.is_shallow
    );
    ExitStatus::Success
}

pub fn cmd_speed(depth: f64, gravity: f64, out: &mut dyn Write, err: &mut dyn Write) -> ExitStatus {
    match nondim::sound_speed(depth, gravity) {
        Ok(s) => {
            let _ = writeln!(out, "{:.1} km/h ({:.2} m/s)", s.kilometers_per_hour, s.meters_per_second);
            ExitStatus::Success
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            ExitStatus::Failure
        }
    }
}
