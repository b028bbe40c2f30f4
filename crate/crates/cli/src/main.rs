use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use shoalwave::solver::Order;
use shoalwave::{Boundary, DetectorConfig};
use shoalwave_cli::commands::{self, BathySource, VerifyArgs};
use shoalwave_cli::{BathymetrySpec, RunOverrides};

#[derive(Parser)]
#[command(name = "shoalwave", version, about = "1D shallow-water runs and Riemann-invariant blow-up detection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum BoundaryArg {
    Periodic,
    Transmissive,
    Reflective,
}

#[derive(Clone, Copy, ValueEnum)]
enum OrderArg {
    First,
    Second,
}

impl From<OrderArg> for Order {
    fn from(o: OrderArg) -> Self {
        match o {
            OrderArg::First => Order::First,
            OrderArg::Second => Order::Second,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one or more scenario files.
    Run {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
        /// Output root; each run writes to <root>/<name> unless its config
        /// names a directory. Defaults to $SHOALWAVE_OUTPUT_ROOT, then ./runs.
        #[arg(long)]
        out_root: Option<PathBuf>,
        /// Scenarios run concurrently.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long)]
        cfl: Option<f64>,
        #[arg(long, value_enum)]
        boundary: Option<BoundaryArg>,
        #[arg(long, value_enum)]
        order: Option<OrderArg>,
        #[arg(long)]
        h_min: Option<f64>,
        #[arg(long)]
        snapshot_interval: Option<f64>,
        #[arg(long)]
        max_steps: Option<usize>,
        #[arg(long)]
        stop_at_first_event: bool,
    },
    /// Compare the solver with the closed-form linear-bed flow at two
    /// resolutions.
    #[command(allow_negative_numbers = true)]
    VerifyAnalytic {
        #[arg(long, default_value_t = 0.2)]
        a0: f64,
        #[arg(long, default_value_t = -1.0)]
        b0: f64,
        #[arg(long, default_value_t = 0.1)]
        b1: f64,
        #[arg(long, default_value_t = 0.0)]
        c0: f64,
        #[arg(long, default_value_t = -1.0)]
        x1: f64,
        #[arg(long, default_value_t = 1.0)]
        x2: f64,
        /// Coarse resolution; the fine one doubles it.
        #[arg(long, default_value_t = 400)]
        n: usize,
        #[arg(long, default_value_t = 0.5)]
        t_end: f64,
        /// Minimum observed order to pass.
        #[arg(long, default_value_t = 0.9)]
        threshold: f64,
        #[arg(long, value_enum, default_value = "first")]
        order: OrderArg,
        #[arg(long, default_value_t = 0.45)]
        cfl: f64,
        /// Drop the bed terms from the flux (negative control).
        #[arg(long, hide = true)]
        broken_flux: bool,
    },
    /// Analyse one snapshot CSV; exits 4 on shallow-water rush events.
    #[command(allow_negative_numbers = true)]
    Detect {
        state_file: PathBuf,
        /// Bathymetry as flat:L, linear:B0,B1, tanh_safe:H,K or sampled:PATH.
        #[arg(long, conflicts_with = "config", required_unless_present = "config")]
        bathy: Option<String>,
        /// Take the bathymetry from this scenario file.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        eps_px: Option<f64>,
        #[arg(long)]
        alert_eps_r: Option<f64>,
        #[arg(long)]
        alert_eps_gamma: Option<f64>,
        /// Reference gamma for depth regimes; defaults to the snapshot maximum.
        #[arg(long)]
        gamma_ref: Option<f64>,
        /// Also report zero plateaus of P_x.
        #[arg(long)]
        plateaus: bool,
    },
    /// Limit regime of b_x / P_x from vanishing orders and leading coefficients.
    #[command(allow_negative_numbers = true)]
    ClassifyDegenerate {
        p: u32,
        q: u32,
        b1: f64,
        c1: f64,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
    },
    /// Shallowness report for wavelength, depth, gravity and amplitude.
    #[command(allow_negative_numbers = true)]
    Nondim {
        wavelength: f64,
        depth: f64,
        gravity: f64,
        amplitude: f64,
        #[arg(long, default_value_t = shoalwave::nondim::DEFAULT_RATIO_MAX)]
        ratio_max: f64,
    },
    /// Long-wave speed sqrt(g * depth).
    #[command(allow_negative_numbers = true)]
    Speed {
        depth: f64,
        #[arg(default_value_t = 9.8)]
        gravity: f64,
    },
}

fn main() -> ExitCode {
    // usage errors share exit status 1 with config errors; 2 means near-dry
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let (mut out, mut err) = (io::stdout().lock(), io::stderr().lock());
    let status = match cli.command {
        Command::Run {
            configs,
            out_root,
            jobs,
            t_end,
            cfl,
            boundary,
            order,
            h_min,
            snapshot_interval,
            max_steps,
            stop_at_first_event,
        } => {
            let overrides = RunOverrides {
                t_end,
                cfl,
                boundary: boundary.map(|b| match b {
                    BoundaryArg::Periodic => Boundary::Periodic,
                    BoundaryArg::Transmissive => Boundary::Transmissive,
                    BoundaryArg::Reflective => Boundary::Reflective,
                }),
                order: order.map(Order::from),
                h_min,
                snapshot_interval,
                max_steps,
                stop_at_first_event,
            };
            commands::cmd_run_batch(&configs, out_root.as_deref(), &overrides, jobs, &mut out, &mut err)
        }
        Command::VerifyAnalytic { a0, b0, b1, c0, x1, x2, n, t_end, threshold, order, cfl, broken_flux } => {
            let args = VerifyArgs { a0, b0, b1, c0, x1, x2, n, t_end, threshold, order: order.into(), cfl, broken_flux };
            commands::cmd_verify_analytic(&args, &mut out, &mut err)
        }
        Command::Detect {
            state_file,
            bathy,
            config,
            eps_px,
            alert_eps_r,
            alert_eps_gamma,
            gamma_ref,
            plateaus,
        } => {
            let source = match (bathy, config) {
                (Some(spec), _) => match BathymetrySpec::parse_arg(&spec) {
                    Ok(s) => BathySource::Spec(s),
                    Err(e) => {
                        eprintln!("error: {e}");
                        return ExitCode::from(1);
                    }
                },
                (None, Some(path)) => BathySource::Scenario(path),
                (None, None) => unreachable!("clap requires one of --bathy and --config"),
            };
            let defaults = DetectorConfig::default();
            let config = DetectorConfig {
                eps_px,
                alert_eps_r: alert_eps_r.unwrap_or(defaults.alert_eps_r),
                alert_eps_gamma: alert_eps_gamma.unwrap_or(defaults.alert_eps_gamma),
                gamma_ref,
                report_plateaus: plateaus,
                ..defaults
            };
            commands::cmd_detect(&state_file, &source, &config, &mut out, &mut err)
        }
        Command::ClassifyDegenerate { p, q, b1, c1, gamma } => {
            commands::cmd_classify_degenerate(p, q, b1, c1, gamma, &mut out, &mut err)
        }
        Command::Nondim { wavelength, depth, gravity, amplitude, ratio_max } => {
            commands::cmd_nondim(wavelength, depth, gravity, amplitude, ratio_max, &mut out, &mut err)
        }
        Command::Speed { depth, gravity } => commands::cmd_speed(depth, gravity, &mut out, &mut err),
    };
    ExitCode::from(status.code())
}
