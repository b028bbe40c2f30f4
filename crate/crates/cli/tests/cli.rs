use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use proptest::prelude::*;
use shoalwave::solver::{FluxKind, Order};
use shoalwave::{Boundary, DetectorConfig, SolverConfig};
use shoalwave_cli::bundled::{scenario, scenario_dir, SCENARIOS, SHOALING_ONSET_FILE};
use shoalwave_cli::commands::{cmd_run_batch, run_config, run_id, ExitStatus, RunOverrides};
use shoalwave_cli::config::Direction;
use shoalwave_cli::{BathymetrySpec, GridSpec, InitialCondition, OutputSpec, ScenarioConfig};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_shoalwave"))
}

fn run_bin(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn scenario_path(name: &str) -> String {
    scenario_dir().join(name).to_string_lossy().into_owned()
}

fn write_config(dir: &Path, file: &str, text: &str) -> PathBuf {
    let path = dir.join(file);
    fs::write(&path, text).unwrap();
    path
}

fn read_tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
        })
        .collect()
}

#[test]
fn bundled_configs_round_trip() {
    for (file, text) in SCENARIOS {
        let parsed = ScenarioConfig::from_toml(text).unwrap_or_else(|e| panic!("{file}: {e}"));
        parsed.validate().unwrap();
        let again = ScenarioConfig::from_toml(&parsed.to_toml()).unwrap();
        assert_eq!(parsed, again, "{file}");
    }
    assert!(scenario("shoaling_pulse").is_some());
    assert!(scenario("nope").is_none());
}

#[test]
fn unknown_keys_are_rejected() {
    let text = scenario("lake_at_rest").unwrap().replace("t_end", "t_final");
    assert!(ScenarioConfig::from_toml(&text).is_err());
}

fn arb_config() -> impl Strategy<Value = ScenarioConfig> {
    let bathy = prop_oneof![
        (-5.0f64..0.0).prop_map(|level| BathymetrySpec::Flat { level }),
        (-5.0f64..0.0, -1.0f64..1.0).prop_map(|(b0, b1)| BathymetrySpec::Linear { b0, b1 }),
        (1e-3f64..2.0, 1e-3f64..2.0).prop_map(|(h, k)| BathymetrySpec::TanhSafe { h, k }),
        "[a-z]{1,8}\\.csv".prop_map(|p| BathymetrySpec::Sampled { path: p.into() }),
    ];
    let initial = prop_oneof![
        (-1.0f64..1.0).prop_map(|level| InitialCondition::LakeAtRest { level }),
        (-5.0f64..5.0, 0.01f64..2.0, -0.1f64..0.1, -1.0f64..1.0, 0usize..3).prop_map(|(center, width, amplitude, level, d)| {
            let direction = [Direction::Right, Direction::Left, Direction::Standing][d];
            InitialCondition::GaussianPulse { center, width, amplitude, level, direction }
        }),
        (-1.0f64..1.0, -3.0f64..-1.0, -0.5f64..0.5, -0.5f64..0.5)
            .prop_map(|(a0, b0, b1, c0)| InitialCondition::LinearBottomAnalytic { a0, b0, b1, c0 }),
    ];
    let solver = (0.01f64..1.0, 0.0f64..100.0, 0usize..3, 1e-9f64..1e-3, 0.0f64..5.0, any::<bool>(), any::<bool>(), proptest::option::of(1usize..100_000))
        .prop_map(|(cfl, t_end, b, h_min, snapshot_interval, second, stop, max_steps)| SolverConfig {
            cfl,
            t_end,
            boundary: [Boundary::Periodic, Boundary::Transmissive, Boundary::Reflective][b].clone(),
            h_min,
            snapshot_interval,
            order: if second { Order::Second } else { Order::First },
            flux: FluxKind::Hll,
            stop_at_first_event: stop,
            max_steps,
        });
    let detector = (proptest::option::of(1e-12f64..1e-3), 1e-6f64..1.0, 1e-3f64..1.0, proptest::option::of(0.1f64..10.0), any::<bool>())
        .prop_map(|(eps_px, alert_eps_r, alert_eps_gamma, gamma_ref, report_plateaus)| DetectorConfig {
            eps_px,
            alert_eps_r,
            alert_eps_gamma,
            gamma_ref,
            report_plateaus,
            ..DetectorConfig::default()
        });
    let grid = (-10.0f64..10.0, 1e-4f64..1.0, 8usize..10_000).prop_map(|(x0, dx, n)| GridSpec { x0, dx, n });
    let output = (proptest::option::of("[a-z]{1,6}"), any::<bool>(), any::<bool>()).prop_map(|(dir, riemann, event_snapshots)| {
        OutputSpec { dir: dir.map(PathBuf::from), riemann, event_snapshots }
    });
    ("[a-z_]{1,12}", bathy, initial, proptest::option::of(grid), solver, detector, output).prop_map(
        |(name, bathymetry, initial, grid, solver, detector, output)| ScenarioConfig {
            name,
            bathymetry,
            initial,
            grid,
            solver,
            detector,
            output,
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]
    #[test]
    fn config_round_trip(config in arb_config()) {
        let text = config.to_toml();
        let parsed = ScenarioConfig::from_toml(&text).unwrap();
        prop_assert_eq!(&parsed, &config);
        prop_assert_eq!(ScenarioConfig::from_toml(&parsed.to_toml()).unwrap(), parsed);
    }
}

#[test]
fn lake_at_rest_run_succeeds_without_events() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_bin(&["run", &scenario_path("lake_at_rest.cfg"), "--out-root", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let dir = tmp.path().join("lake_at_rest");
    assert_eq!(fs::read_to_string(dir.join("events.jsonl")).unwrap(), "");
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("run.json")).unwrap()).unwrap();
    assert_eq!(manifest["status"], "completed");
    assert_eq!(manifest["event_count"], 0);
    let snaps = manifest["snapshots"].as_array().unwrap();
    assert_eq!(snaps.len(), 6);
    for s in snaps {
        assert!(dir.join(s["file"].as_str().unwrap()).is_file());
    }
    assert!(stdout(&out).contains("0 events"));
}

#[test]
fn config_errors_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path().to_str().unwrap();
    assert_eq!(run_bin(&["run", "/nonexistent/x.cfg", "--out-root", root]).status.code(), Some(1));

    let bad_cfl = write_config(tmp.path(), "cfl.cfg", &scenario("lake_at_rest").unwrap().replace("t_end = 5.0", "t_end = 5.0\ncfl = 1.5"));
    assert_eq!(run_bin(&["run", bad_cfl.to_str().unwrap(), "--out-root", root]).status.code(), Some(1));

    let missing_bed = write_config(
        tmp.path(),
        "bed.cfg",
        "name = \"m\"\n[bathymetry]\nkind = \"sampled\"\npath = \"absent.csv\"\n[initial]\nkind = \"lake_at_rest\"\n[grid]\nx0 = 0.0\ndx = 0.1\nn = 10\n",
    );
    let out = run_bin(&["run", missing_bed.to_str().unwrap(), "--out-root", root]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("does not exist"));
}

#[test]
fn dry_start_exits_two() {
    let tmp = tempfile::tempdir().unwrap();
    // still level below the shelf of the shoaling bed
    let text = scenario("lake_at_rest").unwrap().replace("level = 0.0", "level = -0.06");
    let path = write_config(tmp.path(), "dry.cfg", &text);
    let out = run_bin(&["run", path.to_str().unwrap(), "--out-root", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let manifest = fs::read_to_string(tmp.path().join("lake_at_rest/run.json")).unwrap();
    assert!(manifest.contains("\"near_dry\""));

    let pulse = scenario("shoaling_pulse").unwrap().replace("amplitude = 0.001", "amplitude = 0.001\nlevel = -0.01");
    let path = write_config(tmp.path(), "dry_pulse.cfg", &pulse);
    let out = run_bin(&["run", path.to_str().unwrap(), "--out-root", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn non_finite_start_exits_three() {
    let tmp = tempfile::tempdir().unwrap();
    let mut csv = String::from("x,gamma_surface,u,b\n");
    for i in 0..16 {
        let u = if i == 7 { "NaN".to_string() } else { "0".to_string() };
        csv.push_str(&format!("{},0,{u},-1\n", i as f64 * 0.1));
    }
    fs::write(tmp.path().join("state.csv"), csv).unwrap();
    let path = write_config(
        tmp.path(),
        "nan.cfg",
        "name = \"nan\"\n[bathymetry]\nkind = \"flat\"\nlevel = -1.0\n[initial]\nkind = \"from_file\"\npath = \"state.csv\"\n",
    );
    let out = run_bin(&["run", path.to_str().unwrap(), "--out-root", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn from_file_restarts_a_run() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path().join("out");
    let lake = run_bin(&["run", &scenario_path("lake_at_rest.cfg"), "--out-root", root.to_str().unwrap(), "--t-end", "0"]);
    assert_eq!(lake.status.code(), Some(0));
    let snap = root.join("lake_at_rest/snap_000000.csv");
    let text = format!(
        "name = \"restart\"\n[bathymetry]\nkind = \"tanh_safe\"\nh = 0.05\nk = 0.5\n[initial]\nkind = \"from_file\"\npath = \"{}\"\n[solver]\nt_end = 0.5\n",
        snap.display()
    );
    let path = write_config(tmp.path(), "restart.cfg", &text);
    let out = run_bin(&["run", path.to_str().unwrap(), "--out-root", root.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    // a different bed must be refused
    let wrong = text.replace("h = 0.05", "h = 0.06");
    let path = write_config(tmp.path(), "wrong.cfg", &wrong);
    assert_eq!(run_bin(&["run", path.to_str().unwrap(), "--out-root", root.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn detect_exit_codes() {
    let onset = scenario_path(SHOALING_ONSET_FILE);
    let out = run_bin(&["detect", &onset, "--config", &scenario_path("shoaling_pulse.cfg")]);
    assert_eq!(out.status.code(), Some(4));
    let text = stdout(&out);
    assert!(text.contains("InlandRush") && text.contains("tangent-match residual"));

    let out = run_bin(&["detect", &onset, "--bathy", "tanh_safe:0.005,0.5"]);
    assert_eq!(out.status.code(), Some(4));

    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path().to_str().unwrap();
    for name in ["lake_at_rest.cfg", "deep_pulse.cfg"] {
        assert_eq!(run_bin(&["run", &scenario_path(name), "--out-root", root, "--t-end", "0"]).status.code(), Some(0));
    }
    let lake = run_bin(&["detect", &format!("{root}/lake_at_rest/snap_000000.csv"), "--bathy", "tanh_safe:0.05,0.5"]);
    assert_eq!(lake.status.code(), Some(0));
    assert!(stdout(&lake).contains("critical points: 0"));

    // crossings exist in deep water but do not raise the alert code
    let deep = run_bin(&["detect", &format!("{root}/deep_pulse/snap_000000.csv"), "--config", &scenario_path("deep_pulse.cfg")]);
    assert_eq!(deep.status.code(), Some(0));
    let text = stdout(&deep);
    assert!(!text.contains("critical points: 0"));
    assert!(text.contains("regime=Deep"));

    fs::write(tmp.path().join("bad.csv"), "x,gamma_surface,u,b\n1,2,3\n").unwrap();
    let bad = run_bin(&["detect", tmp.path().join("bad.csv").to_str().unwrap(), "--bathy", "flat:-1"]);
    assert_eq!(bad.status.code(), Some(1));
    let bad_spec = run_bin(&["detect", &onset, "--bathy", "wavy:1"]);
    assert_eq!(bad_spec.status.code(), Some(1));
}

#[test]
fn verify_analytic_exit_codes() {
    let ok = run_bin(&["verify-analytic"]);
    assert_eq!(ok.status.code(), Some(0));
    let order: f64 = stdout(&ok)
        .lines()
        .find_map(|l| l.strip_prefix("order: "))
        .and_then(|l| l.split_whitespace().next())
        .unwrap()
        .parse()
        .unwrap();
    assert!((0.9..=2.2).contains(&order), "order {order}");

    assert_eq!(run_bin(&["verify-analytic", "--broken-flux"]).status.code(), Some(1));

    let flat = run_bin(&["verify-analytic", "--b1", "0"]);
    assert_eq!(flat.status.code(), Some(0));
    assert!(stdout(&flat).contains("order: exact"));

    assert_eq!(run_bin(&["verify-analytic", "--c0", "-2"]).status.code(), Some(1));
}

#[test]
fn thin_wrappers() {
    let out = run_bin(&["classify-degenerate", "1", "1", "2", "2"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out).trim(), "SignedInfinity");
    assert_eq!(stdout(&run_bin(&["classify-degenerate", "1", "2", "1", "3"])).trim(), "OrderSqrtDepth");
    assert_eq!(stdout(&run_bin(&["classify-degenerate", "2", "1", "-1", "3"])).trim(), "VanishingCorrection");
    assert_eq!(run_bin(&["classify-degenerate", "1", "1", "0", "2"]).status.code(), Some(1));

    let speed = stdout(&run_bin(&["speed", "4282", "9.8"]));
    assert!(speed.starts_with("737.5 km/h"), "{speed}");
    assert_eq!(run_bin(&["speed", "-1"]).status.code(), Some(1));

    let nondim = run_bin(&["nondim", "8000", "39", "9.8", "7"]);
    assert_eq!(nondim.status.code(), Some(0));
    assert!(stdout(&nondim).contains("is_shallow=true"));
    assert_eq!(run_bin(&["nondim", "0", "39", "9.8", "7"]).status.code(), Some(1));
}

#[test]
fn runs_are_bit_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let config = ScenarioConfig::from_toml(scenario("deep_pulse").unwrap()).unwrap();
    for root in [a.path(), b.path()] {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        assert_eq!(run_config(&config, &scenario_dir(), root, &mut out, &mut err), ExitStatus::Success);
    }
    let (ta, tb) = (read_tree(&a.path().join("deep_pulse")), read_tree(&b.path().join("deep_pulse")));
    assert!(ta.len() >= 4);
    assert_eq!(ta, tb);
}

#[test]
fn batch_matches_sequential_runs() {
    let names = ["lake_at_rest.cfg", "deep_pulse.cfg", "linear_bottom.cfg"];
    let paths: Vec<PathBuf> = names.iter().map(|n| scenario_dir().join(n)).collect();
    let overrides = RunOverrides { t_end: Some(0.3), ..RunOverrides::default() };
    let seq = tempfile::tempdir().unwrap();
    let par = tempfile::tempdir().unwrap();
    let (mut o1, mut e1, mut o2, mut e2) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    assert_eq!(cmd_run_batch(&paths, Some(seq.path()), &overrides, 1, &mut o1, &mut e1), ExitStatus::Success);
    assert_eq!(cmd_run_batch(&paths, Some(par.path()), &overrides, 3, &mut o2, &mut e2), ExitStatus::Success);
    for n in ["lake_at_rest", "deep_pulse", "linear_bottom"] {
        assert_eq!(read_tree(&seq.path().join(n)), read_tree(&par.path().join(n)), "{n}");
    }
    let strip = |o: &[u8]| String::from_utf8_lossy(o).lines().map(|l| l.split(" -> ").next().unwrap().to_string()).collect::<Vec<_>>();
    assert_eq!(strip(&o1), strip(&o2));

    // two configs with the same name would collide
    let dup = vec![paths[0].clone(), paths[0].clone()];
    assert_eq!(cmd_run_batch(&dup, Some(seq.path()), &overrides, 2, &mut o1, &mut e1), ExitStatus::Failure);
}

#[test]
fn overrides_and_run_id() {
    let mut config = ScenarioConfig::from_toml(scenario("shoaling_pulse").unwrap()).unwrap();
    let id = run_id(&config);
    assert_eq!(id.len(), 16);
    assert_eq!(id, run_id(&config.clone()));
    RunOverrides { t_end: Some(1.0), boundary: Some(Boundary::Transmissive), ..RunOverrides::default() }.apply(&mut config);
    assert_eq!(config.solver.t_end, 1.0);
    assert_eq!(config.solver.boundary, Boundary::Transmissive);
    assert_ne!(run_id(&config), id);
}

#[test]
fn output_root_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["run", &scenario_path("linear_bottom.cfg"), "--t-end", "0.05"])
        .env("SHOALWAVE_OUTPUT_ROOT", tmp.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(tmp.path().join("linear_bottom/run.json").is_file());
}

#[test]
fn event_log_and_onset_snapshots() {
    let tmp = tempfile::tempdir().unwrap();
    let config = ScenarioConfig::from_toml(scenario("deep_pulse").unwrap()).unwrap();
    let config = ScenarioConfig { output: OutputSpec { riemann: true, event_snapshots: true, dir: None }, ..config };
    let (mut out, mut err) = (Vec::new(), Vec::new());
    assert_eq!(run_config(&config, &scenario_dir(), tmp.path(), &mut out, &mut err), ExitStatus::Success);
    let dir = tmp.path().join("deep_pulse");
    let log = fs::read_to_string(dir.join("events.jsonl")).unwrap();
    let id = run_id(&config);
    let lines: Vec<serde_json::Value> = log.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert!(!lines.is_empty());
    for l in &lines {
        assert_eq!(l["run_id"], id.as_str());
        for key in ["t", "x_star", "classification", "side", "depth_regime", "diagnostics"] {
            assert!(l.get(key).is_some(), "missing {key}");
        }
        assert_eq!(l["diagnostics"].as_object().unwrap().len(), 6);
    }
    let summary = String::from_utf8_lossy(&out);
    assert_eq!(summary.lines().filter(|l| l.starts_with("event ")).count(), lines.len());
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("run.json")).unwrap()).unwrap();
    for entry in manifest["onsets"].as_array().unwrap() {
        assert!(dir.join(entry["file"].as_str().unwrap()).is_file());
    }
    let riemann = fs::read_to_string(dir.join("riemann_000000.csv")).unwrap();
    assert!(riemann.starts_with("x,gamma,p,q,p_x,q_x,speed_p,speed_q\n"));
}
