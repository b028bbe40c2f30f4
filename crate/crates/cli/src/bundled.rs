//! Scenario files shipped with the binary.

/// `(file name, contents)` of every bundled scenario.
pub const SCENARIOS: &[(&str, &str)] = &[
    ("lake_at_rest.cfg", include_str!("../scenarios/lake_at_rest.cfg")),
    ("shoaling_pulse.cfg", include_str!("../scenarios/shoaling_pulse.cfg")),
    ("deep_pulse.cfg", include_str!("../scenarios/deep_pulse.cfg")),
    ("periodic_pulse.cfg", include_str!("../scenarios/periodic_pulse.cfg")),
    ("linear_bottom.cfg", include_str!("../scenarios/linear_bottom.cfg")),
];

/// Looks up a bundled scenario by file name, with or without `.cfg`.
pub fn scenario(name: &str) -> Option<&'static str> {
    SCENARIOS
        .iter()
        .find(|(file, _)| *file == name || file.strip_suffix(".cfg") == Some(name))
        .map(|(_, text)| *text)
}

/// Directory holding the bundled scenario files in the source tree.
pub fn scenario_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}

/// Snapshot of the shoaling scenario at the onset of its first shallow-water
/// inland rush, in the fields CSV format.
pub const SHOALING_ONSET_FILE: &str = "shoaling_onset.csv";
