//! Named multi-run experiments reproducing the standard figures at desk scale.

use crate::config::Mode;

pub const PRESETS: &[&str] = &["fig1a", "fig6", "fig8-desk"];

#[derive(Debug, Clone, PartialEq)]
pub struct PresetRun {
    /// Subdirectory of the output directory.
    pub name: &'static str,
    pub mode: Mode,
    pub pairs: Vec<(String, String)>,
}

fn pairs(items: &[(&str, &str)]) -> Vec<(String, String)> {
    items.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

fn run(name: &'static str, mode: Mode, common: &[(&str, &str)], own: &[(&str, &str)]) -> PresetRun {
    let mut p = pairs(common);
    p.extend(pairs(own));
    PresetRun { name, mode, pairs: p }
}

/// Runs of a preset; `None` for unknown names. Every `t_max` is `auto`, so the time
/// span follows from the theory timescales of the resolved parameters.
pub fn preset(name: &str) -> Option<Vec<PresetRun>> {
    Some(match name {
        "fig1a" => {
            let common = [
                ("spin", "200"),
                ("alpha", "1.1"),
                ("beta", "0"),
                ("gamma", "0"),
                ("delta_times_s", "0.32"),
                ("state", "coherent"),
                ("theta", "1"),
                ("phi", "1"),
                ("t_max", "auto"),
            ];
            vec![
                run("quantum", Mode::Quantum, &common, &[("stride", "1")]),
                run("classical", Mode::Classical, &common, &[("stride", "10"), ("classical_samples", "20000")]),
                run("theory", Mode::Theory, &common, &[]),
            ]
        }
        "fig6" => {
            let common = [
                ("alpha", "1.1"),
                ("beta", "1.4"),
                ("gamma", "0"),
                ("delta_times_s", "0.32"),
                ("state", "random"),
                ("t_max", "auto"),
                ("times", "uniform"),
            ];
            vec![
                run("s200", Mode::Quantum, &common, &[("spin", "200"), ("count", "100"), ("stride", "1")]),
                run(
                    "s1600",
                    Mode::Quantum,
                    &common,
                    &[("spin", "1600"), ("count", "20"), ("stride", "4"), ("batch", "4")],
                ),
            ]
        }
        "fig8-desk" => {
            let common = [
                ("spin", "200"),
                ("alpha", "1.1"),
                ("beta", "0"),
                ("gamma", "0"),
                ("delta_times_s", "0.064"),
                ("state", "random"),
                ("count", "1000"),
                ("times", "log"),
                ("log_points", "160"),
                ("t_max", "auto"),
                ("batch", "50"),
            ];
            vec![run("quantum", Mode::Quantum, &common, &[])]
        }
        _ => return None,
    })
}
