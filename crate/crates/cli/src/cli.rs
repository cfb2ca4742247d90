//! Command-line surface. Every configuration key is a `--key value` flag.

use std::path::{Path, PathBuf};

use clap::parser::ValueSource;
use clap::{Arg, ArgMatches, Command};

use crate::config::{ExperimentConfig, Mode, KEYS};
use crate::error::{config_err, Result};
use crate::output::RunManifest;
use crate::presets::{preset, PRESETS};
use crate::run::run;

const BOOL_KEYS: &[&str] = &["members", "oracle_check", "allow_large_oracle", "force"];

const MODES: &[(Mode, &str)] = &[
    (Mode::Quantum, "quantum echo trace of a coherent state or a random ensemble"),
    (Mode::Classical, "Monte-Carlo classical fidelity of a coherent packet"),
    (Mode::Theory, "semiclassical predictions and theory overlay only"),
    (Mode::Correlation, "two-time correlation surface from the dense oracle"),
    (Mode::Sweep, "plateau, decay and resonance readouts along one parameter axis"),
];

fn with_keys(mut cmd: Command) -> Command {
    cmd = cmd.arg(
        Arg::new("config")
            .long("config")
            .value_name("FILE")
            .help("flat key = value configuration file; flags override it"),
    );
    for (key, help) in KEYS {
        let mut arg = Arg::new(*key).long(*key).help(*help);
        if BOOL_KEYS.contains(key) {
            arg = arg.value_name("BOOL").num_args(0..=1).default_missing_value("true");
        } else {
            arg = arg.value_name("VALUE").num_args(1);
        }
        if key.contains('_') {
            arg = arg.alias(key.replace('_', "-"));
        }
        cmd = cmd.arg(arg);
    }
    cmd
}

pub fn command() -> Command {
    let mut root = Command::new("echo-lab")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Fidelity echo experiments for the integrable kicked top")
        .subcommand_required(true)
        .arg_required_else_help(true);
    for (mode, about) in MODES {
        root = root.subcommand(with_keys(Command::new(mode.name()).about(*about)));
    }
    root.subcommand(with_keys(
        Command::new("preset")
            .about("run a named figure preset into subdirectories of the output directory")
            .arg(Arg::new("name").required(true).value_parser(PRESETS.to_vec())),
    ))
}

/// Flags given on the command line, in key order.
fn flag_layer(m: &ArgMatches) -> Vec<(String, String)> {
    KEYS.iter()
        .filter(|(k, _)| m.value_source(k) == Some(ValueSource::CommandLine))
        .filter_map(|(k, _)| m.get_one::<String>(k).map(|v| (k.to_string(), v.clone())))
        .collect()
}

fn layered(base: &[(String, String)], file: Option<&Path>, flags: &[(String, String)]) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    cfg.apply_layer(base)?;
    if let Some(path) = file {
        cfg.apply_layer(&ExperimentConfig::from_file(path)?)?;
    }
    cfg.apply_layer(flags)?;
    Ok(cfg)
}

/// Executes the parsed command; returns the run directories with their manifests.
pub fn dispatch(matches: &ArgMatches, command_line: &str) -> Result<Vec<(PathBuf, RunManifest)>> {
    let (name, sub) = matches
        .subcommand()
        .ok_or_else(|| config_err("mode", "a subcommand is required"))?;
    let file = sub.get_one::<String>("config").map(PathBuf::from);
    let flags = flag_layer(sub);
    if name == "preset" {
        let preset_name = sub.get_one::<String>("name").expect("required by clap");
        let runs = preset(preset_name).ok_or_else(|| config_err("name", format!("unknown preset `{preset_name}`")))?;
        // Resolve and validate every run before any of them starts.
        let mut planned = Vec::with_capacity(runs.len());
        for r in &runs {
            let mut cfg = layered(&r.pairs, file.as_deref(), &flags)?;
            cfg.output = cfg.output.join(r.name);
            cfg.validate(r.mode)?;
            planned.push((r.mode, cfg));
        }
        let mut out = Vec::with_capacity(planned.len());
        for (mode, cfg) in &planned {
            let manifest = run(*mode, cfg, Some(preset_name), command_line)?;
            out.push((cfg.output.clone(), manifest));
        }
        return Ok(out);
    }
    let mode: Mode = name.parse().map_err(|e: String| config_err("mode", e))?;
    let cfg = layered(&[], file.as_deref(), &flags)?;
    let manifest = run(mode, &cfg, None, command_line)?;
    Ok(vec![(cfg.output.clone(), manifest)])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn command_is_well_formed() {
        command().debug_assert();
    }

    #[test]
    fn flags_mirror_every_key() {
        let m = command()
            .try_get_matches_from(["echo-lab", "quantum", "--spin", "7", "--delta-times-s", "0.3", "--force"])
            .unwrap();
        let (_, sub) = m.subcommand().unwrap();
        let layer = flag_layer(sub);
        assert_eq!(
            layer,
            vec![
                ("spin".to_string(), "7".to_string()),
                ("delta_times_s".to_string(), "0.3".to_string()),
                ("force".to_string(), "true".to_string()),
            ]
        );
    }
}
