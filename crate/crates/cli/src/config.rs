//! Flat `key = value` experiment configuration.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{config_err, io_err, Result};

/// Environment variable naming the default output directory.
pub const OUTPUT_ENV: &str = "ECHO_LAB_OUTPUT";
pub const DEFAULT_OUTPUT: &str = "echo-out";

/// Every configuration key with its help text. Each key is also a command-line flag.
pub const KEYS: &[(&str, &str)] = &[
    ("spin", "spin quantum number S (dimension 2S+1)"),
    ("alpha", "twist strength"),
    ("beta", "twist offset"),
    ("gamma", "cubic twist term of the modified top"),
    ("j_ref", "reference action of the cubic term, or `auto` (packet center, else 0)"),
    ("delta", "perturbation strength; exclusive with delta_times_s"),
    ("delta_times_s", "perturbation strength times S; exclusive with delta"),
    ("state", "initial state: coherent | random"),
    ("theta", "coherent-state polar angle"),
    ("phi", "coherent-state azimuth"),
    ("seed", "base RNG seed for random states and classical samples"),
    ("count", "random-ensemble size"),
    ("t_max", "last time step, or `auto` (derived from the theory timescales)"),
    ("stride", "sampling stride of uniform time grids"),
    ("times", "time grid: uniform | log"),
    ("log_points", "number of points of a log grid"),
    ("evaluator", "quantum evaluator: auto | stepping | spectral"),
    ("batch", "random states per spectral batch"),
    ("members", "also write one CSV per ensemble member (true | false)"),
    ("oracle_check", "cross-check the first trace against the other evaluator (true | false)"),
    ("allow_large_oracle", "allow dense oracles above their size limit (true | false)"),
    ("classical_samples", "Monte-Carlo sample count of the classical ensemble"),
    ("partitions", "classical ensemble partitions evaluated concurrently"),
    ("overlay_points", "number of log-spaced points of the theory overlay"),
    ("axis", "sweep axis: delta | spin | seed"),
    ("values", "comma-separated sweep values"),
    ("output", "output directory"),
    ("force", "run even when the resource guard refuses (true | false)"),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Quantum,
    Classical,
    Theory,
    Correlation,
    Sweep,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Quantum => "quantum",
            Mode::Classical => "classical",
            Mode::Theory => "theory",
            Mode::Correlation => "correlation",
            Mode::Sweep => "sweep",
        }
    }
}

impl FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "quantum" => Mode::Quantum,
            "classical" => Mode::Classical,
            "theory" => Mode::Theory,
            "correlation" => Mode::Correlation,
            "sweep" => Mode::Sweep,
            _ => return Err(format!("unknown mode `{s}`")),
        })
    }
}

macro_rules! keyword_enum {
    ($name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq)]
        pub enum $name { $($variant),+ }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $($name::$variant => $text),+ })
            }
        }

        impl FromStr for $name {
            type Err = String;
            fn from_str(s: &str) -> std::result::Result<Self, String> {
                match s {
                    $($text => Ok($name::$variant),)+
                    _ => Err(format!("expected one of: {}", [$($text),+].join(", "))),
                }
            }
        }
    };
}

keyword_enum!(StateKind { Coherent => "coherent", Random => "random" });
keyword_enum!(TimeGrid { Uniform => "uniform", Log => "log" });
keyword_enum!(Evaluator { Auto => "auto", Stepping => "stepping", Spectral => "spectral" });
keyword_enum!(SweepAxis { Delta => "delta", Spin => "spin", Seed => "seed" });

/// A value that is either given or derived at run time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Auto<T> {
    Auto,
    Value(T),
}

impl<T: fmt::Display> fmt::Display for Auto<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Auto::Auto => f.write_str("auto"),
            Auto::Value(v) => v.fmt(f),
        }
    }
}

impl<T: FromStr> FromStr for Auto<T> {
    type Err = T::Err;
    fn from_str(s: &str) -> std::result::Result<Self, T::Err> {
        if s == "auto" {
            Ok(Auto::Auto)
        } else {
            s.parse().map(Auto::Value)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub spin: u32,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub j_ref: Auto<f64>,
    pub delta: Option<f64>,
    pub delta_times_s: Option<f64>,
    pub state: StateKind,
    pub theta: f64,
    pub phi: f64,
    pub seed: u64,
    pub count: usize,
    pub t_max: Auto<u64>,
    pub stride: u64,
    pub times: TimeGrid,
    pub log_points: usize,
    pub evaluator: Evaluator,
    pub batch: usize,
    pub members: bool,
    pub oracle_check: bool,
    pub allow_large_oracle: bool,
    pub classical_samples: usize,
    pub partitions: usize,
    pub overlay_points: usize,
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub output: PathBuf,
    pub force: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let output = std::env::var_os(OUTPUT_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT));
        Self {
            spin: 200,
            alpha: 1.1,
            beta: 0.0,
            gamma: 0.0,
            j_ref: Auto::Auto,
            delta: None,
            delta_times_s: None,
            state: StateKind::Coherent,
            theta: 1.0,
            phi: 1.0,
            seed: 1,
            count: 100,
            t_max: Auto::Auto,
            stride: 1,
            times: TimeGrid::Uniform,
            log_points: 200,
            evaluator: Evaluator::Auto,
            batch: 16,
            members: false,
            oracle_check: false,
            allow_large_oracle: false,
            classical_samples: 20_000,
            partitions: 8,
            overlay_points: 200,
            axis: SweepAxis::Delta,
            values: Vec::new(),
            output,
            force: false,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    value
        .parse()
        .map_err(|e: T::Err| config_err(key, format!("cannot parse `{value}`: {e}")))
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

impl ExperimentConfig {
    /// Sets one key from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "spin" => self.spin = parse(key, v)?,
            "alpha" => self.alpha = parse(key, v)?,
            "beta" => self.beta = parse(key, v)?,
            "gamma" => self.gamma = parse(key, v)?,
            "j_ref" => self.j_ref = parse(key, v)?,
            "delta" => self.delta = Some(parse(key, v)?),
            "delta_times_s" => self.delta_times_s = Some(parse(key, v)?),
            "state" => self.state = parse(key, v)?,
            "theta" => self.theta = parse(key, v)?,
            "phi" => self.phi = parse(key, v)?,
            "seed" => self.seed = parse(key, v)?,
            "count" => self.count = parse(key, v)?,
            "t_max" => self.t_max = parse(key, v)?,
            "stride" => self.stride = parse(key, v)?,
            "times" => self.times = parse(key, v)?,
            "log_points" => self.log_points = parse(key, v)?,
            "evaluator" => self.evaluator = parse(key, v)?,
            "batch" => self.batch = parse(key, v)?,
            "members" => self.members = parse(key, v)?,
            "oracle_check" => self.oracle_check = parse(key, v)?,
            "allow_large_oracle" => self.allow_large_oracle = parse(key, v)?,
            "classical_samples" => self.classical_samples = parse(key, v)?,
            "partitions" => self.partitions = parse(key, v)?,
            "overlay_points" => self.overlay_points = parse(key, v)?,
            "axis" => self.axis = parse(key, v)?,
            "values" => self.values = parse_list(key, v)?,
            "output" => self.output = PathBuf::from(v),
            "force" => self.force = parse(key, v)?,
            _ => return Err(config_err(key, "unknown key")),
        }
        Ok(())
    }

    /// Applies one layer of settings (a file, a preset, or the command line).
    ///
    /// Within a layer `delta` and `delta_times_s` are exclusive; a layer that sets one
    /// of them clears the other inherited from earlier layers.
    pub fn apply_layer(&mut self, pairs: &[(String, String)]) -> Result<()> {
        let has = |k: &str| pairs.iter().any(|(key, _)| key == k);
        if has("delta") && has("delta_times_s") {
            return Err(config_err("delta", "give either delta or delta_times_s, not both"));
        }
        for (i, (k, _)) in pairs.iter().enumerate() {
            if pairs[..i].iter().any(|(prev, _)| prev == k) {
                return Err(config_err(k, "given more than once"));
            }
        }
        if has("delta") {
            self.delta_times_s = None;
        }
        if has("delta_times_s") {
            self.delta = None;
        }
        for (k, v) in pairs {
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Vec<(String, String)>> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        parse_pairs(&text)
    }

    /// Resolved perturbation strength.
    pub fn delta(&self) -> Result<f64> {
        let d = match (self.delta, self.delta_times_s) {
            (Some(d), None) => d,
            (None, Some(ds)) => ds / self.spin as f64,
            (Some(_), Some(_)) => {
                return Err(config_err("delta", "give either delta or delta_times_s, not both"))
            }
            (None, None) => return Err(config_err("delta", "one of delta or delta_times_s is required")),
        };
        if !(d.is_finite() && d >= 0.0) {
            return Err(config_err("delta", "must be finite and non-negative"));
        }
        Ok(d)
    }

    /// Checks the fields every mode relies on.
    pub fn validate(&self, mode: Mode) -> Result<()> {
        if !(mode == Mode::Sweep && self.axis == SweepAxis::Delta) {
            self.delta()?;
        }
        if self.spin == 0 {
            return Err(config_err("spin", "must be at least 1"));
        }
        for (key, v) in [("alpha", self.alpha), ("beta", self.beta), ("gamma", self.gamma)] {
            if !v.is_finite() {
                return Err(config_err(key, "must be finite"));
            }
        }
        if self.stride == 0 {
            return Err(config_err("stride", "must be at least 1"));
        }
        if self.t_max == Auto::Value(0) {
            return Err(config_err("t_max", "must be at least 1"));
        }
        if self.state == StateKind::Coherent && !(self.theta > 0.0 && self.theta < std::f64::consts::PI) {
            return Err(config_err("theta", "must lie strictly between 0 and pi"));
        }
        if self.state == StateKind::Random && self.count == 0 {
            return Err(config_err("count", "must be at least 1"));
        }
        if self.times == TimeGrid::Log && self.log_points < 2 {
            return Err(config_err("log_points", "must be at least 2"));
        }
        if self.batch == 0 {
            return Err(config_err("batch", "must be at least 1"));
        }
        if mode == Mode::Classical {
            if self.state != StateKind::Coherent {
                return Err(config_err("state", "the classical ensemble needs a coherent state"));
            }
            if self.classical_samples < 2 {
                return Err(config_err("classical_samples", "must be at least 2"));
            }
            if self.partitions == 0 || self.partitions > self.classical_samples {
                return Err(config_err("partitions", "must lie in 1..=classical_samples"));
            }
        }
        if self.overlay_points < 2 {
            return Err(config_err("overlay_points", "must be at least 2"));
        }
        if mode == Mode::Sweep && self.values.is_empty() {
            return Err(config_err("values", "a sweep needs at least one value"));
        }
        if mode == Mode::Correlation && self.t_max == Auto::Auto {
            return Err(config_err("t_max", "correlation surfaces need an explicit t_max"));
        }
        Ok(())
    }

    /// Canonical `key = value` listing; feeding it back reproduces the configuration.
    pub fn pairs(&self) -> Vec<(String, String)> {
        let opt = |v: Option<f64>| v.map(|x| x.to_string());
        let mut out: Vec<(&str, Option<String>)> = vec![
            ("spin", Some(self.spin.to_string())),
            ("alpha", Some(self.alpha.to_string())),
            ("beta", Some(self.beta.to_string())),
            ("gamma", Some(self.gamma.to_string())),
            ("j_ref", Some(self.j_ref.to_string())),
            ("delta", opt(self.delta)),
            ("delta_times_s", opt(self.delta_times_s)),
            ("state", Some(self.state.to_string())),
            ("theta", Some(self.theta.to_string())),
            ("phi", Some(self.phi.to_string())),
            ("seed", Some(self.seed.to_string())),
            ("count", Some(self.count.to_string())),
            ("t_max", Some(self.t_max.to_string())),
            ("stride", Some(self.stride.to_string())),
            ("times", Some(self.times.to_string())),
            ("log_points", Some(self.log_points.to_string())),
            ("evaluator", Some(self.evaluator.to_string())),
            ("batch", Some(self.batch.to_string())),
            ("members", Some(self.members.to_string())),
            ("oracle_check", Some(self.oracle_check.to_string())),
            ("allow_large_oracle", Some(self.allow_large_oracle.to_string())),
            ("classical_samples", Some(self.classical_samples.to_string())),
            ("partitions", Some(self.partitions.to_string())),
            ("overlay_points", Some(self.overlay_points.to_string())),
            ("axis", Some(self.axis.to_string())),
        ];
        if !self.values.is_empty() {
            let vals: Vec<String> = self.values.iter().map(f64::to_string).collect();
            out.push(("values", Some(vals.join(","))));
        }
        out.into_iter()
            .filter_map(|(k, v)| v.map(|v| (k.to_string(), v)))
            .collect()
    }

    pub fn render(&self) -> String {
        self.pairs().iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| config_err(&format!("line {}", n + 1), format!("expected `key = value`, got `{line}`")))?;
        let k = k.trim();
        if !KEYS.iter().any(|(key, _)| *key == k) {
            return Err(config_err(k, "unknown key"));
        }
        out.push((k.to_string(), v.trim().to_string()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layer(items: &[(&str, &str)]) -> Vec<(String, String)> {
        items.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn every_key_is_settable() {
        let mut c = ExperimentConfig::default();
        for (key, _) in KEYS {
            let value = match *key {
                "j_ref" | "t_max" => "auto",
                "state" => "random",
                "times" => "log",
                "evaluator" => "spectral",
                "axis" => "seed",
                "values" => "1,2",
                "output" => "out",
                "members" | "oracle_check" | "allow_large_oracle" | "force" => "true",
                _ => "3",
            };
            c.set(key, value).unwrap();
        }
    }

    #[test]
    fn rendering_roundtrips() {
        let mut c = ExperimentConfig::default();
        c.apply_layer(&layer(&[("delta_times_s", "0.32"), ("values", "0.1,0.2"), ("t_max", "77")]))
            .unwrap();
        let mut d = ExperimentConfig::default();
        d.apply_layer(&parse_pairs(&c.render()).unwrap()).unwrap();
        assert_eq!(c, d);
    }

    #[test]
    fn delta_is_exclusive_within_a_layer() {
        let mut c = ExperimentConfig::default();
        let err = c.apply_layer(&layer(&[("delta", "0.1"), ("delta_times_s", "2")])).unwrap_err();
        assert!(err.to_string().contains("`delta`"));
        c.apply_layer(&layer(&[("delta_times_s", "2")])).unwrap();
        c.apply_layer(&layer(&[("delta", "0.5")])).unwrap();
        assert_eq!(c.delta().unwrap(), 0.5);
        assert!(ExperimentConfig::default().delta().is_err());
    }

    #[test]
    fn file_errors_name_the_field() {
        let err = parse_pairs("spin = 10\nbogus = 1\n").unwrap_err();
        assert!(err.to_string().contains("`bogus`"));
        let mut c = ExperimentConfig::default();
        let err = c.apply_layer(&parse_pairs("alpha = x").unwrap()).unwrap_err();
        assert!(err.to_string().contains("`alpha`"));
    }
}
