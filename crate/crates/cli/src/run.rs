//! Execution of one configured experiment into one output directory.

use std::collections::BTreeMap;
use std::sync::Mutex;
use std::time::Instant;

use echo_core::analysis::{antidiagonal_profile, ridge_profile};
use echo_core::classical::{classical_sums, sample_coherent, ClassicalTrace};
use echo_core::echo::{
    log_times, uniform_times, EchoOracle, EchoSystem, EnsembleTrace, FidelityTrace, SpectralEcho,
};
use echo_core::semiclassics::{
    asi_amplitude, gaussian_decay_coherent, resonance_predictor, stationary_phase_amplitude,
    stationary_points, theory_bundle, TheoryBundle, TopModel,
};
use echo_core::spin::{SpinParameters, TopParameters};
use echo_core::states::{coherent_state, CoherentParams, QuantumState, RandomEnsembleParams};
use rayon::prelude::*;
use serde_json::json;

use crate::config::{Auto, Evaluator, ExperimentConfig, Mode, StateKind, TimeGrid};
use crate::error::{config_err, LabError, Result};
use crate::output::{
    classical_table, ensemble_table, num, opt_num, trace_table, OutputDir, RngStream, RunManifest,
    Table,
};
use crate::readout::{readout, Readout};

/// Multiply-add budget above which runs need `--force`.
pub const WORK_LIMIT: f64 = 1e13;
/// Output rows above which runs need `--force`.
pub const ROW_LIMIT: f64 = 1e7;
/// Classical single-point map steps above which runs need `--force`.
pub const CLASSICAL_STEP_LIMIT: f64 = 1e11;
/// Largest tolerated stepping/spectral disagreement under `oracle_check`.
pub const ORACLE_TOLERANCE: f64 = 1e-8;

/// Physical parameters resolved from a configuration.
#[derive(Debug, Clone)]
pub struct Setup {
    pub spin: SpinParameters,
    pub delta: f64,
    pub top: TopParameters,
    pub j_ref: f64,
    pub model: TopModel,
    pub coherent: Option<CoherentParams>,
}

impl Setup {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        let spin = SpinParameters::new(cfg.spin)?;
        let delta = cfg.delta()?;
        let coherent = match cfg.state {
            StateKind::Coherent => Some(CoherentParams::new(cfg.theta, cfg.phi, spin.hbar())?),
            StateKind::Random => None,
        };
        let j_ref = match cfg.j_ref {
            Auto::Value(j) => j,
            Auto::Auto => coherent.map_or(0.0, |p| p.j_star),
        };
        Ok(Self {
            spin,
            delta,
            top: TopParameters::new(cfg.alpha, cfg.beta, cfg.gamma, delta)?,
            j_ref,
            model: TopModel::new(cfg.alpha, cfg.beta, cfg.gamma, j_ref),
            coherent,
        })
    }

    /// Theory bundle with resonances listed up to `t_max`.
    pub fn theory(&self, t_max: f64) -> Result<TheoryBundle> {
        Ok(theory_bundle(&self.model, self.coherent.as_ref(), self.delta, self.spin, t_max)?)
    }

    pub fn system(&self) -> Result<EchoSystem> {
        Ok(EchoSystem::new(self.spin, self.top, self.j_ref)?)
    }

    pub fn initial_states(&self, cfg: &ExperimentConfig) -> Result<Vec<QuantumState>> {
        Ok(match cfg.state {
            StateKind::Coherent => vec![coherent_state(self.spin, cfg.theta, cfg.phi)?.state],
            StateKind::Random => RandomEnsembleParams::new(self.spin, cfg.seed, cfg.count)?.members(self.spin),
        })
    }
}

/// `t_max` as configured, or derived from the theory timescales.
///
/// Coherent: `1.25 t2`. Random on a uniform grid: `2 t2`. Random on a log grid:
/// `20 max(t2, hbar/delta^2)`.
pub fn resolve_t_max(cfg: &ExperimentConfig, theory: &Result<TheoryBundle>) -> Result<u64> {
    if let Auto::Value(t) = cfg.t_max {
        return Ok(t);
    }
    let bundle = theory
        .as_ref()
        .map_err(|e| config_err("t_max", format!("`auto` needs the theory timescales: {e}")))?;
    let t = match (&bundle.coherent, cfg.times) {
        (Some(c), _) => 1.25 * c.t2,
        (None, TimeGrid::Uniform) => 2.0 * bundle.random.t2,
        (None, TimeGrid::Log) => 20.0 * bundle.random.t2.max(bundle.random.t_ran_scale),
    };
    if !(t.is_finite() && t >= 1.0 && t < 1e15) {
        return Err(config_err("t_max", format!("derived value {t} is unusable; set it explicitly")));
    }
    Ok(t.ceil() as u64)
}

pub fn time_grid(cfg: &ExperimentConfig, t_max: u64) -> Vec<u64> {
    match cfg.times {
        TimeGrid::Uniform => uniform_times(t_max, cfg.stride),
        TimeGrid::Log => {
            let mut v = log_times(1, t_max, cfg.log_points);
            v.insert(0, 0);
            v
        }
    }
}

/// Spectral for ensembles and log grids, stepping otherwise.
pub fn resolve_evaluator(cfg: &ExperimentConfig) -> Evaluator {
    match cfg.evaluator {
        Evaluator::Auto if cfg.state == StateKind::Random || cfg.times == TimeGrid::Log => Evaluator::Spectral,
        Evaluator::Auto => Evaluator::Stepping,
        e => e,
    }
}

/// Estimated complex multiply-adds of a quantum run. The Schur term is calibrated against timed runs.
pub fn quantum_work(dim: usize, evaluator: Evaluator, t_max: u64, n_times: usize, members: usize) -> f64 {
    let d = dim as f64;
    match evaluator {
        Evaluator::Spectral => 50.0 * d * d * d + d * d * n_times as f64 * members as f64,
        _ => d * d * t_max as f64 * members as f64,
    }
}

pub fn guard(force: bool, what: &'static str, estimate: f64, limit: f64) -> Result<()> {
    if estimate > limit && !force {
        return Err(LabError::Resource { what, estimate, limit });
    }
    Ok(())
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Stepping evaluation sampled at `times` (sorted, starting anywhere in `0..`).
fn stepping_trace(sys: &EchoSystem, state: &QuantumState, times: &[u64]) -> Result<FidelityTrace> {
    let last = times.last().copied().unwrap_or(0);
    let step = times.iter().fold(last, |g, &t| gcd(g, t)).max(1);
    let full = sys.run(state, last, step)?;
    let mut out = FidelityTrace::with_capacity(times.len());
    let mut k = 0;
    for &t in times {
        while full.times[k] < t {
            k += 1;
        }
        out.push(t, full.amplitude[k]);
    }
    Ok(out)
}

/// Echo traces of every state; members run concurrently, results keep input order.
pub fn evaluate(
    setup: &Setup,
    evaluator: Evaluator,
    states: &[QuantumState],
    times: &[u64],
    batch: usize,
) -> Result<Vec<FidelityTrace>> {
    let sys = setup.system()?;
    match evaluator {
        Evaluator::Spectral => {
            let spectral = SpectralEcho::new(&sys.unperturbed, &sys.kick)?;
            let chunks: Vec<Vec<FidelityTrace>> = states
                .par_chunks(batch.max(1))
                .map(|c| spectral.traces(c, times))
                .collect::<std::result::Result<_, _>>()?;
            Ok(chunks.into_iter().flatten().collect())
        }
        _ => states.par_iter().map(|s| stepping_trace(&sys, s, times)).collect(),
    }
}

/// Bookkeeping shared by all modes of one run.
pub struct RunContext<'a> {
    pub cfg: &'a ExperimentConfig,
    pub out: OutputDir,
    streams: Mutex<Vec<RngStream>>,
    derived: Mutex<BTreeMap<String, serde_json::Value>>,
    notes: Mutex<Vec<String>>,
}

impl<'a> RunContext<'a> {
    pub fn new(cfg: &'a ExperimentConfig) -> Result<Self> {
        Ok(Self {
            cfg,
            out: OutputDir::create(&cfg.output)?,
            streams: Mutex::new(Vec::new()),
            derived: Mutex::new(BTreeMap::new()),
            notes: Mutex::new(Vec::new()),
        })
    }

    pub fn stream(&self, purpose: &str, generator: &str, seed: u64, count: usize) {
        self.streams.lock().expect("poisoned").push(RngStream {
            purpose: purpose.to_string(),
            generator: generator.to_string(),
            seed,
            indices: format!("0..{count}"),
        });
    }

    pub fn derive(&self, key: &str, value: serde_json::Value) {
        self.derived.lock().expect("poisoned").insert(key.to_string(), value);
    }

    pub fn note(&self, text: impl Into<String>) {
        self.notes.lock().expect("poisoned").push(text.into());
    }

    fn finish(self, mode: Mode, preset: Option<&str>, command: &str, started: Instant) -> Result<RunManifest> {
        self.out.write("run.cfg", self.cfg.render().as_bytes())?;
        let manifest = RunManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            mode: mode.name().to_string(),
            preset: preset.map(str::to_string),
            command: command.to_string(),
            config: self.cfg.pairs().into_iter().collect(),
            derived: self.derived.into_inner().expect("poisoned"),
            rng_streams: self.streams.into_inner().expect("poisoned"),
            notes: self.notes.into_inner().expect("poisoned"),
            wall_time_s: started.elapsed().as_secs_f64(),
            outputs: self.out.files(),
        };
        self.out.write_json("manifest.json", &manifest)?;
        Ok(manifest)
    }
}

/// Runs `mode` and writes its outputs plus `run.cfg` and `manifest.json`.
pub fn run(mode: Mode, cfg: &ExperimentConfig, preset: Option<&str>, command: &str) -> Result<RunManifest> {
    let started = Instant::now();
    cfg.validate(mode)?;
    if mode == Mode::Sweep {
        // Every point is checked before the output directory is touched.
        crate::sweep::plan(cfg)?;
        let ctx = RunContext::new(cfg)?;
        crate::sweep::run_sweep(&ctx)?;
        return ctx.finish(mode, preset, command, started);
    }
    let setup = Setup::new(cfg)?;
    let ctx = RunContext::new(cfg)?;
    ctx.derive("delta", json!(setup.delta));
    ctx.derive("hbar", json!(setup.spin.hbar()));
    ctx.derive("j_ref", json!(setup.j_ref));
    match mode {
        Mode::Quantum => run_quantum(&ctx, &setup)?,
        Mode::Classical => run_classical(&ctx, &setup)?,
        Mode::Theory => run_theory(&ctx, &setup)?,
        Mode::Correlation => run_correlation(&ctx, &setup)?,
        Mode::Sweep => unreachable!("handled above"),
    }
    ctx.finish(mode, preset, command, started)
}

/// Theory bundle and `t_max` for a trace-producing mode. A failed theory evaluation
/// is tolerated when `t_max` is explicit.
fn theory_and_t_max(ctx: &RunContext, setup: &Setup) -> Result<(Option<TheoryBundle>, u64)> {
    let theory = setup.theory(0.0);
    let t_max = resolve_t_max(ctx.cfg, &theory)?;
    ctx.derive("t_max", json!(t_max));
    let theory = match theory {
        Ok(mut b) => {
            if let Some(p) = &setup.coherent {
                b.resonances = resonance_predictor(&setup.model, p, setup.spin.hbar(), t_max as f64, 4)?;
            }
            Some(b)
        }
        Err(e) => {
            ctx.note(format!("theory overlay skipped: {e}"));
            None
        }
    };
    Ok((theory, t_max))
}

fn write_theory(ctx: &RunContext, setup: &Setup, bundle: &TheoryBundle, t_max: u64) -> Result<()> {
    ctx.out.write_json("theory.json", bundle)?;
    ctx.out.write("markers.csv", &markers_table(bundle).into_bytes())?;
    ctx.out.write("overlay.csv", &overlay_table(setup, bundle, t_max, ctx.cfg.overlay_points)?.into_bytes())
}

fn write_readout(ctx: &RunContext, r: &Readout) -> Result<()> {
    ctx.out.write_json("readout.json", r)
}

fn markers_table(b: &TheoryBundle) -> Table {
    let mut t = Table::new(&["name", "t"]);
    let mut add = |name: &str, v: f64| t.row(&[name.to_string(), num(v)]);
    if let Some(c) = &b.coherent {
        add("t1", c.t1);
        add("t2", c.t2);
        add("t_coh", c.t_coh);
        add("t_star", c.t_star);
        add("t_r", c.t_r);
    } else {
        add("t1", b.random.t1);
        add("t2", b.random.t2);
        add("t_ran", b.random.t_ran_scale);
        add("t_star", b.random.t_star);
    }
    t
}

/// Theory curves on a log grid: the plateau line plus the Gaussian decay (coherent) or
/// the action-space and stationary-phase asymptotics (random). The stationary-phase
/// column is left empty before `hbar/delta^2` and when no stationary point exists.
pub fn overlay_table(setup: &Setup, b: &TheoryBundle, t_max: u64, points: usize) -> Result<Table> {
    let grid = log_times(1, t_max.max(2), points);
    let hbar = setup.spin.hbar();
    let delta = setup.delta;
    if let (Some(c), Some(p)) = (&b.coherent, &setup.coherent) {
        let mut t = Table::new(&["t", "plateau", "gaussian"]);
        for &s in &grid {
            let g = gaussian_decay_coherent(&setup.model, p, delta, hbar, s as f64)?.norm_sqr();
            t.row(&[s.to_string(), num(c.plateau_coh), num(c.plateau_coh * g)]);
        }
        return Ok(t);
    }
    let plateau = b.random.plateau_ran.unwrap_or(b.random.plateau_ran_lattice);
    let sp = stationary_points(&setup.model);
    let rows: Vec<[String; 4]> = grid
        .par_iter()
        .map(|&s| -> Result<[String; 4]> {
            let asi = asi_amplitude(&setup.model, delta, hbar, s as f64)?.norm_sqr();
            let stat = if sp.is_empty() || (s as f64) < b.random.t_ran_scale {
                None
            } else {
                Some(stationary_phase_amplitude(&setup.model, &sp, delta, hbar, s as f64)?.norm_sqr())
            };
            Ok([s.to_string(), num(plateau), num(asi), opt_num(stat)])
        })
        .collect::<Result<_>>()?;
    let mut t = Table::new(&["t", "plateau", "asi", "stationary_phase"]);
    for r in rows {
        t.row(&r);
    }
    Ok(t)
}

/// Quantum traces of the configured state(s) at `times`, averaged when random.
pub struct QuantumResult {
    pub traces: Vec<FidelityTrace>,
    pub ensemble: Option<EnsembleTrace>,
}

impl QuantumResult {
    pub fn fidelity(&self) -> &[f64] {
        match &self.ensemble {
            Some(e) => &e.fidelity,
            None => &self.traces[0].fidelity,
        }
    }
}

pub fn quantum_traces(cfg: &ExperimentConfig, setup: &Setup, times: &[u64]) -> Result<QuantumResult> {
    let evaluator = resolve_evaluator(cfg);
    let states = setup.initial_states(cfg)?;
    let traces = evaluate(setup, evaluator, &states, times, cfg.batch)?;
    let ensemble = match cfg.state {
        StateKind::Random => Some(EnsembleTrace::from_members(&traces)?),
        StateKind::Coherent => None,
    };
    Ok(QuantumResult { traces, ensemble })
}

pub fn check_quantum_budget(cfg: &ExperimentConfig, setup: &Setup, t_max: u64, n_times: usize) -> Result<f64> {
    let members = match cfg.state {
        StateKind::Coherent => 1,
        StateKind::Random => cfg.count,
    };
    let work = quantum_work(setup.spin.dim(), resolve_evaluator(cfg), t_max, n_times, members);
    guard(cfg.force, "multiply-adds", work, WORK_LIMIT)?;
    let rows = n_times as f64 * if cfg.members { members as f64 + 1.0 } else { 1.0 };
    guard(cfg.force, "output rows", rows, ROW_LIMIT)?;
    Ok(work)
}

fn run_quantum(ctx: &RunContext, setup: &Setup) -> Result<()> {
    let cfg = ctx.cfg;
    let (theory, t_max) = theory_and_t_max(ctx, setup)?;
    let times = time_grid(cfg, t_max);
    let work = check_quantum_budget(cfg, setup, t_max, times.len())?;
    let evaluator = resolve_evaluator(cfg);
    ctx.derive("evaluator", json!(evaluator.to_string()));
    ctx.derive("work_estimate", json!(work));
    let result = quantum_traces(cfg, setup, &times)?;
    match &result.ensemble {
        Some(e) => {
            ctx.stream("random states", "ChaCha20, one stream per member", cfg.seed, cfg.count);
            ctx.out.write("quantum.csv", &ensemble_table(e).into_bytes())?;
            if cfg.members {
                result.traces.par_iter().enumerate().try_for_each(|(k, tr)| {
                    ctx.out.write(&format!("members/member_{k:05}.csv"), &trace_table(tr).into_bytes())
                })?;
            }
        }
        None => ctx.out.write("quantum.csv", &trace_table(&result.traces[0]).into_bytes())?,
    }
    if cfg.oracle_check {
        let other = match evaluator {
            Evaluator::Spectral => Evaluator::Stepping,
            _ => Evaluator::Spectral,
        };
        let states = setup.initial_states(cfg)?;
        let check = evaluate(setup, other, &states[..1], &times, 1)?;
        let deviation = check[0]
            .amplitude
            .iter()
            .zip(&result.traces[0].amplitude)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        ctx.derive("oracle_max_deviation", json!(deviation));
        if deviation > ORACLE_TOLERANCE {
            return Err(LabError::OracleMismatch { deviation });
        }
    }
    if let Some(b) = &theory {
        write_theory(ctx, setup, b, t_max)?;
        write_readout(ctx, &readout(b, &times, result.fidelity()))?;
    }
    Ok(())
}

/// Classical fidelity with the ensemble split into `partitions` concurrent slices,
/// merged in slice order.
pub fn classical_trace(cfg: &ExperimentConfig, setup: &Setup, times: &[u64]) -> Result<ClassicalTrace> {
    let ens = sample_coherent(setup.spin, cfg.theta, cfg.phi, cfg.classical_samples, cfg.seed)?;
    let n = ens.len();
    let parts = cfg.partitions.min(n);
    let ranges: Vec<std::ops::Range<usize>> =
        (0..parts).map(|p| (p * n / parts)..((p + 1) * n / parts)).collect();
    let sums = ranges
        .into_par_iter()
        .map(|r| classical_sums(&ens, r, cfg.alpha, cfg.beta, setup.delta, times))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let mut total = sums[0].clone();
    for s in &sums[1..] {
        total.merge(s)?;
    }
    Ok(total.finish())
}

fn run_classical(ctx: &RunContext, setup: &Setup) -> Result<()> {
    let cfg = ctx.cfg;
    if cfg.gamma != 0.0 {
        return Err(config_err("gamma", "the classical map covers the quadratic top only"));
    }
    let (theory, t_max) = theory_and_t_max(ctx, setup)?;
    let steps = cfg.classical_samples as f64 * t_max as f64;
    guard(cfg.force, "classical map steps", steps, CLASSICAL_STEP_LIMIT)?;
    let times = time_grid(cfg, t_max);
    guard(cfg.force, "output rows", times.len() as f64, ROW_LIMIT)?;
    let trace = classical_trace(cfg, setup, &times)?;
    ctx.stream("classical samples", "ChaCha20, Gaussian angles", cfg.seed, cfg.classical_samples);
    ctx.out.write("classical.csv", &classical_table(&trace).into_bytes())?;
    if let Some(b) = &theory {
        write_theory(ctx, setup, b, t_max)?;
        write_readout(ctx, &readout(b, &times, &trace.fidelity))?;
    }
    Ok(())
}

fn run_theory(ctx: &RunContext, setup: &Setup) -> Result<()> {
    let theory = setup.theory(0.0);
    let t_max = resolve_t_max(ctx.cfg, &theory)?;
    ctx.derive("t_max", json!(t_max));
    let mut bundle = theory?;
    if let Some(p) = &setup.coherent {
        bundle.resonances = resonance_predictor(&setup.model, p, setup.spin.hbar(), t_max as f64, 4)?;
    }
    write_theory(ctx, setup, &bundle, t_max)
}

fn run_correlation(ctx: &RunContext, setup: &Setup) -> Result<()> {
    let cfg = ctx.cfg;
    let t_max = match cfg.t_max {
        Auto::Value(t) => t,
        Auto::Auto => return Err(config_err("t_max", "correlation surfaces need an explicit t_max")),
    };
    let n = (t_max + 1) as f64;
    guard(cfg.force, "multiply-adds", setup.spin.dim() as f64 * n * n, WORK_LIMIT)?;
    guard(cfg.force, "output rows", n * n, ROW_LIMIT)?;
    let sys = setup.system()?;
    let oracle = EchoOracle::new(setup.spin, &sys.unperturbed, cfg.allow_large_oracle)?;
    let states = match cfg.state {
        StateKind::Coherent => setup.initial_states(cfg)?,
        StateKind::Random => {
            ctx.stream("random state", "ChaCha20, one stream per member", cfg.seed, 1);
            RandomEnsembleParams::new(setup.spin, cfg.seed, 1)?.members(setup.spin)
        }
    };
    let c = oracle.correlation_surface(&states[0], t_max)?;
    let mut surface = Table::new(&["t1", "t2", "re_c", "im_c", "abs_c"]);
    for i in 0..c.nrows() {
        for j in 0..c.ncols() {
            let v = c[(i, j)];
            surface.row(&[i.to_string(), j.to_string(), num(v.re), num(v.im), num(v.norm())]);
        }
    }
    ctx.out.write("correlation.csv", &surface.into_bytes())?;
    let mut ridge = Table::new(&["lag", "mean_abs_c"]);
    for (d, v) in ridge_profile(&c).iter().enumerate() {
        ridge.row(&[d.to_string(), num(*v)]);
    }
    ctx.out.write("ridge.csv", &ridge.into_bytes())?;
    let mut anti = Table::new(&["sum", "mean_abs_c"]);
    for (s, v) in antidiagonal_profile(&c).iter().enumerate() {
        anti.row(&[s.to_string(), num(*v)]);
    }
    ctx.out.write("antidiagonal.csv", &anti.into_bytes())
}
