//! One-parameter sweeps aggregated into a single table.

use echo_core::semiclassics::{resonance_predictor, TheoryBundle};
use rayon::prelude::*;
use serde_json::json;

use crate::config::{ExperimentConfig, Mode, StateKind, SweepAxis};
use crate::error::{config_err, Result};
use crate::output::{ensemble_table, num, opt_num, trace_table, Table};
use crate::readout::readout;
use crate::run::{
    check_quantum_budget, guard, quantum_traces, resolve_t_max, time_grid, RunContext, Setup, WORK_LIMIT,
};

#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub value: f64,
    pub cfg: ExperimentConfig,
}

fn integral(value: f64, what: &str) -> Result<u64> {
    if value.fract() != 0.0 || value < 0.0 || value > u32::MAX as f64 {
        return Err(config_err("values", format!("{what} sweep values must be non-negative integers, got {value}")));
    }
    Ok(value as u64)
}

/// Per-point configurations. A delta sweep sets whichever of `delta` and
/// `delta_times_s` the base configuration uses (`delta` when neither is set).
pub fn plan(cfg: &ExperimentConfig) -> Result<Vec<SweepPoint>> {
    if cfg.values.is_empty() {
        return Err(config_err("values", "a sweep needs at least one value"));
    }
    cfg.values
        .iter()
        .map(|&value| {
            let mut c = cfg.clone();
            c.values.clear();
            match cfg.axis {
                SweepAxis::Delta if cfg.delta_times_s.is_some() => c.delta_times_s = Some(value),
                SweepAxis::Delta => c.delta = Some(value),
                SweepAxis::Spin => c.spin = integral(value, "spin")? as u32,
                SweepAxis::Seed => c.seed = integral(value, "seed")?,
            }
            c.validate(Mode::Quantum)?;
            Setup::new(&c)?;
            Ok(SweepPoint { value, cfg: c })
        })
        .collect()
}

struct Prepared {
    setup: Setup,
    theory: Option<TheoryBundle>,
    t_max: u64,
    times: Vec<u64>,
    note: Option<String>,
}

fn prepare(c: &ExperimentConfig) -> Result<Prepared> {
    let setup = Setup::new(c)?;
    let theory = setup.theory(0.0);
    let t_max = resolve_t_max(c, &theory)?;
    let (theory, note) = match theory {
        Ok(mut b) => {
            if let Some(p) = &setup.coherent {
                b.resonances = resonance_predictor(&setup.model, p, setup.spin.hbar(), t_max as f64, 4)?;
            }
            (Some(b), None)
        }
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(Prepared {
        times: time_grid(c, t_max),
        setup,
        theory,
        t_max,
        note,
    })
}

pub const SWEEP_HEADER: &[&str] = &[
    "value",
    "spin",
    "delta",
    "t_max",
    "plateau",
    "plateau_theory",
    "window_lo",
    "window_hi",
    "samples",
    "flagged",
    "t_coh_fit",
    "t_coh_theory",
    "loglog_slope",
    "peaks",
];

pub fn run_sweep(ctx: &RunContext) -> Result<()> {
    let cfg = ctx.cfg;
    let points = plan(cfg)?;
    let prepared: Vec<Prepared> = points.par_iter().map(|p| prepare(&p.cfg)).collect::<Result<_>>()?;
    let mut work = 0.0;
    for (p, q) in points.iter().zip(&prepared) {
        work += check_quantum_budget(&p.cfg, &q.setup, q.t_max, q.times.len())?;
    }
    guard(cfg.force, "multiply-adds", work, WORK_LIMIT)?;
    ctx.derive("work_estimate", json!(work));

    let results = points
        .par_iter()
        .zip(&prepared)
        .map(|(p, q)| quantum_traces(&p.cfg, &q.setup, &q.times))
        .collect::<Result<Vec<_>>>()?;

    let mut table = Table::new(SWEEP_HEADER);
    for (k, ((p, q), r)) in points.iter().zip(&prepared).zip(&results).enumerate() {
        let file = format!("points/point_{k:03}.csv");
        let bytes = match &r.ensemble {
            Some(e) => ensemble_table(e).into_bytes(),
            None => trace_table(&r.traces[0]).into_bytes(),
        };
        ctx.out.write(&file, &bytes)?;
        if p.cfg.state == StateKind::Random {
            ctx.stream(&format!("random states, point {k}"), "ChaCha20, one stream per member", p.cfg.seed, p.cfg.count);
        }
        if let Some(n) = &q.note {
            ctx.note(format!("point {k}: theory unavailable, row flagged: {n}"));
        }
        let mut row = vec![
            num(p.value),
            p.cfg.spin.to_string(),
            num(q.setup.delta),
            q.t_max.to_string(),
        ];
        match &q.theory {
            Some(b) => {
                let ro = readout(b, &q.times, r.fidelity());
                let peaks: Vec<String> = ro
                    .peaks
                    .iter()
                    .map(|pk| format!("{}@{}:{}", pk.kind, pk.time, pk.fidelity))
                    .collect();
                row.extend([
                    if ro.plateau.flagged { String::new() } else { num(ro.plateau.value) },
                    opt_num(ro.plateau_theory),
                    num(ro.plateau.window.lo),
                    num(ro.plateau.window.hi),
                    ro.plateau.samples.to_string(),
                    ro.plateau.flagged.to_string(),
                    opt_num(ro.t_coh_fit),
                    opt_num(ro.t_coh_theory),
                    opt_num(ro.loglog_slope),
                    peaks.join(";"),
                ]);
            }
            None => {
                row.extend(["", "", "", "", "0", "true", "", "", "", ""].map(String::from));
            }
        }
        table.row(&row);
    }
    ctx.out.write("sweep.csv", &table.into_bytes())
}
