//! `scaling-study`: Monte Carlo convergence diagnostics of the rescaled
//! order flow across a ladder of scale parameters T.

use rayon::prelude::*;
use roughbook::hawkes_core::{mean_intensity_scaled, BaselineSpec, KernelSpec, Phi0Matrix};
use roughbook::hawkes_sim::{
    auxiliary_paths, make_scaling, simulate_replicate, summarize, ScalingParams, SimError,
};
use roughbook::rng::derive_seed;
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::manifest::{Csv, OutDir};
use crate::scenario::Scenario;
use crate::simulate::thread_pool;

/// Grid size of the deterministic event-count estimate.
const ESTIMATE_GRID: usize = 2000;
/// Per-path event cap as a multiple of the expected count.
const CAP_FACTOR: f64 = 20.0;
const MIN_CAP: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub t_scale: f64,
    pub paths: usize,
    /// paths stopped by the per-path event cap and left out of the means
    pub guard_hits: usize,
    pub proj_mean: [f64; 3],
    pub proj_se: [f64; 3],
    pub gap_mean: f64,
    pub gap_se: f64,
    pub y_mean: f64,
    pub y_se: f64,
    pub mean_events: f64,
    pub expected_events: f64,
    pub b_floor_hits: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trend {
    /// E|vᵢᵀΛ_T| decreasing in T, for i = 2, 3, 4
    pub projections_decreasing: [bool; 3],
    pub gap_decreasing: bool,
    /// (max − min)/min of E[Y_T(1)]
    pub y_relative_spread: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub rows: Vec<ScalingRow>,
    /// None for a single T: no trend is claimed.
    pub trend: Option<Trend>,
}

/// E[N(horizon)] summed over the four components, from the mean-intensity equation.
pub fn expected_events(sp: &ScalingParams, k: &KernelSpec, phi0: &Phi0Matrix, horizon: f64) -> Result<f64, CliError> {
    let mp = mean_intensity_scaled(
        &BaselineSpec::constant(vec![sp.mu_t; 4]),
        k,
        phi0,
        sp.a_t,
        horizon,
        horizon / ESTIMATE_GRID as f64,
    )
    .map_err(CliError::runtime)?;
    Ok((0..4).map(|i| *mp.cumulative(i).last().unwrap_or(&0.0)).sum())
}

pub fn run_study(sc: &Scenario) -> Result<ScalingReport, CliError> {
    let cfg = &sc.scaling;
    let k = cfg.kernel_for(&sc.betas)?;
    let phi0 = roughbook::hawkes_core::build_phi0(&sc.betas);
    let mut plans = Vec::new();
    let mut total = 0.0;
    for &t in &cfg.t_values {
        let sp = make_scaling(t, cfg.alpha, cfg.a_bar, cfg.mu_bar).map_err(CliError::config)?;
        let expected = expected_events(&sp, &k, &phi0, t * cfg.macro_horizon)?;
        total += expected * cfg.paths as f64;
        plans.push((sp, expected));
    }
    if total > cfg.event_budget {
        return Err(CliError::Config(format!(
            "scaling study needs about {total:.3e} events, above scaling.event_budget = {:.3e}",
            cfg.event_budget
        )));
    }
    let pool = thread_pool(sc.run.threads)?;
    let mut rows = Vec::new();
    for (ti, (sp, expected)) in plans.iter().enumerate() {
        let cap = ((CAP_FACTOR * expected) as usize).max(MIN_CAP);
        let model = sp.model(&k, &phi0).map_err(CliError::runtime)?.with_event_cap(cap);
        let master = derive_seed(sc.seed, "scaling", ti as u64);
        let results: Vec<Result<Option<_>, CliError>> = pool.install(|| {
            (0..cfg.paths as u64)
                .into_par_iter()
                .map(|r| {
                    let es = match simulate_replicate(&model, sp.t_scale * cfg.macro_horizon, master, r) {
                        Ok(es) => es,
                        Err(SimError::ExplosionGuard { .. }) => return Ok(None),
                        Err(e) => return Err(CliError::runtime(e)),
                    };
                    let aux = auxiliary_paths(&es, sp, &phi0, &k, cfg.macro_horizon, cfg.macro_step)
                        .map_err(CliError::runtime)?;
                    Ok(Some((aux, es.events.len())))
                })
                .collect()
        });
        let mut aux = Vec::new();
        let mut events = Vec::new();
        let mut guard_hits = 0;
        for r in results {
            match r? {
                Some((a, n)) => {
                    aux.push(a);
                    events.push(n);
                }
                None => guard_hits += 1,
            }
        }
        if aux.is_empty() {
            return Err(CliError::Runtime(format!(
                "every path at T = {} hit the event cap of {cap}",
                sp.t_scale
            )));
        }
        let d = summarize(sp.t_scale, &phi0, &aux, &events);
        rows.push(ScalingRow {
            t_scale: sp.t_scale,
            paths: d.paths,
            guard_hits,
            proj_mean: d.proj_mean,
            proj_se: d.proj_se,
            gap_mean: d.gap_mean,
            gap_se: d.gap_se,
            y_mean: d.y_mean,
            y_se: d.y_se,
            mean_events: d.mean_events,
            expected_events: *expected,
            b_floor_hits: aux.iter().map(|a| a.b_floor_hits).sum(),
        });
    }
    let trend = (rows.len() > 1).then(|| trend_of(&rows));
    Ok(ScalingReport { rows, trend })
}

pub fn trend_of(rows: &[ScalingRow]) -> Trend {
    let dec = |f: &dyn Fn(&ScalingRow) -> f64| rows.windows(2).all(|w| f(&w[1]) < f(&w[0]));
    let ys: Vec<f64> = rows.iter().map(|r| r.y_mean).collect();
    let lo = ys.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Trend {
        projections_decreasing: [0, 1, 2].map(|i| dec(&|r| r.proj_mean[i])),
        gap_decreasing: dec(&|r| r.gap_mean),
        y_relative_spread: (hi - lo) / lo,
    }
}

pub fn write_report(report: &ScalingReport, out: &mut OutDir) -> Result<(), CliError> {
    let mut csv = Csv::new(&[
        "t_scale", "paths", "guard_hits", "proj2_mean", "proj2_se", "proj3_mean", "proj3_se", "proj4_mean",
        "proj4_se", "gap_mean", "gap_se", "y_mean", "y_se", "mean_events", "expected_events",
    ]);
    for r in &report.rows {
        csv.row(&[
            r.t_scale,
            r.paths as f64,
            r.guard_hits as f64,
            r.proj_mean[0],
            r.proj_se[0],
            r.proj_mean[1],
            r.proj_se[1],
            r.proj_mean[2],
            r.proj_se[2],
            r.gap_mean,
            r.gap_se,
            r.y_mean,
            r.y_se,
            r.mean_events,
            r.expected_events,
        ]);
    }
    out.write("scaling/diagnostics.csv", &csv.into_bytes())?;
    let text = serde_json::to_string_pretty(report).map_err(CliError::runtime)?;
    out.write("scaling/report.json", text.as_bytes())
}
