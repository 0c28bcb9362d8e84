//! `simulate <stage>`: runs one pipeline stage per replicate and writes
//! plot-ready CSV and NDJSON artifacts.

use rayon::prelude::*;
use roughbook::analytics::{depth_profile, realized_vol, roughness};
use roughbook::hawkes_core::{mean_intensity_scaled, BaselineSpec};
use roughbook::hawkes_sim::{io::write_ndjson, replay, simulate_replicate, HawkesModel};
use roughbook::lob_spde::{book_increments, simulate_book, simulate_book_with_noise, step_count, BookSeries};
use roughbook::price_dynamics::{simulate_coupled, CoupledRun};
use roughbook::rough_volterra::{
    brownian_increments_replicate, hurst_of_path, relaxation_oracle, VolterraPath, VolterraSolver,
};
use serde::Serialize;

use crate::error::CliError;
use crate::manifest::{Csv, OutDir, Stage};
use crate::scenario::{Resolved, Scenario};

/// Largest grid used for the deterministic mean intensity.
const MEAN_GRID_MAX: usize = 4000;

pub fn thread_pool(threads: usize) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(CliError::runtime)
}

/// Runs `f` for every replicate on the pool and returns results in order.
fn replicates<T: Send>(
    sc: &Scenario,
    f: impl Fn(u64) -> Result<T, CliError> + Sync,
) -> Result<Vec<T>, CliError> {
    let pool = thread_pool(sc.run.threads)?;
    pool.install(|| (0..sc.run.replicates as u64).into_par_iter().map(&f).collect())
}

fn tag(r: u64) -> String {
    format!("r{r:04}")
}

pub fn run(stage: Stage, sc: &Scenario, out: &mut OutDir) -> Result<(), CliError> {
    let res = sc.resolve()?;
    match stage {
        Stage::Hawkes => hawkes(sc, &res, out),
        Stage::Volterra => volterra(sc, &res, out),
        Stage::Book => book(sc, &res, out),
        Stage::Price => coupled(sc, &res, out, false),
        Stage::Coupled => coupled(sc, &res, out, true),
    }
}

#[derive(Serialize)]
struct HawkesSummary {
    replicate: u64,
    events: Vec<usize>,
}

fn hawkes(sc: &Scenario, res: &Resolved, out: &mut OutDir) -> Result<(), CliError> {
    let h = &sc.hawkes;
    let model = HawkesModel::four_type(BaselineSpec::constant(h.mu.to_vec()), res.kernel.clone(), &res.phi0, h.a)
        .map_err(CliError::config)?
        .with_event_cap(h.event_cap);
    let k = (h.horizon / h.grid_step + 1e-9).floor() as usize;
    let grid: Vec<f64> = (0..=k).map(|i| i as f64 * h.grid_step).collect();
    let params = serde_json::to_value(h).map_err(CliError::runtime)?;
    let runs = replicates(sc, |r| {
        let es = simulate_replicate(&model, h.horizon, sc.seed, r).map_err(CliError::runtime)?;
        let tr = replay(&es, &model, &grid).map_err(CliError::runtime)?;
        let mut events = Vec::new();
        write_ndjson(&mut events, &es, params.clone()).map_err(CliError::runtime)?;
        let mut csv = Csv::new(&[
            "t", "n_a+", "n_b+", "n_a-", "n_b-", "comp_a+", "comp_b+", "comp_a-", "comp_b-", "lambda_a+",
            "lambda_b+", "lambda_a-", "lambda_b-",
        ]);
        for i in 0..grid.len() {
            let mut row = vec![grid[i]];
            row.extend(&tr.counts[i]);
            row.extend(&tr.compensator[i]);
            row.extend(&tr.intensity[i]);
            csv.row(&row);
        }
        let summary = HawkesSummary {
            replicate: r,
            events: (0..4).map(|c| es.count(c)).collect(),
        };
        Ok((events, csv.into_bytes(), summary))
    })?;
    let mut summaries = Vec::new();
    for (r, (events, trace, summary)) in runs.into_iter().enumerate() {
        out.write(&format!("hawkes/events_{}.ndjson", tag(r as u64)), &events)?;
        out.write(&format!("hawkes/trace_{}.csv", tag(r as u64)), &trace)?;
        summaries.push(summary);
    }
    out.write_json_lines("hawkes/summary.ndjson", &summaries)?;

    let n_mean = ((10.0 * h.horizon / h.grid_step).ceil() as usize).clamp(10, MEAN_GRID_MAX);
    let mp = mean_intensity_scaled(
        &BaselineSpec::constant(h.mu.to_vec()),
        &res.kernel,
        &res.phi0,
        h.a,
        h.horizon,
        h.horizon / n_mean as f64,
    )
    .map_err(CliError::runtime)?;
    let mut csv = Csv::new(&["t", "mean_lambda_a+", "mean_lambda_b+", "mean_lambda_a-", "mean_lambda_b-"]);
    for (t, v) in mp.times.iter().zip(&mp.values) {
        let mut row = vec![*t];
        row.extend(v);
        csv.row(&row);
    }
    out.write("hawkes/mean_intensity.csv", &csv.into_bytes())
}

fn volterra_path(sc: &Scenario, res: &Resolved, r: u64) -> Result<VolterraPath, CliError> {
    let p = res.volterra;
    let solver = VolterraSolver::new(p, sc.volterra.form).map_err(CliError::config)?;
    let noise = brownian_increments_replicate(sc.seed, r, p.n_steps, p.dt());
    solver.solve(&noise).map_err(CliError::runtime)
}

#[derive(Serialize)]
struct VolterraSummary {
    replicate: u64,
    clamp_fraction: f64,
    y_end: f64,
    mean_end: f64,
    hurst: Option<f64>,
}

fn volterra_csv(vp: &VolterraPath, mean: &[f64]) -> Vec<u8> {
    let mut csv = Csv::new(&["t", "y", "y_raw", "mean"]);
    for i in 0..vp.times.len() {
        csv.row(&[vp.times[i], vp.y[i], vp.y_raw[i], mean[i]]);
    }
    csv.into_bytes()
}

fn oracle_mean(res: &Resolved) -> Result<Vec<f64>, CliError> {
    res.volterra
        .times()
        .iter()
        .map(|&t| relaxation_oracle(&res.volterra, t).map_err(CliError::runtime))
        .collect()
}

fn volterra(sc: &Scenario, res: &Resolved, out: &mut OutDir) -> Result<(), CliError> {
    let mean = oracle_mean(res)?;
    let paths = replicates(sc, |r| volterra_path(sc, res, r))?;
    let mut summaries = Vec::new();
    for (r, vp) in paths.iter().enumerate() {
        out.write(&format!("volterra/path_{}.csv", tag(r as u64)), &volterra_csv(vp, &mean))?;
        summaries.push(VolterraSummary {
            replicate: r as u64,
            clamp_fraction: vp.clamp_fraction(),
            y_end: *vp.y.last().unwrap_or(&0.0),
            mean_end: *mean.last().unwrap_or(&0.0),
            hurst: hurst_of_path(vp).ok(),
        });
    }
    out.write_json_lines("volterra/summary.ndjson", &summaries)
}

#[derive(Serialize)]
struct BookSummary {
    replicate: u64,
    clamp_fraction: f64,
    initial_mass: f64,
    final_mass: f64,
    stopped_at: Option<f64>,
    peclet: f64,
    ask_peak_var: f64,
    bid_peak_var: f64,
}

fn snapshots_csv(s: &BookSeries) -> Vec<u8> {
    let mut csv = Csv::new(&["t", "x", "u"]);
    for (t, u) in s.times.iter().zip(&s.snapshots) {
        for (x, v) in s.x.iter().zip(u) {
            csv.row(&[*t, *x, *v]);
        }
    }
    csv.into_bytes()
}

fn book_outputs(out: &mut OutDir, r: u64, s: &BookSeries) -> Result<BookSummary, CliError> {
    let prof = depth_profile(&s.x, &s.snapshots).map_err(CliError::runtime)?;
    out.write(&format!("book/snapshots_{}.csv", tag(r)), &snapshots_csv(s))?;
    let mut csv = Csv::new(&["x", "mean_abs_u"]);
    for (x, m) in prof.x.iter().zip(&prof.mean_abs) {
        csv.row(&[*x, *m]);
    }
    out.write(&format!("book/depth_profile_{}.csv", tag(r)), &csv.into_bytes())?;
    let dx = s.x[1] - s.x[0];
    let final_mass: f64 = s.final_state().iter().map(|v| v.abs()).sum::<f64>() * dx;
    Ok(BookSummary {
        replicate: r,
        clamp_fraction: s.clamp_fraction(),
        initial_mass: s.initial_mass,
        final_mass,
        stopped_at: s.stopped_at,
        peclet: s.peclet,
        ask_peak_var: prof.ask_peak_var,
        bid_peak_var: prof.bid_peak_var,
    })
}

fn book(sc: &Scenario, res: &Resolved, out: &mut OutDir) -> Result<(), CliError> {
    let b = &sc.book;
    let u0 = sc.initial_book()?;
    let series = replicates(sc, |r| {
        let seed = sc.replicate_seed(r);
        match b.frozen_y {
            Some(y) => {
                let n = step_count(b.horizon, b.dt);
                let noise = book_increments(seed, n, b.horizon / n as f64);
                simulate_book_with_noise(&b.params, &u0, &|_| y, b.horizon, &noise, b.horizon, b.stride)
            }
            None => {
                let vp = volterra_path(sc, res, r)?;
                simulate_book(&b.params, &u0, &vp, seed, b.horizon, b.dt, b.stride)
            }
        }
        .map_err(CliError::runtime)
    })?;
    let mut summaries = Vec::new();
    for (r, s) in series.iter().enumerate() {
        summaries.push(book_outputs(out, r as u64, s)?);
    }
    out.write_json_lines("book/summary.ndjson", &summaries)
}

#[derive(Serialize)]
struct PriceSummary {
    replicate: u64,
    s_end: f64,
    max_abs_increment: f64,
    degenerate_steps: usize,
    roughness: Option<f64>,
}

fn price_csv(run: &CoupledRun) -> Vec<u8> {
    let p = &run.price;
    let mut csv = Csv::new(&["t", "s", "y", "depth_ask", "depth_bid", "ds"]);
    for i in 0..p.times.len() {
        let ds = p.increments.get(i).copied().unwrap_or(0.0);
        csv.row(&[p.times[i], p.s[i], p.y[i], p.d_a[i], p.d_b[i], ds]);
    }
    csv.into_bytes()
}

/// log-price realized-vol roughness with one window per Volterra step
fn price_roughness(run: &CoupledRun, vol_dt: f64) -> Option<f64> {
    let rv = realized_vol(&run.price.times, &run.price.s, vol_dt * (1.0 - 1e-6)).ok()?;
    roughness(&rv).ok()
}

fn coupled(sc: &Scenario, res: &Resolved, out: &mut OutDir, all: bool) -> Result<(), CliError> {
    let b = &sc.book;
    let u0 = sc.initial_book()?;
    let mut opts = sc.price.coupling;
    opts.snapshot_stride = b.stride;
    let runs = replicates(sc, |r| {
        simulate_coupled(
            &b.params,
            &sc.price.params,
            &u0,
            &res.volterra,
            sc.replicate_seed(r),
            b.horizon,
            b.dt,
            &opts,
        )
        .map_err(CliError::runtime)
    })?;
    let mean = if all { Some(oracle_mean(res)?) } else { None };
    let mut summaries = Vec::new();
    let mut book_summaries = Vec::new();
    for (r, run) in runs.iter().enumerate() {
        let r = r as u64;
        out.write(&format!("price/path_{}.csv", tag(r)), &price_csv(run))?;
        out.write_json_lines(&format!("price/warnings_{}.ndjson", tag(r)), &run.warnings)?;
        if let Some(mean) = &mean {
            out.write(&format!("volterra/path_{}.csv", tag(r)), &volterra_csv(&run.volterra, mean))?;
            book_summaries.push(book_outputs(out, r, &run.book)?);
        }
        summaries.push(PriceSummary {
            replicate: r,
            s_end: *run.price.s.last().unwrap_or(&sc.price.params.s0),
            max_abs_increment: run.price.increments.iter().fold(0.0, |m, d| m.max(d.abs())),
            degenerate_steps: run.warnings.len(),
            roughness: price_roughness(run, res.volterra.dt()),
        });
    }
    if all {
        out.write_json_lines("book/summary.ndjson", &book_summaries)?;
    }
    out.write_json_lines("price/summary.ndjson", &summaries)
}
