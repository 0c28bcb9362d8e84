//! `analyze`: realized-volatility roughness and depth statistics of
//! external tick and depth CSV files.

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use roughbook::analytics::{
    depth_profile, depth_snapshots, read_depth, read_ticks, realized_vol, variogram_hurst, ReportRecord,
    DEFAULT_MAX_LAG, MIN_ROUGHNESS_POINTS, RV_FLOOR,
};

use crate::error::CliError;
use crate::manifest::{Csv, OutDir};

/// Default number of realized-vol windows over the tick span.
pub const DEFAULT_WINDOWS: f64 = 2048.0;

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path).map(BufReader::new).map_err(|e| CliError::io(path, e))
}

pub fn run(ticks: &Path, depth: Option<&Path>, window: Option<f64>, out: &mut OutDir) -> Result<Vec<ReportRecord>, CliError> {
    let ts = read_ticks(open(ticks)?).map_err(|e| CliError::Config(format!("{}: {e}", ticks.display())))?;
    if ts.times.len() < 2 {
        return Err(CliError::Config(format!("{}: fewer than two ticks", ticks.display())));
    }
    let t0 = ts.times[0];
    let times: Vec<f64> = ts.times.iter().map(|t| t - t0).collect();
    let span = *times.last().unwrap_or(&0.0);
    let window = window.unwrap_or(span / DEFAULT_WINDOWS);
    if !(window > 0.0) {
        return Err(CliError::Config(format!("realized-vol window must be positive, got {window}")));
    }
    let rv = realized_vol(&times, &ts.prices, window).map_err(CliError::config)?;
    let mut records = vec![
        ReportRecord::point("ticks", ts.times.len() as f64, ts.times.len()),
        ReportRecord::point("rv_window", window, rv.rv.len()),
        ReportRecord::point("rv_mean", rv.rv.iter().sum::<f64>() / rv.rv.len().max(1) as f64, rv.rv.len()),
    ];
    let mut csv = Csv::new(&["t", "rv", "returns"]);
    for i in 0..rv.rv.len() {
        csv.row(&[rv.times[i] + t0, rv.rv[i], rv.counts[i] as f64]);
    }
    out.write("rv.csv", &csv.into_bytes())?;
    if rv.rv.len() >= MIN_ROUGHNESS_POINTS {
        let logs: Vec<f64> = rv.rv.iter().map(|v| v.max(RV_FLOOR).ln()).collect();
        let fit = variogram_hurst(&logs, DEFAULT_MAX_LAG).map_err(CliError::runtime)?;
        records.push(ReportRecord::point("roughness", fit.hurst, rv.rv.len()));
        records.push(ReportRecord::point("roughness_fit_r2", fit.r_squared, rv.rv.len()));
    } else {
        eprintln!(
            "warning: {} realized-vol windows, roughness needs at least {MIN_ROUGHNESS_POINTS}",
            rv.rv.len()
        );
    }
    if let Some(dp) = depth {
        let recs = read_depth(open(dp)?).map_err(|e| CliError::Config(format!("{}: {e}", dp.display())))?;
        let mut x: Vec<f64> = recs.iter().map(|r| r.x_offset).collect();
        x.sort_by(f64::total_cmp);
        x.dedup();
        let snaps: Vec<Vec<f64>> = depth_snapshots(&recs, &x).into_iter().map(|s| s.1).collect();
        let prof = depth_profile(&x, &snaps).map_err(CliError::config)?;
        records.push(ReportRecord::point("depth_snapshots", snaps.len() as f64, snaps.len()));
        records.push(ReportRecord::point("depth_mean_mass", prof.mean_mass, snaps.len()));
        records.push(ReportRecord::point("ask_peak_variance", prof.ask_peak_var, snaps.len()));
        records.push(ReportRecord::point("bid_peak_variance", prof.bid_peak_var, snaps.len()));
        let mut csv = Csv::new(&["x", "mean_abs_depth"]);
        for (xi, m) in prof.x.iter().zip(&prof.mean_abs) {
            csv.row(&[*xi, *m]);
        }
        out.write("depth_profile.csv", &csv.into_bytes())?;
    }
    out.write_json_lines("report.ndjson", &records)?;
    Ok(records)
}
