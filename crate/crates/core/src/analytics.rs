//! Post-run statistics: realized volatility, variogram roughness, depth
//! profiles, synthetic fBm, external CSV ingestion and NDJSON reports.

use std::io::{Read, Write};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const RV_FLOOR: f64 = 1e-12;
pub const MIN_ROUGHNESS_POINTS: usize = 512;
pub const DEFAULT_MAX_LAG: usize = 32;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HurstError {
    #[error("series has {len} points; at least {min} required")]
    SeriesTooShort { len: usize, min: usize },
    #[error("variogram is degenerate (zero or non-finite increments)")]
    Degenerate,
}

#[derive(Debug, Error)]
pub enum AnalyticsError {
    #[error("window {window} leaves no window with two or more points")]
    WindowTooSmall { window: f64 },
    #[error("times and values differ in length ({times} vs {values})")]
    LengthMismatch { times: usize, values: usize },
    #[error("non-positive price {price} at t = {t}")]
    NonPositivePrice { t: f64, price: f64 },
    #[error(transparent)]
    Hurst(#[from] HurstError),
    #[error("empty series")]
    EmptySeries,
    #[error("circulant embedding failed: eigenvalue {value} at {index}")]
    Embedding { index: usize, value: f64 },
    #[error("hurst parameter {0} outside (0, 1)")]
    HurstRange(f64),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("line {line}: cannot parse timestamp {value:?}")]
    Timestamp { line: usize, value: String },
    #[error("line {line}: unknown side {value:?}")]
    Side { line: usize, value: String },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Root of summed squared log-returns over tumbling windows. Each return
/// belongs to the window containing its right endpoint; windows without
/// any return (data gaps) are skipped.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RealizedVolSeries {
    pub window: f64,
    /// window start times
    pub times: Vec<f64>,
    pub rv: Vec<f64>,
    /// returns per window
    pub counts: Vec<usize>,
}

pub fn realized_vol(times: &[f64], prices: &[f64], window: f64) -> Result<RealizedVolSeries, AnalyticsError> {
    if times.len() != prices.len() {
        return Err(AnalyticsError::LengthMismatch {
            times: times.len(),
            values: prices.len(),
        });
    }
    if let Some((t, p)) = times.iter().zip(prices).find(|(_, p)| !(**p > 0.0)) {
        return Err(AnalyticsError::NonPositivePrice { t: *t, price: *p });
    }
    if !(window > 0.0) || times.len() < 2 {
        return Err(AnalyticsError::WindowTooSmall { window });
    }
    let t0 = times[0];
    let mut out = RealizedVolSeries {
        window,
        times: Vec::new(),
        rv: Vec::new(),
        counts: Vec::new(),
    };
    let mut current: Option<i64> = None;
    let mut acc = 0.0f64;
    let mut count = 0;
    for i in 1..times.len() {
        let idx = ((times[i] - t0) / window).floor() as i64;
        if current != Some(idx) {
            if let Some(c) = current {
                out.times.push(t0 + c as f64 * window);
                out.rv.push(acc.sqrt());
                out.counts.push(count);
            }
            current = Some(idx);
            acc = 0.0;
            count = 0;
        }
        let r = (prices[i] / prices[i - 1]).ln();
        acc += r * r;
        count += 1;
    }
    if let Some(c) = current {
        out.times.push(t0 + c as f64 * window);
        out.rv.push(acc.sqrt());
        out.counts.push(count);
    }
    if out.rv.is_empty() {
        return Err(AnalyticsError::WindowTooSmall { window });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HurstEstimate {
    pub hurst: f64,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub max_lag: usize,
}

/// Least-squares slope of log E|x(i+q) − x(i)|² against log q for
/// q = 1..=max_lag; H is half the slope.
pub fn variogram_hurst(x: &[f64], max_lag: usize) -> Result<HurstEstimate, HurstError> {
    let min = (4 * max_lag).max(8);
    if x.len() < min {
        return Err(HurstError::SeriesTooShort { len: x.len(), min });
    }
    let mut lx = Vec::with_capacity(max_lag);
    let mut ly = Vec::with_capacity(max_lag);
    for q in 1..=max_lag {
        let m: f64 = x.windows(q + 1).map(|w| (w[q] - w[0]).powi(2)).sum::<f64>() / (x.len() - q) as f64;
        if !(m > 0.0 && m.is_finite()) {
            return Err(HurstError::Degenerate);
        }
        lx.push((q as f64).ln());
        ly.push(m.ln());
    }
    let (slope, intercept, r2) = linear_fit(&lx, &ly);
    Ok(HurstEstimate {
        hurst: slope / 2.0,
        slope,
        intercept,
        r_squared: r2,
        max_lag,
    })
}

/// Ordinary least squares y = a + b x; returns (b, a, R²).
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let b = sxy / sxx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    (b, my - b * mx, r2)
}

/// Hurst estimate of log rv (floored at 1e-12).
pub fn roughness(rv: &RealizedVolSeries) -> Result<f64, AnalyticsError> {
    roughness_of_values(&rv.rv)
}

pub fn roughness_of_values(rv: &[f64]) -> Result<f64, AnalyticsError> {
    if rv.len() < MIN_ROUGHNESS_POINTS {
        return Err(HurstError::SeriesTooShort {
            len: rv.len(),
            min: MIN_ROUGHNESS_POINTS,
        }
        .into());
    }
    let logs: Vec<f64> = rv.iter().map(|v| v.max(RV_FLOOR).ln()).collect();
    Ok(variogram_hurst(&logs, DEFAULT_MAX_LAG)?.hurst)
}

/// Fractional Gaussian noise autocovariance at lag k (unit step).
pub fn fgn_autocov(hurst: f64, k: usize) -> f64 {
    let h2 = 2.0 * hurst;
    let k = k as f64;
    0.5 * ((k + 1.0).powf(h2) - 2.0 * k.powf(h2) + (k - 1.0).abs().powf(h2))
}

/// Exact fBm on n steps of size dt by Davies-Harte circulant embedding;
/// returns n + 1 points starting at 0.
pub fn fbm_davies_harte<R: Rng + ?Sized>(
    n: usize,
    hurst: f64,
    dt: f64,
    rng: &mut R,
) -> Result<Vec<f64>, AnalyticsError> {
    if !(hurst > 0.0 && hurst < 1.0) {
        return Err(AnalyticsError::HurstRange(hurst));
    }
    if n == 0 {
        return Err(AnalyticsError::EmptySeries);
    }
    let m = 2 * n;
    let mut row: Vec<Complex<f64>> = (0..m)
        .map(|k| {
            let lag = if k <= n { k } else { m - k };
            Complex::new(fgn_autocov(hurst, lag), 0.0)
        })
        .collect();
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(m);
    fft.process(&mut row);
    let mut w = Vec::with_capacity(m);
    for (j, ev) in row.iter().enumerate() {
        let lam = ev.re;
        if lam < -1e-10 * m as f64 {
            return Err(AnalyticsError::Embedding { index: j, value: lam });
        }
        let s = (lam.max(0.0) / m as f64).sqrt();
        let z = if j == 0 || j == n {
            let a: f64 = StandardNormal.sample(rng);
            Complex::new(a, 0.0)
        } else if j < n {
            let a: f64 = StandardNormal.sample(rng);
            let b: f64 = StandardNormal.sample(rng);
            Complex::new(a, b) / std::f64::consts::SQRT_2
        } else {
            Complex::new(0.0, 0.0)
        };
        w.push(z * s);
    }
    for j in n + 1..m {
        w[j] = w[m - j].conj();
    }
    fft.process(&mut w);
    let scale = dt.powf(hurst);
    let mut path = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    path.push(0.0);
    for v in w.iter().take(n) {
        acc += v.re * scale;
        path.push(acc);
    }
    Ok(path)
}

/// Mean |u| per node and peak tracking on each side of 0.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DepthProfile {
    pub x: Vec<f64>,
    pub mean_abs: Vec<f64>,
    pub ask_peaks: Vec<f64>,
    pub bid_peaks: Vec<f64>,
    pub ask_peak_var: f64,
    pub bid_peak_var: f64,
    /// mean over snapshots of the trapezoid integral of |u|
    pub mean_mass: f64,
}

pub fn depth_profile(x: &[f64], snapshots: &[Vec<f64>]) -> Result<DepthProfile, AnalyticsError> {
    if snapshots.is_empty() || x.is_empty() {
        return Err(AnalyticsError::EmptySeries);
    }
    if let Some(s) = snapshots.iter().find(|s| s.len() != x.len()) {
        return Err(AnalyticsError::LengthMismatch {
            times: x.len(),
            values: s.len(),
        });
    }
    let k = snapshots.len() as f64;
    let mut mean_abs = vec![0.0; x.len()];
    let mut ask_peaks = Vec::new();
    let mut bid_peaks = Vec::new();
    let mut mass = 0.0;
    for s in snapshots {
        for (m, u) in mean_abs.iter_mut().zip(s) {
            *m += u.abs() / k;
        }
        mass += trapezoid(x, &s.iter().map(|u| u.abs()).collect::<Vec<_>>()) / k;
        let peak = |pred: &dyn Fn(f64) -> bool| {
            x.iter()
                .zip(s)
                .filter(|(xi, _)| pred(**xi))
                .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
                .filter(|(_, u)| u.abs() > 0.0)
                .map(|(xi, _)| *xi)
        };
        if let Some(p) = peak(&|xi| xi > 0.0) {
            ask_peaks.push(p);
        }
        if let Some(p) = peak(&|xi| xi < 0.0) {
            bid_peaks.push(p);
        }
    }
    Ok(DepthProfile {
        x: x.to_vec(),
        mean_abs,
        ask_peak_var: variance(&ask_peaks),
        bid_peak_var: variance(&bid_peaks),
        ask_peaks,
        bid_peaks,
        mean_mass: mass,
    })
}

pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(a, b)| 0.5 * (a[1] - a[0]) * (b[0] + b[1]))
        .sum()
}

fn variance(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|a| (a - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64
}

/// Median with a distribution-free 95% order-statistic interval.
pub fn median_ci(values: &[f64]) -> Option<(f64, f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let med = if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    };
    let half = 1.96 * (n as f64).sqrt() / 2.0;
    let lo = ((n as f64 / 2.0 - half).floor().max(1.0) as usize) - 1;
    let hi = ((n as f64 / 2.0 + half).ceil() as usize).min(n) - 1;
    Some((med, v[lo], v[hi]))
}

/// Mean with a normal 95% interval.
pub fn mean_ci(values: &[f64]) -> Option<(f64, f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let m = values.iter().sum::<f64>() / n;
    let se = (variance(values) / n).sqrt();
    Some((m, m - 1.96 * se, m + 1.96 * se))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRecord {
    pub metric: String,
    pub value: f64,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub n: usize,
}

impl ReportRecord {
    pub fn point(metric: impl Into<String>, value: f64, n: usize) -> Self {
        Self {
            metric: metric.into(),
            value,
            ci_low: None,
            ci_high: None,
            n,
        }
    }

    pub fn median_of(metric: impl Into<String>, values: &[f64]) -> Option<Self> {
        let (m, lo, hi) = median_ci(values)?;
        Some(Self {
            metric: metric.into(),
            value: m,
            ci_low: Some(lo),
            ci_high: Some(hi),
            n: values.len(),
        })
    }
}

pub fn write_report<W: Write>(mut w: W, records: &[ReportRecord]) -> Result<(), AnalyticsError> {
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        writeln!(w)?;
    }
    Ok(())
}

/// Seconds since the Unix epoch from RFC 3339 text or integer nanoseconds.
pub fn parse_timestamp(s: &str) -> Option<f64> {
    let s = s.trim();
    if let Ok(ns) = s.parse::<i64>() {
        return Some(ns as f64 * 1e-9);
    }
    chrono::DateTime::parse_from_rfc3339(s)
        .ok()
        .map(|d| d.timestamp() as f64 + d.timestamp_subsec_nanos() as f64 * 1e-9)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TickSeries {
    pub times: Vec<f64>,
    pub prices: Vec<f64>,
}

#[derive(Debug, Deserialize)]
struct TickRow {
    timestamp: String,
    price: f64,
}

/// Reads a `timestamp,price` CSV with header; rows are kept in file order.
pub fn read_ticks<R: Read>(r: R) -> Result<TickSeries, AnalyticsError> {
    let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let mut out = TickSeries {
        times: Vec::new(),
        prices: Vec::new(),
    };
    for (i, row) in rd.deserialize::<TickRow>().enumerate() {
        let row = row?;
        let t = parse_timestamp(&row.timestamp).ok_or(AnalyticsError::Timestamp {
            line: i + 2,
            value: row.timestamp.clone(),
        })?;
        out.times.push(t);
        out.prices.push(row.price);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Bid,
    Ask,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DepthRecord {
    pub t: f64,
    pub x_offset: f64,
    pub size: f64,
    pub side: Side,
}

#[derive(Debug, Deserialize)]
struct DepthRow {
    timestamp: String,
    x_offset: f64,
    size: f64,
    side: String,
}

/// Reads a `timestamp,x_offset,size,side` CSV with header.
pub fn read_depth<R: Read>(r: R) -> Result<Vec<DepthRecord>, AnalyticsError> {
    let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let mut out = Vec::new();
    for (i, row) in rd.deserialize::<DepthRow>().enumerate() {
        let row = row?;
        let line = i + 2;
        let t = parse_timestamp(&row.timestamp).ok_or(AnalyticsError::Timestamp {
            line,
            value: row.timestamp.clone(),
        })?;
        let side = match row.side.to_ascii_lowercase().as_str() {
            "bid" => Side::Bid,
            "ask" => Side::Ask,
            _ => return Err(AnalyticsError::Side { line, value: row.side }),
        };
        out.push(DepthRecord {
            t,
            x_offset: row.x_offset,
            size: row.size,
            side,
        });
    }
    Ok(out)
}

/// Groups depth records by timestamp into signed snapshots on `x`
/// (bids negative), by nearest node.
pub fn depth_snapshots(records: &[DepthRecord], x: &[f64]) -> Vec<(f64, Vec<f64>)> {
    let mut out: Vec<(f64, Vec<f64>)> = Vec::new();
    for r in records {
        if out.last().map(|s| s.0) != Some(r.t) {
            out.push((r.t, vec![0.0; x.len()]));
        }
        let node = x
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - r.x_offset).abs().total_cmp(&(b.1 - r.x_offset).abs()))
            .map(|(i, _)| i);
        if let (Some(i), Some(last)) = (node, out.last_mut()) {
            last.1[i] += match r.side {
                Side::Ask => r.size.abs(),
                Side::Bid => -r.size.abs(),
            };
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn constant_price_has_zero_rv() {
        let t: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let rv = realized_vol(&t, &vec![5.0; 100], 10.0).unwrap();
        assert!(rv.rv.iter().all(|v| *v == 0.0));
        assert_eq!(rv.rv.len(), 10);
    }

    #[test]
    fn window_additivity() {
        let t: Vec<f64> = (0..200).map(|i| i as f64).collect();
        let p: Vec<f64> = (0..200).map(|i| 100.0 + (i as f64 * 0.7).sin()).collect();
        let fine = realized_vol(&t, &p, 10.0).unwrap();
        let full = realized_vol(&t, &p, 1000.0).unwrap();
        let sum: f64 = fine.rv.iter().map(|v| v * v).sum();
        assert!((sum - full.rv[0].powi(2)).abs() < 1e-12 * sum);
    }

    #[test]
    fn gap_windows_are_skipped() {
        let t = [0.0, 1.0, 2.0, 50.0, 51.0];
        let p = [1.0, 1.1, 1.0, 1.2, 1.1];
        let rv = realized_vol(&t, &p, 10.0).unwrap();
        assert_eq!(rv.times, vec![0.0, 50.0]);
        assert_eq!(rv.counts, vec![2, 2]);
    }

    #[test]
    fn fbm_variance_scaling() {
        let mut r = rng::stream(1, "test", 0);
        let mut acc = 0.0;
        for _ in 0..200 {
            let p = fbm_davies_harte(256, 0.3, 1.0 / 256.0, &mut r).unwrap();
            acc += p[256] * p[256];
        }
        let var = acc / 200.0;
        assert!((var - 1.0).abs() < 0.25, "var={var}");
    }

    #[test]
    fn brownian_hurst() {
        let mut r = rng::stream(2, "test", 0);
        let p = fbm_davies_harte(8192, 0.5, 1.0, &mut r).unwrap();
        let h = variogram_hurst(&p, 32).unwrap().hurst;
        assert!((h - 0.5).abs() < 0.05, "h={h}");
    }

    #[test]
    fn median_interval_brackets() {
        let v: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let (m, lo, hi) = median_ci(&v).unwrap();
        assert_eq!(m, 24.5);
        assert!(lo < m && m < hi);
    }

    #[test]
    fn static_depth_profile() {
        let x: Vec<f64> = (-4..=4).map(|i| i as f64 * 0.25).collect();
        let u: Vec<f64> = x.iter().map(|v: &f64| (1.0 - v.abs()) * v.signum()).collect();
        let d = depth_profile(&x, &[u.clone(), u.clone()]).unwrap();
        for (m, v) in d.mean_abs.iter().zip(&u) {
            assert_eq!(*m, v.abs());
        }
        assert_eq!(d.ask_peaks[0], 0.25);
        assert_eq!(d.bid_peaks[0], -0.25);
        assert_eq!(d.ask_peak_var, 0.0);
    }

    #[test]
    fn csv_ticks() {
        let data = "timestamp,price\n2024-01-02T09:30:00Z,100.5\n1704187801000000000,100.6\n";
        let ts = read_ticks(data.as_bytes()).unwrap();
        assert_eq!(ts.prices, vec![100.5, 100.6]);
        assert!((ts.times[1] - ts.times[0] - 1.0).abs() < 1e-6);
        assert!(read_ticks("timestamp,price\nnope,1\n".as_bytes()).is_err());
    }

    #[test]
    fn csv_depth() {
        let data = "timestamp,x_offset,size,side\n0,0.1,5,ask\n0,-0.1,3,bid\n1,0.1,2,ASK\n";
        let recs = read_depth(data.as_bytes()).unwrap();
        let snaps = depth_snapshots(&recs, &[-0.1, 0.0, 0.1]);
        assert_eq!(snaps.len(), 2);
        assert_eq!(snaps[0].1, vec![-3.0, 0.0, 5.0]);
    }
}
