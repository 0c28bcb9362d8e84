//! Order-book depths and the mid-price
//!
//!   dS = (δ/2)[(ν_b − ν_a)dt + c(C_b − C_a)√Y dW],
//!   ν_a = (C_a/D_a)∫₀^ι drift,  ν_b = (C_b/D_b)∫_{−ι}^0 drift,
//!
//! co-simulated with the book and the variance process.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lob_spde::{
    book_increments, drift_terms, step_count, step_with_drift, BookError, BookGrid, BookParams, BookSeries,
    StepWorkspace,
};
use crate::rng;
use crate::rough_volterra::{brownian_increments, VolterraError, VolterraForm, VolterraParams, VolterraPath, VolterraSolver};

pub const DEPTH_FLOOR: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PriceError {
    #[error("degenerate depth on the {side} side: {depth}")]
    DegenerateDepth { side: &'static str, depth: f64 },
    #[error("price parameter {name} invalid: {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("correlated drivers need equal steps (volatility {vol_dt}, book {book_dt})")]
    GridMismatch { vol_dt: f64, book_dt: f64 },
    #[error(transparent)]
    Book(#[from] BookError),
    #[error(transparent)]
    Volterra(#[from] VolterraError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriceParams {
    pub delta: f64,
    pub c_a: f64,
    pub c_b: f64,
    pub s0: f64,
}

impl PriceParams {
    pub fn validate(&self) -> Result<(), PriceError> {
        for (name, v) in [("delta", self.delta), ("c_a", self.c_a), ("c_b", self.c_b), ("s0", self.s0)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(PriceError::InvalidParameter { name, value: v });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DepthPair {
    pub d_a: f64,
    pub d_b: f64,
}

pub fn depths(g: &BookGrid, iota: f64) -> Result<DepthPair, PriceError> {
    let half = g.x.last().copied().unwrap_or(0.0);
    if !(iota > 0.0 && iota <= half) {
        return Err(PriceError::InvalidParameter {
            name: "iota",
            value: iota,
        });
    }
    let (d_a, d_b) = g.side_integrals(&g.u, iota);
    check_depths(DepthPair { d_a, d_b })
}

fn check_depths(d: DepthPair) -> Result<DepthPair, PriceError> {
    if !(d.d_a.abs() >= DEPTH_FLOOR) {
        return Err(PriceError::DegenerateDepth {
            side: "ask",
            depth: d.d_a,
        });
    }
    if !(d.d_b.abs() >= DEPTH_FLOOR) {
        return Err(PriceError::DegenerateDepth {
            side: "bid",
            depth: d.d_b,
        });
    }
    Ok(d)
}

/// The two price drift rates and the depths they were computed from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PriceDrift {
    pub nu_a: f64,
    pub nu_b: f64,
    pub depths: DepthPair,
}

pub fn price_drift(g: &BookGrid, pp: &PriceParams, bp: &BookParams, drift: &[f64]) -> Result<PriceDrift, PriceError> {
    let depths = depths(g, bp.iota)?;
    let (ia, ib) = g.side_integrals(drift, bp.iota);
    Ok(PriceDrift {
        nu_a: pp.c_a / depths.d_a * ia,
        nu_b: pp.c_b / depths.d_b * ib,
        depths,
    })
}

/// dS over one step from the current book state.
pub fn price_increment(
    g: &BookGrid,
    pp: &PriceParams,
    bp: &BookParams,
    y: f64,
    dw: f64,
    dt: f64,
) -> Result<f64, PriceError> {
    let drift = drift_terms(g, bp).total();
    let pd = price_drift(g, pp, bp, &drift)?;
    Ok(increment(&pd, pp, bp, y, dw, dt))
}

fn increment(pd: &PriceDrift, pp: &PriceParams, bp: &BookParams, y: f64, dw: f64, dt: f64) -> f64 {
    let noise = bp.c * (pp.c_b - pp.c_a) * y.max(0.0).sqrt() * dw;
    0.5 * pp.delta * ((pd.nu_b - pd.nu_a) * dt + noise)
}

pub fn price_step(
    s: f64,
    g: &BookGrid,
    pp: &PriceParams,
    bp: &BookParams,
    y: f64,
    dw: f64,
    dt: f64,
) -> Result<f64, PriceError> {
    Ok(s + price_increment(g, pp, bp, y, dw, dt)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingOptions {
    /// price driven by its own Brownian motion instead of the book's
    #[serde(default)]
    pub decouple_price_noise: bool,
    /// correlation of the variance driver with the book driver
    #[serde(default)]
    pub vol_book_correlation: f64,
    #[serde(default = "one")]
    pub snapshot_stride: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DepthWarning {
    pub t: f64,
    pub side: String,
    pub depth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PricePath {
    pub times: Vec<f64>,
    pub s: Vec<f64>,
    pub y: Vec<f64>,
    pub d_a: Vec<f64>,
    pub d_b: Vec<f64>,
    pub increments: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoupledRun {
    pub book: BookSeries,
    pub price: PricePath,
    pub volterra: VolterraPath,
    pub warnings: Vec<DepthWarning>,
}

/// Co-simulation on one clock: Y on its own grid read left-continuously,
/// then the price from the pre-step book, then the book step, both with
/// the same dW. A degenerate depth holds the price for that step and is
/// logged.
#[allow(clippy::too_many_arguments)]
pub fn simulate_coupled(
    bp: &BookParams,
    pp: &PriceParams,
    u0: &BookGrid,
    vparams: &VolterraParams,
    seed: u64,
    horizon: f64,
    dt: f64,
    opts: &CouplingOptions,
) -> Result<CoupledRun, PriceError> {
    bp.validate()?;
    pp.validate()?;
    let n = step_count(horizon, dt);
    let dt = horizon / n as f64;
    bp.check_step(dt)?;
    if vparams.horizon < horizon * (1.0 - 1e-12) {
        return Err(BookError::VolterraPathTooShort {
            path_end: vparams.horizon,
            horizon,
        }
        .into());
    }
    let rho = opts.vol_book_correlation;
    if !(-1.0..=1.0).contains(&rho) {
        return Err(PriceError::InvalidParameter {
            name: "vol_book_correlation",
            value: rho,
        });
    }
    let dw_book = book_increments(seed, n, dt);
    let vol_noise = {
        let vdt = vparams.dt();
        let mut z = brownian_increments(seed, vparams.n_steps, vdt);
        if rho != 0.0 {
            if (vdt - dt).abs() > 1e-12 * dt {
                return Err(PriceError::GridMismatch { vol_dt: vdt, book_dt: dt });
            }
            let k = (1.0 - rho * rho).sqrt();
            for (zi, wi) in z.iter_mut().zip(&dw_book) {
                *zi = rho * wi + k * *zi;
            }
        }
        z
    };
    let vp = VolterraSolver::new(*vparams, VolterraForm::FractionalKernel)?.solve(&vol_noise)?;
    let dw_price = if opts.decouple_price_noise {
        let mut r = rng::stream(seed, "price", 0);
        (0..n)
            .map(|_| {
                let v: f64 = StandardNormal.sample(&mut r);
                v * dt.sqrt()
            })
            .collect()
    } else {
        dw_book.clone()
    };

    let stride = opts.snapshot_stride.max(1);
    let mut g = u0.clone();
    g.t = 0.0;
    let mut book = BookSeries {
        x: g.x.clone(),
        times: vec![0.0],
        snapshots: vec![g.u.clone()],
        clamp_mass: 0.0,
        initial_mass: g.total_mass(),
        stopped_at: None,
        peclet: bp.peclet(),
    };
    let mut price = PricePath {
        times: Vec::with_capacity(n + 1),
        s: Vec::with_capacity(n + 1),
        y: Vec::with_capacity(n + 1),
        d_a: Vec::with_capacity(n + 1),
        d_b: Vec::with_capacity(n + 1),
        increments: Vec::with_capacity(n),
    };
    let mut warnings = Vec::new();
    let mut s = pp.s0;
    let mut ws = StepWorkspace::default();
    for k in 0..n {
        let t = k as f64 * dt;
        let y = vp.value_at(t);
        if let Some(cap) = bp.y_cap {
            if y > cap {
                book.stopped_at = Some(t);
                break;
            }
        }
        let drift = drift_terms(&g, bp);
        let total = drift.total();
        let (raw_a, raw_b) = g.side_integrals(&g.u, bp.iota);
        price.times.push(t);
        price.s.push(s);
        price.y.push(y);
        price.d_a.push(raw_a);
        price.d_b.push(raw_b);
        let ds = match price_drift(&g, pp, bp, &total) {
            Ok(pd) => increment(&pd, pp, bp, y, dw_price[k], dt),
            Err(PriceError::DegenerateDepth { side, depth }) => {
                warnings.push(DepthWarning {
                    t,
                    side: side.to_string(),
                    depth,
                });
                0.0
            }
            Err(e) => return Err(e),
        };
        price.increments.push(ds);
        s += ds;
        step_with_drift(&mut g, bp, &drift, y, dw_book[k], dt, &mut ws)?;
        g.t = (k + 1) as f64 * dt;
        if (k + 1) % stride == 0 || k + 1 == n {
            book.times.push(g.t);
            book.snapshots.push(g.u.clone());
        }
    }
    let (raw_a, raw_b) = g.side_integrals(&g.u, bp.iota);
    price.times.push(g.t);
    price.s.push(s);
    price.y.push(vp.value_at(g.t));
    price.d_a.push(raw_a);
    price.d_b.push(raw_b);
    book.clamp_mass = g.clamp_mass;
    Ok(CoupledRun {
        book,
        price,
        volterra: vp,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear_book(p: &BookParams) -> BookGrid {
        let mut g = BookGrid::zeros(p);
        for (u, x) in g.u.iter_mut().zip(&g.x) {
            *u = *x;
        }
        let m = g.u.len() - 1;
        g.u[0] = 0.0;
        g.u[m] = 0.0;
        g
    }

    #[test]
    fn depth_of_linear_book() {
        let mut p = BookParams::reference();
        p.iota = 0.1;
        let d = depths(&linear_book(&p), 0.1).unwrap();
        assert!((d.d_a - 0.005).abs() < 1e-15);
        assert_eq!(d.d_b, -d.d_a);
    }

    #[test]
    fn empty_book_is_degenerate() {
        let p = BookParams::reference();
        assert!(matches!(
            depths(&BookGrid::zeros(&p), p.iota),
            Err(PriceError::DegenerateDepth { .. })
        ));
    }

    #[test]
    fn symmetric_book_no_move() {
        let bp = BookParams::reference();
        let pp = PriceParams {
            delta: 0.01,
            c_a: 1.0,
            c_b: 1.0,
            s0: 100.0,
        };
        let g = linear_book(&bp);
        assert_eq!(price_increment(&g, &pp, &bp, 0.9, 0.3, 1e-3).unwrap(), 0.0);
    }

    #[test]
    fn five_node_hand_computation() {
        let mut bp = BookParams::linear(0.01, 0.0, 1.0);
        bp.nodes = 4;
        bp.iota = 0.5;
        let pp = PriceParams {
            delta: 0.01,
            c_a: 1.0,
            c_b: 1.0,
            s0: 100.0,
        };
        let mut g = BookGrid::zeros(&bp);
        g.u = vec![0.0, -1.0, 0.0, 2.0, 0.0];
        // drift at x = -0.5, 0, 0.5: 0.08, 0.04, -0.16
        // nu_a = (0.25*(0.04 - 0.16))/0.5 = -0.06, nu_b = (0.25*(0.04 + 0.08))/(-0.25) = -0.12
        let ds = price_increment(&g, &pp, &bp, 0.0, 0.0, 0.1).unwrap();
        assert!((ds - 0.5 * 0.01 * (-0.12 + 0.06) * 0.1).abs() < 1e-17);
        // depleting ask side only: the price rises
        g.u = vec![0.0, -1.0, 0.0, 1.0, 0.0];
        bp.eta = 1e-300;
        bp.zeta = 0.0;
        bp.cancel = crate::lob_spde::CancelRate { j0: 1.0, scale: 1e300 };
        bp.q0 = 0.5;
        let ds = price_increment(&g, &pp, &bp, 0.0, 0.0, 0.1).unwrap();
        // J = -0.5 at x = 0.5 and +0.5 at x = -0.5: both sides deplete equally
        assert_eq!(ds, 0.0);
        let asym = PriceParams { c_b: 0.5, ..pp };
        assert!(price_increment(&g, &asym, &bp, 0.0, 0.0, 0.1).unwrap() > 0.0);
    }
}
