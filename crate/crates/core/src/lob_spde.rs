//! Finite-difference solver for the centered order-book density
//!
//!   du = [η u_xx − β sgn(x)[u_x]⁻ − ζu + J(x,u) + G(x,ℓ)]dt + c u √Y dW
//!
//! on [−L, L] with u(±L) = 0. Diffusion and decay are implicit, the other
//! drift pieces and the noise explicit. Every operator is evaluated in
//! mirrored node order so that odd data stays exactly odd.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng;
use crate::rough_volterra::VolterraPath;

pub const DEFAULT_NODES: usize = 400;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BookError {
    #[error("book parameter {name} invalid: {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("stability guard violated: {what} = {value} exceeds 1")]
    CflViolation { what: &'static str, value: f64 },
    #[error("non-finite state at t = {t}, node {node}")]
    NonFiniteState { t: f64, node: usize },
    #[error("initial profile violates {0}")]
    InvalidProfile(String),
    #[error("volatility path ends at {path_end} before the horizon {horizon}")]
    VolterraPathTooShort { path_end: f64, horizon: f64 },
}

/// j(x) = j0·exp(−|x|/scale)
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CancelRate {
    pub j0: f64,
    pub scale: f64,
}

impl CancelRate {
    pub fn eval(&self, x: f64) -> f64 {
        self.j0 * (-x.abs() / self.scale).exp()
    }

    pub fn off() -> Self {
        Self { j0: 0.0, scale: 1.0 }
    }
}

/// G(x, ℓ) = −g·ℓ·exp(−(x/width)²)
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Submission {
    pub g: f64,
    pub width: f64,
}

impl Submission {
    pub fn bump(&self, x: f64) -> f64 {
        (-(x / self.width).powi(2)).exp()
    }

    pub fn eval(&self, x: f64, ell: f64) -> f64 {
        -self.g * ell * self.bump(x)
    }

    pub fn off() -> Self {
        Self { g: 0.0, width: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseScheme {
    #[default]
    EulerMaruyama,
    /// exact second-order term for the scalar multiplicative noise
    Milstein,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BookParams {
    pub eta: f64,
    pub beta: f64,
    pub zeta: f64,
    pub half_width: f64,
    pub iota: f64,
    /// queue-length threshold in J
    pub q0: f64,
    pub c: f64,
    pub cancel: CancelRate,
    pub submission: Submission,
    /// grid intervals; must be even so that x = 0 is a node
    #[serde(default = "default_nodes")]
    pub nodes: usize,
    #[serde(default)]
    pub noise_scheme: NoiseScheme,
    #[serde(default)]
    pub pin_zero: bool,
    /// stop when Y exceeds this level
    #[serde(default)]
    pub y_cap: Option<f64>,
}

fn default_nodes() -> usize {
    DEFAULT_NODES
}

impl BookParams {
    /// Diffusion and decay only.
    pub fn linear(eta: f64, zeta: f64, half_width: f64) -> Self {
        Self {
            eta,
            beta: 0.0,
            zeta,
            half_width,
            iota: 0.1 * half_width,
            q0: 1.0,
            c: 0.0,
            cancel: CancelRate::off(),
            submission: Submission::off(),
            nodes: DEFAULT_NODES,
            noise_scheme: NoiseScheme::EulerMaruyama,
            pin_zero: false,
            y_cap: None,
        }
    }

    /// All nonlinear pieces active.
    pub fn reference() -> Self {
        Self {
            eta: 0.03,
            beta: 0.5,
            zeta: 0.2,
            half_width: 1.0,
            iota: 0.1,
            q0: 0.2,
            c: 0.5,
            cancel: CancelRate { j0: 2.0, scale: 0.5 },
            submission: Submission { g: 2.0, width: 0.2 },
            nodes: DEFAULT_NODES,
            noise_scheme: NoiseScheme::EulerMaruyama,
            pin_zero: false,
            y_cap: None,
        }
    }

    pub fn validate(&self) -> Result<(), BookError> {
        let pos = [("eta", self.eta), ("half_width", self.half_width), ("iota", self.iota), ("q0", self.q0)];
        for (name, v) in pos {
            if !(v > 0.0 && v.is_finite()) {
                return Err(BookError::InvalidParameter { name, value: v });
            }
        }
        let nonneg = [
            ("beta", self.beta),
            ("zeta", self.zeta),
            ("c", self.c),
            ("cancel.j0", self.cancel.j0),
            ("submission.g", self.submission.g),
        ];
        for (name, v) in nonneg {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(BookError::InvalidParameter { name, value: v });
            }
        }
        for (name, v) in [("cancel.scale", self.cancel.scale), ("submission.width", self.submission.width)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(BookError::InvalidParameter { name, value: v });
            }
        }
        if self.iota >= self.half_width {
            return Err(BookError::InvalidParameter {
                name: "iota",
                value: self.iota,
            });
        }
        if self.nodes < 4 || self.nodes % 2 == 1 {
            return Err(BookError::InvalidParameter {
                name: "nodes",
                value: self.nodes as f64,
            });
        }
        if let Some(k) = self.y_cap {
            if !(k > 0.0) {
                return Err(BookError::InvalidParameter { name: "y_cap", value: k });
            }
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / self.nodes as f64
    }

    pub fn grid(&self) -> Vec<f64> {
        let m = self.nodes as i64;
        let dx = self.dx();
        (0..=m).map(|i| (i - m / 2) as f64 * dx).collect()
    }

    /// Cell Péclet number Δx·β/η.
    pub fn peclet(&self) -> f64 {
        self.dx() * self.beta / self.eta
    }

    /// Checks the explicit pieces against a step size.
    pub fn check_step(&self, dt: f64) -> Result<(), BookError> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(BookError::InvalidParameter { name: "dt", value: dt });
        }
        let conv = self.beta * dt / self.dx();
        if conv > 1.0 {
            return Err(BookError::CflViolation {
                what: "beta*dt/dx",
                value: conv,
            });
        }
        let jmax = self.cancel.eval(0.0) * dt;
        if jmax > 1.0 {
            return Err(BookError::CflViolation {
                what: "dt*j_max",
                value: jmax,
            });
        }
        let g = dt * self.submission.g * 2.0 * self.iota;
        if g > 1.0 {
            return Err(BookError::CflViolation {
                what: "dt*g*2*iota",
                value: g,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BookGrid {
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub t: f64,
    /// accumulated ∫|removed| dx from sign enforcement
    pub clamp_mass: f64,
}

impl BookGrid {
    pub fn zeros(p: &BookParams) -> Self {
        let x = p.grid();
        let n = x.len();
        Self {
            x,
            u: vec![0.0; n],
            t: 0.0,
            clamp_mass: 0.0,
        }
    }

    /// Samples f on the grid; boundary nodes are set to 0.
    pub fn from_fn(p: &BookParams, f: impl Fn(f64) -> f64) -> Result<Self, BookError> {
        let mut g = Self::zeros(p);
        for (u, x) in g.u.iter_mut().zip(&g.x) {
            *u = f(*x);
        }
        let m = g.u.len() - 1;
        g.u[0] = 0.0;
        g.u[m] = 0.0;
        g.check_profile()?;
        Ok(g)
    }

    /// Linear interpolation of (x, u) pairs (ascending x) onto the grid;
    /// zero outside the data.
    pub fn from_points(p: &BookParams, pts: &[(f64, f64)]) -> Result<Self, BookError> {
        if pts.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(BookError::InvalidProfile("x not strictly ascending".into()));
        }
        Self::from_fn(p, |x| {
            let k = pts.partition_point(|q| q.0 < x);
            if k == 0 {
                return if pts.first().map(|q| q.0) == Some(x) { pts[0].1 } else { 0.0 };
            }
            if k == pts.len() {
                return 0.0;
            }
            let (x0, u0) = pts[k - 1];
            let (x1, u1) = pts[k];
            u0 + (u1 - u0) * (x - x0) / (x1 - x0)
        })
    }

    fn check_profile(&self) -> Result<(), BookError> {
        for (i, (x, u)) in self.x.iter().zip(&self.u).enumerate() {
            if !u.is_finite() {
                return Err(BookError::NonFiniteState { t: self.t, node: i });
            }
            if (*x > 0.0 && *u < 0.0) || (*x < 0.0 && *u > 0.0) {
                return Err(BookError::InvalidProfile(format!("sign zone at x = {x}")));
            }
        }
        Ok(())
    }

    /// 4x(L − |x|)(1 + 0.2x/L)/L², the reference initial book.
    pub fn reference_profile(p: &BookParams) -> Self {
        let l = p.half_width;
        Self::from_fn(p, |x| 4.0 * x * (l - x.abs()) * (1.0 + 0.2 * x / l) / (l * l)).expect("valid profile")
    }

    pub fn dx(&self) -> f64 {
        self.x[1] - self.x[0]
    }

    pub fn mid(&self) -> usize {
        (self.x.len() - 1) / 2
    }

    /// ∫|u| dx by the trapezoid rule.
    pub fn total_mass(&self) -> f64 {
        let dx = self.dx();
        let m = self.u.len() - 1;
        let mut s = 0.0;
        for i in 0..m {
            s += 0.5 * dx * (self.u[i].abs() + self.u[i + 1].abs());
        }
        s
    }

    pub fn l2_norm(&self) -> f64 {
        (self.u.iter().map(|v| v * v).sum::<f64>() * self.dx()).sqrt()
    }

    /// ∫₀^w f and ∫_{−w}^0 f for nodal values f, trapezoid with a partial
    /// last cell; the two sides are accumulated in mirrored order.
    pub fn side_integrals(&self, f: &[f64], w: f64) -> (f64, f64) {
        let dx = self.dx();
        let mid = self.mid();
        let full = ((w / dx) * (1.0 + 1e-12)).floor() as usize;
        let full = full.min(mid);
        let (mut right, mut left) = (0.0, 0.0);
        for k in 0..full {
            right += 0.5 * dx * (f[mid + k] + f[mid + k + 1]);
            left += 0.5 * dx * (f[mid - k] + f[mid - k - 1]);
        }
        let rest = w - full as f64 * dx;
        if rest > 1e-12 * dx && full < mid {
            let s = rest / dx;
            let (a, b) = (f[mid + full], f[mid + full + 1]);
            right += 0.5 * rest * (a + (a + s * (b - a)));
            let (a, b) = (f[mid - full], f[mid - full - 1]);
            left += 0.5 * rest * (a + (a + s * (b - a)));
        }
        (right, left)
    }

    /// ℓ = ∫_{−ι}^{ι} u.
    pub fn imbalance(&self, iota: f64) -> f64 {
        let (r, l) = self.side_integrals(&self.u, iota);
        r + l
    }
}

/// The drift split into its pieces, per node.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftTerms {
    pub diffusion: Vec<f64>,
    pub decay: Vec<f64>,
    pub convection: Vec<f64>,
    pub cancel: Vec<f64>,
    pub submission: Vec<f64>,
}

impl DriftTerms {
    /// Convection + J + G, the explicitly stepped part.
    pub fn explicit(&self) -> Vec<f64> {
        (0..self.convection.len())
            .map(|i| self.convection[i] + self.cancel[i] + self.submission[i])
            .collect()
    }

    pub fn total(&self) -> Vec<f64> {
        (0..self.convection.len())
            .map(|i| self.diffusion[i] + self.decay[i] + self.convection[i] + self.cancel[i] + self.submission[i])
            .collect()
    }
}

fn neg_part(v: f64) -> f64 {
    if v < 0.0 {
        -v
    } else {
        0.0
    }
}

fn pos_part(v: f64) -> f64 {
    if v > 0.0 {
        v
    } else {
        0.0
    }
}

/// Evaluates every drift piece at the current state; boundary nodes carry 0.
pub fn drift_terms(g: &BookGrid, p: &BookParams) -> DriftTerms {
    let n = g.u.len();
    let m = n - 1;
    let mid = g.mid();
    let dx = g.dx();
    let u = &g.u;
    let mut out = DriftTerms {
        diffusion: vec![0.0; n],
        decay: vec![0.0; n],
        convection: vec![0.0; n],
        cancel: vec![0.0; n],
        submission: vec![0.0; n],
    };
    let ell = g.imbalance(p.iota);
    let inv_dx2 = 1.0 / (dx * dx);
    for i in 1..m {
        out.diffusion[i] = p.eta * ((u[i + 1] - u[i]) - (u[i] - u[i - 1])) * inv_dx2;
        out.decay[i] = -p.zeta * u[i];
        out.submission[i] = p.submission.eval(g.x[i], ell);
    }
    for k in 1..mid {
        let r = mid + k;
        let l = mid - k;
        // upwind: information travels toward x = 0
        let dr = (u[r + 1] - u[r]) / dx;
        let dl = (u[l] - u[l - 1]) / dx;
        out.convection[r] = -p.beta * neg_part(dr);
        out.convection[l] = p.beta * neg_part(dl);
        let x = g.x[r];
        let q = p.cancel.eval(x) * pos_part(u[r] - p.q0) + p.cancel.eval(-x) * neg_part(u[l] + p.q0);
        out.cancel[r] = -q;
        out.cancel[l] = q;
    }
    out
}

/// Solves (1 + 2a + z)vᵢ − a(vᵢ₋₁ + vᵢ₊₁) = rᵢ with v₀ = v_M = 0 by
/// eliminating from both ends toward the middle node.
fn solve_symmetric(r: &mut [f64], a: f64, z: f64, scratch: &mut Vec<f64>) {
    let m = r.len() - 1;
    let mid = m / 2;
    let b = 1.0 + 2.0 * a + z;
    r[0] = 0.0;
    r[m] = 0.0;
    scratch.clear();
    scratch.resize(m + 1, 0.0);
    // c[i]: coefficient coupling node i to its neighbour nearer the middle
    let c = scratch;
    let mut prev_c = 0.0;
    for k in 1..mid {
        let denom = b - a * prev_c;
        let ck = a / denom;
        let (lo, hi) = (k, m - k);
        r[lo] = (r[lo] + a * r[lo - 1]) / denom;
        r[hi] = (r[hi] + a * r[hi + 1]) / denom;
        c[lo] = ck;
        c[hi] = ck;
        prev_c = ck;
    }
    let denom = b - 2.0 * a * prev_c;
    r[mid] = (r[mid] + a * r[mid - 1] + a * r[mid + 1]) / denom;
    for k in (1..mid).rev() {
        let (lo, hi) = (k, m - k);
        r[lo] += c[lo] * r[lo + 1];
        r[hi] += c[hi] * r[hi - 1];
    }
}

/// Sign-zone projection; returns ∫|removed| dx.
fn clamp_zones(g: &mut BookGrid) -> f64 {
    let dx = g.dx();
    let mid = g.mid();
    let mut removed = 0.0;
    for k in 1..=mid {
        let (r, l) = (mid + k, mid - k);
        if g.u[r] < 0.0 {
            removed += -g.u[r] * dx;
            g.u[r] = 0.0;
        }
        if g.u[l] > 0.0 {
            removed += g.u[l] * dx;
            g.u[l] = 0.0;
        }
    }
    removed
}

/// Reusable buffers for stepping one grid.
#[derive(Debug, Default, Clone)]
pub struct StepWorkspace {
    rhs: Vec<f64>,
    scratch: Vec<f64>,
}

/// One IMEX step driven by Y(t) = y and the scalar increment dW.
pub fn step(
    g: &mut BookGrid,
    p: &BookParams,
    y: f64,
    dw: f64,
    dt: f64,
    ws: &mut StepWorkspace,
) -> Result<(), BookError> {
    let drift = drift_terms(g, p);
    step_with_drift(g, p, &drift, y, dw, dt, ws)
}

/// As [`step`], reusing drift pieces already evaluated at the current state.
pub fn step_with_drift(
    g: &mut BookGrid,
    p: &BookParams,
    drift: &DriftTerms,
    y: f64,
    dw: f64,
    dt: f64,
    ws: &mut StepWorkspace,
) -> Result<(), BookError> {
    let n = g.u.len();
    let s = p.c * y.max(0.0).sqrt();
    let factor = match p.noise_scheme {
        NoiseScheme::EulerMaruyama => s * dw,
        NoiseScheme::Milstein => s * dw + 0.5 * s * s * (dw * dw - dt),
    };
    ws.rhs.clear();
    ws.rhs.extend((0..n).map(|i| {
        let ex = drift.convection[i] + drift.cancel[i] + drift.submission[i];
        g.u[i] + dt * ex + g.u[i] * factor
    }));
    let dx = g.dx();
    solve_symmetric(&mut ws.rhs, dt * p.eta / (dx * dx), dt * p.zeta, &mut ws.scratch);
    std::mem::swap(&mut g.u, &mut ws.rhs);
    g.t += dt;
    let m = n - 1;
    g.u[0] = 0.0;
    g.u[m] = 0.0;
    if p.pin_zero {
        let mid = g.mid();
        g.u[mid] = 0.0;
    }
    if let Some(i) = g.u.iter().position(|v| !v.is_finite()) {
        return Err(BookError::NonFiniteState { t: g.t, node: i });
    }
    g.clamp_mass += clamp_zones(g);
    Ok(())
}

/// Snapshots of one book simulation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BookSeries {
    pub x: Vec<f64>,
    pub times: Vec<f64>,
    pub snapshots: Vec<Vec<f64>>,
    pub clamp_mass: f64,
    /// ∫|u| at t = 0
    pub initial_mass: f64,
    /// time at which Y first exceeded the cap, if it did
    pub stopped_at: Option<f64>,
    pub peclet: f64,
}

impl BookSeries {
    pub fn final_state(&self) -> &[f64] {
        self.snapshots.last().expect("at least the initial snapshot")
    }

    pub fn clamp_fraction(&self) -> f64 {
        if self.initial_mass > 0.0 {
            self.clamp_mass / self.initial_mass
        } else {
            0.0
        }
    }
}

/// Book increments from the stream (seed, "book", 0).
pub fn book_increments(seed: u64, n: usize, dt: f64) -> Vec<f64> {
    let mut r = rng::stream(seed, "book", 0);
    let s = dt.sqrt();
    (0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut r);
            s * z
        })
        .collect()
}

/// Number of steps of size ≈ dt covering the horizon exactly.
pub fn step_count(horizon: f64, dt: f64) -> usize {
    ((horizon / dt) - 1e-9).ceil().max(1.0) as usize
}

/// Runs the book on [0, horizon] with Y read left-continuously from `vp`,
/// recording every `stride`-th state.
pub fn simulate_book(
    p: &BookParams,
    u0: &BookGrid,
    vp: &VolterraPath,
    seed: u64,
    horizon: f64,
    dt: f64,
    stride: usize,
) -> Result<BookSeries, BookError> {
    let n = step_count(horizon, dt);
    let dt = horizon / n as f64;
    let noise = book_increments(seed, n, dt);
    simulate_book_with_noise(p, u0, &|t| vp_value(vp, t), vp_end(vp), &noise, horizon, stride)
}

pub(crate) fn vp_end(vp: &VolterraPath) -> f64 {
    *vp.times.last().unwrap_or(&0.0)
}

pub(crate) fn vp_value(vp: &VolterraPath, t: f64) -> f64 {
    vp.value_at(t)
}

/// Runs the book with the given increments (their count fixes dt).
pub fn simulate_book_with_noise(
    p: &BookParams,
    u0: &BookGrid,
    y_at: &dyn Fn(f64) -> f64,
    y_end: f64,
    noise: &[f64],
    horizon: f64,
    stride: usize,
) -> Result<BookSeries, BookError> {
    p.validate()?;
    if u0.x.len() != p.nodes + 1 {
        return Err(BookError::InvalidProfile(format!(
            "profile has {} nodes, grid {}",
            u0.x.len(),
            p.nodes + 1
        )));
    }
    u0.check_profile()?;
    if y_end < horizon * (1.0 - 1e-12) {
        return Err(BookError::VolterraPathTooShort {
            path_end: y_end,
            horizon,
        });
    }
    let n = noise.len();
    let dt = horizon / n as f64;
    p.check_step(dt)?;
    let stride = stride.max(1);
    let mut g = u0.clone();
    g.t = 0.0;
    let mut out = BookSeries {
        x: g.x.clone(),
        times: vec![0.0],
        snapshots: vec![g.u.clone()],
        clamp_mass: 0.0,
        initial_mass: g.total_mass(),
        stopped_at: None,
        peclet: p.peclet(),
    };
    let mut ws = StepWorkspace::default();
    for (k, dw) in noise.iter().enumerate() {
        let t = k as f64 * dt;
        let y = y_at(t);
        if let Some(cap) = p.y_cap {
            if y > cap {
                out.stopped_at = Some(t);
                break;
            }
        }
        step(&mut g, p, y, *dw, dt, &mut ws)?;
        g.t = (k + 1) as f64 * dt;
        if (k + 1) % stride == 0 || k + 1 == n {
            out.times.push(g.t);
            out.snapshots.push(g.u.clone());
        }
    }
    if out.stopped_at.is_some() && out.times.last() != Some(&g.t) {
        out.times.push(g.t);
        out.snapshots.push(g.u.clone());
    }
    out.clamp_mass = g.clamp_mass;
    Ok(out)
}

/// Sine-series solution of the linear problem for the eigenmode k.
pub fn heat_mode(p: &BookParams, k: usize, x: f64, t: f64) -> f64 {
    let w = k as f64 * std::f64::consts::PI / (2.0 * p.half_width);
    let rate = p.eta * w * w + p.zeta;
    (w * (x + p.half_width)).sin() * (-rate * t).exp()
}

/// Relative L² distance between two nodal vectors.
pub fn relative_l2(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn odd_profile(p: &BookParams) -> BookGrid {
        let l = p.half_width;
        BookGrid::from_fn(p, |x| x * (l - x.abs()) / (l * l) * 4.0).unwrap()
    }

    #[test]
    fn grid_has_zero_node() {
        let p = BookParams::reference();
        let x = p.grid();
        assert_eq!(x.len(), 401);
        assert_eq!(x[200], 0.0);
        assert_eq!(x[0], -1.0);
        assert_eq!(x[400], 1.0);
    }

    #[test]
    fn zero_is_fixed() {
        let p = BookParams::reference();
        let g = BookGrid::zeros(&p);
        let d = drift_terms(&g, &p);
        assert!(d.total().iter().all(|v| *v == 0.0));
        let mut g2 = g.clone();
        let mut ws = StepWorkspace::default();
        for _ in 0..10 {
            step(&mut g2, &p, 1.3, 0.07, 1e-3, &mut ws).unwrap();
        }
        assert!(g2.u.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn odd_stays_odd() {
        let p = BookParams::reference();
        let mut g = odd_profile(&p);
        let mut ws = StepWorkspace::default();
        for k in 0..200 {
            step(&mut g, &p, 0.8, 0.01 * ((k % 7) as f64 - 3.0), 1e-3, &mut ws).unwrap();
        }
        let m = g.u.len() - 1;
        for i in 0..=m {
            assert_eq!(g.u[i], -g.u[m - i]);
        }
        assert_eq!(g.imbalance(p.iota), 0.0);
    }

    #[test]
    fn eigenmode_drift() {
        let p = BookParams::linear(0.3, 0.0, 1.0);
        let g = BookGrid::from_fn(&p, |x| heat_mode(&p, 3, x, 0.0)).unwrap_err();
        assert!(matches!(g, BookError::InvalidProfile(_)));
        let mut g = BookGrid::zeros(&p);
        for (u, x) in g.u.iter_mut().zip(&g.x) {
            *u = heat_mode(&p, 3, *x, 0.0);
        }
        let d = drift_terms(&g, &p).total();
        let w = 3.0 * std::f64::consts::PI / 2.0;
        for i in 1..g.u.len() - 1 {
            assert!((d[i] + 0.3 * w * w * g.u[i]).abs() < 1e-3);
        }
    }

    #[test]
    fn partial_cell_integral() {
        let mut p = BookParams::linear(0.1, 0.0, 1.0);
        p.iota = 0.1;
        let mut g = BookGrid::zeros(&p);
        for (u, x) in g.u.iter_mut().zip(&g.x) {
            *u = *x;
        }
        let (r, l) = g.side_integrals(&g.u, 0.1);
        assert!((r - 0.005).abs() < 1e-15);
        assert!((l + 0.005).abs() < 1e-15);
        let (r, _) = g.side_integrals(&g.u, 0.0123);
        assert!((r - 0.0123f64.powi(2) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn cfl_guard() {
        let mut p = BookParams::reference();
        p.beta = 100.0;
        assert!(matches!(p.check_step(1e-3), Err(BookError::CflViolation { .. })));
    }
}
