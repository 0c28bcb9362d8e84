//! The scaling-limit variance process Y(t) in its two equivalent forms
//!
//!   Y(t) = (ν̄/Γ(α)) ∫(t−s)^{α−1}(θ − Y)ds + (κ̄ν̄/Γ(α)) ∫(t−s)^{α−1}√Y dB
//!   Y(t) = θ ∫₀ᵗ f^{α,ν̄} + κ̄ ∫ f^{α,ν̄}(t−s)√Y dB
//!
//! discretised by an explicit convolution scheme with exact kernel cell
//! weights. The drift uses Y as computed; only the square root sees
//! max(Y, 0).

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytics::{variogram_hurst, HurstError};
use crate::hawkes_core::{build_phi0, BetaParams, KernelSpec};
use crate::mittag_leffler::{kappa_bar, ml_density_cdf, nu_bar, MlError};
use crate::rng;
use crate::special::gamma;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VolterraError {
    #[error("volterra parameter {name} invalid: {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("step too coarse: Δt^α·ν̄/Γ(α+1) = {ratio} exceeds 0.5")]
    StepTooCoarse { ratio: f64 },
    #[error("noise has {got} increments, expected {expected}")]
    NoiseLength { got: usize, expected: usize },
    #[error("path has {len} points; at least {min} required")]
    PathTooShort { len: usize, min: usize },
    #[error(transparent)]
    MittagLeffler(#[from] MlError),
    #[error(transparent)]
    Hurst(#[from] HurstError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VolterraParams {
    pub alpha: f64,
    pub nu_bar: f64,
    pub kappa_bar: f64,
    pub theta: f64,
    pub horizon: f64,
    pub n_steps: usize,
}

impl VolterraParams {
    pub fn new(
        alpha: f64,
        nu_bar: f64,
        kappa_bar: f64,
        theta: f64,
        horizon: f64,
        n_steps: usize,
    ) -> Result<Self, VolterraError> {
        let p = Self {
            alpha,
            nu_bar,
            kappa_bar,
            theta,
            horizon,
            n_steps,
        };
        p.validate()?;
        Ok(p)
    }

    /// Constants from the order-flow model: θ = 𝟙ᵀv₁, ν̄ = ā/(λ₁κΓ(1−α)),
    /// κ̄ = √(𝟙ᵀv₁²/𝟙ᵀv₁)/√(āμ̄).
    pub fn from_model(
        b: &BetaParams,
        k: &KernelSpec,
        a_bar: f64,
        mu_bar: f64,
        horizon: f64,
        n_steps: usize,
    ) -> Result<Self, VolterraError> {
        let phi0 = build_phi0(b);
        let alpha = k.alpha.ok_or(VolterraError::InvalidParameter {
            name: "kernel tail exponent",
            value: f64::NAN,
        })?;
        let kappa = k.kappa.ok_or(VolterraError::InvalidParameter {
            name: "kernel tail constant",
            value: f64::NAN,
        })?;
        let nu = nu_bar(a_bar, phi0.lambda(0), kappa, alpha)?;
        let kb = kappa_bar(a_bar, mu_bar, phi0.v(0))?;
        Self::new(alpha, nu, kb, phi0.ones_dot_v1(), horizon, n_steps)
    }

    pub fn validate(&self) -> Result<(), VolterraError> {
        if !(self.alpha > 0.5 && self.alpha <= 1.0) {
            return Err(VolterraError::InvalidParameter {
                name: "alpha",
                value: self.alpha,
            });
        }
        for (name, v) in [("nu_bar", self.nu_bar), ("horizon", self.horizon)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(VolterraError::InvalidParameter { name, value: v });
            }
        }
        for (name, v) in [("kappa_bar", self.kappa_bar), ("theta", self.theta)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(VolterraError::InvalidParameter { name, value: v });
            }
        }
        if self.n_steps == 0 {
            return Err(VolterraError::InvalidParameter {
                name: "n_steps",
                value: 0.0,
            });
        }
        let ratio = self.dt().powf(self.alpha) * self.nu_bar / gamma(self.alpha + 1.0);
        if ratio > 0.5 {
            return Err(VolterraError::StepTooCoarse { ratio });
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.n_steps as f64
    }

    pub fn times(&self) -> Vec<f64> {
        let dt = self.dt();
        (0..=self.n_steps).map(|k| k as f64 * dt).collect()
    }

    pub fn with_steps(&self, n_steps: usize) -> Self {
        Self { n_steps, ..*self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VolterraForm {
    MittagLeffler,
    FractionalKernel,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VolterraPath {
    pub params: VolterraParams,
    pub form: VolterraForm,
    pub times: Vec<f64>,
    /// max(Y, 0) on the grid
    pub y: Vec<f64>,
    /// scheme values before truncation
    pub y_raw: Vec<f64>,
    /// Brownian increments ΔBₖ over [tₖ, tₖ₊₁]
    pub noise: Vec<f64>,
    pub clamp_count: usize,
}

impl VolterraPath {
    /// Left-continuous piecewise-constant value at time t.
    pub fn value_at(&self, t: f64) -> f64 {
        let dt = self.params.dt();
        let k = ((t / dt + 1e-9).floor() as usize).min(self.y.len() - 1);
        self.y[k]
    }

    pub fn clamp_fraction(&self) -> f64 {
        self.clamp_count as f64 / self.params.n_steps as f64
    }
}

/// Precomputed convolution weights for one (params, form) pair.
#[derive(Debug, Clone)]
pub struct VolterraSolver {
    params: VolterraParams,
    form: VolterraForm,
    /// convolution weight for lag k (cell integral of the kernel)
    weights: Vec<f64>,
    /// deterministic forcing at each grid time (ML form only)
    forcing: Vec<f64>,
}

impl VolterraSolver {
    pub fn new(params: VolterraParams, form: VolterraForm) -> Result<Self, VolterraError> {
        params.validate()?;
        let n = params.n_steps;
        let dt = params.dt();
        let a = params.alpha;
        let (weights, forcing) = match form {
            VolterraForm::FractionalKernel => {
                let c = dt.powf(a) / gamma(a + 1.0);
                let w = (0..n)
                    .map(|k| c * (((k + 1) as f64).powf(a) - (k as f64).powf(a)))
                    .collect();
                (w, vec![0.0; n + 1])
            }
            VolterraForm::MittagLeffler => {
                let mut cdf = Vec::with_capacity(n + 1);
                for k in 0..=n {
                    cdf.push(ml_density_cdf(a, params.nu_bar, k as f64 * dt)?);
                }
                let w = (0..n).map(|k| cdf[k + 1] - cdf[k]).collect();
                let forcing = cdf.iter().map(|f| params.theta * f).collect();
                (w, forcing)
            }
        };
        Ok(Self {
            params,
            form,
            weights,
            forcing,
        })
    }

    pub fn params(&self) -> &VolterraParams {
        &self.params
    }

    /// Runs the scheme on the given Brownian increments (length n_steps).
    pub fn solve(&self, noise: &[f64]) -> Result<VolterraPath, VolterraError> {
        let p = &self.params;
        let n = p.n_steps;
        if noise.len() != n {
            return Err(VolterraError::NoiseLength {
                got: noise.len(),
                expected: n,
            });
        }
        let dt = p.dt();
        let mut raw = Vec::with_capacity(n + 1);
        let mut g = Vec::with_capacity(n);
        let mut clamps = 0;
        raw.push(0.0);
        for step in 0..=n {
            if step > 0 {
                let mut acc = 0.0;
                let w = &self.weights[..step];
                for (wk, gj) in w.iter().rev().zip(&g) {
                    acc += wk * gj;
                }
                raw.push(self.forcing[step] + acc);
            }
            if step == n {
                break;
            }
            let y = raw[step];
            if y < 0.0 {
                clamps += 1;
            }
            let root = y.max(0.0).sqrt();
            let gj = match self.form {
                VolterraForm::FractionalKernel => {
                    p.nu_bar * (p.theta - y) + p.kappa_bar * p.nu_bar * root * noise[step] / dt
                }
                VolterraForm::MittagLeffler => p.kappa_bar * root * noise[step] / dt,
            };
            g.push(gj);
        }
        Ok(VolterraPath {
            params: *p,
            form: self.form,
            times: p.times(),
            y: raw.iter().map(|v| v.max(0.0)).collect(),
            y_raw: raw,
            noise: noise.to_vec(),
            clamp_count: clamps,
        })
    }
}

/// i.i.d. N(0, dt) increments from the stream (seed, "volterra", 0).
pub fn brownian_increments(seed: u64, n: usize, dt: f64) -> Vec<f64> {
    brownian_increments_replicate(seed, 0, n, dt)
}

pub fn brownian_increments_replicate(seed: u64, replicate: u64, n: usize, dt: f64) -> Vec<f64> {
    let mut r = rng::stream(seed, "volterra", replicate);
    let s = dt.sqrt();
    (0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut r);
            s * z
        })
        .collect()
}

/// Sums consecutive blocks of `factor` increments.
pub fn coarsen_increments(fine: &[f64], factor: usize) -> Vec<f64> {
    fine.chunks(factor).map(|c| c.iter().sum()).collect()
}

pub fn solve_y_fractional(p: &VolterraParams, seed: u64) -> Result<VolterraPath, VolterraError> {
    let noise = brownian_increments(seed, p.n_steps, p.dt());
    VolterraSolver::new(*p, VolterraForm::FractionalKernel)?.solve(&noise)
}

pub fn solve_y_mittag_leffler(p: &VolterraParams, seed: u64) -> Result<VolterraPath, VolterraError> {
    let noise = brownian_increments(seed, p.n_steps, p.dt());
    VolterraSolver::new(*p, VolterraForm::MittagLeffler)?.solve(&noise)
}

/// E[Y(t)]: the fractional scheme with the martingale term removed.
pub fn mean_of_y(p: &VolterraParams) -> Result<Vec<f64>, VolterraError> {
    let det = VolterraParams {
        kappa_bar: 0.0,
        ..*p
    };
    let solver = VolterraSolver::new(det, VolterraForm::FractionalKernel)?;
    Ok(solver.solve(&vec![0.0; p.n_steps])?.y_raw)
}

/// θ(1 − E_{α,1}(−ν̄tᵅ)), the exact deterministic solution.
pub fn relaxation_oracle(p: &VolterraParams, t: f64) -> Result<f64, VolterraError> {
    Ok(p.theta * ml_density_cdf(p.alpha, p.nu_bar, t)?)
}

/// Max pathwise gap between the two forms under shared noise, at each
/// resolution in `levels` (all dividing the finest one).
pub fn form_discrepancy(
    p: &VolterraParams,
    seed: u64,
    replicate: u64,
    levels: &[usize],
) -> Result<Vec<(usize, f64)>, VolterraError> {
    let finest = *levels.iter().max().expect("at least one level");
    let fine_dt = p.horizon / finest as f64;
    let fine = brownian_increments_replicate(seed, replicate, finest, fine_dt);
    let mut out = Vec::new();
    for &n in levels {
        let q = p.with_steps(n);
        let noise = coarsen_increments(&fine, finest / n);
        let a = VolterraSolver::new(q, VolterraForm::FractionalKernel)?.solve(&noise)?;
        let b = VolterraSolver::new(q, VolterraForm::MittagLeffler)?.solve(&noise)?;
        let gap = a
            .y_raw
            .iter()
            .zip(&b.y_raw)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        out.push((n, gap));
    }
    Ok(out)
}

/// Variogram Hurst estimate of Y over lags 1..=32.
pub fn hurst_of_path(vp: &VolterraPath) -> Result<f64, VolterraError> {
    if vp.y.len() < 512 {
        return Err(VolterraError::PathTooShort {
            len: vp.y.len(),
            min: 512,
        });
    }
    Ok(variogram_hurst(&vp.y, 32)?.hurst)
}
