use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::kernel::KernelSpec;
use super::phi0::Phi0Matrix;
use super::stability::{classify_scaled, regime_of, Regime};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeanError {
    #[error("kernel is in the unstable regime (spectral L1 = {spectral_l1}); the mean intensity diverges")]
    UnstableRegime { spectral_l1: f64 },
    #[error("invalid grid: horizon {horizon}, dt {dt}")]
    InvalidGrid { horizon: f64, dt: f64 },
    #[error("baseline: {0}")]
    Baseline(String),
}

/// Time profile shared by every baseline component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BaselineProfile {
    #[default]
    Constant,
    /// μᵢ(t) = μᵢ(∞) + (initialᵢ − μᵢ(∞))·e^{−rate·t}
    Relaxing { initial: Vec<f64>, rate: f64 },
}

/// Background intensity μ(t) with strictly positive components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineSpec {
    pub mu_infinity: Vec<f64>,
    #[serde(default)]
    pub profile: BaselineProfile,
}

impl BaselineSpec {
    pub fn constant(mu: Vec<f64>) -> Self {
        Self {
            mu_infinity: mu,
            profile: BaselineProfile::Constant,
        }
    }

    pub fn dim(&self) -> usize {
        self.mu_infinity.len()
    }

    pub fn validate(&self) -> Result<(), MeanError> {
        if self.mu_infinity.is_empty() {
            return Err(MeanError::Baseline("no components".into()));
        }
        if self.mu_infinity.iter().any(|m| !(m.is_finite() && *m > 0.0)) {
            return Err(MeanError::Baseline("limit values must be positive".into()));
        }
        if let BaselineProfile::Relaxing { initial, rate } = &self.profile {
            if initial.len() != self.dim() {
                return Err(MeanError::Baseline("initial/limit length mismatch".into()));
            }
            if initial.iter().any(|m| !(m.is_finite() && *m > 0.0)) {
                return Err(MeanError::Baseline("initial values must be positive".into()));
            }
            if !(rate.is_finite() && *rate > 0.0) {
                return Err(MeanError::Baseline("relaxation rate must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn at(&self, t: f64, i: usize) -> f64 {
        let m = self.mu_infinity[i];
        match &self.profile {
            BaselineProfile::Constant => m,
            BaselineProfile::Relaxing { initial, rate } => m + (initial[i] - m) * (-rate * t).exp(),
        }
    }

    /// ∫_{t0}^{t1} μᵢ.
    pub fn integral(&self, t0: f64, t1: f64, i: usize) -> f64 {
        let m = self.mu_infinity[i];
        match &self.profile {
            BaselineProfile::Constant => m * (t1 - t0),
            BaselineProfile::Relaxing { initial, rate } => {
                m * (t1 - t0)
                    + (initial[i] - m) / rate
                        * (-rate * t0).exp()
                        * -(-rate * (t1 - t0)).exp_m1()
            }
        }
    }

    /// sup_{s ≥ t} μᵢ(s); every profile is monotone.
    pub fn sup_after(&self, t: f64, i: usize) -> f64 {
        self.at(t, i).max(self.mu_infinity[i])
    }

    pub fn sup_norm(&self) -> f64 {
        let mut m = self.mu_infinity.iter().cloned().fold(0.0, f64::max);
        if let BaselineProfile::Relaxing { initial, .. } = &self.profile {
            m = initial.iter().cloned().fold(m, f64::max);
        }
        m
    }
}

/// E[λ(t)] on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanPath {
    pub dt: f64,
    pub times: Vec<f64>,
    /// `values[n][i]` = E[λᵢ(tₙ)]
    pub values: Vec<Vec<f64>>,
}

impl MeanPath {
    /// E[Nᵢ(tₙ)] by the trapezoid rule.
    pub fn cumulative(&self, i: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.values.len());
        let mut acc = 0.0;
        out.push(0.0);
        for w in self.values.windows(2) {
            acc += 0.5 * self.dt * (w[0][i] + w[1][i]);
            out.push(acc);
        }
        out
    }

    pub fn terminal(&self) -> &[f64] {
        self.values.last().expect("grid has at least one point")
    }
}

fn grid(horizon: f64, dt: f64) -> Result<Vec<f64>, MeanError> {
    if !(horizon > 0.0 && dt > 0.0 && horizon.is_finite() && dt <= horizon) {
        return Err(MeanError::InvalidGrid { horizon, dt });
    }
    let n = (horizon / dt).round() as usize;
    Ok((0..=n).map(|k| k as f64 * dt).collect())
}

/// Solves yₙ = mₙ + ρ Σ_{j<n} cells[n−1−j]·yⱼ (left-endpoint product rectangle).
pub fn renewal_scalar(m: &[f64], cells: &[f64], rho: f64) -> Vec<f64> {
    let mut y = Vec::with_capacity(m.len());
    for n in 0..m.len() {
        let mut acc = 0.0;
        for j in 0..n {
            acc += cells[n - 1 - j] * y[j];
        }
        y.push(m[n] + rho * acc);
    }
    y
}

/// Neumann series Σₖ (ρC)ᵏ m for the same discrete operator, truncated once
/// the tail bound ρ‖φ‖₁^{k+1}‖m‖∞/(1−ρ‖φ‖₁) drops below `tail_tol`.
/// Returns the sum and the number of terms used.
pub fn neumann_series_scalar(m: &[f64], cells: &[f64], rho: f64, l1: f64, tail_tol: f64) -> (Vec<f64>, usize) {
    let q = rho * l1;
    assert!(q < 1.0, "Neumann series requires a contraction");
    let sup = m.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let mut term = m.to_vec();
    let mut sum = m.to_vec();
    let mut k = 0;
    while q.powi(k as i32 + 1) * sup / (1.0 - q) > tail_tol {
        let mut next = vec![0.0; m.len()];
        for n in 1..m.len() {
            let mut acc = 0.0;
            for j in 0..n {
                acc += cells[n - 1 - j] * term[j];
            }
            next[n] = rho * acc;
        }
        for (s, t) in sum.iter_mut().zip(&next) {
            *s += t;
        }
        term = next;
        k += 1;
    }
    (sum, k + 1)
}

/// E[λ(t)] for the 4-type process with kernel matrix φ·Φ₀.
pub fn mean_intensity(
    mu: &BaselineSpec,
    k: &KernelSpec,
    phi0: &Phi0Matrix,
    horizon: f64,
    dt: f64,
) -> Result<MeanPath, MeanError> {
    mean_intensity_scaled(mu, k, phi0, 1.0, horizon, dt)
}

/// E[λ(t)] for the kernel matrix a·φ·Φ₀, solved per eigen-coordinate.
pub fn mean_intensity_scaled(
    mu: &BaselineSpec,
    k: &KernelSpec,
    phi0: &Phi0Matrix,
    a: f64,
    horizon: f64,
    dt: f64,
) -> Result<MeanPath, MeanError> {
    mu.validate()?;
    if mu.dim() != 4 {
        return Err(MeanError::Baseline(format!("expected 4 components, got {}", mu.dim())));
    }
    let report = classify_scaled(phi0, k, a);
    if report.regime == Regime::Unstable {
        return Err(MeanError::UnstableRegime {
            spectral_l1: report.spectral_l1,
        });
    }
    let times = grid(horizon, dt)?;
    let cells = k.cell_integrals(dt, times.len());
    let mut coords = Vec::with_capacity(4);
    for i in 0..4 {
        let m: Vec<f64> = times
            .iter()
            .map(|&t| phi0.project(&[mu.at(t, 0), mu.at(t, 1), mu.at(t, 2), mu.at(t, 3)])[i])
            .collect();
        coords.push(renewal_scalar(&m, &cells, a * phi0.lambda(i)));
    }
    let values = (0..times.len())
        .map(|n| phi0.unproject(&[coords[0][n], coords[1][n], coords[2][n], coords[3][n]]).to_vec())
        .collect();
    Ok(MeanPath { dt, times, values })
}

/// One-dimensional reduction: E[λ(t)] = μ(t) + a∫φ(t−s)E[λ(s)]ds.
pub fn mean_intensity_scalar(
    mu: &BaselineSpec,
    k: &KernelSpec,
    a: f64,
    horizon: f64,
    dt: f64,
) -> Result<MeanPath, MeanError> {
    mu.validate()?;
    if mu.dim() != 1 {
        return Err(MeanError::Baseline(format!("expected 1 component, got {}", mu.dim())));
    }
    let spectral = a * k.l1_norm;
    if regime_of(spectral) == Regime::Unstable {
        return Err(MeanError::UnstableRegime { spectral_l1: spectral });
    }
    let times = grid(horizon, dt)?;
    let cells = k.cell_integrals(dt, times.len());
    let m: Vec<f64> = times.iter().map(|&t| mu.at(t, 0)).collect();
    let y = renewal_scalar(&m, &cells, a);
    Ok(MeanPath {
        dt,
        times,
        values: y.into_iter().map(|v| vec![v]).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hawkes_core::{build_phi0, make_kernel, BetaParams, KernelShape};

    fn exp_kernel(l1: f64) -> KernelSpec {
        make_kernel(KernelShape::Exponential {
            scale: l1,
            rate: 1.0,
        })
        .unwrap()
    }

    #[test]
    fn scalar_fixed_point() {
        let mu = BaselineSpec::constant(vec![1.0]);
        let p = mean_intensity_scalar(&mu, &exp_kernel(0.5), 1.0, 50.0, 0.01).unwrap();
        let last = p.terminal()[0];
        assert!((last - 2.0).abs() / 2.0 < 5e-3, "{last}");
    }

    #[test]
    fn poisson_degeneration() {
        let mu = BaselineSpec {
            mu_infinity: vec![1.0],
            profile: BaselineProfile::Relaxing {
                initial: vec![3.0],
                rate: 0.5,
            },
        };
        let p = mean_intensity_scalar(&mu, &exp_kernel(0.5), 0.0, 10.0, 0.1).unwrap();
        for (t, v) in p.times.iter().zip(&p.values) {
            assert_eq!(v[0], mu.at(*t, 0));
        }
    }

    #[test]
    fn four_type_fixed_point() {
        let phi0 = build_phi0(&BetaParams::new(0.6, 0.3, 0.5).unwrap());
        let k = exp_kernel(0.5);
        let mu = BaselineSpec::constant(vec![1.0; 4]);
        let p = mean_intensity(&mu, &k, &phi0, 50.0, 0.01).unwrap();
        let y = phi0.project(&p.terminal().try_into().unwrap());
        let m = phi0.project(&[1.0; 4]);
        for i in 0..4 {
            let target = m[i] / (1.0 - phi0.lambda(i) * 0.5);
            if target.abs() > 1e-12 {
                assert!(((y[i] - target) / target).abs() < 5e-3, "i={i}");
            } else {
                assert!(y[i].abs() < 1e-10);
            }
        }
    }

    #[test]
    fn refuses_unstable() {
        let phi0 = build_phi0(&BetaParams::new(0.6, 0.3, 0.5).unwrap());
        let mu = BaselineSpec::constant(vec![1.0; 4]);
        assert!(matches!(
            mean_intensity(&mu, &exp_kernel(1.0), &phi0, 10.0, 0.1),
            Err(MeanError::UnstableRegime { .. })
        ));
    }
}
