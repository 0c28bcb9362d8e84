use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::intensity::{AnyState, Excitation, IntensityMode};
use crate::hawkes_core::{classify_scaled, BaselineSpec, KernelSpec, Phi0Matrix, Regime};
use crate::rng::{self, SimRng};

pub const DEFAULT_EVENT_CAP: usize = 10_000_000;
pub const MAX_DIM: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("event cap of {cap} reached at t = {t}")]
    ExplosionGuard { cap: usize, t: f64 },
    #[error("supercritical excitation (spectral L1 = {spectral_l1})")]
    Supercritical { spectral_l1: f64 },
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("event stream does not match the model: {0}")]
    ParameterMismatch(String),
    #[error("grid reaches {grid_end} beyond the simulated horizon {horizon}")]
    GridBeyondHorizon { grid_end: f64, horizon: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t: f64,
    pub c: usize,
}

/// Timestamped, component-labelled events of one path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventStream {
    pub events: Vec<Event>,
    pub horizon: f64,
    pub dim: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intensity_trace: Option<Vec<(f64, Vec<f64>)>>,
}

impl EventStream {
    pub fn count(&self, c: usize) -> usize {
        self.events.iter().filter(|e| e.c == c).count()
    }

    pub fn counts_until(&self, t: f64) -> Vec<usize> {
        let mut n = vec![0; self.dim];
        for e in self.events.iter().take_while(|e| e.t <= t) {
            n[e.c] += 1;
        }
        n
    }
}

/// λᵢ(t) = μᵢ(t) + Σ_c matrix[i][c]·Σ_{e of c} φ(t − tₑ).
#[derive(Debug, Clone, PartialEq)]
pub struct HawkesModel {
    pub baseline: BaselineSpec,
    pub kernel: KernelSpec,
    pub matrix: Vec<Vec<f64>>,
    pub mode: IntensityMode,
    pub event_cap: usize,
}

impl HawkesModel {
    /// The 4-type model with kernel matrix a·φ·Φ₀.
    pub fn four_type(
        baseline: BaselineSpec,
        kernel: KernelSpec,
        phi0: &Phi0Matrix,
        a: f64,
    ) -> Result<Self, SimError> {
        if !(a > 0.0 && a <= 1.0) {
            return Err(SimError::InvalidModel(format!("a = {a} outside (0, 1]")));
        }
        let report = classify_scaled(phi0, &kernel, a);
        if report.regime == Regime::Unstable {
            return Err(SimError::Supercritical {
                spectral_l1: report.spectral_l1,
            });
        }
        let matrix = phi0
            .entries
            .iter()
            .map(|row| row.iter().map(|x| a * x).collect())
            .collect();
        Self::build(baseline, kernel, matrix)
    }

    /// One-dimensional model with kernel a·φ.
    pub fn scalar(baseline: BaselineSpec, kernel: KernelSpec, a: f64) -> Result<Self, SimError> {
        if !(a >= 0.0) {
            return Err(SimError::InvalidModel(format!("a = {a} must be nonnegative")));
        }
        if a * kernel.l1_norm > 1.0 + crate::hawkes_core::CRITICAL_TOL {
            return Err(SimError::Supercritical {
                spectral_l1: a * kernel.l1_norm,
            });
        }
        Self::build(baseline, kernel, vec![vec![a]])
    }

    /// Independent Poisson streams with the given baseline.
    pub fn poisson(baseline: BaselineSpec, kernel: KernelSpec) -> Result<Self, SimError> {
        let d = baseline.dim();
        Self::build(baseline, kernel, vec![vec![0.0; d]; d])
    }

    fn build(baseline: BaselineSpec, kernel: KernelSpec, matrix: Vec<Vec<f64>>) -> Result<Self, SimError> {
        baseline
            .validate()
            .map_err(|e| SimError::InvalidModel(e.to_string()))?;
        let d = baseline.dim();
        if d > MAX_DIM {
            return Err(SimError::InvalidModel(format!("at most {MAX_DIM} components")));
        }
        if matrix.len() != d || matrix.iter().any(|r| r.len() != d) {
            return Err(SimError::InvalidModel("matrix shape does not match baseline".into()));
        }
        Ok(Self {
            baseline,
            kernel,
            matrix,
            mode: IntensityMode::Auto,
            event_cap: DEFAULT_EVENT_CAP,
        })
    }

    pub fn with_mode(mut self, mode: IntensityMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_event_cap(mut self, cap: usize) -> Self {
        self.event_cap = cap;
        self
    }

    pub fn dim(&self) -> usize {
        self.baseline.dim()
    }

    pub fn new_state(&self) -> AnyState {
        AnyState::new(&self.kernel, self.dim(), self.mode)
    }

    /// λ(t) at the state's clock.
    pub fn intensity<S: Excitation>(&self, state: &S, out: &mut [f64]) {
        let t = state.time();
        let d = self.dim();
        let mut levels = [0.0; MAX_DIM];
        for (c, l) in levels.iter_mut().enumerate().take(d) {
            *l = state.level(c);
        }
        for (i, o) in out.iter_mut().enumerate() {
            let mut v = self.baseline.at(t, i);
            for (m, l) in self.matrix[i].iter().zip(&levels) {
                v += m * l;
            }
            *o = v;
        }
    }

    /// ∫₀ᵗ λ(s) ds at the state's clock.
    pub fn compensator<S: Excitation>(&self, state: &S, out: &mut [f64]) {
        let t = state.time();
        let d = self.dim();
        let mut cums = [0.0; MAX_DIM];
        for (c, l) in cums.iter_mut().enumerate().take(d) {
            *l = state.cumulative(c);
        }
        for (i, o) in out.iter_mut().enumerate() {
            let mut v = self.baseline.integral(0.0, t, i);
            for (m, l) in self.matrix[i].iter().zip(&cums) {
                v += m * l;
            }
            *o = v;
        }
    }

    fn bound<S: Excitation>(&self, state: &S, window: f64) -> f64 {
        let t = state.time();
        let d = self.dim();
        let mut fb = [0.0; MAX_DIM];
        for (c, l) in fb.iter_mut().enumerate().take(d) {
            *l = state.future_bound(c, window);
        }
        let mut total = 0.0;
        for i in 0..d {
            total += self.baseline.sup_after(t, i);
            for (m, l) in self.matrix[i].iter().zip(&fb) {
                total += m * l;
            }
        }
        total
    }
}

/// Ogata thinning on [0, horizon] with the stream (seed, "hawkes", 0).
pub fn simulate_hawkes(model: &HawkesModel, horizon: f64, seed: u64) -> Result<EventStream, SimError> {
    let mut rng = rng::stream(seed, "hawkes", 0);
    simulate_with_rng(model, horizon, seed, &mut rng)
}

/// Replicate `replicate` of a Monte Carlo batch keyed by `seed`.
pub fn simulate_replicate(
    model: &HawkesModel,
    horizon: f64,
    seed: u64,
    replicate: u64,
) -> Result<EventStream, SimError> {
    let mut rng = rng::stream(seed, "hawkes", replicate);
    simulate_with_rng(model, horizon, seed, &mut rng)
}

pub fn simulate_with_rng(
    model: &HawkesModel,
    horizon: f64,
    seed: u64,
    rng: &mut SimRng,
) -> Result<EventStream, SimError> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(SimError::InvalidModel(format!("horizon {horizon}")));
    }
    let d = model.dim();
    let mut state = model.new_state();
    let window = if model.kernel.is_nonincreasing() {
        f64::INFINITY
    } else {
        let spacing = match &model.kernel.shape {
            crate::hawkes_core::KernelShape::Tabulated { times, .. } => times
                .windows(2)
                .map(|w| w[1] - w[0])
                .fold(f64::INFINITY, f64::min),
            _ => 1.0,
        };
        spacing.max(1e-9)
    };
    let mut events = Vec::new();
    let mut lam = vec![0.0; d];
    let mut t = 0.0;
    loop {
        let bound = model.bound(&state, window);
        let e: f64 = Exp1.sample(rng);
        let step = e / bound;
        if step > window {
            t += window;
            if t > horizon {
                break;
            }
            state.advance(t);
            continue;
        }
        t += step;
        if t > horizon {
            break;
        }
        state.advance(t);
        model.intensity(&state, &mut lam);
        let total: f64 = lam.iter().sum();
        let u: f64 = rng.random::<f64>() * bound;
        if u < total {
            let mut acc = 0.0;
            let mut c = d - 1;
            for (i, l) in lam.iter().enumerate() {
                acc += l;
                if u < acc {
                    c = i;
                    break;
                }
            }
            state.push(c);
            events.push(Event { t, c });
            if events.len() >= model.event_cap {
                return Err(SimError::ExplosionGuard {
                    cap: model.event_cap,
                    t,
                });
            }
        }
    }
    Ok(EventStream {
        events,
        horizon,
        dim: d,
        seed,
        intensity_trace: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hawkes_core::{make_kernel, KernelShape};

    fn exp_kernel(l1: f64) -> KernelSpec {
        make_kernel(KernelShape::Exponential { scale: l1, rate: 1.0 }).unwrap()
    }

    #[test]
    fn deterministic_given_seed() {
        let m = HawkesModel::scalar(BaselineSpec::constant(vec![1.0]), exp_kernel(0.5), 1.0).unwrap();
        let a = simulate_hawkes(&m, 50.0, 11).unwrap();
        let b = simulate_hawkes(&m, 50.0, 11).unwrap();
        let c = simulate_hawkes(&m, 50.0, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.events, c.events);
        assert!(a.events.windows(2).all(|w| w[0].t < w[1].t));
        assert!(a.events.iter().all(|e| e.t <= 50.0));
    }

    #[test]
    fn explosion_guard() {
        let m = HawkesModel::scalar(BaselineSpec::constant(vec![5.0]), exp_kernel(1.0), 1.0)
            .unwrap()
            .with_event_cap(100);
        assert!(matches!(
            simulate_hawkes(&m, 1e6, 1),
            Err(SimError::ExplosionGuard { cap: 100, .. })
        ));
    }

    #[test]
    fn refuses_supercritical() {
        assert!(matches!(
            HawkesModel::scalar(BaselineSpec::constant(vec![1.0]), exp_kernel(1.5), 1.0),
            Err(SimError::Supercritical { .. })
        ));
    }
}
