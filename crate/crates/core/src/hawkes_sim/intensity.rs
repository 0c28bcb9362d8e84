//! Bookkeeping for the excitation part of the intensity.
//!
//! For each source component c the state tracks
//! level(c) = Σ_{events e of c} φ(t − tₑ) and its running time integral.
//! Exponential kernels are exact one-mode recursions. Power laws use a
//! sum of exponentials from the trapezoid rule applied to
//! (1+τ)^{-1-α} = Γ(1+α)⁻¹ ∫ e^{(1+α)x − eˣ(1+τ)} dx, which is accurate to
//! about 1e-10 relative out to the support cutoff. Other kernels fall back
//! to a direct sum over events inside the support.

use std::collections::VecDeque;

use crate::hawkes_core::{KernelShape, KernelSpec};
use crate::special::gamma;

pub trait Excitation {
    /// Current clock.
    fn time(&self) -> f64;
    /// Moves the clock forward to `t`.
    fn advance(&mut self, t: f64);
    /// Registers an event of `source` at the current clock.
    fn push(&mut self, source: usize);
    /// Σ φ(t − tₑ) over events of `source`.
    fn level(&self, source: usize) -> f64;
    /// ∫₀ᵗ level(source).
    fn cumulative(&self, source: usize) -> f64;
    /// Upper bound for level(source) on [t, t + window] absent new events.
    fn future_bound(&self, source: usize, window: f64) -> f64;
}

/// Sum-of-exponentials node set (weights, rates) for a kernel.
#[derive(Debug, Clone)]
pub struct ExpModes {
    pub weights: Vec<f64>,
    pub rates: Vec<f64>,
}

/// Trapezoid step in log-rate for the power-law expansion.
pub const SOE_STEP: f64 = 0.3;

impl ExpModes {
    pub fn for_kernel(k: &KernelSpec) -> Option<Self> {
        match k.shape {
            KernelShape::Exponential { scale, rate } => Some(Self {
                weights: vec![scale],
                rates: vec![rate],
            }),
            KernelShape::PowerLaw { scale, alpha } => {
                Some(Self::power_law(scale, alpha, k.support_cutoff, SOE_STEP))
            }
            KernelShape::Tabulated { .. } => None,
        }
    }

    pub fn power_law(scale: f64, alpha: f64, tau_max: f64, h: f64) -> Self {
        let x_max = 45f64.ln();
        let x_min = -(1.0 + tau_max).ln() - (1e11f64).ln() / (1.0 + alpha);
        let n = ((x_max - x_min) / h).ceil() as usize + 1;
        let norm = scale * h / gamma(1.0 + alpha);
        let mut weights = Vec::with_capacity(n);
        let mut rates = Vec::with_capacity(n);
        for m in 0..n {
            let x = x_max - m as f64 * h;
            let r = x.exp();
            weights.push(norm * ((1.0 + alpha) * x - r).exp());
            rates.push(r);
        }
        Self { weights, rates }
    }

    pub fn eval(&self, tau: f64) -> f64 {
        self.weights
            .iter()
            .zip(&self.rates)
            .map(|(w, r)| w * (-r * tau).exp())
            .sum()
    }

    pub fn len(&self) -> usize {
        self.rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }
}

/// Exponential-mode state: s[c][m] = Σ_{e of c} e^{−r_m (t − tₑ)}.
#[derive(Debug, Clone)]
pub struct ExpSumState {
    modes: ExpModes,
    t: f64,
    s: Vec<Vec<f64>>,
    cum: Vec<f64>,
    decay: Vec<f64>,
    gain: Vec<f64>,
}

impl ExpSumState {
    pub fn new(modes: ExpModes, dim: usize) -> Self {
        let m = modes.len();
        Self {
            modes,
            t: 0.0,
            s: vec![vec![0.0; m]; dim],
            cum: vec![0.0; dim],
            decay: vec![0.0; m],
            gain: vec![0.0; m],
        }
    }
}

impl Excitation for ExpSumState {
    fn time(&self) -> f64 {
        self.t
    }

    fn advance(&mut self, t: f64) {
        let dt = t - self.t;
        if dt <= 0.0 {
            return;
        }
        for (m, (&r, &w)) in self.modes.rates.iter().zip(&self.modes.weights).enumerate() {
            let e = -(-r * dt).exp_m1();
            self.decay[m] = 1.0 - e;
            self.gain[m] = w * e / r;
        }
        for (sc, cum) in self.s.iter_mut().zip(self.cum.iter_mut()) {
            let mut acc = 0.0;
            for ((s, d), g) in sc.iter_mut().zip(&self.decay).zip(&self.gain) {
                acc += g * *s;
                *s *= d;
            }
            *cum += acc;
        }
        self.t = t;
    }

    fn push(&mut self, source: usize) {
        for s in self.s[source].iter_mut() {
            *s += 1.0;
        }
    }

    fn level(&self, source: usize) -> f64 {
        self.s[source]
            .iter()
            .zip(&self.modes.weights)
            .map(|(s, w)| s * w)
            .sum()
    }

    fn cumulative(&self, source: usize) -> f64 {
        self.cum[source]
    }

    fn future_bound(&self, source: usize, _window: f64) -> f64 {
        self.level(source)
    }
}

/// Direct summation over events still inside the kernel support.
#[derive(Debug, Clone)]
pub struct DirectState {
    kernel: KernelSpec,
    t: f64,
    active: Vec<VecDeque<f64>>,
    expired_mass: Vec<f64>,
}

impl DirectState {
    pub fn new(kernel: KernelSpec, dim: usize) -> Self {
        Self {
            kernel,
            t: 0.0,
            active: vec![VecDeque::new(); dim],
            expired_mass: vec![0.0; dim],
        }
    }

    pub fn active_events(&self) -> usize {
        self.active.iter().map(|q| q.len()).sum()
    }
}

impl Excitation for DirectState {
    fn time(&self) -> f64 {
        self.t
    }

    fn advance(&mut self, t: f64) {
        if t <= self.t {
            return;
        }
        self.t = t;
        let cutoff = self.kernel.support_cutoff;
        let full = self.kernel.cumulative(cutoff);
        for (q, mass) in self.active.iter_mut().zip(self.expired_mass.iter_mut()) {
            while let Some(&te) = q.front() {
                if t - te > cutoff {
                    q.pop_front();
                    *mass += full;
                } else {
                    break;
                }
            }
        }
    }

    fn push(&mut self, source: usize) {
        self.active[source].push_back(self.t);
    }

    fn level(&self, source: usize) -> f64 {
        self.active[source]
            .iter()
            .map(|&te| self.kernel.eval(self.t - te))
            .sum()
    }

    fn cumulative(&self, source: usize) -> f64 {
        self.expired_mass[source]
            + self.active[source]
                .iter()
                .map(|&te| self.kernel.cumulative(self.t - te))
                .sum::<f64>()
    }

    fn future_bound(&self, source: usize, window: f64) -> f64 {
        if self.kernel.is_nonincreasing() {
            return self.level(source);
        }
        self.active[source]
            .iter()
            .map(|&te| self.kernel.sup_on(self.t - te, self.t - te + window))
            .sum()
    }
}

/// Chooses the exponential-mode state when the kernel admits one.
pub enum AnyState {
    ExpSum(ExpSumState),
    Direct(DirectState),
}

/// How the excitation is tracked during simulation and replay.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntensityMode {
    /// Exponential modes where available, else direct summation.
    #[default]
    Auto,
    Direct,
}

impl AnyState {
    pub fn new(kernel: &KernelSpec, dim: usize, mode: IntensityMode) -> Self {
        match (mode, ExpModes::for_kernel(kernel)) {
            (IntensityMode::Auto, Some(m)) => AnyState::ExpSum(ExpSumState::new(m, dim)),
            _ => AnyState::Direct(DirectState::new(kernel.clone(), dim)),
        }
    }
}

impl Excitation for AnyState {
    fn time(&self) -> f64 {
        match self {
            AnyState::ExpSum(s) => s.time(),
            AnyState::Direct(s) => s.time(),
        }
    }
    fn advance(&mut self, t: f64) {
        match self {
            AnyState::ExpSum(s) => s.advance(t),
            AnyState::Direct(s) => s.advance(t),
        }
    }
    fn push(&mut self, source: usize) {
        match self {
            AnyState::ExpSum(s) => s.push(source),
            AnyState::Direct(s) => s.push(source),
        }
    }
    fn level(&self, source: usize) -> f64 {
        match self {
            AnyState::ExpSum(s) => s.level(source),
            AnyState::Direct(s) => s.level(source),
        }
    }
    fn cumulative(&self, source: usize) -> f64 {
        match self {
            AnyState::ExpSum(s) => s.cumulative(source),
            AnyState::Direct(s) => s.cumulative(source),
        }
    }
    fn future_bound(&self, source: usize, window: f64) -> f64 {
        match self {
            AnyState::ExpSum(s) => s.future_bound(source, window),
            AnyState::Direct(s) => s.future_bound(source, window),
        }
    }
}
