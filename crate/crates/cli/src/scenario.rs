//! Scenario files: one JSON document describing every pipeline stage.
//!
//! Unknown fields are rejected everywhere. Optional Volterra constants are
//! derived from the betas and the kernel when left out.

use std::path::Path;

use roughbook::hawkes_core::{
    build_phi0, critical_scale, make_kernel, BetaParams, KernelShape, KernelSpec, Phi0Matrix,
};
use roughbook::hawkes_sim::DEFAULT_EVENT_CAP;
use roughbook::lob_spde::{heat_mode, BookGrid, BookParams};
use roughbook::price_dynamics::{CouplingOptions, PriceParams};
use roughbook::rough_volterra::{VolterraForm, VolterraParams};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_betas")]
    pub betas: BetaParams,
    /// Defaults to the critical power-law kernel at `scaling.alpha`.
    #[serde(default)]
    pub kernel: Option<KernelShape>,
    #[serde(default)]
    pub hawkes: HawkesSection,
    #[serde(default)]
    pub scaling: ScalingSection,
    #[serde(default)]
    pub volterra: VolterraSection,
    #[serde(default)]
    pub book: BookSection,
    #[serde(default)]
    pub price: PriceSection,
    #[serde(default)]
    pub run: RunSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HawkesSection {
    pub mu: [f64; 4],
    /// Kernel matrix a·φ·Φ₀
    pub a: f64,
    pub horizon: f64,
    pub grid_step: f64,
    pub event_cap: usize,
}

impl Default for HawkesSection {
    fn default() -> Self {
        Self {
            mu: [1.0; 4],
            a: 0.9,
            horizon: 100.0,
            grid_step: 1.0,
            event_cap: DEFAULT_EVENT_CAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScalingSection {
    pub t_values: Vec<f64>,
    pub alpha: f64,
    pub a_bar: f64,
    pub mu_bar: f64,
    pub macro_horizon: f64,
    pub macro_step: f64,
    pub paths: usize,
    /// Upper bound on the expected number of simulated events over the study.
    pub event_budget: f64,
}

impl Default for ScalingSection {
    fn default() -> Self {
        Self {
            t_values: vec![1e2, 1e3, 1e4],
            alpha: 0.7,
            a_bar: 4.0,
            mu_bar: 1.0,
            macro_horizon: 1.0,
            macro_step: 0.01,
            paths: 100,
            event_budget: 1e8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VolterraSection {
    pub alpha: Option<f64>,
    pub nu_bar: Option<f64>,
    pub kappa_bar: Option<f64>,
    pub theta: Option<f64>,
    pub horizon: f64,
    pub n_steps: usize,
    pub form: VolterraForm,
}

impl Default for VolterraSection {
    fn default() -> Self {
        Self {
            alpha: None,
            nu_bar: None,
            kappa_bar: None,
            theta: None,
            horizon: 1.0,
            n_steps: 1024,
            form: VolterraForm::FractionalKernel,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialProfile {
    /// 4x(L − |x|)(1 + 0.2x/L)/L²
    Reference,
    Zero,
    /// amplitude·4x(L − |x|)/L²
    Antisymmetric { amplitude: f64 },
    /// −sin(kπ(x + L)/2L), the k-th sine mode with the book's sign convention
    HeatMode { mode: usize },
    /// Linear interpolation through (x, u) knots.
    Points { points: Vec<(f64, f64)> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BookSection {
    pub params: BookParams,
    pub initial: InitialProfile,
    pub dt: f64,
    pub horizon: f64,
    pub stride: usize,
    /// Drive the book with a constant variance instead of a Volterra path.
    pub frozen_y: Option<f64>,
}

impl Default for BookSection {
    fn default() -> Self {
        Self {
            params: BookParams::reference(),
            initial: InitialProfile::Reference,
            dt: 1e-3,
            horizon: 1.0,
            stride: 10,
            frozen_y: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PriceSection {
    pub params: PriceParams,
    pub coupling: CouplingOptions,
}

impl Default for PriceSection {
    fn default() -> Self {
        Self {
            params: PriceParams {
                delta: 0.01,
                c_a: 1.0,
                c_b: 1.5,
                s0: 100.0,
            },
            coupling: CouplingOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub replicates: usize,
    /// Worker threads; 0 uses all cores.
    pub threads: usize,
    pub output_dir: Option<String>,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            replicates: 1,
            threads: 1,
            output_dir: None,
        }
    }
}

fn default_betas() -> BetaParams {
    BetaParams::new(0.6, 0.3, 0.5).expect("admissible defaults")
}

/// Derived objects shared by the commands.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub kernel: KernelSpec,
    pub phi0: Phi0Matrix,
    pub volterra: VolterraParams,
}

impl Scenario {
    pub fn minimal(name: &str) -> Self {
        Self {
            name: name.to_string(),
            seed: 0,
            betas: default_betas(),
            kernel: None,
            hawkes: HawkesSection::default(),
            scaling: ScalingSection::default(),
            volterra: VolterraSection::default(),
            book: BookSection::default(),
            price: PriceSection::default(),
            run: RunSection::default(),
        }
    }

    /// Parses a scenario, reporting the line, column and field of the first error.
    pub fn from_json(text: &str, origin: &Path) -> Result<Self, CliError> {
        let mut de = serde_json::Deserializer::from_str(text);
        let s: Scenario = serde_path_to_error::deserialize(&mut de).map_err(|e| {
            let field = e.path().to_string();
            let inner = e.into_inner();
            CliError::ConfigAt {
                path: origin.to_path_buf(),
                line: inner.line(),
                column: inner.column(),
                field,
                message: inner.to_string(),
            }
        })?;
        de.end().map_err(|e| CliError::ConfigAt {
            path: origin.to_path_buf(),
            line: e.line(),
            column: e.column(),
            field: ".".into(),
            message: e.to_string(),
        })?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text, path)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn kernel_spec(&self) -> Result<KernelSpec, CliError> {
        let k = match &self.kernel {
            Some(shape) => make_kernel(shape.clone()),
            None => critical_scale(&self.betas, self.scaling.alpha),
        };
        k.map_err(|e| CliError::Config(format!("kernel: {e}")))
    }

    /// Volterra constants, derived from the order-flow model where not set.
    pub fn volterra_params(&self, kernel: &KernelSpec) -> Result<VolterraParams, CliError> {
        let v = &self.volterra;
        let bad = |e: roughbook::rough_volterra::VolterraError| CliError::Config(format!("volterra: {e}"));
        let mut p = match (v.alpha, v.nu_bar, v.kappa_bar, v.theta) {
            (Some(a), Some(n), Some(k), Some(t)) => VolterraParams::new(a, n, k, t, v.horizon, v.n_steps).map_err(bad)?,
            _ => {
                if kernel.alpha.is_none() {
                    return Err(CliError::Config(
                        "volterra: alpha, nu_bar, kappa_bar and theta must all be set unless the kernel is power-law".into(),
                    ));
                }
                VolterraParams::from_model(
                    &self.betas,
                    kernel,
                    self.scaling.a_bar,
                    self.scaling.mu_bar,
                    v.horizon,
                    v.n_steps,
                )
                .map_err(bad)?
            }
        };
        if let Some(a) = v.alpha {
            p.alpha = a;
        }
        if let Some(n) = v.nu_bar {
            p.nu_bar = n;
        }
        if let Some(k) = v.kappa_bar {
            p.kappa_bar = k;
        }
        if let Some(t) = v.theta {
            p.theta = t;
        }
        p.validate().map_err(bad)?;
        Ok(p)
    }

    pub fn initial_book(&self) -> Result<BookGrid, CliError> {
        let p = &self.book.params;
        let l = p.half_width;
        let g = match &self.book.initial {
            InitialProfile::Reference => Ok(BookGrid::reference_profile(p)),
            InitialProfile::Zero => Ok(BookGrid::zeros(p)),
            InitialProfile::Antisymmetric { amplitude } => {
                BookGrid::from_fn(p, |x| amplitude * 4.0 * x * (l - x.abs()) / (l * l))
            }
            InitialProfile::HeatMode { mode } => BookGrid::from_fn(p, |x| -heat_mode(p, *mode, x, 0.0)),
            InitialProfile::Points { points } => BookGrid::from_points(p, points),
        };
        g.map_err(|e| CliError::Config(format!("book.initial: {e}")))
    }

    /// Checks cross-section consistency and builds the derived objects.
    pub fn resolve(&self) -> Result<Resolved, CliError> {
        let kernel = self.kernel_spec()?;
        let phi0 = build_phi0(&self.betas);
        let volterra = self.volterra_params(&kernel)?;
        let h = &self.hawkes;
        for (name, v) in [("hawkes.horizon", h.horizon), ("hawkes.grid_step", h.grid_step)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CliError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if h.mu.iter().any(|m| !(*m >= 0.0 && m.is_finite())) {
            return Err(CliError::Config("hawkes.mu must be finite and nonnegative".into()));
        }
        let sc = &self.scaling;
        if sc.t_values.is_empty() || sc.t_values.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(CliError::Config("scaling.t_values must be nonempty and ascending".into()));
        }
        if sc.paths == 0 {
            return Err(CliError::Config("scaling.paths must be positive".into()));
        }
        let b = &self.book;
        b.params
            .validate()
            .map_err(|e| CliError::Config(format!("book.params: {e}")))?;
        if !(b.dt > 0.0 && b.horizon > 0.0) {
            return Err(CliError::Config("book.dt and book.horizon must be positive".into()));
        }
        b.params
            .check_step(b.horizon / roughbook::lob_spde::step_count(b.horizon, b.dt) as f64)
            .map_err(|e| CliError::Config(format!("book.dt: {e}")))?;
        if b.frozen_y.is_none() && volterra.horizon < b.horizon {
            return Err(CliError::Config(format!(
                "volterra.horizon {} is shorter than book.horizon {}",
                volterra.horizon, b.horizon
            )));
        }
        if let Some(y) = b.frozen_y {
            if !(y >= 0.0 && y.is_finite()) {
                return Err(CliError::Config(format!("book.frozen_y must be nonnegative, got {y}")));
            }
        }
        self.initial_book()?;
        self.price
            .params
            .validate()
            .map_err(|e| CliError::Config(format!("price.params: {e}")))?;
        if self.run.replicates == 0 {
            return Err(CliError::Config("run.replicates must be positive".into()));
        }
        Ok(Resolved { kernel, phi0, volterra })
    }

    /// Replicate-level seed for stages that take a plain seed.
    pub fn replicate_seed(&self, replicate: u64) -> u64 {
        roughbook::rng::derive_seed(self.seed, "replicate", replicate)
    }
}

impl ScalingSection {
    pub fn kernel_for(&self, betas: &BetaParams) -> Result<KernelSpec, CliError> {
        critical_scale(betas, self.alpha).map_err(|e| CliError::Config(format!("scaling.alpha: {e}")))
    }
}
