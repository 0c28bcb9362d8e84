//! Deterministic structure of the order-flow model: the interaction ratios,
//! the Φ₀ matrix and its eigensystem, excitation kernels, stability and the
//! mean-intensity renewal equation.

mod beta;
mod kernel;
mod mean;
mod phi0;
mod stability;

pub use beta::{validate_betas, BetaError, BetaParams};
pub use kernel::{
    convolution_power_grid, convolution_power_l1, critical_scale, make_kernel, KernelError,
    KernelFamily, KernelShape, KernelSpec, CUTOFF_LEVEL,
};
pub use mean::{
    mean_intensity, mean_intensity_scalar, mean_intensity_scaled, neumann_series_scalar,
    renewal_scalar, BaselineProfile, BaselineSpec, MeanError, MeanPath,
};
pub use phi0::{build_phi0, Phi0Matrix, COMPONENTS};
pub use stability::{classify_scaled, classify_stability, regime_of, Regime, StabilityReport, CRITICAL_TOL};
