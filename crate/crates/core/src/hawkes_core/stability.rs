use serde::{Deserialize, Serialize};

use super::kernel::KernelSpec;
use super::phi0::Phi0Matrix;

pub const CRITICAL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Stable,
    Critical,
    Unstable,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub regime: Regime,
    pub spectral_l1: f64,
    pub per_eigenvalue_l1: [f64; 4],
}

pub fn regime_of(spectral_l1: f64) -> Regime {
    if (spectral_l1 - 1.0).abs() <= CRITICAL_TOL {
        Regime::Critical
    } else if spectral_l1 < 1.0 {
        Regime::Stable
    } else {
        Regime::Unstable
    }
}

pub fn classify_stability(phi0: &Phi0Matrix, k: &KernelSpec) -> StabilityReport {
    classify_scaled(phi0, k, 1.0)
}

/// Stability of the kernel matrix a·φ·Φ₀.
pub fn classify_scaled(phi0: &Phi0Matrix, k: &KernelSpec, a: f64) -> StabilityReport {
    let per = phi0.eigenvalues.map(|l| a * l * k.l1_norm);
    StabilityReport {
        regime: regime_of(per[0]),
        spectral_l1: per[0],
        per_eigenvalue_l1: per,
    }
}
