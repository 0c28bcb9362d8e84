//! Shared fixtures for the criterion benches.

use roughbook::hawkes_core::{build_phi0, critical_scale, BaselineSpec, BetaParams};
use roughbook::hawkes_sim::HawkesModel;
use roughbook::lob_spde::{BookGrid, BookParams};
use roughbook::rough_volterra::VolterraParams;

/// Four-type model with the critical power-law kernel at spectral radius `a`.
pub fn four_type_model(a: f64) -> HawkesModel {
    let b = BetaParams::new(0.6, 0.3, 0.5).expect("valid betas");
    let k = critical_scale(&b, 0.7).expect("valid kernel");
    HawkesModel::four_type(BaselineSpec::constant(vec![1.0; 4]), k, &build_phi0(&b), a).expect("valid model")
}

/// Rough variance parameters used by the reference scenario.
pub fn volterra_params(n_steps: usize) -> VolterraParams {
    VolterraParams::new(0.7, 0.334, 1.0, 1.6, 1.0, n_steps).expect("valid parameters")
}

/// Reference book parameters with the reference initial profile.
pub fn reference_book() -> (BookParams, BookGrid) {
    let p = BookParams::reference();
    let g = BookGrid::reference_profile(&p);
    (p, g)
}
