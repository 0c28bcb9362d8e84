//! Event-level simulation of the 4-type Hawkes order flow by thinning,
//! compensated martingales, and the nearly-unstable scaling diagnostics.

mod intensity;
pub mod io;
mod martingale;
mod scaling;
mod thinning;

pub use intensity::{
    AnyState, DirectState, ExpModes, ExpSumState, Excitation, IntensityMode, SOE_STEP,
};
pub use martingale::{compensated_martingale, replay, GridTrace, MartingalePath};
pub use scaling::{
    auxiliary_paths, limit_volume_factor, make_scaling, summarize, AuxiliaryPaths,
    ScalingDiagnostics, ScalingError, ScalingParams, B_FLOOR,
};
pub use thinning::{
    simulate_hawkes, simulate_replicate, simulate_with_rng, Event, EventStream, HawkesModel,
    SimError, DEFAULT_EVENT_CAP, MAX_DIM,
};
