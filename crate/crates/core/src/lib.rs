//! Near-critical Hawkes order flow, its rough-volatility scaling limit and
//! the order-book density SPDE it drives.

pub mod analytics;
pub mod hawkes_core;
pub mod hawkes_sim;
pub mod lob_spde;
pub mod mittag_leffler;
pub mod price_dynamics;
pub mod quad;
pub mod rng;
pub mod rough_volterra;
pub mod special;
