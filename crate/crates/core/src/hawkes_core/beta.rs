use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BetaError {
    #[error("β values must be finite, got ({0}, {1}, {2})")]
    NonFinite(f64, f64, f64),
    #[error("ordering 0 < β2 < β1 < 1 violated: β1 = {beta1}, β2 = {beta2}")]
    OrderingViolation { beta1: f64, beta2: f64 },
    #[error("β3 must lie in (0, 1), got {beta3}")]
    Beta3Range { beta3: f64 },
    #[error("β1 + β2·β3 = {sum} must be below 1")]
    SubcriticalSum { sum: f64 },
    #[error("β1 + β2 + β2·β3 = {sum} must exceed 1")]
    SupercriticalSum { sum: f64 },
}

/// Interaction ratios (β₁, β₂, β₃) between limit and market orders on the
/// two sides of the book.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBetas", into = "RawBetas")]
pub struct BetaParams {
    beta1: f64,
    beta2: f64,
    beta3: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBetas {
    beta1: f64,
    beta2: f64,
    beta3: f64,
}

impl TryFrom<RawBetas> for BetaParams {
    type Error = BetaError;
    fn try_from(r: RawBetas) -> Result<Self, BetaError> {
        validate_betas(r.beta1, r.beta2, r.beta3)
    }
}

impl From<BetaParams> for RawBetas {
    fn from(b: BetaParams) -> Self {
        RawBetas {
            beta1: b.beta1,
            beta2: b.beta2,
            beta3: b.beta3,
        }
    }
}

/// Checks the admissibility inequalities in order and names the first one
/// that fails.
pub fn validate_betas(b1: f64, b2: f64, b3: f64) -> Result<BetaParams, BetaError> {
    if !(b1.is_finite() && b2.is_finite() && b3.is_finite()) {
        return Err(BetaError::NonFinite(b1, b2, b3));
    }
    if !(0.0 < b2 && b2 < b1 && b1 < 1.0) {
        return Err(BetaError::OrderingViolation {
            beta1: b1,
            beta2: b2,
        });
    }
    if !(0.0 < b3 && b3 < 1.0) {
        return Err(BetaError::Beta3Range { beta3: b3 });
    }
    let low = b1 + b2 * b3;
    if low >= 1.0 {
        return Err(BetaError::SubcriticalSum { sum: low });
    }
    let high = b1 + b2 + b2 * b3;
    if high <= 1.0 {
        return Err(BetaError::SupercriticalSum { sum: high });
    }
    Ok(BetaParams {
        beta1: b1,
        beta2: b2,
        beta3: b3,
    })
}

impl BetaParams {
    pub fn new(b1: f64, b2: f64, b3: f64) -> Result<Self, BetaError> {
        validate_betas(b1, b2, b3)
    }
    pub fn beta1(&self) -> f64 {
        self.beta1
    }
    pub fn beta2(&self) -> f64 {
        self.beta2
    }
    pub fn beta3(&self) -> f64 {
        self.beta3
    }
    pub fn as_tuple(&self) -> (f64, f64, f64) {
        (self.beta1, self.beta2, self.beta3)
    }
}
