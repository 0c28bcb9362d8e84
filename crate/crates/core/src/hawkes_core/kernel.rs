use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::beta::BetaParams;
use super::phi0::build_phi0;

/// Relative level below which a kernel is treated as switched off.
pub const CUTOFF_LEVEL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("tail exponent α = {alpha} outside (1/2, 1)")]
    AlphaOutOfRange { alpha: f64 },
    #[error("kernel is not integrable: {reason}")]
    NonIntegrable { reason: String },
    #[error("kernel parameter {name} invalid: {value}")]
    InvalidParameter { name: &'static str, value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamily {
    PowerLaw,
    Exponential,
    Tabulated,
}

/// Parameters of the scalar excitation function φ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelShape {
    /// φ(t) = scale·(1+t)^{-1-alpha}
    PowerLaw { scale: f64, alpha: f64 },
    /// φ(t) = scale·e^{-rate·t}
    Exponential { scale: f64, rate: f64 },
    /// Piecewise linear through (times, values), zero after the last knot.
    Tabulated { times: Vec<f64>, values: Vec<f64> },
}

/// A validated kernel with its derived norms.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelSpec {
    pub shape: KernelShape,
    pub alpha: Option<f64>,
    pub l1_norm: f64,
    pub l2_norm: f64,
    pub kappa: Option<f64>,
    pub support_cutoff: f64,
    /// ∫ φ beyond `support_cutoff`.
    pub truncation_mass: f64,
}

impl<'de> Deserialize<'de> for KernelSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let shape = KernelShape::deserialize(d)?;
        make_kernel(shape).map_err(serde::de::Error::custom)
    }
}

fn check_positive(name: &'static str, value: f64) -> Result<(), KernelError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(KernelError::InvalidParameter { name, value })
    }
}

pub fn make_kernel(shape: KernelShape) -> Result<KernelSpec, KernelError> {
    match shape {
        KernelShape::PowerLaw { scale, alpha } => {
            if !(alpha > 0.5 && alpha < 1.0) {
                return Err(KernelError::AlphaOutOfRange { alpha });
            }
            check_positive("scale", scale)?;
            let cutoff = CUTOFF_LEVEL.powf(-1.0 / (1.0 + alpha)) - 1.0;
            Ok(KernelSpec {
                shape,
                alpha: Some(alpha),
                l1_norm: scale / alpha,
                l2_norm: scale / (1.0 + 2.0 * alpha).sqrt(),
                kappa: Some(scale / alpha),
                support_cutoff: cutoff,
                truncation_mass: scale / alpha * (1.0 + cutoff).powf(-alpha),
            })
        }
        KernelShape::Exponential { scale, rate } => {
            check_positive("scale", scale)?;
            if !(rate > 0.0 && rate.is_finite()) {
                return Err(KernelError::NonIntegrable {
                    reason: format!("exponential rate {rate} must be positive"),
                });
            }
            let cutoff = -CUTOFF_LEVEL.ln() / rate;
            Ok(KernelSpec {
                shape,
                alpha: None,
                l1_norm: scale / rate,
                l2_norm: scale / (2.0 * rate).sqrt(),
                kappa: None,
                support_cutoff: cutoff,
                truncation_mass: scale / rate * CUTOFF_LEVEL,
            })
        }
        KernelShape::Tabulated { times, values } => {
            if times.len() != values.len() || times.len() < 2 {
                return Err(KernelError::NonIntegrable {
                    reason: "tabulated kernel needs at least two matching knots".into(),
                });
            }
            if times[0] != 0.0 {
                return Err(KernelError::InvalidParameter {
                    name: "times[0]",
                    value: times[0],
                });
            }
            if times.windows(2).any(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
                return Err(KernelError::NonIntegrable {
                    reason: "knot times must be finite and strictly increasing".into(),
                });
            }
            if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(KernelError::NonIntegrable {
                    reason: "knot values must be finite and nonnegative".into(),
                });
            }
            let mut l1 = 0.0;
            let mut l2sq = 0.0;
            for k in 0..times.len() - 1 {
                let h = times[k + 1] - times[k];
                let (a, b) = (values[k], values[k + 1]);
                l1 += 0.5 * h * (a + b);
                l2sq += h * (a * a + a * b + b * b) / 3.0;
            }
            let cutoff = *times.last().unwrap();
            Ok(KernelSpec {
                shape: KernelShape::Tabulated { times, values },
                alpha: None,
                l1_norm: l1,
                l2_norm: l2sq.sqrt(),
                kappa: None,
                support_cutoff: cutoff,
                truncation_mass: 0.0,
            })
        }
    }
}

/// Power-law kernel scaled so that λ₁·‖φ‖₁ = 1.
pub fn critical_scale(b: &BetaParams, alpha: f64) -> Result<KernelSpec, KernelError> {
    let lambda1 = build_phi0(b).lambda(0);
    make_kernel(KernelShape::PowerLaw {
        scale: alpha / lambda1,
        alpha,
    })
}

/// ‖φ^{*n}‖₁ = ‖φ‖₁ⁿ.
pub fn convolution_power_l1(k: &KernelSpec, n: u32) -> f64 {
    k.l1_norm.powi(n as i32)
}

impl KernelSpec {
    pub fn family(&self) -> KernelFamily {
        match self.shape {
            KernelShape::PowerLaw { .. } => KernelFamily::PowerLaw,
            KernelShape::Exponential { .. } => KernelFamily::Exponential,
            KernelShape::Tabulated { .. } => KernelFamily::Tabulated,
        }
    }

    /// Same family with every value multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<KernelSpec, KernelError> {
        let shape = match &self.shape {
            KernelShape::PowerLaw { scale, alpha } => KernelShape::PowerLaw {
                scale: scale * factor,
                alpha: *alpha,
            },
            KernelShape::Exponential { scale, rate } => KernelShape::Exponential {
                scale: scale * factor,
                rate: *rate,
            },
            KernelShape::Tabulated { times, values } => KernelShape::Tabulated {
                times: times.clone(),
                values: values.iter().map(|v| v * factor).collect(),
            },
        };
        make_kernel(shape)
    }

    /// φ(t); zero for t < 0.
    pub fn eval(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        match &self.shape {
            KernelShape::PowerLaw { scale, alpha } => scale * (1.0 + t).powf(-1.0 - alpha),
            KernelShape::Exponential { scale, rate } => scale * (-rate * t).exp(),
            KernelShape::Tabulated { times, values } => {
                if t > *times.last().unwrap() {
                    return 0.0;
                }
                let k = times.partition_point(|&x| x <= t).saturating_sub(1);
                if k + 1 >= times.len() {
                    return values[k];
                }
                let w = (t - times[k]) / (times[k + 1] - times[k]);
                values[k] + w * (values[k + 1] - values[k])
            }
        }
    }

    /// ∫₀ᵗ φ.
    pub fn cumulative(&self, t: f64) -> f64 {
        self.integral(0.0, t)
    }

    /// ∫ₐᵇ φ for 0 ≤ a ≤ b, evaluated without cancellation for short cells.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        let a = a.max(0.0);
        if b <= a {
            return 0.0;
        }
        match &self.shape {
            KernelShape::PowerLaw { scale, alpha } => {
                let base = (1.0 + a).powf(-alpha);
                let ratio = ((b - a) / (1.0 + a)).ln_1p();
                scale / alpha * base * -(-alpha * ratio).exp_m1()
            }
            KernelShape::Exponential { scale, rate } => {
                if b.is_infinite() {
                    return scale / rate * (-rate * a).exp();
                }
                scale / rate * (-rate * a).exp() * -(-rate * (b - a)).exp_m1()
            }
            KernelShape::Tabulated { times, .. } => {
                let b = b.min(*times.last().unwrap());
                let mut acc = 0.0;
                let start = times.partition_point(|&x| x <= a).saturating_sub(1);
                for k in start..times.len() - 1 {
                    if times[k] >= b {
                        break;
                    }
                    let (t0, t1) = (times[k].max(a), times[k + 1].min(b));
                    if t1 > t0 {
                        acc += 0.5 * (t1 - t0) * (self.eval(t0) + self.eval(t1));
                    }
                }
                acc
            }
        }
    }

    /// Upper bound for φ on [a, b].
    pub fn sup_on(&self, a: f64, b: f64) -> f64 {
        let a = a.max(0.0);
        match &self.shape {
            KernelShape::PowerLaw { .. } | KernelShape::Exponential { .. } => self.eval(a),
            KernelShape::Tabulated { times, values } => {
                let mut m = self.eval(a).max(self.eval(b));
                for (t, v) in times.iter().zip(values) {
                    if *t > a && *t < b {
                        m = m.max(*v);
                    }
                }
                m
            }
        }
    }

    pub fn is_nonincreasing(&self) -> bool {
        match &self.shape {
            KernelShape::PowerLaw { .. } | KernelShape::Exponential { .. } => true,
            KernelShape::Tabulated { values, .. } => values.windows(2).all(|w| w[1] <= w[0]),
        }
    }

    /// Cell masses ∫_{kΔ}^{(k+1)Δ} φ for k = 0..n.
    pub fn cell_integrals(&self, dt: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|k| self.integral(k as f64 * dt, (k + 1) as f64 * dt))
            .collect()
    }
}

/// Cell masses of φ^{*n} on a grid of step `dt`, by discrete convolution of
/// the cell masses of φ. Used as a quadrature oracle for ‖φ^{*n}‖₁.
pub fn convolution_power_grid(k: &KernelSpec, n: u32, dt: f64, len: usize) -> Vec<f64> {
    let base = k.cell_integrals(dt, len);
    let mut out = vec![0.0; len];
    if n == 0 {
        out[0] = 1.0;
        return out;
    }
    out.copy_from_slice(&base);
    for _ in 1..n {
        let mut next = vec![0.0; len];
        for i in 0..len {
            let mut acc = 0.0;
            for j in 0..=i {
                acc += out[j] * base[i - j];
            }
            next[i] = acc;
        }
        out = next;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_law_closed_forms() {
        let k = make_kernel(KernelShape::PowerLaw {
            scale: 0.7 / 1.35,
            alpha: 0.7,
        })
        .unwrap();
        assert!((k.l1_norm - 1.0 / 1.35).abs() < 1e-15);
        assert_eq!(k.kappa, Some(k.l1_norm));
        assert!((k.eval(k.support_cutoff) / k.eval(0.0) - CUTOFF_LEVEL).abs() < 1e-20);
        let total = k.cumulative(k.support_cutoff) + k.truncation_mass;
        assert!((total - k.l1_norm).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_alpha() {
        assert!(matches!(
            make_kernel(KernelShape::PowerLaw {
                scale: 1.0,
                alpha: 0.4
            }),
            Err(KernelError::AlphaOutOfRange { .. })
        ));
        assert!(matches!(
            make_kernel(KernelShape::Exponential {
                scale: 1.0,
                rate: 0.0
            }),
            Err(KernelError::NonIntegrable { .. })
        ));
    }

    #[test]
    fn exponential_has_no_kappa() {
        let k = make_kernel(KernelShape::Exponential {
            scale: 1.0,
            rate: 1.0,
        })
        .unwrap();
        assert_eq!(k.l1_norm, 1.0);
        assert_eq!(k.kappa, None);
        assert!((k.l2_norm - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn tabulated_integrals() {
        let k = make_kernel(KernelShape::Tabulated {
            times: vec![0.0, 1.0, 3.0],
            values: vec![1.0, 0.5, 0.0],
        })
        .unwrap();
        assert!((k.l1_norm - 1.25).abs() < 1e-15);
        assert!((k.integral(0.5, 2.0) - (0.5 * 0.5 * (0.75 + 0.5) + 0.5 * 1.0 * (0.5 + 0.25))).abs() < 1e-15);
        assert_eq!(k.eval(4.0), 0.0);
        assert!(k.is_nonincreasing());
    }

    #[test]
    fn critical_examples() {
        let b = BetaParams::new(0.6, 0.3, 0.5).unwrap();
        let k = critical_scale(&b, 0.7).unwrap();
        match k.shape {
            KernelShape::PowerLaw { scale, .. } => assert!((scale - 0.518_518_518_518).abs() < 1e-12),
            _ => unreachable!(),
        }
        let k9 = critical_scale(&b, 0.9).unwrap();
        match k9.shape {
            KernelShape::PowerLaw { scale, .. } => assert!((scale - 0.9 / 1.35).abs() < 1e-15),
            _ => unreachable!(),
        }
    }

    #[test]
    fn convolution_powers() {
        let k = make_kernel(KernelShape::Exponential {
            scale: 0.5,
            rate: 1.0,
        })
        .unwrap();
        assert_eq!(convolution_power_l1(&k, 0), 1.0);
        assert_eq!(convolution_power_l1(&k, 3), 0.125);
        let g = convolution_power_grid(&k, 2, 0.02, 3000);
        let mass: f64 = g.iter().sum();
        assert!((mass - 0.25).abs() < 1e-6, "{mass}");
    }
}
