//! Two-parameter Mittag-Leffler function E_{α,β}(z) on the real line and the
//! Mittag-Leffler density f^{α,ν}(t) = ν t^{α-1} E_{α,α}(-ν t^α).
//!
//! Evaluation picks one of four routes:
//! - the power series, for z ≥ 0 or |z| ≤ 1;
//! - the algebraic asymptotic expansion, once (-z)^{1/α} ≥ 40;
//! - the real-axis integral representation (0 < α < 1, β < 1 + α) otherwise,
//!   with the recurrence E_{α,β} = (E_{α,β-α} - 1/Γ(β-α))/z for larger β;
//! - closed forms and an Euler-type integral for α = 1.

use std::f64::consts::PI;

use thiserror::Error;

use crate::quad::{self, QuadError, Tolerance};
use crate::special::{gamma, ln_gamma, rgamma};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MlError {
    #[error("parameter {name} must be positive and finite, got {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("E_{{α,β}}({z}) overflows f64")]
    Overflow { z: f64 },
    #[error("no evaluation route for α={alpha}, β={beta}, z={z}")]
    Unsupported { alpha: f64, beta: f64, z: f64 },
    #[error("density requires t > 0, got {t}")]
    NonpositiveT { t: f64 },
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MlParams {
    pub alpha: f64,
    pub beta: f64,
}

impl MlParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self, MlError> {
        positive("alpha", alpha)?;
        positive("beta", beta)?;
        Ok(Self { alpha, beta })
    }

    pub fn eval(&self, z: f64) -> Result<f64, MlError> {
        ml(self.alpha, self.beta, z)
    }
}

fn positive(name: &'static str, value: f64) -> Result<(), MlError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(MlError::InvalidParameter { name, value })
    }
}

const ASYMPTOTIC_T: f64 = 40.0;
const INNER_TOL: Tolerance = Tolerance {
    abs: 1e-300,
    rel: 2e-14,
    max_segments: 2000,
};

/// E_{α,β}(z).
pub fn ml(alpha: f64, beta: f64, z: f64) -> Result<f64, MlError> {
    positive("alpha", alpha)?;
    positive("beta", beta)?;
    if !z.is_finite() {
        return Err(MlError::InvalidParameter { name: "z", value: z });
    }
    if z == 0.0 {
        return Ok(rgamma(beta));
    }
    if alpha == 1.0 {
        if beta == 1.0 {
            let v = z.exp();
            return if v.is_finite() { Ok(v) } else { Err(MlError::Overflow { z }) };
        }
        if beta == 2.0 {
            let v = z.exp_m1() / z;
            return if v.is_finite() { Ok(v) } else { Err(MlError::Overflow { z }) };
        }
    }
    if z > 0.0 {
        if z.powf(1.0 / alpha) > 700.0 {
            return Err(MlError::Overflow { z });
        }
        let v = series(alpha, beta, z, 0);
        return if v.is_finite() { Ok(v) } else { Err(MlError::Overflow { z }) };
    }
    if z >= -1.0 {
        return Ok(series(alpha, beta, z, 0));
    }
    if alpha > 1.0 {
        return Err(MlError::Unsupported { alpha, beta, z });
    }
    let x = -z;
    if x.powf(1.0 / alpha) >= ASYMPTOTIC_T {
        return Ok(asymptotic(alpha, beta, x));
    }
    if alpha == 1.0 {
        return unit_alpha(beta, z);
    }
    negative_integral(alpha, beta, z)
}

/// E_{α,β}(z) - 1/Γ(β), accurate near z = 0.
pub fn ml_minus_leading(alpha: f64, beta: f64, z: f64) -> Result<f64, MlError> {
    if z.abs() <= 1.0 {
        positive("alpha", alpha)?;
        positive("beta", beta)?;
        if alpha == 1.0 && beta == 1.0 {
            return Ok(z.exp_m1());
        }
        return Ok(series(alpha, beta, z, 1));
    }
    Ok(ml(alpha, beta, z)? - rgamma(beta))
}

fn series(alpha: f64, beta: f64, z: f64, first: usize) -> f64 {
    let lz = z.abs().ln();
    let negative = z < 0.0;
    let mut sum = 0.0;
    let mut comp = 0.0;
    let mut prev = f64::INFINITY;
    for n in first..20_000 {
        let arg = alpha * n as f64 + beta;
        let mag = (n as f64 * lz - ln_gamma(arg)).exp();
        let term = if negative && n % 2 == 1 { -mag } else { mag };
        // Kahan summation
        let y = term - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        if mag < prev && mag <= 1e-17 * sum.abs() {
            break;
        }
        prev = mag;
    }
    sum
}

fn asymptotic(alpha: f64, beta: f64, x: f64) -> f64 {
    let lx = x.ln();
    let mut sum = 0.0;
    let mut prev_env = f64::INFINITY;
    for k in 1..400 {
        let kf = k as f64;
        let arg = beta - alpha * kf;
        // |1/Γ(y)| ≤ Γ(1-y)/π for y < 1/2
        let env = if arg < 0.5 {
            (ln_gamma(1.0 - arg) - kf * lx).exp() / PI
        } else {
            (-kf * lx).exp() * rgamma(arg).abs()
        };
        if env > prev_env {
            break;
        }
        let term = rgamma(arg) * (-kf * lx).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if env <= 1e-17 * sum.abs() {
            break;
        }
        prev_env = env;
    }
    sum
}

fn negative_integral(alpha: f64, beta: f64, z: f64) -> Result<f64, MlError> {
    if beta >= 1.0 + alpha {
        let lower = negative_integral(alpha, beta - alpha, z)?;
        return Ok((lower - rgamma(beta - alpha)) / z);
    }
    let x = -z;
    let (s1, s2) = ((PI * (1.0 - beta)).sin(), (PI * (1.0 - beta + alpha)).sin());
    let (sa, ca) = (alpha * PI).sin_cos();
    let e = (1.0 - beta) / alpha;
    let inv_a = 1.0 / alpha;
    let pref = 1.0 / (alpha * PI);
    // K without the χ^e factor
    let core = move |chi: f64| -> f64 {
        let num = chi * s1 + x * s2;
        let den = (chi + x * ca).powi(2) + (x * sa).powi(2);
        pref * (-chi.powf(inv_a)).exp() * num / den
    };
    let chi_max = 60f64.powf(alpha);
    let mut breaks = vec![0.0];
    if ca < 0.0 {
        let peak = -x * ca;
        let width = 2.0 * x * (alpha * PI).sin();
        for b in [peak - width, peak, peak + width] {
            if b > 0.0 && b < chi_max {
                breaks.push(b);
            }
        }
    }
    if breaks.len() == 1 {
        breaks.push(chi_max.min(1.0));
    }
    breaks.push(chi_max);
    breaks.dedup();

    // first piece: χ = w^p removes χ^e at the origin
    let p = alpha / (1.0 + alpha - beta);
    let w_end = breaks[1].powf(1.0 / p);
    let head_f = |w: f64| p * core(w.powf(p));
    let tail_f = |chi: f64| chi.powf(e) * core(chi);
    // a loose pass fixes the absolute scale, so that pieces far below the
    // total need not meet the relative tolerance on their own
    let loose = Tolerance {
        abs: 1e-300,
        rel: 1e-6,
        max_segments: 200,
    };
    let rough = |r: Result<quad::Integral, QuadError>| match r {
        Ok(i) => i.value.abs(),
        Err(QuadError::NotConverged { value, .. }) => value.abs(),
        Err(_) => 0.0,
    };
    let mut scale = rough(quad::integrate(head_f, 0.0, w_end, loose));
    for w in breaks[1..].windows(2) {
        scale += rough(quad::integrate(tail_f, w[0], w[1], loose));
    }
    let tol = Tolerance {
        abs: 1e-17 * scale,
        ..INNER_TOL
    };
    let head = quad::integrate(head_f, 0.0, w_end, tol)?;
    let tail = quad::integrate_pieces(tail_f, &breaks[1..], tol)?;
    Ok(head.value + tail.value)
}

fn unit_alpha(beta: f64, z: f64) -> Result<f64, MlError> {
    if beta > 1.0 {
        // E_{1,β}(z) = (1/Γ(β)) ∫₀¹ exp(z(1 - w^{1/(β-1)})) dw
        let q = 1.0 / (beta - 1.0);
        let r = quad::integrate(|w| (z * (1.0 - w.powf(q))).exp(), 0.0, 1.0, INNER_TOL)?;
        return Ok(r.value * rgamma(beta));
    }
    Ok(rgamma(beta) + z * unit_alpha(beta + 1.0, z)?)
}

/// f^{α,ν}(t) = ν t^{α-1} E_{α,α}(-ν t^α), for t > 0.
pub fn ml_density(alpha: f64, nu: f64, t: f64) -> Result<f64, MlError> {
    positive("alpha", alpha)?;
    positive("nu", nu)?;
    if t.is_nan() || t <= 0.0 {
        return Err(MlError::NonpositiveT { t });
    }
    if t.is_infinite() {
        return Ok(0.0);
    }
    Ok(nu * t.powf(alpha - 1.0) * ml(alpha, alpha, -nu * t.powf(alpha))?)
}

/// ∫₀ᵗ f^{α,ν}(s) ds = 1 - E_{α,1}(-ν t^α).
pub fn ml_density_cdf(alpha: f64, nu: f64, t: f64) -> Result<f64, MlError> {
    positive("alpha", alpha)?;
    positive("nu", nu)?;
    if t.is_nan() || t < 0.0 {
        return Err(MlError::NonpositiveT { t });
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    Ok(-ml_minus_leading(alpha, 1.0, -nu * t.powf(alpha))?)
}

/// ∫₀^∞ f^{α,ν} by quadrature after t = s^{1/α}.
pub fn density_mass(alpha: f64, nu: f64) -> Result<f64, MlError> {
    laplace_of_density(alpha, nu, 0.0)
}

/// ∫₀^∞ e^{-zt} f^{α,ν}(t) dt by quadrature; the closed form is ν/(ν + z^α).
pub fn laplace_of_density(alpha: f64, nu: f64, z: f64) -> Result<f64, MlError> {
    positive("alpha", alpha)?;
    positive("nu", nu)?;
    if !(z >= 0.0) {
        return Err(MlError::InvalidParameter { name: "z", value: z });
    }
    let inv_a = 1.0 / alpha;
    let mut failure = None;
    let r = quad::integrate_to_infinity(
        |s| {
            if s == 0.0 {
                return nu / alpha * rgamma(alpha);
            }
            let damp = if z > 0.0 { (-z * s.powf(inv_a)).exp() } else { 1.0 };
            if damp == 0.0 {
                return 0.0;
            }
            match ml(alpha, alpha, -nu * s) {
                Ok(v) => nu / alpha * damp * v,
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::NAN
                }
            }
        },
        0.0,
        Tolerance::new(1e-12, 1e-11),
    );
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(r?.value)
}

/// ν̄ = ā / (λ₁ κ Γ(1-α)).
pub fn nu_bar(a_bar: f64, lambda1: f64, kappa: f64, alpha: f64) -> Result<f64, MlError> {
    positive("a_bar", a_bar)?;
    positive("lambda1", lambda1)?;
    positive("kappa", kappa)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(MlError::InvalidParameter { name: "alpha", value: alpha });
    }
    Ok(a_bar / (lambda1 * kappa * gamma(1.0 - alpha)))
}

/// κ̄ = √(𝟙ᵀv₁² / 𝟙ᵀv₁) / √(ā μ̄).
pub fn kappa_bar(a_bar: f64, mu_bar: f64, v1: &[f64; 4]) -> Result<f64, MlError> {
    positive("a_bar", a_bar)?;
    positive("mu_bar", mu_bar)?;
    let sum: f64 = v1.iter().sum();
    let sq: f64 = v1.iter().map(|v| v * v).sum();
    positive("1ᵀv1", sum)?;
    Ok((sq / sum).sqrt() / (a_bar * mu_bar).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_argument() {
        for &b in &[0.3, 0.7, 1.0, 1.7, 2.5] {
            assert_eq!(ml(0.7, b, 0.0).unwrap(), rgamma(b));
        }
    }

    #[test]
    fn exponential_case() {
        assert!((ml(1.0, 1.0, 1.0).unwrap() - std::f64::consts::E).abs() < 1e-15);
        let v = ml(1.0, 2.0, -3.0).unwrap();
        assert!((v - (1.0 - (-3f64).exp()) / 3.0).abs() < 1e-15);
    }

    #[test]
    fn unit_alpha_fractional_beta() {
        // E_{1,β} by the series at moderate z
        let z = -0.9;
        let a = unit_alpha(1.5, -3.0).unwrap();
        let b = ml(1.0, 1.5, -3.0).unwrap();
        assert_eq!(a, b);
        let s = series(1.0, 1.5, z, 0);
        assert!((unit_alpha(1.5, z).unwrap() - s).abs() < 1e-13);
    }

    #[test]
    fn branches_meet() {
        // asymptotic and integral branches agree on either side of the switch
        for &(a, b) in &[(0.7, 1.0), (0.7, 0.7), (0.55, 1.0), (0.9, 0.9), (0.8, 1.6)] {
            let x: f64 = 40f64.powf(a);
            let i = negative_integral(a, b, -x).unwrap();
            let s = asymptotic(a, b, x);
            assert!(((i - s) / s).abs() < 1e-11, "a={a} b={b} i={i} s={s}");
        }
    }

    #[test]
    fn overflow_reported() {
        assert!(matches!(ml(0.5, 1.0, 40.0), Err(MlError::Overflow { .. })));
        assert!(ml(0.5, 1.0, -2.0).is_ok());
        assert!(matches!(ml(-1.0, 1.0, 1.0), Err(MlError::InvalidParameter { .. })));
    }

    #[test]
    fn density_exponential() {
        let f = ml_density(1.0, 2.0, 0.5).unwrap();
        assert!((f - 2.0 * (-1f64).exp()).abs() < 1e-15);
        assert!(matches!(ml_density(0.7, 1.0, 0.0), Err(MlError::NonpositiveT { .. })));
    }

    #[test]
    fn constants() {
        let nb = nu_bar(1.0, 1.0, 1.0, 0.7).unwrap();
        assert!((nb - 0.334_273_0).abs() < 1e-6);
        let kb = kappa_bar(1.0, 1.0, &[0.45, 0.45, 0.35, 0.35]).unwrap();
        assert!((kb - (0.65f64 / 1.6).sqrt()).abs() < 1e-15);
        let kb2 = kappa_bar(1.0, 2.0, &[0.45, 0.45, 0.35, 0.35]).unwrap();
        assert!((kb / kb2 - 2f64.sqrt()).abs() < 1e-14);
    }
}
