//! Closed-form verification suite: eigensystem, limit constants and
//! Mittag-Leffler identities, each with its tolerance.

use nalgebra::Matrix4;
use rand::Rng;
use roughbook::hawkes_core::{build_phi0, critical_scale, validate_betas, BetaParams, Phi0Matrix};
use roughbook::mittag_leffler::{density_mass, laplace_of_density, ml, nu_bar, MlError};
use roughbook::rng;
use roughbook::special::{gamma, rgamma};
use serde::{Deserialize, Serialize};

use crate::manifest::Mutation;

pub const EIGEN_CASES: usize = 1000;

/// One line of the verification report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub check: String,
    pub pass: bool,
    /// worst observed error
    pub value: f64,
    pub tolerance: f64,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl CheckRecord {
    fn new(check: &str, value: f64, tolerance: f64, n: usize) -> Self {
        Self {
            check: check.to_string(),
            pass: value <= tolerance,
            value,
            tolerance,
            n,
            detail: None,
        }
    }

    fn failed(check: &str, tolerance: f64, detail: String) -> Self {
        Self {
            check: check.to_string(),
            pass: false,
            value: f64::INFINITY,
            tolerance,
            n: 0,
            detail: Some(detail),
        }
    }
}

/// Uniformly drawn admissible betas.
pub fn random_betas(seed: u64, count: usize) -> Vec<BetaParams> {
    let mut r = rng::stream(seed, "verify", 0);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let b1: f64 = r.random();
        let b2 = b1 * r.random::<f64>();
        let b3: f64 = r.random();
        if let Ok(b) = validate_betas(b1, b2, b3) {
            out.push(b);
        }
    }
    out
}

fn closed_form(b: &BetaParams, mutate: Option<Mutation>) -> Phi0Matrix {
    let mut p = build_phi0(b);
    if mutate == Some(Mutation::Lambda1) {
        let (b1, b2, _) = b.as_tuple();
        p.eigenvalues[0] = b1 + 2.0 * b2;
    }
    p
}

fn numeric_eigenvalues(p: &Phi0Matrix) -> Vec<f64> {
    let m = Matrix4::from_fn(|i, j| p.entries[j][i]);
    let mut ev: Vec<f64> = m.complex_eigenvalues().iter().map(|c| c.re).collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

/// ‖Φ₀ᵀv − λv‖ / (‖Φ₀‖_F‖v‖)
fn vector_residual(p: &Phi0Matrix, i: usize, lambda: f64) -> f64 {
    let v = p.v(i);
    let w = p.transpose_apply(v);
    let r: f64 = w.iter().zip(v).map(|(a, b)| (a - lambda * b).powi(2)).sum::<f64>().sqrt();
    let nv: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nm: f64 = p.entries.iter().flatten().map(|x| x * x).sum::<f64>().sqrt();
    r / (nm * nv)
}

fn eigen_checks(seed: u64, mutate: Option<Mutation>) -> Vec<CheckRecord> {
    let cases = random_betas(seed, EIGEN_CASES);
    let mut worst_val: f64 = 0.0;
    let mut worst_vec: f64 = 0.0;
    let mut misordered = 0usize;
    let mut worst_theta: f64 = 0.0;
    for b in &cases {
        let p = closed_form(b, mutate);
        let num = numeric_eigenvalues(&p);
        for i in 0..4 {
            worst_val = worst_val.max((p.lambda(i) - num[i]).abs() / num[i].abs());
            worst_vec = worst_vec.max(vector_residual(&p, i, num[i]));
        }
        let l = p.eigenvalues;
        if !(l[0] > l[1] && l[1] > l[2] && l[2] > l[3] && l[3] > 0.0) {
            misordered += 1;
        }
        let direct = p.ones_dot(0);
        worst_theta = worst_theta.max((p.ones_dot_v1() - direct).abs() / direct.abs());
    }
    vec![
        CheckRecord::new("eigenvalues_vs_numeric", worst_val, 1e-10, cases.len()),
        CheckRecord::new("eigenvectors_residual", worst_vec, 1e-10, cases.len()),
        CheckRecord::new("eigenvalue_ordering", misordered as f64, 0.0, cases.len()),
        CheckRecord::new("ones_dot_v1_closed_form", worst_theta, 1e-12, cases.len()),
    ]
}

/// With the critical kernel κ = 1/λ₁, so ν̄ = ā/Γ(1−α) for every β.
fn critical_constant_check(seed: u64) -> CheckRecord {
    let cases = random_betas(seed, 100);
    let mut worst: f64 = 0.0;
    for b in &cases {
        for &alpha in &[0.55, 0.7, 0.9] {
            let k = match critical_scale(b, alpha) {
                Ok(k) => k,
                Err(e) => return CheckRecord::failed("critical_nu_bar", 1e-12, e.to_string()),
            };
            let lambda1 = build_phi0(b).lambda(0);
            let nb = match nu_bar(4.0, lambda1, k.kappa.unwrap_or(f64::NAN), alpha) {
                Ok(v) => v,
                Err(e) => return CheckRecord::failed("critical_nu_bar", 1e-12, e.to_string()),
            };
            let expected = 4.0 / gamma(1.0 - alpha);
            worst = worst.max((nb - expected).abs() / expected);
        }
    }
    CheckRecord::new("critical_nu_bar", worst, 1e-12, cases.len() * 3)
}

fn ml_checks() -> Vec<CheckRecord> {
    let run = |name: &str, tol: f64, f: &dyn Fn() -> Result<(f64, usize), MlError>| match f() {
        Ok((v, n)) => CheckRecord::new(name, v, tol, n),
        Err(e) => CheckRecord::failed(name, tol, e.to_string()),
    };
    vec![
        run("ml_exponential", 1e-12, &|| {
            let mut w: f64 = 0.0;
            for k in 0..=200 {
                let z = -5.0 + 0.05 * k as f64;
                w = w.max((ml(1.0, 1.0, z)? - z.exp()).abs() / z.exp());
            }
            Ok((w, 201))
        }),
        run("ml_value_at_zero", 1e-12, &|| {
            let mut w: f64 = 0.0;
            let mut n = 0;
            for &a in &[0.55, 0.7, 0.9, 1.0] {
                for &b in &[0.3, 0.7, 1.0, 1.5, 2.2, 3.0] {
                    w = w.max((ml(a, b, 0.0)? - rgamma(b)).abs());
                    n += 1;
                }
            }
            Ok((w, n))
        }),
        run("ml_density_mass", 1e-6, &|| {
            let mut w: f64 = 0.0;
            for &a in &[0.6, 0.75, 0.9] {
                for &nu in &[0.3, 1.0, 3.0] {
                    w = w.max((density_mass(a, nu)? - 1.0).abs());
                }
            }
            Ok((w, 9))
        }),
        run("ml_laplace_identity", 1e-6, &|| {
            let mut w: f64 = 0.0;
            for &z in &[0.5, 1.0, 4.0] {
                w = w.max((laplace_of_density(0.7, 0.8, z)? - 0.8 / (0.8 + z.powf(0.7))).abs());
            }
            Ok((w, 3))
        }),
    ]
}

pub fn run_checks(seed: u64, mutate: Option<Mutation>) -> Vec<CheckRecord> {
    let mut out = eigen_checks(seed, mutate);
    out.push(critical_constant_check(seed));
    out.extend(ml_checks());
    out
}
