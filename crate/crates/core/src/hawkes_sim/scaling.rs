//! Nearly-unstable parameter sequences and the rescaled auxiliary processes.

use serde::Serialize;
use thiserror::Error;

use super::intensity::Excitation;
use super::martingale::replay;
use super::thinning::{EventStream, HawkesModel, SimError};
use crate::hawkes_core::{
    build_phi0, classify_stability, BaselineSpec, BetaParams, KernelSpec, Phi0Matrix, Regime,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScalingError {
    #[error("ā·T^(-α) = {value} ≥ 1 leaves a_T ≤ 0")]
    DegenerateScale { value: f64 },
    #[error("scaling parameter {name} invalid: {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("kernel is not critical (λ₁‖φ‖₁ = {spectral_l1})")]
    NotCritical { spectral_l1: f64 },
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// a_T = 1 − ā T^{−α}, μ_T = μ̄ T^{α−1}, h_T = √((1 − a_T)/T).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingParams {
    pub t_scale: f64,
    pub alpha: f64,
    pub a_bar: f64,
    pub mu_bar: f64,
    pub a_t: f64,
    pub mu_t: f64,
    pub h_t: f64,
}

pub fn make_scaling(t_scale: f64, alpha: f64, a_bar: f64, mu_bar: f64) -> Result<ScalingParams, ScalingError> {
    if !(t_scale >= 1.0 && t_scale.is_finite()) {
        return Err(ScalingError::InvalidParameter {
            name: "T",
            value: t_scale,
        });
    }
    if !(alpha > 0.5 && alpha < 1.0) {
        return Err(ScalingError::InvalidParameter { name: "alpha", value: alpha });
    }
    for (name, v) in [("a_bar", a_bar), ("mu_bar", mu_bar)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(ScalingError::InvalidParameter { name, value: v });
        }
    }
    let gap = a_bar * t_scale.powf(-alpha);
    if gap >= 1.0 {
        return Err(ScalingError::DegenerateScale { value: gap });
    }
    Ok(ScalingParams {
        t_scale,
        alpha,
        a_bar,
        mu_bar,
        a_t: 1.0 - gap,
        mu_t: mu_bar * t_scale.powf(alpha - 1.0),
        h_t: (gap / t_scale).sqrt(),
    })
}

impl ScalingParams {
    /// The micro-scale model: baseline μ_T·𝟙, kernel matrix a_T·φ·Φ₀.
    pub fn model(&self, k: &KernelSpec, phi0: &Phi0Matrix) -> Result<HawkesModel, SimError> {
        HawkesModel::four_type(BaselineSpec::constant(vec![self.mu_t; 4]), k.clone(), phi0, self.a_t)
    }

    /// 1 − a_T
    pub fn gap(&self) -> f64 {
        self.a_bar * self.t_scale.powf(-self.alpha)
    }
}

/// Rescaled processes on a macro grid t ∈ [0, horizon].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuxiliaryPaths {
    pub times: Vec<f64>,
    pub x: Vec<[f64; 4]>,
    pub lambda: Vec<[f64; 4]>,
    pub z: Vec<[f64; 4]>,
    pub v_rescaled: Vec<f64>,
    pub y: Vec<f64>,
    /// B_{T,1}(t) diagnostic
    pub b_t1: Vec<f64>,
    /// Number of integrand evaluations where the floor under the root bit.
    pub b_floor_hits: usize,
}

pub const B_FLOOR: f64 = 1e-12;

fn arr(v: &[f64]) -> [f64; 4] {
    [v[0], v[1], v[2], v[3]]
}

fn dot(a: &[f64; 4], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Builds X_T, Λ_T, Z_T, h_T·V_T(tT), Y_T and B_{T,1} from one micro path
/// simulated with `sp.model(k, phi0)`.
pub fn auxiliary_paths(
    es: &EventStream,
    sp: &ScalingParams,
    phi0: &Phi0Matrix,
    k: &KernelSpec,
    macro_horizon: f64,
    macro_step: f64,
) -> Result<AuxiliaryPaths, ScalingError> {
    let t_scale = sp.t_scale;
    if macro_horizon * t_scale > es.horizon * (1.0 + 1e-12) {
        return Err(SimError::GridBeyondHorizon {
            grid_end: macro_horizon * t_scale,
            horizon: es.horizon,
        }
        .into());
    }
    if !(macro_step > 0.0) {
        return Err(ScalingError::InvalidParameter {
            name: "macro_step",
            value: macro_step,
        });
    }
    let model = sp.model(k, phi0)?;
    let n = (macro_horizon / macro_step + 1e-9).floor() as usize;
    let times: Vec<f64> = (0..=n).map(|i| i as f64 * macro_step).collect();
    let micro: Vec<f64> = times.iter().map(|t| (t * t_scale).min(es.horizon)).collect();
    let tr = replay(es, &model, &micro)?;

    let gap = sp.gap();
    let xs = gap / (t_scale * sp.mu_t);
    let zs = (t_scale * sp.mu_t / gap).sqrt();
    let ys = gap / sp.mu_t;
    let v1 = *phi0.v(0);
    let v4 = *phi0.v(3);
    let mut out = AuxiliaryPaths {
        times: times.clone(),
        x: Vec::with_capacity(times.len()),
        lambda: Vec::with_capacity(times.len()),
        z: Vec::with_capacity(times.len()),
        v_rescaled: Vec::with_capacity(times.len()),
        y: Vec::with_capacity(times.len()),
        b_t1: Vec::new(),
        b_floor_hits: 0,
    };
    for i in 0..times.len() {
        let x = arr(&tr.counts[i]).map(|v| xs * v);
        let l = arr(&tr.compensator[i]).map(|v| xs * v);
        let mut z = [0.0; 4];
        for j in 0..4 {
            z[j] = zs * (x[j] - l[j]);
        }
        out.x.push(x);
        out.lambda.push(l);
        out.z.push(z);
        out.v_rescaled.push(sp.h_t * dot(&v4, &tr.counts[i]));
        out.y.push(ys * dot(&v1, &tr.intensity[i]));
    }
    let (b, hits) = b_t1(es, &model, &v1, t_scale, &micro)?;
    out.b_t1 = b;
    out.b_floor_hits = hits;
    Ok(out)
}

/// B_{T,1}(t) = T^{-1/2} ∫₀^{tT} d(v₁ᵀM)/√((v₁²)ᵀλ): jump part at the
/// pre-event intensity, drift part by the trapezoid rule between
/// consecutive event and grid times.
fn b_t1(
    es: &EventStream,
    model: &HawkesModel,
    v1: &[f64; 4],
    t_scale: f64,
    micro: &[f64],
) -> Result<(Vec<f64>, usize), SimError> {
    let v1sq = v1.map(|v| v * v);
    let mut hits = 0usize;
    let mut state = model.new_state();
    let mut lam = [0.0; 4];
    let integrand = |lam: &[f64; 4], hits: &mut usize| -> (f64, f64) {
        let q = dot(&v1sq, lam);
        let root = if q < B_FLOOR {
            *hits += 1;
            B_FLOOR.sqrt()
        } else {
            q.sqrt()
        };
        (dot(v1, lam) / root, root)
    };
    model.intensity(&state, &mut lam);
    let (mut prev_drift, _) = integrand(&lam, &mut hits);
    let mut prev_t = 0.0;
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(micro.len());
    let mut next = 0;
    let scale = 1.0 / t_scale.sqrt();
    for &tg in micro {
        loop {
            let (t, event) = if next < es.events.len() && es.events[next].t <= tg {
                (es.events[next].t, Some(es.events[next].c))
            } else {
                (tg, None)
            };
            state.advance(t);
            model.intensity(&state, &mut lam);
            let (drift, root) = integrand(&lam, &mut hits);
            acc -= 0.5 * (t - prev_t) * (prev_drift + drift);
            prev_t = t;
            prev_drift = drift;
            match event {
                Some(c) => {
                    acc += v1[c] / root;
                    state.push(c);
                    model.intensity(&state, &mut lam);
                    prev_drift = integrand(&lam, &mut hits).0;
                    next += 1;
                }
                None => break,
            }
        }
        out.push(scale * acc);
    }
    Ok((out, hits))
}

/// 4 / (√(ε₁ᵀv₁)·(1 − λ₄‖φ‖₁)) with ε₁ = 𝟙/2, for a critical kernel.
pub fn limit_volume_factor(b: &BetaParams, k: &KernelSpec) -> Result<f64, ScalingError> {
    let phi0 = build_phi0(b);
    let report = classify_stability(&phi0, k);
    if report.regime != Regime::Critical {
        return Err(ScalingError::NotCritical {
            spectral_l1: report.spectral_l1,
        });
    }
    let eps_v1 = phi0.ones_dot_v1() / 2.0;
    Ok(4.0 / (eps_v1.sqrt() * (1.0 - report.per_eigenvalue_l1[3])))
}

/// Monte Carlo summary of the convergence diagnostics at one T.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingDiagnostics {
    pub t_scale: f64,
    pub paths: usize,
    /// E|vᵢᵀΛ_T(horizon)| for i = 2, 3, 4 with standard errors
    pub proj_mean: [f64; 3],
    pub proj_se: [f64; 3],
    /// E sup_t ‖X_T − Λ_T‖∞
    pub gap_mean: f64,
    pub gap_se: f64,
    /// E[Y_T(horizon)]
    pub y_mean: f64,
    pub y_se: f64,
    pub mean_events: f64,
}

pub fn summarize(t_scale: f64, phi0: &Phi0Matrix, paths: &[AuxiliaryPaths], events: &[usize]) -> ScalingDiagnostics {
    let n = paths.len() as f64;
    let ms = |v: &[f64]| -> (f64, f64) {
        let m = v.iter().sum::<f64>() / n;
        let var = if v.len() > 1 {
            v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        (m, (var / n).sqrt())
    };
    let mut proj_mean = [0.0; 3];
    let mut proj_se = [0.0; 3];
    for i in 1..4 {
        let v: Vec<f64> = paths
            .iter()
            .map(|p| dot(phi0.v(i), p.lambda.last().unwrap()).abs())
            .collect();
        let (m, s) = ms(&v);
        proj_mean[i - 1] = m;
        proj_se[i - 1] = s;
    }
    let gaps: Vec<f64> = paths
        .iter()
        .map(|p| {
            p.x.iter()
                .zip(&p.lambda)
                .flat_map(|(x, l)| x.iter().zip(l).map(|(a, b)| (a - b).abs()))
                .fold(0.0, f64::max)
        })
        .collect();
    let (gap_mean, gap_se) = ms(&gaps);
    let ys: Vec<f64> = paths.iter().map(|p| *p.y.last().unwrap()).collect();
    let (y_mean, y_se) = ms(&ys);
    ScalingDiagnostics {
        t_scale,
        paths: paths.len(),
        proj_mean,
        proj_se,
        gap_mean,
        gap_se,
        y_mean,
        y_se,
        mean_events: events.iter().sum::<usize>() as f64 / n,
    }
}
