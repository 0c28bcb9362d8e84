use serde::Serialize;

use super::intensity::Excitation;
use super::thinning::{EventStream, HawkesModel, SimError};

/// Counts, compensator and intensity of one path sampled on a time grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridTrace {
    pub times: Vec<f64>,
    /// N(t) per component
    pub counts: Vec<Vec<f64>>,
    /// ∫₀ᵗ λ per component
    pub compensator: Vec<Vec<f64>>,
    /// λ(t) per component
    pub intensity: Vec<Vec<f64>>,
}

fn check(es: &EventStream, model: &HawkesModel) -> Result<(), SimError> {
    if es.dim != model.dim() {
        return Err(SimError::ParameterMismatch(format!(
            "stream has {} components, model {}",
            es.dim,
            model.dim()
        )));
    }
    if es.events.iter().any(|e| e.c >= es.dim || !(e.t >= 0.0) || e.t > es.horizon) {
        return Err(SimError::ParameterMismatch("event outside [0, horizon] or bad component".into()));
    }
    if es.events.windows(2).any(|w| w[1].t < w[0].t) {
        return Err(SimError::ParameterMismatch("events are not time ordered".into()));
    }
    Ok(())
}

/// Replays the events through the intensity bookkeeping and samples the
/// path at each (ascending) grid time.
pub fn replay(es: &EventStream, model: &HawkesModel, times: &[f64]) -> Result<GridTrace, SimError> {
    check(es, model)?;
    if let Some(&end) = times.last() {
        if end > es.horizon * (1.0 + 1e-12) {
            return Err(SimError::GridBeyondHorizon {
                grid_end: end,
                horizon: es.horizon,
            });
        }
    }
    let d = model.dim();
    let mut state = model.new_state();
    let mut n = vec![0.0; d];
    let mut out = GridTrace {
        times: times.to_vec(),
        counts: Vec::with_capacity(times.len()),
        compensator: Vec::with_capacity(times.len()),
        intensity: Vec::with_capacity(times.len()),
    };
    let mut next = 0;
    let mut buf = vec![0.0; d];
    for &t in times {
        while next < es.events.len() && es.events[next].t <= t {
            let e = es.events[next];
            state.advance(e.t);
            state.push(e.c);
            n[e.c] += 1.0;
            next += 1;
        }
        state.advance(t);
        out.counts.push(n.clone());
        model.compensator(&state, &mut buf);
        out.compensator.push(buf.clone());
        model.intensity(&state, &mut buf);
        out.intensity.push(buf.clone());
    }
    Ok(out)
}

/// M(t) = N(t) − ∫₀ᵗλ on the grid k·step, k = 0..=⌊horizon/step⌋.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MartingalePath {
    pub times: Vec<f64>,
    pub m: Vec<Vec<f64>>,
    pub n: Vec<Vec<f64>>,
}

pub fn compensated_martingale(
    es: &EventStream,
    model: &HawkesModel,
    step: f64,
) -> Result<MartingalePath, SimError> {
    if !(step > 0.0) {
        return Err(SimError::InvalidModel(format!("grid step {step}")));
    }
    let k = (es.horizon / step + 1e-9).floor() as usize;
    let times: Vec<f64> = (0..=k).map(|i| i as f64 * step).collect();
    let tr = replay(es, model, &times)?;
    let m = tr
        .counts
        .iter()
        .zip(&tr.compensator)
        .map(|(n, c)| n.iter().zip(c).map(|(a, b)| a - b).collect())
        .collect();
    Ok(MartingalePath {
        times: tr.times,
        m,
        n: tr.counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hawkes_core::{make_kernel, BaselineSpec, KernelShape};
    use crate::hawkes_sim::simulate_hawkes;

    #[test]
    fn poisson_compensator_is_exact() {
        let k = make_kernel(KernelShape::Exponential { scale: 0.5, rate: 1.0 }).unwrap();
        let model = HawkesModel::poisson(BaselineSpec::constant(vec![1.0, 2.0]), k).unwrap();
        let es = simulate_hawkes(&model, 20.0, 5).unwrap();
        let mp = compensated_martingale(&es, &model, 0.5).unwrap();
        for (t, (m, n)) in mp.times.iter().zip(mp.m.iter().zip(&mp.n)) {
            assert_eq!(m[0], n[0] - t);
            assert!((m[1] - (n[1] - 2.0 * t)).abs() < 1e-12);
        }
    }

    #[test]
    fn grid_beyond_horizon() {
        let k = make_kernel(KernelShape::Exponential { scale: 0.5, rate: 1.0 }).unwrap();
        let model = HawkesModel::poisson(BaselineSpec::constant(vec![1.0]), k).unwrap();
        let es = simulate_hawkes(&model, 2.0, 5).unwrap();
        assert!(matches!(
            replay(&es, &model, &[1.0, 3.0]),
            Err(SimError::GridBeyondHorizon { .. })
        ));
    }
}
