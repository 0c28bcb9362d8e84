use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use roughbook::hawkes_core::{
    make_kernel, mean_intensity_scalar, neumann_series_scalar, renewal_scalar, BaselineSpec, KernelShape,
};
use roughbook::hawkes_sim::{compensated_martingale, simulate_replicate, HawkesModel, IntensityMode};
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Exact event-by-event simulation of λ(t) = μ + Σ s·e^{−r(t−tᵢ)}
/// by decomposing the next arrival into a baseline and a decay candidate.
fn exact_exponential_count(mu: f64, s: f64, r: f64, horizon: f64, rng: &mut ChaCha8Rng) -> usize {
    let mut t = 0.0;
    let mut excess = 0.0f64;
    let mut n = 0;
    loop {
        let u1: f64 = rng.random();
        let s1 = -(1.0 - u1).ln() / mu;
        let u2: f64 = rng.random();
        let d = 1.0 + r * (1.0 - u2).ln() / excess.max(f64::MIN_POSITIVE);
        let s2 = if d > 0.0 { -d.ln() / r } else { f64::INFINITY };
        let tau = s1.min(s2);
        t += tau;
        if t > horizon {
            return n;
        }
        excess = excess * (-r * tau).exp() + s;
        n += 1;
    }
}

fn two_sample_chi_square(a: &[usize], b: &[usize]) -> f64 {
    let mut all: Vec<usize> = a.iter().chain(b).copied().collect();
    all.sort_unstable();
    // bins at pooled deciles
    let mut edges: Vec<usize> = (1..10).map(|k| all[k * all.len() / 10]).collect();
    edges.dedup();
    let bin = |x: usize| edges.iter().filter(|&&e| x >= e).count();
    let k = edges.len() + 1;
    let mut ca = vec![0.0; k];
    let mut cb = vec![0.0; k];
    for &x in a {
        ca[bin(x)] += 1.0;
    }
    for &x in b {
        cb[bin(x)] += 1.0;
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let mut stat = 0.0;
    for i in 0..k {
        let tot = ca[i] + cb[i];
        if tot == 0.0 {
            continue;
        }
        let ea = tot * na / (na + nb);
        let eb = tot * nb / (na + nb);
        stat += (ca[i] - ea).powi(2) / ea + (cb[i] - eb).powi(2) / eb;
    }
    1.0 - ChiSquared::new((k - 1) as f64).unwrap().cdf(stat)
}

#[test]
fn thinning_matches_exact_simulation() {
    let (mu, s, r, horizon) = (1.0, 0.5, 1.5, 20.0);
    let k = make_kernel(KernelShape::Exponential { scale: s, rate: r }).unwrap();
    let model = HawkesModel::scalar(BaselineSpec::constant(vec![mu]), k, 1.0).unwrap();
    let paths = 20_000;
    let thinned: Vec<usize> = (0..paths)
        .map(|i| simulate_replicate(&model, horizon, 2024, i).unwrap().events.len())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let exact: Vec<usize> = (0..paths)
        .map(|_| exact_exponential_count(mu, s, r, horizon, &mut rng))
        .collect();
    let p = two_sample_chi_square(&thinned, &exact);
    assert!(p > 1e-3, "p = {p}");
}

#[test]
fn direct_and_modal_intensity_agree_in_law() {
    let k = make_kernel(KernelShape::PowerLaw { scale: 0.4, alpha: 0.7 }).unwrap();
    let modal = HawkesModel::scalar(BaselineSpec::constant(vec![1.0]), k.clone(), 1.0).unwrap();
    let direct = modal.clone().with_mode(IntensityMode::Direct);
    let a: Vec<usize> = (0..3000).map(|i| simulate_replicate(&modal, 30.0, 5, i).unwrap().events.len()).collect();
    let b: Vec<usize> = (0..3000).map(|i| simulate_replicate(&direct, 30.0, 6, i).unwrap().events.len()).collect();
    let p = two_sample_chi_square(&a, &b);
    assert!(p > 1e-3, "p = {p}");
}

#[test]
fn neumann_series_matches_grid_solution() {
    for shape in [
        KernelShape::Exponential { scale: 0.5, rate: 1.0 },
        KernelShape::PowerLaw { scale: 0.3, alpha: 0.7 },
    ] {
        let k = make_kernel(shape).unwrap();
        let dt = 0.1;
        let n = 2001;
        let cells = k.cell_integrals(dt, n);
        let m = vec![1.0; n];
        let grid = renewal_scalar(&m, &cells, 1.0);
        let (series, terms) = neumann_series_scalar(&m, &cells, 1.0, k.l1_norm, 1e-9);
        assert!(terms > 5);
        let err = grid.iter().zip(&series).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err <= 1e-6, "err = {err}");
    }
}

#[test]
fn stable_mean_approaches_renewal_limit() {
    let k = make_kernel(KernelShape::Exponential { scale: 0.5, rate: 1.0 }).unwrap();
    let mp = mean_intensity_scalar(&BaselineSpec::constant(vec![1.0]), &k, 1.0, 200.0, 0.01).unwrap();
    // exact: E λ(t) = 2 − e^{−t/2}
    for (t, v) in mp.times.iter().zip(&mp.values).step_by(1000) {
        assert!((v[0] - (2.0 - (-t / 2.0).exp())).abs() < 5e-3, "t={t}");
    }
    // E N(t)/t = 2 − 2(1 − e^{−t/2})/t
    let nt = mp.cumulative(0).last().unwrap() / 200.0;
    assert!((nt - (2.0 - 2.0 * (1.0 - (-100.0f64).exp()) / 200.0)).abs() < 1e-3);
}

#[test]
fn martingale_mean_and_variance() {
    let k = make_kernel(KernelShape::Exponential { scale: 0.5, rate: 1.0 }).unwrap();
    let model = HawkesModel::scalar(BaselineSpec::constant(vec![1.0]), k, 1.0).unwrap();
    let paths = 1000;
    let horizon = 20.0;
    let mut m = vec![Vec::new(); 5];
    let mut q = vec![Vec::new(); 5];
    for i in 0..paths {
        let es = simulate_replicate(&model, horizon, 31, i).unwrap();
        let mp = compensated_martingale(&es, &model, 4.0).unwrap();
        for c in 0..5 {
            let mi = mp.m[c + 1][0];
            m[c].push(mi);
            q[c].push(mi * mi - mp.n[c + 1][0]);
        }
    }
    let z = |v: &[f64]| {
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        mean / (var / n).sqrt()
    };
    for c in 0..5 {
        assert!(z(&m[c]).abs() < 4.0, "E[M] checkpoint {c}: z = {}", z(&m[c]));
        assert!(z(&q[c]).abs() < 4.0, "E[M²−N] checkpoint {c}: z = {}", z(&q[c]));
    }
}
