use roughbook::analytics::linear_fit;
use roughbook::lob_spde::*;
use roughbook::rough_volterra::{coarsen_increments, solve_y_fractional, VolterraParams};

fn flat_y(horizon: f64) -> roughbook::rough_volterra::VolterraPath {
    let p = VolterraParams::new(0.7, 0.3, 0.0, 1.0, horizon, 64).unwrap();
    let mut vp = solve_y_fractional(&p, 0).unwrap();
    vp.y = vec![1.0; 65];
    vp
}

#[test]
fn linear_regime_matches_sine_series() {
    let p = BookParams::linear(0.1, 0.1, 1.0);
    // mode 2 is odd about 0 and negative on x > 0; its negative has the book's signs
    let mut u0 = BookGrid::zeros(&p);
    for (u, x) in u0.u.iter_mut().zip(&u0.x) {
        *u = -heat_mode(&p, 2, *x, 0.0);
    }
    let s = simulate_book(&p, &u0, &flat_y(1.0), 1, 1.0, 1e-4, usize::MAX).unwrap();
    let exact: Vec<f64> = s.x.iter().map(|x| -heat_mode(&p, 2, *x, 1.0)).collect();
    assert!(relative_l2(s.final_state(), &exact) <= 1e-3);
}

#[test]
fn zero_book_is_invariant_with_noise() {
    let p = BookParams::reference();
    let vp = solve_y_fractional(&VolterraParams::new(0.7, 0.334, 0.6, 1.6, 1.0, 1024).unwrap(), 2).unwrap();
    let s = simulate_book(&p, &BookGrid::zeros(&p), &vp, 9, 1.0, 1e-3, 50).unwrap();
    assert!(s.snapshots.iter().all(|u| u.iter().all(|v| *v == 0.0)));
    assert_eq!(s.clamp_mass, 0.0);
}

#[test]
fn boundaries_and_sign_zones_hold() {
    let p = BookParams::reference();
    let vp = solve_y_fractional(&VolterraParams::new(0.7, 0.334, 0.6, 1.6, 1.0, 1024).unwrap(), 4).unwrap();
    let u0 = BookGrid::reference_profile(&p);
    let s = simulate_book(&p, &u0, &vp, 4, 1.0, 1e-3, 10).unwrap();
    let m = p.nodes;
    for u in &s.snapshots {
        assert_eq!(u[0], 0.0);
        assert_eq!(u[m], 0.0);
        for (x, v) in s.x.iter().zip(u) {
            assert!(!(*x > 0.0 && *v < 0.0) && !(*x < 0.0 && *v > 0.0));
        }
    }
    assert!(s.clamp_fraction() <= 0.01, "clamp {}", s.clamp_fraction());
}

#[test]
fn driftless_noise_is_a_martingale() {
    let mut p = BookParams::linear(1e-12, 0.0, 1.0);
    p.c = 0.8;
    let u0 = BookGrid::reference_profile(&p);
    let vp = flat_y(0.5);
    let paths = 2000;
    let node = 300;
    let mut vals = Vec::with_capacity(paths);
    for seed in 0..paths as u64 {
        let s = simulate_book(&p, &u0, &vp, seed, 0.5, 5e-3, usize::MAX).unwrap();
        vals.push(s.final_state()[node]);
    }
    let n = paths as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let u = u0.u[node];
    assert!((mean - u).abs() <= 4.0 * (var / n).sqrt(), "mean {mean} vs {u}");
    // geometric oracle: Var = u²(exp(c²∫y) − 1)
    let expected = u * u * ((0.64f64 * 0.5).exp() - 1.0);
    let se_var = var * (2.0 / (n - 1.0)).sqrt() * 2.0;
    assert!((var - expected).abs() <= 4.0 * se_var, "var {var} vs {expected}");
}

#[test]
fn milstein_refinement_is_first_order() {
    let mut p = BookParams::reference();
    p.noise_scheme = NoiseScheme::Milstein;
    let u0 = BookGrid::reference_profile(&p);
    let levels = [1000usize, 2000, 4000, 8000];
    let mut errs = [0.0; 3];
    for seed in 0..4 {
        let fine = book_increments(seed, 8000, 1.0 / 8000.0);
        let finals: Vec<Vec<f64>> = levels
            .iter()
            .map(|&n| {
                let noise = coarsen_increments(&fine, 8000 / n);
                let s = simulate_book_with_noise(&p, &u0, &|_| 1.6, 1.0, &noise, 1.0, usize::MAX).unwrap();
                s.final_state().to_vec()
            })
            .collect();
        for i in 0..3 {
            errs[i] += relative_l2(&finals[i], &finals[i + 1]);
        }
    }
    let lx: Vec<f64> = levels[..3].iter().map(|n| (1.0 / *n as f64).ln()).collect();
    let ly: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    assert!(linear_fit(&lx, &ly).0 >= 0.8);
}

#[test]
fn stops_when_variance_exceeds_cap() {
    let mut p = BookParams::reference();
    p.y_cap = Some(0.3);
    let vp = solve_y_fractional(&VolterraParams::new(0.7, 0.334, 0.0, 1.6, 1.0, 1024).unwrap(), 0).unwrap();
    let s = simulate_book(&p, &BookGrid::reference_profile(&p), &vp, 1, 1.0, 1e-3, 100).unwrap();
    let t = s.stopped_at.expect("cap reached");
    assert!(t > 0.0 && t < 1.0);
    assert_eq!(*s.times.last().unwrap(), t);
}

#[test]
fn short_variance_path_rejected() {
    let p = BookParams::reference();
    assert!(matches!(
        simulate_book(&p, &BookGrid::reference_profile(&p), &flat_y(0.5), 1, 1.0, 1e-3, 1),
        Err(BookError::VolterraPathTooShort { .. })
    ));
}

#[test]
fn profile_from_points_interpolates() {
    let p = BookParams::reference();
    let g = BookGrid::from_points(&p, &[(-0.5, -1.0), (0.0, 0.0), (0.5, 1.0)]).unwrap();
    let i = g.x.iter().position(|x| (*x - 0.25).abs() < 1e-12).unwrap();
    assert!((g.u[i] - 0.5).abs() < 1e-12);
    assert_eq!(g.u[p.nodes], 0.0);
}
