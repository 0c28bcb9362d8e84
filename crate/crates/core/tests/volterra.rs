use roughbook::analytics::{fbm_davies_harte, linear_fit};
use roughbook::hawkes_core::{critical_scale, validate_betas};
use roughbook::rng;
use roughbook::rough_volterra::*;

fn params(kappa: f64, n: usize) -> VolterraParams {
    VolterraParams::new(0.7, 0.334, kappa, 1.6, 1.0, n).unwrap()
}

#[test]
fn deterministic_solution_matches_relaxation() {
    let p = params(0.0, 4096);
    let y = mean_of_y(&p).unwrap();
    let exact = relaxation_oracle(&p, 1.0).unwrap();
    assert!((y[4096] - exact).abs() / exact <= 1e-3);
}

#[test]
fn long_run_mean_approaches_theta() {
    let p = VolterraParams::new(0.7, 0.334, 0.0, 1.6, 200.0, 20_000).unwrap();
    let y = mean_of_y(&p).unwrap();
    let exact = relaxation_oracle(&p, 200.0).unwrap();
    assert!((y[20_000] - exact).abs() / exact < 2e-3);
    // E_{α,1}(−x) ≈ 1/(xΓ(1−α)) − 1/(x²Γ(1−2α)) for large x
    let x = 0.334 * 200f64.powf(0.7);
    let gamma = roughbook::special::gamma;
    let asym = 1.6 * (1.0 - 1.0 / (x * gamma(0.3)) + 1.0 / (x * x * gamma(-0.4)));
    assert!((exact - asym).abs() / asym < 1e-3);
    assert!(y[20_000] < 1.6 && y[20_000] > 0.97 * 1.6);
}

#[test]
fn forms_converge_under_shared_noise() {
    let p = params(0.6, 4096);
    let levels = [512, 1024, 2048, 4096];
    let mut mean_gap = [0.0; 4];
    for r in 0..10 {
        for (i, (_, g)) in form_discrepancy(&p, 17, r, &levels).unwrap().iter().enumerate() {
            mean_gap[i] += g / 10.0;
        }
    }
    let lx: Vec<f64> = levels.iter().map(|n| (1.0 / *n as f64).ln()).collect();
    let ly: Vec<f64> = mean_gap.iter().map(|g| g.ln()).collect();
    let (slope, _, _) = linear_fit(&lx, &ly);
    assert!(slope >= 0.6, "slope {slope}");
}

#[test]
fn monte_carlo_mean_tracks_deterministic_mean() {
    let p = params(0.6, 256);
    let det = mean_of_y(&p).unwrap();
    let solver = VolterraSolver::new(p, VolterraForm::FractionalKernel).unwrap();
    let paths = 2000;
    let mut sum = vec![0.0; 257];
    let mut sq = vec![0.0; 257];
    for r in 0..paths {
        let noise = brownian_increments_replicate(5, r, 256, p.dt());
        let vp = solver.solve(&noise).unwrap();
        for (i, v) in vp.y_raw.iter().enumerate() {
            sum[i] += v;
            sq[i] += v * v;
        }
    }
    let n = paths as f64;
    let mut worst: f64 = 0.0;
    for i in [64, 128, 192, 256] {
        let m = sum[i] / n;
        let se = ((sq[i] / n - m * m) / (n - 1.0)).sqrt();
        worst = worst.max((m - det[i]).abs() / se);
    }
    assert!(worst <= 3.0, "sup |mean − det|/SE = {worst}");
}

#[test]
fn mean_increases_with_reversion_speed() {
    let mut prev = 0.0;
    for nu in [0.1, 0.3, 1.0, 3.0] {
        let p = VolterraParams::new(0.7, nu, 0.0, 1.6, 1.0, 1024).unwrap();
        let y = mean_of_y(&p).unwrap()[1024];
        assert!(y > prev);
        prev = y;
    }
}

#[test]
fn positivity_accounting() {
    let p = params(0.6, 4096);
    let vp = solve_y_mittag_leffler(&p, 3).unwrap();
    assert!(vp.y.iter().all(|v| *v >= 0.0));
    assert_eq!(vp.y.len(), vp.times.len());
    assert!(vp.clamp_fraction() <= 0.05);
}

#[test]
fn hurst_estimates() {
    let p = VolterraParams::new(0.7, 0.334, 0.6, 1.6, 8.0, 16384).unwrap();
    let mut hs: Vec<f64> = (0..9).map(|s| hurst_of_path(&solve_y_fractional(&p, s).unwrap()).unwrap()).collect();
    hs.sort_by(f64::total_cmp);
    assert!((hs[4] - 0.2).abs() <= 0.1, "median {}", hs[4]);

    let mut r = rng::stream(8, "test", 0);
    let bm = fbm_davies_harte(4096, 0.5, 1.0, &mut r).unwrap();
    let mut vp = solve_y_fractional(&params(0.6, 4096), 1).unwrap();
    vp.y = bm;
    assert!((hurst_of_path(&vp).unwrap() - 0.5).abs() <= 0.05);

    vp.y.truncate(100);
    assert!(matches!(hurst_of_path(&vp), Err(VolterraError::PathTooShort { .. })));
}

#[test]
fn constants_from_order_flow_model() {
    let b = validate_betas(0.6, 0.3, 0.5).unwrap();
    let k = critical_scale(&b, 0.7).unwrap();
    let p = VolterraParams::from_model(&b, &k, 1.0, 1.0, 1.0, 1024).unwrap();
    let phi0 = roughbook::hawkes_core::build_phi0(&b);
    assert_eq!(p.theta, phi0.ones_dot_v1());
    assert_eq!(p.alpha, 0.7);
    assert!(p.nu_bar > 0.0 && p.kappa_bar > 0.0);
}
