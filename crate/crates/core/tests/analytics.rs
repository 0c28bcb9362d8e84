use rand_distr::{Distribution, StandardNormal};
use roughbook::analytics::*;
use roughbook::rng;

#[test]
fn estimator_calibration_on_fbm() {
    for (k, h) in [0.1, 0.2, 0.3, 0.5].into_iter().enumerate() {
        let mut r = rng::stream(2024, "fbm", k as u64);
        let mut errs: Vec<f64> = (0..100)
            .map(|_| {
                let path = fbm_davies_harte(2048, h, 1.0 / 2048.0, &mut r).unwrap();
                let rv: Vec<f64> = path.iter().map(|v| v.exp()).collect();
                (roughness_of_values(&rv).unwrap() - h).abs()
            })
            .collect();
        errs.sort_by(f64::total_cmp);
        let med = 0.5 * (errs[49] + errs[50]);
        assert!(med <= 0.05, "H={h}: median abs error {med}");
    }
}

#[test]
fn realized_vol_recovers_step_volatility() {
    let sigma = 0.01;
    let mut r = rng::stream(3, "test", 0);
    let n = 10_000;
    let mut s = vec![100.0];
    for _ in 0..n {
        let z: f64 = StandardNormal.sample(&mut r);
        let last = *s.last().unwrap();
        s.push(last * (sigma * z).exp());
    }
    let t: Vec<f64> = (0..=n).map(|i| i as f64).collect();
    let rv = realized_vol(&t, &s, n as f64 + 1.0).unwrap();
    let est = rv.rv[0] / (n as f64).sqrt();
    assert!((est - sigma).abs() / sigma < 0.1);
}

#[test]
fn short_series_rejected() {
    assert!(matches!(
        roughness_of_values(&[1.0; 100]),
        Err(AnalyticsError::Hurst(HurstError::SeriesTooShort { .. }))
    ));
}

#[test]
fn peak_variance_orders_with_drift() {
    let x: Vec<f64> = (-50..=50).map(|i| i as f64 * 0.02).collect();
    let snapshots = |drift: f64| -> Vec<Vec<f64>> {
        (0..40)
            .map(|k| {
                let c = 0.3 + drift * (k as f64 / 40.0);
                x.iter()
                    .map(|&xi| {
                        let a = xi.abs();
                        xi.signum() * (-(a - c).powi(2) / 0.01).exp()
                    })
                    .collect()
            })
            .collect()
    };
    let still = depth_profile(&x, &snapshots(0.0)).unwrap();
    let slow = depth_profile(&x, &snapshots(0.2)).unwrap();
    let fast = depth_profile(&x, &snapshots(0.5)).unwrap();
    assert!(still.ask_peak_var < 1e-20);
    assert!(slow.ask_peak_var > 0.0 && fast.ask_peak_var > slow.ask_peak_var);
    let total = trapezoid(&x, &still.mean_abs);
    assert!((total - still.mean_mass).abs() < 1e-12);
}

#[test]
fn report_is_ndjson() {
    let recs = vec![
        ReportRecord::point("clamp_fraction", 0.002, 1),
        ReportRecord::median_of("roughness", &[0.1, 0.2, 0.3, 0.15, 0.12]).unwrap(),
    ];
    let mut buf = Vec::new();
    write_report(&mut buf, &recs).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    let back: ReportRecord = serde_json::from_str(lines[1]).unwrap();
    assert_eq!(back, recs[1]);
}
