use nalgebra::Matrix4;
use proptest::prelude::*;
use roughbook::hawkes_core::{build_phi0, validate_betas, BetaError};

fn betas() -> impl Strategy<Value = (f64, f64, f64)> {
    (0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0)
        .prop_map(|(x, y, b3)| (x, x * y, b3))
        .prop_filter("admissible", |&(b1, b2, b3)| validate_betas(b1, b2, b3).is_ok())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn closed_form_eigensystem((b1, b2, b3) in betas()) {
        let b = validate_betas(b1, b2, b3).unwrap();
        let p = build_phi0(&b);
        let m = Matrix4::from_fn(|i, j| p.entries[j][i]);
        let mut numeric: Vec<f64> = m.complex_eigenvalues().iter().map(|c| c.re).collect();
        numeric.sort_by(|x, y| y.total_cmp(x));
        for i in 0..4 {
            let rel = (numeric[i] - p.lambda(i)).abs() / p.lambda(i);
            prop_assert!(rel <= 1e-10, "λ{} closed {} numeric {}", i + 1, p.lambda(i), numeric[i]);
        }
        for i in 0..3 {
            prop_assert!(p.lambda(i) > p.lambda(i + 1));
        }
        prop_assert!(p.lambda(3) > 0.0);
        prop_assert!(p.eigen_residual() <= 1e-12);
    }

    #[test]
    fn projection_round_trip((b1, b2, b3) in betas(), x in prop::array::uniform4(-5.0f64..5.0)) {
        let p = build_phi0(&validate_betas(b1, b2, b3).unwrap());
        let back = p.unproject(&p.project(&x));
        for i in 0..4 {
            prop_assert!((back[i] - x[i]).abs() <= 1e-9 * (1.0 + x[i].abs()));
        }
    }
}

#[test]
fn invalid_betas_name_the_violation() {
    assert!(matches!(validate_betas(0.3, 0.5, 0.5), Err(BetaError::OrderingViolation { .. })));
    assert!(matches!(validate_betas(0.6, 0.3, 1.5), Err(BetaError::Beta3Range { .. })));
    assert!(matches!(validate_betas(0.5, 0.2, 0.5), Err(BetaError::SupercriticalSum { .. })));
    assert!(matches!(validate_betas(0.95, 0.5, 0.5), Err(BetaError::SubcriticalSum { .. })));
    assert!(matches!(validate_betas(f64::NAN, 0.5, 0.5), Err(BetaError::NonFinite(..))));
}

#[test]
fn betas_reject_unknown_fields() {
    let ok: Result<roughbook::hawkes_core::BetaParams, _> =
        serde_json::from_str(r#"{"beta1":0.6,"beta2":0.3,"beta3":0.5}"#);
    assert!(ok.is_ok());
    let bad: Result<roughbook::hawkes_core::BetaParams, _> =
        serde_json::from_str(r#"{"beta1":0.6,"beta2":0.3,"beta3":0.5,"beta4":1}"#);
    assert!(bad.is_err());
}
