use tdnls_core::numerics::{adaptive_simpson, fit_line, integrate, trapezoid, OdeError, Tolerance};

const TIGHT: Tolerance = Tolerance {
    rtol: 1e-12,
    atol: 1e-12,
};

#[test]
fn harmonic_oscillator_dense_output() {
    let sol = integrate(|_, y| [y[1], -y[0]], 0.0, [1.0, 0.0], 20.0, TIGHT, 100_000).unwrap();
    for i in 0..=400 {
        let t = 20.0 * i as f64 / 400.0;
        let y = sol.eval(t).unwrap();
        assert!((y[0] - t.cos()).abs() < 1e-9, "t={t} err={}", y[0] - t.cos());
        assert!((y[1] + t.sin()).abs() < 1e-9);
    }
}

#[test]
fn error_follows_the_tolerance() {
    let err_at = |rtol: f64| {
        let tol = Tolerance { rtol, atol: rtol };
        let sol = integrate(|_, y| [y[0]], 0.0, [1.0], 2.0, tol, 100_000).unwrap();
        (sol.eval(2.0).unwrap()[0] - 2f64.exp()).abs()
    };
    assert!(err_at(1e-10) < err_at(1e-6));
    assert!(err_at(1e-10) < 1e-8);
}

#[test]
fn out_of_range_is_an_error() {
    let sol = integrate(|_, y| [y[0]], 0.0, [1.0], 1.0, TIGHT, 1000).unwrap();
    assert!(matches!(sol.eval(1.5), Err(OdeError::OutOfRange { .. })));
    assert!(matches!(sol.eval(-0.1), Err(OdeError::OutOfRange { .. })));
}

#[test]
fn non_finite_rhs_reported() {
    assert!(integrate(|t, y| [y[0] / (1.0 - t)], 0.0, [1.0], 2.0, TIGHT, 100_000).is_err());
}

#[test]
fn append_joins_pieces() {
    let mut a = integrate(|_, y| [y[1], -y[0]], 0.0, [1.0, 0.0], 1.0, TIGHT, 10_000).unwrap();
    let y1 = a.eval(1.0).unwrap();
    let b = integrate(|_, y| [y[1], -y[0]], 1.0, y1, 3.0, TIGHT, 10_000).unwrap();
    a.append(b);
    assert!((a.eval(2.5).unwrap()[0] - 2.5f64.cos()).abs() < 1e-9);
    assert_eq!(a.end(), 3.0);
}

#[test]
fn simpson_is_exact_on_cubics_and_accurate_on_reciprocal() {
    assert!(adaptive_simpson(&|x: f64| x * x * x - 2.0 * x, 0.0, 2.0, 1e-12).abs() < 1e-12);
    assert!((adaptive_simpson(&|x: f64| 1.0 / x, 1.0, 50.0, 1e-10) - 50f64.ln()).abs() < 1e-9);
}

#[test]
fn trapezoid_is_exact_on_lines() {
    assert!((trapezoid(&[0.0, 0.5, 2.0], &[1.0, 2.0, 5.0]) - 6.0).abs() < 1e-15);
}

#[test]
fn line_fit_recovers_exact_line_and_rejects_degenerate_input() {
    let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
    let ys: Vec<f64> = xs.iter().map(|x| 3.0 - 0.5 * x).collect();
    let f = fit_line(&xs, &ys).unwrap();
    assert!((f.slope + 0.5).abs() < 1e-14);
    assert!((f.intercept - 3.0).abs() < 1e-13);
    assert!(f.rms < 1e-13);
    assert!(fit_line(&[1.0], &[2.0]).is_none());
    assert!(fit_line(&[1.0, 1.0], &[2.0, 3.0]).is_none());
}
