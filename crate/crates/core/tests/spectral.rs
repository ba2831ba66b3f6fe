use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tdnls_core::numerics::adaptive_simpson;
use tdnls_core::oscillator::{build_derived, solve_fundamental, OscillatorModel};
use tdnls_core::spectral::io::{read_field_bin, write_field_bin};
use tdnls_core::spectral::{
    band_limited_interpolate, dft, inverse_dft, j_fractional, j_fractional_conjugated, j_vector, l2_norm,
    linf_norm, mdfm_apply, sample_physical, sobolev_seminorm, to_lens, to_original, Fourier, Frame, Grid,
    WaveState,
};
use std::sync::Arc;

fn gaussian(grid: Grid) -> WaveState {
    WaveState::from_fn(grid, 0.0, |x| {
        Complex64::new((-0.5 * x.iter().map(|v| v * v).sum::<f64>()).exp(), 0.0)
    })
}

fn random_state(grid: Grid, seed: u64) -> WaveState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = WaveState::zeros(grid, 0.0);
    for v in s.values.iter_mut() {
        *v = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    }
    s
}

fn max_diff(a: &ndarray::ArrayD<Complex64>, b: &ndarray::ArrayD<Complex64>) -> f64 {
    a.iter().zip(b.iter()).fold(0.0, |m, (x, y)| m.max((x - y).norm()))
}

#[test]
fn parseval_matches_direct_summation_oracle() {
    let grid = Grid::new(1, 64, 5.0).unwrap();
    let f = random_state(grid, 3);
    let fh = dft(&f);
    let x = grid.coords();
    let xi = grid.xi_centered();
    let h = grid.dx();
    for (k, &q) in xi.iter().enumerate() {
        let direct: Complex64 = f
            .values
            .iter()
            .zip(&x)
            .map(|(v, &xj)| v * Complex64::from_polar(h / (2.0 * PI).sqrt(), -xj * q))
            .sum();
        assert!((direct - fh.values[k]).norm() < 1e-12, "mode {k}");
    }
    assert!((fh.l2_norm() / l2_norm(&f) - 1.0).abs() < 1e-12);
}

#[test]
fn parseval_in_two_and_three_dimensions() {
    for (n, pts) in [(2, 32), (3, 16)] {
        let grid = Grid::new(n, pts, 4.0).unwrap();
        let f = random_state(grid, 11);
        let fh = dft(&f);
        assert!((fh.l2_norm() / l2_norm(&f) - 1.0).abs() < 1e-12);
        let back = inverse_dft(&fh);
        assert!(max_diff(&back.values, &f.values) < 1e-12);
    }
}

#[test]
fn gaussian_is_self_dual() {
    let grid = Grid::new(1, 128, 12.0).unwrap();
    let fh = dft(&gaussian(grid));
    for (k, q) in grid.xi_centered().iter().enumerate() {
        assert!((fh.values[k] - Complex64::new((-0.5 * q * q).exp(), 0.0)).norm() < 1e-12);
    }
}

#[test]
fn single_mode_gives_single_peak() {
    let grid = Grid::new(1, 64, PI).unwrap();
    let m = 5.0;
    let f = WaveState::from_fn(grid, 0.0, |x| Complex64::from_polar(1.0, m * x[0]));
    let fh = dft(&f);
    let xi = grid.xi_centered();
    let peak = (0..64).max_by(|&a, &b| fh.values[a].norm().total_cmp(&fh.values[b].norm())).unwrap();
    assert!((xi[peak] - m).abs() < 1e-12);
    let rest: f64 = (0..64).filter(|&k| k != peak).map(|k| fh.values[k].norm()).fold(0.0, f64::max);
    assert!(rest < 1e-12);
}

#[test]
fn mdfm_zero_time_is_identity() {
    let f = gaussian(Grid::new(1, 64, 8.0).unwrap());
    let out = mdfm_apply(&f, 0.0);
    assert_eq!(out.state.values, f.values);
}

#[test]
fn mdfm_matches_free_gaussian_and_both_paths_agree() {
    let grid = Grid::new(1, 256, 16.0).unwrap();
    let f = gaussian(grid);
    for s in [1.0, 2.0, -1.5] {
        let out = mdfm_apply(&f, s);
        let exact = WaveState::from_fn(grid, 0.0, |x| {
            let z = Complex64::new(1.0, s);
            z.powf(-0.5) * (-(x[0] * x[0]) / (2.0 * z)).exp()
        });
        let err: f64 = out
            .state
            .values
            .iter()
            .zip(exact.values.iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            * grid.dx();
        assert!(err.sqrt() < 1e-8, "s = {s}: {}", err.sqrt());
        assert!(!out.aliasing);
        assert!(out.discrepancy < 1e-6, "s = {s}: discrepancy {}", out.discrepancy);
        assert!((l2_norm(&out.state) / l2_norm(&f) - 1.0).abs() < 1e-12);
    }
}

#[test]
fn mdfm_flags_unresolved_chirp() {
    let f = gaussian(Grid::new(1, 64, 20.0).unwrap());
    assert!(mdfm_apply(&f, 0.1).aliasing);
}

#[test]
fn mdfm_two_dimensional_paths_agree() {
    let grid = Grid::new(2, 128, 12.0).unwrap();
    let out = mdfm_apply(&gaussian(grid), 1.0);
    assert!(!out.aliasing);
    assert!(out.discrepancy < 1e-6, "{}", out.discrepancy);
}

#[test]
fn lens_round_trip_and_identities() {
    for (n, pts) in [(1, 256), (2, 32)] {
        let grid = Grid::new(n, pts, 6.0).unwrap();
        let u = random_state(grid, 5);
        for (y1, dy1) in [(1.7, 0.3), (0.4, -0.9), (-1.3, 0.2)] {
            let v = to_lens(&u, y1, dy1).unwrap();
            assert!((l2_norm(&v) / l2_norm(&u) - 1.0).abs() < 1e-14);
            let lhs = linf_norm(&u);
            let rhs = y1.abs().powf(-0.5 * n as f64) * linf_norm(&v);
            assert!((lhs / rhs - 1.0).abs() < 1e-14);
            let back = to_original(&v).unwrap();
            assert!(max_diff(&back.values, &u.values) < 1e-12);
            assert!((back.grid.scale - 1.0).abs() < 1e-15);
            assert_eq!(back.frame, Frame::Original);
        }
    }
}

#[test]
fn lens_with_unit_y1_is_identity() {
    let u = random_state(Grid::new(1, 64, 3.0).unwrap(), 1);
    let v = to_lens(&u, 1.0, 0.0).unwrap();
    assert_eq!(v.values, u.values);
    assert_eq!(v.grid.scale, 1.0);
}

#[test]
fn lens_rejects_small_y1_and_wrong_frame() {
    let u = gaussian(Grid::new(1, 64, 8.0).unwrap());
    assert!(to_lens(&u, 1e-14, 0.0).is_err());
    assert!(to_original(&u).is_err());
    let v = to_lens(&u, 2.0, 0.0).unwrap();
    assert!(to_lens(&v, 2.0, 0.0).is_err());
}

#[test]
fn lens_field_maps_to_the_formula_pointwise() {
    // v(x) = e^{−i y1 y1' x²/2} |y1|^{1/2} u(y1 x), checked against the analytic u.
    let grid = Grid::new(1, 256, 16.0).unwrap();
    let u_fn = |x: f64| Complex64::new((-0.5 * x * x).exp(), 0.0) * Complex64::from_polar(1.0, 0.3 * x);
    let u = WaveState::from_fn(grid, 0.0, |x| u_fn(x[0]));
    let (y1, dy1) = (-1.5, 0.25);
    let v = to_lens(&u, y1, dy1).unwrap();
    for (j, x) in v.grid.coords().iter().enumerate().skip(1) {
        let expect = Complex64::from_polar(y1.abs().sqrt(), -0.5 * y1 * dy1 * x * x) * u_fn(y1 * x);
        assert!((v.values[j] - expect).norm() < 1e-12, "j={j}");
    }
}

#[test]
fn interpolation_reproduces_the_field_and_crosses_frames() {
    let grid = Grid::new(1, 256, 16.0).unwrap();
    let u = gaussian(grid);
    let same = band_limited_interpolate(&u, &[grid.coords()]);
    assert!(max_diff(&same, &u.values) < 1e-12);
    let off: Vec<f64> = vec![0.123, -2.5, 3.3, 100.0];
    let vals = band_limited_interpolate(&u, &[off.clone()]);
    for (k, x) in off.iter().enumerate() {
        let e = if x.abs() < 16.0 { (-0.5 * x * x).exp() } else { 0.0 };
        assert!((vals[[k]].re - e).abs() < 1e-12 && vals[[k]].im.abs() < 1e-12);
    }
    let v = to_lens(&u, 1.3, 0.05).unwrap();
    let back = sample_physical(&v, &grid).unwrap();
    assert!(max_diff(&back, &u.values) < 1e-10);
}

#[test]
fn j_at_zero_y_is_multiplication_by_x() {
    let grid = Grid::new(1, 128, 10.0).unwrap();
    let f = gaussian(grid);
    let fourier = Fourier::new(&grid);
    let j = j_vector(&fourier, &f, 0.0);
    for (k, x) in grid.coords().iter().enumerate() {
        assert!((j[0].values[k] - f.values[k] * x).norm() < 1e-13);
    }
}

#[test]
fn j_on_modulated_gaussian_matches_symbolic_derivative() {
    let grid = Grid::new(1, 256, 16.0).unwrap();
    let (k0, y) = (1.5, 0.7);
    let f = WaveState::from_fn(grid, 0.0, |x| Complex64::from_polar((-0.5 * x[0] * x[0]).exp(), k0 * x[0]));
    let j = j_vector(&Fourier::new(&grid), &f, y);
    for (k, &x) in grid.coords().iter().enumerate() {
        let expect = f.values[k] * Complex64::new(x - y * k0, -y * x);
        assert!((j[0].values[k] - expect).norm() < 1e-10);
    }
}

#[test]
fn j_conjugates_the_chirp() {
    // J(e^{i|x|²/2Y} g) = e^{i|x|²/2Y} (iY∇g).
    let grid = Grid::new(1, 512, 12.0).unwrap();
    let y = 3.0;
    let fourier = Fourier::new(&grid);
    let g = gaussian(grid);
    let chirp = |x: f64| Complex64::from_polar(1.0, 0.5 * x * x / y);
    let mg = WaveState::from_fn(grid, 0.0, |x| chirp(x[0]) * (-0.5 * x[0] * x[0]).exp());
    let j = j_vector(&fourier, &mg, y);
    for (k, &x) in grid.coords().iter().enumerate() {
        let expect = chirp(x) * Complex64::new(0.0, y) * (-x) * g.values[k];
        assert!((j[0].values[k] - expect).norm() < 1e-9, "x = {x}");
    }
}

#[test]
fn fractional_j_tends_to_full_j_in_norm() {
    let grid = Grid::new(1, 512, 12.0).unwrap();
    let fourier = Fourier::new(&grid);
    let f = WaveState::from_fn(grid, 0.0, |x| Complex64::from_polar((-0.5 * x[0] * x[0]).exp(), 0.8 * x[0]));
    let y = 2.0;
    let full = j_vector(&fourier, &f, y);
    let full_norm = l2_norm(&full[0]);
    let frac = j_fractional(&fourier, &f, y, 1.0 - 1e-6);
    assert!(!frac.aliasing);
    assert!((frac.l2_norm() / full_norm - 1.0).abs() < 1e-4);
    let conj = j_fractional_conjugated(&fourier, &f, y, 0.6);
    let fac = j_fractional(&fourier, &f, y, 0.6);
    // ‖|x|^γ e^{−iYΔ/2} f‖² by quadrature of the closed-form Gaussian density.
    let (k0, g) = (0.8, 0.6);
    let density = |x: f64| {
        let w = 1.0 + y * y;
        x.abs().powf(2.0 * g) * (-(x + y * k0).powi(2) / w).exp() / w.sqrt()
    };
    let exact = (adaptive_simpson(&density, -40.0, 0.0, 1e-13) + adaptive_simpson(&density, 0.0, 40.0, 1e-13)).sqrt();
    assert!((l2_norm(&conj) / exact - 1.0).abs() < 1e-4, "{} vs {exact}", l2_norm(&conj));
    // The chirp-factorised route integrates a |ξ|^γ kink on the coarser dual grid.
    assert!((fac.l2_norm() / exact - 1.0).abs() < 1e-2, "{} vs {exact}", fac.l2_norm());
}

#[test]
fn j_operator_reads_lens_time_from_derived() {
    let pair = Arc::new(solve_fundamental(&OscillatorModel::zero(1.0), 50.0, 1e-10).unwrap());
    let derived = build_derived(pair, 1, 3.0, 1.0, 50.0).unwrap();
    let grid = Grid::new(1, 256, 16.0).unwrap();
    let mut f = gaussian(grid);
    f.t = 4.0;
    let j = tdnls_core::spectral::j_operator(&f, &derived, 1.0).unwrap();
    let manual = j_vector(&Fourier::new(&grid), &f, 2.0);
    assert!(max_diff(&j.components[0].values, &manual[0].values) < 1e-12);
}

#[test]
fn sobolev_seminorms() {
    let grid = Grid::new(1, 256, 16.0).unwrap();
    let f = gaussian(grid);
    assert!((sobolev_seminorm(&f, 0.0) / l2_norm(&f) - 1.0).abs() < 1e-12);
    let exact = (PI.sqrt() / 2.0).sqrt();
    assert!((sobolev_seminorm(&f, 1.0) - exact).abs() < 1e-10);
    let grid = Grid::new(1, 64, PI).unwrap();
    let m = WaveState::from_fn(grid, 0.0, |x| Complex64::from_polar(2.0, 3.0 * x[0]));
    let r = sobolev_seminorm(&m, 1.5) / l2_norm(&m);
    assert!((r - 3f64.powf(1.5)).abs() < 1e-10);
}

#[test]
fn binary_dump_round_trips() {
    let u = random_state(Grid::new(2, 16, 3.0).unwrap(), 9);
    let v = to_lens(&u, -0.8, 0.1).unwrap();
    let mut buf = Vec::new();
    write_field_bin(&v, &mut buf).unwrap();
    assert_eq!(buf.len(), 8 * (8 + 2 * 256));
    let back = read_field_bin(buf.as_slice()).unwrap();
    assert_eq!(back, v);
    assert!(read_field_bin(&buf[..40]).is_err());
}

#[test]
fn invalid_grids_are_rejected() {
    assert!(Grid::new(1, 100, 1.0).is_err());
    assert!(Grid::new(1, 8, 1.0).is_err());
    assert!(Grid::new(4, 16, 1.0).is_err());
    assert!(Grid::new(3, 256, 1.0).is_err());
    assert!(Grid::new(1, 16, -1.0).is_err());
}
