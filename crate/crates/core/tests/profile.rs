use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use tdnls_core::criticality::Nonlinearity;
use tdnls_core::oscillator::{build_derived, solve_fundamental, OscillatorDerived, OscillatorModel};
use tdnls_core::profile::{
    amplitude_closed_form, amplitude_ode, compare_pde_vs_ode, extract_profile, ode_for_track, remainder,
    select_frequencies, track_profile, write_profile_series, OdeHistories, ProfileError, TrackOptions,
};
use tdnls_core::solver::{InitialData, RunSettings, SimConfig};
use tdnls_core::spectral::{to_lens, Grid, WaveState};

fn derived(model: OscillatorModel, p: f64, horizon: f64) -> OscillatorDerived {
    let pair = Arc::new(solve_fundamental(&model, horizon, 1e-12).unwrap());
    let t0 = model.t0;
    build_derived(pair, 1, p, t0, horizon).unwrap()
}

fn lens_gaussian(d: &OscillatorDerived, grid: Grid, t: f64, amp: f64) -> WaveState {
    let u = WaveState::from_fn(grid, t, |x| Complex64::new(amp * (-0.5 * x[0] * x[0]).exp(), 0.3 * x[0]));
    let e = d.pair().eval(t).unwrap();
    to_lens(&u, e.y1, e.dy1).unwrap()
}

fn small_config(model: OscillatorModel, p: f64, eps: f64, t_end: f64) -> SimConfig {
    let mut run = RunSettings::new(model.t0, t_end, 0.01);
    run.initial_data = InitialData::Gaussian {
        width: 1.0,
        amplitude: eps,
        center: Vec::new(),
        chirp: 0.0,
    };
    run.record_every = 5;
    run.cheap_diagnostics = true;
    SimConfig {
        grid: Grid::new(1, 1024, 60.0).unwrap(),
        oscillator: model,
        nonlinearity: Nonlinearity::new(p, 0.0, -1.0).unwrap(),
        run,
    }
}

#[test]
fn profile_is_the_chirped_transform_and_is_unitary() {
    let d = derived(OscillatorModel::attractive(3.0 / 16.0, 1.0).unwrap(), 3.0, 20.0);
    let grid = Grid::new(1, 64, 8.0).unwrap();
    let v = lens_gaussian(&d, grid, 3.0, 1.0);
    let prof = extract_profile(&v, &d).unwrap();
    assert!((prof.l2_norm() - v.l2_norm()).abs() < 1e-12);

    // Direct sum (2π)^(−1/2) Σ v(x_j) e^{−ix_jξ} Δx, then e^{iYξ²}.
    let y = d.lens_time(3.0).unwrap();
    let x = v.grid.coords();
    let xi = prof.xi();
    let dx = v.grid.dx();
    for (k, &q) in xi.iter().enumerate() {
        let f: Complex64 = x
            .iter()
            .zip(v.values.iter())
            .map(|(&xj, &vj)| vj * Complex64::from_polar(dx / (2.0 * PI).sqrt(), -xj * q))
            .sum();
        let expect = f * Complex64::from_polar(1.0, y * q * q);
        assert!((prof.values[[k]] - expect).norm() < 1e-12);
    }
}

#[test]
fn original_frame_states_are_rejected() {
    let d = derived(OscillatorModel::zero(1.0), 3.0, 10.0);
    let u = WaveState::zeros(Grid::new(1, 32, 4.0).unwrap(), 2.0);
    assert_eq!(extract_profile(&u, &d), Err(ProfileError::NotLensFrame));
}

#[test]
fn remainder_vanishes_for_zero_data_and_linear_coupling() {
    let d = derived(OscillatorModel::attractive(3.0 / 16.0, 1.0).unwrap(), 3.0, 20.0);
    let grid = Grid::new(1, 64, 8.0).unwrap();
    let v = lens_gaussian(&d, grid, 2.0, 1.0);
    let linear = Nonlinearity::new(3.0, 0.0, 0.0).unwrap();
    assert_eq!(remainder(&v, &linear, &d).unwrap().linf, 0.0);
    let mut zero = v.clone();
    zero.values.fill(Complex64::new(0.0, 0.0));
    let nl = Nonlinearity::new(3.0, 0.4, -1.0).unwrap();
    assert_eq!(remainder(&zero, &nl, &d).unwrap().linf, 0.0);
    assert!(remainder(&v, &nl, &d).unwrap().linf > 0.0);
}

#[test]
fn closed_form_solves_the_amplitude_ode() {
    let d = derived(OscillatorModel::attractive(3.0 / 16.0, 1.0).unwrap(), 3.0, 40.0);
    let nl = Nonlinearity::new(3.0, 0.2, -0.7).unwrap();
    let k = d.dispersion_exponent();
    let a0 = 0.8;
    let a = |t: f64| amplitude_closed_form(a0, &nl, d.y2_between(1.0, t).unwrap());
    for t in [1.5, 3.0, 10.0, 30.0] {
        let h = 1e-3;
        let d1 = (a(t + h) - a(t - h)) / (2.0 * h);
        let d2 = (a(t + 2.0 * h) - a(t - 2.0 * h)) / (4.0 * h);
        let deriv = (4.0 * d1 - d2) / 3.0;
        let rhs = -nl.lambda_im.abs() * d.pair().y2(t).unwrap().abs().powf(-k) * a(t).powf(nl.p);
        assert!((deriv - rhs).abs() < 1e-10, "t = {t}: {deriv} vs {rhs}");
    }
}

#[test]
fn closed_form_limits() {
    let conservative = Nonlinearity::new(3.0, 1.0, 0.0).unwrap();
    assert_eq!(amplitude_closed_form(0.7, &conservative, 1e6), 0.7);
    let nl = Nonlinearity::new(3.0, 0.0, -1.0).unwrap();
    // Y₂ → ∞: a ~ ((p−1)|Im λ|Y₂)^(−1/(p−1)).
    let y2 = 1e10;
    let a = amplitude_closed_form(0.5, &nl, y2);
    assert!((a * (2.0 * y2).sqrt() - 1.0).abs() < 1e-8);
    // Bounded Y₂ leaves a positive limit.
    let sup = Nonlinearity::new(4.0, 0.0, -1.0).unwrap();
    let d = derived(OscillatorModel::zero(1.0), 4.0, 1000.0);
    let a_end = amplitude_closed_form(0.5, &sup, d.y2_integral(1000.0).unwrap());
    let a_inf = amplitude_closed_form(0.5, &sup, 2.0);
    assert!(a_end > a_inf && a_inf > 0.4);
    assert_eq!(amplitude_closed_form(0.0, &nl, 5.0), 0.0);
}

#[test]
fn full_grid_amplitude_ode_matches_the_scalar_form() {
    let d = derived(OscillatorModel::zero(1.0), 3.0, 10.0);
    let grid = Grid::new(1, 64, 8.0).unwrap();
    let prof = extract_profile(&lens_gaussian(&d, grid, 1.0, 1.0), &d).unwrap();
    let nl = Nonlinearity::new(3.0, 0.0, -1.0).unwrap();
    let hist = amplitude_ode(&prof, &d, &nl, &[1.0, 5.0]).unwrap();
    for (a, v) in hist[0].iter().zip(prof.values.iter()) {
        assert!((a - v.norm()).abs() < 1e-15);
    }
    for (a, v) in hist[1].iter().zip(prof.values.iter()) {
        assert!((a - amplitude_closed_form(v.norm(), &nl, 5f64.ln())).abs() < 1e-8);
    }
}

#[test]
fn gaussian_frequencies_are_zero_peak_and_half_power() {
    let d = derived(OscillatorModel::zero(1.0), 3.0, 10.0);
    let grid = Grid::new(1, 512, 64.0).unwrap();
    let u = WaveState::from_fn(grid, 1.0, |x| Complex64::new((-0.5 * x[0] * x[0]).exp(), 0.0));
    let v = to_lens(&u, 1.0, 0.0).unwrap();
    let mut prof = extract_profile(&v, &d).unwrap();
    prof.values.mapv_inplace(|z| Complex64::new(z.norm(), 0.0));
    let f = select_frequencies(&prof);
    assert_eq!(f.len(), 3);
    assert_eq!(f[0].xi, vec![0.0]);
    assert_eq!(f[1].xi, vec![0.0]);
    let half = 2f64.ln().sqrt();
    assert!((f[2].coordinate().abs() - half).abs() <= 0.5 * grid.dxi());
}

#[test]
fn free_profile_is_conserved_by_linear_runs() {
    let mut cfg = small_config(OscillatorModel::attractive(3.0 / 16.0, 1.0).unwrap(), 3.0, 1.0, 8.0);
    cfg.nonlinearity = Nonlinearity::new(3.0, 0.0, 0.0).unwrap();
    let (_, track) = track_profile(&cfg, TrackOptions { snapshot_every: Some(1) }).unwrap();
    let first = &track.snapshots[0];
    for snap in &track.snapshots {
        let err = snap.values.iter().zip(first.values.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-10, "t = {}: {err}", snap.t);
    }
    let d = derived(cfg.oscillator.clone(), 3.0, 8.0);
    let ode = ode_for_track(&track, &d, &cfg.nonlinearity).unwrap();
    let cmp = compare_pde_vs_ode(&track, &ode, &cfg.nonlinearity).unwrap();
    assert!(cmp.max_relative < 1e-10);
    assert_eq!(cmp.remainder_budget, 0.0);
}

#[test]
fn small_data_profile_follows_the_closed_form_within_budget() {
    for model in [OscillatorModel::zero(1.0), OscillatorModel::attractive(3.0 / 16.0, 1.0).unwrap()] {
        let cfg = small_config(model, 3.0, 0.1, 20.0);
        let (rec, track) = track_profile(&cfg, TrackOptions::default()).unwrap();
        assert_eq!(track.times, rec.times);
        let d = derived(cfg.oscillator.clone(), 3.0, 20.0);
        let ode = ode_for_track(&track, &d, &cfg.nonlinearity).unwrap();
        let cmp = compare_pde_vs_ode(&track, &ode, &cfg.nonlinearity).unwrap();
        assert!(cmp.all_within_budget, "{cmp:?}");
        for f in &cmp.frequencies {
            assert!(f.unbudgeted_increase <= 1e-12, "{f:?}");
        }
        assert!(track.amplitudes.iter().flatten().all(|a| *a >= 0.0));
    }
}

#[test]
fn comparison_rejects_mismatched_grids_and_writes_series() {
    let cfg = small_config(OscillatorModel::zero(1.0), 3.0, 0.1, 2.0);
    let (_, track) = track_profile(&cfg, TrackOptions::default()).unwrap();
    let d = derived(cfg.oscillator.clone(), 3.0, 2.0);
    let ode = ode_for_track(&track, &d, &cfg.nonlinearity).unwrap();
    let short = OdeHistories {
        times: ode.times[1..].to_vec(),
        amplitudes: ode.amplitudes.clone(),
    };
    assert!(matches!(
        compare_pde_vs_ode(&track, &short, &cfg.nonlinearity),
        Err(ProfileError::GridMismatch(_))
    ));
    let mut buf = Vec::new();
    write_profile_series(&track, &ode, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("t,xi,amp_pde,amp_ode,remainder_linf\n"));
    assert_eq!(text.lines().count(), 1 + track.len() * track.frequencies.len());
}
