use ndarray::{ArrayD, Zip};
use num_complex::Complex64;

use crate::criticality::Nonlinearity;
use crate::oscillator::{OscillatorDerived, OscillatorError, OscillatorModel};
use crate::spectral::{Fourier, WaveState};

/// Exact flow of i∂ₜu = coeff·λ|u|^(p−1)u over `dt`, point by point.
pub fn nonlinear_substep(state: &WaveState, nl: &Nonlinearity, dt: f64, coeff: f64) -> WaveState {
    let mut out = state.clone();
    apply_nonlinear(&mut out.values, nl, dt, coeff);
    out
}

pub fn apply_nonlinear(values: &mut ArrayD<Complex64>, nl: &Nonlinearity, dt: f64, coeff: f64) {
    if dt == 0.0 || nl.is_linear() {
        return;
    }
    let pm1 = nl.p - 1.0;
    let a = nl.lambda_im.abs();
    let b = nl.lambda_re;
    let pow = Power::new(pm1);
    values.mapv_inplace(|v| {
        let r0 = v.norm();
        if r0 == 0.0 {
            return v;
        }
        let r0k = pow.of(r0);
        let (scale, phase) = if a > 0.0 {
            let l = ((pm1 * a * coeff * dt) * r0k).ln_1p();
            ((-l / pm1).exp(), -b * l / (pm1 * a))
        } else {
            (1.0, -b * coeff * r0k * dt)
        };
        v * Complex64::from_polar(scale, phase)
    });
}

/// ρ^e with shortcuts for the small integer powers used most.
#[derive(Clone, Copy)]
enum Power {
    One,
    Two,
    Three,
    Real(f64),
}

impl Power {
    fn new(e: f64) -> Self {
        match e {
            e if e == 1.0 => Power::One,
            e if e == 2.0 => Power::Two,
            e if e == 3.0 => Power::Three,
            e => Power::Real(e),
        }
    }

    #[inline]
    fn of(self, r: f64) -> f64 {
        match self {
            Power::One => r,
            Power::Two => r * r,
            Power::Three => r * r * r,
            Power::Real(e) => r.powf(e),
        }
    }
}

/// Strang-composed V(dt/2) K(dt) V(dt/2) for H₀(t) = −½Δ + ½σ|x|², σ at the midpoint.
pub fn linear_substep_original(
    state: &WaveState,
    model: &OscillatorModel,
    t: f64,
    dt: f64,
) -> Result<WaveState, OscillatorError> {
    let mut out = state.clone();
    let fourier = Fourier::new(&state.grid);
    apply_linear_original(&mut out.values, &fourier, &state.grid.radius_sq(), model, t, dt)?;
    Ok(out)
}

pub(crate) fn apply_linear_original(
    values: &mut ArrayD<Complex64>,
    fourier: &Fourier,
    r2: &ArrayD<f64>,
    model: &OscillatorModel,
    t: f64,
    dt: f64,
) -> Result<(), OscillatorError> {
    if dt == 0.0 {
        return Ok(());
    }
    let sigma = model.sigma(t + 0.5 * dt)?;
    let half_potential = |values: &mut ArrayD<Complex64>| {
        if sigma != 0.0 {
            Zip::from(values)
                .and(r2)
                .for_each(|v, &q| *v *= Complex64::from_polar(1.0, -0.25 * sigma * q * dt));
        }
    };
    half_potential(values);
    fourier.apply_radial(values, |q| Complex64::from_polar(1.0, -0.5 * dt * q));
    half_potential(values);
    Ok(())
}

/// e^(i(Y(t+dt)−Y(t))Δ), exact for i∂ₜv + Δv/(2y₁²) = 0.
pub fn linear_substep_lens(
    state: &WaveState,
    derived: &OscillatorDerived,
    t: f64,
    dt: f64,
) -> Result<WaveState, OscillatorError> {
    let mut out = state.clone();
    let dy = derived.lens_time(t + dt)? - derived.lens_time(t)?;
    apply_lens_free(&mut out.values, &Fourier::new(&state.grid), dy);
    Ok(out)
}

pub(crate) fn apply_lens_free(values: &mut ArrayD<Complex64>, fourier: &Fourier, dy: f64) {
    if dy != 0.0 {
        fourier.apply_radial(values, |q| Complex64::from_polar(1.0, -dy * q));
    }
}

/// Zero every mode with |ξ_a| above two thirds of the Nyquist frequency on some axis.
pub(crate) fn dealias(values: &mut ArrayD<Complex64>, fourier: &Fourier) {
    let grid = *fourier.grid();
    let xi = grid.xi_fft();
    let cut = 2.0 / 3.0 * grid.dxi() * (grid.points / 2) as f64;
    fourier.forward(values);
    for (idx, v) in values.indexed_iter_mut() {
        if (0..grid.n).any(|a| xi[idx[a]].abs() > cut) {
            *v = Complex64::new(0.0, 0.0);
        }
    }
    fourier.inverse(values);
}
