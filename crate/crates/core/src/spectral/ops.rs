use std::f64::consts::PI;

use ndarray::{ArrayD, Axis, IxDyn, Zip};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::fourier::Fourier;
use super::grid::{Frame, Grid, WaveState};
use super::SpectralError;
use crate::oscillator::{FundamentalPair, OscillatorDerived};

/// Default floor on |y₁| below which the lens frame is refused.
pub const Y1_FLOOR: f64 = 1e-10;

pub fn l2_norm(state: &WaveState) -> f64 {
    (state.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * state.grid.cell_volume()).sqrt()
}

pub fn linf_norm(state: &WaveState) -> f64 {
    state.values.iter().fold(0.0, |m, v| m.max(v.norm()))
}

/// (Σ|f|^q Δxⁿ)^(1/q).
pub fn lp_norm(state: &WaveState, q: f64) -> f64 {
    lp_power(state, q).powf(1.0 / q)
}

/// Σ|f|^q Δxⁿ without the root.
pub fn lp_power(state: &WaveState, q: f64) -> f64 {
    state.values.iter().map(|v| v.norm().powf(q)).sum::<f64>() * state.grid.cell_volume()
}

/// ‖|ξ|^order f̂‖₂.
pub fn sobolev_seminorm(state: &WaveState, order: f64) -> f64 {
    Fourier::new(&state.grid).sobolev_seminorm(state, order)
}

impl Fourier {
    pub fn sobolev_seminorm(&self, state: &WaveState, order: f64) -> f64 {
        self.weighted_spectral_norm(state, |q| if order == 0.0 { 1.0 } else { q.powf(order) })
    }

    /// ‖⟨ξ⟩^order f̂‖₂.
    pub fn sobolev_norm(&self, state: &WaveState, order: f64) -> f64 {
        self.weighted_spectral_norm(state, |q| (1.0 + q * q).powf(0.5 * order))
    }

    fn weighted_spectral_norm(&self, state: &WaveState, w: impl Fn(f64) -> f64) -> f64 {
        let mut data = state.values.clone();
        self.forward(&mut data);
        // Parseval: (Δx²/2π)ⁿΔξⁿ = (Δx/N)ⁿ.
        let c = (state.grid.dx() / state.grid.points as f64).powi(state.grid.n as i32);
        let s: f64 = Zip::from(&data)
            .and(self.xi_sq())
            .fold(0.0, |acc, v, &q| acc + w(q.sqrt()).powi(2) * v.norm_sqr());
        (s * c).sqrt()
    }
}

/// Result of applying e^(isΔ/2) along both paths.
#[derive(Debug, Clone)]
pub struct MdfmOutcome {
    /// Fourier-multiplier path.
    pub state: WaveState,
    /// ‖path(i) − path(ii)‖₂ / ‖f‖₂.
    pub discrepancy: f64,
    /// Chirp phase steps exceed π per cell; the factorised path is unreliable.
    pub aliasing: bool,
}

/// Per-cell phase step of e^(i|x|²·a/2) at the box edge exceeds π.
pub fn chirp_aliased(grid: &Grid, a: f64) -> bool {
    a.abs() * grid.physical_half_width() * grid.dx() > PI
}

/// e^(isΔ/2)f by the multiplier e^(−is|ξ|²/2) and by the chirp/dilation
/// factorisation (is)^(−n/2) e^(i|x|²/2s) ĝ(x/s), g = e^(i|y|²/2s) f.
pub fn mdfm_apply(state: &WaveState, s: f64) -> MdfmOutcome {
    let fourier = Fourier::new(&state.grid);
    let mut out = state.clone();
    if s == 0.0 {
        return MdfmOutcome {
            state: out,
            discrepancy: 0.0,
            aliasing: false,
        };
    }
    fourier.apply_radial(&mut out.values, |q| Complex64::from_polar(1.0, -0.5 * s * q));

    let grid = state.grid;
    let aliasing = chirp_aliased(&grid, 1.0 / s);
    if aliasing {
        log::warn!("chirp aliasing in factorised propagator (s = {s}); using multiplier path");
    }
    let r2 = grid.radius_sq();
    let mut g = state.values.clone();
    Zip::from(&mut g).and(&r2).for_each(|v, &q| *v *= Complex64::from_polar(1.0, 0.5 * q / s));
    let coords = grid.coords();
    let h = grid.dx() / (2.0 * PI).sqrt();
    let n = grid.points;
    let mut mat = vec![Complex64::new(0.0, 0.0); n * n];
    for a in 0..n {
        let xi = coords[a] / s;
        for j in 0..n {
            mat[a * n + j] = Complex64::from_polar(h, -coords[j] * xi);
        }
    }
    for axis in 0..grid.n {
        g = apply_axis_matrix(&g, axis, &mat, n);
    }
    // Principal branch of (is)^(−1/2), once per axis.
    let pre = Complex64::from_polar(s.abs().powf(-0.5), -0.25 * PI * s.signum()).powi(grid.n as i32);
    Zip::from(&mut g)
        .and(&r2)
        .for_each(|v, &q| *v *= pre * Complex64::from_polar(1.0, 0.5 * q / s));

    let norm = l2_norm(state);
    let diff: f64 = Zip::from(&out.values)
        .and(&g)
        .fold(0.0, |acc, a, b| acc + (a - b).norm_sqr());
    let discrepancy = if norm > 0.0 {
        (diff * grid.cell_volume()).sqrt() / norm
    } else {
        0.0
    };
    MdfmOutcome {
        state: out,
        discrepancy,
        aliasing,
    }
}

/// out[..., a, ...] = Σ_j mat[a·cols + j] · input[..., j, ...] along `axis`.
pub(crate) fn apply_axis_matrix(
    input: &ArrayD<Complex64>,
    axis: usize,
    mat: &[Complex64],
    cols: usize,
) -> ArrayD<Complex64> {
    let rows = mat.len() / cols;
    let mut shape = input.shape().to_vec();
    shape[axis] = rows;
    let mut out = ArrayD::zeros(IxDyn(&shape));
    let mut buf = vec![Complex64::new(0.0, 0.0); cols];
    Zip::from(out.lanes_mut(Axis(axis)))
        .and(input.lanes(Axis(axis)))
        .for_each(|mut o, i| {
            for (b, v) in buf.iter_mut().zip(i.iter()) {
                *b = *v;
            }
            for (a, ov) in o.iter_mut().enumerate() {
                let row = &mat[a * cols..(a + 1) * cols];
                *ov = row.iter().zip(&buf).map(|(m, v)| m * v).sum();
            }
        });
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LensDirection {
    ToLens,
    ToOriginal,
}

/// v(x) = e^(−i y₁y₁'|x|²/2) |y₁|^(n/2) u(y₁x) and its inverse.
///
/// The dilation only touches grid metadata: the samples keep their order
/// (reversed per axis when y₁ < 0) and the grid scale is multiplied by |y₁|.
pub fn lens_transform(
    state: &WaveState,
    pair: &FundamentalPair,
    direction: LensDirection,
) -> Result<WaveState, SpectralError> {
    match direction {
        LensDirection::ToLens => {
            let v = pair.eval(state.t)?;
            to_lens(state, v.y1, v.dy1)
        }
        LensDirection::ToOriginal => to_original(state),
    }
}

pub fn to_lens(state: &WaveState, y1: f64, dy1: f64) -> Result<WaveState, SpectralError> {
    if state.frame.is_lens() {
        return Err(SpectralError::FrameMismatch("state is already in the lens frame".into()));
    }
    if !(y1.abs() >= Y1_FLOOR) {
        return Err(SpectralError::SingularY1 { t: state.t, y1 });
    }
    let grid = state.grid.with_scale(state.grid.scale * y1.abs());
    if chirp_aliased(&grid, y1 * dy1) {
        log::warn!("lens chirp under-resolved at t = {} (y1 y1' = {})", state.t, y1 * dy1);
    }
    let a = y1.abs().powf(0.5 * grid.n as f64);
    let k = dy1 / y1;
    let r2 = state.grid.radius_sq();
    let mut values = state.values.clone();
    Zip::from(&mut values)
        .and(&r2)
        .for_each(|v, &q| *v *= Complex64::from_polar(a, -0.5 * k * q));
    if y1 < 0.0 {
        values = reflect(&values);
    }
    Ok(WaveState {
        grid,
        values,
        frame: Frame::Lens { y1, dy1 },
        t: state.t,
    })
}

pub fn to_original(state: &WaveState) -> Result<WaveState, SpectralError> {
    let Frame::Lens { y1, dy1 } = state.frame else {
        return Err(SpectralError::FrameMismatch("state is already in the original frame".into()));
    };
    if !(y1.abs() >= Y1_FLOOR) {
        return Err(SpectralError::SingularY1 { t: state.t, y1 });
    }
    let grid = state.grid.with_scale(state.grid.scale / y1.abs());
    let a = y1.abs().powf(-0.5 * grid.n as f64);
    let k = dy1 / y1;
    let mut values = if y1 < 0.0 {
        reflect(&state.values)
    } else {
        state.values.clone()
    };
    let r2 = grid.radius_sq();
    Zip::from(&mut values)
        .and(&r2)
        .for_each(|v, &q| *v *= Complex64::from_polar(a, 0.5 * k * q));
    Ok(WaveState {
        grid,
        values,
        frame: Frame::Original,
        t: state.t,
    })
}

/// j ↦ (N − j) mod N along every axis.
fn reflect(values: &ArrayD<Complex64>) -> ArrayD<Complex64> {
    let n = values.shape()[0];
    ArrayD::from_shape_fn(values.raw_dim(), |idx| {
        let mut src = idx.clone();
        for a in 0..values.ndim() {
            src[a] = (n - idx[a]) % n;
        }
        values[src]
    })
}

/// Trigonometric interpolant of `state.values` at the tensor grid
/// `targets[axis]` (physical coordinates); zero outside the source box.
pub fn band_limited_interpolate(state: &WaveState, targets: &[Vec<f64>]) -> ArrayD<Complex64> {
    assert_eq!(targets.len(), state.grid.n, "one coordinate list per axis");
    let fourier = Fourier::new(&state.grid);
    let mut coeffs = state.values.clone();
    fourier.forward(&mut coeffs);
    let n = state.grid.points;
    let xi = state.grid.xi_fft();
    let l = state.grid.physical_half_width();
    let mut out = coeffs;
    for (axis, xs) in targets.iter().enumerate() {
        let mut mat = vec![Complex64::new(0.0, 0.0); xs.len() * n];
        for (a, &x) in xs.iter().enumerate() {
            if x < -l || x >= l {
                continue;
            }
            for k in 0..n {
                mat[a * n + k] = Complex64::from_polar(1.0 / n as f64, xi[k] * (x + l));
            }
        }
        out = apply_axis_matrix(&out, axis, &mat, n);
    }
    out
}

/// Physical field u on `target`, whatever frame `state` is in.
pub fn sample_physical(state: &WaveState, target: &Grid) -> Result<ArrayD<Complex64>, SpectralError> {
    if target.n != state.grid.n {
        return Err(SpectralError::ShapeMismatch {
            expected: state.grid.shape(),
            found: target.shape(),
        });
    }
    let xs = target.coords();
    match state.frame {
        Frame::Original => Ok(band_limited_interpolate(state, &vec![xs; target.n])),
        Frame::Lens { y1, dy1 } => {
            let mapped: Vec<f64> = xs.iter().map(|x| x / y1).collect();
            let mut u = band_limited_interpolate(state, &vec![mapped; target.n]);
            let a = y1.abs().powf(-0.5 * target.n as f64);
            let k = dy1 / y1;
            let r2 = target.radius_sq();
            Zip::from(&mut u)
                .and(&r2)
                .for_each(|v, &q| *v *= Complex64::from_polar(a, 0.5 * k * q));
            Ok(u)
        }
    }
}

/// J or |J|^γ applied to a field.
#[derive(Debug, Clone)]
pub struct JOutcome {
    /// One component per axis for γ = 1, a single field otherwise.
    pub components: Vec<WaveState>,
    pub aliasing: bool,
}

impl JOutcome {
    pub fn l2_norm(&self) -> f64 {
        self.components.iter().map(|c| l2_norm(c).powi(2)).sum::<f64>().sqrt()
    }
}

/// J = x + iY∇ (γ = 1) or the chirp-factorised |J|^γ (0 < γ < 1), at Y(state.t).
pub fn j_operator(state: &WaveState, derived: &OscillatorDerived, gamma: f64) -> Result<JOutcome, SpectralError> {
    let y = derived.lens_time(state.t)?;
    let fourier = Fourier::new(&state.grid);
    if gamma == 1.0 {
        Ok(JOutcome {
            components: j_vector(&fourier, state, y),
            aliasing: false,
        })
    } else {
        Ok(j_fractional(&fourier, state, y, gamma))
    }
}

/// Components (x_a + iY∂_a) f.
pub fn j_vector(fourier: &Fourier, state: &WaveState, y: f64) -> Vec<WaveState> {
    (0..state.grid.n)
        .map(|axis| {
            let mut d = state.values.clone();
            fourier.derivative(&mut d, axis);
            let x = state.grid.axis_coord(axis);
            let mut out = state.clone();
            Zip::from(&mut out.values).and(&x).and(&d).for_each(|v, &xa, &dv| {
                *v = *v * xa + Complex64::new(0.0, y) * dv;
            });
            out
        })
        .collect()
}

/// M(Y)|Y|^γ|D|^γ M(Y)⁻¹ f with M(Y) = e^(i|x|²/(2Y)).
pub fn j_fractional(fourier: &Fourier, state: &WaveState, y: f64, gamma: f64) -> JOutcome {
    let grid = state.grid;
    let r2 = grid.radius_sq();
    let mut out = state.clone();
    if y == 0.0 {
        Zip::from(&mut out.values).and(&r2).for_each(|v, &q| *v *= q.powf(0.5 * gamma));
        return JOutcome {
            components: vec![out],
            aliasing: false,
        };
    }
    let aliasing = chirp_aliased(&grid, 1.0 / y);
    if aliasing {
        log::warn!("|J|^gamma chirp under-resolved at Y = {y}");
    }
    Zip::from(&mut out.values)
        .and(&r2)
        .for_each(|v, &q| *v *= Complex64::from_polar(1.0, -0.5 * q / y));
    let c = y.abs().powf(gamma);
    fourier.apply_radial(&mut out.values, |q| Complex64::new(c * q.powf(0.5 * gamma), 0.0));
    Zip::from(&mut out.values)
        .and(&r2)
        .for_each(|v, &q| *v *= Complex64::from_polar(1.0, 0.5 * q / y));
    JOutcome {
        components: vec![out],
        aliasing,
    }
}

/// e^(iYΔ/2)|x|^γ e^(−iYΔ/2) f, the same operator without a chirp on the grid.
pub fn j_fractional_conjugated(fourier: &Fourier, state: &WaveState, y: f64, gamma: f64) -> WaveState {
    let r2 = state.grid.radius_sq();
    let mut out = state.clone();
    fourier.apply_radial(&mut out.values, |q| Complex64::from_polar(1.0, 0.5 * y * q));
    Zip::from(&mut out.values).and(&r2).for_each(|v, &q| *v *= q.powf(0.5 * gamma));
    fourier.apply_radial(&mut out.values, |q| Complex64::from_polar(1.0, -0.5 * y * q));
    out
}
