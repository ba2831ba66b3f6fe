//! Fourier profile ṽ = 𝓕[U_Y(t)⁻¹v] of a lens-frame state, where U_Y = e^{iYΔ}.
//!
//! The profile obeys
//! i∂ₜṽ = λ|y₂|^(−k)|ṽ|^(p−1)ṽ + R, k = n(p−1)/2,
//! and dropping R leaves a pointwise ODE with closed-form solution
//! |ṽ(t,ξ)| = |ṽ₀|(1 + (p−1)|Im λ||ṽ₀|^(p−1)(Y₂(t) − Y₂(t₀)))^(−1/(p−1)).

use std::io::{self, Write};

use ndarray::{ArrayD, Dimension, Zip};
use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::criticality::Nonlinearity;
use crate::numerics::trapezoid;
use crate::oscillator::{OscillatorDerived, OscillatorError};
use crate::solver::{FrameChoice, RunRecord, SimConfig, Simulation, SolverError};
use crate::spectral::{Fourier, Frame, Grid, ProfileState, SpectralError, WaveState};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProfileError {
    #[error("profile needs a lens-frame state")]
    NotLensFrame,
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error(transparent)]
    Oscillator(#[from] OscillatorError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// Cached transform and centred |ξ|² for repeated profile work on one grid.
pub struct ProfileExtractor {
    fourier: Fourier,
    xi_sq: ArrayD<f64>,
}

impl ProfileExtractor {
    pub fn new(grid: &Grid) -> Self {
        let xi = grid.xi_centered();
        let xi_sq = ArrayD::from_shape_fn(ndarray::IxDyn(&grid.shape()), |idx| {
            (0..grid.n).map(|a| xi[idx[a]] * xi[idx[a]]).sum()
        });
        Self {
            fourier: Fourier::new(grid),
            xi_sq,
        }
    }

    /// 𝓕 followed by the multiplier e^{iY|ξ|²}.
    fn profile_of(&self, state: &WaveState, y: f64) -> ProfileState {
        let mut out = self.fourier.dft(state);
        Zip::from(&mut out.values)
            .and(&self.xi_sq)
            .for_each(|v, &q| *v *= Complex64::from_polar(1.0, y * q));
        out
    }

    pub fn extract(&self, state: &WaveState, derived: &OscillatorDerived) -> Result<ProfileState, ProfileError> {
        check_lens(state)?;
        Ok(self.profile_of(state, derived.lens_time(state.t)?))
    }

    /// Profile and remainder in one pass.
    pub fn remainder(
        &self,
        state: &WaveState,
        nl: &Nonlinearity,
        derived: &OscillatorDerived,
    ) -> Result<(ProfileState, Remainder), ProfileError> {
        check_lens(state)?;
        let t = state.t;
        let y = derived.lens_time(t)?;
        let profile = self.profile_of(state, y);
        let mut field = ProfileState {
            values: ArrayD::zeros(profile.values.raw_dim()),
            ..profile.clone()
        };
        if !nl.is_linear() {
            let pm1 = nl.p - 1.0;
            let k = derived.dispersion_exponent();
            let v = derived.pair().eval(t)?;
            let lambda = Complex64::new(nl.lambda_re, nl.lambda_im);
            let mut w = state.clone();
            w.values.mapv_inplace(|z| z * z.norm().powf(pm1));
            let first = self.profile_of(&w, y);
            let c1 = lambda * v.y1.abs().powf(-k);
            let c2 = lambda * v.y2.abs().powf(-k);
            Zip::from(&mut field.values)
                .and(&first.values)
                .and(&profile.values)
                .for_each(|r, &f, &p| *r = c1 * f - c2 * p * p.norm().powf(pm1));
        }
        let linf = field.linf_norm();
        let l2 = field.l2_norm();
        Ok((profile, Remainder { field, linf, l2 }))
    }
}

fn check_lens(state: &WaveState) -> Result<(), ProfileError> {
    match state.frame {
        Frame::Lens { .. } => Ok(()),
        Frame::Original => Err(ProfileError::NotLensFrame),
    }
}

/// One-shot 𝓕[U_Y(t)⁻¹v]; unitary, so ‖ṽ‖₂ = ‖v‖₂.
pub fn extract_profile(state: &WaveState, derived: &OscillatorDerived) -> Result<ProfileState, ProfileError> {
    ProfileExtractor::new(&state.grid).extract(state, derived)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Remainder {
    pub field: ProfileState,
    pub linf: f64,
    pub l2: f64,
}

/// R = λ|y₁|^(−k)𝓕[U_Y⁻¹(|v|^(p−1)v)] − λ|y₂|^(−k)|ṽ|^(p−1)ṽ.
pub fn remainder(state: &WaveState, nl: &Nonlinearity, derived: &OscillatorDerived) -> Result<Remainder, ProfileError> {
    ProfileExtractor::new(&state.grid)
        .remainder(state, nl, derived)
        .map(|(_, r)| r)
}

/// Exact solution of ∂ₜa = −|Im λ||y₂|^(−k)a^p given the elapsed Y₂ increment.
pub fn amplitude_closed_form(a0: f64, nl: &Nonlinearity, y2_increment: f64) -> f64 {
    if a0 == 0.0 || nl.lambda_im == 0.0 {
        return a0;
    }
    let pm1 = nl.p - 1.0;
    a0 * (1.0 + pm1 * nl.lambda_im.abs() * a0.powf(pm1) * y2_increment).powf(-1.0 / pm1)
}

/// Remainder-free amplitude histories for every frequency of `initial`, one
/// array per entry of `times`.
pub fn amplitude_ode(
    initial: &ProfileState,
    derived: &OscillatorDerived,
    nl: &Nonlinearity,
    times: &[f64],
) -> Result<Vec<ArrayD<f64>>, ProfileError> {
    let a0 = initial.values.mapv(|v| v.norm());
    times
        .iter()
        .map(|&t| {
            let dy = derived.y2_between(initial.t, t)?;
            Ok(a0.mapv(|a| amplitude_closed_form(a, nl, dy)))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrackedFrequency {
    pub label: String,
    pub index: Vec<usize>,
    pub xi: Vec<f64>,
}

impl TrackedFrequency {
    /// ξ itself in one dimension, |ξ| otherwise.
    pub fn coordinate(&self) -> f64 {
        if self.xi.len() == 1 {
            self.xi[0]
        } else {
            self.xi.iter().map(|x| x * x).sum::<f64>().sqrt()
        }
    }
}

/// ξ = 0, the spectral peak of `initial` and the half-power frequency, which is
/// the point beyond the peak radius whose |ṽ|² is nearest half the peak value.
pub fn select_frequencies(initial: &ProfileState) -> Vec<TrackedFrequency> {
    let grid = initial.grid;
    let xi = grid.xi_centered();
    let at = |idx: &[usize], label: &str| TrackedFrequency {
        label: label.to_string(),
        index: idx.to_vec(),
        xi: idx.iter().map(|&i| xi[i]).collect(),
    };
    let radius = |idx: &[usize]| idx.iter().map(|&i| xi[i] * xi[i]).sum::<f64>();
    let mut peak = (vec![grid.points / 2; grid.n], -1.0);
    for (idx, v) in initial.values.indexed_iter() {
        let a = v.norm_sqr();
        let idx: Vec<usize> = idx.as_array_view().to_vec();
        if a > peak.1 || (a == peak.1 && radius(&idx) < radius(&peak.0)) {
            peak = (idx, a);
        }
    }
    let r_peak = radius(&peak.0);
    let mut half: Option<(Vec<usize>, f64, f64)> = None;
    for (idx, v) in initial.values.indexed_iter() {
        let idx: Vec<usize> = idx.as_array_view().to_vec();
        let r = radius(&idx);
        if r <= r_peak {
            continue;
        }
        let gap = (v.norm_sqr() - 0.5 * peak.1).abs();
        let better = match &half {
            None => true,
            Some((_, g, rr)) => gap < *g || (gap == *g && r < *rr),
        };
        if better {
            half = Some((idx, gap, r));
        }
    }
    let mut out = vec![at(&vec![grid.points / 2; grid.n], "zero"), at(&peak.0, "peak")];
    if let Some((idx, _, _)) = half {
        out.push(at(&idx, "half_power"));
    }
    out
}

/// Profile diagnostics sampled at the solver record times.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ProfileTrack {
    pub times: Vec<f64>,
    pub frequencies: Vec<TrackedFrequency>,
    /// amplitudes[f][i] = |ṽ(times[i], ξ_f)|.
    pub amplitudes: Vec<Vec<f64>>,
    /// |R(times[i], ξ_f)|, same layout.
    pub remainder_at: Vec<Vec<f64>>,
    pub remainder_linf: Vec<f64>,
    pub remainder_l2: Vec<f64>,
    pub profile_linf: Vec<f64>,
    /// |y₂(t)|^(−k) at each time.
    pub y2_weight: Vec<f64>,
    #[serde(skip)]
    pub snapshots: Vec<ProfileState>,
}

impl ProfileTrack {
    fn push(
        &mut self,
        profile: &ProfileState,
        rem: &Remainder,
        derived: &OscillatorDerived,
        keep_snapshot: bool,
    ) -> Result<(), ProfileError> {
        if self.frequencies.is_empty() {
            self.frequencies = select_frequencies(profile);
            self.amplitudes = vec![Vec::new(); self.frequencies.len()];
            self.remainder_at = vec![Vec::new(); self.frequencies.len()];
        }
        let t = profile.t;
        self.times.push(t);
        for (f, freq) in self.frequencies.iter().enumerate() {
            let idx = ndarray::IxDyn(&freq.index);
            self.amplitudes[f].push(profile.values[&idx].norm());
            self.remainder_at[f].push(rem.field.values[&idx].norm());
        }
        self.remainder_linf.push(rem.linf);
        self.remainder_l2.push(rem.l2);
        self.profile_linf.push(profile.linf_norm());
        let k = derived.dispersion_exponent();
        self.y2_weight.push(derived.pair().y2(t)?.abs().powf(-k));
        if keep_snapshot {
            self.snapshots.push(profile.clone());
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// First recorded time where ‖R‖_∞ < 0.1·|Im λ||y₂|^(−k)‖ṽ‖_∞^p.
    pub fn dominance_start(&self, nl: &Nonlinearity) -> Option<f64> {
        (0..self.len())
            .find(|&i| {
                self.remainder_linf[i] < 0.1 * nl.lambda_im.abs() * self.y2_weight[i] * self.profile_linf[i].powf(nl.p)
            })
            .map(|i| self.times[i])
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct TrackOptions {
    /// Keep every `snapshot_every`-th profile; `None` keeps none.
    pub snapshot_every: Option<usize>,
}

/// Run `config` in the lens frame and extract the profile at every record.
pub fn track_profile(config: &SimConfig, options: TrackOptions) -> Result<(RunRecord, ProfileTrack), ProfileError> {
    if config.run.frame != FrameChoice::Lens {
        return Err(ProfileError::NotLensFrame);
    }
    let mut sim = Simulation::new(config.clone())?;
    let derived = sim.derived().cloned().ok_or(ProfileError::NotLensFrame)?;
    let extractor = ProfileExtractor::new(&sim.state().grid);
    let nl = config.nonlinearity;
    let mut track = ProfileTrack::default();
    let mut failure = None;
    let mut count = 0usize;
    sim.run_with(|state| {
        if failure.is_some() {
            return;
        }
        let keep = options.snapshot_every.is_some_and(|e| count % e.max(1) == 0);
        count += 1;
        let res = extractor
            .remainder(state, &nl, &derived)
            .and_then(|(p, r)| track.push(&p, &r, &derived, keep));
        if let Err(e) = res {
            failure = Some(e);
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok((sim.into_record(), track))
}

/// Remainder-free predictions at the tracked frequencies, started from the
/// first recorded amplitude.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OdeHistories {
    pub times: Vec<f64>,
    pub amplitudes: Vec<Vec<f64>>,
}

pub fn ode_for_track(track: &ProfileTrack, derived: &OscillatorDerived, nl: &Nonlinearity) -> Result<OdeHistories, ProfileError> {
    let Some(&t0) = track.times.first() else {
        return Ok(OdeHistories {
            times: Vec::new(),
            amplitudes: vec![Vec::new(); track.frequencies.len()],
        });
    };
    let increments = track
        .times
        .iter()
        .map(|&t| derived.y2_between(t0, t))
        .collect::<Result<Vec<_>, _>>()?;
    let amplitudes = track
        .amplitudes
        .iter()
        .map(|a| increments.iter().map(|&dy| amplitude_closed_form(a[0], nl, dy)).collect())
        .collect();
    Ok(OdeHistories {
        times: track.times.clone(),
        amplitudes,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrequencyDiscrepancy {
    pub label: String,
    pub xi: Vec<f64>,
    /// sup_t ||ṽ_pde| − |ṽ_ode||.
    pub sup_discrepancy: f64,
    /// sup_discrepancy / |ṽ(t₀, ξ)|.
    pub relative: f64,
    /// 2∫|R(τ, ξ)| dτ over the run.
    pub budget: f64,
    pub within_budget: bool,
    /// Largest record-to-record increase of |ṽ| beyond 2∫|R(·, ξ)| over that interval.
    pub unbudgeted_increase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileComparison {
    pub frequencies: Vec<FrequencyDiscrepancy>,
    /// 2∫‖R‖_∞ dτ over the run.
    pub remainder_budget: f64,
    pub dominance_start: Option<f64>,
    pub max_relative: f64,
    pub all_within_budget: bool,
}

pub fn compare_pde_vs_ode(track: &ProfileTrack, ode: &OdeHistories, nl: &Nonlinearity) -> Result<ProfileComparison, ProfileError> {
    if ode.times.len() != track.times.len()
        || ode.times.iter().zip(&track.times).any(|(a, b)| (a - b).abs() > 1e-12 * b.abs().max(1.0))
    {
        return Err(ProfileError::GridMismatch(format!(
            "{} ODE times vs {} recorded times",
            ode.times.len(),
            track.times.len()
        )));
    }
    if ode.amplitudes.len() != track.frequencies.len() {
        return Err(ProfileError::GridMismatch(format!(
            "{} ODE frequencies vs {} tracked",
            ode.amplitudes.len(),
            track.frequencies.len()
        )));
    }
    let ts = &track.times;
    let mut frequencies = Vec::new();
    for (f, freq) in track.frequencies.iter().enumerate() {
        let pde = &track.amplitudes[f];
        let pred = &ode.amplitudes[f];
        let sup = pde.iter().zip(pred).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let r = &track.remainder_at[f];
        let budget = 2.0 * trapezoid(ts, r);
        let unbudgeted = (1..ts.len())
            .map(|i| pde[i] - pde[i - 1] - (ts[i] - ts[i - 1]) * (r[i] + r[i - 1]))
            .fold(f64::NEG_INFINITY, f64::max);
        let a0 = pde.first().copied().unwrap_or(0.0);
        frequencies.push(FrequencyDiscrepancy {
            label: freq.label.clone(),
            xi: freq.xi.clone(),
            sup_discrepancy: sup,
            relative: if a0 > 0.0 { sup / a0 } else { sup },
            budget,
            within_budget: sup <= budget,
            unbudgeted_increase: unbudgeted,
        });
    }
    Ok(ProfileComparison {
        remainder_budget: 2.0 * trapezoid(ts, &track.remainder_linf),
        dominance_start: track.dominance_start(nl),
        max_relative: frequencies.iter().map(|f| f.relative).fold(0.0, f64::max),
        all_within_budget: frequencies.iter().all(|f| f.within_budget),
        frequencies,
    })
}

/// Columns `t,xi,amp_pde,amp_ode,remainder_linf`, one row per time and tracked frequency.
pub fn write_profile_series<W: Write>(track: &ProfileTrack, ode: &OdeHistories, mut w: W) -> io::Result<()> {
    writeln!(w, "t,xi,amp_pde,amp_ode,remainder_linf")?;
    for i in 0..track.times.len() {
        for (f, freq) in track.frequencies.iter().enumerate() {
            writeln!(
                w,
                "{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}",
                track.times[i],
                freq.coordinate(),
                track.amplitudes[f][i],
                ode.amplitudes[f][i],
                track.remainder_linf[i]
            )?;
        }
    }
    Ok(())
}
