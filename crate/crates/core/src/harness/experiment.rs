use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fit::{calibrate_envelope, default_window, fit_decay_window, DecayModel, EnvelopeCalibration, FitResult};
use super::HarnessError;
use crate::criticality::{classify, CriticalityReport, DecayLaw, Envelope, Nonlinearity, Norm};
use crate::oscillator::{OscillatorDerived, OscillatorModel};
use crate::profile::{compare_pde_vs_ode, ode_for_track, track_profile, ProfileComparison, TrackOptions};
use crate::solver::{cross_validate, FrameChoice, InitialData, RunRecord, RunSettings, SimConfig, Simulation};
use crate::spectral::Grid;

/// Relative tolerance on measured vs predicted exponents.
pub const EXPONENT_TOLERANCE: f64 = 0.25;
/// Largest |d log‖u‖/d log t| accepted as a plateau.
pub const PLATEAU_SLOPE_TOLERANCE: f64 = 1e-2;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxes {
    /// Initial-data amplitudes ε; empty keeps the base amplitude.
    #[serde(default)]
    pub amplitudes: Vec<f64>,
    #[serde(default)]
    pub powers: Vec<f64>,
    #[serde(default)]
    pub models: Vec<OscillatorModel>,
    /// Number of dt levels, each halving the previous one.
    #[serde(default = "one_level")]
    pub refinement_levels: usize,
}

fn one_level() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Comparisons {
    #[serde(default = "yes")]
    pub ledger: bool,
    #[serde(default)]
    pub cross_validate: bool,
    #[serde(default)]
    pub profile: bool,
    #[serde(default = "yes")]
    pub fits: bool,
    /// Fit window; defaults to the last half of [T₀, t_end].
    #[serde(default)]
    pub fit_window: Option<[f64; 2]>,
}

fn yes() -> bool {
    true
}

impl Default for Comparisons {
    fn default() -> Self {
        Self {
            ledger: true,
            cross_validate: false,
            profile: false,
            fits: true,
            fit_window: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub base: SimConfig,
    pub sweep: SweepAxes,
    pub compare: Comparisons,
}

#[derive(Deserialize)]
struct ExperimentFile {
    grid: Grid,
    oscillator: OscillatorModel,
    nonlinearity: Nonlinearity,
    run: RunSettings,
    #[serde(default)]
    sweep: SweepAxes,
    #[serde(default)]
    compare: Comparisons,
}

impl ExperimentSpec {
    pub fn single(base: SimConfig) -> Self {
        Self {
            base,
            sweep: SweepAxes {
                refinement_levels: 1,
                ..SweepAxes::default()
            },
            compare: Comparisons::default(),
        }
    }

    /// The four run sections plus optional `[sweep]` and `[compare]`.
    pub fn from_toml(src: &str) -> Result<Self, HarnessError> {
        let f: ExperimentFile = toml::from_str(src).map_err(|e| HarnessError::Spec(e.to_string()))?;
        let spec = Self {
            base: SimConfig {
                grid: f.grid,
                oscillator: f.oscillator,
                nonlinearity: f.nonlinearity,
                run: f.run,
            },
            sweep: f.sweep,
            compare: f.compare,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.sweep.refinement_levels == 0 {
            return Err(HarnessError::Spec("refinement_levels must be >= 1".into()));
        }
        if !self.sweep.amplitudes.is_empty() && matches!(self.base.run.initial_data, InitialData::FromFile { .. }) {
            return Err(HarnessError::Spec("amplitude sweeps need generated initial data".into()));
        }
        for point in self.points() {
            point.config.validate().map_err(|e| HarnessError::Spec(format!("{}: {e}", point.label)))?;
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.base.run.seed = seed;
        self
    }

    /// Cartesian product of the sweep axes, amplitude slowest, dt level fastest.
    pub fn points(&self) -> Vec<SweepPoint> {
        let amps: Vec<Option<f64>> = if self.sweep.amplitudes.is_empty() {
            vec![None]
        } else {
            self.sweep.amplitudes.iter().copied().map(Some).collect()
        };
        let powers: Vec<Option<f64>> = if self.sweep.powers.is_empty() {
            vec![None]
        } else {
            self.sweep.powers.iter().copied().map(Some).collect()
        };
        let models: Vec<Option<(usize, &OscillatorModel)>> = if self.sweep.models.is_empty() {
            vec![None]
        } else {
            self.sweep.models.iter().enumerate().map(Some).collect()
        };
        let mut out = Vec::new();
        for &a in &amps {
            for &p in &powers {
                for m in &models {
                    for level in 0..self.sweep.refinement_levels.max(1) {
                        let mut cfg = self.base.clone();
                        if let Some(a) = a {
                            set_amplitude(&mut cfg.run.initial_data, a);
                        }
                        if let Some(p) = p {
                            cfg.nonlinearity.p = p;
                        }
                        if let Some((_, model)) = m {
                            cfg.oscillator = (*model).clone();
                        }
                        cfg.run.dt = self.base.run.dt / 2f64.powi(level as i32);
                        cfg.run.record_every = self.base.run.record_every << level;
                        let group = format!(
                            "eps={},p={},model={}",
                            a.map_or("base".to_string(), |v| v.to_string()),
                            cfg.nonlinearity.p,
                            m.map_or("base".to_string(), |(i, _)| i.to_string())
                        );
                        out.push(SweepPoint {
                            index: out.len(),
                            label: format!("{group},level={level}"),
                            group,
                            amplitude: a,
                            p: cfg.nonlinearity.p,
                            model_index: m.map(|(i, _)| i),
                            level,
                            config: cfg,
                        });
                    }
                }
            }
        }
        out
    }
}

fn set_amplitude(data: &mut InitialData, a: f64) {
    match data {
        InitialData::Gaussian { amplitude, .. } | InitialData::FourierBump { amplitude, .. } => *amplitude = a,
        InitialData::FromFile { .. } => {}
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub index: usize,
    pub label: String,
    /// Label without the dt level; refinement studies group on it.
    pub group: String,
    pub amplitude: Option<f64>,
    pub p: f64,
    pub model_index: Option<usize>,
    pub level: usize,
    pub config: SimConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub steps: usize,
    pub rejected_steps: usize,
    pub final_dt: f64,
    pub initial_l2: f64,
    pub terminal_l2: f64,
    pub terminal_linf: f64,
    pub terminal_ledger_residual: f64,
    pub max_boundary_ratio: f64,
    pub max_mass_increase: f64,
    pub warnings: Vec<String>,
}

impl RunSummary {
    pub fn of(record: &RunRecord) -> Self {
        Self {
            steps: record.steps,
            rejected_steps: record.rejected_steps,
            final_dt: record.final_dt,
            initial_l2: record.l2_norms.first().copied().unwrap_or(f64::NAN),
            terminal_l2: record.l2_norms.last().copied().unwrap_or(f64::NAN),
            terminal_linf: record.linf_norms.last().copied().unwrap_or(f64::NAN),
            terminal_ledger_residual: record.terminal_ledger_residual(),
            max_boundary_ratio: record.max_boundary_ratio,
            max_mass_increase: record.max_mass_increase,
            warnings: record.warnings.clone(),
        }
    }
}

/// Measured against predicted behaviour for one decay law.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoremComparison {
    pub law: DecayLaw,
    pub norm: Norm,
    pub envelope: Envelope,
    pub predicted_exponent: f64,
    pub measured_exponent: Option<f64>,
    pub relative_error: Option<f64>,
    pub within_tolerance: bool,
    pub calibration: Option<EnvelopeCalibration>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossValidationSummary {
    pub terminal_l2: f64,
    pub max_l2: f64,
    pub max_linf: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointResult {
    pub index: usize,
    pub label: String,
    pub group: String,
    pub parameters: BTreeMap<String, f64>,
    pub error: Option<String>,
    pub summary: Option<RunSummary>,
    pub fits: Vec<FitResult>,
    pub fit_errors: Vec<String>,
    pub criticality: Option<CriticalityReport>,
    pub comparisons: Vec<TheoremComparison>,
    pub cross_validation: Option<CrossValidationSummary>,
    pub profile: Option<ProfileComparison>,
    #[serde(skip)]
    pub record: Option<RunRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefinementStudy {
    pub group: String,
    pub dts: Vec<f64>,
    pub ledger_residuals: Vec<f64>,
    /// residual(level i) / residual(level i+1); ≈ 4 for a second-order scheme.
    pub ratios: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportBundle {
    pub points: Vec<PointResult>,
    pub refinement: Vec<RefinementStudy>,
    pub failures: usize,
}

impl ReportBundle {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("bundle serializes")
    }

    /// Text table pairing measured and predicted exponents.
    pub fn table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<40} {:>12} {:>12} {:>12}",
            "point", "terminal_l2", "ledger", "steps"
        );
        for p in &self.points {
            match (&p.summary, &p.error) {
                (Some(sum), _) => {
                    let _ = writeln!(
                        s,
                        "{:<40} {:>12.6e} {:>12.3e} {:>12}",
                        p.label, sum.terminal_l2, sum.terminal_ledger_residual, sum.steps
                    );
                }
                (None, Some(e)) => {
                    let _ = writeln!(s, "{:<40} FAILED: {e}", p.label);
                }
                _ => {}
            }
            for c in &p.comparisons {
                let measured = c.measured_exponent.map_or("-".to_string(), |m| format!("{m:.4}"));
                let _ = writeln!(
                    s,
                    "    {:<22} {:<4} predicted {:>9.4}  measured {:>9}  {}",
                    format!("{:?}", c.law),
                    format!("{:?}", c.norm),
                    c.predicted_exponent,
                    measured,
                    if c.within_tolerance { "ok" } else { "outside tolerance" }
                );
            }
        }
        for r in &self.refinement {
            let ratios: Vec<String> = r.ratios.iter().map(|x| format!("{x:.3}")).collect();
            let _ = writeln!(s, "refinement {}: ledger ratios [{}]", r.group, ratios.join(", "));
        }
        let _ = writeln!(
            s,
            "tolerances: exponent {:.0}% relative, plateau slope {:e} (engineering choices)",
            100.0 * EXPONENT_TOLERANCE,
            PLATEAU_SLOPE_TOLERANCE
        );
        s
    }
}

/// Run every sweep point concurrently; per-point failures are recorded, not raised.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ReportBundle, HarnessError> {
    spec.validate()?;
    let points = spec.points();
    let results: Vec<PointResult> = points.par_iter().map(|p| run_point(p, &spec.compare)).collect();
    Ok(assemble(results))
}

/// Serial reference path, identical output to `run_experiment`.
pub fn run_experiment_serial(spec: &ExperimentSpec) -> Result<ReportBundle, HarnessError> {
    spec.validate()?;
    let results: Vec<PointResult> = spec.points().iter().map(|p| run_point(p, &spec.compare)).collect();
    Ok(assemble(results))
}

fn assemble(points: Vec<PointResult>) -> ReportBundle {
    let mut groups: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for p in &points {
        if let (Some(sum), Some(&dt)) = (&p.summary, p.parameters.get("dt")) {
            groups.entry(p.group.clone()).or_default().push((dt, sum.terminal_ledger_residual.abs()));
        }
    }
    let refinement = groups
        .into_iter()
        .filter(|(_, v)| v.len() >= 2)
        .map(|(group, v)| RefinementStudy {
            group,
            dts: v.iter().map(|x| x.0).collect(),
            ledger_residuals: v.iter().map(|x| x.1).collect(),
            ratios: v.windows(2).map(|w| w[0].1 / w[1].1).collect(),
        })
        .collect();
    ReportBundle {
        failures: points.iter().filter(|p| p.error.is_some()).count(),
        points,
        refinement,
    }
}

fn run_point(point: &SweepPoint, compare: &Comparisons) -> PointResult {
    let cfg = &point.config;
    let mut params = BTreeMap::new();
    params.insert("dt".to_string(), cfg.run.dt);
    params.insert("p".to_string(), cfg.nonlinearity.p);
    params.insert("level".to_string(), point.level as f64);
    if let Some(a) = point.amplitude {
        params.insert("amplitude".to_string(), a);
    }
    if let Some(m) = point.model_index {
        params.insert("model".to_string(), m as f64);
    }
    let mut out = PointResult {
        index: point.index,
        label: point.label.clone(),
        group: point.group.clone(),
        parameters: params,
        error: None,
        summary: None,
        fits: Vec::new(),
        fit_errors: Vec::new(),
        criticality: None,
        comparisons: Vec::new(),
        cross_validation: None,
        profile: None,
        record: None,
    };
    let run = || -> Result<(RunRecord, Option<OscillatorDerived>), HarnessError> {
        let mut sim = Simulation::new(cfg.clone())?;
        sim.run()?;
        let derived = sim.derived().cloned();
        Ok((sim.into_record(), derived))
    };
    let (record, derived) = match run() {
        Ok(r) => r,
        Err(e) => {
            out.error = Some(e.to_string());
            return out;
        }
    };
    out.summary = Some(RunSummary::of(&record));

    if compare.fits {
        let window = compare
            .fit_window
            .map(Ok)
            .unwrap_or_else(|| default_window(&record, derived.as_ref()));
        match window {
            Ok(window) => {
                for q in [Norm::L2, Norm::Linf] {
                    for m in [DecayModel::PowerOfT, DecayModel::PowerOfY2, DecayModel::Plateau] {
                        match fit_decay_window(&record, derived.as_ref(), q, m, window) {
                            Ok(f) => out.fits.push(f),
                            Err(e) => out.fit_errors.push(format!("{q:?}/{m:?}: {e}")),
                        }
                    }
                }
                if let Some(d) = &derived {
                    match classify(d.pair(), cfg.grid.n, cfg.nonlinearity.p, d.t0, cfg.run.t_end) {
                        Ok(report) => {
                            let report = report.complete(cfg.run.s, &cfg.nonlinearity, d);
                            out.comparisons = compare_with_theory(&report, &record, d, window);
                            out.criticality = Some(report);
                        }
                        Err(e) => out.fit_errors.push(format!("classify: {e}")),
                    }
                }
            }
            Err(e) => out.fit_errors.push(e.to_string()),
        }
    }
    if compare.cross_validate {
        match cross_validate(cfg) {
            Ok(cv) => {
                out.cross_validation = Some(CrossValidationSummary {
                    terminal_l2: cv.terminal_l2(),
                    max_l2: cv.l2_discrepancy.iter().copied().fold(0.0, f64::max),
                    max_linf: cv.linf_discrepancy.iter().copied().fold(0.0, f64::max),
                })
            }
            Err(e) => out.fit_errors.push(format!("cross_validate: {e}")),
        }
    }
    if compare.profile && cfg.run.frame == FrameChoice::Lens {
        let res = track_profile(cfg, TrackOptions::default()).and_then(|(_, track)| {
            let d = derived.as_ref().ok_or(crate::profile::ProfileError::NotLensFrame)?;
            let ode = ode_for_track(&track, d, &cfg.nonlinearity)?;
            compare_pde_vs_ode(&track, &ode, &cfg.nonlinearity)
        });
        match res {
            Ok(c) => out.profile = Some(c),
            Err(e) => out.fit_errors.push(format!("profile: {e}")),
        }
    }
    out.record = Some(record);
    out
}

/// One comparison per applicable prediction of `report`.
pub fn compare_with_theory(
    report: &CriticalityReport,
    record: &RunRecord,
    derived: &OscillatorDerived,
    window: [f64; 2],
) -> Vec<TheoremComparison> {
    let mut out = Vec::new();
    for pred in report.predicted.iter().filter(|r| r.applicable()) {
        let predicted = pred.envelope.fit_exponent().unwrap_or(f64::NAN);
        let calibration = calibrate_envelope(record, derived, pred.norm, &pred.envelope, window).ok();
        let (measured, note) = match pred.envelope {
            Envelope::PowerOfT { .. } | Envelope::MaxOfPowers { .. } => {
                exponent_of(fit_decay_window(record, Some(derived), pred.norm, DecayModel::PowerOfT, window))
            }
            Envelope::PowerOfY2 { .. } => {
                exponent_of(fit_decay_window(record, Some(derived), pred.norm, DecayModel::PowerOfY2, window))
            }
            Envelope::Plateau => {
                exponent_of(fit_decay_window(record, Some(derived), pred.norm, DecayModel::Plateau, window).map(
                    |f| FitResult {
                        fitted_value: f.slope,
                        ..f
                    },
                ))
            }
            Envelope::Pointwise { .. } => pointwise_exponent(record, derived, window),
        };
        let (rel, ok) = match (measured, pred.envelope) {
            (Some(m), Envelope::Plateau) => (None, m.abs() <= PLATEAU_SLOPE_TOLERANCE),
            (Some(m), _) => {
                let rel = (m - predicted).abs() / predicted.abs();
                (Some(rel), rel <= EXPONENT_TOLERANCE)
            }
            (None, _) => (None, false),
        };
        out.push(TheoremComparison {
            law: pred.law,
            norm: pred.norm,
            envelope: pred.envelope,
            predicted_exponent: predicted,
            measured_exponent: measured,
            relative_error: rel,
            within_tolerance: ok,
            calibration,
            note,
        });
    }
    out
}

fn exponent_of(fit: Result<FitResult, HarnessError>) -> (Option<f64>, Option<String>) {
    match fit {
        Ok(f) => (Some(f.fitted_value), None),
        Err(e) => (None, Some(e.to_string())),
    }
}

/// Slope of log(‖u‖∞|y₂|^(n/2)) against log Y₂.
fn pointwise_exponent(record: &RunRecord, derived: &OscillatorDerived, window: [f64; 2]) -> (Option<f64>, Option<String>) {
    let half_n = 0.5 * derived.n as f64;
    let mut ts = Vec::new();
    let mut scaled = Vec::new();
    let mut y2 = Vec::new();
    for (&t, &q) in record.times.iter().zip(&record.linf_norms) {
        if t < window[0] || t > window[1] {
            continue;
        }
        let (Ok(y), Ok(big)) = (derived.pair().y2(t), derived.y2_integral(t)) else {
            continue;
        };
        ts.push(t);
        scaled.push(q * y.abs().powf(half_n));
        y2.push(big);
    }
    exponent_of(super::fit::fit_series(&ts, &scaled, &y2, Norm::Linf, DecayModel::PowerOfY2, window))
}
