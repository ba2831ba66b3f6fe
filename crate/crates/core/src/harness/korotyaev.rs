use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::criticality::Nonlinearity;
use crate::oscillator::{FundamentalPair, OscillatorModel, SigmaKind};
use crate::solver::{FrameChoice, InitialData, RunSettings, SimConfig, Simulation};
use crate::spectral::{lp_norm, Grid};

/// Linear runs used to probe ‖u(t)‖∞ ≤ C|y₁(s)y₂(t) − y₁(t)y₂(s)|^(−n/2)‖u(s)‖₁.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KorotyaevSpec {
    pub grid: Grid,
    pub t_end: f64,
    pub dt: f64,
    /// Gaussian width of the L¹-normalised data.
    #[serde(default = "one")]
    pub width: f64,
    /// Start times; `0` and one interior time by default.
    #[serde(default)]
    pub starts: Vec<f64>,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
}

fn one() -> f64 {
    1.0
}

fn default_record_every() -> usize {
    5
}

impl KorotyaevSpec {
    pub fn new(grid: Grid, t_end: f64, dt: f64) -> Self {
        Self {
            grid,
            t_end,
            dt,
            width: 1.0,
            starts: Vec::new(),
            record_every: default_record_every(),
        }
    }

    fn start_times(&self) -> Vec<f64> {
        if self.starts.is_empty() {
            vec![0.0, 0.25 * self.t_end]
        } else {
            self.starts.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KorotyaevEntry {
    pub s: f64,
    pub times: Vec<f64>,
    /// ‖u(t)‖∞ |y₁(s)y₂(t) − y₁(t)y₂(s)|^(n/2) / ‖u(s)‖₁ for t > s.
    pub ratios: Vec<f64>,
    pub sup_ratio: f64,
    /// Same supremum with dt halved.
    pub refined_sup_ratio: f64,
    /// Free-Gaussian closed form of the ratio, σ ≡ 0 only.
    pub oracle: Option<Vec<f64>>,
    pub oracle_max_relative_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KorotyaevReport {
    pub n: usize,
    /// (2π)^(−n/2), the sharp constant of the exact propagator kernel.
    pub kernel_constant: f64,
    pub entries: Vec<KorotyaevEntry>,
    /// max over entries of sup_ratio / kernel_constant.
    pub worst_normalised: f64,
}

/// Evolve L¹-normalised Gaussians under the linear flow from each start time.
pub fn korotyaev_check(
    model: &OscillatorModel,
    pair: Arc<FundamentalPair>,
    spec: &KorotyaevSpec,
) -> Result<KorotyaevReport, HarnessError> {
    let n = spec.grid.n;
    let nf = n as f64;
    let kernel_constant = (2.0 * PI).powf(-0.5 * nf);
    let mut entries = Vec::new();
    for s in spec.start_times() {
        if !(s >= 0.0 && s < spec.t_end) {
            return Err(HarnessError::Spec(format!("start time {s} outside [0, {})", spec.t_end)));
        }
        let (times, ratios) = ratios_from(model, &pair, spec, s, spec.dt)?;
        let (_, fine) = ratios_from(model, &pair, spec, s, 0.5 * spec.dt)?;
        let sup = ratios.iter().copied().fold(0.0, f64::max);
        let refined = fine.iter().copied().fold(0.0, f64::max);
        let oracle = matches!(model.kind, SigmaKind::Zero).then(|| {
            let w2 = spec.width * spec.width;
            times
                .iter()
                .map(|&t| {
                    let tau = t - s;
                    (2.0 * PI * w2).powf(-0.5 * nf) * (1.0 + tau * tau / (w2 * w2)).powf(-0.25 * nf) * tau.powf(0.5 * nf)
                })
                .collect::<Vec<f64>>()
        });
        let oracle_err = oracle.as_ref().map(|o| {
            o.iter()
                .zip(&ratios)
                .map(|(a, b)| (a - b).abs() / a)
                .fold(0.0, f64::max)
        });
        entries.push(KorotyaevEntry {
            s,
            times,
            ratios,
            sup_ratio: sup,
            refined_sup_ratio: refined,
            oracle,
            oracle_max_relative_error: oracle_err,
        });
    }
    let worst = entries.iter().map(|e| e.sup_ratio / kernel_constant).fold(0.0, f64::max);
    Ok(KorotyaevReport {
        n,
        kernel_constant,
        entries,
        worst_normalised: worst,
    })
}

fn ratios_from(
    model: &OscillatorModel,
    pair: &Arc<FundamentalPair>,
    spec: &KorotyaevSpec,
    s: f64,
    dt: f64,
) -> Result<(Vec<f64>, Vec<f64>), HarnessError> {
    let n = spec.grid.n as f64;
    let w = spec.width;
    let mut run = RunSettings::new(s, spec.t_end, dt);
    run.frame = FrameChoice::Original;
    run.initial_data = InitialData::Gaussian {
        width: w,
        // Unit L¹ norm: (πw²)^(−n/4)·a·(2πw²)^(n/2) = 1.
        amplitude: (PI * w * w).powf(0.25 * n) * (2.0 * PI * w * w).powf(-0.5 * n),
        center: Vec::new(),
        chirp: 0.0,
    };
    run.record_every = spec.record_every;
    run.cheap_diagnostics = true;
    run.ledger_step_tol = f64::INFINITY;
    let config = SimConfig {
        grid: spec.grid,
        oscillator: model.clone(),
        nonlinearity: Nonlinearity::new(2.0, 0.0, 0.0)?,
        run,
    };
    let mut sim = Simulation::with_pair(config, Arc::clone(pair))?;
    let l1 = lp_norm(sim.state(), 1.0);
    sim.run()?;
    let rec = sim.into_record();
    let at_s = pair.eval(s)?;
    let mut times = Vec::new();
    let mut ratios = Vec::new();
    for (&t, &linf) in rec.times.iter().zip(&rec.linf_norms) {
        if t <= s {
            continue;
        }
        let v = pair.eval(t)?;
        let w = (at_s.y1 * v.y2 - v.y1 * at_s.y2).abs();
        times.push(t);
        ratios.push(linf * w.powf(0.5 * n) / l1);
    }
    Ok((times, ratios))
}
