use std::sync::Arc;

use serde::Serialize;

use super::fundamental::{geomspace, linspace, FundamentalPair};
use super::OscillatorError;
use crate::numerics::{adaptive_simpson, fit_line};

/// Knobs for [`check_conditions`].
#[derive(Debug, Clone, Copy)]
pub struct ConditionOptions {
    pub samples: usize,
    pub min_samples: usize,
    /// Smallest decay exponent accepted for the |y₁/y₂| ≤ C t^(−δ) condition.
    pub delta_min: f64,
    pub c0_floor: f64,
}

impl Default for ConditionOptions {
    fn default() -> Self {
        Self {
            samples: 2000,
            min_samples: 16,
            delta_min: 1e-2,
            c0_floor: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConditionReport {
    pub c0: f64,
    pub delta: f64,
    /// Fitted prefactor C of |y₁/y₂| ≈ C t^(−δ).
    pub prefactor: f64,
    pub fit_rms: f64,
    pub ok_a: bool,
    pub ok_b: bool,
    pub ok_c: bool,
}

impl ConditionReport {
    pub fn all_ok(&self) -> bool {
        self.ok_a && self.ok_b && self.ok_c
    }
}

pub fn check_conditions(
    pair: &FundamentalPair,
    t0: f64,
    horizon: f64,
) -> Result<ConditionReport, OscillatorError> {
    check_conditions_with(pair, t0, horizon, ConditionOptions::default())
}

pub fn check_conditions_with(
    pair: &FundamentalPair,
    t0: f64,
    horizon: f64,
    opts: ConditionOptions,
) -> Result<ConditionReport, OscillatorError> {
    if !(horizon > t0) {
        return Err(OscillatorError::InvalidModel(format!(
            "horizon {horizon} must exceed T0 {t0}"
        )));
    }
    if opts.samples < opts.min_samples {
        return Err(OscillatorError::InsufficientRange {
            got: opts.samples,
            need: opts.min_samples,
        });
    }
    let mut ts = linspace(t0, horizon, opts.samples);
    if t0 > 0.0 {
        ts.extend(geomspace(t0, horizon, opts.samples));
        ts.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        ts.dedup();
    }
    let vals = pair.samples(&ts)?;

    let c0 = vals.iter().map(|v| v.y2.abs()).fold(f64::INFINITY, f64::min);
    let finite = vals
        .iter()
        .all(|v| v.y1.is_finite() && v.y2.is_finite() && v.dy1.is_finite() && v.dy2.is_finite());
    // Continuity: increments must be consistent with the derivative samples.
    let consistent = vals.windows(2).all(|w| {
        let (a, b) = (&w[0], &w[1]);
        let h = b.t - a.t;
        let check = |ya: f64, yb: f64, da: f64, db: f64| {
            let defect = (yb - ya - 0.5 * h * (da + db)).abs();
            defect <= 1e-2 * (ya.abs() + yb.abs() + h * (da.abs() + db.abs())) + 1e-300
        };
        check(a.y1, b.y1, a.dy1, b.dy1) && check(a.y2, b.y2, a.dy2, b.dy2)
    });

    let tail_start = 0.5 * (t0 + horizon);
    let window = geomspace(tail_start.max(f64::MIN_POSITIVE), horizon, opts.samples.max(opts.min_samples));
    let mut xs = Vec::with_capacity(window.len());
    let mut ys = Vec::with_capacity(window.len());
    for &t in &window {
        let v = pair.eval(t)?;
        let ratio = (v.y1 / v.y2).abs();
        if ratio > 0.0 && ratio.is_finite() {
            xs.push(t.ln());
            ys.push(ratio.ln());
        }
    }
    if xs.len() < opts.min_samples {
        return Err(OscillatorError::InsufficientRange {
            got: xs.len(),
            need: opts.min_samples,
        });
    }
    let fit = fit_line(&xs, &ys).ok_or(OscillatorError::InsufficientRange {
        got: xs.len(),
        need: opts.min_samples,
    })?;
    let delta = -fit.slope;
    Ok(ConditionReport {
        c0,
        delta,
        prefactor: fit.intercept.exp(),
        fit_rms: fit.rms,
        ok_a: c0 > opts.c0_floor,
        ok_b: finite && consistent,
        ok_c: delta >= opts.delta_min,
    })
}

/// Lens-frame quantities Y(t) = y₂/(2y₁) and Y₂(t) = ∫_{T₀}^t |y₂|^(−n(p−1)/2).
#[derive(Debug, Clone)]
pub struct OscillatorDerived {
    pair: Arc<FundamentalPair>,
    pub n: usize,
    pub p: f64,
    pub t0: f64,
    pub horizon: f64,
    pub c0: f64,
    pub delta: f64,
    nodes: Vec<f64>,
    cumulative: Vec<f64>,
}

pub const Y2_QUADRATURE_TOL: f64 = 1e-8;

pub fn build_derived(
    pair: Arc<FundamentalPair>,
    n: usize,
    p: f64,
    t0: f64,
    horizon: f64,
) -> Result<OscillatorDerived, OscillatorError> {
    if !(p > 1.0) || n == 0 {
        return Err(OscillatorError::InvalidModel(format!(
            "need p > 1 and n >= 1, got p = {p}, n = {n}"
        )));
    }
    let cond = check_conditions(&pair, t0, horizon)?;
    if !cond.ok_a || !cond.ok_b {
        return Err(OscillatorError::ConditionFailed(format!(
            "lower bound / continuity fails on [{t0}, {horizon}] (c0 = {:.3e})",
            cond.c0
        )));
    }

    let mut nodes = if t0 > 0.0 {
        geomspace(t0, horizon, 1024)
    } else {
        linspace(t0, horizon, 1024)
    };
    nodes[0] = t0;
    *nodes.last_mut().expect("nodes") = horizon;

    // y₁ must stay away from zero for the lens frame to exist.
    let fine = linspace(t0, horizon, 4096);
    let mut prev_sign = 0.0;
    for t in nodes.iter().chain(fine.iter()).copied() {
        let y1 = pair.y1(t)?;
        if y1.abs() < 1e-12 || (prev_sign != 0.0 && y1.signum() != prev_sign) {
            return Err(OscillatorError::SingularY1 { t });
        }
        prev_sign = y1.signum();
    }

    let k = 0.5 * n as f64 * (p - 1.0);
    let integrand = |t: f64| pair.y2(t).map(|y| y.abs().powf(-k)).unwrap_or(f64::NAN);
    let panel_tol = Y2_QUADRATURE_TOL / nodes.len() as f64;
    let mut cumulative = Vec::with_capacity(nodes.len());
    let mut acc = 0.0;
    cumulative.push(0.0);
    for w in nodes.windows(2) {
        acc += adaptive_simpson(&integrand, w[0], w[1], panel_tol);
        cumulative.push(acc);
    }
    if !acc.is_finite() {
        return Err(OscillatorError::ConditionFailed("Y2 quadrature is not finite".into()));
    }
    Ok(OscillatorDerived {
        pair,
        n,
        p,
        t0,
        horizon,
        c0: cond.c0,
        delta: cond.delta,
        nodes,
        cumulative,
    })
}

impl OscillatorDerived {
    pub fn pair(&self) -> &FundamentalPair {
        &self.pair
    }

    pub fn shared_pair(&self) -> Arc<FundamentalPair> {
        Arc::clone(&self.pair)
    }

    /// n(p − 1)/2.
    pub fn dispersion_exponent(&self) -> f64 {
        0.5 * self.n as f64 * (self.p - 1.0)
    }

    /// Y(t) = y₂(t) / (2 y₁(t)).
    pub fn lens_time(&self, t: f64) -> Result<f64, OscillatorError> {
        let v = self.pair.eval(t)?;
        if v.y1.abs() < 1e-12 {
            return Err(OscillatorError::SingularY1 { t });
        }
        Ok(v.y2 / (2.0 * v.y1))
    }

    /// Y₂(t), nondecreasing, zero at T₀.
    pub fn y2_integral(&self, t: f64) -> Result<f64, OscillatorError> {
        if t < self.t0 || t > self.horizon * (1.0 + 1e-12) {
            return Err(OscillatorError::OutOfRange {
                t,
                start: self.t0,
                end: self.horizon,
            });
        }
        let t = t.min(self.horizon);
        let i = match self
            .nodes
            .binary_search_by(|x| x.partial_cmp(&t).expect("finite"))
        {
            Ok(i) => return Ok(self.cumulative[i]),
            Err(i) => i - 1,
        };
        let k = self.dispersion_exponent();
        let integrand = |s: f64| self.pair.y2(s).map(|y| y.abs().powf(-k)).unwrap_or(f64::NAN);
        let panel_tol = Y2_QUADRATURE_TOL / self.nodes.len() as f64;
        Ok(self.cumulative[i] + adaptive_simpson(&integrand, self.nodes[i], t, panel_tol))
    }

    pub fn y2_between(&self, a: f64, b: f64) -> Result<f64, OscillatorError> {
        Ok(self.y2_integral(b)? - self.y2_integral(a)?)
    }
}
