use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::criticality::{Envelope, Nonlinearity, Norm};
use crate::numerics::fit_line;
use crate::oscillator::OscillatorDerived;
use crate::solver::RunRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayModel {
    /// log q against log t.
    PowerOfT,
    /// log q against log Y₂(t).
    PowerOfY2,
    /// log q against log log t.
    LogPower,
    /// Terminal mean level; the slope against log t measures any drift.
    Plateau,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum FitModel {
    PowerOfT { exponent: f64 },
    PowerOfY2 { exponent: f64 },
    LogPower { exponent: f64 },
    Plateau { level: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub quantity: Norm,
    pub model: FitModel,
    /// Exponent, or the level for a plateau.
    pub fitted_value: f64,
    /// Least-squares slope in the model's log coordinates.
    pub slope: f64,
    pub intercept: f64,
    /// RMS of the log-scale fit.
    pub residual: f64,
    pub window: [f64; 2],
    pub samples: usize,
}

/// Fit over the last half of [T₀, t_end].
pub fn fit_decay(
    record: &RunRecord,
    derived: Option<&OscillatorDerived>,
    quantity: Norm,
    model: DecayModel,
) -> Result<FitResult, HarnessError> {
    fit_decay_window(record, derived, quantity, model, default_window(record, derived)?)
}

pub fn default_window(record: &RunRecord, derived: Option<&OscillatorDerived>) -> Result<[f64; 2], HarnessError> {
    let (Some(&first), Some(&last)) = (record.times.first(), record.times.last()) else {
        return Err(HarnessError::DegenerateData("empty record".into()));
    };
    let start = derived.map_or(first, |d| d.t0.max(first));
    Ok([0.5 * (start + last), last])
}

pub fn fit_decay_window(
    record: &RunRecord,
    derived: Option<&OscillatorDerived>,
    quantity: Norm,
    model: DecayModel,
    window: [f64; 2],
) -> Result<FitResult, HarnessError> {
    let values = match quantity {
        Norm::L2 => &record.l2_norms,
        Norm::Linf => &record.linf_norms,
    };
    let y2: Vec<f64> = match derived {
        Some(d) => record
            .times
            .iter()
            .map(|&t| if t >= d.t0 { d.y2_integral(t).unwrap_or(f64::NAN) } else { f64::NAN })
            .collect(),
        None => record.y2_integral.clone(),
    };
    fit_series(&record.times, values, &y2, quantity, model, window)
}

/// Fit `values` sampled at `times`; `y2` is consulted only by `PowerOfY2`.
pub fn fit_series(
    times: &[f64],
    values: &[f64],
    y2: &[f64],
    quantity: Norm,
    model: DecayModel,
    window: [f64; 2],
) -> Result<FitResult, HarnessError> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut raw = Vec::new();
    for (i, (&t, &q)) in times.iter().zip(values).enumerate() {
        if t < window[0] || t > window[1] {
            continue;
        }
        if !(q > 0.0) || !q.is_finite() {
            return Err(HarnessError::DegenerateData(format!("{quantity:?} = {q} at t = {t}")));
        }
        let x = match model {
            DecayModel::PowerOfT | DecayModel::Plateau => t.ln(),
            DecayModel::PowerOfY2 => {
                let y = y2.get(i).copied().unwrap_or(f64::NAN);
                if !(y > 0.0) {
                    return Err(HarnessError::DegenerateData(format!("Y2 = {y} at t = {t}")));
                }
                y.ln()
            }
            DecayModel::LogPower => {
                if !(t > 1.0) {
                    return Err(HarnessError::DegenerateData(format!("log log t undefined at t = {t}")));
                }
                t.ln().ln()
            }
        };
        xs.push(x);
        ys.push(q.ln());
        raw.push(q);
    }
    let line = fit_line(&xs, &ys).ok_or_else(|| {
        HarnessError::DegenerateData(format!("{} usable samples in window {window:?}", xs.len()))
    })?;
    let (model, value) = match model {
        DecayModel::PowerOfT => (FitModel::PowerOfT { exponent: line.slope }, line.slope),
        DecayModel::PowerOfY2 => (FitModel::PowerOfY2 { exponent: line.slope }, line.slope),
        DecayModel::LogPower => (FitModel::LogPower { exponent: line.slope }, line.slope),
        DecayModel::Plateau => {
            let level = raw.iter().sum::<f64>() / raw.len() as f64;
            (FitModel::Plateau { level }, level)
        }
    };
    Ok(FitResult {
        quantity,
        model,
        fitted_value: value,
        slope: line.slope,
        intercept: line.intercept,
        residual: line.rms,
        window,
        samples: xs.len(),
    })
}

/// Ratio of a recorded norm to an envelope shape over a window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnvelopeCalibration {
    /// sup q/envelope, the smallest constant making the envelope an upper bound.
    pub constant: f64,
    pub floor: f64,
    /// constant / floor; near 1 when the envelope has the right shape.
    pub spread: f64,
    pub window: [f64; 2],
}

pub fn calibrate_envelope(
    record: &RunRecord,
    derived: &OscillatorDerived,
    quantity: Norm,
    envelope: &Envelope,
    window: [f64; 2],
) -> Result<EnvelopeCalibration, HarnessError> {
    let values = match quantity {
        Norm::L2 => &record.l2_norms,
        Norm::Linf => &record.linf_norms,
    };
    let mut hi = f64::NEG_INFINITY;
    let mut lo = f64::INFINITY;
    for (&t, &q) in record.times.iter().zip(values) {
        if t < window[0] || t > window[1] {
            continue;
        }
        let e = envelope.eval(t, derived)?;
        if !(e > 0.0) || !e.is_finite() {
            return Err(HarnessError::DegenerateData(format!("envelope {e} at t = {t}")));
        }
        hi = hi.max(q / e);
        lo = lo.min(q / e);
    }
    if !hi.is_finite() {
        return Err(HarnessError::DegenerateData(format!("no samples in window {window:?}")));
    }
    Ok(EnvelopeCalibration {
        constant: hi,
        floor: lo,
        spread: hi / lo,
        window,
    })
}

/// The C for which ‖u(t)‖₂ ≥ e^(−C|Im λ|‖u₀‖^p)‖u₀‖₂ holds with equality at
/// the smallest recorded mass.
pub fn calibrate_lower_bound(record: &RunRecord, nl: &Nonlinearity) -> Result<f64, HarnessError> {
    let Some(&m0) = record.l2_norms.first() else {
        return Err(HarnessError::DegenerateData("empty record".into()));
    };
    let min = record.l2_norms.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min > 0.0) || !(m0 > 0.0) || nl.lambda_im == 0.0 {
        return Err(HarnessError::DegenerateData(format!("mass {min}, |Im lambda| {}", nl.lambda_im.abs())));
    }
    Ok((m0 / min).ln() / (nl.lambda_im.abs() * m0.powf(nl.p)))
}
