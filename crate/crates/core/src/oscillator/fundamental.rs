use std::io::Write;

use serde::{Deserialize, Serialize};

use super::model::{matched_exponent, Glue, OscillatorModel, SigmaKind};
use super::OscillatorError;
use crate::numerics::{adaptive_simpson, integrate, DenseSolution, Tolerance};

/// How a [`FundamentalPair`] is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairMethod {
    ClosedForm,
    NumericOde,
}

/// y₁, y₂ and their derivatives at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FundamentalValues {
    pub t: f64,
    pub y1: f64,
    pub y2: f64,
    pub dy1: f64,
    pub dy2: f64,
}

impl FundamentalValues {
    pub fn wronskian(&self) -> f64 {
        self.y1 * self.dy2 - self.dy1 * self.y2
    }
}

/// y(t) = a t^m + b t^(1−m) for t ≥ t_start.
#[derive(Debug, Clone, Copy)]
struct PowerCombo {
    a: f64,
    b: f64,
}

impl PowerCombo {
    fn matched(m: f64, t: f64, y: f64, dy: f64) -> Self {
        let det = 1.0 - 2.0 * m;
        let a = (y * (1.0 - m) * t.powf(-m) - dy * t.powf(1.0 - m)) / det;
        let b = (dy * t.powf(m) - y * m * t.powf(m - 1.0)) / det;
        Self { a, b }
    }

    fn eval(&self, m: f64, t: f64) -> (f64, f64) {
        let y = self.a * t.powf(m) + self.b * t.powf(1.0 - m);
        let dy = self.a * m * t.powf(m - 1.0) + self.b * (1.0 - m) * t.powf(-m);
        (y, dy)
    }
}

#[derive(Debug, Clone)]
struct PowerLawPair {
    m: f64,
    t_start: f64,
    glue: Glue,
    /// σ(t_start), used by the constant glue.
    sigma_start: f64,
    y1: PowerCombo,
    y2: PowerCombo,
}

impl PowerLawPair {
    fn new(model: &OscillatorModel) -> Self {
        let (c, m) = model.inverse_square_params().expect("inverse-square model");
        let ts = model.t_start;
        let mut pair = Self {
            m,
            t_start: ts,
            glue: model.glue,
            sigma_start: c / (ts * ts),
            y1: PowerCombo { a: 0.0, b: 0.0 },
            y2: PowerCombo { a: 0.0, b: 0.0 },
        };
        let v = pair.inner(ts);
        pair.y1 = PowerCombo::matched(m, ts, v.y1, v.dy1);
        pair.y2 = PowerCombo::matched(m, ts, v.y2, v.dy2);
        if pair.glue == Glue::Matched {
            // y₁ arrives at t_start with logarithmic derivative exactly m/t_start.
            pair.y1 = PowerCombo {
                a: v.y1 * ts.powf(-m),
                b: 0.0,
            };
        }
        pair
    }

    /// The glued solution on `[0, t_start]`.
    fn inner(&self, t: f64) -> FundamentalValues {
        let ts = self.t_start;
        match self.glue {
            Glue::Constant => {
                let c = self.sigma_start;
                let (y1, dy1, y2, dy2) = if c > 0.0 {
                    let w = c.sqrt();
                    let (s, co) = (w * t).sin_cos();
                    (co, -w * s, s / w, co)
                } else if c < 0.0 {
                    let k = (-c).sqrt();
                    let (s, co) = ((k * t).sinh(), (k * t).cosh());
                    (co, k * s, s / k, co)
                } else {
                    (1.0, 0.0, t, 1.0)
                };
                FundamentalValues { t, y1, y2, dy1, dy2 }
            }
            Glue::Matched => {
                let m = self.m;
                let (g, g1, _) = matched_exponent(m, t / ts);
                let y1 = g.exp();
                let dy1 = g1 / ts * y1;
                // Reduction of order: y₂ = y₁ ∫₀ᵗ y₁⁻².
                let weight = |s: f64| (-2.0 * matched_exponent(m, s / ts).0).exp();
                let integral = adaptive_simpson(&weight, 0.0, t, 1e-15 * ts.max(1.0));
                FundamentalValues {
                    t,
                    y1,
                    y2: y1 * integral,
                    dy1,
                    dy2: dy1 * integral + 1.0 / y1,
                }
            }
        }
    }

    fn eval(&self, t: f64) -> FundamentalValues {
        if t < self.t_start {
            return self.inner(t);
        }
        let (y1, dy1) = self.y1.eval(self.m, t);
        let (y2, dy2) = self.y2.eval(self.m, t);
        FundamentalValues { t, y1, y2, dy1, dy2 }
    }
}

#[derive(Debug, Clone)]
enum Repr {
    Free,
    PowerLaw(PowerLawPair),
    Numeric(DenseSolution<4>),
}

/// The fundamental solutions y₁, y₂ of y'' + σ(t) y = 0 with
/// (y₁, y₁') = (1, 0) and (y₂, y₂') = (0, 1) at t = 0.
#[derive(Debug, Clone)]
pub struct FundamentalPair {
    model: OscillatorModel,
    method: PairMethod,
    horizon: f64,
    pub wronskian_tol: f64,
    repr: Repr,
}

pub const DEFAULT_WRONSKIAN_TOL: f64 = 1e-8;

/// Closed form when the model admits one, adaptive Dormand–Prince otherwise.
pub fn solve_fundamental(
    model: &OscillatorModel,
    horizon: f64,
    tol: f64,
) -> Result<FundamentalPair, OscillatorError> {
    let method = match model.kind {
        SigmaKind::Zero
        | SigmaKind::InverseSquareAttractive { .. }
        | SigmaKind::InverseSquareRepulsive { .. } => PairMethod::ClosedForm,
        _ => PairMethod::NumericOde,
    };
    solve_fundamental_with(model, horizon, tol, method)
}

pub fn solve_fundamental_with(
    model: &OscillatorModel,
    horizon: f64,
    tol: f64,
    method: PairMethod,
) -> Result<FundamentalPair, OscillatorError> {
    model.validate()?;
    if !(tol > 0.0) {
        return Err(OscillatorError::InvalidModel(format!("tolerance must be > 0, got {tol}")));
    }
    if !(horizon > 0.0) {
        return Err(OscillatorError::InvalidModel(format!("horizon must be > 0, got {horizon}")));
    }
    model.check_domain(horizon)?;
    let repr = match method {
        PairMethod::ClosedForm => match model.kind {
            SigmaKind::Zero => Repr::Free,
            SigmaKind::InverseSquareAttractive { .. } | SigmaKind::InverseSquareRepulsive { .. } => {
                Repr::PowerLaw(PowerLawPair::new(model))
            }
            _ => {
                return Err(OscillatorError::InvalidModel(
                    "no closed form for this sigma family".into(),
                ))
            }
        },
        PairMethod::NumericOde => Repr::Numeric(integrate_pair(model, horizon, tol)?),
    };
    Ok(FundamentalPair {
        model: model.clone(),
        method,
        horizon,
        wronskian_tol: DEFAULT_WRONSKIAN_TOL,
        repr,
    })
}

fn integrate_pair(
    model: &OscillatorModel,
    horizon: f64,
    tol: f64,
) -> Result<DenseSolution<4>, OscillatorError> {
    let rhs = |t: f64, y: &[f64; 4]| {
        let s = model.sigma(t).unwrap_or(f64::NAN);
        [y[1], -s * y[0], y[3], -s * y[2]]
    };
    let tol = Tolerance { rtol: tol, atol: tol };
    let mut cuts: Vec<f64> = model
        .breakpoints()
        .into_iter()
        .filter(|&b| b > 0.0 && b < horizon)
        .collect();
    cuts.push(horizon);
    let mut start = 0.0;
    let mut state = [1.0, 0.0, 0.0, 1.0];
    let mut whole: Option<DenseSolution<4>> = None;
    for end in cuts {
        if end <= start {
            continue;
        }
        let piece = integrate(rhs, start, state, end, tol, 10_000_000)?;
        state = piece.eval(end)?;
        match whole.as_mut() {
            Some(w) => w.append(piece),
            None => whole = Some(piece),
        }
        start = end;
    }
    Ok(whole.expect("horizon > 0 yields at least one piece"))
}

impl FundamentalPair {
    pub fn model(&self) -> &OscillatorModel {
        &self.model
    }

    pub fn method(&self) -> PairMethod {
        self.method
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Closed-form pairs extend past the horizon; numeric ones do not.
    pub fn eval(&self, t: f64) -> Result<FundamentalValues, OscillatorError> {
        if !(t >= 0.0) {
            return Err(OscillatorError::Domain { t });
        }
        match &self.repr {
            Repr::Free => Ok(FundamentalValues {
                t,
                y1: 1.0,
                y2: t,
                dy1: 0.0,
                dy2: 1.0,
            }),
            Repr::PowerLaw(p) => Ok(p.eval(t)),
            Repr::Numeric(sol) => {
                let y = sol.eval(t)?;
                Ok(FundamentalValues {
                    t,
                    y1: y[0],
                    dy1: y[1],
                    y2: y[2],
                    dy2: y[3],
                })
            }
        }
    }

    pub fn y1(&self, t: f64) -> Result<f64, OscillatorError> {
        Ok(self.eval(t)?.y1)
    }

    pub fn y2(&self, t: f64) -> Result<f64, OscillatorError> {
        Ok(self.eval(t)?.y2)
    }

    /// Large-time power-law coefficients (a, b) with y = a t^m + b t^(1−m),
    /// available for inverse-square models in closed form.
    pub fn power_law_coefficients(&self) -> Option<(f64, [f64; 2], [f64; 2])> {
        match &self.repr {
            Repr::PowerLaw(p) => Some((p.m, [p.y1.a, p.y1.b], [p.y2.a, p.y2.b])),
            _ => None,
        }
    }

    /// max |W − 1| over `ts`.
    pub fn max_wronskian_defect(&self, ts: &[f64]) -> Result<f64, OscillatorError> {
        let mut worst: f64 = 0.0;
        for &t in ts {
            worst = worst.max((self.eval(t)?.wronskian() - 1.0).abs());
        }
        Ok(worst)
    }

    pub fn samples(&self, ts: &[f64]) -> Result<Vec<FundamentalValues>, OscillatorError> {
        ts.iter().map(|&t| self.eval(t)).collect()
    }

    /// CSV columns: t, y1, y2, dy1, dy2, wronskian.
    pub fn write_csv<W: Write>(&self, ts: &[f64], mut out: W) -> std::io::Result<()> {
        writeln!(out, "t,y1,y2,dy1,dy2,wronskian")?;
        for &t in ts {
            let v = self
                .eval(t)
                .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidInput, e.to_string()))?;
            writeln!(
                out,
                "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
                v.t,
                v.y1,
                v.y2,
                v.dy1,
                v.dy2,
                v.wronskian()
            )?;
        }
        Ok(())
    }
}

/// Uniform grid of `count` points on `[a, b]`.
pub fn linspace(a: f64, b: f64, count: usize) -> Vec<f64> {
    if count < 2 {
        return vec![a];
    }
    (0..count)
        .map(|i| a + (b - a) * i as f64 / (count - 1) as f64)
        .collect()
}

/// Geometric grid of `count` points on `[a, b]`, `a > 0`.
pub fn geomspace(a: f64, b: f64, count: usize) -> Vec<f64> {
    let (la, lb) = (a.ln(), b.ln());
    linspace(la, lb, count).into_iter().map(f64::exp).collect()
}
