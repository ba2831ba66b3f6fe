use serde::{Deserialize, Serialize};

use super::OscillatorError;

/// Family of harmonic-coefficient profiles σ(t).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SigmaKind {
    /// σ ≡ 0, the free equation.
    Zero,
    /// σ(t) = σ₀ t⁻² for t ≥ t_start, σ₀ ∈ [0, 1/4).
    InverseSquareAttractive { sigma0: f64 },
    /// σ(t) = −ρ t⁻² for t ≥ t_start, ρ ≥ 0.
    InverseSquareRepulsive { rho: f64 },
    /// σ(t) = a (1 + t)^(−β) with β > 2, so t²σ(t) → 0.
    SubQuadratic { amplitude: f64, decay_power: f64 },
    /// Piecewise-linear interpolation of samples at strictly increasing knots.
    Tabulated { knots: Vec<f64>, values: Vec<f64> },
}

/// How an inverse-square profile is continued onto `[0, t_start)`, where t⁻²
/// is singular.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Glue {
    /// σ chosen so that y₁ = exp(g(t/t_start)) with a cubic g, arriving at
    /// t_start as a pure power c₁ t^m. σ stays continuous at t_start.
    #[default]
    Matched,
    /// σ(t) = σ(t_start) on `[0, t_start)`. y₁ then picks up the dominant
    /// power t^(1−m) and the ratio |y₁/y₂| no longer decays.
    Constant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscillatorModel {
    #[serde(flatten)]
    pub kind: SigmaKind,
    #[serde(default = "default_t_start")]
    pub t_start: f64,
    #[serde(rename = "T0", alias = "t0", default = "default_t_start")]
    pub t0: f64,
    #[serde(default)]
    pub glue: Glue,
}

fn default_t_start() -> f64 {
    1.0
}

impl OscillatorModel {
    pub fn new(kind: SigmaKind, t_start: f64, t0: f64) -> Result<Self, OscillatorError> {
        let m = Self {
            kind,
            t_start,
            t0,
            glue: Glue::Matched,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn zero(t0: f64) -> Self {
        Self {
            kind: SigmaKind::Zero,
            t_start: t0,
            t0,
            glue: Glue::Matched,
        }
    }

    pub fn attractive(sigma0: f64, t_start: f64) -> Result<Self, OscillatorError> {
        Self::new(SigmaKind::InverseSquareAttractive { sigma0 }, t_start, t_start)
    }

    pub fn repulsive(rho: f64, t_start: f64) -> Result<Self, OscillatorError> {
        Self::new(SigmaKind::InverseSquareRepulsive { rho }, t_start, t_start)
    }

    pub fn with_glue(mut self, glue: Glue) -> Self {
        self.glue = glue;
        self
    }

    pub fn validate(&self) -> Result<(), OscillatorError> {
        let bad = |msg: String| Err(OscillatorError::InvalidModel(msg));
        if !(self.t0 >= 0.0) {
            return bad(format!("T0 must be >= 0, got {}", self.t0));
        }
        match &self.kind {
            SigmaKind::Zero => {}
            SigmaKind::InverseSquareAttractive { sigma0 } => {
                if !(0.0..0.25).contains(sigma0) {
                    return bad(format!("sigma0 must lie in [0, 1/4), got {sigma0}"));
                }
            }
            SigmaKind::InverseSquareRepulsive { rho } => {
                if !(*rho >= 0.0) || !rho.is_finite() {
                    return bad(format!("rho must be >= 0, got {rho}"));
                }
            }
            SigmaKind::SubQuadratic {
                amplitude,
                decay_power,
            } => {
                if !amplitude.is_finite() || !(*decay_power > 2.0) {
                    return bad(format!(
                        "sub-quadratic model needs finite amplitude and decay power > 2, got ({amplitude}, {decay_power})"
                    ));
                }
            }
            SigmaKind::Tabulated { knots, values } => {
                if knots.len() < 2 || knots.len() != values.len() {
                    return bad("tabulated sigma needs >= 2 knots and one value per knot".into());
                }
                if knots.windows(2).any(|w| !(w[1] > w[0])) {
                    return bad("tabulated knots must be strictly increasing".into());
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return bad("tabulated sigma values must be finite".into());
                }
            }
        }
        if self.is_inverse_square() {
            if !(self.t_start > 0.0) {
                return bad(format!("t_start must be > 0, got {}", self.t_start));
            }
            if self.t0 < self.t_start {
                return bad(format!(
                    "T0 = {} precedes t_start = {}; the power law only holds from t_start on",
                    self.t0, self.t_start
                ));
            }
        }
        Ok(())
    }

    pub fn is_inverse_square(&self) -> bool {
        matches!(
            self.kind,
            SigmaKind::InverseSquareAttractive { .. } | SigmaKind::InverseSquareRepulsive { .. }
        )
    }

    /// Coefficient c in σ(t) = c t⁻² and the exponent m of the y₁ power law.
    pub(crate) fn inverse_square_params(&self) -> Option<(f64, f64)> {
        match self.kind {
            SigmaKind::InverseSquareAttractive { sigma0 } => {
                Some((sigma0, 0.5 * (1.0 - (1.0 - 4.0 * sigma0).sqrt())))
            }
            SigmaKind::InverseSquareRepulsive { rho } => {
                Some((-rho, 0.5 * (1.0 - (1.0 + 4.0 * rho).sqrt())))
            }
            _ => None,
        }
    }

    /// Large-time exponent of y₁ (μ for attractive, θ₋ for repulsive).
    pub fn power_exponent(&self) -> Option<f64> {
        self.inverse_square_params().map(|(_, m)| m)
    }

    /// Times where σ is only piecewise smooth; integrators stop there.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.kind {
            SigmaKind::InverseSquareAttractive { .. } | SigmaKind::InverseSquareRepulsive { .. } => {
                vec![self.t_start]
            }
            SigmaKind::Tabulated { knots, .. } => knots.clone(),
            _ => Vec::new(),
        }
    }

    pub fn sigma(&self, t: f64) -> Result<f64, OscillatorError> {
        if !(t >= 0.0) {
            return Err(OscillatorError::Domain { t });
        }
        Ok(match &self.kind {
            SigmaKind::Zero => 0.0,
            SigmaKind::InverseSquareAttractive { .. } | SigmaKind::InverseSquareRepulsive { .. } => {
                let (c, m) = self.inverse_square_params().expect("inverse-square kind");
                let ts = self.t_start;
                if t >= ts {
                    c / (t * t)
                } else {
                    match self.glue {
                        Glue::Constant => c / (ts * ts),
                        Glue::Matched => {
                            let (_, g1, g2) = matched_exponent(m, t / ts);
                            -(g2 + g1 * g1) / (ts * ts)
                        }
                    }
                }
            }
            SigmaKind::SubQuadratic {
                amplitude,
                decay_power,
            } => amplitude * (1.0 + t).powf(-decay_power),
            SigmaKind::Tabulated { knots, values } => {
                let first = knots[0];
                let last = *knots.last().expect("non-empty knots");
                if t < first || t > last {
                    return Err(OscillatorError::Domain { t });
                }
                let i = match knots.binary_search_by(|k| k.partial_cmp(&t).expect("finite")) {
                    Ok(i) => return Ok(values[i]),
                    Err(i) => i - 1,
                };
                let w = (t - knots[i]) / (knots[i + 1] - knots[i]);
                values[i] * (1.0 - w) + values[i + 1] * w
            }
        })
    }

    /// Check σ is evaluable on `[0, horizon]`.
    pub fn check_domain(&self, horizon: f64) -> Result<(), OscillatorError> {
        if let SigmaKind::Tabulated { knots, .. } = &self.kind {
            if knots[0] > 0.0 {
                return Err(OscillatorError::Domain { t: 0.0 });
            }
            if *knots.last().expect("non-empty") < horizon {
                return Err(OscillatorError::Domain { t: horizon });
            }
        }
        Ok(())
    }
}

/// g(τ) = (3m/2)τ² − (2m/3)τ³ and its first two derivatives.
///
/// g(0) = g'(0) = 0 keeps y₁(0) = 1, y₁'(0) = 0; g'(1) = m and g''(1) = −m make
/// y₁ = e^g meet c₁ t^m to second order at τ = 1.
pub(crate) fn matched_exponent(m: f64, tau: f64) -> (f64, f64, f64) {
    let g = 1.5 * m * tau * tau - 2.0 / 3.0 * m * tau * tau * tau;
    let g1 = 3.0 * m * tau - 2.0 * m * tau * tau;
    let g2 = 3.0 * m - 4.0 * m * tau;
    (g, g1, g2)
}
