//! Critical / sub-critical / super-critical classification of a nonlinearity
//! power against the dispersive rate of y₂, threshold exponents, and the
//! decay laws each regime predicts.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::fit_line;
use crate::oscillator::{geomspace, FundamentalPair, OscillatorDerived, OscillatorError, SigmaKind};

/// Tolerance on the fitted tail exponent α separating the three classes.
pub const TOL_CLASS: f64 = 1e-2;
/// Log-scale RMS above which the tail fit is declared indeterminate.
pub const INDETERMINATE_RMS: f64 = 1e-2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CriticalityError {
    #[error("invalid nonlinearity: {0}")]
    InvalidNonlinearity(String),
    #[error(transparent)]
    Oscillator(#[from] OscillatorError),
}

/// Power nonlinearity λ|u|^(p−1)u.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Nonlinearity {
    pub p: f64,
    #[serde(default)]
    pub lambda_re: f64,
    #[serde(default)]
    pub lambda_im: f64,
}

impl Nonlinearity {
    /// λ = 0 is accepted and means a linear run.
    pub fn new(p: f64, lambda_re: f64, lambda_im: f64) -> Result<Self, CriticalityError> {
        let nl = Self {
            p,
            lambda_re,
            lambda_im,
        };
        nl.validate()?;
        Ok(nl)
    }

    pub fn validate(&self) -> Result<(), CriticalityError> {
        if !(self.p > 1.0) || !self.p.is_finite() {
            return Err(CriticalityError::InvalidNonlinearity(format!(
                "p must be > 1, got {}",
                self.p
            )));
        }
        if !self.lambda_re.is_finite() || !self.lambda_im.is_finite() {
            return Err(CriticalityError::InvalidNonlinearity("lambda must be finite".into()));
        }
        if self.lambda_im > 0.0 {
            return Err(CriticalityError::InvalidNonlinearity(format!(
                "Im lambda must be <= 0 (dissipative), got {}",
                self.lambda_im
            )));
        }
        Ok(())
    }

    pub fn is_linear(&self) -> bool {
        self.lambda_re == 0.0 && self.lambda_im == 0.0
    }

    pub fn is_dissipative(&self) -> bool {
        self.lambda_im < 0.0
    }
}

/// (p−1)/(2√p)·|Re λ| ≤ |Im λ|.
pub fn strong_dissipation(nl: &Nonlinearity) -> bool {
    (nl.p - 1.0) / (2.0 * nl.p.sqrt()) * nl.lambda_re.abs() <= nl.lambda_im.abs()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdExponents {
    pub p_n: f64,
    pub p_star: f64,
    pub p_star_star: f64,
}

pub fn threshold_exponents(n: usize) -> ThresholdExponents {
    assert!(n >= 1, "dimension must be >= 1");
    let nf = n as f64;
    let p_n = if n == 1 {
        1.0 + 2f64.sqrt()
    } else {
        (3.0 + (nf * nf + 2.0 * nf + 9.0).sqrt()) / (nf + 2.0)
    };
    let p_star = (nf * nf + 3.0 * nf + 6.0 + (9.0 * nf * nf + 28.0 * nf + 36.0).sqrt())
        / ((nf + 2.0) * (nf + 2.0));
    let p_star_star = match n {
        1 => 2.0,
        2 => 1.0,
        _ => (4.0 + nf) / (2.0 + nf),
    };
    ThresholdExponents {
        p_n,
        p_star,
        p_star_star,
    }
}

/// γ(1) = 1/2, γ(n) = 1 for n ≥ 2.
pub fn gamma(n: usize) -> f64 {
    if n == 1 {
        0.5
    } else {
        1.0
    }
}

/// Upper end of the admissible θ window, n(1−p)/2 + γp.
pub fn theta_upper(n: usize, p: f64) -> f64 {
    0.5 * n as f64 * (1.0 - p) + gamma(n) * p
}

/// 0.9 of the window, kept below 1.
pub fn default_theta(n: usize, p: f64) -> f64 {
    (0.9 * theta_upper(n, p)).min(0.99)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriticalityClass {
    Critical,
    SubCritical,
    SuperCritical,
    Indeterminate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Norm {
    L2,
    Linf,
}

/// Which decay statement a prediction comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayLaw {
    /// Small data, critical: ‖u‖∞ ≲ |y₂|^(−n/2) Y₂^(−1/(p−1)).
    SmallDataPointwise,
    /// Small data, critical: ‖u‖₂ ≲ Y₂^(−s/((p−1)(s+n))).
    SmallDataMass,
    /// Small data, super-critical: ‖u‖₂ ≥ e^(−C|Im λ|‖u₀‖^p)‖u₀‖₂.
    SmallDataLowerBound,
    /// Strong dissipation, any size, sub-critical or critical.
    LargeDataMass,
    /// Strong dissipation with σ ≡ 0, regime chosen by p*, p**.
    FreeMassDecay,
}

/// Shape of an envelope with its constant set to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Envelope {
    /// t^exponent
    PowerOfT { exponent: f64 },
    /// Y₂(t)^exponent
    PowerOfY2 { exponent: f64 },
    /// |y₂|^(−n/2) Y₂^exponent
    Pointwise { exponent: f64 },
    /// max{t^a, t^b}
    MaxOfPowers { a: f64, b: f64 },
    /// Time-independent level.
    Plateau,
}

impl Envelope {
    pub fn eval(&self, t: f64, derived: &OscillatorDerived) -> Result<f64, OscillatorError> {
        Ok(match *self {
            Envelope::PowerOfT { exponent } => t.powf(exponent),
            Envelope::PowerOfY2 { exponent } => derived.y2_integral(t)?.powf(exponent),
            Envelope::Pointwise { exponent } => {
                let y2 = derived.pair().y2(t)?.abs();
                y2.powf(-0.5 * derived.n as f64) * derived.y2_integral(t)?.powf(exponent)
            }
            Envelope::MaxOfPowers { a, b } => t.powf(a).max(t.powf(b)),
            Envelope::Plateau => 1.0,
        })
    }

    /// The exponent a fit in the matching coordinates should reproduce.
    pub fn fit_exponent(&self) -> Option<f64> {
        match *self {
            Envelope::PowerOfT { exponent }
            | Envelope::PowerOfY2 { exponent }
            | Envelope::Pointwise { exponent } => Some(exponent),
            Envelope::MaxOfPowers { a, b } => Some(a.max(b)),
            Envelope::Plateau => Some(0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatePrediction {
    pub law: DecayLaw,
    pub norm: Norm,
    pub formula: String,
    pub envelope: Envelope,
    /// `None` when applicable, otherwise the failed hypothesis.
    pub not_applicable: Option<String>,
    pub parameters: Vec<(String, f64)>,
}

impl RatePrediction {
    pub fn applicable(&self) -> bool {
        self.not_applicable.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalityReport {
    pub n: usize,
    pub p: f64,
    pub class: CriticalityClass,
    /// Fitted tail exponent α in |y₂|^(−n(p−1)/2) ≈ c t^(−α).
    pub alpha: f64,
    /// Fitted exponent β in |y₂| ≈ c t^β.
    pub y2_exponent: f64,
    pub fit_rms: f64,
    pub c_plus: f64,
    pub delta_star: Option<f64>,
    pub delta_upper: Option<f64>,
    pub p_critical: Option<f64>,
    /// |y₁/y₂| decay exponent δ used by the large-data laws.
    pub delta: f64,
    pub strong_dissipation: Option<bool>,
    pub theta_range: (f64, f64),
    pub theta: f64,
    pub gamma: f64,
    pub s1: Option<f64>,
    pub thresholds: ThresholdExponents,
    pub predicted: Vec<RatePrediction>,
}

/// Fit the tail of |y₂|^(−n(p−1)/2) and classify.
pub fn classify(
    pair: &FundamentalPair,
    n: usize,
    p: f64,
    t0: f64,
    horizon: f64,
) -> Result<CriticalityReport, CriticalityError> {
    if !(p > 1.0) || n == 0 {
        return Err(CriticalityError::InvalidNonlinearity(format!(
            "need p > 1 and n >= 1, got p = {p}, n = {n}"
        )));
    }
    let tail = geomspace(0.5 * (t0 + horizon), horizon, 400);
    let mut ts = Vec::with_capacity(tail.len());
    let mut y2s = Vec::with_capacity(tail.len());
    for &t in &tail {
        ts.push(t);
        y2s.push(pair.y2(t)?);
    }
    let delta = crate::oscillator::check_conditions(pair, t0, horizon)?.delta;
    let mut report = classify_samples(&ts, &y2s, n, p)?;
    report.delta = delta;
    report.p_critical = closed_form_critical_power(pair, n).or(report.p_critical);
    Ok(report)
}

/// Classification from tabulated tail samples of y₂.
pub fn classify_samples(
    ts: &[f64],
    y2s: &[f64],
    n: usize,
    p: f64,
) -> Result<CriticalityReport, CriticalityError> {
    let k = 0.5 * n as f64 * (p - 1.0);
    let xs: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let ly: Vec<f64> = y2s.iter().map(|y| y.abs().ln()).collect();
    let fit = fit_line(&xs, &ly).ok_or_else(|| {
        CriticalityError::Oscillator(OscillatorError::InsufficientRange {
            got: xs.len(),
            need: 2,
        })
    })?;
    let beta = fit.slope;
    let alpha = k * beta;
    let c_plus = (-k * fit.intercept).exp();
    let rms = k * fit.rms;
    let class = if !rms.is_finite() || rms > INDETERMINATE_RMS {
        CriticalityClass::Indeterminate
    } else if (alpha - 1.0).abs() <= TOL_CLASS {
        CriticalityClass::Critical
    } else if alpha < 1.0 {
        CriticalityClass::SubCritical
    } else {
        CriticalityClass::SuperCritical
    };
    let (delta_star, delta_upper) = match class {
        CriticalityClass::SubCritical => (Some(1.0 - alpha), None),
        CriticalityClass::SuperCritical => (None, Some(alpha - 1.0)),
        CriticalityClass::Critical => (Some(0.0), None),
        CriticalityClass::Indeterminate => (None, None),
    };
    Ok(CriticalityReport {
        n,
        p,
        class,
        alpha,
        y2_exponent: beta,
        fit_rms: rms,
        c_plus,
        delta_star,
        delta_upper,
        p_critical: (beta > 0.0).then(|| 1.0 + 2.0 / (n as f64 * beta)),
        delta: f64::NAN,
        strong_dissipation: None,
        theta_range: (0.0, theta_upper(n, p)),
        theta: default_theta(n, p),
        gamma: gamma(n),
        s1: None,
        thresholds: threshold_exponents(n),
        predicted: Vec::new(),
    })
}

fn closed_form_critical_power(pair: &FundamentalPair, n: usize) -> Option<f64> {
    let nf = n as f64;
    match pair.model().kind {
        SigmaKind::Zero | SigmaKind::SubQuadratic { .. } => Some(1.0 + 2.0 / nf),
        SigmaKind::InverseSquareAttractive { .. } | SigmaKind::InverseSquareRepulsive { .. } => {
            // y₂ ~ t^(1−m) whenever its leading coefficient is nonzero.
            let (m, _, c2) = pair.power_law_coefficients()?;
            (c2[1] != 0.0).then(|| 1.0 + 2.0 / (nf * (1.0 - m)))
        }
        SigmaKind::Tabulated { .. } => None,
    }
}

/// Which branch of the σ ≡ 0 mass-decay law applies at `p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FreeDecayBranch {
    /// p*(n) ≤ p < 1 + 2/n: t^(−2δ*/((p−1)(2+n))).
    Upper,
    /// p**(n) < p < p*(n): t^(δ* − δθ/2).
    Lower,
}

pub fn free_decay_branch(n: usize, p: f64) -> Option<FreeDecayBranch> {
    let th = threshold_exponents(n);
    let crit = 1.0 + 2.0 / n as f64;
    if p >= th.p_star && p < crit {
        Some(FreeDecayBranch::Upper)
    } else if p > th.p_star_star && p < th.p_star {
        Some(FreeDecayBranch::Lower)
    } else {
        None
    }
}

/// −2δ*/((p−1)(2+n)), the upper-branch exponent of t.
pub fn upper_branch_exponent(n: usize, p: f64, delta_star: f64) -> f64 {
    -2.0 * delta_star / ((p - 1.0) * (2.0 + n as f64))
}

/// δ* − δθ/2, the lower-branch exponent of t.
pub fn lower_branch_exponent(delta_star: f64, delta: f64, theta: f64) -> f64 {
    delta_star - 0.5 * delta * theta
}

/// Decay envelopes implied by the report, with unapplicable ones flagged.
pub fn predicted_rates(
    report: &CriticalityReport,
    s: f64,
    nl: &Nonlinearity,
    derived: &OscillatorDerived,
) -> Vec<RatePrediction> {
    let n = report.n;
    let nf = n as f64;
    let p = report.p;
    let sd = strong_dissipation(nl);
    let delta = derived.delta;
    let theta = report.theta;
    let mut out = Vec::new();

    let small_data_gate = |need: CriticalityClass| -> Option<String> {
        if !(1..=3).contains(&n) {
            Some(format!("requires 1 <= n <= 3, got n = {n}"))
        } else if !(s > 0.5 * nf && s < p) {
            Some(format!("requires n/2 < s < p, got s = {s}"))
        } else if !nl.is_dissipative() {
            Some("requires Im lambda < 0".into())
        } else if report.class != need {
            Some(format!("class is {:?}, law needs {:?}", report.class, need))
        } else {
            None
        }
    };

    let crit_gate = small_data_gate(CriticalityClass::Critical);
    out.push(RatePrediction {
        law: DecayLaw::SmallDataPointwise,
        norm: Norm::Linf,
        formula: "C |y2(t)|^(-n/2) Y2(t)^(-1/(p-1))".into(),
        envelope: Envelope::Pointwise {
            exponent: -1.0 / (p - 1.0),
        },
        not_applicable: crit_gate.clone(),
        parameters: vec![("n".into(), nf), ("p".into(), p)],
    });
    let mass_exp = -s / ((p - 1.0) * (s + nf));
    out.push(RatePrediction {
        law: DecayLaw::SmallDataMass,
        norm: Norm::L2,
        formula: "C Y2(t)^(-s/((p-1)(s+n)))".into(),
        envelope: Envelope::PowerOfY2 { exponent: mass_exp },
        not_applicable: crit_gate,
        parameters: vec![("s".into(), s), ("exponent".into(), mass_exp)],
    });
    out.push(RatePrediction {
        law: DecayLaw::SmallDataLowerBound,
        norm: Norm::L2,
        formula: "exp(-C |Im lambda| ||u0||^p) ||u0||_2 <= ||u(t)||_2 <= ||u0||_2".into(),
        envelope: Envelope::Plateau,
        not_applicable: small_data_gate(CriticalityClass::SuperCritical),
        parameters: vec![("delta_upper".into(), report.delta_upper.unwrap_or(f64::NAN))],
    });

    // Large data under strong dissipation.
    let large_gate = if !sd {
        Some("strong dissipation condition fails".to_string())
    } else {
        match report.class {
            CriticalityClass::SubCritical => {
                let ds = report.delta_star.unwrap_or(f64::NAN);
                (ds >= 0.5 * delta * theta)
                    .then(|| format!("delta_* = {ds:.4} is not below delta*theta/2 = {:.4}", 0.5 * delta * theta))
            }
            CriticalityClass::Critical => None,
            other => Some(format!("class is {other:?}, law needs sub-critical or critical")),
        }
    };
    let (large_env, large_formula) = match report.class {
        CriticalityClass::Critical => (
            Envelope::PowerOfY2 {
                exponent: -2.0 / ((p - 1.0) * (2.0 + nf)),
            },
            "C Y2(t)^(-2/((p-1)(2+n)))",
        ),
        _ => {
            let ds = report.delta_star.unwrap_or(f64::NAN);
            (
                Envelope::MaxOfPowers {
                    a: upper_branch_exponent(n, p, ds),
                    b: lower_branch_exponent(ds, delta, theta),
                },
                "C max{t^(-2 delta_*/((p-1)(2+n))), t^(delta_* - delta theta/2)}",
            )
        }
    };
    out.push(RatePrediction {
        law: DecayLaw::LargeDataMass,
        norm: Norm::L2,
        formula: large_formula.into(),
        envelope: large_env,
        not_applicable: large_gate,
        parameters: vec![
            ("delta".into(), delta),
            ("theta".into(), theta),
            ("delta_star".into(), report.delta_star.unwrap_or(f64::NAN)),
        ],
    });

    if matches!(derived.pair().model().kind, SigmaKind::Zero) {
        let ds = 1.0 - 0.5 * nf * (p - 1.0);
        let branch = free_decay_branch(n, p);
        let gate = if !sd {
            Some("strong dissipation condition fails".to_string())
        } else if branch.is_none() {
            Some(format!(
                "p = {p} outside (p**(n), 1 + 2/n) = ({}, {})",
                report.thresholds.p_star_star,
                1.0 + 2.0 / nf
            ))
        } else {
            None
        };
        let (envelope, formula) = match branch {
            Some(FreeDecayBranch::Lower) => (
                Envelope::PowerOfT {
                    exponent: lower_branch_exponent(ds, 1.0, theta),
                },
                "C t^(delta_* - theta/2)",
            ),
            _ => (
                Envelope::PowerOfT {
                    exponent: upper_branch_exponent(n, p, ds),
                },
                "C t^(-2 delta_*/((p-1)(2+n)))",
            ),
        };
        out.push(RatePrediction {
            law: DecayLaw::FreeMassDecay,
            norm: Norm::L2,
            formula: formula.into(),
            envelope,
            not_applicable: gate,
            parameters: vec![("delta_star".into(), ds), ("theta".into(), theta)],
        });
    }
    out
}

impl CriticalityReport {
    /// Fill the λ- and s-dependent fields.
    pub fn complete(mut self, s: f64, nl: &Nonlinearity, derived: &OscillatorDerived) -> Self {
        self.strong_dissipation = Some(strong_dissipation(nl));
        self.s1 = Some((s - 0.5 * self.n as f64).min(1.0));
        self.predicted = predicted_rates(&self, s, nl, derived);
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn table(&self) -> String {
        let mut s = String::new();
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_else(|| "-".into());
        let _ = writeln!(s, "{:<22} {}", "n", self.n);
        let _ = writeln!(s, "{:<22} {}", "p", self.p);
        let _ = writeln!(s, "{:<22} {:?}", "class", self.class);
        let _ = writeln!(s, "{:<22} {:.6}", "alpha", self.alpha);
        let _ = writeln!(s, "{:<22} {:.6e}", "c_plus", self.c_plus);
        let _ = writeln!(s, "{:<22} {}", "delta_star", opt(self.delta_star));
        let _ = writeln!(s, "{:<22} {}", "delta_upper", opt(self.delta_upper));
        let _ = writeln!(s, "{:<22} {}", "p_critical", opt(self.p_critical));
        let _ = writeln!(s, "{:<22} {:.6}", "delta", self.delta);
        let _ = writeln!(
            s,
            "{:<22} {}",
            "strong_dissipation",
            self.strong_dissipation.map(|b| b.to_string()).unwrap_or_else(|| "-".into())
        );
        let _ = writeln!(s, "{:<22} (0, {:.6})", "theta_range", self.theta_range.1);
        let _ = writeln!(s, "{:<22} {:.6}", "theta", self.theta);
        let _ = writeln!(s, "{:<22} {:.6}  {:.6}  {:.6}", "p(n) p*(n) p**(n)",
            self.thresholds.p_n, self.thresholds.p_star, self.thresholds.p_star_star);
        for r in &self.predicted {
            let status = match &r.not_applicable {
                None => "applicable".to_string(),
                Some(why) => format!("n/a: {why}"),
            };
            let _ = writeln!(s, "  {:<20?} {:<4?} {}  [{}]", r.law, r.norm, r.formula, status);
        }
        s
    }
}
