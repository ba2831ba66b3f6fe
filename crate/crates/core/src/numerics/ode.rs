//! Dormand–Prince 5(4) integrator with continuous (dense) output.
//!
//! The integrator keeps every accepted step together with the five
//! coefficient vectors of the Hairer–Wanner continuous extension, so the
//! solution can be evaluated anywhere on the integrated range after the fact.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdeError {
    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },
    #[error("exceeded {0} steps")]
    TooManySteps(usize),
    #[error("right-hand side is not finite at t = {t}")]
    NonFinite { t: f64 },
    #[error("requested time {t} outside integrated range [{start}, {end}]")]
    OutOfRange { t: f64, start: f64, end: f64 },
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub rtol: f64,
    pub atol: f64,
}

/// One accepted step of size `h` starting at `t`, with dense coefficients.
#[derive(Debug, Clone)]
struct DenseStep<const N: usize> {
    t: f64,
    h: f64,
    cont: [[f64; N]; 5],
}

impl<const N: usize> DenseStep<N> {
    fn eval(&self, t: f64) -> [f64; N] {
        let s = (t - self.t) / self.h;
        let s1 = 1.0 - s;
        let mut out = [0.0; N];
        for (i, o) in out.iter_mut().enumerate() {
            let r = &self.cont;
            *o = r[0][i] + s * (r[1][i] + s1 * (r[2][i] + s * (r[3][i] + s1 * r[4][i])));
        }
        out
    }
}

/// Dense solution of an `N`-dimensional first-order system.
#[derive(Debug, Clone)]
pub struct DenseSolution<const N: usize> {
    steps: Vec<DenseStep<N>>,
    end: f64,
    end_state: [f64; N],
    pub rhs_evals: usize,
}

impl<const N: usize> DenseSolution<N> {
    pub fn start(&self) -> f64 {
        self.steps.first().map(|s| s.t).unwrap_or(self.end)
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    pub fn num_steps(&self) -> usize {
        self.steps.len()
    }

    /// Accepted step start times plus the terminal time.
    pub fn mesh(&self) -> Vec<f64> {
        let mut m: Vec<f64> = self.steps.iter().map(|s| s.t).collect();
        m.push(self.end);
        m
    }

    pub fn eval(&self, t: f64) -> Result<[f64; N], OdeError> {
        let start = self.start();
        let slack = 1e-12 * (1.0 + self.end.abs());
        if t < start - slack || t > self.end + slack {
            return Err(OdeError::OutOfRange {
                t,
                start,
                end: self.end,
            });
        }
        if t >= self.end {
            return Ok(self.end_state);
        }
        let idx = match self
            .steps
            .binary_search_by(|s| s.t.partial_cmp(&t).expect("finite mesh"))
        {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) => i - 1,
        };
        Ok(self.steps[idx].eval(t))
    }

    /// Concatenate a solution that starts where `self` ends.
    pub fn append(&mut self, other: DenseSolution<N>) {
        self.steps.extend(other.steps);
        self.end = other.end;
        self.end_state = other.end_state;
        self.rhs_evals += other.rhs_evals;
    }
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, ks: &[[f64; N]], coeffs: &[f64]) -> [f64; N] {
    let mut out = *y;
    for (k, &c) in ks.iter().zip(coeffs) {
        if c != 0.0 {
            for i in 0..N {
                out[i] += h * c * k[i];
            }
        }
    }
    out
}

/// Integrate `y' = f(t, y)` from `t0` to `t1 > t0`.
pub fn integrate<const N: usize, F>(
    f: F,
    t0: f64,
    y0: [f64; N],
    t1: f64,
    tol: Tolerance,
    max_steps: usize,
) -> Result<DenseSolution<N>, OdeError>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    assert!(t1 > t0, "integration interval must be increasing");
    let mut evals = 0usize;
    let mut rhs = |t: f64, y: &[f64; N]| -> Result<[f64; N], OdeError> {
        evals += 1;
        let d = f(t, y);
        if d.iter().all(|v| v.is_finite()) {
            Ok(d)
        } else {
            Err(OdeError::NonFinite { t })
        }
    };

    let span = t1 - t0;
    let mut t = t0;
    let mut y = y0;
    let mut k1 = rhs(t, &y)?;

    // Initial step guess (Hairer's heuristic, simplified).
    let scale = |y: &[f64; N], i: usize| tol.atol + tol.rtol * y[i].abs();
    let d0 = (0..N).map(|i| (y[i] / scale(&y, i)).powi(2)).sum::<f64>().sqrt() / (N as f64).sqrt();
    let d1 = (0..N).map(|i| (k1[i] / scale(&y, i)).powi(2)).sum::<f64>().sqrt() / (N as f64).sqrt();
    let mut h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h = h.min(span);

    let mut steps = Vec::new();
    let mut fac_old: f64 = 1e-4;
    let h_min = 1e-14 * (1.0 + t0.abs().max(t1.abs()));

    while t < t1 {
        if steps.len() >= max_steps {
            return Err(OdeError::TooManySteps(max_steps));
        }
        let last = t + h >= t1 - 1e-14 * span;
        if last {
            h = t1 - t;
        }
        let mut ks = [[0.0; N]; 7];
        ks[0] = k1;
        for s in 1..7 {
            let ys = axpy(&y, h, &ks[..s], &A[s][..s]);
            ks[s] = rhs(t + C[s] * h, &ys)?;
        }
        let y_new = axpy(&y, h, &ks[..6], &A[6][..6]);
        let mut err = 0.0;
        for i in 0..N {
            let e: f64 = (0..7).map(|s| E[s] * ks[s][i]).sum::<f64>() * h;
            let sc = tol.atol + tol.rtol * y[i].abs().max(y_new[i].abs());
            err += (e / sc).powi(2);
        }
        let err = (err / N as f64).sqrt();

        if err <= 1.0 {
            let mut cont = [[0.0; N]; 5];
            for i in 0..N {
                let ydiff = y_new[i] - y[i];
                let bspl = h * ks[0][i] - ydiff;
                cont[0][i] = y[i];
                cont[1][i] = ydiff;
                cont[2][i] = bspl;
                cont[3][i] = ydiff - h * ks[6][i] - bspl;
                cont[4][i] = h * (0..7).map(|s| D[s] * ks[s][i]).sum::<f64>();
            }
            steps.push(DenseStep { t, h, cont });
            t = if last { t1 } else { t + h };
            y = y_new;
            k1 = ks[6];
            // PI step-size controller.
            let fac = (err.max(1e-10)).powf(0.17) / fac_old.powf(0.04);
            fac_old = err.max(1e-4);
            let fac = (fac / 0.9).clamp(0.2, 10.0);
            h /= fac;
        } else {
            let fac = (err.powf(0.2) / 0.9).clamp(0.2, 10.0);
            h /= fac;
            if h.abs() < h_min {
                return Err(OdeError::StepUnderflow { t });
            }
        }
    }

    Ok(DenseSolution {
        steps,
        end: t1,
        end_state: y,
        rhs_evals: evals,
    })
}
