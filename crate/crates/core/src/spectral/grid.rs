use ndarray::{ArrayD, IxDyn};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::SpectralError;

/// Uniform periodic grid on [−L, L)ⁿ, dilated by `scale`.
///
/// Physical coordinates are the base coordinates `−L + j·2L/N` divided by
/// `scale`, so a lens-frame field keeps its sample count while its spacing
/// shrinks by |y₁|.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub n: usize,
    pub points: usize,
    #[serde(alias = "L")]
    pub half_width: f64,
    #[serde(default = "one")]
    pub scale: f64,
}

fn one() -> f64 {
    1.0
}

pub const MAX_POINTS_3D: usize = 128;

impl Grid {
    pub fn new(n: usize, points: usize, half_width: f64) -> Result<Self, SpectralError> {
        let g = Self {
            n,
            points,
            half_width,
            scale: 1.0,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<(), SpectralError> {
        let bad = |m: String| Err(SpectralError::InvalidGrid(m));
        if !(1..=3).contains(&self.n) {
            return bad(format!("dimension must be 1, 2 or 3, got {}", self.n));
        }
        if self.points < 16 || !self.points.is_power_of_two() {
            return bad(format!("points per axis must be a power of two >= 16, got {}", self.points));
        }
        if self.n == 3 && self.points > MAX_POINTS_3D {
            return bad(format!("3-D grids are limited to {MAX_POINTS_3D} points per axis"));
        }
        if !(self.half_width > 0.0) || !self.half_width.is_finite() {
            return bad(format!("half width must be positive, got {}", self.half_width));
        }
        if !(self.scale > 0.0) || !self.scale.is_finite() {
            return bad(format!("scale must be positive, got {}", self.scale));
        }
        Ok(())
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    /// Physical half width L/scale.
    pub fn physical_half_width(&self) -> f64 {
        self.half_width / self.scale
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.physical_half_width() / self.points as f64
    }

    pub fn dxi(&self) -> f64 {
        std::f64::consts::PI / self.physical_half_width()
    }

    pub fn cell_volume(&self) -> f64 {
        self.dx().powi(self.n as i32)
    }

    pub fn frequency_cell_volume(&self) -> f64 {
        self.dxi().powi(self.n as i32)
    }

    pub fn len(&self) -> usize {
        self.points.pow(self.n as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn shape(&self) -> Vec<usize> {
        vec![self.points; self.n]
    }

    /// Coordinates along one axis.
    pub fn coords(&self) -> Vec<f64> {
        let l = self.physical_half_width();
        let h = self.dx();
        (0..self.points).map(|j| -l + j as f64 * h).collect()
    }

    /// Frequencies along one axis in FFT order.
    pub fn xi_fft(&self) -> Vec<f64> {
        let n = self.points as i64;
        let d = self.dxi();
        (0..n)
            .map(|k| if k < n / 2 { k as f64 * d } else { (k - n) as f64 * d })
            .collect()
    }

    /// Frequencies along one axis in increasing order, ξ_k = (k − N/2)Δξ.
    pub fn xi_centered(&self) -> Vec<f64> {
        let d = self.dxi();
        let half = (self.points / 2) as f64;
        (0..self.points).map(|k| (k as f64 - half) * d).collect()
    }

    /// |x|² at every grid point.
    pub fn radius_sq(&self) -> ArrayD<f64> {
        let c = self.coords();
        ArrayD::from_shape_fn(IxDyn(&self.shape()), |idx| {
            (0..self.n).map(|a| c[idx[a]] * c[idx[a]]).sum()
        })
    }

    /// x_axis at every grid point.
    pub fn axis_coord(&self, axis: usize) -> ArrayD<f64> {
        let c = self.coords();
        ArrayD::from_shape_fn(IxDyn(&self.shape()), |idx| c[idx[axis]])
    }

    /// |ξ|² at every point, FFT order along each axis.
    pub fn xi_sq_fft(&self) -> ArrayD<f64> {
        let k = self.xi_fft();
        ArrayD::from_shape_fn(IxDyn(&self.shape()), |idx| {
            (0..self.n).map(|a| k[idx[a]] * k[idx[a]]).sum()
        })
    }

    /// Same sample layout and physical spacing.
    pub fn compatible(&self, other: &Grid) -> bool {
        self.n == other.n
            && self.points == other.points
            && (self.physical_half_width() - other.physical_half_width()).abs()
                <= 1e-12 * self.physical_half_width()
    }
}

/// Coordinate frame a field is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "frame", rename_all = "snake_case")]
pub enum Frame {
    Original,
    /// Lens frame, holding y₁ and y₁' at the state's time.
    Lens { y1: f64, dy1: f64 },
}

impl Frame {
    pub fn tag(&self) -> u64 {
        match self {
            Frame::Original => 0,
            Frame::Lens { .. } => 1,
        }
    }

    pub fn is_lens(&self) -> bool {
        matches!(self, Frame::Lens { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaveState {
    pub grid: Grid,
    pub values: ArrayD<Complex64>,
    pub frame: Frame,
    pub t: f64,
}

impl WaveState {
    pub fn zeros(grid: Grid, t: f64) -> Self {
        Self {
            values: ArrayD::zeros(IxDyn(&grid.shape())),
            grid,
            frame: Frame::Original,
            t,
        }
    }

    /// Sample `f` at the grid points.
    pub fn from_fn(grid: Grid, t: f64, f: impl Fn(&[f64]) -> Complex64) -> Self {
        let c = grid.coords();
        let mut x = vec![0.0; grid.n];
        let values = ArrayD::from_shape_fn(IxDyn(&grid.shape()), |idx| {
            for a in 0..grid.n {
                x[a] = c[idx[a]];
            }
            f(&x)
        });
        Self {
            grid,
            values,
            frame: Frame::Original,
            t,
        }
    }

    pub fn from_values(grid: Grid, values: ArrayD<Complex64>, frame: Frame, t: f64) -> Result<Self, SpectralError> {
        if values.shape() != grid.shape().as_slice() {
            return Err(SpectralError::ShapeMismatch {
                expected: grid.shape(),
                found: values.shape().to_vec(),
            });
        }
        Ok(Self { grid, values, frame, t })
    }

    pub fn l2_norm(&self) -> f64 {
        super::l2_norm(self)
    }

    pub fn linf_norm(&self) -> f64 {
        super::linf_norm(self)
    }

    /// Largest modulus on the outermost layer of grid points, relative to the peak.
    pub fn boundary_ratio(&self) -> f64 {
        let peak = self.linf_norm();
        if peak == 0.0 {
            return 0.0;
        }
        let last = self.grid.points - 1;
        let mut edge = 0.0f64;
        for (idx, v) in self.values.indexed_iter() {
            if (0..self.grid.n).any(|a| idx[a] == 0 || idx[a] == last) {
                edge = edge.max(v.norm());
            }
        }
        edge / peak
    }
}

/// Field on the frequency side, stored with increasing ξ along each axis.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileState {
    /// Spatial grid the profile was taken from; frequencies follow from it.
    pub grid: Grid,
    pub values: ArrayD<Complex64>,
    pub frame: Frame,
    pub t: f64,
}

impl ProfileState {
    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.frequency_cell_volume()).sqrt()
    }

    pub fn linf_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    pub fn xi(&self) -> Vec<f64> {
        self.grid.xi_centered()
    }
}
