//! Small numerical kernels shared by the physics modules.

pub mod lsq;
pub mod ode;
pub mod quad;

pub use lsq::{fit_line, LineFit};
pub use ode::{integrate, DenseSolution, OdeError, Tolerance};
pub use quad::{adaptive_simpson, trapezoid};
