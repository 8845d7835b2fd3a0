//! Adaptive explicit Runge–Kutta integration for small fixed-size real systems.

mod dop853;
mod tableau;

pub use dop853::{DenseSegment, Dop853, StepError, StepperConfig};

/// Right-hand side `dy/dt = f(t, y)` of an `N`-component real system.
pub trait OdeSystem<const N: usize> {
    fn rhs(&self, t: f64, y: &[f64; N]) -> [f64; N];
}

impl<F, const N: usize> OdeSystem<N> for F
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    fn rhs(&self, t: f64, y: &[f64; N]) -> [f64; N] {
        self(t, y)
    }
}
