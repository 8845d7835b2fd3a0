//! The cubic tunneling potential `V(x) = x²/2 − g·x³` in units with ħ = m = ω = 1.
//!
//! Everything here is closed-form: potential and force in complex arithmetic,
//! the three turning points of `V(x) = E`, the WKB lifetime of the
//! quasi-bound ground state and the complex energy built from it.

use std::cmp::Ordering;
use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

/// Minimum separation below which two turning points are treated as coincident.
pub const COINCIDENCE_THRESHOLD: f64 = 1e-8;

/// Relative discriminant `|Δ| / (|p/3|³ + |q/2|²)` at or below which the
/// depressed cubic `y³ + p·y + q` is treated as having a repeated root.
pub const DISCRIMINANT_THRESHOLD: f64 = 1e-8;

/// Newton polish stops once `|V(x) − E|` is below this multiple of `max(1, |E|)`.
pub const ROOT_RESIDUAL_TARGET: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CubicError {
    #[error("coupling constant must be finite and non-negative, got {0}")]
    InvalidCoupling(f64),
    #[error("lifetime is defined only for g > 0, got {0}")]
    Domain(f64),
    #[error("lifetime overflows f64 at g = {0}")]
    LifetimeOverflow(f64),
    #[error("energy must be finite, got {0}")]
    NonFiniteEnergy(Complex64),
    #[error("g = 0 leaves no cubic term, turning points are undefined")]
    DegenerateCubic,
    #[error("turning points coincide (separation measure {separation:e}), energy is at or near the barrier top")]
    CoincidentRoots { separation: f64 },
}

/// Coupling constant of the cubic potential.
///
/// `g = 0` is admitted and gives the pure harmonic oscillator, which the
/// trajectory tests use as a closed-form reference. Turning points reject it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicModel {
    g: f64,
}

impl CubicModel {
    pub fn new(g: f64) -> Result<Self, CubicError> {
        if !g.is_finite() || g < 0.0 {
            return Err(CubicError::InvalidCoupling(g));
        }
        Ok(Self { g })
    }

    /// The `g = 0` limit: force `−x`, no barrier.
    pub fn harmonic() -> Self {
        Self { g: 0.0 }
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn potential_value(&self, x: Complex64) -> Complex64 {
        x * x * (0.5 - self.g * x)
    }

    /// `−dV/dx = −x + 3g·x²`.
    pub fn force(&self, x: Complex64) -> Complex64 {
        x * (3.0 * self.g * x - 1.0)
    }

    pub fn hamiltonian(&self, x: Complex64, p: Complex64) -> Complex64 {
        0.5 * p * p + self.potential_value(x)
    }

    /// Position and height of the barrier top, `(1/(3g), 1/(54g²))`.
    pub fn barrier_top(&self) -> Option<(f64, f64)> {
        (self.g > 0.0).then(|| (1.0 / (3.0 * self.g), 1.0 / (54.0 * self.g * self.g)))
    }

    /// The three roots of `V(x) = E`, sorted by real part (ties by imaginary part).
    ///
    /// Cardano's formula on the depressed cubic gives starting values which
    /// are then polished by Newton iteration on `V(x) − E`.
    pub fn turning_points(&self, energy: Complex64) -> Result<TurningPoints, CubicError> {
        if self.g == 0.0 {
            return Err(CubicError::DegenerateCubic);
        }
        if !(energy.re.is_finite() && energy.im.is_finite()) {
            return Err(CubicError::NonFiniteEnergy(energy));
        }
        let g = self.g;
        // Monic form x³ + a·x² + c = 0 with a = −1/(2g), c = E/g.
        let a = -0.5 / g;
        let c = energy / g;
        let shift = -a / 3.0;
        // x = y + shift gives y³ + p·y + q = 0.
        let p = -a * a / 3.0;
        let q = 2.0 * a * a * a / 27.0 + c;
        let disc = (q * 0.5) * (q * 0.5) + Complex64::new(p * p * p / 27.0, 0.0);
        let disc_scale = (p / 3.0).abs().powi(3) + (q * 0.5).norm_sqr();
        if disc.norm() <= DISCRIMINANT_THRESHOLD * disc_scale {
            return Err(CubicError::CoincidentRoots {
                separation: (disc.norm() / disc_scale).sqrt(),
            });
        }
        let sqrt_disc = disc.sqrt();
        let plus = -q * 0.5 + sqrt_disc;
        let minus = -q * 0.5 - sqrt_disc;
        let w = if plus.norm() >= minus.norm() { plus } else { minus };

        let mut roots = if w.norm() == 0.0 {
            [Complex64::new(shift, 0.0); 3]
        } else {
            let u = complex_cbrt(w);
            let v = -p / (3.0 * u);
            let omega = Complex64::from_polar(1.0, 2.0 * PI / 3.0);
            let omega2 = omega.conj();
            [
                u + v + shift,
                omega * u + omega2 * v + shift,
                omega2 * u + omega * v + shift,
            ]
        };

        let target = ROOT_RESIDUAL_TARGET * energy.norm().max(1.0);
        for root in roots.iter_mut() {
            *root = self.polish(*root, energy, target);
        }

        let separation = min_separation(&roots);
        if separation < COINCIDENCE_THRESHOLD {
            return Err(CubicError::CoincidentRoots { separation });
        }

        roots.sort_by(|l, r| match l.re.total_cmp(&r.re) {
            Ordering::Equal => l.im.total_cmp(&r.im),
            ord => ord,
        });
        Ok(TurningPoints {
            x1: roots[0],
            x2: roots[1],
            x3: roots[2],
        })
    }

    fn polish(&self, mut x: Complex64, energy: Complex64, target: f64) -> Complex64 {
        let mut best = x;
        let mut best_residual = (self.potential_value(x) - energy).norm();
        for _ in 0..16 {
            if best_residual <= target * 1e-3 {
                break;
            }
            let slope = -self.force(x);
            if slope.norm() == 0.0 {
                break;
            }
            let step = (self.potential_value(x) - energy) / slope;
            x -= step;
            let residual = (self.potential_value(x) - energy).norm();
            if residual < best_residual {
                best = x;
                best_residual = residual;
            }
            if step.norm() <= 4.0 * f64::EPSILON * x.norm() {
                break;
            }
        }
        best
    }
}

fn complex_cbrt(z: Complex64) -> Complex64 {
    let (r, theta) = z.to_polar();
    Complex64::from_polar(r.cbrt(), theta / 3.0)
}

fn min_separation(roots: &[Complex64; 3]) -> f64 {
    let d01 = (roots[0] - roots[1]).norm();
    let d02 = (roots[0] - roots[2]).norm();
    let d12 = (roots[1] - roots[2]).norm();
    d01.min(d02).min(d12)
}

/// Roots of `V(x) = E` labelled left to right.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TurningPoints {
    pub x1: Complex64,
    pub x2: Complex64,
    pub x3: Complex64,
}

impl TurningPoints {
    pub fn as_array(&self) -> [Complex64; 3] {
        [self.x1, self.x2, self.x3]
    }
}

/// Quasi-stationary ground state: WKB lifetime and the complex energy that
/// reproduces the population decay `P(t) = e^{−t/τ}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuasiBoundState {
    pub g: f64,
    pub tau: f64,
    pub energy: Complex64,
}

/// WKB lifetime `τ = ½·g·√π·exp(2/(15g²))`.
pub fn wkb_lifetime(g: f64) -> Result<f64, CubicError> {
    if !g.is_finite() || g <= 0.0 {
        return Err(CubicError::Domain(g));
    }
    let tau = 0.5 * g * PI.sqrt() * (2.0 / (15.0 * g * g)).exp();
    if !tau.is_finite() {
        return Err(CubicError::LifetimeOverflow(g));
    }
    Ok(tau)
}

/// `E = 1/2 − i/(2τ)`: harmonic ground level with the WKB decay width.
pub fn quasi_bound_energy(g: f64) -> Result<QuasiBoundState, CubicError> {
    quasi_bound_with_real_part(g, 0.5)
}

/// Second-order Rayleigh–Schrödinger ground level of the cubic oscillator.
///
/// For `H = p²/2 + x²/2 − g·x³` the first-order term vanishes by parity and
/// the second-order shift is `−11g²/8`.
pub fn perturbative_ground_level(g: f64) -> f64 {
    0.5 - 11.0 * g * g / 8.0
}

/// Same width as [`quasi_bound_energy`] but with the real part lowered to
/// [`perturbative_ground_level`].
pub fn perturbative_quasi_bound_energy(g: f64) -> Result<QuasiBoundState, CubicError> {
    quasi_bound_with_real_part(g, perturbative_ground_level(g))
}

fn quasi_bound_with_real_part(g: f64, re: f64) -> Result<QuasiBoundState, CubicError> {
    let tau = wkb_lifetime(g)?;
    Ok(QuasiBoundState {
        g,
        tau,
        energy: Complex64::new(re, -1.0 / (2.0 * tau)),
    })
}
