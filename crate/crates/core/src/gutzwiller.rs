//! Single periodic-orbit contribution to the trace of the Green function.
//!
//! An unstable orbit is described by polynomial models of its action `S(E)`,
//! instability exponent `w(E)` and period `T(E)`, plus the focal-point count
//! `λ`. Its contribution
//!
//! ```text
//! g(E) = −(iT/2ħ) Σ_{n≥1} exp{in[S/ħ − λπ/2]} / sinh(n·w/2)
//! ```
//!
//! is evaluated after expanding `1/sinh(x) = 2e^{−x} Σ_k e^{−2kx}` and summing
//! the geometric series over `n`:
//!
//! ```text
//! g(E) = −(iT/ħ) Σ_{k≥0} z_k / (1 − z_k),   z_k = exp{i(S/ħ − λπ/2) − (k + ½)w}
//! ```
//!
//! Poles sit where some `z_k = 1`, i.e. `S(E) = ħλπ/2 − iħw(E)(k + ½) + 2πħs`.

use std::f64::consts::PI;

use dashu_float::round::mode::HalfEven;
use dashu_float::FBig;
use num_complex::Complex64;
use thiserror::Error;

use crate::poly::Polynomial;

/// Stop the `k`-sum once a term is this small relative to the partial sum.
pub const SERIES_RELATIVE_CUTOFF: f64 = 1e-16;
/// Hard cap on the number of `k` terms.
pub const SERIES_MAX_TERMS: usize = 10_000;
/// `|1 − z_k|` below this counts as sitting on a pole.
pub const POLE_PROXIMITY: f64 = 1e-12;
/// Newton stops when `|residual|` is at most this ...
pub const NEWTON_RESIDUAL_TOL: f64 = 1e-12;
/// ... and the last step is at most this times `max(1, |E|)`.
pub const NEWTON_STEP_TOL: f64 = 1e-13;
pub const NEWTON_MAX_ITER: usize = 50;
/// Tolerance of the `dS/dE = T` consistency check.
pub const PERIOD_CONSISTENCY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GutzwillerError {
    #[error("hbar must be positive and finite, got {0}")]
    InvalidHbar(f64),
    #[error("orbit name must not be empty")]
    EmptyName,
    #[error("field `{0}` contains a non-finite coefficient")]
    NonFiniteCoefficient(&'static str),
    #[error("field `T` is required when the action is not linear in E")]
    MissingPeriod,
    #[error("dS/dE = {derivative} but T = {period} at E = {energy}")]
    InconsistentPeriod {
        energy: f64,
        derivative: Complex64,
        period: Complex64,
    },
    #[error("instability exponent has Re w = {value} ≤ 0 at E = {energy}")]
    NonPositiveInstability { energy: Complex64, value: f64 },
    #[error("E = {energy} is within {distance:e} of the pole with k = {k}")]
    PoleProximity { energy: Complex64, k: usize, distance: f64 },
    #[error("k-sum does not converge at E = {energy} (Re w = {re_w})")]
    NonConvergent { energy: Complex64, re_w: f64 },
    #[error("expansion argument must be positive, got {0}")]
    Domain(f64),
    #[error("Newton iteration for pole (k = {k}, s = {s}) did not converge in {iterations} steps (last iterate {last})")]
    NewtonDiverged {
        k: u32,
        s: u32,
        iterations: usize,
        last: Complex64,
    },
    #[error("dS/dE vanishes near E = {0}, pole condition cannot be solved")]
    DegenerateAction(Complex64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SemiclassicalContext {
    hbar: f64,
}

impl Default for SemiclassicalContext {
    fn default() -> Self {
        Self { hbar: 1.0 }
    }
}

impl SemiclassicalContext {
    pub fn new(hbar: f64) -> Result<Self, GutzwillerError> {
        if !hbar.is_finite() || hbar <= 0.0 {
            return Err(GutzwillerError::InvalidHbar(hbar));
        }
        Ok(Self { hbar })
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }
}

/// Polynomial model of one unstable periodic orbit.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitModel {
    name: String,
    action: Polynomial,
    instability: Polynomial,
    period: Polynomial,
    focal_points: u32,
}

/// Energies at which the classical identity `dS/dE = T` and `Re w > 0` are checked.
pub fn consistency_energies() -> impl Iterator<Item = f64> {
    (0..10).map(|j| -1.0 + 2.0 * j as f64 / 9.0)
}

impl OrbitModel {
    /// Validates and builds an orbit. A missing period is inferred as `dS/dE`
    /// when the action is at most linear.
    pub fn new(
        name: impl Into<String>,
        action: Polynomial,
        instability: Polynomial,
        period: Option<Polynomial>,
        focal_points: u32,
    ) -> Result<Self, GutzwillerError> {
        let name = name.into();
        if name.is_empty() {
            return Err(GutzwillerError::EmptyName);
        }
        for (field, p) in [("S", &action), ("w", &instability)] {
            if !p.is_finite() {
                return Err(GutzwillerError::NonFiniteCoefficient(field));
            }
        }
        let period = match period {
            Some(p) if !p.is_finite() => return Err(GutzwillerError::NonFiniteCoefficient("T")),
            Some(p) => p,
            None if action.degree().is_none_or(|d| d <= 1) => action.derivative(),
            None => return Err(GutzwillerError::MissingPeriod),
        };

        if action.degree().is_some_and(|d| d >= 1) {
            let ds = action.derivative();
            for e in consistency_energies() {
                let z = Complex64::new(e, 0.0);
                let (derivative, t) = (ds.eval(z), period.eval(z));
                if (derivative - t).norm() > PERIOD_CONSISTENCY_TOL * t.norm().max(1.0) {
                    return Err(GutzwillerError::InconsistentPeriod {
                        energy: e,
                        derivative,
                        period: t,
                    });
                }
            }
        }
        for e in consistency_energies() {
            let z = Complex64::new(e, 0.0);
            let value = instability.eval(z).re;
            if !(value > 0.0) {
                return Err(GutzwillerError::NonPositiveInstability { energy: z, value });
            }
        }

        Ok(Self {
            name,
            action,
            instability,
            period,
            focal_points,
        })
    }

    /// Linear action `S = T0·E` with constant period `T0` and constant
    /// instability `w0`. Its pole lattice is known in closed form.
    pub fn linear(name: impl Into<String>, period: f64, w0: f64, focal_points: u32) -> Result<Self, GutzwillerError> {
        Self::new(
            name,
            Polynomial::new(vec![0.0, period]),
            Polynomial::new(vec![w0]),
            Some(Polynomial::new(vec![period])),
            focal_points,
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn action(&self) -> &Polynomial {
        &self.action
    }

    pub fn instability(&self) -> &Polynomial {
        &self.instability
    }

    pub fn period(&self) -> &Polynomial {
        &self.period
    }

    pub fn focal_points(&self) -> u32 {
        self.focal_points
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PoleIndex {
    pub k: u32,
    pub s: u32,
}

impl PoleIndex {
    pub fn new(k: u32, s: u32) -> Self {
        Self { k, s }
    }

    fn k_half(self) -> f64 {
        self.k as f64 + 0.5
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitValues {
    pub action: Complex64,
    pub instability: Complex64,
    pub period: Complex64,
}

pub fn eval_orbit(orbit: &OrbitModel, energy: Complex64) -> OrbitValues {
    OrbitValues {
        action: orbit.action.eval(energy),
        instability: orbit.instability.eval(energy),
        period: orbit.period.eval(energy),
    }
}

/// Resummed single-orbit response function.
pub fn response_function(
    ctx: &SemiclassicalContext,
    orbit: &OrbitModel,
    energy: Complex64,
) -> Result<Complex64, GutzwillerError> {
    let v = eval_orbit(orbit, energy);
    if !(v.instability.re > 0.0) {
        return Err(GutzwillerError::NonConvergent {
            energy,
            re_w: v.instability.re,
        });
    }
    let i = Complex64::i();
    let phase = i * (v.action / ctx.hbar - orbit.focal_points as f64 * PI / 2.0);
    let mut sum = Complex64::new(0.0, 0.0);
    for k in 0..SERIES_MAX_TERMS {
        let z = (phase - (k as f64 + 0.5) * v.instability).exp();
        let distance = (1.0 - z).norm();
        if distance < POLE_PROXIMITY {
            return Err(GutzwillerError::PoleProximity { energy, k, distance });
        }
        let term = z / (1.0 - z);
        sum += term;
        if term.norm() <= SERIES_RELATIVE_CUTOFF * sum.norm() {
            return Ok(-i * v.period / ctx.hbar * sum);
        }
    }
    Err(GutzwillerError::NonConvergent {
        energy,
        re_w: v.instability.re,
    })
}

type Big = FBig<HalfEven, 2>;

/// Upper limit on working precision; tails below `2^-4000` underflow f64 anyway.
const MAX_PRECISION_BITS: usize = 4096;

/// `|1/sinh(x) − 2e^{−x} Σ_{k=0}^{K} e^{−2kx}|`, evaluated in multiprecision so
/// that the truncation error is resolved far below f64 rounding.
pub fn sinh_expansion_error(x: f64, terms: u32) -> Result<f64, GutzwillerError> {
    if !x.is_finite() || x <= 0.0 {
        return Err(GutzwillerError::Domain(x));
    }
    // The tail is ≈ e^{−2(K+1)x} relative to 1/sinh(x); carry enough bits to see it.
    let tail_bits = 2.0 * (terms as f64 + 1.0) * x / std::f64::consts::LN_2;
    let precision = (96.0 + tail_bits.ceil()).min(MAX_PRECISION_BITS as f64) as usize;

    let arg = Big::try_from(x)
        .expect("finite f64 converts exactly")
        .with_precision(precision)
        .value();
    let decay = (-arg.clone()).exp();
    let sinh = (arg.exp() - &decay) / Big::from(2u8);
    let inverse = Big::ONE / sinh;

    let ratio = &decay * &decay;
    let negligible = Big::ONE / Big::from(2u8).powi((precision + 8).into());
    let mut term = Big::ONE.with_precision(precision).value();
    let mut sum = term.clone();
    for _ in 0..terms {
        term = &term * &ratio;
        if term < negligible {
            break;
        }
        sum += &term;
    }
    let partial = Big::from(2u8) * decay * sum;
    let err = (inverse - partial).to_f64().value().abs();
    Ok(err)
}

fn pole_rhs(ctx: &SemiclassicalContext, orbit: &OrbitModel, w: Complex64, idx: PoleIndex) -> Complex64 {
    let hbar = ctx.hbar;
    let i = Complex64::i();
    hbar * orbit.focal_points as f64 * PI / 2.0 - i * hbar * w * idx.k_half() + 2.0 * PI * idx.s as f64 * hbar
}

/// `S(E) − [ħλπ/2 − iħw(E)(k + ½) + 2πħs]`.
pub fn pole_residual(ctx: &SemiclassicalContext, orbit: &OrbitModel, energy: Complex64, idx: PoleIndex) -> Complex64 {
    let v = eval_orbit(orbit, energy);
    v.action - pole_rhs(ctx, orbit, v.instability, idx)
}

/// Solution of the pole condition with `S` and `w` truncated to degree one.
pub fn linearized_pole(
    ctx: &SemiclassicalContext,
    orbit: &OrbitModel,
    idx: PoleIndex,
) -> Result<Complex64, GutzwillerError> {
    let (s0, s1) = orbit.action.linear_part();
    let (w0, w1) = orbit.instability.linear_part();
    let hbar = ctx.hbar;
    let i = Complex64::i();
    let denom = s1 + i * hbar * w1 * idx.k_half();
    if denom.norm() < 1e-12 {
        return Err(GutzwillerError::DegenerateAction(Complex64::new(0.0, 0.0)));
    }
    let numer = hbar * orbit.focal_points as f64 * PI / 2.0 + 2.0 * PI * idx.s as f64 * hbar
        - i * hbar * w0 * idx.k_half()
        - s0;
    Ok(numer / denom)
}

/// Complex Newton iteration on [`pole_residual`].
pub fn find_pole(
    ctx: &SemiclassicalContext,
    orbit: &OrbitModel,
    idx: PoleIndex,
    guess: Option<Complex64>,
) -> Result<Complex64, GutzwillerError> {
    let mut e = match guess {
        Some(g) => g,
        None => linearized_pole(ctx, orbit, idx)?,
    };
    let ds = orbit.action.derivative();
    let dw = orbit.instability.derivative();
    let i = Complex64::i();
    for _ in 0..NEWTON_MAX_ITER {
        let slope_s = ds.eval(e);
        if slope_s.norm() < 1e-12 {
            return Err(GutzwillerError::DegenerateAction(e));
        }
        let slope = slope_s + i * ctx.hbar * dw.eval(e) * idx.k_half();
        let residual = pole_residual(ctx, orbit, e, idx);
        let step = residual / slope;
        if !(step.re.is_finite() && step.im.is_finite()) {
            break;
        }
        e -= step;
        if residual.norm() <= NEWTON_RESIDUAL_TOL && step.norm() <= NEWTON_STEP_TOL * e.norm().max(1.0) {
            return Ok(e);
        }
    }
    Err(GutzwillerError::NewtonDiverged {
        k: idx.k,
        s: idx.s,
        iterations: NEWTON_MAX_ITER,
        last: e,
    })
}
