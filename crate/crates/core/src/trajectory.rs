//! Complex classical trajectories in the cubic potential.
//!
//! Time is real, position and momentum are complex. The equations of motion
//! `dx/dt = p`, `dp/dt = −x + 3g·x²` are integrated as four real components
//! `[Re x, Im x, Re p, Im p]` with the DOP853 stepper. The conserved value
//! `H(x, p) = p²/2 + V(x)` is watched at every step end and every emitted
//! sample; drifting away from the supplied energy is treated as a failure.

use num_complex::Complex64;
use thiserror::Error;

use crate::cubic::{CubicError, CubicModel};
use crate::ode::{Dop853, OdeSystem, StepError, StepperConfig};

/// Largest accepted `|H(x0, p0) − E| / max(1, |E|)` for initial data.
pub const INITIAL_CONSISTENCY: f64 = 1e-10;

/// Sub-intervals per step probed for a threshold crossing, so that an
/// excursion that enters and leaves within one step is not missed.
const CROSSING_PROBES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub t_max: f64,
    /// Spacing of exported samples.
    pub sample_interval: f64,
    /// Integration fails once `|H − E| > drift_limit · max(1, |E|)`.
    pub drift_limit: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-12,
            abs_tol: 1e-14,
            max_step: 0.1,
            t_max: 2e5,
            sample_interval: 0.05,
            drift_limit: 1e-6,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<(), TrajectoryError> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        let checks = [
            (positive(self.rel_tol), "rel_tol must be positive"),
            (positive(self.abs_tol), "abs_tol must be positive"),
            (positive(self.max_step), "max_step must be positive"),
            (positive(self.sample_interval), "sample_interval must be positive"),
            (positive(self.drift_limit), "drift_limit must be positive"),
            (self.t_max.is_finite() && self.t_max >= 0.0, "t_max must be finite and non-negative"),
        ];
        match checks.iter().find(|(ok, _)| !ok) {
            Some((_, msg)) => Err(TrajectoryError::InvalidConfig(msg)),
            None => Ok(()),
        }
    }

    fn stepper(&self) -> StepperConfig {
        StepperConfig {
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            max_step: self.max_step,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrajectoryError {
    #[error("invalid integrator configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("initial state is off the energy shell: |H(x0, p0) − E| = {residual:e}")]
    InconsistentInitialState { residual: f64 },
    #[error("step size underflow at t = {t}: h = {h:e} demanded")]
    StepSizeUnderflow { t: f64, h: f64 },
    #[error("energy drift {drift:e} exceeds {limit:e} at t = {t}")]
    EnergyDriftExceeded { t: f64, drift: f64, limit: f64 },
    #[error("Re x never reached Re x3 = {threshold} before t_max = {t_max}")]
    NoCrossing { t_max: f64, threshold: f64 },
    #[error("negative propagation time {0}")]
    NegativeDuration(f64),
    #[error(transparent)]
    Cubic(#[from] CubicError),
}

impl From<StepError> for TrajectoryError {
    fn from(e: StepError) -> Self {
        match e {
            StepError::StepSizeUnderflow { t, h } => Self::StepSizeUnderflow { t, h },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    pub x: Complex64,
    pub p: Complex64,
    /// `|H(x, p) − E|`.
    pub energy_drift: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub g: f64,
    pub energy: Complex64,
    pub samples: Vec<TrajectorySample>,
    pub max_energy_drift: f64,
}

/// Sign choice for the square root in [`initial_momentum`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Branch {
    #[default]
    Positive,
    Negative,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Positive => 1.0,
            Branch::Negative => -1.0,
        }
    }
}

/// `p0 = ±√(2(E − V(x0)))` on the principal branch.
pub fn initial_momentum(model: &CubicModel, energy: Complex64, x0: Complex64, branch: Branch) -> Complex64 {
    (2.0 * (energy - model.potential_value(x0))).sqrt() * branch.sign()
}

struct Hamilton {
    model: CubicModel,
}

impl OdeSystem<4> for Hamilton {
    fn rhs(&self, _t: f64, y: &[f64; 4]) -> [f64; 4] {
        let f = self.model.force(Complex64::new(y[0], y[1]));
        [y[2], y[3], f.re, f.im]
    }
}

fn pack(x: Complex64, p: Complex64) -> [f64; 4] {
    [x.re, x.im, p.re, p.im]
}

fn unpack(y: &[f64; 4]) -> (Complex64, Complex64) {
    (Complex64::new(y[0], y[1]), Complex64::new(y[2], y[3]))
}

/// Energy bookkeeping shared by all drivers.
struct DriftMonitor {
    model: CubicModel,
    energy: Complex64,
    limit: f64,
    max_step_drift: f64,
}

impl DriftMonitor {
    fn new(model: CubicModel, energy: Complex64, cfg: &IntegratorConfig) -> Self {
        Self {
            model,
            energy,
            limit: cfg.drift_limit * energy.norm().max(1.0),
            max_step_drift: 0.0,
        }
    }

    fn check(&mut self, t: f64, y: &[f64; 4]) -> Result<f64, TrajectoryError> {
        let (x, p) = unpack(y);
        let drift = (self.model.hamiltonian(x, p) - self.energy).norm();
        // Written so that NaN fails too.
        if !(drift <= self.limit) {
            return Err(TrajectoryError::EnergyDriftExceeded {
                t,
                drift,
                limit: self.limit,
            });
        }
        self.max_step_drift = self.max_step_drift.max(drift);
        Ok(drift)
    }
}

fn check_initial(
    model: &CubicModel,
    energy: Complex64,
    x0: Complex64,
    p0: Complex64,
    cfg: &IntegratorConfig,
) -> Result<(), TrajectoryError> {
    cfg.validate()?;
    let residual = (model.hamiltonian(x0, p0) - energy).norm();
    if !(residual <= INITIAL_CONSISTENCY * energy.norm().max(1.0)) {
        return Err(TrajectoryError::InconsistentInitialState { residual });
    }
    Ok(())
}

/// Integrates from `t = 0` to `cfg.t_max`, handing each sample on the
/// `sample_interval` grid to `on_sample` as soon as it is available.
///
/// Returns the maximum per-sample drift. On failure, every sample emitted
/// before the failure has already been delivered.
pub fn integrate_with<F>(
    model: &CubicModel,
    energy: Complex64,
    x0: Complex64,
    p0: Complex64,
    cfg: &IntegratorConfig,
    mut on_sample: F,
) -> Result<f64, TrajectoryError>
where
    F: FnMut(&TrajectorySample),
{
    check_initial(model, energy, x0, p0, cfg)?;
    let system = Hamilton { model: *model };
    let mut monitor = DriftMonitor::new(*model, energy, cfg);

    let y0 = pack(x0, p0);
    let drift0 = monitor.check(0.0, &y0)?;
    on_sample(&TrajectorySample {
        t: 0.0,
        x: x0,
        p: p0,
        energy_drift: drift0,
    });
    let mut max_drift = drift0;

    let last_index = (cfg.t_max / cfg.sample_interval + 1e-9).floor() as u64;
    let sample_time = |k: u64| (k as f64 * cfg.sample_interval).min(cfg.t_max);
    let mut next = 1u64;

    let mut stepper = Dop853::new(&system, 0.0, y0, cfg.stepper());
    while stepper.t() < cfg.t_max {
        stepper.step(cfg.t_max)?;
        monitor.check(stepper.t(), stepper.y())?;
        if next > last_index || sample_time(next) > stepper.t() {
            continue;
        }
        let dense = stepper.dense();
        while next <= last_index && sample_time(next) <= stepper.t() {
            let t = sample_time(next);
            let y = dense.eval(t);
            let drift = monitor.check(t, &y)?;
            let (x, p) = unpack(&y);
            on_sample(&TrajectorySample {
                t,
                x,
                p,
                energy_drift: drift,
            });
            max_drift = max_drift.max(drift);
            next += 1;
        }
    }
    Ok(max_drift)
}

/// Full trajectory on the sample grid of `cfg`.
pub fn integrate(
    model: &CubicModel,
    energy: Complex64,
    x0: Complex64,
    p0: Complex64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory, TrajectoryError> {
    let mut samples = Vec::new();
    let max_energy_drift = integrate_with(model, energy, x0, p0, cfg, |s| samples.push(*s))?;
    Ok(Trajectory {
        g: model.g(),
        energy,
        samples,
        max_energy_drift,
    })
}

/// Result of a crossing search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    pub t_c: f64,
    /// `Re x3`, the level that was crossed.
    pub threshold: f64,
    /// Largest `|H − E|` over the step ends visited.
    pub max_energy_drift: f64,
    pub steps: usize,
}

/// First time at which `Re x(t) ≥ Re x3`.
///
/// Integration stops at the first crossing. Every step is probed on its
/// dense output and the sign change is refined by bisection. For `g = 0`
/// there is no right turning point and the search runs to `t_max`.
pub fn find_crossing(
    model: &CubicModel,
    energy: Complex64,
    x0: Complex64,
    p0: Complex64,
    cfg: &IntegratorConfig,
) -> Result<Crossing, TrajectoryError> {
    check_initial(model, energy, x0, p0, cfg)?;
    let threshold = if model.g() == 0.0 {
        f64::INFINITY
    } else {
        model.turning_points(energy)?.x3.re
    };
    let system = Hamilton { model: *model };
    let mut monitor = DriftMonitor::new(*model, energy, cfg);
    let y0 = pack(x0, p0);
    monitor.check(0.0, &y0)?;

    let above = |y: &[f64; 4]| y[0] >= threshold;
    if above(&y0) {
        return Ok(Crossing {
            t_c: 0.0,
            threshold,
            max_energy_drift: monitor.max_step_drift,
            steps: 0,
        });
    }

    let mut stepper = Dop853::new(&system, 0.0, y0, cfg.stepper());
    while stepper.t() < cfg.t_max {
        let t_start = stepper.t();
        stepper.step(cfg.t_max)?;
        monitor.check(stepper.t(), stepper.y())?;
        let t_end = stepper.t();
        let dense = stepper.dense();

        let mut lo = t_start;
        let mut bracket = None;
        for j in 1..=CROSSING_PROBES {
            let t = if j == CROSSING_PROBES {
                t_end
            } else {
                t_start + (t_end - t_start) * j as f64 / CROSSING_PROBES as f64
            };
            if above(&dense.eval(t)) {
                bracket = Some((lo, t));
                break;
            }
            lo = t;
        }
        let Some((mut lo, mut hi)) = bracket else {
            continue;
        };
        while hi - lo > 1e-12 * hi.max(1.0) {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if above(&dense.eval(mid)) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        return Ok(Crossing {
            t_c: hi,
            threshold,
            max_energy_drift: monitor.max_step_drift,
            steps: stepper.accepted_steps(),
        });
    }
    Err(TrajectoryError::NoCrossing {
        t_max: cfg.t_max,
        threshold,
    })
}

pub fn crossing_time(
    model: &CubicModel,
    energy: Complex64,
    x0: Complex64,
    p0: Complex64,
    cfg: &IntegratorConfig,
) -> Result<f64, TrajectoryError> {
    find_crossing(model, energy, x0, p0, cfg).map(|c| c.t_c)
}

/// State after evolving for exactly `duration`; `cfg.t_max` is ignored.
pub fn propagate(
    model: &CubicModel,
    energy: Complex64,
    x0: Complex64,
    p0: Complex64,
    duration: f64,
    cfg: &IntegratorConfig,
) -> Result<(Complex64, Complex64), TrajectoryError> {
    if !(duration >= 0.0) {
        return Err(TrajectoryError::NegativeDuration(duration));
    }
    check_initial(model, energy, x0, p0, cfg)?;
    let system = Hamilton { model: *model };
    let mut monitor = DriftMonitor::new(*model, energy, cfg);
    let mut stepper = Dop853::new(&system, 0.0, pack(x0, p0), cfg.stepper());
    while stepper.t() < duration {
        stepper.step(duration)?;
        monitor.check(stepper.t(), stepper.y())?;
    }
    Ok(unpack(stepper.y()))
}

/// Forward for `duration`, flip the momentum, forward again for `duration`,
/// flip back. Returns `|x_final − x0| + |p_final − p0|`.
pub fn reversibility_error(
    model: &CubicModel,
    energy: Complex64,
    x0: Complex64,
    p0: Complex64,
    duration: f64,
    cfg: &IntegratorConfig,
) -> Result<f64, TrajectoryError> {
    let (x_mid, p_mid) = propagate(model, energy, x0, p0, duration, cfg)?;
    let (x_back, p_back) = propagate(model, energy, x_mid, -p_mid, duration, cfg)?;
    Ok((x_back - x0).norm() + (-p_back - p0).norm())
}
