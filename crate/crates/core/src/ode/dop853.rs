use thiserror::Error;

use super::tableau::{A, A_EXTRA, B, C, C_EXTRA, D, E3, E5, STAGES};
use super::OdeSystem;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 10.0;
/// `−1/(q+1)` with `q = 7`, the order the step-size controller assumes.
const ERROR_EXPONENT: f64 = -1.0 / 8.0;
/// Absolute floor on the step size.
pub const MIN_STEP: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepperConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum StepError {
    #[error("step size underflow at t = {t}: h = {h:e} demanded")]
    StepSizeUnderflow { t: f64, h: f64 },
}

/// Dormand–Prince 8(5,3) stepper with 7th-order dense output.
///
/// The stepper owns the current state and advances it one accepted step at
/// a time; after each step [`Dop853::dense`] gives the continuous extension
/// over that step.
pub struct Dop853<'a, S, const N: usize> {
    system: &'a S,
    cfg: StepperConfig,
    t: f64,
    y: [f64; N],
    f: [f64; N],
    h_abs: f64,
    t_old: f64,
    y_old: [f64; N],
    h_prev: f64,
    k: [[f64; N]; 16],
    accepted: usize,
    rejected: usize,
}

impl<'a, S: OdeSystem<N>, const N: usize> Dop853<'a, S, N> {
    pub fn new(system: &'a S, t0: f64, y0: [f64; N], cfg: StepperConfig) -> Self {
        let f0 = system.rhs(t0, &y0);
        let h_abs = initial_step(system, t0, &y0, &f0, &cfg);
        Self {
            system,
            cfg,
            t: t0,
            y: y0,
            f: f0,
            h_abs,
            t_old: t0,
            y_old: y0,
            h_prev: 0.0,
            k: [[0.0; N]; 16],
            accepted: 0,
            rejected: 0,
        }
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn y(&self) -> &[f64; N] {
        &self.y
    }

    pub fn accepted_steps(&self) -> usize {
        self.accepted
    }

    pub fn rejected_steps(&self) -> usize {
        self.rejected
    }

    /// Advances by one accepted step, never past `t_bound` (which must lie ahead).
    pub fn step(&mut self, t_bound: f64) -> Result<(), StepError> {
        let t = self.t;
        let min_step = MIN_STEP.max(10.0 * ulp(t));
        let mut h_abs = self.h_abs.min(self.cfg.max_step).max(min_step);
        let mut rejected = false;

        loop {
            if h_abs < min_step {
                return Err(StepError::StepSizeUnderflow { t, h: h_abs });
            }
            let mut t_new = t + h_abs;
            if t_new > t_bound {
                t_new = t_bound;
            }
            let h = t_new - t;

            let y_new = self.stages(h);
            let f_new = self.system.rhs(t_new, &y_new);
            self.k[STAGES] = f_new;

            let err = self.error_norm(h, &y_new);
            if err < 1.0 {
                let mut factor = if err == 0.0 {
                    MAX_FACTOR
                } else {
                    MAX_FACTOR.min(SAFETY * err.powf(ERROR_EXPONENT))
                };
                if rejected {
                    factor = factor.min(1.0);
                }
                self.h_abs = h_abs * factor;
                self.h_prev = h;
                self.t_old = t;
                self.y_old = self.y;
                self.t = t_new;
                self.y = y_new;
                self.f = f_new;
                self.accepted += 1;
                return Ok(());
            }
            // NaN errors fall through here too: f64::max picks MIN_FACTOR.
            h_abs *= MIN_FACTOR.max(SAFETY * err.powf(ERROR_EXPONENT));
            rejected = true;
            self.rejected += 1;
        }
    }

    fn stages(&mut self, h: f64) -> [f64; N] {
        self.k[0] = self.f;
        for s in 1..STAGES {
            let mut y = self.y;
            for (i, yi) in y.iter_mut().enumerate() {
                let mut dy = 0.0;
                for j in 0..s {
                    dy += A[s][j] * self.k[j][i];
                }
                *yi += h * dy;
            }
            self.k[s] = self.system.rhs(self.t + C[s] * h, &y);
        }
        let mut y_new = self.y;
        for (i, yi) in y_new.iter_mut().enumerate() {
            let mut acc = 0.0;
            for j in 0..STAGES {
                acc += B[j] * self.k[j][i];
            }
            *yi += h * acc;
        }
        y_new
    }

    fn error_norm(&self, h: f64, y_new: &[f64; N]) -> f64 {
        let mut e5 = 0.0;
        let mut e3 = 0.0;
        for i in 0..N {
            let scale = self.cfg.abs_tol + self.cfg.rel_tol * self.y[i].abs().max(y_new[i].abs());
            let mut a5 = 0.0;
            let mut a3 = 0.0;
            for j in 0..=STAGES {
                a5 += E5[j] * self.k[j][i];
                a3 += E3[j] * self.k[j][i];
            }
            e5 += (a5 / scale).powi(2);
            e3 += (a3 / scale).powi(2);
        }
        if e5 == 0.0 && e3 == 0.0 {
            return 0.0;
        }
        let denom = e5 + 0.01 * e3;
        h.abs() * e5 / (denom * N as f64).sqrt()
    }

    /// Continuous extension over the last accepted step.
    ///
    /// Costs three extra right-hand-side evaluations.
    pub fn dense(&self) -> DenseSegment<N> {
        let h = self.h_prev;
        let mut k = self.k;
        for (e, row) in A_EXTRA.iter().enumerate() {
            let s = STAGES + 1 + e;
            let mut y = self.y_old;
            for (i, yi) in y.iter_mut().enumerate() {
                let mut dy = 0.0;
                for j in 0..s {
                    dy += row[j] * k[j][i];
                }
                *yi += h * dy;
            }
            k[s] = self.system.rhs(self.t_old + C_EXTRA[e] * h, &y);
        }

        let f_old = k[0];
        let mut coeffs = [[0.0; N]; 7];
        for i in 0..N {
            let dy = self.y[i] - self.y_old[i];
            coeffs[0][i] = dy;
            coeffs[1][i] = h * f_old[i] - dy;
            coeffs[2][i] = 2.0 * dy - h * (self.f[i] + f_old[i]);
            for (r, drow) in D.iter().enumerate() {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate() {
                    acc += drow[j] * kj[i];
                }
                coeffs[3 + r][i] = h * acc;
            }
        }
        DenseSegment {
            t_old: self.t_old,
            h,
            y_old: self.y_old,
            coeffs,
        }
    }
}

/// Interpolating polynomial over one accepted step `[t_old, t_old + h]`.
#[derive(Debug, Clone, Copy)]
pub struct DenseSegment<const N: usize> {
    t_old: f64,
    h: f64,
    y_old: [f64; N],
    coeffs: [[f64; N]; 7],
}

impl<const N: usize> DenseSegment<N> {
    pub fn t_start(&self) -> f64 {
        self.t_old
    }

    pub fn t_end(&self) -> f64 {
        self.t_old + self.h
    }

    pub fn eval(&self, t: f64) -> [f64; N] {
        let x = (t - self.t_old) / self.h;
        let mut y = [0.0; N];
        for (r, c) in self.coeffs.iter().rev().enumerate() {
            let w = if r % 2 == 0 { x } else { 1.0 - x };
            for i in 0..N {
                y[i] = (y[i] + c[i]) * w;
            }
        }
        for i in 0..N {
            y[i] += self.y_old[i];
        }
        y
    }
}

fn ulp(t: f64) -> f64 {
    let a = t.abs();
    if a == 0.0 {
        f64::MIN_POSITIVE
    } else {
        f64::from_bits(a.to_bits() + 1) - a
    }
}

fn rms<const N: usize>(v: &[f64; N], scale: &[f64; N]) -> f64 {
    (v.iter().zip(scale).map(|(a, s)| (a / s).powi(2)).sum::<f64>() / N as f64).sqrt()
}

fn initial_step<S: OdeSystem<N>, const N: usize>(
    system: &S,
    t0: f64,
    y0: &[f64; N],
    f0: &[f64; N],
    cfg: &StepperConfig,
) -> f64 {
    let scale = y0.map(|v| cfg.abs_tol + v.abs() * cfg.rel_tol);
    let d0 = rms(y0, &scale);
    let d1 = rms(f0, &scale);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let mut y1 = *y0;
    for i in 0..N {
        y1[i] += h0 * f0[i];
    }
    let f1 = system.rhs(t0 + h0, &y1);
    let mut df = [0.0; N];
    for i in 0..N {
        df[i] = f1[i] - f0[i];
    }
    let d2 = rms(&df, &scale) / h0;
    let h1 = if d1 <= 1e-15 && d2 <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(1.0 / 8.0)
    };
    (100.0 * h0).min(h1).min(cfg.max_step)
}
