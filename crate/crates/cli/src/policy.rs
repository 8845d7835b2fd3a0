//! Energy and initial-position policies shared by the trajectory commands.

use std::fmt;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use num_complex::Complex64;
use semiclassical::cubic::{perturbative_quasi_bound_energy, quasi_bound_energy, CubicModel};
use semiclassical::trajectory::{initial_momentum, Branch};
use serde::Serialize;

/// Parses `re=A,im=B` (either part may be omitted and defaults to zero).
pub fn parse_complex(s: &str) -> Result<Complex64> {
    let mut z = Complex64::new(0.0, 0.0);
    let mut seen = false;
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| anyhow!("expected `re=A,im=B`, got `{s}`"))?;
        let v: f64 = value
            .trim()
            .parse()
            .with_context(|| format!("`{value}` is not a number"))?;
        if !v.is_finite() {
            bail!("`{value}` is not finite");
        }
        match key.trim() {
            "re" => z.re = v,
            "im" => z.im = v,
            other => bail!("unknown component `{other}` (expected re or im)"),
        }
        seen = true;
    }
    if !seen {
        bail!("expected `re=A,im=B`, got `{s}`");
    }
    Ok(z)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum EnergyPolicy {
    /// `E = 1/2 − i/(2τ)` with the WKB lifetime.
    #[default]
    QuasiBound,
    /// Same width, real part shifted to the second-order ground level `1/2 − 11g²/8`.
    Shifted,
    Explicit(Complex64),
}

impl FromStr for EnergyPolicy {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quasi-bound" => Ok(Self::QuasiBound),
            "shifted" => Ok(Self::Shifted),
            _ => parse_complex(s)
                .map(Self::Explicit)
                .context("energy must be `quasi-bound`, `shifted` or `re=A,im=B`"),
        }
    }
}

impl fmt::Display for EnergyPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::QuasiBound => f.write_str("quasi-bound"),
            Self::Shifted => f.write_str("shifted"),
            Self::Explicit(z) => write!(f, "re={},im={}", z.re, z.im),
        }
    }
}

impl EnergyPolicy {
    pub fn resolve(&self, g: f64) -> Result<Complex64> {
        Ok(match self {
            Self::QuasiBound => quasi_bound_energy(g)?.energy,
            Self::Shifted => perturbative_quasi_bound_energy(g)?.energy,
            Self::Explicit(z) => *z,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum X0Policy {
    #[default]
    X1,
    X2,
    X3,
    Explicit(Complex64),
}

impl FromStr for X0Policy {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "x1" => Ok(Self::X1),
            "x2" => Ok(Self::X2),
            "x3" => Ok(Self::X3),
            _ => parse_complex(s)
                .map(Self::Explicit)
                .context("x0 must be `x1`, `x2`, `x3` or `re=A,im=B`"),
        }
    }
}

impl fmt::Display for X0Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::X1 => f.write_str("x1"),
            Self::X2 => f.write_str("x2"),
            Self::X3 => f.write_str("x3"),
            Self::Explicit(z) => write!(f, "re={},im={}", z.re, z.im),
        }
    }
}

/// Turning points by ascending real part. For `g = 0` only `±√(2E)` exist.
pub fn turning_points(model: &CubicModel, energy: Complex64) -> Result<Vec<Complex64>> {
    if model.g() == 0.0 {
        let r = (2.0 * energy).sqrt();
        return Ok(vec![-r, r]);
    }
    Ok(model.turning_points(energy)?.as_array().to_vec())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InitialState {
    pub energy: [f64; 2],
    pub x0: [f64; 2],
    pub p0: [f64; 2],
}

/// Fully resolved starting point of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Start {
    pub energy: Complex64,
    pub x0: Complex64,
    pub p0: Complex64,
}

impl Start {
    pub fn resolve(model: &CubicModel, energy: &EnergyPolicy, x0: &X0Policy, branch: Branch) -> Result<Self> {
        let energy = energy.resolve(model.g())?;
        let (x0, p0) = match x0 {
            X0Policy::Explicit(z) => (*z, initial_momentum(model, energy, *z, branch)),
            policy => {
                let idx = match policy {
                    X0Policy::X1 => 0,
                    X0Policy::X2 => 1,
                    _ => 2,
                };
                let points = turning_points(model, energy)?;
                let x = *points
                    .get(idx)
                    .ok_or_else(|| anyhow!("turning point {policy} does not exist for g = 0"))?;
                (x, Complex64::new(0.0, 0.0))
            }
        };
        Ok(Self { energy, x0, p0 })
    }

    pub fn summary(&self) -> InitialState {
        let pair = |z: Complex64| [z.re, z.im];
        InitialState {
            energy: pair(self.energy),
            x0: pair(self.x0),
            p0: pair(self.p0),
        }
    }
}
