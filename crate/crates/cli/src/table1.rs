//! Lifetime versus classical crossing time over a list of couplings.

use anyhow::Result;
use rayon::prelude::*;
use semiclassical::cubic::{wkb_lifetime, CubicModel};
use semiclassical::trajectory::{find_crossing, Branch, IntegratorConfig, TrajectoryError};
use serde::Deserialize;

use crate::policy::{EnergyPolicy, Start, X0Policy};
use crate::render::Table;

/// Couplings of the reference lifetime/crossing-time comparison, kept fixed so
/// that golden outputs stay comparable. `--g` overrides them.
pub const DEFAULT_COUPLINGS: [f64; 4] = [0.12522, 0.14311, 0.16099, 0.17888];

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
pub struct ReferenceRow {
    pub g: f64,
    pub tau: f64,
    pub t_c: f64,
}

impl ReferenceRow {
    pub fn ratio(&self) -> f64 {
        self.t_c / self.tau
    }
}

#[derive(Deserialize)]
struct ReferenceFile {
    rows: Vec<ReferenceRow>,
}

/// Reference values shipped in `data/table1_reference.json`.
pub fn reference_rows() -> Vec<ReferenceRow> {
    let file: ReferenceFile =
        serde_json::from_str(include_str!("../data/table1_reference.json")).expect("bundled reference data is valid");
    file.rows
}

pub fn reference_for(g: f64) -> Option<ReferenceRow> {
    reference_rows().into_iter().find(|r| r.g == g)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Table1Row {
    pub g: f64,
    pub tau: f64,
    /// `None` when `Re x` never reached `Re x3` before `t_max`.
    pub t_c: Option<f64>,
    pub max_energy_drift: Option<f64>,
    pub reference: Option<ReferenceRow>,
}

impl Table1Row {
    pub fn ratio(&self) -> Option<f64> {
        self.t_c.map(|t| t / self.tau)
    }
}

fn compute_row(g: f64, energy: &EnergyPolicy, x0: &X0Policy, branch: Branch, cfg: &IntegratorConfig) -> Result<Table1Row> {
    let model = CubicModel::new(g)?;
    let tau = wkb_lifetime(g)?;
    let start = Start::resolve(&model, energy, x0, branch)?;
    let (t_c, max_energy_drift) = match find_crossing(&model, start.energy, start.x0, start.p0, cfg) {
        Ok(c) => (Some(c.t_c), Some(c.max_energy_drift)),
        Err(TrajectoryError::NoCrossing { .. }) => (None, None),
        Err(e) => return Err(e.into()),
    };
    Ok(Table1Row {
        g,
        tau,
        t_c,
        max_energy_drift,
        reference: reference_for(g),
    })
}

/// Rows are computed in parallel and returned in input order.
pub fn compute_rows(
    couplings: &[f64],
    energy: &EnergyPolicy,
    x0: &X0Policy,
    branch: Branch,
    cfg: &IntegratorConfig,
) -> Result<Vec<Table1Row>> {
    couplings
        .par_iter()
        .map(|&g| compute_row(g, energy, x0, branch, cfg))
        .collect()
}

pub fn to_table(rows: &[Table1Row]) -> Table {
    let mut table = Table::new(vec![
        "g",
        "tau",
        "t_c",
        "ratio",
        "ref_tau",
        "ref_t_c",
        "ref_ratio",
        "max_energy_drift",
    ]);
    for r in rows {
        table.push(vec![
            r.g.into(),
            r.tau.into(),
            r.t_c.into(),
            r.ratio().into(),
            r.reference.map(|x| x.tau).into(),
            r.reference.map(|x| x.t_c).into(),
            r.reference.map(|x| x.ratio()).into(),
            r.max_energy_drift.into(),
        ]);
    }
    table
}
